"""Saturated legacy stations: collision/attempt fixed point and slot mix."""

from __future__ import annotations

from dataclasses import dataclass

from .params import EdcaParams


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class FixedPoint:
    p: float  # probability that an attempt collides
    tau: float  # probability that a given STA transmits in a slot


@dataclass(frozen=True)
class SlotStats:
    P_e: float
    P_s: float
    P_c: float
    fixed_point: FixedPoint


def tau_of_p(p: float, legacy: EdcaParams) -> float:
    """Mean attempts per frame over mean backoff slots per frame.

    Attempt ``r`` (0-based) happens with probability ``p**r`` and is preceded
    by an average of ``(CW_r - 1) / 2`` backoff slots. Small windows can push
    the ratio above one, so the result is clamped to 1.
    """
    attempts = 0.0
    slots = 0.0
    pr = 1.0
    for cw in legacy.contention_windows():
        attempts += pr
        slots += 0.5 * (cw - 1) * pr
        pr *= p
    if slots <= 0.0:
        return 1.0
    return min(attempts / slots, 1.0)


def collision_of_tau(tau: float, N: int) -> float:
    return 1.0 - (1.0 - tau) ** (N - 1)


def solve_fixed_point(N: int, legacy: EdcaParams, tol: float = 1e-12,
                      max_iter: int = 200) -> FixedPoint:
    """Solve p = 1 - (1 - tau)^(N-1), tau = tau_of_p(p) by bisection on tau.

    The residual ``tau - tau_of_p(p(tau))`` is increasing in tau, negative
    near zero and non-negative at one, so it has a single root in (0, 1].
    """
    if N < 1:
        raise ValueError("need at least one legacy STA")

    def residual(tau):
        return tau - tau_of_p(collision_of_tau(tau, N), legacy)

    hi = 1.0
    if residual(hi) <= 0.0:
        # clamp case: tau_of_p saturates at one
        return FixedPoint(p=collision_of_tau(1.0, N), tau=1.0)
    lo = 0.0
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if residual(mid) < 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo < tol * 1e-2:
            break
    else:
        raise SolverError(f"fixed point not bracketed to {tol} after {max_iter} "
                          f"iterations (interval [{lo}, {hi}])")
    tau = hi
    p = collision_of_tau(tau, N)
    err = abs(tau - tau_of_p(p, legacy))
    if err >= tol:
        raise SolverError(f"fixed point residual {err:.3e} exceeds {tol}")
    return FixedPoint(p=p, tau=tau)


def slot_stats(fp: FixedPoint, N: int) -> SlotStats:
    tau = fp.tau
    P_e = (1.0 - tau) ** N
    P_s = N * tau * (1.0 - tau) ** (N - 1) if N >= 1 else 0.0
    P_c = max(0.0, 1.0 - P_e - P_s)
    return SlotStats(P_e=P_e, P_s=P_s, P_c=P_c, fixed_point=fp)


def solve(N: int, legacy: EdcaParams) -> SlotStats:
    return slot_stats(solve_fixed_point(N, legacy), N)
