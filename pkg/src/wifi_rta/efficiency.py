"""Share of channel time carrying legacy payload, with and without the RTA STA."""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.special import ndtr

from .legacy_model import SlotStats
from .params import Timings
from .rta_delay import (QUAD_TOL, TRUNC_SIGMAS, RtsDelay, gaussian_weighted,
                        slot_denominator)


class InfeasibleLoad(ValueError):
    """The RTA STA alone would occupy the whole period."""


@dataclass(frozen=True)
class EfficiencyReport:
    E_wo_rta: float
    T_RTA: float  # us of channel time per RTA period
    E: float


def efficiency_without_rta(stats: SlotStats, tm: Timings) -> float:
    if tm.T_payload <= 0:
        raise ValueError("TXOP carries no payload")
    return stats.P_s * tm.T_payload / slot_denominator(stats, tm)


def t_rta_simple(tm: Timings) -> float:
    return tm.T_SR + tm.AIFS_RTA


def pca_terms(tm: Timings, T_b: float, sigma: float, rts: RtsDelay,
              tol: float = QUAD_TOL) -> tuple[float, float]:
    """Mean reservation hold time and probability that a reservation is made.

    The hold is ``E[max(0, t_a - D_RTS)]`` and the reservation probability
    ``P(D_RTS < t_a)``, both over arrivals ``t_a > 0``.
    """
    u = rts.upper
    if sigma == 0.0:
        if T_b <= 0.0:
            return 0.0, 0.0
        return float(rts.integral(T_b)), float(rts.cdf(T_b))

    # for x >= u the inner integral is H(u) + (x - u) and F_RTS(x) = 1
    z = (max(u, 0.0) - T_b) / sigma
    upper_mass = float(ndtr(-z))
    phi = math.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)
    H_u = float(rts.integral(u))
    hold_tail = (H_u + T_b - u) * upper_mass + sigma * phi
    prob_tail = upper_mass

    lo = max(0.0, T_b - TRUNC_SIGMAS * sigma)
    hi = min(u, T_b + TRUNC_SIGMAS * sigma)
    hold_mid = prob_mid = 0.0
    if hi > lo:
        kinks = rts.breakpoints()
        hold_mid = gaussian_weighted(rts.integral, lo, hi, T_b, sigma, kinks, tol)
        prob_mid = gaussian_weighted(rts.cdf, lo, hi, T_b, sigma, kinks, tol)
    return hold_mid + hold_tail, prob_mid + prob_tail


def t_rta_pca(tm: Timings, T_b: float, sigma: float, rts: RtsDelay) -> float:
    hold, reserved = pca_terms(tm, T_b, sigma, rts)
    return tm.T_SR + tm.AIFS_RTA + hold + tm.pca_overhead * reserved


def efficiency(E_wo: float, T_RTA: float, T_period: float) -> float:
    if T_RTA > T_period:
        raise InfeasibleLoad(f"RTA occupies {T_RTA:.6g} us per {T_period:.6g} us period")
    return (1.0 - T_RTA / T_period) * E_wo


def report(stats: SlotStats, tm: Timings, T_RTA: float, T_period: float) -> EfficiencyReport:
    E_wo = efficiency_without_rta(stats, tm)
    return EfficiencyReport(E_wo_rta=E_wo, T_RTA=T_RTA, E=efficiency(E_wo, T_RTA, T_period))
