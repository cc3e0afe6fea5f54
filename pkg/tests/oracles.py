"""Independent reference computations used to check the package.

Each routine takes a different route from the production code: fixed-point
iteration instead of bisection, closed-form Gaussian integrals instead of
quadrature, sampling instead of integration, exhaustive scans instead of
bisection.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import ndtr


def damped_fixed_point(N, cw, damping=0.5, tol=1e-15, max_iter=100_000):
    """Iterate p <- (1 - d) p + d (1 - (1 - tau(p))^(N-1)) from p = 0."""
    weights = [(c - 1) / 2.0 for c in cw]

    def tau_of(p):
        num = sum(p ** r for r in range(len(cw)))
        den = sum(w * p ** r for r, w in enumerate(weights))
        return min(1.0, num / den)

    p = 0.0
    for _ in range(max_iter):
        tau = tau_of(p)
        p_new = (1 - damping) * p + damping * (1.0 - (1.0 - tau) ** (N - 1))
        if abs(p_new - p) < tol:
            p = p_new
            break
        p = p_new
    return p, tau_of(p)


def slot_probabilities(tau, N):
    Pe = (1 - tau) ** N
    Ps = N * tau * (1 - tau) ** (N - 1)
    return Pe, Ps, 1 - Pe - Ps


def shares(Pe, Ps, Pc, T_e, T_s, T_c, AIFS, AIFS_RTA, delta):
    den = Pe * T_e + Ps * (T_s + AIFS) + Pc * (T_c + AIFS)
    return ((Pe * T_e + (Ps + Pc) * delta * T_e) / den,
            Ps * (T_s + AIFS_RTA) / den, Pc * (T_c + AIFS_RTA) / den)


def sample_access_delay(rng, n, P_te, P_ts, P_tc, T_s, T_c, AIFS_RTA, T_e, cw_rta,
                        shifted=False):
    """Draw access delays: empty channel, or wait + uniform backoff."""
    kind = rng.choice(3, size=n, p=[P_te, P_ts, P_tc])
    busy = np.where(kind == 1, T_s, T_c)
    start = AIFS_RTA if shifted else 0.0
    wait = start + rng.random(n) * (busy + AIFS_RTA - start)
    backoff = rng.integers(0, cw_rta, size=n) * T_e
    return np.where(kind == 0, 0.0, wait + backoff)


def piecewise_linear(xs, ys):
    """Breakpoint representation of a continuous piecewise-linear function."""
    return np.asarray(xs, float), np.asarray(ys, float)


def rts_cdf_knots(P_te, P_ts, P_tc, T_s, T_c, AIFS_RTA, T_e, cw_rta):
    """Knots of the access-delay CDF (residual wait form) on [0, upper]."""
    ramps = []
    for share, T in ((P_ts, T_s), (P_tc, T_c)):
        for i in range(cw_rta):
            ramps.append((share / cw_rta, i * T_e, T + AIFS_RTA + i * T_e))
    xs = sorted({0.0, *[a for _, a, _ in ramps], *[b for _, _, b in ramps]})
    ys = []
    for x in xs:
        v = P_te + sum(w * min(max((x - a) / (b - a), 0.0), 1.0) for w, a, b in ramps)
        ys.append(v)
    return np.array(xs), np.array(ys)


def gaussian_linear_integral(a, b, alpha, beta, mu, sigma):
    """Integral over [a, b] of (alpha + beta t) N(t; mu, sigma)."""
    za, zb = (a - mu) / sigma, (b - mu) / sigma
    dP = ndtr(zb) - ndtr(za)
    phi = lambda z: math.exp(-0.5 * z * z) / math.sqrt(2 * math.pi)
    mean_part = mu * dP - sigma * (phi(zb) - phi(za))
    return alpha * dP + beta * mean_part


def pca_cdf_closed_form(x, knots, T_SR, T_b, sigma):
    """F_PCA(x) with F_RTS piecewise linear, integrated piece by piece."""
    if x < T_SR:
        return 0.0
    xs, ys = knots
    y = x - T_SR

    def F(t):
        return float(np.interp(t, xs, ys, left=0.0, right=1.0)) if t >= 0 else 0.0

    early = F(y) * ndtr(-T_b / sigma)
    # pieces of t -> F(t + y) for t > 0
    cuts = sorted({0.0, *[k - y for k in xs if k - y > 0]})
    total = 0.0
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        f_lo, f_hi = F(lo + y), F(hi + y)
        beta = (f_hi - f_lo) / (hi - lo)
        alpha = f_lo - beta * lo
        total += gaussian_linear_integral(lo, hi, alpha, beta, T_b, sigma)
    last = cuts[-1]
    total += F(last + y) * ndtr(-(last - T_b) / sigma)  # flat tail
    return early + total


def pca_occupancy_mc(rng, n, access_sampler, T_b, sigma):
    """Monte Carlo of E[max(0, t_a - D)] and P(D < t_a) over t_a > 0."""
    D = access_sampler(rng, n)
    t_a = T_b + sigma * rng.standard_normal(n)
    ok = t_a > 0
    hold = np.where(ok, np.maximum(0.0, t_a - D), 0.0)
    reserve = ok & (D < t_a)
    return hold.mean(), reserve.mean(), hold.std() / math.sqrt(n)


def crossover_closed_form(T_RTA_s, E_s, T_RTA_p, E_p):
    """Period where (1 - a/T) E_p = (1 - b/T) E_s."""
    if E_p == E_s:
        return None
    T = (T_RTA_p * E_p - T_RTA_s * E_s) / (E_p - E_s)
    return T if T > max(T_RTA_s, T_RTA_p) else None


def scan_last_true(pred, lo, hi, step):
    """Largest grid point in [lo, hi] (step from lo) where pred holds; None if none."""
    best = None
    x = lo
    while x <= hi:
        if pred(x):
            best = x
        x += step
    return best


def scan_first_true(pred, lo, hi, step):
    x = lo
    while x <= hi:
        if pred(x):
            return x
        x += step
    return None
