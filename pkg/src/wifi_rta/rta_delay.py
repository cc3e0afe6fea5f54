"""Delay distribution of an RTA frame under both access approaches.

Distributions are callables over microseconds. ``RtsDelay`` is the channel
access delay seen by the RTA STA (a point mass at zero plus uniform ramps),
``SimpleDelay`` adds the data exchange airtime and ``PcaDelay`` mixes the
access delay with a Gaussian data arrival after the RTS is generated.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import ndtr

from .legacy_model import SlotStats
from .params import Timings
from .quadrature import integrate

# Gaussian arrival integrals are cut at T_b +- TRUNC_SIGMAS * sigma.
TRUNC_SIGMAS = 8.0
QUAD_TOL = 1e-10


class WaitForm(str, enum.Enum):
    """Shape of the wait for a busy slot to end.

    ``residual``: the RTA frame lands uniformly in the busy slot as the RTA
    STA sees it (busy part plus its AIFS), and waits out the remainder, so
    the wait is uniform on ``[0, T + AIFS_RTA]``.
    ``shifted``: the frame lands uniformly in the busy part only and then
    waits a full AIFS_RTA, i.e. uniform on ``[AIFS_RTA, T + AIFS_RTA]``.
    """

    RESIDUAL = "residual"
    SHIFTED = "shifted"


DEFAULT_FORM = WaitForm.RESIDUAL


class DelayKind(str, enum.Enum):
    RTS = "RtsDelay"
    SIMPLE = "SimpleDelay"
    PCA = "PcaDelay"


class QuantileError(RuntimeError):
    pass


@dataclass(frozen=True)
class RtaSlotShares:
    P_te: float
    P_ts: float
    P_tc: float


def slot_denominator(stats: SlotStats, tm: Timings) -> float:
    """Mean legacy slot length, us."""
    return (stats.P_e * tm.T_e + stats.P_s * (tm.T_s + tm.AIFS)
            + stats.P_c * (tm.T_c + tm.AIFS))


def rta_slot_shares(stats: SlotStats, tm: Timings) -> RtaSlotShares:
    """Fractions of time the RTA STA sees the channel empty, in a success, in a collision.

    The RTA STA's shorter AIFS turns ``Delta_AC`` slots at the end of each
    busy legacy slot into empty time.
    """
    den = slot_denominator(stats, tm)
    busy = stats.P_s + stats.P_c
    return RtaSlotShares(
        P_te=(stats.P_e * tm.T_e + busy * tm.Delta_AC * tm.T_e) / den,
        P_ts=stats.P_s * (tm.T_s + tm.AIFS_RTA) / den,
        P_tc=stats.P_c * (tm.T_c + tm.AIFS_RTA) / den,
    )


def _ramp(form: WaitForm, T_busy: float, aifs_rta: float) -> tuple[float, float]:
    if form is WaitForm.SHIFTED:
        return aifs_rta, T_busy + aifs_rta
    return 0.0, T_busy + aifs_rta


def cdf_wait(t, T_busy: float, aifs_rta: float, form: WaitForm = DEFAULT_FORM):
    """CDF of the wait for a busy slot of length ``T_busy`` to end (incl. AIFS_RTA)."""
    s0, s1 = _ramp(WaitForm(form), T_busy, aifs_rta)
    t = np.asarray(t, dtype=float)
    out = np.clip((t - s0) / (s1 - s0), 0.0, 1.0)
    return out if out.ndim else float(out)


def _ramp_integral(u: np.ndarray, s0: float, s1: float) -> np.ndarray:
    """Integral from -inf to u of clip((v - s0) / (s1 - s0), 0, 1)."""
    w = s1 - s0
    mid = np.clip(u, s0, s1) - s0
    return mid * mid / (2.0 * w) + np.maximum(u - s1, 0.0)


def gaussian_weighted(g: Callable[[np.ndarray], np.ndarray], lo: float, hi: float,
                      T_b: float, sigma: float, kinks=(), tol: float = QUAD_TOL) -> float:
    """Integral of ``arrival_pdf(t) * g(t)`` over ``[lo, hi]``.

    Integrated in the standard variable z = (t - T_b) / sigma, so the
    Gaussian weight stays exact at the nodes however small sigma is.
    """
    def h(z):
        # clip so the mapped end nodes land exactly on lo and hi (F_RTS jumps at 0)
        t = np.clip(T_b + sigma * z, lo, hi)
        return np.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi) * g(t)

    value, _ = integrate(h, (lo - T_b) / sigma, (hi - T_b) / sigma,
                         [(k - T_b) / sigma for k in kinks], tol=tol)
    return value


def arrival_pdf(t, T_b: float, sigma: float):
    """Gaussian density of the data arrival time, 1/us."""
    if sigma <= 0:
        raise ValueError("sigma must be positive; zero is a point mass at T_b")
    z = (np.asarray(t, dtype=float) - T_b) / sigma
    out = np.exp(-0.5 * z * z) / (sigma * math.sqrt(2.0 * math.pi))
    return out if out.ndim else float(out)


class DelayDistribution:
    """A CDF over microseconds with known support ``[lower, upper]``.

    ``cdf(lower)`` may already be positive (point mass at the minimum).
    """

    kind: DelayKind
    lower: float
    upper: float

    def cdf(self, x):
        raise NotImplementedError

    def __call__(self, x):
        return self.cdf(x)

    def cdf_many(self, xs) -> np.ndarray:
        return np.asarray(self.cdf(np.asarray(xs, dtype=float)), dtype=float)


class RtsDelay(DelayDistribution):
    """Channel access delay of the RTA STA (time from generation to transmission start)."""

    kind = DelayKind.RTS

    def __init__(self, shares: RtaSlotShares, tm: Timings,
                 form: WaitForm = DEFAULT_FORM):
        self.shares = shares
        self.tm = tm
        self.form = WaitForm(form)
        self.cw = tm.CW_RTA
        # (weight, ramp start, ramp end) for every busy kind x backoff draw
        ramps = []
        for share, T in ((shares.P_ts, tm.T_s), (shares.P_tc, tm.T_c)):
            if share <= 0.0:
                continue
            s0, s1 = _ramp(self.form, T, tm.AIFS_RTA)
            for i in range(self.cw):
                ramps.append((share / self.cw, s0 + i * tm.T_e, s1 + i * tm.T_e))
        self._ramps = ramps
        self.lower = 0.0
        self.upper = max((r[2] for r in ramps), default=0.0)

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        acc = np.full(t.shape, self.shares.P_te)
        for w, s0, s1 in self._ramps:
            acc = acc + w * np.clip((t - s0) / (s1 - s0), 0.0, 1.0)
        out = np.where(t < 0.0, 0.0, np.minimum(acc, 1.0))
        return out if out.ndim else float(out)

    def integral(self, x):
        """Integral of the CDF from 0 to ``x`` (piecewise quadratic, exact)."""
        x = np.asarray(x, dtype=float)
        xp = np.maximum(x, 0.0)
        acc = self.shares.P_te * xp
        for w, s0, s1 in self._ramps:
            acc = acc + w * _ramp_integral(xp, s0, s1)
        return acc if acc.ndim else float(acc)

    def breakpoints(self) -> list[float]:
        pts = {0.0}
        for _, s0, s1 in self._ramps:
            pts.add(s0)
            pts.add(s1)
        return sorted(pts)


class SimpleDelay(DelayDistribution):
    """Data exchange airtime added to the access delay."""

    kind = DelayKind.SIMPLE

    def __init__(self, rts: RtsDelay):
        self.rts = rts
        self.T_SR = rts.tm.T_SR
        self.lower = self.T_SR
        self.upper = self.T_SR + rts.upper

    def cdf(self, x):
        return self.rts.cdf(np.asarray(x, dtype=float) - self.T_SR)


class PcaDelay(DelayDistribution):
    """Delay when an RTS is generated ``T_b`` ahead of the expected arrival.

    An arrival before the RTS generation sees an ordinary access delay; an
    arrival after the RTS went out is served at once; an arrival in between
    waits for the rest of the access delay.
    """

    kind = DelayKind.PCA

    def __init__(self, rts: RtsDelay, T_b: float, sigma: float,
                 tol: float = QUAD_TOL):
        if T_b < 0 or sigma < 0:
            raise ValueError("T_b and sigma must be non-negative")
        self.rts = rts
        self.T_b = float(T_b)
        self.sigma = float(sigma)
        self.tol = tol
        self.T_SR = rts.tm.T_SR
        self.lower = self.T_SR
        self.upper = self.T_SR + rts.upper
        self._kinks = rts.breakpoints()

    def _cdf_scalar(self, x: float) -> float:
        if x < self.T_SR:
            return 0.0
        y = x - self.T_SR
        rts, T_b, sigma = self.rts, self.T_b, self.sigma
        if sigma == 0.0:
            return float(rts.cdf(T_b + y))
        early = float(rts.cdf(y)) * float(ndtr(-T_b / sigma))
        # beyond c the access delay has certainly ended: F_RTS == 1
        c = max(0.0, rts.upper - y)
        late = float(ndtr((T_b - c) / sigma))
        lo = max(0.0, T_b - TRUNC_SIGMAS * sigma)
        hi = min(c, T_b + TRUNC_SIGMAS * sigma)
        mid = 0.0
        if hi > lo:
            mid = gaussian_weighted(lambda t: rts.cdf(t + y), lo, hi, T_b, sigma,
                                    [k - y for k in self._kinks], self.tol)
        return min(1.0, early + mid + late)

    def cdf(self, x):
        xa = np.asarray(x, dtype=float)
        if xa.ndim == 0:
            return self._cdf_scalar(float(xa))
        return np.array([self._cdf_scalar(float(v)) for v in xa.ravel()]).reshape(xa.shape)


# Functional surface -------------------------------------------------------


def build_rts_delay(stats: SlotStats, tm: Timings, form: WaitForm = DEFAULT_FORM) -> RtsDelay:
    return RtsDelay(rta_slot_shares(stats, tm), tm, form)


def cdf_rts_delay(t, shares: RtaSlotShares, tm: Timings, form: WaitForm = DEFAULT_FORM):
    return RtsDelay(shares, tm, form).cdf(t)


def cdf_delay_simple(x, rts: RtsDelay):
    return SimpleDelay(rts).cdf(x)


def cdf_delay_pca(x, rts: RtsDelay, T_b: float, sigma: float):
    return PcaDelay(rts, T_b, sigma).cdf(x)


def delay_quantile(dist: DelayDistribution, level: float, resolution: float = 1e-4,
                   lower: float | None = None, upper: float | None = None) -> float:
    """Smallest ``t`` (to ``resolution``) with ``dist(t) >= level``."""
    if not 0.0 < level < 1.0:
        raise ValueError("level must lie in (0, 1)")
    lo = dist.lower if lower is None else lower
    hi = dist.upper if upper is None else upper
    if dist.cdf(lo) >= level:
        return float(lo)
    f_hi = dist.cdf(hi)
    grow = 0
    while f_hi < level:
        if grow >= 8:
            raise QuantileError(
                f"level {level} not reached: F({lo}) = {dist.cdf(lo):.12g}, "
                f"F({hi}) = {f_hi:.12g}")
        hi = hi + max(hi - lo, 1.0)
        f_hi = dist.cdf(hi)
        grow += 1
    while hi - lo > resolution:
        mid = 0.5 * (lo + hi)
        if dist.cdf(mid) >= level:
            hi = mid
        else:
            lo = mid
    return float(hi)
