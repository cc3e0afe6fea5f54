"""Model-versus-simulator comparison."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import ndtr

from .legacy_model import SlotStats
from .model import AnalyticModel
from .optimizer import resolve_tb
from .params import (Approach, Config, Scenario, Timings, ns_to_us, us_to_ns)
from .rta_delay import DelayDistribution
from .simulator import SimResult, empirical_quantile, run
from .simulator.engine import TRUNC_SIGMAS

# residual amplitude of the legacy phase wave allowed at RTS generation
PHASE_EPS = 2e-3
TABLE_STEP = 0.5  # us, grid of tabulated model CDFs


def legacy_cycle(stats: SlotStats, tm: Timings) -> tuple[float, float]:
    """Mean and standard deviation (us) of the time between legacy successes.

    Between two successes there is a geometric number of empty or
    collision slots, then one success slot.
    """
    q = 1.0 - stats.P_s
    EK = q / stats.P_s
    VK = q / stats.P_s ** 2
    x_e, x_c = tm.T_e, tm.T_c + tm.AIFS
    EX = (stats.P_e * x_e + stats.P_c * x_c) / q
    EX2 = (stats.P_e * x_e ** 2 + stats.P_c * x_c ** 2) / q
    var = EK * (EX2 - EX * EX) + VK * EX * EX
    return tm.T_s + tm.AIFS + EK * EX, math.sqrt(var)


def mixing_cycles(stats: SlotStats, tm: Timings, eps: float = PHASE_EPS) -> float:
    """Legacy cycles after which the cycle phase is uniform up to ``eps``.

    The phase is a sum of independent cycle lengths taken modulo the mean
    cycle; its first Fourier mode decays as exp(-2 pi^2 n s^2 / L^2).
    """
    L, s = legacy_cycle(stats, tm)
    return math.log(1.0 / eps) * L * L / (2.0 * math.pi ** 2 * s * s)


def validation_period(model: AnalyticModel, approach: Approach, T_b: float = 0.0) -> int:
    """RTA period (ns) for a validation run.

    With PCA each reservation ends on the data arrival, which restarts the
    legacy TXOP pattern, so the next RTS needs enough legacy cycles after
    that to see a uniformly random phase. Without reservations the phase
    performs a random walk across periods and the configured period works.
    """
    T = model.scenario.rta.T_period
    if Approach.parse(approach) is Approach.SIMPLE:
        return T
    tm = model.timings()
    L, _ = legacy_cycle(model.stats, tm)
    n = mixing_cycles(model.stats, tm)
    span = T_b + TRUNC_SIGMAS * model.sigma + tm.T_SR + tm.T_CFend + n * L
    return max(T, us_to_ns(math.ceil(span)))


class TabulatedCdf:
    """Linear interpolation of a model CDF on a fine grid, zero below its support."""

    def __init__(self, dist: DelayDistribution, step: float = TABLE_STEP):
        self.lower = dist.lower
        self.upper = dist.upper
        self.grid = np.arange(dist.lower, dist.upper + step, step)
        self.values = dist.cdf_many(self.grid)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.where(x < self.lower, 0.0, np.interp(x, self.grid, self.values))
        return out if out.ndim else float(out)


def _ecdf_at(samples: np.ndarray):
    xs = np.sort(np.asarray(samples, dtype=float))
    u, first = np.unique(xs, return_index=True)
    n = xs.size
    le = np.r_[first[1:], n] / n  # F_n(u)
    lt = first / n  # F_n(u-)
    return u, le, lt


def ks_distance(samples, cdf, eps: float = 1e-9) -> tuple[float, float]:
    """Two-sided sup distance between the empirical CDF and ``cdf``.

    Both one-sided limits are compared at every sample value, so point
    masses in either distribution are handled. Returns (distance, where).
    """
    u, le, lt = _ecdf_at(samples)
    d1 = np.abs(le - cdf(u))
    d2 = np.abs(lt - cdf(u - eps))
    i1, i2 = int(np.argmax(d1)), int(np.argmax(d2))
    if d1[i1] >= d2[i2]:
        return float(d1[i1]), float(u[i1])
    return float(d2[i2]), float(u[i2])


def ks_with_allowance(samples, cdf, shift: float, eps: float = 1e-9) -> tuple[float, float]:
    """Sup distance outside the band between ``cdf(x - shift)`` and ``cdf(x)``.

    The empirical CDF may lag the model by up to ``shift`` without penalty.
    """
    u, le, lt = _ecdf_at(samples)
    above = le - cdf(u)
    below = cdf(u - shift - eps) - lt
    i1, i2 = int(np.argmax(above)), int(np.argmax(below))
    best = max(above[i1], below[i2], 0.0)
    where = float(u[i1] if above[i1] >= below[i2] else u[i2])
    return float(best), where


def rts_allowance(scenario: Scenario) -> float:
    """Airtime of the RTS/CTS exchange, us."""
    phy = scenario.phy
    return ns_to_us(phy.T_RTS + phy.T_CTS + 2 * phy.SIFS)


@dataclass
class ApproachReport:
    approach: str
    seed: int
    frames: int
    T_period_us: float
    T_b_us: float
    ks: float
    ks_at_us: float
    ks_allowance: float | None
    ks_gate: float
    ks_threshold: float
    E_sim: float
    E_model: float
    E_rel_error: float
    E_threshold: float
    T_RTA_sim_us: float
    T_RTA_model_us: float
    quantile: dict
    counts: dict
    truncated_mass: float
    passed: bool

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def _quantile_block(result: SimResult, model_q: float, level: float) -> dict:
    q = empirical_quantile(result, level)
    out = {"level": level, "status": q.status, "n": q.n, "model_us": model_q}
    if q.ok:
        out.update(empirical_us=q.value, ci_low_us=q.ci_low, ci_high_us=q.ci_high,
                   ci_width_us=q.ci_width, contains_model=q.contains(model_q))
    return out


def validate_approach(cfg: Config, approach: Approach | str, frames: int, seed: int = 0,
                      model_scenario: Scenario | None = None,
                      T_b_ns: int | None = None) -> ApproachReport:
    """Simulate one approach and compare it with the analytical model.

    ``model_scenario`` lets the model side differ from the simulated one
    (used to check that the comparison detects a mismatch).
    """
    approach = Approach.parse(approach)
    vs = cfg.validate
    sim_sc = cfg.scenario
    model = AnalyticModel(model_scenario or sim_sc)
    sim_model = model if model_scenario is None else AnalyticModel(sim_sc)
    txop = sim_sc.legacy.txop_limit
    tb_ns = 0
    if approach is Approach.PCA:
        # T_b is part of the configuration under test, so it follows the model side
        tb_ns = T_b_ns if T_b_ns is not None else resolve_tb(model, txop, cfg.optimizer)
    T_b = ns_to_us(tb_ns)
    period = vs.T_period if vs.T_period is not None else validation_period(sim_model, approach, T_b)
    sim_sc = replace(sim_sc, rta=replace(sim_sc.rta, T_period=period))
    result = run(sim_sc, approach, seed=seed, n_rta_frames=frames, T_b=tb_ns)

    if approach is Approach.SIMPLE:
        dist = model.simple_delay()
        cdf = dist.cdf
        allowance = None
        gate = vs.ks_simple
        T_RTA_model = model.t_rta_simple()
        q_model = model.q_simple(level=vs.level)
    else:
        dist = model.pca_delay(T_b)
        cdf = TabulatedCdf(dist)
        gate = vs.ks_pca
        T_RTA_model = model.t_rta_pca(T_b)
        q_model = model.q_pca(T_b, level=vs.level)
    ks, ks_at = ks_distance(result.delay_samples, cdf)
    if approach is Approach.PCA:
        allowance, _ = ks_with_allowance(result.delay_samples, cdf, rts_allowance(sim_sc))
    gated = ks if allowance is None else allowance
    E_model = model.efficiency(T_RTA_model, T_period=ns_to_us(period))
    E_rel = (result.efficiency - E_model) / E_model
    truncated = 2.0 * float(ndtr(-TRUNC_SIGMAS)) if sim_sc.rta.sigma > 0 else 0.0
    passed = gated < gate and abs(E_rel) < vs.efficiency
    return ApproachReport(
        approach=approach.value, seed=seed, frames=frames, T_period_us=ns_to_us(period),
        T_b_us=T_b, ks=ks, ks_at_us=ks_at, ks_allowance=allowance, ks_gate=gated,
        ks_threshold=gate, E_sim=result.efficiency, E_model=E_model, E_rel_error=E_rel,
        E_threshold=vs.efficiency, T_RTA_sim_us=result.rta_time_per_frame(),
        T_RTA_model_us=T_RTA_model, quantile=_quantile_block(result, q_model, vs.level),
        counts=result.counts, truncated_mass=truncated, passed=bool(passed))


def validate(cfg: Config, approaches=(Approach.SIMPLE, Approach.PCA), frames: int = 100_000,
             seed: int = 0, model_scenario: Scenario | None = None) -> dict:
    reports = [validate_approach(cfg, a, frames, seed, model_scenario).as_dict()
               for a in approaches]
    return {"passed": all(r["passed"] for r in reports), "approaches": reports}
