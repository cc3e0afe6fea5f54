"""Parameter choice for both approaches and the period where they break even.

Simple approach: the largest TXOP limit whose delay quantile stays within
``D_max``. PCA: TXOP limit fixed at its cap, then the smallest RTS offset
``T_b`` meeting the same constraint. Both searches bisect on integer
nanoseconds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .efficiency import InfeasibleLoad, efficiency
from .model import AnalyticModel
from .params import (Approach, OptimizerSettings, Scenario, ns_to_us, txop_overhead,
                     us_to_ns)
from .rta_delay import TRUNC_SIGMAS


@dataclass(frozen=True)
class OptimizationResult:
    approach: Approach
    T_s_opt: float  # us
    T_b_opt: float  # us, 0 for the simple approach
    Q_at_opt: float  # us
    E_at_opt: float  # at the scenario's period; nan if the RTA load is infeasible
    E_wo_rta: float
    T_RTA: float  # us
    feasible: bool
    constraint_active: bool = True
    message: str = ""

    def efficiency_at(self, T_period: float) -> float:
        return efficiency(self.E_wo_rta, self.T_RTA, T_period)


@dataclass(frozen=True)
class Crossover:
    T_star: float | None  # us
    message: str
    sign_changes: int


def _efficiency_or_nan(E_wo, T_RTA, T_period):
    try:
        return efficiency(E_wo, T_RTA, T_period)
    except InfeasibleLoad:
        return math.nan


def txop_bounds(scenario: Scenario, settings: OptimizerSettings) -> tuple[int, int]:
    lo = settings.txop_min
    if lo is None:
        lo = txop_overhead(scenario.phy) + settings.resolution
    return int(lo), int(settings.txop_max)


def simple_result(model: AnalyticModel, txop_ns: int, feasible: bool = True,
                  active: bool = True, message: str = "") -> OptimizationResult:
    Q = model.q_simple(txop_ns)
    E_wo = model.e_wo(txop_ns)
    T_RTA = model.t_rta_simple(txop_ns)
    return OptimizationResult(
        approach=Approach.SIMPLE, T_s_opt=ns_to_us(txop_ns), T_b_opt=0.0, Q_at_opt=Q,
        E_at_opt=_efficiency_or_nan(E_wo, T_RTA, model.T_period), E_wo_rta=E_wo,
        T_RTA=T_RTA, feasible=feasible and Q <= model.D_max, constraint_active=active,
        message=message)


def pca_result(model: AnalyticModel, txop_ns: int, tb_ns: int, feasible: bool = True,
               active: bool = True, message: str = "") -> OptimizationResult:
    T_b = ns_to_us(tb_ns)
    Q = model.q_pca(T_b, txop_ns)
    E_wo = model.e_wo(txop_ns)
    T_RTA = model.t_rta_pca(T_b, txop_ns)
    return OptimizationResult(
        approach=Approach.PCA, T_s_opt=ns_to_us(txop_ns), T_b_opt=T_b, Q_at_opt=Q,
        E_at_opt=_efficiency_or_nan(E_wo, T_RTA, model.T_period), E_wo_rta=E_wo,
        T_RTA=T_RTA, feasible=feasible and Q <= model.D_max, constraint_active=active,
        message=message)


def optimal_txop_simple(model: AnalyticModel,
                        bounds: tuple[int, int] | None = None,
                        settings: OptimizerSettings = OptimizerSettings()) -> OptimizationResult:
    """Largest TXOP limit (ns bounds) with ``Q_simple <= D_max``."""
    lo, hi = bounds if bounds is not None else txop_bounds(model.scenario, settings)
    if lo <= txop_overhead(model.scenario.phy):
        raise ValueError("lower TXOP bound leaves no payload")
    D_max = model.D_max
    q_lo = model.q_simple(lo)
    if q_lo > D_max:
        return simple_result(model, lo, feasible=False, message=(
            f"infeasible: Q_simple = {q_lo:.6g} us > D_max = {D_max:.6g} us "
            f"already at the lower TXOP bound {ns_to_us(lo):.6g} us"))
    if model.q_simple(hi) <= D_max:
        return simple_result(model, hi, active=False,
                             message="constraint inactive at the upper TXOP bound")
    res = settings.resolution
    while hi - lo > res:
        mid = (lo + hi) // 2
        if model.q_simple(mid) <= D_max:
            lo = mid
        else:
            hi = mid
    return simple_result(model, lo)


def tb_cap(model: AnalyticModel, txop_ns: int) -> int:
    """Offset beyond which the RTS always precedes the data frame."""
    rts = model.rts_delay(txop_ns)
    return us_to_ns(rts.upper + TRUNC_SIGMAS * model.sigma) + 1000


def optimal_tb_pca(model: AnalyticModel, txop_ns: int | None = None,
                   settings: OptimizerSettings = OptimizerSettings()) -> OptimizationResult:
    """Smallest PCA offset with ``Q_PCA <= D_max`` at a fixed TXOP limit."""
    if txop_ns is None:
        txop_ns = settings.pca_txop
    D_max = model.D_max
    sigma = model.sigma
    if model.q_pca(0.0, txop_ns) <= D_max:
        return pca_result(model, txop_ns, 0, active=False,
                          message="no pre-reservation needed")
    hi = tb_cap(model, txop_ns)
    q_hi = model.q_pca(ns_to_us(hi), txop_ns)
    if q_hi > D_max:
        return pca_result(model, txop_ns, hi, feasible=False, message=(
            f"infeasible: Q_PCA = {q_hi:.6g} us > D_max = {D_max:.6g} us even with "
            f"T_b = {ns_to_us(hi):.6g} us (sigma = {sigma:.6g} us)"))
    lo = 0
    res = settings.resolution
    while hi - lo > res:
        mid = (lo + hi) // 2
        if model.q_pca(ns_to_us(mid), txop_ns) <= D_max:
            hi = mid
        else:
            lo = mid
    return pca_result(model, txop_ns, hi)


def resolve_tb(model: AnalyticModel, txop_ns: int | None = None,
               settings: OptimizerSettings = OptimizerSettings()) -> int:
    """The scenario's T_b in ns, optimizing it when configured as ``auto``."""
    tb = model.scenario.rta.T_b
    if tb is not None:
        return tb
    r = optimal_tb_pca(model, model.scenario.legacy.txop_limit if txop_ns is None else txop_ns,
                       settings)
    return us_to_ns(r.T_b_opt)


def crossover_period(simple, pca, T_max: float = 100_000.0, points: int = 64,
                     tol: float = 1e-6) -> Crossover:
    """Period T* (us) at which both approaches give the same efficiency.

    ``simple`` and ``pca`` are :class:`OptimizationResult` objects; the scan
    runs over log-spaced periods from the larger RTA occupancy to ``T_max``.
    """
    if not (simple.feasible and pca.feasible):
        return Crossover(None, "an approach is infeasible", 0)

    def diff(T):
        return (efficiency(pca.E_wo_rta, pca.T_RTA, T)
                - efficiency(simple.E_wo_rta, simple.T_RTA, T))

    T_lo = max(simple.T_RTA, pca.T_RTA)
    if T_lo >= T_max:
        return Crossover(None, "RTA occupancy exceeds the scanned range", 0)
    grid = np.geomspace(T_lo, T_max, points)
    d = np.array([diff(T) for T in grid])
    if np.all(np.abs(d) < tol):
        return Crossover(None, "approaches are indistinguishable in range", 0)
    sign = np.sign(np.where(np.abs(d) < tol, 0.0, d))
    nz = sign[sign != 0]
    changes = int(np.count_nonzero(nz[1:] != nz[:-1]))
    idx = next((i for i in range(points - 1) if sign[i] < 0 <= sign[i + 1]
                or sign[i] > 0 >= sign[i + 1]), None)
    if idx is None:
        return Crossover(None, "no crossover in range", changes)
    a, b = grid[idx], grid[idx + 1]
    da = d[idx]
    while b / a - 1.0 > 1e-13:
        m = math.sqrt(a * b)
        dm = diff(m)
        if dm == 0.0:
            return Crossover(m, "ok", changes)
        if (dm < 0) == (da < 0):
            a, da = m, dm
        else:
            b = m
    return Crossover(math.sqrt(a * b), "ok", changes)
