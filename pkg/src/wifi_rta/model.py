"""Analytical model of one scenario, evaluated at arbitrary TXOP limits.

The legacy fixed point depends only on the contention parameters and N,
so it is solved once and reused while the TXOP limit or the PCA offset
is varied.
"""

from __future__ import annotations

from functools import lru_cache

from . import efficiency as eff
from .legacy_model import SlotStats, solve
from .params import Scenario, Timings, model_timings, ns_to_us
from .rta_delay import (DEFAULT_FORM, PcaDelay, RtsDelay, SimpleDelay, WaitForm,
                        build_rts_delay, delay_quantile)


class AnalyticModel:
    def __init__(self, scenario: Scenario, form: WaitForm = DEFAULT_FORM):
        if scenario.N < 1:
            raise ValueError("the analytical model needs at least one legacy STA")
        self.scenario = scenario
        self.form = WaitForm(form)
        self.stats: SlotStats = solve(scenario.N, scenario.legacy)
        self._timings = lru_cache(maxsize=256)(self._make_timings)
        self._rts = lru_cache(maxsize=256)(self._make_rts)

    @property
    def level(self) -> float:
        return self.scenario.qos.level

    @property
    def sigma(self) -> float:
        return ns_to_us(self.scenario.rta.sigma)

    @property
    def T_period(self) -> float:
        return ns_to_us(self.scenario.rta.T_period)

    @property
    def D_max(self) -> float:
        return ns_to_us(self.scenario.qos.D_max)

    def _make_timings(self, txop_ns: int) -> Timings:
        return model_timings(self.scenario.with_txop(txop_ns))

    def _make_rts(self, txop_ns: int) -> RtsDelay:
        return build_rts_delay(self.stats, self._timings(txop_ns), self.form)

    def _txop(self, txop_ns: int | None) -> int:
        return self.scenario.legacy.txop_limit if txop_ns is None else int(txop_ns)

    def timings(self, txop_ns: int | None = None) -> Timings:
        return self._timings(self._txop(txop_ns))

    def rts_delay(self, txop_ns: int | None = None) -> RtsDelay:
        return self._rts(self._txop(txop_ns))

    def simple_delay(self, txop_ns: int | None = None) -> SimpleDelay:
        return SimpleDelay(self.rts_delay(txop_ns))

    def pca_delay(self, T_b: float, txop_ns: int | None = None,
                  sigma: float | None = None) -> PcaDelay:
        return PcaDelay(self.rts_delay(txop_ns), T_b, self.sigma if sigma is None else sigma)

    def q_simple(self, txop_ns: int | None = None, level: float | None = None) -> float:
        return delay_quantile(self.simple_delay(txop_ns), self.level if level is None else level)

    def q_pca(self, T_b: float, txop_ns: int | None = None, sigma: float | None = None,
              level: float | None = None) -> float:
        return delay_quantile(self.pca_delay(T_b, txop_ns, sigma),
                              self.level if level is None else level)

    def e_wo(self, txop_ns: int | None = None) -> float:
        return eff.efficiency_without_rta(self.stats, self.timings(txop_ns))

    def t_rta_simple(self, txop_ns: int | None = None) -> float:
        return eff.t_rta_simple(self.timings(txop_ns))

    def t_rta_pca(self, T_b: float, txop_ns: int | None = None,
                  sigma: float | None = None) -> float:
        return eff.t_rta_pca(self.timings(txop_ns), T_b,
                             self.sigma if sigma is None else sigma, self.rts_delay(txop_ns))

    def efficiency(self, T_RTA: float, txop_ns: int | None = None,
                   T_period: float | None = None) -> float:
        return eff.efficiency(self.e_wo(txop_ns), T_RTA,
                              self.T_period if T_period is None else T_period)
