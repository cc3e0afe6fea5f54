import math
from dataclasses import replace

import numpy as np
import pytest
from scipy import stats

from conftest import scenario
from wifi_rta.model import AnalyticModel
from wifi_rta.params import Approach, Config, Scenario, ValidateSettings, us_to_ns
from wifi_rta.simulator import core, run
from wifi_rta.validation import (PHASE_EPS, TabulatedCdf, ks_distance, ks_with_allowance,
                                 legacy_cycle, mixing_cycles, rts_allowance, validate,
                                 validate_approach, validation_period)


def test_ks_matches_scipy_for_continuous_cdf():
    rng = np.random.default_rng(0)
    x = rng.standard_normal(5000) * 1.1 + 0.05
    cdf = stats.norm.cdf
    D, _ = ks_distance(x, cdf)
    # left limits are taken 1e-9 below each sample
    assert D == pytest.approx(stats.kstest(x, "norm").statistic, abs=1e-8)


def test_ks_handles_atoms_on_both_sides():
    x = np.array([1.0, 1.0, 2.0])
    step = lambda t: np.where(np.asarray(t) < 1, 0.0, np.where(np.asarray(t) < 2, 2 / 3, 1.0))
    assert ks_distance(x, step)[0] == pytest.approx(0.0, abs=1e-15)
    # same samples against a continuous ramp on [0, 3]: sup at the left limit of 2
    ramp = lambda t: np.clip(np.asarray(t) / 3, 0, 1)
    D, where = ks_distance(x, ramp)
    assert D == pytest.approx(1 / 3) and where in (1.0, 2.0)


def test_allowance_reduces_to_ks_without_shift():
    rng = np.random.default_rng(1)
    x = rng.random(3000)
    cdf = lambda t: np.clip(np.asarray(t), 0, 1)
    assert ks_with_allowance(x, cdf, 0.0)[0] == pytest.approx(ks_distance(x, cdf)[0], abs=1e-8)


def test_allowance_absorbs_bounded_lag():
    rng = np.random.default_rng(2)
    x = rng.exponential(100.0, 100_000)
    lagged = x + rng.uniform(0, 128.0, x.size)
    cdf = stats.expon(scale=100.0).cdf
    ks, _ = ks_distance(lagged, cdf)
    band, _ = ks_with_allowance(lagged, cdf, 128.0)
    assert ks > 0.3 and band < 0.01
    early = x - 20.0  # running ahead of the model is not excused
    assert ks_with_allowance(early, cdf, 128.0)[0] > 0.1


def test_rts_exchange_allowance():
    assert rts_allowance(Scenario()) == pytest.approx(52 + 44 + 32)


def test_tabulated_cdf_follows_model(default_model):
    d = default_model.pca_delay(4000.0)
    tab = TabulatedCdf(d)
    xs = np.linspace(d.lower - 50, d.upper + 50, 777)
    assert np.max(np.abs(tab(xs) - d.cdf_many(xs))) < 1e-4
    assert tab(d.lower - 1e-6) == 0.0


def test_legacy_cycle_against_simulation():
    sc = Scenario()
    r = run(sc, None, duration=100_000_000_000, trace=2_000_000)
    t = r.trace
    starts = t[t[:, 3] == core.C_TX_SUCCESS, 0] / 1000.0
    gaps = np.diff(starts)
    m = AnalyticModel(sc)
    L, s = legacy_cycle(m.stats, m.timings())
    assert gaps.size > 10_000
    assert gaps.mean() == pytest.approx(L, rel=0.02)
    assert gaps.std() == pytest.approx(s, rel=0.05)


def test_validation_period_rule(default_model):
    sc = default_model.scenario
    assert validation_period(default_model, Approach.SIMPLE) == sc.rta.T_period
    L, s = legacy_cycle(default_model.stats, default_model.timings())
    n = mixing_cycles(default_model.stats, default_model.timings())
    assert n == pytest.approx(math.log(1 / PHASE_EPS) * (L / s) ** 2 / (2 * math.pi ** 2))
    T = validation_period(default_model, Approach.PCA, 4000.0)
    assert T >= us_to_ns(n * L) and T > sc.rta.T_period
    slow = AnalyticModel(replace(sc, rta=replace(sc.rta, T_period=us_to_ns(1e7))))
    assert validation_period(slow, Approach.PCA, 4000.0) == us_to_ns(1e7)


def test_report_structure():
    cfg = Config(scenario=scenario())
    out = validate(cfg, ("simple",), frames=100_000, seed=0)
    (rep,) = out["approaches"]
    assert rep["approach"] == "simple" and rep["ks_allowance"] is None
    assert out["passed"] is rep["passed"]
    assert rep["quantile"]["status"] == "ok" and rep["quantile"]["level"] == 1 - 1e-3
    assert rep["truncated_mass"] == pytest.approx(2 * stats.norm.sf(4))
    assert rep["T_b_us"] == 0.0
    short = validate(cfg, ("simple",), frames=1000)["approaches"][0]
    assert short["quantile"]["status"] == "insufficient samples"


def test_mismatched_model_is_detected():
    # model without jitter against a simulator with 0.5 ms jitter
    sim = scenario(txop_us=2000.0, sigma_us=500.0)
    mod = scenario(txop_us=2000.0, sigma_us=0.0)
    rep = validate_approach(Config(scenario=sim), "pca", frames=20_000, model_scenario=mod)
    assert rep.ks > 0.05 and rep.ks_gate > 0.05
    assert not rep.passed
