import os
from dataclasses import replace

import numpy as np
import pytest

from conftest import scenario
from wifi_rta.legacy_model import solve
from wifi_rta.params import Scenario, derived_timings, us_to_ns
from wifi_rta.simulator import (SimulationError, audit_trace, empirical_quantile, read_trace,
                                run, write_trace)
from wifi_rta.simulator import core
from wifi_rta.simulator.engine import MIN_TAIL_SAMPLES, TRUNC_SIGMAS

T_B = 4_500_000


@pytest.fixture(scope="module")
def pca_run():
    return run(Scenario(), "pca", seed=0, n_rta_frames=15_000, T_b=T_B, trace=400_000)


def test_single_station_efficiency():
    sc = replace(Scenario(), N=1)
    r = run(sc, None, duration=20_000_000_000)
    d = derived_timings(sc)
    cw0 = sc.legacy.CW_min
    mean_cycle = (cw0 - 1) / 2 * sc.phy.T_e + d.T_s + d.AIFS
    assert r.counts["collision"] == 0
    assert r.efficiency == pytest.approx(d.T_payload / mean_cycle, rel=5e-3)


def test_empty_network_delay_is_data_airtime():
    sc = scenario(sigma_us=0.0, N=0)
    for approach, kw in (("simple", {}), ("pca", {"T_b": 1_000_000})):
        r = run(sc, approach, seed=1, n_rta_frames=500, **kw)
        assert np.all(r.delays_ns == sc.phy.T_SR)


def test_legacy_slot_frequencies_near_model():
    sc = Scenario()
    r = run(sc, None, duration=20_000_000_000)
    c = r.counts
    slots = c["success"] + c["collision"] + c["empty_slots"]
    s = solve(sc.N, sc.legacy)
    assert c["success"] / slots == pytest.approx(s.P_s, abs=0.02)
    assert c["empty_slots"] / slots == pytest.approx(s.P_e, abs=0.02)


@pytest.mark.parametrize("approach", ["simple", "pca"])
def test_deterministic_per_seed(approach):
    kw = {"T_b": T_B} if approach == "pca" else {}
    a = run(Scenario(), approach, seed=5, n_rta_frames=2000, **kw)
    b = run(Scenario(), approach, seed=5, n_rta_frames=2000, **kw)
    c = run(Scenario(), approach, seed=6, n_rta_frames=2000, **kw)
    assert a.digest() == b.digest() != c.digest()


@pytest.mark.parametrize("approach", ["simple", "pca"])
def test_interpreted_kernel_matches_compiled(approach):
    # integer draws share one Mersenne Twister stream in both; the compiled
    # normal sampler differs from numpy's, so the arrivals carry no jitter
    kw = {"T_b": T_B} if approach == "pca" else {}
    sc = scenario(sigma_us=0.0)
    a = run(sc, approach, seed=2, n_rta_frames=40, trace=5000, **kw)
    b = run(sc, approach, seed=2, n_rta_frames=40, trace=5000, jit=False, **kw)
    assert a.digest() == b.digest()
    assert np.array_equal(a.trace, b.trace)


def test_trace_audit_is_clean(pca_run):
    assert pca_run.counts["events"] >= 100_000
    audit = audit_trace(pca_run.trace, Scenario().N)
    assert (audit.overlaps, audit.nav_violations, audit.out_of_order) == (0, 0, 0)
    assert audit.tx_starts > 10_000


def test_audit_flags_overlap_and_nav(pca_run):
    rows = pca_run.trace[:2000].copy()
    starts = np.flatnonzero(np.isin(rows[:, 3], list(core.TX_START_CODES)))
    i, j = starts[0], starts[1]
    rows[j, 0] = rows[i, 0]  # second transmission starts with the first
    rows = rows[np.argsort(rows[:, 0], kind="stable")]
    assert audit_trace(rows, Scenario().N).overlaps >= 1
    rts = np.flatnonzero(rows[:, 3] == core.C_TX_RTS)[0]
    fake = np.array([[rows[rts, 0] + 1, core.TX_END, 0, core.C_TX_SUCCESS, 10**15]])
    bad = np.concatenate([rows[:rts + 1], fake, rows[rts + 1:]])
    assert audit_trace(bad, Scenario().N).nav_violations >= 1


def test_channel_time_conservation(pca_run):
    r = pca_run
    assert r.total_time == r.empty_time + r.success_time + r.collision_time + r.rta_channel_time
    assert r.busy_time_success_payload == r.counts["success"] * derived_timings(
        Scenario()).T_payload
    c = r.counts
    assert c["frames"] == 15_000 and c["rta_collisions"] == 0
    assert c["reserved"] == c["rts"]
    assert np.all(r.delays_ns >= Scenario().phy.T_SR)


def test_priority_excludes_rta_collisions():
    safe = run(Scenario(), "simple", seed=0, n_rta_frames=20_000)
    assert safe.counts["rta_collisions"] == 0
    risky = run(Scenario(), "simple", seed=0, n_rta_frames=20_000, cw_rta=4)
    assert risky.counts["rta_collisions"] > 0


def test_arrivals_truncated_at_four_sigma():
    sc = scenario(sigma_us=500.0)
    r = run(sc, "simple", seed=3, n_rta_frames=20_000)
    nominal = (np.arange(20_000) + 1) * sc.rta.T_period
    dev = r.arrivals_ns - nominal
    assert np.max(np.abs(dev)) <= TRUNC_SIGMAS * sc.rta.sigma
    assert np.std(dev) == pytest.approx(sc.rta.sigma, rel=0.03)


def test_trace_file_round_trip(tmp_path, pca_run):
    rows = pca_run.trace[:3000]
    path = tmp_path / "t.tsv"
    write_trace(path, rows)
    assert path.read_text().splitlines()[0] == "time_ns\tkind\tstation\tdetail"
    assert np.array_equal(read_trace(path), rows)
    (tmp_path / "bad.tsv").write_text("nope\n")
    with pytest.raises(ValueError):
        read_trace(tmp_path / "bad.tsv")


def test_overload_aborts_with_trace():
    sc = scenario(sigma_us=0.0, T_period=us_to_ns(100.0))
    with pytest.raises(SimulationError) as err:
        run(sc, "simple", seed=0, n_rta_frames=1000)
    assert "queue" in str(err.value)
    path = err.value.trace_path
    assert path and os.path.exists(path)
    rows = read_trace(path)
    assert len(rows) > 0 and np.all(np.diff(rows[:, 0]) >= 0)
    os.remove(path)


@pytest.mark.parametrize("kw,msg", [
    (dict(approach="pca"), "explicit T_b"),
    (dict(approach="pca", T_b=20_000_000), "shorter"),
    (dict(approach="pca", T_b=-1), "non-negative"),
    (dict(approach="simple", n_rta_frames=0), "at least 1"),
])
def test_invalid_runs(kw, msg):
    with pytest.raises(SimulationError, match=msg):
        run(Scenario(), **kw)


def test_legacy_only_run_needs_duration():
    with pytest.raises(SimulationError):
        run(Scenario(), None, duration=0)


def test_quantile_matches_order_statistic():
    rng = np.random.default_rng(0)
    x = rng.exponential(size=200_000)
    q = empirical_quantile(x, 1 - 1e-3)
    assert q.ok and q.n == x.size
    assert q.value == np.quantile(x, 1 - 1e-3, method="inverted_cdf")
    assert q.ci_low <= q.value <= q.ci_high
    assert q.contains(-np.log(1e-3))  # true exponential quantile


def test_quantile_insufficient_tail():
    q = empirical_quantile(np.arange(1000.0), 1 - 1e-3)
    assert not q.ok and q.status == "insufficient samples" and q.ci_width is None
    n = int(MIN_TAIL_SAMPLES / 1e-2)
    assert empirical_quantile(np.arange(float(n)), 1 - 1e-2).ok
    with pytest.raises(ValueError):
        empirical_quantile(np.arange(10.0), 1.0)


def test_quantile_ci_coverage():
    rng = np.random.default_rng(1)
    hits = sum(empirical_quantile(rng.random(20_000), 0.99).contains(0.99) for _ in range(400))
    assert 0.92 <= hits / 400 <= 0.99
