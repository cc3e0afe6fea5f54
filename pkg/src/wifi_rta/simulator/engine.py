"""Python surface of the MAC simulator: parameter packing, results, traces."""

from __future__ import annotations

import hashlib
import math
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.stats import binom

from ..params import Approach, Scenario, derived_timings, ns_to_us
from . import core

TRUNC_SIGMAS = 4  # arrival jitter is cut at +-4 sigma
DEFAULT_TRACE_ON_ERROR = 10_000


class SimulationError(RuntimeError):
    def __init__(self, message: str, trace_path: str | None = None):
        super().__init__(message if trace_path is None else f"{message} (trace: {trace_path})")
        self.trace_path = trace_path


def seed_state(seed: int) -> int:
    """Map any integer seed (64-bit range) to the kernel's 32-bit seed."""
    ss = np.random.SeedSequence(int(seed) % (1 << 64))
    return int(ss.generate_state(1, np.uint32)[0])


def kernel_params(scenario: Scenario, approach: Approach | str | None,
                  n_frames: int, T_b: int | None = None, duration: int = 0,
                  cw_rta: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Integer parameter vector and legacy contention windows for the kernel.

    ``cw_rta`` overrides the RTA contention window without the usual
    validation (used to probe the priority argument).
    """
    d = derived_timings(scenario)
    phy, rta = scenario.phy, scenario.rta
    if approach is None:
        mode = core.MODE_NONE
    else:
        mode = {Approach.SIMPLE: core.MODE_SIMPLE,
                Approach.PCA: core.MODE_PCA}[Approach.parse(approach)]
    if mode == core.MODE_PCA:
        T_b = rta.T_b if T_b is None else T_b
        if T_b is None:
            raise SimulationError("PCA needs an explicit T_b")
        if T_b < 0:
            raise SimulationError("T_b must be non-negative")
        if T_b >= rta.T_period:
            raise SimulationError("T_b must be shorter than the RTA period")
    P = np.zeros(core.N_PARAMS, np.int64)
    P[core.P_TE] = phy.T_e
    P[core.P_AIFS] = d.AIFS
    P[core.P_AIFS_RTA] = d.AIFS_RTA
    P[core.P_TS] = d.T_s
    P[core.P_TC] = d.T_c
    P[core.P_TSR] = phy.T_SR
    P[core.P_TEXCH] = phy.T_RTS + 2 * phy.SIFS + phy.T_CTS
    P[core.P_TCFEND] = phy.T_CFend
    P[core.P_TPAYLOAD] = d.T_payload
    P[core.P_TDATA] = max(phy.T_SR - phy.SIFS - phy.T_ACK, 0)
    P[core.P_TRTS] = phy.T_RTS
    P[core.P_ACKTO] = phy.AckTimeout
    P[core.P_N] = scenario.N
    P[core.P_RL] = scenario.legacy.RL
    P[core.P_CWRTA] = rta.CW_RTA if cw_rta is None else int(cw_rta)
    P[core.P_MODE] = mode
    P[core.P_TPERIOD] = rta.T_period
    P[core.P_SIGMA] = rta.sigma
    P[core.P_TB] = T_b or 0
    P[core.P_NAVHOLD] = (T_b or 0) + TRUNC_SIGMAS * rta.sigma + phy.T_SR + phy.T_CFend
    P[core.P_NFRAMES] = n_frames
    P[core.P_DURATION] = duration
    P[core.P_TRUNC] = TRUNC_SIGMAS
    cw = np.asarray(scenario.legacy.contention_windows(), dtype=np.int64)
    return P, cw


@dataclass
class SimResult:
    approach: Approach | None
    seed: int
    delays_ns: np.ndarray  # one per RTA frame
    arrivals_ns: np.ndarray
    flags: np.ndarray
    stats: np.ndarray
    D_max: int  # ns
    trace: np.ndarray | None = None
    params: np.ndarray = field(default=None, repr=False)

    def _s(self, key: int) -> int:
        return int(self.stats[key])

    @property
    def delay_samples(self) -> np.ndarray:
        """RTA frame delays, us."""
        return self.delays_ns / 1000.0

    @property
    def deadline_missed(self) -> np.ndarray:
        return self.delays_ns > self.D_max

    @property
    def total_time(self) -> int:
        return self._s(core.S_TOTAL)

    @property
    def busy_time_success_payload(self) -> int:
        return self._s(core.S_PAYLOAD_TIME)

    @property
    def empty_time(self) -> int:
        return self._s(core.S_EMPTY_TIME)

    @property
    def success_time(self) -> int:
        return self._s(core.S_SUCC_TIME)

    @property
    def collision_time(self) -> int:
        return self._s(core.S_COLL_TIME)

    @property
    def rta_channel_time(self) -> int:
        return self._s(core.S_RTA_TIME)

    @property
    def rta_airtime(self) -> int:
        """RTA time without reservation holds and AIFS."""
        return self._s(core.S_RTA_AIRTIME)

    @property
    def efficiency(self) -> float:
        return self.busy_time_success_payload / self.total_time if self.total_time else 0.0

    @property
    def counts(self) -> dict[str, int]:
        s = self._s
        return {
            "success": s(core.S_N_SUCC), "collision": s(core.S_N_COLL),
            "empty_slots": s(core.S_N_EMPTY_SLOTS), "rta_tx": s(core.S_N_RTA_TX),
            "rts": s(core.S_N_RTS), "rta_collisions": s(core.S_RTA_COLL),
            "reserved": s(core.S_N_RESERVED), "mid_exchange": s(core.S_N_MID_EXCHANGE),
            "replaced_rts": s(core.S_N_REPLACED), "events": s(core.S_N_EVENTS),
            "frames": s(core.S_N_FRAMES), "max_queue": s(core.S_MAX_QUEUE),
        }

    def rta_time_per_frame(self) -> float:
        """Mean RTA channel time per period, us."""
        n = len(self.delays_ns)
        return ns_to_us(self.rta_channel_time) / n if n else math.nan

    def digest(self) -> str:
        h = hashlib.sha256()
        for a in (self.delays_ns, self.arrivals_ns, self.flags, self.stats):
            h.update(np.ascontiguousarray(a).tobytes())
        return h.hexdigest()


def run(scenario: Scenario, approach: Approach | str | None = None, seed: int = 0,
        n_rta_frames: int = 1000, T_b: int | None = None, trace: int = 0,
        duration: int | None = None, cw_rta: int | None = None,
        jit: bool = True) -> SimResult:
    """Simulate until ``n_rta_frames`` RTA frames are delivered.

    ``approach=None`` runs the legacy STAs alone for ``duration`` ns.
    ``trace`` is the number of most recent events kept in the trace buffer.
    """
    if approach is None:
        approach = None if duration is not None else scenario.approach
    if approach is None:
        if duration is None or duration <= 0:
            raise SimulationError("a run without RTA traffic needs a positive duration")
        n_rta_frames = 0
    else:
        approach = Approach.parse(approach)
        if n_rta_frames < 1:
            raise SimulationError("n_rta_frames must be at least 1")
    P, cw = kernel_params(scenario, approach, n_rta_frames, T_b, duration or 0, cw_rta)
    fn = core.simulate if jit else core.simulate.py_func
    n = max(n_rta_frames, 0)
    delays = np.full(n, -1, np.int64)
    arrivals = np.zeros(n, np.int64)
    flags = np.zeros(n, np.int8)
    stats = np.zeros(core.N_STATS, np.int64)
    buf = np.zeros((max(int(trace), 0), 5), np.int64)
    s = seed_state(seed)
    err = fn(P, cw, s, delays, arrivals, flags, stats, buf)
    if err:
        n_tr = int(stats[core.S_N_TRACE])
        if buf.shape[0] == 0:
            # replay the same seed with a trace buffer to capture the failure
            buf = np.zeros((DEFAULT_TRACE_ON_ERROR, 5), np.int64)
            stats2 = np.zeros(core.N_STATS, np.int64)
            fn(P, cw, s, delays, arrivals, flags, stats2, buf)
            n_tr = int(stats2[core.S_N_TRACE])
        fd, path = tempfile.mkstemp(prefix="wifi_rta_abort_", suffix=".tsv")
        os.close(fd)
        write_trace(path, ordered_trace(buf, n_tr))
        raise SimulationError(
            f"simulation aborted at t = {int(stats[core.S_ERR_TIME])} ns: "
            f"{core.ERR_NAMES[err]}", path)
    tr = ordered_trace(buf, int(stats[core.S_N_TRACE])) if trace else None
    return SimResult(approach=approach, seed=seed, delays_ns=delays, arrivals_ns=arrivals,
                     flags=flags, stats=stats, D_max=scenario.qos.D_max, trace=tr, params=P)


def ordered_trace(buf: np.ndarray, n_written: int) -> np.ndarray:
    """Unroll the ring buffer into chronological order."""
    cap = buf.shape[0]
    if n_written <= cap:
        return buf[:n_written].copy()
    i = n_written % cap
    return np.concatenate([buf[i:], buf[:i]])


# -- trace files ---------------------------------------------------------------

TRACE_HEADER = "time_ns\tkind\tstation\tdetail"


def format_trace(rows: np.ndarray) -> list[str]:
    out = []
    for t, k, st, code, arg in rows.tolist():
        out.append(f"{t}\t{core.KIND_NAMES[k]}\t{st}\t{core.CODE_NAMES[code]}:{arg}")
    return out


def write_trace(path: str | Path, rows: np.ndarray) -> None:
    with open(path, "w") as fh:
        fh.write(TRACE_HEADER + "\n")
        for line in format_trace(rows):
            fh.write(line + "\n")


def read_trace(path: str | Path) -> np.ndarray:
    kinds = {n: i for i, n in enumerate(core.KIND_NAMES)}
    codes = {n: i for i, n in enumerate(core.CODE_NAMES)}
    rows = []
    with open(path) as fh:
        header = fh.readline().rstrip("\n")
        if header != TRACE_HEADER:
            raise ValueError(f"not a trace file: header {header!r}")
        for line in fh:
            t, k, st, detail = line.rstrip("\n").split("\t")
            name, arg = detail.rsplit(":", 1)
            rows.append((int(t), kinds[k], int(st), codes[name], int(arg)))
    return np.array(rows, dtype=np.int64).reshape(-1, 5)


@dataclass(frozen=True)
class TraceAudit:
    overlaps: int  # transmissions starting before the previous one ended
    nav_violations: int  # legacy transmissions inside an RTA reservation
    out_of_order: int
    tx_starts: int


def audit_trace(rows: np.ndarray, n_legacy: int) -> TraceAudit:
    """Check medium exclusivity, NAV discipline and time order of a trace."""
    overlaps = nav = disorder = starts = 0
    busy_until = -1
    reserved = False
    prev_t = -1
    for t, k, st, code, arg in rows.tolist():
        if t < prev_t:
            disorder += 1
        prev_t = t
        if code in core.TX_START_CODES:
            starts += 1
            if busy_until >= 0 and t < busy_until:
                overlaps += 1
            busy_until = arg
            if code == core.C_TX_RTS:
                reserved = True
            elif code in (core.C_TX_SUCCESS, core.C_TX_COLLISION) and reserved:
                nav += 1
        elif st == n_legacy and code in (core.C_IDLE, core.C_NAV_LOST):
            reserved = False
    return TraceAudit(overlaps, nav, disorder, starts)


# -- quantiles -----------------------------------------------------------------

MIN_TAIL_SAMPLES = 100


@dataclass(frozen=True)
class QuantileEstimate:
    level: float
    n: int
    status: str  # "ok" or "insufficient samples"
    value: float | None = None
    ci_low: float | None = None
    ci_high: float | None = None

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    @property
    def ci_width(self) -> float | None:
        return None if not self.ok else self.ci_high - self.ci_low

    def contains(self, x: float) -> bool:
        return self.ok and self.ci_low <= x <= self.ci_high


def empirical_quantile(result: SimResult | np.ndarray, level: float,
                       confidence: float = 0.95) -> QuantileEstimate:
    """Order-statistic quantile with a distribution-free binomial CI (us)."""
    if not 0.0 < level < 1.0:
        raise ValueError("level must lie in (0, 1)")
    x = result.delay_samples if isinstance(result, SimResult) else np.asarray(result, float)
    n = int(x.size)
    if (1.0 - level) * n < MIN_TAIL_SAMPLES:
        return QuantileEstimate(level, n, "insufficient samples")
    xs = np.sort(x)
    k = min(max(math.ceil(level * n), 1), n)  # 1-based order statistic
    a = 0.5 * (1.0 - confidence)
    lo = int(binom.ppf(a, n, level))
    hi = int(binom.ppf(1.0 - a, n, level)) + 1
    lo = min(max(lo, 1), n)
    hi = min(max(hi, 1), n)
    return QuantileEstimate(level, n, "ok", float(xs[k - 1]), float(xs[lo - 1]),
                            float(xs[hi - 1]))
