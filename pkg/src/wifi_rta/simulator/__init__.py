"""Discrete-event simulator of EDCA contention with one RTA station."""

from .engine import (QuantileEstimate, SimResult, SimulationError, TraceAudit,
                     audit_trace, empirical_quantile, kernel_params, read_trace, run,
                     seed_state, write_trace)

__all__ = ["QuantileEstimate", "SimResult", "SimulationError", "TraceAudit", "audit_trace",
           "empirical_quantile", "kernel_params", "read_trace", "run", "seed_state",
           "write_trace"]
