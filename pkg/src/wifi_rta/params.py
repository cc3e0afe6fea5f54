"""Configuration types and derived timings.

Every duration is held as an integer number of nanoseconds so that slot
bookkeeping in the simulator is exact. The analytical model works in
microseconds; :func:`model_timings` performs that conversion once.
"""

from __future__ import annotations

import configparser
import enum
from dataclasses import dataclass, field, fields, replace
from decimal import Decimal, InvalidOperation
from pathlib import Path
from typing import Iterable, Mapping

NS_PER_US = 1000


class ConfigError(ValueError):
    """Invalid configuration value; ``key`` names the offending setting."""

    def __init__(self, message: str, key: str | None = None):
        super().__init__(message if key is None else f"{key}: {message}")
        self.key = key


def us_to_ns(value) -> int:
    """Convert a microsecond value (int, float or decimal string) to ns, rounded."""
    try:
        d = Decimal(str(value))
    except InvalidOperation as exc:
        raise ConfigError(f"not a number: {value!r}") from exc
    return int((d * NS_PER_US).to_integral_value())


def ns_to_us(value: int) -> float:
    return value / NS_PER_US


class Approach(str, enum.Enum):
    SIMPLE = "simple"
    PCA = "pca"

    @classmethod
    def parse(cls, text: "str | Approach") -> "Approach":
        if isinstance(text, cls):
            return text
        try:
            return cls(str(text).strip().lower())
        except ValueError:
            raise ConfigError(f"unknown approach {text!r} (expected simple or pca)",
                              "scenario.approach") from None


@dataclass(frozen=True)
class PhyTimings:
    """Fixed airtime constants, all in ns.

    The RTS/CTS/ACK/CF-end defaults are 6 Mb/s legacy OFDM frames
    (20 us preamble, 4 us symbols): 20-byte RTS and CF-end take 52 us,
    14-byte CTS and ACK take 44 us.
    """

    T_e: int = 9_000
    SIFS: int = 16_000
    T_RTS: int = 52_000
    T_CTS: int = 44_000
    T_ACK: int = 44_000
    T_CFend: int = 52_000
    T_header: int = 40_000
    AckTimeout: int = 53_000
    T_SR: int = 191_200

    def __post_init__(self):
        for f in fields(self):
            if getattr(self, f.name) <= 0:
                raise ConfigError("duration must be positive", f"phy.{f.name}")
        if self.AckTimeout < self.SIFS:
            raise ConfigError("AckTimeout must be at least SIFS", "phy.AckTimeout")


@dataclass(frozen=True)
class EdcaParams:
    CW_min: int = 16
    CW_max: int = 1024
    AIFSN: int = 4
    RL: int = 7
    txop_limit: int = 5_000_000  # ns

    def __post_init__(self):
        if not 1 <= self.CW_min <= self.CW_max:
            raise ConfigError("need 1 <= CW_min <= CW_max", "legacy.CW_min")
        ratio, rem = divmod(self.CW_max, self.CW_min)
        if rem or ratio & (ratio - 1):
            raise ConfigError("CW_max must be CW_min times a power of two", "legacy.CW_max")
        if not 2 <= self.AIFSN <= 15:
            raise ConfigError("AIFSN must be in [2, 15]", "legacy.AIFSN")
        if self.RL < 0:
            raise ConfigError("retry limit must be non-negative", "legacy.RL")
        if self.txop_limit <= 0:
            raise ConfigError("TXOP limit must be positive", "legacy.txop_limit")

    def contention_windows(self) -> list[int]:
        """CW_r for r = 0..RL: doubling from CW_min, capped at CW_max."""
        cws = [self.CW_min]
        for _ in range(self.RL):
            cws.append(min(2 * cws[-1], self.CW_max))
        return cws


@dataclass(frozen=True)
class RtaParams:
    """RTA access category and traffic process.

    ``T_b`` is the PCA offset between RTS generation and the expected frame
    arrival; ``None`` means "choose the smallest offset meeting the delay
    target" and is resolved by :func:`wifi_rta.optimizer.resolve_tb`.
    """

    CW_RTA: int = 2
    Delta_AC: int = 2
    T_period: int = 10_000_000
    sigma: int = 100_000
    T_b: int | None = None

    def __post_init__(self):
        if self.CW_RTA < 1:
            raise ConfigError("CW_RTA must be at least 1", "rta.CW_RTA")
        if self.Delta_AC < 0:
            raise ConfigError("Delta_AC must be non-negative", "rta.Delta_AC")
        if self.CW_RTA > self.Delta_AC:
            raise ConfigError("CW_RTA must not exceed Delta_AC, otherwise RTA frames "
                              "can collide with legacy frames", "rta.CW_RTA")
        if self.T_period <= 0:
            raise ConfigError("period must be positive", "rta.T_period")
        if self.sigma < 0:
            raise ConfigError("sigma must be non-negative", "rta.sigma")
        if self.T_b is not None and self.T_b < 0:
            raise ConfigError("T_b must be non-negative", "rta.T_b")


@dataclass(frozen=True)
class QoS:
    D_max: int = 1_000_000  # ns
    PLR_QoS: float = 1e-5

    def __post_init__(self):
        if self.D_max <= 0:
            raise ConfigError("D_max must be positive", "scenario.D_max")
        if not 0.0 < self.PLR_QoS < 1.0:
            raise ConfigError("PLR_QoS must lie in (0, 1)", "scenario.PLR_QoS")

    @property
    def level(self) -> float:
        return 1.0 - self.PLR_QoS


@dataclass(frozen=True)
class Scenario:
    phy: PhyTimings = field(default_factory=PhyTimings)
    legacy: EdcaParams = field(default_factory=EdcaParams)
    rta: RtaParams = field(default_factory=RtaParams)
    N: int = 10
    qos: QoS = field(default_factory=QoS)
    approach: Approach = Approach.SIMPLE

    def __post_init__(self):
        # N = 0 is only meaningful for the simulator (idle-channel runs);
        # the analytical model rejects it.
        if self.N < 0:
            raise ConfigError("N must be non-negative", "scenario.N")

    def with_txop(self, txop_ns: int) -> "Scenario":
        return replace(self, legacy=replace(self.legacy, txop_limit=int(txop_ns)))

    def with_tb(self, tb_ns: int | None) -> "Scenario":
        return replace(self, rta=replace(self.rta, T_b=None if tb_ns is None else int(tb_ns)))


@dataclass(frozen=True)
class DerivedTimings:
    """Quantities computed from a scenario, in ns."""

    AIFS: int
    AIFS_RTA: int
    T_s: int
    T_c: int
    T_payload: int


def derived_timings(s: Scenario) -> DerivedTimings:
    phy, leg, rta = s.phy, s.legacy, s.rta
    aifsn_rta = leg.AIFSN - rta.Delta_AC
    if aifsn_rta < 2:
        raise ConfigError(f"AIFSN - Delta_AC = {aifsn_rta} < 2", "rta.Delta_AC")
    T_s = leg.txop_limit
    overhead = phy.T_RTS + 3 * phy.SIFS + phy.T_CTS + phy.T_header + phy.T_ACK
    T_payload = T_s - overhead
    if T_payload <= 0:
        raise ConfigError(
            f"TXOP limit too small to carry payload ({ns_to_us(T_s)} us <= "
            f"{ns_to_us(overhead)} us of overhead)", "legacy.txop_limit")
    return DerivedTimings(
        AIFS=phy.SIFS + phy.T_e * leg.AIFSN,
        AIFS_RTA=phy.SIFS + phy.T_e * aifsn_rta,
        T_s=T_s,
        T_c=phy.T_RTS + phy.AckTimeout,
        T_payload=T_payload,
    )


def txop_overhead(phy: PhyTimings) -> int:
    """Part of a TXOP that is not payload (ns)."""
    return phy.T_RTS + 3 * phy.SIFS + phy.T_CTS + phy.T_header + phy.T_ACK


@dataclass(frozen=True)
class Timings:
    """Real-valued (microsecond) view used by the analytical model."""

    T_e: float
    SIFS: float
    AIFS: float
    AIFS_RTA: float
    T_s: float
    T_c: float
    T_payload: float
    T_SR: float
    T_RTS: float
    T_CTS: float
    T_CFend: float
    CW_RTA: int
    Delta_AC: int

    @property
    def pca_overhead(self) -> float:
        """RTS + CTS + CF-end airtime added by a reservation."""
        return self.T_RTS + 2 * self.SIFS + self.T_CTS + self.T_CFend


def model_timings(s: Scenario) -> Timings:
    d = derived_timings(s)
    phy = s.phy
    return Timings(
        T_e=ns_to_us(phy.T_e),
        SIFS=ns_to_us(phy.SIFS),
        AIFS=ns_to_us(d.AIFS),
        AIFS_RTA=ns_to_us(d.AIFS_RTA),
        T_s=ns_to_us(d.T_s),
        T_c=ns_to_us(d.T_c),
        T_payload=ns_to_us(d.T_payload),
        T_SR=ns_to_us(phy.T_SR),
        T_RTS=ns_to_us(phy.T_RTS),
        T_CTS=ns_to_us(phy.T_CTS),
        T_CFend=ns_to_us(phy.T_CFend),
        CW_RTA=s.rta.CW_RTA,
        Delta_AC=s.rta.Delta_AC,
    )


# --------------------------------------------------------------------------
# Config files


@dataclass(frozen=True)
class OptimizerSettings:
    txop_min: int | None = None  # ns; None -> smallest TXOP carrying payload
    txop_max: int = 10_000_000
    pca_txop: int = 5_000_000
    resolution: int = 100  # ns


@dataclass(frozen=True)
class ValidateSettings:
    T_period: int | None = None  # ns; None -> long enough to mix the legacy phase
    level: float = 1 - 1e-3
    ks_simple: float = 0.01
    ks_pca: float = 0.02
    efficiency: float = 0.02


@dataclass(frozen=True)
class Config:
    scenario: Scenario = field(default_factory=Scenario)
    optimizer: OptimizerSettings = field(default_factory=OptimizerSettings)
    validate: ValidateSettings = field(default_factory=ValidateSettings)


# key -> (kind, default). kind: "us" duration, "us?" optional duration,
# "int", "float", "approach".
SCHEMA: dict[str, dict[str, tuple[str, object]]] = {
    "phy": {
        "T_e": ("us", "9"), "SIFS": ("us", "16"), "T_RTS": ("us", "52"),
        "T_CTS": ("us", "44"), "T_ACK": ("us", "44"), "T_CFend": ("us", "52"),
        "T_header": ("us", "40"), "AckTimeout": ("us", "53"), "T_SR": ("us", "191.2"),
    },
    "legacy": {
        "CW_min": ("int", "16"), "CW_max": ("int", "1024"), "AIFSN": ("int", "4"),
        "RL": ("int", "7"), "txop_limit": ("us", "5000"),
    },
    "rta": {
        "CW_RTA": ("int", "2"), "Delta_AC": ("int", "2"), "T_period": ("us", "10000"),
        "sigma": ("us", "100"), "T_b": ("us?", "auto"),
    },
    "scenario": {
        "N": ("int", "10"), "D_max": ("us", "1000"), "PLR_QoS": ("float", "1e-5"),
        "approach": ("approach", "simple"),
    },
    "optimizer": {
        "txop_min": ("us?", "auto"), "txop_max": ("us", "10000"),
        "pca_txop": ("us", "5000"), "resolution": ("us", "0.1"),
    },
    "validate": {
        "T_period": ("us?", "auto"), "level": ("float", "0.999"),
        "ks_simple": ("float", "0.01"), "ks_pca": ("float", "0.02"),
        "efficiency": ("float", "0.02"),
    },
}


def _convert(kind: str, raw: str, key: str):
    raw = raw.strip()
    try:
        if kind == "us":
            return us_to_ns(raw)
        if kind == "us?":
            return None if raw.lower() in ("auto", "none", "") else us_to_ns(raw)
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "approach":
            return Approach.parse(raw)
    except ConfigError as exc:
        raise ConfigError(str(exc).split(": ", 1)[-1], key) from None
    except ValueError:
        raise ConfigError(f"cannot parse {raw!r} as {kind}", key) from None
    raise AssertionError(kind)


def parse_overrides(items: Iterable[str]) -> dict[str, str]:
    """Parse ``section.key=value`` strings, checking the key exists."""
    out = {}
    for item in items:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not KEY=VALUE")
        key, value = item.split("=", 1)
        key = key.strip()
        section, _, name = key.partition(".")
        if section not in SCHEMA or name not in SCHEMA[section]:
            raise ConfigError("unknown config key", key)
        out[key] = value
    return out


def load_config(path: str | Path | None = None,
                overrides: Mapping[str, str] | Iterable[str] = (),
                require_all: bool = False) -> Config:
    """Build a :class:`Config` from an INI file plus ``section.key`` overrides.

    Missing keys take the defaults in :data:`SCHEMA` unless ``require_all``
    is set, in which case each absent key is reported by name.
    """
    values: dict[str, dict[str, str]] = {}
    if path is not None:
        parser = configparser.ConfigParser()
        parser.optionxform = str  # keep key case
        try:
            with open(path) as fh:
                parser.read_file(fh)
        except (OSError, configparser.Error) as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        for section in parser.sections():
            if section not in SCHEMA:
                raise ConfigError("unknown config section", section)
            for name, raw in parser.items(section):
                if name not in SCHEMA[section]:
                    raise ConfigError("unknown config key", f"{section}.{name}")
                values.setdefault(section, {})[name] = raw
    if not isinstance(overrides, Mapping):
        overrides = parse_overrides(overrides)
    for key, raw in overrides.items():
        section, _, name = key.partition(".")
        values.setdefault(section, {})[name] = raw

    conv: dict[str, dict[str, object]] = {}
    for section, keys in SCHEMA.items():
        conv[section] = {}
        for name, (kind, default) in keys.items():
            raw = values.get(section, {}).get(name)
            if raw is None:
                if require_all and section in ("phy", "legacy", "rta", "scenario"):
                    raise ConfigError("missing config key", f"{section}.{name}")
                raw = default
            conv[section][name] = _convert(kind, raw, f"{section}.{name}")

    sc = conv["scenario"]
    scenario = Scenario(
        phy=PhyTimings(**conv["phy"]),
        legacy=EdcaParams(**conv["legacy"]),
        rta=RtaParams(**conv["rta"]),
        N=sc["N"],
        qos=QoS(D_max=sc["D_max"], PLR_QoS=sc["PLR_QoS"]),
        approach=sc["approach"],
    )
    derived_timings(scenario)  # surface timing errors at load time
    return Config(
        scenario=scenario,
        optimizer=OptimizerSettings(**conv["optimizer"]),
        validate=ValidateSettings(**conv["validate"]),
    )


def _fmt_us(ns: int | None) -> str:
    if ns is None:
        return "auto"
    text = format(Decimal(ns) / NS_PER_US, "f")
    if "." in text:
        text = text.rstrip("0").rstrip(".")
    return text


def dump_config(cfg: Config) -> str:
    """Render ``cfg`` in the same INI layout :func:`load_config` reads."""
    s = cfg.scenario
    sources = {
        "phy": s.phy, "legacy": s.legacy, "rta": s.rta,
        "scenario": {"N": s.N, "D_max": s.qos.D_max, "PLR_QoS": s.qos.PLR_QoS,
                     "approach": s.approach.value},
        "optimizer": cfg.optimizer, "validate": cfg.validate,
    }
    lines = []
    for section, keys in SCHEMA.items():
        lines.append(f"[{section}]")
        src = sources[section]
        for name, (kind, _) in keys.items():
            value = src[name] if isinstance(src, dict) else getattr(src, name)
            text = _fmt_us(value) if kind.startswith("us") else str(value)
            lines.append(f"{name} = {text}")
        lines.append("")
    return "\n".join(lines)
