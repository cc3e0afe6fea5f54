import pytest

from wifi_rta.params import (Approach, Config, ConfigError, EdcaParams, PhyTimings, RtaParams,
                             Scenario, derived_timings, dump_config, load_config,
                             model_timings, ns_to_us, parse_overrides, txop_overhead,
                             us_to_ns)


def test_us_conversion_is_exact_for_decimals():
    assert us_to_ns("191.2") == 191_200
    assert us_to_ns(0.1) == 100
    assert ns_to_us(191_200) == 191.2
    assert us_to_ns("0.0006") == 1  # nearest ns
    with pytest.raises(ConfigError):
        us_to_ns("fast")


def test_defaults_give_standard_spacings():
    d = derived_timings(Scenario())
    assert d.AIFS == 52_000
    assert d.AIFS_RTA == 34_000
    assert d.T_c == 105_000
    assert d.T_s == 5_000_000
    # T_s - (T_RTS + 3 SIFS + T_CTS + T_header + T_ACK)
    assert d.T_payload == 5_000_000 - (52_000 + 48_000 + 44_000 + 40_000 + 44_000)


def test_collision_shorter_than_any_accepted_txop():
    s = Scenario(legacy=EdcaParams(txop_limit=txop_overhead(PhyTimings()) + 1000))
    d = derived_timings(s)
    assert d.T_c < d.T_s and d.T_payload == 1000


def test_rejects_txop_without_payload():
    s = Scenario(legacy=EdcaParams(txop_limit=txop_overhead(PhyTimings())))
    with pytest.raises(ConfigError, match="payload"):
        derived_timings(s)


def test_rejects_rta_aifs_too_short():
    s = Scenario(legacy=EdcaParams(AIFSN=3), rta=RtaParams(CW_RTA=2, Delta_AC=2))
    with pytest.raises(ConfigError):
        derived_timings(s)


def test_rejects_rta_window_wider_than_gap():
    with pytest.raises(ConfigError):
        RtaParams(CW_RTA=3, Delta_AC=2)


def test_contention_windows_double_and_cap():
    assert EdcaParams().contention_windows() == [16, 32, 64, 128, 256, 512, 1024, 1024]


def test_model_timings_in_us():
    tm = model_timings(Scenario())
    assert tm.AIFS == 52.0 and tm.AIFS_RTA == 34.0 and tm.T_SR == 191.2
    assert tm.pca_overhead == pytest.approx(52 + 2 * 16 + 44 + 52)


def test_config_round_trip(tmp_path):
    cfg = load_config(overrides=["rta.sigma=500", "legacy.txop_limit=2000.5",
                                 "scenario.approach=pca", "rta.T_b=1234.5"])
    path = tmp_path / "c.ini"
    path.write_text(dump_config(cfg))
    again = load_config(path, require_all=True)
    assert again == cfg
    assert again.scenario.rta.T_b == 1_234_500
    assert again.scenario.approach is Approach.PCA


def test_default_config_matches_dataclass_defaults():
    assert load_config() == Config()


def test_unknown_key_named():
    with pytest.raises(ConfigError) as e:
        parse_overrides(["rta.sigmaa=1"])
    assert e.value.key == "rta.sigmaa"


def test_missing_key_named(tmp_path):
    text = dump_config(Config()).replace("AIFSN = 4\n", "")
    path = tmp_path / "c.ini"
    path.write_text(text)
    with pytest.raises(ConfigError) as e:
        load_config(path, require_all=True)
    assert e.value.key == "legacy.AIFSN"


def test_bad_value_named():
    with pytest.raises(ConfigError) as e:
        load_config(overrides=["scenario.N=ten"])
    assert e.value.key == "scenario.N"


def test_approach_parse():
    assert Approach.parse(" PCA ") is Approach.PCA
    with pytest.raises(ConfigError):
        Approach.parse("reserve")


def test_shipped_example_config_is_the_default():
    from pathlib import Path
    from wifi_rta.params import Config, load_config
    path = Path(__file__).resolve().parents[1] / "configs" / "default.ini"
    assert load_config(path, require_all=True) == Config()
