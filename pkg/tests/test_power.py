"""Power model: paper-anchored currents, back-solved idle profiles."""

import json

import pytest

from tactilesim.errors import ConfigError
from tactilesim.power import (
    PowerProfile,
    avg_current_ma,
    builtin_power_profile,
    extension_pct,
    lifetime_hours,
    lifetime_table,
    load_power_profile,
)

WIFI = builtin_power_profile("wifi")
BLE = builtin_power_profile("ble")


def test_continuous_currents_match_measurements():
    assert avg_current_ma(WIFI, 1.0) == 152.47
    assert avg_current_ma(BLE, 1.0) == 101.31


def test_idle_floor():
    assert avg_current_ma(WIFI, 0.0) == WIFI.i_idle_ma
    assert avg_current_ma(BLE, 0.0) == BLE.i_idle_ma


def test_lifetime_at_continuous_drain():
    assert lifetime_hours(WIFI, 1.0) == pytest.approx(7.87, abs=0.005)
    assert lifetime_hours(BLE, 1.0) == pytest.approx(11.84, abs=0.005)


def test_halving_current_doubles_lifetime():
    profile = PowerProfile("x", i_send_delta_ma=50.0, i_idle_ma=50.0, battery_mah=1000.0)
    assert lifetime_hours(profile, 0.0) == 2 * lifetime_hours(profile, 1.0)


def test_extension_claims_at_one_percent_duty():
    assert extension_pct(WIFI, 0.01) >= 42.0
    assert extension_pct(BLE, 0.01) >= 20.0


def test_extension_identity_at_continuous():
    assert extension_pct(WIFI, 1.0) == 0.0
    assert extension_pct(BLE, 1.0) == 0.0


def test_extension_monotone_non_increasing_in_duty():
    for profile in (WIFI, BLE):
        points = [extension_pct(profile, k / 10) for k in range(11)]
        assert all(a >= b for a, b in zip(points, points[1:]))


def test_avg_current_affine_non_decreasing():
    for profile in (WIFI, BLE):
        currents = [avg_current_ma(profile, k / 10) for k in range(11)]
        assert all(b >= a for a, b in zip(currents, currents[1:]))
        slope = currents[1] - currents[0]
        for a, b in zip(currents, currents[1:]):
            assert b - a == pytest.approx(slope, abs=1e-9)


def test_lifetime_roundtrip_identity():
    for t_a in (0.0, 0.3, 1.0):
        assert lifetime_hours(WIFI, t_a) * avg_current_ma(WIFI, t_a) == pytest.approx(
            WIFI.battery_mah
        )


def test_table_rows():
    table = lifetime_table(BLE)
    assert [row["tA"] for row in table] == [0.0, 0.01, 0.05, 0.1, 0.5, 1.0]
    assert table[-1]["avgCurrentMa"] == 101.31
    assert table[0]["avgCurrentMa"] == BLE.i_idle_ma


def test_zero_current_is_an_error():
    dead = PowerProfile("x", i_send_delta_ma=0.0, i_idle_ma=0.0)
    with pytest.raises(ValueError):
        lifetime_hours(dead, 0.5)


def test_duty_cycle_domain():
    with pytest.raises(ValueError):
        avg_current_ma(WIFI, 1.5)


def test_profile_json_loading(tmp_path):
    path = tmp_path / "p.json"
    path.write_text(json.dumps({"protocol": "ble", "iSendDeltaMa": 10, "iIdleMa": 40}))
    profile = load_power_profile(path)
    assert profile.battery_mah == 1200.0
    path.write_text(json.dumps({"iIdleMa": 40}))
    with pytest.raises(ConfigError, match="iSendDeltaMa"):
        load_power_profile(path)
    with pytest.raises(ConfigError):
        builtin_power_profile("lora")
