"""Config parsing: defaults, field validation, idempotence."""

import json

import pytest

from tactilesim.config import (
    DeviceConfig,
    parse_config,
    parse_devices,
    pot_step_for,
    serialize_config,
)
from tactilesim.errors import ConfigError

MINIMAL = '{"deviceId":1,"rows":32,"cols":32,"protocol":"wifi"}'


def test_minimal_config_fills_defaults():
    cfg = parse_config(MINIMAL)
    assert isinstance(cfg, DeviceConfig)
    assert cfg.device_id == 1
    assert (cfg.rows, cfg.cols) == (32, 32)
    assert cfg.adc_bits == 12
    assert cfg.v_ref == 0.9
    assert cfg.v_supply == 3.3
    assert cfg.protocol == "wifi"
    assert cfg.p == 1 and cfg.d == 0
    assert cfg.intermittent is False
    assert cfg.scan_delay_us == 0
    assert cfg.read_area is None
    assert cfg.area() == (0, 0, 31, 31)
    assert cfg.calibration.duration_ms == 5000
    assert cfg.calibration.min_percentile == 1.0
    assert cfg.r_pot == 3125.0
    assert cfg.full_scale == 4095


def test_rows_exceeding_bound_names_the_field():
    with pytest.raises(ConfigError, match="rows exceeds 32"):
        parse_config('{"deviceId":1,"rows":33,"cols":4}')
    with pytest.raises(ConfigError, match="cols exceeds 32"):
        parse_config('{"deviceId":1,"rows":4,"cols":40}')


def test_r_pot_grid():
    cfg = parse_config('{"deviceId":1,"rows":2,"cols":2,"rPot":14062.5}')
    assert cfg.r_pot == 14062.5
    assert pot_step_for(cfg.r_pot) == 36
    for bad in (14000.0, 390.0, 50390.625, 0.0, -390.625):
        with pytest.raises(ConfigError, match="rPot"):
            parse_config(json.dumps({"deviceId": 1, "rows": 2, "cols": 2, "rPot": bad}))


def test_malformed_json_reports_location():
    with pytest.raises(ConfigError, match=r"line 1 column"):
        parse_config('{"deviceId": }')


@pytest.mark.parametrize(
    "patch, message",
    [
        ({"deviceId": 300}, "deviceId"),
        ({"rows": 0}, "rows must be >= 1"),
        ({"vRef": 3.4}, "vRef"),
        ({"protocol": "zigbee"}, "protocol"),
        ({"p": 0}, "p must be >= 1"),
        ({"d": -1}, "d must be >= 0"),
        ({"scanDelayUs": -5}, "scanDelayUs"),
        ({"readArea": [[0, 0], [2, 40]]}, "readArea"),
        ({"calibration": {"minPercentile": 0}}, "minPercentile"),
        ({"intermittent": 1}, "intermittent"),
        ({"bogusField": 1}, "unknown config field"),
    ],
)
def test_field_validation(patch, message):
    base = {"deviceId": 1, "rows": 4, "cols": 4}
    base.update(patch)
    with pytest.raises(ConfigError, match=message):
        parse_config(json.dumps(base))


def test_list_and_wrapper_forms():
    as_list = parse_config('[{"deviceId":1,"rows":2,"cols":2},{"deviceId":2,"rows":2,"cols":2}]')
    assert isinstance(as_list, list) and len(as_list) == 2
    wrapped = parse_devices('{"devices":[{"deviceId":5,"rows":2,"cols":2}]}')
    assert wrapped[0].device_id == 5
    single = parse_devices(MINIMAL)
    assert len(single) == 1


def test_parse_serialize_idempotent():
    text = json.dumps(
        {
            "deviceId": 3,
            "rows": 8,
            "cols": 16,
            "protocol": "espnow",
            "p": 29,
            "d": 26,
            "intermittent": True,
            "scanDelayUs": 10000,
            "readArea": [[1, 2], [5, 7]],
            "rPot": 14062.5,
        }
    )
    once = parse_config(text)
    again = parse_config(serialize_config(once))
    assert once == again


def test_read_area_normalization():
    cfg = parse_config('{"deviceId":1,"rows":8,"cols":8,"readArea":[[5,7],[2,3]]}')
    assert cfg.area() == (2, 3, 5, 7)
    assert cfg.area_shape() == (4, 5)
