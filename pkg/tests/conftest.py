"""Shared scenario builders for the test suite."""

import pytest

from irs_gbsm.config import parse_config


def make_config(**overrides):
    """Small, fast scenario; keyword args overlay the base dict."""
    base = {
        "seed": 1234,
        "fc_ghz": 62.0,
        "trials": 200,
        "rician_k_db": None,
        "geometry": {"d_bi_m": [100.0, 0.0, 0.0], "d_iu_m": [200.0, 0.0, 0.0]},
        "bs": {"speed_mps": 10.0, "velocity_azimuth_deg": 0.0},
        "user": {"speed_mps": 10.0, "velocity_azimuth_deg": 90.0},
        "clusters": {"birth_rate": 20.0, "death_rate": 4.0, "rays_per_cluster": 10,
                     "speed_a_mps": 5.0, "speed_z_mps": 5.0},
        "acf": {"anchors_s": [0.0, 2.0], "lag_max_s": 0.1, "lag_min_s": 1e-5,
                "num_lags": 21, "grid": "log"},
    }
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(base.get(key), dict):
            base[key] = {**base[key], **value}
        else:
            base[key] = value
    return parse_config(base)


@pytest.fixture
def small_cfg():
    return make_config()


@pytest.fixture
def static_cfg():
    return make_config(
        bs={"speed_mps": 0.0}, user={"speed_mps": 0.0},
        clusters={"speed_a_mps": 0.0, "speed_z_mps": 0.0})
