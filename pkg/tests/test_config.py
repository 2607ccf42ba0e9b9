import json
import math

import numpy as np
import pytest

from irs_gbsm.config import (
    ConfigError,
    DEFAULTS,
    parse_config,
    serialize_config,
)
from irs_gbsm.rng import rng_stream, seed_sequence


class TestParsing:
    def test_defaults_only(self):
        cfg = parse_config({})
        assert cfg.seed == DEFAULTS["seed"]
        assert cfg.fc_ghz == 62.0
        half_wl = cfg.wavelength / 2
        assert cfg.bs.spacing_m == pytest.approx(half_wl)
        assert cfg.irs.spacing_x_m == pytest.approx(half_wl)

    def test_round_trip(self):
        cfg = parse_config({
            "seed": 9, "fc_ghz": 28.0, "rician_k_db": 5.0,
            "irs": {"m_x": 4, "m_y": 2, "phase_bits": 2},
            "clusters": {"birth_rate": 30.0},
        })
        again = parse_config(serialize_config(cfg))
        assert again == cfg

    def test_round_trip_through_json_text(self):
        cfg = parse_config({"seed": 3, "user": {"speed_mps": 4.0}})
        text = json.dumps(serialize_config(cfg))
        assert parse_config(text) == cfg

    def test_degrees_to_radians(self):
        cfg = parse_config({"bs": {"azimuth_deg": 90.0, "elevation_deg": 45.0}})
        layout = cfg.bs.layout("BS")
        assert layout.azimuths[0] == pytest.approx(math.pi / 2)
        assert layout.elevations[0] == pytest.approx(math.pi / 4)

    def test_rician_conversion(self):
        assert parse_config({}).k_linear == 0.0
        assert parse_config({"rician_k_db": 0.0}).k_linear == pytest.approx(1.0)
        assert parse_config({"rician_k_db": 10.0}).k_linear == pytest.approx(10.0)

    def test_velocity_vector(self):
        cfg = parse_config({"user": {"speed_mps": 2.0, "velocity_azimuth_deg": 90.0}})
        assert np.allclose(cfg.user.velocity(), [0.0, 2.0, 0.0], atol=1e-12)

    def test_lag_grids(self):
        log_cfg = parse_config({"acf": {"grid": "log", "lag_min_s": 1e-4,
                                        "lag_max_s": 0.1, "num_lags": 11}})
        lags = log_cfg.lag_grid()
        assert lags[0] == 0.0 and lags[1] == pytest.approx(1e-4)
        assert lags[-1] == pytest.approx(0.1)
        lin_cfg = parse_config({"acf": {"grid": "linear", "lag_max_s": 0.2,
                                        "num_lags": 5}})
        assert np.allclose(lin_cfg.lag_grid(), [0.0, 0.05, 0.1, 0.15, 0.2])

    def test_geometry_third_vector_derived(self):
        cfg = parse_config({"geometry": {"d_bi_m": [50.0, 0.0, 0.0],
                                         "d_iu_m": None,
                                         "d_bu_m": [150.0, 10.0, 0.0]}})
        scene = cfg.scene()
        assert np.allclose(scene.d_iu, [100.0, 10.0, 0.0])


class TestValidationErrors:
    def test_schema_violation_has_pointer(self):
        with pytest.raises(ConfigError) as err:
            parse_config({"clusters": {"birth_rate": -3.0}})
        assert err.value.pointer == "/clusters/birth_rate"

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError):
            parse_config({"unknown_section": 1})

    def test_wrong_type_rejected(self):
        with pytest.raises(ConfigError) as err:
            parse_config({"irs": {"m_x": "four"}})
        assert "/irs/m_x" == err.value.pointer

    def test_geometry_needs_two_vectors(self):
        with pytest.raises(ConfigError) as err:
            parse_config({"geometry": {"d_bi_m": [1.0, 0, 0], "d_iu_m": None,
                                       "d_bu_m": None}})
        assert err.value.pointer == "/geometry"

    def test_non_object_rejected(self):
        with pytest.raises(ConfigError):
            parse_config("[1, 2]")

    def test_invalid_json_text(self):
        with pytest.raises(ConfigError):
            parse_config("{not json")


class TestRngStreams:
    def test_same_path_same_sequence(self):
        a = rng_stream(7, "trial", 3, "BI").standard_normal(32)
        b = rng_stream(7, "trial", 3, "BI").standard_normal(32)
        assert np.array_equal(a, b)

    def test_different_paths_uncorrelated(self):
        n = 100_000
        a = rng_stream(7, "trial", 0).standard_normal(n)
        b = rng_stream(7, "trial", 1).standard_normal(n)
        c = rng_stream(7, "other", 0).standard_normal(n)
        assert abs(np.corrcoef(a, b)[0, 1]) < 0.01
        assert abs(np.corrcoef(a, c)[0, 1]) < 0.01

    def test_trial_streams_stable_under_extension(self):
        # stream of trial k does not depend on how many trials a run has
        early = [rng_stream(5, "trial", k).integers(0, 1 << 31, 8) for k in range(3)]
        late = [rng_stream(5, "trial", k).integers(0, 1 << 31, 8) for k in range(10)]
        for k in range(3):
            assert np.array_equal(early[k], late[k])

    def test_string_and_int_tokens_distinct(self):
        a = seed_sequence(1, "2").generate_state(4)
        b = seed_sequence(1, 2).generate_state(4)
        assert not np.array_equal(a, b)

    def test_seed_matters(self):
        a = rng_stream(1, "x").standard_normal(8)
        b = rng_stream(2, "x").standard_normal(8)
        assert not np.array_equal(a, b)
