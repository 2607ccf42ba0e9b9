import json
from pathlib import Path

import numpy as np
import pytest

from irs_gbsm.cli import main
from irs_gbsm.config import parse_config
from irs_gbsm.geometry import element_offsets
from irs_gbsm.irs import cascaded_path_loss, optimal_phase, received_power
from irs_gbsm.output import file_sha256

SMALL = {
    "seed": 77,
    "fc_ghz": 62.0,
    "trials": 40,
    "rician_k_db": 5.0,
    "geometry": {"d_bi_m": [100.0, 0.0, 0.0], "d_iu_m": [200.0, 0.0, 0.0]},
    "bs": {"speed_mps": 10.0},
    "user": {"speed_mps": 10.0, "velocity_azimuth_deg": 90.0},
    "irs": {"m_x": 2, "m_y": 2, "phase_bits": 2},
    "clusters": {"birth_rate": 12.0, "rays_per_cluster": 5,
                 "speed_a_mps": 5.0, "speed_z_mps": 5.0},
    "acf": {"anchors_s": [0.0], "num_lags": 9},
    "time": {"start_s": 0.0, "stop_s": 1.0, "num": 2},
    "doppler": {"start_s": 0.0, "stop_s": 1.0, "num": 3},
    "ds_cdf": {"sigma_scales": [1.0], "t_s": 0.0},
}


@pytest.fixture
def config_path(tmp_path):
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(SMALL))
    return path


def run(sub, config_path, out, *extra):
    return main([sub, "--config", str(config_path), "--out", str(out),
                 "--threads", "1", *extra])


def manifest(outdir):
    return json.loads((Path(outdir) / "run_manifest.json").read_text())


class TestSubcommands:
    def test_acf_outputs(self, config_path, tmp_path):
        out = tmp_path / "acf"
        assert run("acf", config_path, out) == 0
        files = sorted(p.name for p in out.glob("*.csv"))
        assert files == ["acf_2bit_0s_62GHz.csv", "acf_continuous_0s_62GHz.csv"]
        header = (out / files[0]).read_text().splitlines()[0]
        assert header == "dt_s,real,imag,magnitude,kind,trials"
        body = (out / files[0]).read_text().splitlines()[1:]
        kinds = {line.split(",")[4] for line in body}
        assert kinds == {"sim", "analytical"}

    def test_acf_single_element_file_name(self, config_path, tmp_path):
        cfg = dict(SMALL, irs={"m_x": 1, "m_y": 1})
        p = tmp_path / "single.json"
        p.write_text(json.dumps(cfg))
        out = tmp_path / "acf1"
        assert run("acf", p, out) == 0
        assert (out / "acf_0s_62GHz.csv").exists()

    def test_ccf(self, config_path, tmp_path):
        out = tmp_path / "ccf"
        assert run("ccf", config_path, out) == 0
        assert (out / "ccf_0s_62GHz.csv").exists()

    def test_doppler(self, config_path, tmp_path):
        out = tmp_path / "dop"
        assert run("doppler", config_path, out) == 0
        lines = (out / "doppler_0s_62GHz.csv").read_text().splitlines()
        assert len(lines) == 1 + 3

    def test_ds_cdf(self, config_path, tmp_path):
        out = tmp_path / "ds"
        assert run("ds-cdf", config_path, out) == 0
        lines = (out / "ds_cdf_sigma1_0s_62GHz.csv").read_text().splitlines()
        levels = [float(l.split(",")[1]) for l in lines[1:]]
        assert levels == sorted(levels) and levels[-1] == 1.0

    def test_cluster_evolve(self, config_path, tmp_path):
        out = tmp_path / "ev"
        assert run("cluster-evolve", config_path, out) == 0
        lines = (out / "cluster_visibility.csv").read_text().splitlines()
        assert lines[0] == "x,y,cluster_id,visible"
        assert all(line.endswith(",1") for line in lines[1:])

    def test_link_budget_values(self, config_path, tmp_path):
        out = tmp_path / "lb"
        assert run("link-budget", config_path, out) == 0
        rows = dict(line.split(",") for line in
                    (out / "link_budget.csv").read_text().splitlines()[1:])
        cfg = parse_config(SMALL)
        scene = cfg.scene()
        layout = cfg.irs.layout()
        l_r = element_offsets(layout)
        r_t = np.linalg.norm(scene.d_bi + l_r, axis=1)
        r_r = np.linalg.norm(scene.d_iu - l_r, axis=1)
        phases = optimal_phase(r_t, r_r, cfg.wavelength)
        expect_pr = received_power(1.0, layout, r_t, r_r, phases, cfg.wavelength)
        expect_pl = cascaded_path_loss(layout, r_t, r_r, cfg.wavelength)
        assert float(rows["received_power_w_continuous"]) == pytest.approx(
            expect_pr, rel=1e-12)
        assert float(rows["cascaded_path_gain"]) == pytest.approx(expect_pl, rel=1e-12)
        assert float(rows["received_power_w_2bit"]) <= expect_pr * (1 + 1e-9)

    def test_simulate(self, config_path, tmp_path):
        out = tmp_path / "sim"
        assert run("simulate", config_path, out) == 0
        for name in ("cir_bi.csv", "cir_iu.csv", "cir_bu.csv",
                     "channel_matrix.csv", "phase_plan.csv"):
            assert (out / name).exists()
        header = (out / "cir_bi.csv").read_text().splitlines()[0]
        assert header == "t,tx,rx,cluster,ray,delay_s,amplitude,phase_rad,is_los"
        matrix_header = (out / "channel_matrix.csv").read_text().splitlines()[0]
        assert matrix_header == "t,f,q,p,re,im,phase_resolution"
        plan_lines = (out / "phase_plan.csv").read_text().splitlines()
        assert plan_lines[0] == "r,x,y,phase_rad,quantized_phase_rad"
        assert len(plan_lines) == 1 + 4


class TestDeterminism:
    def test_identical_reruns(self, config_path, tmp_path):
        assert run("acf", config_path, tmp_path / "a") == 0
        assert run("acf", config_path, tmp_path / "b") == 0
        assert manifest(tmp_path / "a")["outputs"] == manifest(tmp_path / "b")["outputs"]

    def test_thread_count_invariance(self, config_path, tmp_path):
        assert main(["acf", "--config", str(config_path), "--out",
                     str(tmp_path / "t1"), "--threads", "1"]) == 0
        assert main(["acf", "--config", str(config_path), "--out",
                     str(tmp_path / "t2"), "--threads", "2"]) == 0
        assert manifest(tmp_path / "t1")["outputs"] == manifest(tmp_path / "t2")["outputs"]

    def test_seed_override_changes_results(self, config_path, tmp_path):
        assert run("acf", config_path, tmp_path / "s1") == 0
        assert run("acf", config_path, tmp_path / "s2", "--seed", "123") == 0
        assert manifest(tmp_path / "s1")["outputs"] != manifest(tmp_path / "s2")["outputs"]
        assert manifest(tmp_path / "s2")["config"]["seed"] == 123

    def test_manifest_hashes_match_files(self, config_path, tmp_path):
        out = tmp_path / "m"
        assert run("cluster-evolve", config_path, out) == 0
        for name, digest in manifest(out)["outputs"].items():
            assert file_sha256(out / name) == digest

    def test_manifest_config_is_parseable_echo(self, config_path, tmp_path):
        out = tmp_path / "echo"
        assert run("link-budget", config_path, out) == 0
        echoed = parse_config(manifest(out)["config"])
        assert echoed == parse_config(SMALL)


class TestErrors:
    def test_missing_config_file(self, tmp_path):
        assert main(["acf", "--config", str(tmp_path / "nope.json"),
                     "--out", str(tmp_path / "o")]) == 2

    def test_invalid_json(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{broken")
        assert main(["acf", "--config", str(bad), "--out", str(tmp_path / "o")]) == 2

    def test_schema_violation_reports_pointer(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"clusters": {"death_rate": -1}}))
        assert main(["acf", "--config", str(bad), "--out", str(tmp_path / "o")]) == 2
        assert "/clusters/death_rate" in capsys.readouterr().err

    def test_unwritable_output_dir(self, config_path, tmp_path):
        blocker = tmp_path / "blocked"
        blocker.write_text("a file, not a directory")
        assert run("acf", config_path, blocker) == 3

    def test_log_env_smoke(self, config_path, tmp_path, monkeypatch):
        monkeypatch.setenv("IRS_GBSM_LOG", "DEBUG")
        assert run("link-budget", config_path, tmp_path / "log") == 0
