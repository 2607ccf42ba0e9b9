"""Command-line experiment runner.

    irs-gbsm <subcommand> --config scenario.json --out outdir [--threads N] [--seed S]

Subcommands: simulate, acf, ccf, doppler, ds-cdf, cluster-evolve,
link-budget.  Every run writes CSV outputs plus ``run_manifest.json`` (config
echo and content hashes); identical config + seed reproduce identical bytes.
Exit codes: 0 success, 2 config error, 3 runtime error.  Set ``IRS_GBSM_LOG``
to a logging level name for diagnostics.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import stats
from .assembly import cascade, large_scale_factors, phase_model_for
from .clusters import evolve_visibility, realize_subchannel
from .config import ConfigError, ScenarioConfig, parse_config, serialize_config
from .geometry import element_offsets
from .irs import cascaded_path_loss, optimal_phase, quantize_phase, received_power
from .largescale import db_to_linear, path_loss_bu_db
from .output import curve_rows, stat_filename, write_csv, write_manifest
from .rng import rng_stream
from .smallscale import cir_rows

log = logging.getLogger("irs_gbsm")


def _run_acf(cfg: ScenarioConfig, outdir: Path, threads: int) -> list[Path]:
    outputs = []
    m_xy = cfg.irs.m_x * cfg.irs.m_y
    for t in cfg.acf["anchors_s"]:
        if m_xy == 1:
            curves = stats.acf_single_irs_element(cfg, t, threads=threads)
            path = outdir / stat_filename("acf", t, cfg.fc_ghz)
            outputs.append(write_csv(
                path, ["dt_s", "real", "imag", "magnitude", "kind", "trials"],
                curve_rows([curves["sim"], curves["analytical"]])))
            continue
        variants = ("config",) if cfg.irs.phase_bits is None else (None, "config")
        results = stats.acf_full_irs(cfg, t, bits_variants=variants, threads=threads)
        multi = len(results) > 1
        for label, pair in results.items():
            stat = f"acf_{label}" if multi else "acf"
            path = outdir / stat_filename(stat, t, cfg.fc_ghz)
            outputs.append(write_csv(
                path, ["dt_s", "real", "imag", "magnitude", "kind", "trials"],
                curve_rows([pair["sim"], pair["analytical"]])))
    return outputs


def _run_ccf(cfg: ScenarioConfig, outdir: Path, threads: int) -> list[Path]:
    curves = stats.ccf_spatial(cfg, threads=threads)
    path = outdir / stat_filename("ccf", cfg.ccf["t_s"], cfg.fc_ghz)
    return [write_csv(path,
                      ["separation_m", "real", "imag", "magnitude", "kind", "trials"],
                      curve_rows([curves["sim"], curves["analytical"]]))]


def _run_doppler(cfg: ScenarioConfig, outdir: Path, threads: int) -> list[Path]:
    times, spread = stats.doppler_spread_series(cfg, threads=threads)
    path = outdir / stat_filename("doppler", times[0], cfg.fc_ghz)
    rows = [(float(t), float(b), 0.0, float(b), "sim", cfg.trials)
            for t, b in zip(times, spread)]
    return [write_csv(path, ["t_s", "real", "imag", "magnitude", "kind", "trials"], rows)]


def _run_ds_cdf(cfg: ScenarioConfig, outdir: Path, threads: int) -> list[Path]:
    samples = stats.ds_cdf(cfg, threads=threads)
    outputs = []
    t = cfg.ds_cdf["t_s"]
    for scale, values in samples.items():
        xs, levels = stats.empirical_cdf(values)
        rows = [(float(x), float(c), 0.0, float(c), "sim", len(xs))
                for x, c in zip(xs, levels)]
        path = outdir / stat_filename(f"ds_cdf_sigma{scale:g}", t, cfg.fc_ghz)
        outputs.append(write_csv(
            path, ["ds_s", "real", "imag", "magnitude", "kind", "trials"], rows))
    return outputs


def _run_cluster_evolve(cfg: ScenarioConfig, outdir: Path, threads: int) -> list[Path]:
    del threads
    tensor = evolve_visibility(cfg.irs.layout(), cfg.clusters,
                               rng_stream(cfg.seed, "evolve", 0))
    path = outdir / "cluster_visibility.csv"
    out = write_csv(path, ["x", "y", "cluster_id", "visible"], tensor.rows())
    log.info("mean visible clusters per element: %.3f", tensor.mean_visible())
    return [out]


def _run_link_budget(cfg: ScenarioConfig, outdir: Path, threads: int) -> list[Path]:
    del threads
    scene = cfg.scene()
    layout = cfg.irs.layout()
    l_r = element_offsets(layout)
    r_t = np.linalg.norm(scene.d_bi + l_r, axis=1)
    r_r = np.linalg.norm(scene.d_iu - l_r, axis=1)
    wl = cfg.wavelength
    phases = optimal_phase(r_t, r_r, wl)
    p_t = 1.0
    pl_biu = cascaded_path_loss(layout, r_t, r_r, wl)
    pl_bu_db = path_loss_bu_db(float(np.linalg.norm(scene.d_bu)) / 1e3, cfg.fc_ghz,
                               cfg.large_scale.params("bu"))
    rows = [
        ("fc_ghz", cfg.fc_ghz),
        ("wavelength_m", wl),
        ("tx_power_w", p_t),
        ("received_power_w_continuous", received_power(p_t, layout, r_t, r_r, phases, wl)),
        ("received_power_w_2bit",
         received_power(p_t, layout, r_t, r_r, quantize_phase(phases, 2), wl)),
        ("cascaded_path_gain", pl_biu),
        ("cascaded_path_gain_db", 10.0 * np.log10(pl_biu)),
        ("direct_path_loss_db", pl_bu_db),
        ("direct_path_gain", db_to_linear(pl_bu_db)),
    ]
    path = outdir / "link_budget.csv"
    return [write_csv(path, ["quantity", "value"], rows)]


def _run_simulate(cfg: ScenarioConfig, outdir: Path, threads: int) -> list[Path]:
    del threads
    times = cfg.time_grid()
    outputs = []
    reals = {kind: realize_subchannel(cfg, kind, rng_stream(cfg.seed, "trial", 0, kind))
             for kind in ("BI", "IU", "BU")}
    for kind, real in reals.items():
        rows = []
        for t in times:
            for tx in range(1, real.tx_layout.num_elements + 1):
                for rx in range(1, real.rx_layout.num_elements + 1):
                    rows.extend(cir_rows(real, float(t), tx, rx))
        path = outdir / f"cir_{kind.lower()}.csv"
        outputs.append(write_csv(
            path, ["t", "tx", "rx", "cluster", "ray", "delay_s", "amplitude",
                   "phase_rad", "is_los"], rows))

    model = phase_model_for(cfg)
    ls = None
    if cfg.large_scale.enabled:
        ls = large_scale_factors(cfg, rng_stream(cfg.seed, "large_scale"))
    matrix_rows = []
    for t in times:
        channel = cascade(float(t), cfg.eval_offset_hz, reals, model,
                          include_direct=True, large_scale=ls)
        matrix_rows.extend(channel.rows())
    outputs.append(write_csv(
        outdir / "channel_matrix.csv",
        ["t", "f", "q", "p", "re", "im", "phase_resolution"], matrix_rows))
    outputs.append(write_csv(
        outdir / "phase_plan.csv",
        ["r", "x", "y", "phase_rad", "quantized_phase_rad"],
        model.plan(float(times[0])).rows()))
    return outputs


_SUBCOMMANDS = {
    "simulate": _run_simulate,
    "acf": _run_acf,
    "ccf": _run_ccf,
    "doppler": _run_doppler,
    "ds-cdf": _run_ds_cdf,
    "cluster-evolve": _run_cluster_evolve,
    "link-budget": _run_link_budget,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="irs-gbsm",
        description="IRS-assisted non-stationary GBSM channel simulator")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in _SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, type=Path,
                       help="scenario JSON file")
        p.add_argument("--out", required=True, type=Path,
                       help="output directory (created if missing)")
        p.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                       help="worker pool size (results are thread-count independent)")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config seed")
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=os.environ.get("IRS_GBSM_LOG", "WARNING").upper())
    args = build_parser().parse_args(argv)
    try:
        raw = json.loads(Path(args.config).read_text())
        if args.seed is not None:
            raw["seed"] = args.seed
        cfg = parse_config(raw)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        outputs = _SUBCOMMANDS[args.subcommand](cfg, outdir, args.threads)
        manifest = write_manifest(outdir, args.subcommand, serialize_config(cfg), outputs)
        log.info("wrote %d outputs and %s", len(outputs), manifest)
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # noqa: BLE001 - report and map to exit code
        print(f"runtime error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
