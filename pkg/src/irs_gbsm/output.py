"""Deterministic CSV/manifest writing shared by the CLI subcommands.

Floats are formatted with ``repr`` (shortest round-trip), so equal inputs
produce byte-identical files; every run writes a manifest with the full
config echo and the SHA-256 of each output.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np


def fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path: Path, header: list[str], rows) -> Path:
    path = Path(path)
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")
    return path


def file_sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def trim_number(x: float) -> str:
    """Compact numeric tag for filenames: 2.0 -> "2", 0.5 -> "0.5"."""
    xf = float(x)
    if xf == int(xf):
        return str(int(xf))
    return repr(xf)


def stat_filename(stat: str, t: float, fc_ghz: float) -> str:
    return f"{stat}_{trim_number(t)}s_{trim_number(fc_ghz)}GHz.csv"


def curve_rows(curves):
    """Long-format rows (grid, real, imag, magnitude, kind, trials)."""
    for curve in curves:
        trials = curve.trials if curve.trials is not None else 0
        for lag, value in zip(curve.lags, curve.values):
            yield (float(lag), float(np.real(value)), float(np.imag(value)),
                   float(np.abs(value)), curve.kind, trials)


def write_manifest(outdir: Path, subcommand: str, config_dict: dict,
                   outputs: list[Path]) -> Path:
    manifest = {
        "subcommand": subcommand,
        "config": config_dict,
        "outputs": {p.name: file_sha256(p) for p in outputs},
        "format_version": 1,
    }
    path = Path(outdir) / "run_manifest.json"
    with open(path, "w", newline="\n") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path
