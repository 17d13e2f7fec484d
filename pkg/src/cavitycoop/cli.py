"""``simulate`` command line front end.

Configuration files are TOML (or a JSON run manifest)::

    preset = "fig2"            # or an explicit [sweep] section
    out = "runs/fig2"
    workers = 1
    n_max = 16                 # optional initial truncation override
    plots = false

    [tolerances]
    steady = 1e-10             # steady-state residual
    truncation = 1e-6          # top Fock level population / max(n, 1)

    [sweep]
    label = "custom"
    axis = "pump"              # pump | coupling | detuning_symmetric |
                               # detuning_single | dephasing | n_emitters
    grid = [0.01, 0.1, 1.0]    # or start / stop / num / spacing
    outputs = ["observables", "cf"]

    [sweep.params]
    n_emitters = 2
    g = 1.0
    pump = 0.1
    n_max = 8
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import math
import os
import platform
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import scipy
import tomli

from . import __version__
from .cooperativity import (SweepPoint, SweepSpec, apply_axis, cooperative_fraction_value,
                            linear_grid, log_grid, run_sweep)
from .model import ParameterError, SystemParams
from .presets import PRESETS, preset_sweeps

log = logging.getLogger("cavitycoop")

RESULT_COLUMNS = ["value", "n", "Z", "nJ", "g2", "cf", "reference", "fwhm", "residual",
                  "truncation_tail", "status", "n_independent_sum", "n_max", "n_per_emitter",
                  "n_per_excited", "spectral_gap", "error"]

TOP_KEYS = {"preset", "out", "workers", "n_max", "plots", "tolerances", "sweep"}
TOLERANCE_KEYS = {"steady", "truncation"}
SWEEP_KEYS = {"label", "axis", "grid", "start", "stop", "num", "spacing", "outputs", "params"}
PARAM_KEYS = {f.name for f in dataclasses.fields(SystemParams)}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    preset: Optional[str] = None
    sweep: Optional[tuple] = None  # (label, SweepSpec)
    out: str = "results"
    workers: int = field(default_factory=lambda: os.cpu_count() or 1)
    n_max: Optional[int] = None
    steady_tol: float = 1e-10
    truncation_threshold: float = 1e-6
    plots: bool = False
    raw: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if (self.preset is None) == (self.sweep is None):
            raise ConfigError("exactly one of 'preset' or [sweep] must be given")

    def sweeps(self) -> list:
        items = preset_sweeps(self.preset) if self.preset else [self.sweep]
        out = []
        for label, spec in items:
            base = spec.base
            if self.n_max is not None:
                base = base.replace(n_max=self.n_max)
            out.append((label, dataclasses.replace(
                spec, base=base, tol=self.steady_tol,
                truncation_threshold=self.truncation_threshold)))
        return out


def _reject_unknown(section: dict, allowed: set, where: str):
    for key in section:
        if key not in allowed:
            raise ConfigError(f"unknown key {key!r} in {where}")


def _number(value, name, positive=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{name} must be a number, got {value!r}")
    if positive and not value > 0:
        raise ConfigError(f"{name} must be > 0, got {value!r}")
    return value


def _sweep_from_dict(d: dict) -> tuple:
    _reject_unknown(d, SWEEP_KEYS, "[sweep]")
    params = d.get("params")
    if not isinstance(params, dict):
        raise ConfigError("[sweep.params] section is required")
    _reject_unknown(params, PARAM_KEYS, "[sweep.params]")
    try:
        base = SystemParams(**params)
    except TypeError as exc:
        raise ConfigError(f"[sweep.params]: {exc}") from exc
    except ParameterError as exc:
        raise ConfigError(f"[sweep.params]: {exc}") from exc
    if "grid" in d:
        if any(k in d for k in ("start", "stop", "num")):
            raise ConfigError("give either 'grid' or start/stop/num, not both")
        grid = [_number(x, "grid entry") for x in d["grid"]]
    else:
        try:
            start, stop, num = d["start"], d["stop"], d["num"]
        except KeyError as exc:
            raise ConfigError(f"[sweep] needs 'grid' or start/stop/num (missing {exc})") from None
        spacing = d.get("spacing", "log")
        if spacing == "log":
            grid = log_grid(_number(start, "start", True), _number(stop, "stop", True), int(num))
        elif spacing == "linear":
            grid = linear_grid(_number(start, "start"), _number(stop, "stop"), int(num))
        else:
            raise ConfigError(f"spacing must be 'log' or 'linear', got {spacing!r}")
    outputs = tuple(d.get("outputs", ("observables", "cf")))
    try:
        spec = SweepSpec(base, d.get("axis", "pump"), grid, outputs=outputs)
    except ValueError as exc:
        raise ConfigError(f"[sweep]: {exc}") from exc
    # every grid point must give valid parameters
    for value in spec.grid:
        try:
            apply_axis(base, spec.axis, value)
        except ValueError as exc:
            raise ConfigError(f"[sweep] grid value {value:g} is invalid: {exc}") from exc
    return d.get("label", "sweep"), spec


def config_from_dict(data: dict) -> RunConfig:
    _reject_unknown(data, TOP_KEYS, "the top level")
    tolerances = data.get("tolerances", {})
    _reject_unknown(tolerances, TOLERANCE_KEYS, "[tolerances]")
    kwargs = {"raw": data}
    if "preset" in data:
        if data["preset"] not in PRESETS:
            raise ConfigError(f"unknown preset {data['preset']!r}; available: {sorted(PRESETS)}")
        kwargs["preset"] = data["preset"]
    if "sweep" in data:
        kwargs["sweep"] = _sweep_from_dict(data["sweep"])
    if "out" in data:
        kwargs["out"] = str(data["out"])
    if "workers" in data:
        kwargs["workers"] = int(_number(data["workers"], "workers", True))
    if "n_max" in data:
        kwargs["n_max"] = int(_number(data["n_max"], "n_max", True))
    if "plots" in data:
        kwargs["plots"] = bool(data["plots"])
    if "steady" in tolerances:
        kwargs["steady_tol"] = float(_number(tolerances["steady"], "tolerances.steady", True))
    if "truncation" in tolerances:
        kwargs["truncation_threshold"] = float(
            _number(tolerances["truncation"], "tolerances.truncation", True))
    return RunConfig(**kwargs)


def parse_config(path) -> RunConfig:
    """Read and validate a TOML config or a JSON run manifest."""
    path = Path(path)
    text = path.read_text()
    if path.suffix == ".json":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: parse error at line {exc.lineno}: {exc.msg}") from exc
        if "config" in data and "software" in data:
            data = data["config"]
    else:
        try:
            data = tomli.loads(text)
        except tomli.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: parse error: {exc}") from exc
    return config_from_dict(data)


def fmt(x) -> str:
    """Fixed 12-significant-digit formatting; undefined values become 'nan'."""
    if x is None:
        return "nan"
    if isinstance(x, str):
        return x
    x = float(x)
    if not math.isfinite(x):
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    return format(x, ".12g")


def result_row(point: SweepPoint) -> list:
    rec = point.record
    coop = point.coop
    n = float(fmt(rec.n)) if rec else None
    n_sum = float(fmt(math.fsum(coop.independent_n))) if coop else None
    # cf from the rounded photon numbers, so every row is self-consistent
    cf = cooperative_fraction_value(n, [n_sum]) if coop else None
    spec = point.spectrum
    return [
        fmt(point.value),
        fmt(n),
        fmt(rec.Z if rec else None),
        fmt(rec.nJ if rec else None),
        fmt(rec.g2 if rec else None),
        fmt(cf),
        fmt(coop.reference if coop else None),
        fmt(spec.fwhm if spec else None),
        fmt(point.residual),
        fmt(point.truncation_tail),
        point.status,
        fmt(n_sum),
        str(point.params.n_max),
        fmt(rec.n_per_emitter if rec else None),
        fmt(rec.n_per_excited if rec else None),
        fmt(point.spectral_gap),
        (point.error or "").replace("\n", " "),
    ]


def write_spectrum(path: Path, spectrum, floor: float = 1e-6):
    S = spectrum.S
    keep = np.flatnonzero(S >= floor * S.max())
    lo, hi = keep[0], keep[-1] + 1
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["omega", "S"])
        for omega, s in zip(spectrum.omega_grid[lo:hi], S[lo:hi]):
            w.writerow([fmt(omega), fmt(s)])


def plot_sweep(path: Path, label: str, axis: str, points: list):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    ok = [p for p in points if p.record is not None]
    x = [p.value for p in ok]
    fig, axes = plt.subplots(3, 1, figsize=(5, 8), sharex=True)
    axes[0].plot(x, [p.record.n for p in ok], "o-")
    axes[0].set_ylabel("n")
    axes[1].plot(x, [p.coop.cf if p.coop and p.coop.cf is not None else np.nan for p in ok], "o-")
    axes[1].axhline(0, color="k", lw=0.5)
    axes[1].set_ylabel("C_f")
    axes[2].plot(x, [p.record.g2 if p.record.g2 is not None else np.nan for p in ok], "o-")
    axes[2].set_ylabel("g2(0)")
    axes[2].set_xlabel(axis)
    if axis == "pump" or all(v > 0 for v in x):
        for a in axes:
            a.set_xscale("log")
    axes[0].set_yscale("log")
    axes[0].set_title(label)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def manifest(config: RunConfig, sweeps: list, warnings: int) -> dict:
    return {
        "software": {
            "cavitycoop": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
        "config": config.raw,
        "tolerances": {"steady": config.steady_tol, "truncation": config.truncation_threshold},
        "sweeps": [
            {
                "label": label,
                "axis": spec.axis,
                "grid": spec.grid,
                "outputs": list(spec.outputs),
                "base": spec.base.as_dict(),
            }
            for label, spec in sweeps
        ],
        "warnings": warnings,
    }


def run(config: RunConfig) -> int:
    """Execute every sweep of ``config``; returns the process exit status."""
    out = Path(config.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        log.error("cannot create output directory %s: %s", out, exc)
        return 2
    sweeps = config.sweeps()
    warnings = 0
    for label, spec in sweeps:
        target = out if len(sweeps) == 1 else out / label
        target.mkdir(parents=True, exist_ok=True)
        points = []
        with open(target / "results.csv", "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow([spec.axis] + RESULT_COLUMNS[1:])
            for point in run_sweep(spec, workers=config.workers):
                writer.writerow(result_row(point))
                fh.flush()
                if point.spectrum is not None:
                    write_spectrum(target / f"spectrum_{point.index}.csv", point.spectrum)
                    point.spectrum = None if not config.plots else point.spectrum
                if point.status != "ok":
                    warnings += 1
                log.info("[%s %d/%d] %s=%.4g %s", label, point.index + 1, len(spec.grid),
                         spec.axis, point.value, point.status)
                points.append(point)
        if config.plots:
            plot_sweep(target / "results.svg", label, spec.axis, points)
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest(config, sweeps, warnings), fh, indent=2, sort_keys=True)
        fh.write("\n")
    if warnings:
        log.warning("%d sweep point(s) did not finish with status ok", warnings)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="simulate",
        description="Steady states, photon statistics, spectra and cooperative fraction "
                    "of N pumped emitters in a lossy cavity.")
    parser.add_argument("--config", help="TOML config file or JSON run manifest")
    parser.add_argument("--preset", choices=sorted(PRESETS), help="run a built-in preset")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--workers", type=int, help="parallel sweep workers")
    parser.add_argument("--plots", action="store_true", help="also write SVG plots")
    parser.add_argument("-v", "--verbose", action="store_true")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        if args.config:
            config = parse_config(args.config)
        elif args.preset:
            config = config_from_dict({"preset": args.preset})
        else:
            parser.error("one of --config or --preset is required")
        if args.preset and args.config:
            data = dict(config.raw)
            data.pop("sweep", None)
            data["preset"] = args.preset
            config = config_from_dict(data)
        overrides = {}
        if args.out:
            overrides["out"] = args.out
        if args.workers is not None:
            if args.workers < 1:
                raise ConfigError("--workers must be >= 1")
            overrides["workers"] = args.workers
        if args.plots:
            overrides["plots"] = True
        if overrides:
            config = config_from_dict({**config.raw, **overrides})
    except (ConfigError, OSError) as exc:
        print(f"simulate: error: {exc}", file=sys.stderr)
        return 2
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
