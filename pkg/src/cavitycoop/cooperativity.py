"""Cooperative fraction and parameter sweeps.

The cooperative fraction compares the photon number of N emitters sharing
one cavity with the summed photon numbers of the same emitters, each in a
cavity of its own:  cf = (n_shared - sum_i n_single_i) / n_shared.
"""
from __future__ import annotations

import logging
import math
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterator, Optional

import numpy as np
from scipy.optimize import brentq

from .checks import liouvillian_checks
from .model import SystemParams, build_liouvillian
from .observables import SMALL_N, ObservableRecord, SpectrumTrace, emission_spectrum, observe
from .steady_state import (DEFAULT_TOL, TRUNCATION_THRESHOLD, TruncationVerdict, check_truncation,
                           solve_adequate, solve_steady)

log = logging.getLogger(__name__)

AXES = ("pump", "coupling", "detuning_symmetric", "detuning_single", "dephasing", "n_emitters")
OUTPUTS = ("observables", "cf", "spectrum")
MAX_N_MAX = 256


class SubsystemError(RuntimeError):
    """A constituent solve failed; the message names the subsystem."""


@dataclass
class CooperativityPoint:
    cf: Optional[float]
    shared_n: float
    independent_n: list
    reference: Optional[float]
    record: ObservableRecord

    def recompute(self) -> Optional[float]:
        return cooperative_fraction_value(self.shared_n, self.independent_n)


def cooperative_fraction_value(shared_n: float, independent_n) -> Optional[float]:
    if shared_n < SMALL_N:
        return None
    return (shared_n - math.fsum(independent_n)) / shared_n


def reference_measure(record: ObservableRecord) -> Optional[float]:
    """(n_J - Z) / n_J, the bad-cavity cooperativity marker."""
    if record.nJ <= 0:
        return None
    return (record.nJ - record.Z) / record.nJ


@dataclass
class SolvedSystem:
    params: SystemParams
    liouvillian: object
    result: object
    verdict: TruncationVerdict
    record: ObservableRecord


def solve_system(params: SystemParams, tol: float = DEFAULT_TOL,
                 threshold: float = TRUNCATION_THRESHOLD, grow: bool = True,
                 max_n_max: int = MAX_N_MAX) -> SolvedSystem:
    if grow:
        params, L, result, verdict = solve_adequate(params, tol=tol, threshold=threshold,
                                                    max_n_max=max_n_max)
    else:
        L = build_liouvillian(params)
        result = solve_steady(L, tol=tol)
        verdict = check_truncation(result, threshold)
    return SolvedSystem(params, L, result, verdict, observe(result.rho, params))


def _single_emitter_photons(params: SystemParams, tol: float, threshold: float):
    """Photon numbers of each emitter alone in its own cavity.

    Returns ``(photons, adequate)``; emitters with equal detuning share a solve.
    """
    cache = {}
    photons = []
    adequate = True
    for i, delta in enumerate(params.detunings):
        if delta not in cache:
            single = params.single_emitter(i)
            try:
                solved = solve_system(single, tol=tol, threshold=threshold, grow=False)
            except Exception as exc:
                raise SubsystemError(
                    f"single-emitter system {i + 1} (delta={delta:g}) failed: {exc}") from exc
            cache[delta] = solved
        solved = cache[delta]
        adequate = adequate and solved.verdict.adequate
        photons.append(solved.record.n)
    return photons, adequate


def cooperative_fraction(params: SystemParams, tol: float = DEFAULT_TOL,
                         threshold: float = TRUNCATION_THRESHOLD, grow: bool = True,
                         max_n_max: int = MAX_N_MAX, shared: SolvedSystem = None):
    """Cooperativity point for ``params``.

    The single-emitter references use the same photon truncation as the
    shared system; if any of them fails its own tail check, the truncation is
    doubled for all systems.  Returns ``(point, shared_solution)``.
    """
    while True:
        if shared is None:
            try:
                shared = solve_system(params, tol=tol, threshold=threshold, grow=grow,
                                      max_n_max=max_n_max)
            except Exception as exc:
                raise SubsystemError(
                    f"shared {params.n_emitters}-emitter system failed: {exc}") from exc
        photons, adequate = _single_emitter_photons(shared.params, tol, threshold)
        if adequate or not grow or shared.params.n_max >= max_n_max:
            break
        params = shared.params.replace(n_max=min(2 * shared.params.n_max, max_n_max))
        shared = None
    record = shared.record
    point = CooperativityPoint(
        cf=cooperative_fraction_value(record.n, photons),
        shared_n=record.n,
        independent_n=photons,
        reference=reference_measure(record),
        record=record,
    )
    return point, shared


def apply_axis(base: SystemParams, axis: str, value) -> SystemParams:
    if axis == "pump":
        return base.replace(pump=float(value))
    if axis == "coupling":
        return base.replace(g=float(value))
    if axis == "dephasing":
        return base.replace(dephasing=float(value))
    if axis == "n_emitters":
        return base.replace(n_emitters=int(value))
    if axis == "detuning_symmetric":
        # N emitters spread evenly over [-value, value]; (value, -value) for N = 2
        spread = np.linspace(float(value), -float(value), base.n_emitters)
        if base.n_emitters == 1:
            spread = np.array([float(value)])
        return base.replace(detunings=tuple(spread))
    if axis == "detuning_single":
        return base.replace(detunings=(float(value),) + (0.0,) * (base.n_emitters - 1))
    raise ValueError(f"unknown sweep axis {axis!r}; expected one of {AXES}")


@dataclass
class SweepSpec:
    base: SystemParams
    axis: str
    grid: list
    outputs: tuple = ("observables", "cf")
    tol: float = DEFAULT_TOL
    truncation_threshold: float = TRUNCATION_THRESHOLD
    max_n_max: int = MAX_N_MAX
    diagnostics: bool = True

    def __post_init__(self):
        if self.axis not in AXES:
            raise ValueError(f"unknown sweep axis {self.axis!r}; expected one of {AXES}")
        grid = np.asarray(self.grid, dtype=float)
        if grid.ndim != 1 or grid.size == 0:
            raise ValueError("sweep grid must be a nonempty list")
        steps = np.diff(grid)
        if not (np.all(steps > 0) or np.all(steps < 0)):
            raise ValueError("sweep grid must be strictly monotone")
        self.grid = [float(x) for x in grid]
        bad = set(self.outputs) - set(OUTPUTS)
        if bad:
            raise ValueError(f"unknown outputs {sorted(bad)}; expected a subset of {OUTPUTS}")
        self.outputs = tuple(self.outputs)


def log_grid(start: float, stop: float, num: int) -> list:
    return list(np.geomspace(start, stop, num))


def linear_grid(start: float, stop: float, num: int) -> list:
    return list(np.linspace(start, stop, num))


@dataclass
class SweepPoint:
    index: int
    value: float
    params: SystemParams
    record: Optional[ObservableRecord] = None
    coop: Optional[CooperativityPoint] = None
    spectrum: Optional[SpectrumTrace] = None
    residual: float = float("nan")
    truncation_tail: float = float("nan")
    truncation_ok: bool = True
    spectral_gap: float = float("nan")
    checks: dict = field(default_factory=dict)
    error: Optional[str] = None

    @property
    def status(self) -> str:
        if self.error is not None:
            return "error"
        return "ok" if self.truncation_ok else "truncation"


def evaluate_point(spec: SweepSpec, index: int) -> SweepPoint:
    """Solve one grid point; failures are recorded, never raised."""
    value = spec.grid[index]
    try:
        params = apply_axis(spec.base, spec.axis, value)
    except Exception as exc:
        return SweepPoint(index, value, spec.base, error=f"invalid parameters: {exc}")
    point = SweepPoint(index, value, params)
    try:
        shared = solve_system(params, tol=spec.tol, threshold=spec.truncation_threshold,
                              max_n_max=spec.max_n_max)
        if "cf" in spec.outputs:
            point.coop, shared = cooperative_fraction(
                params, tol=spec.tol, threshold=spec.truncation_threshold,
                max_n_max=spec.max_n_max, shared=shared)
        point.params = shared.params
        point.record = shared.record
        point.residual = shared.result.residual
        point.truncation_tail = shared.result.truncation_tail
        point.truncation_ok = shared.verdict.adequate
        point.spectral_gap = shared.result.spectral_gap_estimate
        if spec.diagnostics:
            point.checks = liouvillian_checks(shared.liouvillian)
            rho = shared.result.rho
            point.checks["state_trace_error"] = abs(rho.trace - 1.0)
            point.checks["state_hermiticity"] = rho.hermiticity_error()
            point.checks["cavity_field"] = abs(shared.record.a_mean)
        if "spectrum" in spec.outputs:
            if shared.record.n < SMALL_N:
                raise ValueError("cavity is empty; no spectrum")
            point.spectrum = emission_spectrum(shared.result.rho, shared.liouvillian)
            point.checks["spectrum_normalization"] = abs(
                point.spectrum.integral / shared.record.n - 1.0)
    except Exception as exc:
        log.warning("sweep point %d (%s=%g) failed: %s", index, spec.axis, value, exc)
        log.debug("%s", traceback.format_exc())
        point.error = f"{type(exc).__name__}: {exc}"
    return point


def _evaluate(args):
    return evaluate_point(*args)


def run_sweep(spec: SweepSpec, workers: int = 1) -> Iterator[SweepPoint]:
    """Yield one SweepPoint per grid value, in grid order, as results arrive."""
    jobs = [(spec, i) for i in range(len(spec.grid))]
    if workers <= 1:
        for job in jobs:
            yield _evaluate(job)
        return
    with ProcessPoolExecutor(max_workers=workers) as pool:
        yield from pool.map(_evaluate, jobs)


def sign_changes(values, cf, log_axis: bool = True) -> list:
    """Interpolated axis positions where cf changes sign between grid points.

    Undefined cf values (None) are skipped.  Each entry is
    ``(position, direction)`` with direction +1 for negative -> positive.
    """
    pairs = [(x, c) for x, c in zip(values, cf) if c is not None and np.isfinite(c)]
    out = []
    for (x0, c0), (x1, c1) in zip(pairs, pairs[1:]):
        if c0 == 0 or np.sign(c0) == np.sign(c1):
            continue
        u0, u1 = (np.log(x0), np.log(x1)) if log_axis else (x0, x1)
        u = u0 + (u1 - u0) * (-c0) / (c1 - c0)
        out.append((float(np.exp(u) if log_axis else u), int(np.sign(c1))))
    return out


def locate_threshold(base: SystemParams, low: float, high: float,
                     rtol: float = 1e-3, tol: float = DEFAULT_TOL) -> float:
    """Pump rate where cf crosses zero inside [low, high], by root bracketing in log P."""

    def f(log_p):
        point, _ = cooperative_fraction(base.replace(pump=float(np.exp(log_p))), tol=tol)
        return point.cf

    root = brentq(f, np.log(low), np.log(high), xtol=rtol)
    return float(np.exp(root))
