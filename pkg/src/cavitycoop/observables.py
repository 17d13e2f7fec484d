"""Steady-state observables, first-order correlation and emission spectrum."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy.signal import find_peaks

from .krylov import DEFAULT_KRYLOV_DIM, DEFAULT_STEP_TOL, propagate
from .model import DensityMatrix, Liouvillian, SystemParams, vec
from .operators import HilbertLayout, cavity_annihilation, collective_lowering, dagger, emitter_lowering

SMALL_N = 1e-8
HORIZON_DECAY = 1e-4
STATIONARITY_TOL = 1e-8


class NonStationaryError(ValueError):
    pass


class HorizonTooShortError(ValueError):
    pass


class NonUniformGridError(ValueError):
    pass


@lru_cache(maxsize=32)
def layout_operators(layout: HilbertLayout) -> dict:
    a = cavity_annihilation(layout)
    ad = dagger(a)
    J = collective_lowering(layout)
    inversion = sum(dagger(s) @ s for s in
                    (emitter_lowering(layout, i) for i in range(1, layout.n_emitters + 1)))
    return {
        "a": a,
        "number": (ad @ a).tocsr(),
        "pair": (ad @ ad @ a @ a).tocsr(),
        "inversion": inversion.tocsr(),
        "nJ": (dagger(J) @ J).tocsr(),
    }


def expectation(rho: DensityMatrix, op) -> complex:
    """tr(op rho)."""
    m = rho.matrix
    if op.shape != m.shape:
        raise ValueError(f"operator shape {op.shape} does not match state {m.shape}")
    return complex(op.multiply(m.T).sum())


def _real(value: complex) -> float:
    return float(np.real(value))


def g2_zero(rho: DensityMatrix) -> Optional[float]:
    """<a+ a+ a a> / <a+ a>^2, or None when the cavity is (nearly) empty."""
    ops = layout_operators(rho.layout)
    n = _real(expectation(rho, ops["number"]))
    if n < SMALL_N:
        return None
    return _real(expectation(rho, ops["pair"])) / n ** 2


@dataclass
class ObservableRecord:
    n: float
    Z: float
    nJ: float
    g2: Optional[float]
    params: SystemParams
    a_mean: complex = 0.0

    @property
    def n_per_emitter(self) -> float:
        return self.n / self.params.n_emitters

    @property
    def n_per_excited(self) -> Optional[float]:
        return self.n / self.Z if self.Z > 0 else None


def observe(rho: DensityMatrix, params: SystemParams) -> ObservableRecord:
    ops = layout_operators(rho.layout)
    return ObservableRecord(
        n=_real(expectation(rho, ops["number"])),
        Z=_real(expectation(rho, ops["inversion"])),
        nJ=_real(expectation(rho, ops["nJ"])),
        g2=g2_zero(rho),
        params=params,
        a_mean=expectation(rho, ops["a"]),
    )


def _correlation_problem(rho_s: DensityMatrix, L: Liouvillian, use_sectors: bool,
                         stationarity_tol: float):
    residual = float(np.linalg.norm(L.matrix @ rho_s.vec))
    if residual > stationarity_tol:
        raise NonStationaryError(f"input state is not stationary (residual {residual:.3g})")
    a = layout_operators(rho_s.layout)["a"]
    source = vec(a @ rho_s.matrix)
    probe = vec(a.toarray())
    if not use_sectors:
        return L.matrix, source, probe
    # a rho_s lowers the ket excitation by one relative to the bra
    idx, block = L.sector(-1)
    return block, source[idx], probe[idx]


def first_order_correlation(rho_s: DensityMatrix, L: Liouvillian, t_grid,
                            m: int = DEFAULT_KRYLOV_DIM, tol: float = DEFAULT_STEP_TOL,
                            use_sectors: bool = True,
                            stationarity_tol: float = STATIONARITY_TOL) -> np.ndarray:
    """G(t) = tr{a+ exp(L t)[a rho_s]} by quantum regression."""
    A, source, probe = _correlation_problem(rho_s, L, use_sectors, stationarity_tol)
    return propagate(A, source, t_grid, m=m, tol=tol, functional=probe)


@dataclass
class SpectrumTrace:
    omega_grid: np.ndarray
    S: np.ndarray
    correlation: np.ndarray
    t_grid: np.ndarray
    t_max: float
    fwhm: float
    peaks: list = field(default_factory=list)
    imag_residue: float = 0.0

    @property
    def integral(self) -> float:
        """Sum of S d(omega) / 2 pi, which should equal the photon number."""
        d_omega = self.omega_grid[1] - self.omega_grid[0]
        return float(np.sum(self.S) * d_omega / (2 * np.pi))

    @property
    def negative_excursion(self) -> float:
        return float(max(0.0, -np.min(self.S)) / np.max(self.S))


def _fwhm(omega: np.ndarray, S: np.ndarray) -> float:
    i = int(np.argmax(S))
    half = 0.5 * S[i]
    left = i
    while left > 0 and S[left] > half:
        left -= 1
    right = i
    while right < S.size - 1 and S[right] > half:
        right += 1
    if S[left] > half or S[right] > half:
        return float("nan")

    def cross(j, k):
        # linear interpolation between samples j (below half) and k (above)
        return omega[j] + (half - S[j]) * (omega[k] - omega[j]) / (S[k] - S[j])

    return float(cross(right, right - 1) - cross(left, left + 1))


def spectrum(G, t_grid, apodization: float = 0.0, pad: int = 1,
             horizon_decay: float = HORIZON_DECAY) -> SpectrumTrace:
    """Emission spectrum from the correlation on a uniform grid starting at 0.

    The two-sided transform uses G(-t) = conj(G(t)), so S is real, and
    S(omega) = integral G(t) exp(-i omega t) dt puts a mode at detuning
    +delta at omega = +delta.  ``apodization`` multiplies G by
    exp(-apodization |t|), which adds 2 * apodization to Lorentzian widths.
    ``pad`` zero-pads the correlation to ``pad`` times its length, refining
    the frequency grid without changing the normalisation.
    """
    G = np.asarray(G, dtype=complex)
    t = np.asarray(t_grid, dtype=float)
    if t.size < 3 or G.shape != t.shape:
        raise ValueError("G and t_grid must be equal-length arrays of >= 3 points")
    dt = t[1] - t[0]
    if t[0] != 0 or dt <= 0 or not np.allclose(np.diff(t), dt, rtol=1e-9, atol=0):
        raise NonUniformGridError("t_grid must be uniform and start at 0")
    if abs(G[-1]) > horizon_decay * abs(G[0]):
        raise HorizonTooShortError(
            f"|G(t_max)|/|G(0)| = {abs(G[-1]) / abs(G[0]):.2e} exceeds {horizon_decay:g}; "
            "extend the time horizon")
    if apodization:
        G = G * np.exp(-apodization * t)
    if pad > 1:
        G = np.concatenate([G, np.zeros((pad - 1) * G.size, dtype=complex)])
    circular = np.concatenate([G, np.conj(G[:0:-1])])
    n_total = circular.size
    S = dt * np.fft.fft(circular)
    omega = 2 * np.pi * np.fft.fftfreq(n_total, d=dt)
    S = np.fft.fftshift(S)
    omega = np.fft.fftshift(omega)
    smax = float(np.max(S.real))
    imag_residue = float(np.max(np.abs(S.imag))) / smax
    S = S.real
    idx, props = find_peaks(S, prominence=0.05 * smax)
    peaks = sorted(((float(omega[i]), float(S[i])) for i in idx), key=lambda p: -p[1])
    return SpectrumTrace(omega_grid=omega, S=S, correlation=G[:t.size], t_grid=t,
                         t_max=float(t[-1]), fwhm=_fwhm(omega, S), peaks=peaks,
                         imag_residue=imag_residue)


def bandwidth_estimate(params: SystemParams) -> float:
    """Rough upper bound of the spectral extent of the cavity emission."""
    N = params.n_emitters
    return (params.kappa + N * params.pump + params.dephasing
            + max(abs(d) for d in params.detunings)
            + 2 * params.g * np.sqrt(N * (params.n_max + 1)))


def emission_spectrum(rho_s: DensityMatrix, L: Liouvillian, dt: float = None,
                      t_max: float = None, horizon_cap: float = 2e5,
                      m: int = DEFAULT_KRYLOV_DIM, tol: float = DEFAULT_STEP_TOL,
                      apodization: float = 0.0, pad: int = 4) -> SpectrumTrace:
    """Correlation and spectrum with an automatically doubled time horizon.

    The horizon doubles until every |G| in its last tenth is below
    1e-4 |G(0)|.  The propagation continues from the stored state instead of
    restarting at t = 0.
    """
    params = L.params
    if dt is None:
        dt = np.pi / (4 * bandwidth_estimate(params))
    if t_max is None:
        t_max = 64 * dt
    A, source, probe = _correlation_problem(rho_s, L, True, STATIONARITY_TOL)
    n_steps = int(np.ceil(t_max / dt))
    times = dt * np.arange(n_steps + 1)
    G, state = propagate(A, source, times, m=m, tol=tol, functional=probe, return_state=True)
    g0 = abs(G[0])
    while True:
        tail = G[int(0.9 * (G.size - 1)):]
        if g0 == 0 or np.max(np.abs(tail)) <= HORIZON_DECAY * g0:
            break
        if times[-1] >= horizon_cap:
            raise HorizonTooShortError(
                f"correlation has not decayed by t = {times[-1]:.3g}")
        extra = dt * np.arange(1, n_steps + 1)
        G_more, state = propagate(A, state, extra, m=m, tol=tol, functional=probe,
                                  return_state=True)
        times = np.concatenate([times, times[-1] + extra])
        G = np.concatenate([G, G_more])
        n_steps *= 2
    if g0 == 0:
        raise HorizonTooShortError("cavity is empty; the spectrum is undefined")
    # uniform grid reconstruction avoids accumulated rounding in times
    times = dt * np.arange(G.size)
    return spectrum(G, times, apodization=apodization, pad=pad)
