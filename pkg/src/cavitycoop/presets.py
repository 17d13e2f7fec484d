"""Named experiment presets fig2 to fig7 (bad-cavity and strong-coupling regimes).

Each preset is a list of labelled sweeps.  Pump grids are log-spaced and
bracket the thresholds P = 4 g^2 / k and N * 4 g^2 / k.
"""
from __future__ import annotations

from .cooperativity import SweepSpec, log_grid
from .model import SystemParams

DETUNING_GRID = [0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0]


def _fig2():
    base = SystemParams(n_emitters=5, g=0.1, pump=0.04, n_max=12)
    return [("fig2", SweepSpec(base, "pump", log_grid(1e-3, 10.0, 40),
                               outputs=("observables", "cf", "spectrum")))]


def _fig3():
    sweeps = []
    for g in (0.01, 0.1, 1.0, 5.0, 10.0):
        base = SystemParams(n_emitters=2, g=g, pump=1.0, n_max=8)
        sweeps.append((f"fig3_g{g:g}", SweepSpec(base, "pump", log_grid(1e-4, 3e3, 36))))
    return sweeps


def _fig4():
    sweeps = []
    for g in (0.2, 0.5):
        base = SystemParams(n_emitters=4, g=g, pump=0.01, n_max=8)
        sweeps.append((f"fig4_g{g:g}", SweepSpec(base, "pump", log_grid(1e-2, 30.0, 22),
                                                 outputs=("observables", "cf", "spectrum"))))
    return sweeps


def _fig5():
    sweeps = []
    for n in range(1, 6):
        base = SystemParams(n_emitters=n, g=0.3, pump=0.36, n_max=8)
        sweeps.append((f"fig5_N{n}", SweepSpec(base, "pump", log_grid(1e-3, 40.0, 24))))
    return sweeps


def _fig6():
    sweeps = []
    for n in (1, 2, 3):
        base = SystemParams(n_emitters=n, g=5.0, pump=1.0, n_max=8)
        sweeps.append((f"fig6_N{n}", SweepSpec(base, "pump", log_grid(1e-2, 3e3, 30))))
    return sweeps


def _fig7():
    sweeps = []
    for pump in (0.1, 1.0, 10.0, 50.0):
        base = SystemParams(n_emitters=2, g=5.0, pump=pump, n_max=16)
        sweeps.append((f"fig7_detuning_P{pump:g}",
                       SweepSpec(base, "detuning_symmetric", DETUNING_GRID)))
        sweeps.append((f"fig7_dephasing_P{pump:g}",
                       SweepSpec(base, "dephasing", DETUNING_GRID)))
    return sweeps


PRESETS = {
    "fig2": _fig2,
    "fig3": _fig3,
    "fig4": _fig4,
    "fig5": _fig5,
    "fig6": _fig6,
    "fig7": _fig7,
}


def preset_sweeps(name: str) -> list:
    try:
        return PRESETS[name]()
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; available: {sorted(PRESETS)}") from None
