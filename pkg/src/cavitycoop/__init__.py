"""Cooperativity of a few incoherently pumped emitters in a lossy cavity."""

__version__ = "0.1.0"

from .cooperativity import (
    CooperativityPoint,
    SweepSpec,
    cooperative_fraction,
    reference_measure,
    run_sweep,
)
from .model import DensityMatrix, Liouvillian, SystemParams, build_hamiltonian, build_liouvillian
from .observables import ObservableRecord, SpectrumTrace, emission_spectrum, g2_zero, observe
from .steady_state import SteadyStateResult, check_truncation, dense_null_space, solve_steady
