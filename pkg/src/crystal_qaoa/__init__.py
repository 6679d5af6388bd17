"""QAOA search for minimum-energy configurations of binary crystals."""
from importlib import resources

from .engine import AngleSchedule, StateVector, build_cost_diagonal, expectation, run_circuit, sample, success_rate
from .ising import IsingModel, SpectrumSummary, energy, exhaustive_ground_states, random_instance
from .lattice import PairCoefficientTable, SupercellSpec, assemble_ising, build_supercell, enumerate_pairs, fcc
from .strategies import (
    GammaScaling,
    LinearRampParams,
    fixed_angle_schedule,
    optimize_full,
    optimize_gamma_only,
    optimize_linear_ramp,
    transfer,
)

__version__ = "0.1.0"


def data_path(name: str):
    """Path of a bundled data file, e.g. ``data_path("fcc_1x1x3.json")``."""
    return resources.files(__name__) / "data" / name
