"""State-vector QAOA simulator for diagonal (Ising) cost Hamiltonians.

Layer kernels mutate the state in place and return it, so an optimizer loop
reuses one amplitude buffer. Copy a state first when the original is needed.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numba
import numpy as np

from . import config
from .errors import InvalidArgumentError, ResourceLimitError
from .ising import IsingModel, SpectrumSummary, energy_table, index_to_spins, spins_to_index

# Bytes per basis state while running: complex128 state, float64 diagonal and
# roughly one complex temporary.
_BYTES_PER_STATE = 16 + 8 + 16


@dataclass(frozen=True)
class AngleSchedule:
    gamma: tuple
    beta: tuple

    def __post_init__(self):
        g = tuple(float(x) for x in self.gamma)
        b = tuple(float(x) for x in self.beta)
        if len(g) != len(b) or not g:
            raise InvalidArgumentError(f"gamma and beta need equal nonzero length, got {len(g)} and {len(b)}")
        if not all(np.isfinite(g + b)):
            raise InvalidArgumentError("angles must be finite")
        object.__setattr__(self, "gamma", g)
        object.__setattr__(self, "beta", b)

    @property
    def p(self) -> int:
        return len(self.gamma)

    def as_vector(self) -> np.ndarray:
        return np.array(self.gamma + self.beta)

    @classmethod
    def from_vector(cls, x: Sequence[float]) -> "AngleSchedule":
        x = np.asarray(x, dtype=float)
        p = x.size // 2
        return cls(tuple(x[:p]), tuple(x[p:]))

    def to_dict(self) -> dict:
        return {"p": self.p, "gamma": list(self.gamma), "beta": list(self.beta)}

    @classmethod
    def from_dict(cls, data: dict) -> "AngleSchedule":
        sched = cls(data["gamma"], data["beta"])
        if "p" in data and int(data["p"]) != sched.p:
            raise InvalidArgumentError(f"p={data['p']} does not match {sched.p} angles")
        return sched


class StateVector:
    """2**n complex amplitudes; qubit i is bit i of the basis index."""

    def __init__(self, amplitudes: np.ndarray):
        amps = np.asarray(amplitudes, dtype=np.complex128)
        n = amps.size.bit_length() - 1
        if amps.ndim != 1 or amps.size != 1 << n:
            raise InvalidArgumentError("amplitude count must be a power of two")
        self.amplitudes = amps
        self.n_qubits = n

    @classmethod
    def uniform(cls, n: int) -> "StateVector":
        return cls(np.full(1 << n, (1 << n) ** -0.5, dtype=np.complex128))

    @classmethod
    def basis(cls, z: int, n: int) -> "StateVector":
        amps = np.zeros(1 << n, dtype=np.complex128)
        amps[z] = 1.0
        return cls(amps)

    def copy(self) -> "StateVector":
        return StateVector(self.amplitudes.copy())

    def probabilities(self) -> np.ndarray:
        return self.amplitudes.real ** 2 + self.amplitudes.imag ** 2

    def norm_squared(self) -> float:
        return float(np.sum(self.probabilities()))


@dataclass(frozen=True)
class CostDiagonal:
    """H_C on every basis state: model energy minus the constant offset."""

    values: np.ndarray
    n_qubits: int


def decode(z: int, n: int) -> tuple:
    if not 0 <= z < 1 << n:
        raise InvalidArgumentError(f"basis index {z} out of range for {n} qubits")
    return index_to_spins(z, n)


def encode(spins: Sequence[int]) -> int:
    return spins_to_index(spins)


def required_bytes(n: int) -> int:
    return _BYTES_PER_STATE << n


def build_cost_diagonal(model: IsingModel, max_qubits: int = config.MAX_QUBITS) -> CostDiagonal:
    n = model.n_sites
    if n > max_qubits:
        raise ResourceLimitError(
            f"{n} qubits exceed the limit of {max_qubits}; simulation needs about {required_bytes(n)} bytes"
        )
    values = energy_table(model.fields, model.coupling_matrix())
    values.setflags(write=False)
    return CostDiagonal(values, n)


@numba.njit(cache=True, nogil=True)
def _phase_kernel(amps, values, gamma):
    for k in range(amps.size):
        t = -gamma * values[k]
        amps[k] *= complex(np.cos(t), np.sin(t))


@numba.njit(cache=True, nogil=True)
def _mixer_kernel(amps, n, c, s):
    # (a, b) <- (c a - i s b, c b - i s a) for each pair differing in bit q
    size = amps.size
    for q in range(n):
        stride = 1 << q
        for base in range(0, size, 2 * stride):
            for k in range(base, base + stride):
                a = amps[k]
                b = amps[k + stride]
                amps[k] = c * a + complex(s * b.imag, -s * b.real)
                amps[k + stride] = c * b + complex(s * a.imag, -s * a.real)


def apply_cost_phase(state: StateVector, diag: CostDiagonal, gamma: float) -> StateVector:
    """amplitude[z] *= exp(-i gamma C(z)), in place."""
    if diag.n_qubits != state.n_qubits:
        raise InvalidArgumentError("state and cost diagonal sizes differ")
    if gamma != 0.0:
        _phase_kernel(state.amplitudes, diag.values, float(gamma))
    return state


def apply_mixer(state: StateVector, beta: float) -> StateVector:
    """exp(-i beta X) on every qubit, in place."""
    if beta != 0.0:
        _mixer_kernel(state.amplitudes, state.n_qubits, float(np.cos(beta)), float(np.sin(beta)))
    return state


def run_circuit(
    model: IsingModel,
    schedule: AngleSchedule,
    diag: Optional[CostDiagonal] = None,
    max_qubits: int = config.MAX_QUBITS,
) -> StateVector:
    """Prepare |+>^N and apply cost phase then mixer for each layer.

    Pass a precomputed ``diag`` to skip rebuilding it (optimizer loops).
    """
    if diag is None:
        diag = build_cost_diagonal(model, max_qubits)
    state = StateVector.uniform(diag.n_qubits)
    for gamma, beta in zip(schedule.gamma, schedule.beta):
        apply_cost_phase(state, diag, gamma)
        apply_mixer(state, beta)
    return state


def expectation(state: StateVector, diag: CostDiagonal) -> float:
    if diag.n_qubits != state.n_qubits:
        raise InvalidArgumentError("state and cost diagonal sizes differ")
    # np.sum uses pairwise summation: deterministic order, small error.
    return float(np.sum(state.probabilities() * diag.values))


@dataclass(frozen=True)
class Histogram:
    """Sampled basis indices (ascending) with their counts."""

    n_qubits: int
    indices: np.ndarray
    counts: np.ndarray

    @property
    def shots(self) -> int:
        return int(self.counts.sum())

    def frequencies(self) -> np.ndarray:
        return self.counts / self.shots

    def as_dict(self) -> dict:
        return {int(z): int(c) for z, c in zip(self.indices, self.counts)}


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def _histogram(n: int, draws: np.ndarray) -> Histogram:
    idx, counts = np.unique(draws, return_counts=True)
    return Histogram(n, idx.astype(np.int64), counts.astype(np.int64))


def sample(state: StateVector, shots: int, seed: Union[int, np.random.Generator, None] = None) -> Histogram:
    """Draw ``shots`` basis indices with probability |amplitude|**2 (inverse CDF)."""
    if shots < 1:
        raise InvalidArgumentError("shots must be at least 1")
    cdf = np.cumsum(state.probabilities())
    u = _rng(seed).random(shots) * cdf[-1]
    draws = np.minimum(np.searchsorted(cdf, u, side="right"), cdf.size - 1)
    return _histogram(state.n_qubits, draws)


def sample_uniform(n: int, shots: int, seed: Union[int, np.random.Generator, None] = None) -> Histogram:
    """Random-sampling baseline: every basis index equally likely."""
    if shots < 1:
        raise InvalidArgumentError("shots must be at least 1")
    return _histogram(n, _rng(seed).integers(0, 1 << n, size=shots))


def index_energies(model: IsingModel, indices: np.ndarray) -> np.ndarray:
    """Full energies (offset included) of the given basis indices."""
    idx = np.asarray(indices, dtype=np.int64)
    bits = (idx[:, None] >> np.arange(model.n_sites)) & 1
    s = 1.0 - 2.0 * bits
    e = model.offset + s @ model.fields
    for i, j, v in model.couplings:
        e += v * s[:, i] * s[:, j]
    return e


def ground_mask(model: IsingModel, spectrum: SpectrumSummary, indices: np.ndarray) -> np.ndarray:
    tol = config.ENERGY_RTOL * model.energy_scale()
    return index_energies(model, indices) <= spectrum.min_energy + tol


def success_rate(histogram: Histogram, model: IsingModel, spectrum: SpectrumSummary) -> float:
    """Fraction of shots landing on any exact minimizer."""
    hit = ground_mask(model, spectrum, histogram.indices)
    return float(histogram.counts[hit].sum() / histogram.shots)
