"""Real-coefficient Ising models, configuration energies and the exact oracle.

Spin convention used throughout the package: basis index ``z`` encodes one
configuration, qubit/site ``i`` reads bit ``i`` of ``z`` (little-endian),
and bit 0 means sigma = +1 while bit 1 means sigma = -1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from . import config
from .errors import InvalidArgumentError, ResourceLimitError

# Low bits handled per block by the exhaustive enumeration.
_BLOCK_BITS = 20


@dataclass(frozen=True)
class IsingModel:
    """E(sigma) = offset + sum_i fields[i] sigma_i + sum_{i<j} J_ij sigma_i sigma_j.

    ``couplings`` is a sparse tuple of ``(i, j, value)`` with ``i < j``.
    Instances are immutable; the fields array is marked read-only.
    """

    n_sites: int
    offset: float = 0.0
    fields: np.ndarray = field(default=None)
    couplings: tuple = ()

    def __post_init__(self):
        n = self.n_sites
        if not isinstance(n, (int, np.integer)) or n < 0:
            raise InvalidArgumentError(f"n_sites must be a non-negative integer, got {n!r}")
        object.__setattr__(self, "n_sites", int(n))
        offset = float(self.offset)
        if not math.isfinite(offset):
            raise InvalidArgumentError("offset must be finite")
        object.__setattr__(self, "offset", offset)

        h = np.zeros(n) if self.fields is None else np.array(self.fields, dtype=float)
        if h.shape != (n,):
            raise InvalidArgumentError(f"fields must have length {n}, got shape {h.shape}")
        if not np.all(np.isfinite(h)):
            raise InvalidArgumentError("fields must be finite")
        h.setflags(write=False)
        object.__setattr__(self, "fields", h)

        seen = set()
        terms = []
        for term in self.couplings:
            i, j, v = term
            i, j, v = int(i), int(j), float(v)
            if not 0 <= i < j < n:
                raise InvalidArgumentError(f"coupling ({i}, {j}) must satisfy 0 <= i < j < {n}")
            if (i, j) in seen:
                raise InvalidArgumentError(f"duplicate coupling ({i}, {j})")
            if not math.isfinite(v):
                raise InvalidArgumentError(f"coupling ({i}, {j}) is not finite")
            seen.add((i, j))
            terms.append((i, j, v))
        object.__setattr__(self, "couplings", tuple(terms))

    def __eq__(self, other):
        if not isinstance(other, IsingModel):
            return NotImplemented
        return (
            self.n_sites == other.n_sites
            and self.offset == other.offset
            and np.array_equal(self.fields, other.fields)
            and self.couplings == other.couplings
        )

    __hash__ = None

    def coupling_matrix(self) -> np.ndarray:
        """Dense strictly upper-triangular J."""
        J = np.zeros((self.n_sites, self.n_sites))
        for i, j, v in self.couplings:
            J[i, j] = v
        return J

    def with_offset(self, offset: float) -> "IsingModel":
        return IsingModel(self.n_sites, offset, self.fields, self.couplings)

    def max_abs_coefficient(self) -> float:
        """Largest |h_i| or |J_ij| (0.0 for a model without terms)."""
        m = float(np.max(np.abs(self.fields))) if self.n_sites else 0.0
        for _, _, v in self.couplings:
            m = max(m, abs(v))
        return m

    def energy_scale(self) -> float:
        """Upper bound on |E| over all configurations."""
        return abs(self.offset) + float(np.sum(np.abs(self.fields))) + sum(abs(v) for _, _, v in self.couplings)

    def to_dict(self) -> dict:
        return {
            "n": self.n_sites,
            "offset": self.offset,
            "fields": [float(x) for x in self.fields],
            "couplings": [[i, j, v] for i, j, v in self.couplings],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "IsingModel":
        return cls(data["n"], data.get("offset", 0.0), data["fields"], tuple(tuple(c) for c in data["couplings"]))


@dataclass(frozen=True)
class SpectrumSummary:
    """Exact ground level of a model.

    Ground states are kept as basis indices (see the module docstring for
    the index/spin convention); ``ground_states`` decodes them.
    """

    n_sites: int
    min_energy: float
    ground_indices: np.ndarray
    next_energy: Optional[float]

    @property
    def degeneracy(self) -> int:
        return int(self.ground_indices.size)

    @property
    def ground_states(self) -> list:
        return [index_to_spins(int(z), self.n_sites) for z in self.ground_indices]


def index_to_spins(z: int, n: int) -> tuple:
    return tuple(1 - 2 * ((z >> i) & 1) for i in range(n))


def spins_to_index(spins: Sequence[int]) -> int:
    z = 0
    for i, s in enumerate(spins):
        if s == -1:
            z |= 1 << i
        elif s != 1:
            raise InvalidArgumentError(f"spin {i} is {s!r}, expected +1 or -1")
    return z


def energy(model: IsingModel, config_: Sequence[int]) -> float:
    """Energy of one spin configuration, summed term by term."""
    s = np.asarray(config_)
    if s.shape != (model.n_sites,):
        raise InvalidArgumentError(f"configuration has length {s.size}, model has {model.n_sites} sites")
    if not np.all((s == 1) | (s == -1)):
        raise InvalidArgumentError("spins must be +1 or -1")
    e = model.offset + float(np.dot(model.fields, s))
    for i, j, v in model.couplings:
        e += v * s[i] * s[j]
    return float(e)


def linear_table(coeffs: np.ndarray, out: Optional[np.ndarray] = None) -> np.ndarray:
    """sum_i coeffs[i] * sigma_i(z) for every z < 2**len(coeffs)."""
    k = len(coeffs)
    if out is None:
        out = np.empty(1 << k)
    out[0] = 0.0
    for i, c in enumerate(coeffs):
        half = 1 << i
        np.subtract(out[:half], c, out=out[half : 2 * half])
        out[:half] += c
    return out


def energy_table(fields: np.ndarray, J: np.ndarray) -> np.ndarray:
    """Offset-free energies of all 2**n configurations.

    Built by doubling: adding site k splits every partial configuration into
    sigma_k = +1 (lower half) and sigma_k = -1 (upper half), each shifted by
    +/-(h_k + sum_{j<k} J_jk sigma_j).
    """
    n = len(fields)
    out = np.empty(1 << n)
    local = np.empty(1 << max(n - 1, 0))
    out[0] = 0.0
    for k in range(n):
        half = 1 << k
        lf = linear_table(J[:k, k], out=local[:half])
        lf += fields[k]
        np.subtract(out[:half], lf, out=out[half : 2 * half])
        out[:half] += lf
    return out


def _block_energies(model: IsingModel, low_bits: int):
    """Yield (block_start, energies) covering all configurations in order."""
    n = model.n_sites
    h = model.fields
    J = model.coupling_matrix()
    low_table = energy_table(h[:low_bits], J[:low_bits, :low_bits])
    if low_bits == n:
        yield 0, low_table + model.offset
        return
    J_cross = J[:low_bits, low_bits:]
    h_high = h[low_bits:]
    J_high = J[low_bits:, low_bits:]
    buf = np.empty_like(low_table)
    for hi in range(1 << (n - low_bits)):
        s_high = np.array(index_to_spins(hi, n - low_bits), dtype=float)
        const = model.offset + float(h_high @ s_high) + float(s_high @ J_high @ s_high)
        linear_table(J_cross @ s_high, out=buf)
        buf += low_table
        buf += const
        yield hi << low_bits, buf


def exhaustive_ground_states(model: IsingModel, limit: int = config.EXHAUSTIVE_LIMIT) -> SpectrumSummary:
    """Enumerate all 2**N configurations; return the ground level and the next level.

    Energies within ``ENERGY_RTOL * model.energy_scale()`` of the minimum are
    treated as degenerate.
    """
    n = model.n_sites
    if n > limit:
        raise ResourceLimitError(f"exhaustive search over {n} sites exceeds the limit of {limit} sites")
    low_bits = min(n, _BLOCK_BITS)
    tol = config.ENERGY_RTOL * model.energy_scale()

    if low_bits == n:
        blocks = [next(_block_energies(model, low_bits))]
        e_min = float(blocks[0][1].min())
    else:
        blocks = None
        e_min = min(float(e.min()) for _, e in _block_energies(model, low_bits))

    threshold = e_min + tol
    ground = []
    e_next = math.inf
    for start, e in blocks if blocks is not None else _block_energies(model, low_bits):
        mask = e <= threshold
        ground.append(np.flatnonzero(mask) + start)
        rest = e[~mask]
        if rest.size:
            e_next = min(e_next, float(rest.min()))
    return SpectrumSummary(
        n_sites=n,
        min_energy=e_min,
        ground_indices=np.concatenate(ground).astype(np.int64),
        next_energy=None if math.isinf(e_next) else e_next,
    )


def random_instance(
    n: int,
    coefficient_scale: float = 1.0,
    seed: int = 0,
    connectivity: Union[str, Sequence[tuple]] = "full",
) -> IsingModel:
    """Random model with fields and couplings uniform in [-scale, scale].

    ``connectivity`` is ``"full"`` (all i<j pairs) or an explicit pair list.
    """
    if n < 1:
        raise InvalidArgumentError("n must be at least 1")
    if not coefficient_scale > 0:
        raise InvalidArgumentError("coefficient_scale must be positive")
    if isinstance(connectivity, str):
        if connectivity != "full":
            raise InvalidArgumentError(f"unknown connectivity {connectivity!r}")
        pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    else:
        pairs = [tuple(sorted(map(int, p))) for p in connectivity]
    rng = np.random.default_rng(seed)
    h = rng.uniform(-coefficient_scale, coefficient_scale, size=n)
    vals = rng.uniform(-coefficient_scale, coefficient_scale, size=len(pairs))
    return IsingModel(n, 0.0, h, tuple((i, j, float(v)) for (i, j), v in zip(pairs, vals)))
