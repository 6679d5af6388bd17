"""Periodic supercells and compilation of pair cluster coefficients to Ising form.

Energy convention: the compiled model gives the energy of one supercell.
Every pair of sites within the cutoff is counted once per supercell, over
all periodic images (not only the minimum image), so

* ``J_ij`` (i < j) is the sum of the pair coefficient over every image of
  ``j`` within the cutoff of ``i``;
* a site paired with its own image contributes half the coefficient per image
  (each such bond is seen from both ends) to the constant, since
  sigma_i**2 == 1.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from itertools import product
from typing import Optional, Sequence, Union

import numpy as np

from . import config
from .errors import InvalidArgumentError, ResourceLimitError
from .ising import IsingModel

FCC_BASIS = ((0.0, 0.0, 0.0), (0.0, 0.5, 0.5), (0.5, 0.0, 0.5), (0.5, 0.5, 0.0))


@dataclass(frozen=True)
class BaseCell:
    lattice_constant: float
    basis_sites: tuple = FCC_BASIS

    def __post_init__(self):
        if not self.lattice_constant > 0:
            raise InvalidArgumentError("lattice_constant must be positive")
        basis = tuple(tuple(float(x) for x in site) for site in self.basis_sites)
        for site in basis:
            if len(site) != 3 or not all(0.0 <= x < 1.0 for x in site):
                raise InvalidArgumentError(f"basis site {site} must be a fractional 3-vector in [0, 1)")
        object.__setattr__(self, "basis_sites", basis)


def fcc(lattice_constant: float = 3.8) -> BaseCell:
    """Conventional cubic fcc cell with four basis sites."""
    return BaseCell(lattice_constant, FCC_BASIS)


@dataclass(frozen=True)
class SupercellSpec:
    multipliers: tuple
    base: BaseCell = field(default_factory=fcc)

    def __post_init__(self):
        m = tuple(int(x) for x in self.multipliers)
        if len(m) != 3 or min(m) < 1:
            raise InvalidArgumentError(f"multipliers must be three positive integers, got {self.multipliers!r}")
        object.__setattr__(self, "multipliers", m)

    @property
    def n_sites(self) -> int:
        na, nb, nc = self.multipliers
        return len(self.base.basis_sites) * na * nb * nc

    @property
    def edges(self) -> np.ndarray:
        """Supercell edge lengths (orthorhombic) in Angstrom."""
        return self.base.lattice_constant * np.array(self.multipliers, dtype=float)


@dataclass(frozen=True)
class PairCoefficientTable:
    """Per-distance pair coefficients plus the point and constant terms.

    ``field_coefficient`` is either one value applied to every site or a
    per-site sequence.
    """

    entries: tuple
    cutoff: float
    field_coefficient: Union[float, tuple] = 0.0
    offset: float = 0.0

    def __post_init__(self):
        if not self.cutoff > 0:
            raise InvalidArgumentError("cutoff must be positive")
        entries = tuple(sorted((float(d), float(c)) for d, c in self.entries))
        for d, c in entries:
            if not d > 0:
                raise InvalidArgumentError(f"pair distance {d} must be positive")
            if d > self.cutoff + config.DISTANCE_MATCH_TOL:
                raise InvalidArgumentError(f"pair distance {d} exceeds the cutoff {self.cutoff}")
            if not math.isfinite(c):
                raise InvalidArgumentError(f"coefficient at distance {d} is not finite")
        for (d0, _), (d1, _) in zip(entries, entries[1:]):
            if d1 - d0 <= config.DISTANCE_MATCH_TOL:
                raise InvalidArgumentError(f"pair distances {d0} and {d1} are not distinguishable")
        object.__setattr__(self, "entries", entries)
        if not np.isscalar(self.field_coefficient):
            object.__setattr__(self, "field_coefficient", tuple(float(x) for x in self.field_coefficient))

    def coefficient(self, distance: float) -> float:
        """Coefficient for a realized distance; 0.0 when no entry matches."""
        for d, c in self.entries:
            if abs(d - distance) <= config.DISTANCE_MATCH_TOL:
                return c
        return 0.0

    def scaled(self, factor: float) -> "PairCoefficientTable":
        fc = self.field_coefficient
        fc = fc * factor if np.isscalar(fc) else tuple(x * factor for x in fc)
        return PairCoefficientTable(
            tuple((d, c * factor) for d, c in self.entries), self.cutoff, fc, self.offset
        )


@dataclass(frozen=True)
class PairTerm:
    i: int
    j: int
    distance: float
    multiplicity: int


@dataclass(frozen=True)
class PairList:
    """Pairs within the cutoff. ``self_pairs`` holds i == j image pairs;
    their multiplicity counts every nonzero translation (both +R and -R)."""

    pairs: tuple
    self_pairs: tuple

    def weighted_count(self) -> int:
        return sum(p.multiplicity for p in self.pairs)

    def neighbor_counts(self, n_sites: int, distance: Optional[float] = None) -> np.ndarray:
        """Number of neighbor relations per site, optionally at one distance only."""
        counts = np.zeros(n_sites, dtype=int)

        def keep(p):
            return distance is None or abs(p.distance - distance) <= config.DISTANCE_MATCH_TOL

        for p in self.pairs:
            if keep(p):
                counts[p.i] += p.multiplicity
                counts[p.j] += p.multiplicity
        for p in self.self_pairs:
            if keep(p):
                counts[p.i] += p.multiplicity
        return counts


def build_supercell(spec: SupercellSpec) -> np.ndarray:
    """Cartesian site positions, shape (N, 3).

    Site index = ((ia * nb + ib) * nc + ic) * n_basis + basis_index.
    """
    a = spec.base.lattice_constant
    basis = np.array(spec.base.basis_sites)
    na, nb, nc = spec.multipliers
    cells = np.array(list(product(range(na), range(nb), range(nc))), dtype=float)
    frac = (cells[:, None, :] + basis[None, :, :]).reshape(-1, 3)
    return frac * a


def _image_shells(edges: np.ndarray, cutoff: float) -> list:
    shells = [int(math.ceil(cutoff / L)) + 1 for L in edges]
    if max(shells) > config.MAX_IMAGE_SHELLS:
        raise ResourceLimitError(
            f"cutoff {cutoff} needs {max(shells)} image shells per axis, limit is {config.MAX_IMAGE_SHELLS}"
        )
    return shells


def enumerate_pairs(sites: np.ndarray, spec: SupercellSpec, cutoff: float) -> PairList:
    """Every site pair (over all periodic images) within ``cutoff``, grouped by distance."""
    if not cutoff > 0:
        raise InvalidArgumentError("cutoff must be positive")
    edges = spec.edges
    sa, sb, sc = _image_shells(edges, cutoff)
    shifts = np.array(
        list(product(range(-sa, sa + 1), range(-sb, sb + 1), range(-sc, sc + 1))), dtype=float
    ) * edges
    zero = np.flatnonzero(np.all(shifts == 0.0, axis=1))[0]

    n = len(sites)
    disp = sites[None, :, None, :] - sites[:, None, None, :] + shifts[None, None, :, :]
    dist = np.sqrt(np.einsum("ijtk,ijtk->ijt", disp, disp))
    dist[np.arange(n), np.arange(n), zero] = np.inf
    within = dist <= cutoff + 10.0 ** (-config.DISTANCE_DECIMALS)

    counter = Counter()
    for i, j, t in zip(*np.nonzero(within)):
        if i <= j:
            counter[(int(i), int(j), round(float(dist[i, j, t]), config.DISTANCE_DECIMALS))] += 1
    pairs, self_pairs = [], []
    for (i, j, d), m in sorted(counter.items()):
        (pairs if i < j else self_pairs).append(PairTerm(i, j, d, m))
    return PairList(tuple(pairs), tuple(self_pairs))


def assemble_ising(spec: SupercellSpec, table: PairCoefficientTable, pairs: Optional[PairList] = None) -> IsingModel:
    """Compile the pair table on the supercell into an IsingModel."""
    n = spec.n_sites
    if pairs is None:
        pairs = enumerate_pairs(build_supercell(spec), spec, table.cutoff)
    J = {}
    for p in pairs.pairs:
        c = table.coefficient(p.distance)
        if c != 0.0:
            J[(p.i, p.j)] = J.get((p.i, p.j), 0.0) + c * p.multiplicity
    constant = table.offset
    for p in pairs.self_pairs:
        constant += 0.5 * table.coefficient(p.distance) * p.multiplicity

    if np.isscalar(table.field_coefficient):
        h = np.full(n, float(table.field_coefficient))
    else:
        h = np.array(table.field_coefficient, dtype=float)
        if h.shape != (n,):
            raise InvalidArgumentError(f"per-site field list has length {h.size}, supercell has {n} sites")
    couplings = tuple((i, j, v) for (i, j), v in sorted(J.items()))
    return IsingModel(n, constant, h, couplings)


def shell_distances(base: BaseCell, cutoff: float) -> list:
    """Distinct neighbor distances of the infinite lattice up to ``cutoff``."""
    spec = SupercellSpec((1, 1, 1), base)
    found = enumerate_pairs(build_supercell(spec), spec, cutoff)
    ds = sorted({p.distance for p in found.pairs + found.self_pairs})
    merged = []
    for d in ds:
        if not merged or d - merged[-1] > config.DISTANCE_MATCH_TOL:
            merged.append(d)
    return merged
