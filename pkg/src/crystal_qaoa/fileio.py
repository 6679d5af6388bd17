"""JSON/CSV readers and writers for instances, lattice specs, schedules and results."""
from __future__ import annotations

import csv
import io as _io
import json
import math
import os
import tempfile
from pathlib import Path
from typing import Union

import numpy as np

from . import config
from .engine import AngleSchedule, Histogram, index_energies
from .errors import FormatError, InvalidArgumentError
from .ising import IsingModel, SpectrumSummary
from .lattice import BaseCell, PairCoefficientTable, SupercellSpec, fcc

PathLike = Union[str, os.PathLike]


def read_json(path: PathLike) -> dict:
    text = Path(path).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None


def atomic_write_text(path: PathLike, text: str) -> None:
    """Write via a temporary file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def write_json(path: PathLike, data) -> None:
    atomic_write_text(path, json.dumps(data, indent=2) + "\n")


def _number(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise FormatError(f"{where}: expected a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise FormatError(f"{where}: value is not finite")
    return value


def _integer(value, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise FormatError(f"{where}: expected an integer, got {value!r}")
    return value


def _require(data: dict, key: str, where: str):
    if not isinstance(data, dict):
        raise FormatError(f"{where}: expected a JSON object")
    if key not in data:
        raise FormatError(f"{where}: missing field '{key}'")
    return data[key]


# -- instances ---------------------------------------------------------------

def parse_instance(data: dict, where: str = "instance") -> IsingModel:
    n = _integer(_require(data, "n", where), f"{where}.n")
    if n < 1:
        raise FormatError(f"{where}.n: must be positive")
    offset = _number(data.get("offset", 0.0), f"{where}.offset")
    fields = _require(data, "fields", where)
    if not isinstance(fields, list) or len(fields) != n:
        raise FormatError(f"{where}.fields: expected a list of {n} numbers")
    h = [_number(v, f"{where}.fields[{k}]") for k, v in enumerate(fields)]
    couplings = _require(data, "couplings", where)
    if not isinstance(couplings, list):
        raise FormatError(f"{where}.couplings: expected a list")
    seen = set()
    terms = []
    for k, term in enumerate(couplings):
        at = f"{where}.couplings[{k}]"
        if not isinstance(term, list) or len(term) != 3:
            raise FormatError(f"{at}: expected [i, j, value]")
        i, j = _integer(term[0], at), _integer(term[1], at)
        v = _number(term[2], at)
        if not 0 <= i < j < n:
            raise FormatError(f"{at}: indices must satisfy 0 <= i < j < {n}, got ({i}, {j})")
        if (i, j) in seen:
            raise FormatError(f"{at}: duplicate pair ({i}, {j})")
        seen.add((i, j))
        terms.append((i, j, v))
    return IsingModel(n, offset, h, tuple(terms))


def load_instance(path: PathLike) -> IsingModel:
    return parse_instance(read_json(path), str(path))


def save_instance(path: PathLike, model: IsingModel) -> None:
    write_json(path, model.to_dict())


# -- lattice specs ------------------------------------------------------------

def parse_lattice_spec(data: dict, where: str = "lattice spec") -> tuple:
    """Returns (SupercellSpec, PairCoefficientTable)."""
    a = _number(_require(data, "lattice_constant", where), f"{where}.lattice_constant")
    mult = _require(data, "multipliers", where)
    if not isinstance(mult, list) or len(mult) != 3:
        raise FormatError(f"{where}.multipliers: expected [na, nb, nc]")
    mult = [_integer(m, f"{where}.multipliers[{k}]") for k, m in enumerate(mult)]
    cutoff = _number(_require(data, "cutoff", where), f"{where}.cutoff")
    offset = _number(data.get("offset", 0.0), f"{where}.offset")
    field_ = data.get("field", 0.0)
    if isinstance(field_, list):
        field_ = tuple(_number(v, f"{where}.field[{k}]") for k, v in enumerate(field_))
    else:
        field_ = _number(field_, f"{where}.field")
    pcs = _require(data, "pair_coefficients", where)
    if not isinstance(pcs, list):
        raise FormatError(f"{where}.pair_coefficients: expected a list")
    entries = []
    for k, e in enumerate(pcs):
        at = f"{where}.pair_coefficients[{k}]"
        if not isinstance(e, list) or len(e) != 2:
            raise FormatError(f"{at}: expected [distance, value]")
        entries.append((_number(e[0], at), _number(e[1], at)))
    try:
        base = BaseCell(a, tuple(map(tuple, data["basis_sites"]))) if "basis_sites" in data else fcc(a)
        spec = SupercellSpec(tuple(mult), base)
        table = PairCoefficientTable(tuple(entries), cutoff, field_, offset)
    except InvalidArgumentError as exc:
        raise FormatError(f"{where}: {exc}") from None
    return spec, table


def load_lattice_spec(path: PathLike) -> tuple:
    return parse_lattice_spec(read_json(path), str(path))


def is_lattice_spec(data: dict) -> bool:
    return isinstance(data, dict) and "pair_coefficients" in data


# -- schedules -------------------------------------------------------------------

def load_schedule(path: PathLike) -> AngleSchedule:
    data = read_json(path)
    try:
        return AngleSchedule.from_dict(data)
    except (KeyError, TypeError, InvalidArgumentError) as exc:
        raise FormatError(f"{path}: invalid schedule ({exc})") from None


def save_schedule(path: PathLike, schedule: AngleSchedule) -> None:
    write_json(path, schedule.to_dict())


def load_ramp_params(path: PathLike):
    from .strategies import LinearRampParams

    data = read_json(path)
    try:
        return LinearRampParams.from_dict(data)
    except (KeyError, TypeError, InvalidArgumentError) as exc:
        raise FormatError(f"{path}: invalid ramp parameters ({exc})") from None


def save_ramp_params(path: PathLike, params) -> None:
    write_json(path, params.to_dict())


# -- results --------------------------------------------------------------------

def _csv_text(header, rows) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def write_csv(path: PathLike, header, rows) -> None:
    atomic_write_text(path, _csv_text(header, rows))


def spectrum_to_dict(spectrum: SpectrumSummary, max_listed: int = 1024) -> dict:
    """Ground configurations are listed as spin vectors, at most ``max_listed``."""
    listed = spectrum.ground_indices[:max_listed]
    n = spectrum.n_sites
    return {
        "n": n,
        "min_energy": spectrum.min_energy,
        "next_energy": spectrum.next_energy,
        "degeneracy": spectrum.degeneracy,
        "ground_indices": [int(z) for z in listed],
        "ground_states": [[1 - 2 * ((int(z) >> i) & 1) for i in range(n)] for z in listed],
        "truncated": bool(spectrum.degeneracy > max_listed),
    }


def bitstring(z: int, n: int) -> str:
    """Character i is the bit of qubit i (qubit 0 first)."""
    return "".join(str((z >> i) & 1) for i in range(n))


def histogram_rows(histogram: Histogram, model: IsingModel, min_energy: float) -> list:
    """Rows (basis_index, bitstring, relative energy, count, frequency), energy ascending."""
    rel = index_energies(model, histogram.indices) - min_energy
    # exact ground hits are reported as 0.0 rather than round-off residue
    tol = config.ENERGY_RTOL * model.energy_scale()
    rel = np.where(np.abs(rel) <= tol, 0.0, rel)
    order = np.lexsort((histogram.indices, rel))
    shots = histogram.shots
    n = histogram.n_qubits
    return [
        (int(histogram.indices[k]), bitstring(int(histogram.indices[k]), n), float(rel[k]),
         int(histogram.counts[k]), int(histogram.counts[k]) / shots)
        for k in order
    ]


def write_histogram_csv(path: PathLike, rows: list) -> None:
    write_csv(path, ["basis_index", "bitstring", "energy", "count", "frequency"], [
        (z, b, repr(e), c, repr(f)) for z, b, e, c, f in rows
    ])


def binned_rows(rows: list, bins: int = config.HISTOGRAM_BINS) -> list:
    """Uniform bins over [0, max relative energy]; the exact E = 0 level is its own first row."""
    energies = np.array([r[2] for r in rows])
    counts = np.array([r[3] for r in rows])
    shots = int(counts.sum())
    ground = energies == 0.0
    hits = int(counts[ground].sum())
    out = [(0.0, 0.0, hits, hits / shots)]
    top = float(energies.max()) if energies.size else 0.0
    if top > 0:
        edges = np.linspace(0.0, top, bins + 1)
        hist, _ = np.histogram(energies[~ground], bins=edges, weights=counts[~ground])
        for lo, hi, c in zip(edges[:-1], edges[1:], hist):
            out.append((float(lo), float(hi), int(c), int(c) / shots))
    return out


def write_binned_csv(path: PathLike, rows: list) -> None:
    write_csv(path, ["bin_low", "bin_high", "count", "frequency"], [
        (repr(lo), repr(hi), c, repr(f)) for lo, hi, c, f in rows
    ])


def write_trace_csv(path: PathLike, trace: list) -> None:
    write_csv(path, ["evaluation", "cost"], [(k, repr(c)) for k, c in trace])
