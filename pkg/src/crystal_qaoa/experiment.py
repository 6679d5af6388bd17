"""Experiment sweeps: (instance x depth x strategy) cells, reports and summaries.

Seeding: every random stream is derived from one master seed with
``numpy.random.SeedSequence(master, spawn_key=(crc32(key), ...))`` where the
keys name the cell and the purpose ("optimize" or "sample"). A cell's seeds
therefore do not depend on which other cells run or in which order.
"""
from __future__ import annotations

import logging
import time
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import config
from . import fileio
from .engine import (
    AngleSchedule,
    build_cost_diagonal,
    expectation,
    run_circuit,
    sample,
    sample_uniform,
    success_rate,
)
from .errors import FormatError, NumericalFailureError, ResourceLimitError
from .ising import IsingModel, SpectrumSummary, exhaustive_ground_states
from .lattice import assemble_ising
from .strategies import (
    GammaScaling,
    LinearRampParams,
    fixed_angle_schedule,
    optimize_full,
    optimize_gamma_only,
    optimize_linear_ramp,
    transfer,
)

log = logging.getLogger(__name__)

STRATEGIES = ("fixed", "full-opt", "linear-ramp", "gamma-only", "transfer")
OPTIMIZING = ("full-opt", "linear-ramp", "gamma-only")
DEFAULT_BUDGETS = {
    "full-opt": config.BUDGET_FULL,
    "linear-ramp": config.BUDGET_LINEAR_RAMP,
    "gamma-only": config.BUDGET_GAMMA_ONLY,
}


def derive_seed(master: int, *keys) -> int:
    spawn_key = tuple(zlib.crc32(str(k).encode()) for k in keys)
    return int(np.random.SeedSequence(master, spawn_key=spawn_key).generate_state(1)[0])


@dataclass
class ExperimentConfig:
    instances: list
    strategy: str = "fixed"
    depths: list = field(default_factory=lambda: [5])
    shots: int = config.SHOTS
    seed: int = 0
    out_dir: str = "results"
    workers: int = 1
    max_qubits: int = config.MAX_QUBITS
    budget: Optional[int] = None
    random_baseline: bool = False
    transfer_source: Optional[str] = None
    transfer_strategy: str = "full-opt"
    histogram_bins: int = config.HISTOGRAM_BINS

    def __post_init__(self):
        if isinstance(self.instances, str):
            self.instances = [self.instances]
        if not self.instances:
            raise FormatError("config: 'instances' must list at least one file")
        if self.strategy not in STRATEGIES:
            raise FormatError(f"config.strategy: {self.strategy!r} is not one of {', '.join(STRATEGIES)}")
        if self.strategy == "transfer":
            if not self.transfer_source:
                raise FormatError("config: strategy 'transfer' needs 'transfer_source'")
            if self.transfer_strategy not in OPTIMIZING:
                raise FormatError(f"config.transfer_strategy: must be one of {', '.join(OPTIMIZING)}")
        if not self.depths or any(int(p) < 1 for p in self.depths):
            raise FormatError("config.depths: need a nonempty list of positive depths")
        self.depths = [int(p) for p in self.depths]
        if int(self.shots) < 1:
            raise FormatError("config.shots: must be at least 1")
        self.shots = int(self.shots)
        if int(self.workers) < 1:
            raise FormatError("config.workers: must be at least 1")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise FormatError(f"config: unknown field(s) {', '.join(sorted(unknown))}")
        return cls(**data)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        return cls.from_dict(fileio.read_json(path))


@dataclass
class RunReport:
    instance: str
    instance_path: str
    n: int
    p: int
    strategy: str
    schedule: Optional[dict]
    success_rate: float
    expectation: Optional[float]
    min_energy: float
    shots: int
    seed: int
    evaluations: int = 0
    converged: Optional[bool] = None
    ramp_params: Optional[dict] = None
    source_instance: Optional[str] = None
    wall_time: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)


def instance_id(path) -> str:
    return Path(path).stem


def load_model(path) -> IsingModel:
    """Instance file or lattice spec file (compiled on the fly)."""
    data = fileio.read_json(path)
    if fileio.is_lattice_spec(data):
        spec, table = fileio.parse_lattice_spec(data, str(path))
        return assemble_ising(spec, table)
    return fileio.parse_instance(data, str(path))


def obtain_schedule(model, strategy, p, budget=None, seed=0, diag=None):
    """Returns (schedule, OptimizationResult or None, LinearRampParams or None)."""
    if strategy == "fixed":
        return fixed_angle_schedule(p, scaling=GammaScaling.for_model(model)), None, None
    budget = budget or DEFAULT_BUDGETS[strategy]
    if strategy == "full-opt":
        res = optimize_full(model, p, budget=budget, diag=diag)
        return res.schedule, res, None
    if strategy == "linear-ramp":
        params, res = optimize_linear_ramp(model, p, budget=budget, seed=seed, diag=diag)
    elif strategy == "gamma-only":
        params, res = optimize_gamma_only(model, p, budget=budget, seed=seed, diag=diag)
    else:
        raise ValueError(f"strategy {strategy!r} does not produce a schedule by itself")
    return res.schedule, res, params


def cell_name(instance: str, strategy: str, p) -> str:
    return f"{instance}_{strategy}_p{p}"


def write_cell_outputs(out_dir: Path, report: RunReport, histogram, model, bins, trace=None, name=None) -> None:
    name = name or cell_name(report.instance, report.strategy, report.p)
    rows = fileio.histogram_rows(histogram, model, report.min_energy)
    fileio.write_histogram_csv(out_dir / f"histogram_{name}.csv", rows)
    fileio.write_binned_csv(out_dir / f"binned_{name}.csv", fileio.binned_rows(rows, bins))
    if trace:
        fileio.write_trace_csv(out_dir / f"trace_{name}.csv", trace)
    fileio.write_json(out_dir / f"report_{name}.json", report.to_dict())


def sample_schedule(model, spectrum, schedule, shots, seed, diag=None):
    """Run, take the exact expectation, sample; returns (histogram, expectation, success rate)."""
    diag = diag if diag is not None else build_cost_diagonal(model)
    state = run_circuit(model, schedule, diag)
    e = expectation(state, diag)
    hist = sample(state, shots, seed)
    return hist, e, success_rate(hist, model, spectrum)


@dataclass
class Cell:
    instance_path: str
    strategy: str
    p: int


def _run_cell(cell: Cell, cfg: ExperimentConfig) -> RunReport:
    t0 = time.perf_counter()
    out_dir = Path(cfg.out_dir)
    model = load_model(cell.instance_path)
    name = instance_id(cell.instance_path)
    spectrum = exhaustive_ground_states(model)

    if cell.strategy == "random":
        seed = derive_seed(cfg.seed, name, "random", 0, "sample")
        hist = sample_uniform(model.n_sites, cfg.shots, seed)
        report = RunReport(name, str(cell.instance_path), model.n_sites, 0, "random", None,
                           success_rate(hist, model, spectrum), None, spectrum.min_energy, cfg.shots, seed)
        report.wall_time = time.perf_counter() - t0
        write_cell_outputs(out_dir, report, hist, model, cfg.histogram_bins)
        return report

    diag = build_cost_diagonal(model, cfg.max_qubits)
    source_name = None
    if cell.strategy == "transfer":
        src_model = load_model(cfg.transfer_source)
        source_name = instance_id(cfg.transfer_source)
        opt_seed = derive_seed(cfg.seed, source_name, cfg.transfer_strategy, cell.p, "optimize")
        sched, res, params = obtain_schedule(src_model, cfg.transfer_strategy, cell.p, cfg.budget, opt_seed)
        schedule = transfer(params if params is not None else sched, model, cell.p)
    else:
        opt_seed = derive_seed(cfg.seed, name, cell.strategy, cell.p, "optimize")
        schedule, res, params = obtain_schedule(model, cell.strategy, cell.p, cfg.budget, opt_seed, diag)

    seed = derive_seed(cfg.seed, name, cell.strategy, cell.p, "sample")
    hist, e, rate = sample_schedule(model, spectrum, schedule, cfg.shots, seed, diag)
    report = RunReport(
        instance=name,
        instance_path=str(cell.instance_path),
        n=model.n_sites,
        p=cell.p,
        strategy=cell.strategy,
        schedule=schedule.to_dict(),
        success_rate=rate,
        expectation=e,
        min_energy=spectrum.min_energy,
        shots=cfg.shots,
        seed=seed,
        evaluations=res.evaluations if res else 0,
        converged=res.converged if res else None,
        ramp_params=params.to_dict() if params is not None else None,
        source_instance=source_name,
    )
    report.wall_time = time.perf_counter() - t0
    write_cell_outputs(out_dir, report, hist, model, cfg.histogram_bins, res.trace if res else None)
    return report


def _safe_run_cell(cell: Cell, cfg: ExperimentConfig):
    try:
        return _run_cell(cell, cfg)
    except Exception as exc:  # a failed cell is recorded, the sweep goes on
        log.error("cell %s failed: %s", cell_name(instance_id(cell.instance_path), cell.strategy, cell.p), exc)
        return exc


def experiment_cells(cfg: ExperimentConfig) -> list:
    cells = [Cell(str(path), cfg.strategy, p) for path in cfg.instances for p in cfg.depths]
    if cfg.random_baseline:
        cells += [Cell(str(path), "random", 0) for path in cfg.instances]
    return cells


SUMMARY_COLUMNS = ("instance", "n", "strategy", "p", "status", "success_rate", "expectation",
                   "min_energy", "shots", "seed", "evaluations", "converged")


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return v


def write_summaries(out_dir: Path, cells: list, outcomes: list) -> None:
    """runs.csv: one row per cell. summary.csv: success rates with rows p and one
    column per (instance, strategy), the layout of a results table."""
    rows = []
    table = {}
    columns = []
    for cell, out in zip(cells, outcomes):
        name = instance_id(cell.instance_path)
        col = f"{name}:{cell.strategy}"
        if col not in columns:
            columns.append(col)
        if isinstance(out, Exception):
            rows.append((name, "", cell.strategy, cell.p, "failed") + ("",) * 7)
            table[(cell.p, col)] = "failed"
        else:
            rows.append(tuple(_fmt(v) for v in (
                out.instance, out.n, out.strategy, out.p, "ok", out.success_rate, out.expectation,
                out.min_energy, out.shots, out.seed, out.evaluations, out.converged)))
            table[(cell.p, col)] = repr(out.success_rate)
    fileio.write_csv(out_dir / "runs.csv", SUMMARY_COLUMNS, rows)
    depths = sorted({c.p for c in cells})
    fileio.write_csv(out_dir / "summary.csv", ["p"] + columns,
                     [[p] + [table.get((p, c), "") for c in columns] for p in depths])


def run_experiment(cfg: ExperimentConfig) -> list:
    """Run every cell; returns RunReport or Exception per cell, in cell order."""
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    cells = experiment_cells(cfg)
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            outcomes = list(pool.map(_safe_run_cell, cells, [cfg] * len(cells)))
    else:
        outcomes = [_safe_run_cell(c, cfg) for c in cells]
    write_summaries(out_dir, cells, outcomes)
    return outcomes


def run_transfer(source, target, strategy, depths, shots=config.SHOTS, seed=0, out_dir="results",
                 budget=None, max_qubits=config.MAX_QUBITS, bins=config.HISTOGRAM_BINS) -> list:
    """Optimize on ``source`` and sample both the source itself and ``target``.

    Returns a list of (source_report, target_report) per depth and writes
    transfer_summary.csv. The source-side cell uses the seeds a plain run of
    the same strategy would use. If the target cannot be simulated or solved
    (e.g. it is over the qubit ceiling) its side is recorded as failed, with a
    report holding the error, and the target entry of the pair is the exception.
    """
    if strategy not in OPTIMIZING:
        raise FormatError(f"transfer strategy must be one of {', '.join(OPTIMIZING)}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    src_model, tgt_model = load_model(source), load_model(target)
    src_name, tgt_name = instance_id(source), instance_id(target)
    src_spec = exhaustive_ground_states(src_model)
    src_diag = build_cost_diagonal(src_model, max_qubits)
    try:
        tgt_spec = exhaustive_ground_states(tgt_model)
        tgt_diag = build_cost_diagonal(tgt_model, max_qubits)
        tgt_error = None
    except (ResourceLimitError, NumericalFailureError) as exc:
        log.error("target %s cannot be run: %s", tgt_name, exc)
        tgt_error = exc

    pairs, rows = [], []
    for p in depths:
        t0 = time.perf_counter()
        opt_seed = derive_seed(seed, src_name, strategy, p, "optimize")
        sched, res, params = obtain_schedule(src_model, strategy, p, budget, opt_seed, src_diag)
        sides = [(src_name, source, src_model, src_spec, src_diag, sched, None)]
        if tgt_error is None:
            sides.append((tgt_name, target, tgt_model, tgt_spec, tgt_diag,
                          transfer(params if params is not None else sched, tgt_model, p), src_name))
        reports = []
        for name, path, model, spec, diag, sch, src in sides:
            s = derive_seed(seed, name, strategy, p, "sample")
            hist, e, rate = sample_schedule(model, spec, sch, shots, s, diag)
            rep = RunReport(name, str(path), model.n_sites, p, strategy, sch.to_dict(), rate, e,
                            spec.min_energy, shots, s, res.evaluations, res.converged,
                            params.to_dict() if params is not None else None, src)
            rep.wall_time = time.perf_counter() - t0
            if src is None:
                write_cell_outputs(out_dir, rep, hist, model, bins, res.trace)
            else:
                write_cell_outputs(out_dir, rep, hist, model, bins, name=cell_name(f"{name}_from_{src}", strategy, p))
            reports.append(rep)
        if tgt_error is not None:
            fileio.write_json(out_dir / f"report_{cell_name(f'{tgt_name}_from_{src_name}', strategy, p)}.json", {
                "instance": tgt_name, "instance_path": str(target), "n": tgt_model.n_sites, "p": p,
                "strategy": strategy, "source_instance": src_name, "status": "failed",
                "error": str(tgt_error), "schedule": transfer(params if params is not None else sched,
                                                              tgt_model, p).to_dict(),
            })
            reports.append(tgt_error)
        pairs.append(tuple(reports))
        tgt_rate = "failed" if tgt_error is not None else repr(reports[1].success_rate)
        rows.append((p, src_name, tgt_name, strategy, repr(reports[0].success_rate), tgt_rate))
    fileio.write_csv(out_dir / "transfer_summary.csv",
                     ["p", "source", "target", "strategy", "source_success_rate", "target_success_rate"], rows)
    return pairs
