"""Angle-schedule strategies: fixed linear ramps, optimizers, and transfer.

All optimizers minimize F_p = <H_C>, share one precomputed cost diagonal,
count every circuit evaluation against the budget (finite-difference probes
included) and return the best point evaluated, even when stopped early.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence, Union

import numpy as np
from scipy.optimize import minimize
from scipy.stats import qmc

from . import config
from .engine import AngleSchedule, CostDiagonal, build_cost_diagonal, expectation, run_circuit
from .errors import InvalidArgumentError, NumericalFailureError
from .ising import IsingModel

_RAMP_KEYS = ("alpha_I", "b_I", "alpha_z", "b_z")


@dataclass(frozen=True)
class LinearRampParams:
    alpha_I: float
    b_I: float
    alpha_z: float
    b_z: float

    def __post_init__(self):
        for k in _RAMP_KEYS:
            v = float(getattr(self, k))
            if not math.isfinite(v):
                raise InvalidArgumentError(f"{k} must be finite")
            object.__setattr__(self, k, v)

    @classmethod
    def defaults(cls) -> "LinearRampParams":
        return cls(**config.FIXED_ANGLE_PARAMS)

    def as_vector(self) -> np.ndarray:
        return np.array([self.alpha_I, self.b_I, self.alpha_z, self.b_z])

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in _RAMP_KEYS}

    @classmethod
    def from_dict(cls, data: dict) -> "LinearRampParams":
        return cls(**{k: data[k] for k in _RAMP_KEYS})


@dataclass(frozen=True)
class GammaScaling:
    scale_factor: float

    @classmethod
    def for_model(cls, model: IsingModel) -> "GammaScaling":
        """Largest |h_i| or |J_ij| of the instance."""
        return cls(model.max_abs_coefficient())


@dataclass
class OptimizationResult:
    schedule: AngleSchedule
    final_cost: float
    evaluations: int
    converged: bool
    initial_cost: float
    trace: list = field(default_factory=list)


def fixed_angle_schedule(
    p: int,
    params: Optional[LinearRampParams] = None,
    scaling: Union[GammaScaling, float] = 1.0,
) -> AngleSchedule:
    """gamma_l = (-b_I - alpha_I (l-1)/p) / scale, beta_l = b_z - alpha_z (l-1)/p."""
    if p < 1:
        raise InvalidArgumentError("depth p must be at least 1")
    params = params or LinearRampParams.defaults()
    scale = scaling.scale_factor if isinstance(scaling, GammaScaling) else float(scaling)
    if not scale > 0:
        raise InvalidArgumentError("gamma scale factor must be positive (all-zero model?)")
    # evaluated exactly on the decimal values of the inputs and rounded once, so
    # p=2 defaults give gamma_2 = -0.215 rather than -0.21500000000000002
    a_i, b_i, a_z, b_z, sc = (Fraction(repr(float(v))) for v in (
        params.alpha_I, params.b_I, params.alpha_z, params.b_z, scale))
    gamma = tuple(float((-b_i - a_i * l / p) / sc) for l in range(p))
    beta = tuple(float(b_z - a_z * l / p) for l in range(p))
    return AngleSchedule(gamma, beta)


class _BudgetExhausted(Exception):
    pass


class _Objective:
    """Budgeted, best-so-far-tracking wrapper around x -> F_p(schedule(x))."""

    def __init__(self, model, to_schedule, budget, diag=None, max_qubits=config.MAX_QUBITS):
        if budget < 1:
            raise InvalidArgumentError("budget must be at least one evaluation")
        self.model = model
        self.diag = diag if diag is not None else build_cost_diagonal(model, max_qubits)
        self.to_schedule = to_schedule
        self.budget = budget
        self.evaluations = 0
        self.trace = []
        self.best_x = None
        self.best_cost = math.inf

    def __call__(self, x) -> float:
        if self.evaluations >= self.budget:
            raise _BudgetExhausted
        x = np.array(x, dtype=float)
        state = run_circuit(self.model, self.to_schedule(x), self.diag)
        cost = expectation(state, self.diag)
        if not math.isfinite(cost):
            raise NumericalFailureError(f"objective is {cost} at {x.tolist()}")
        self.evaluations += 1
        self.trace.append((self.evaluations, cost))
        # strict comparison: first-found wins ties
        if cost < self.best_cost:
            self.best_cost, self.best_x = cost, x
        return cost

    def result(self, converged: bool) -> OptimizationResult:
        return OptimizationResult(
            schedule=self.to_schedule(self.best_x),
            final_cost=self.best_cost,
            evaluations=self.evaluations,
            converged=converged,
            initial_cost=self.trace[0][1],
            trace=list(self.trace),
        )


def optimize_full(
    model: IsingModel,
    p: int,
    initial: Optional[AngleSchedule] = None,
    budget: int = config.BUDGET_FULL,
    fd_step: float = config.FD_STEP,
    gtol: float = 1e-6,
    diag: Optional[CostDiagonal] = None,
) -> OptimizationResult:
    """BFGS over all 2p angles with central finite-difference gradients.

    Starts from the fixed-angle schedule unless ``initial`` is given.
    """
    if initial is None:
        initial = fixed_angle_schedule(p, scaling=GammaScaling.for_model(model))
    if initial.p != p:
        raise InvalidArgumentError(f"initial schedule has depth {initial.p}, expected {p}")
    obj = _Objective(model, AngleSchedule.from_vector, budget, diag)

    def grad(x):
        g = np.empty_like(x)
        for k in range(x.size):
            e = np.zeros_like(x)
            e[k] = fd_step
            g[k] = (obj(x + e) - obj(x - e)) / (2 * fd_step)
        return g

    x0 = initial.as_vector()
    try:
        obj(x0)
        res = minimize(obj, x0, jac=grad, method="BFGS", options={"gtol": gtol, "maxiter": 10 * budget})
        converged = bool(res.success)
    except _BudgetExhausted:
        converged = False
    return obj.result(converged)


def _compass(obj, x, fx, lo, hi, free, min_step, initial_step):
    """Opportunistic compass search from x; returns when the step falls below min_step."""
    span = hi - lo
    step = initial_step * span
    while np.max(step[free] / span[free]) >= min_step:
        improved = False
        for k in np.flatnonzero(free):
            for sign in (1.0, -1.0):
                y = x.copy()
                y[k] = np.clip(y[k] + sign * step[k], lo[k], hi[k])
                if y[k] == x[k]:
                    continue
                fy = obj(y)
                if fy < fx:
                    x, fx, improved = y, fy, True
                    break
        if not improved:
            step = step * 0.5
    return x, fx


def _explore_then_refine(obj, x0, lo, hi, seed, explore_fraction=0.25, min_step=1e-4, initial_step=0.0625):
    """Scrambled-Sobol sweep of the box, then compass searches started from the
    best sweep points in order; runs until the budget is spent.

    Sets ``obj.converged`` once a local search contracts below ``min_step``.
    A fully collapsed box is evaluated once.
    """
    span = hi - lo
    free = span > 0
    x = np.clip(x0, lo, hi)
    fx = obj(x)
    if not free.any():
        obj.converged = True
        return
    m = max(int(math.log2(max(obj.budget * explore_fraction, 1.0))), 1)
    sweep = lo + qmc.Sobol(lo.size, scramble=True, seed=seed).random_base2(m) * span
    costs = [obj(y) for y in sweep]
    starts = [(fx, x)] + [(costs[k], sweep[k]) for k in np.argsort(costs, kind="stable")]
    starts.sort(key=lambda t: t[0])
    for f_start, x_start in starts:
        _compass(obj, x_start, f_start, lo, hi, free, min_step, initial_step)
        obj.converged = True


def _bounded_search(model, to_schedule, x0, bounds, budget, seed, diag):
    bounds = np.asarray(bounds, dtype=float)
    lo, hi = bounds[:, 0], bounds[:, 1]
    if not (np.all(np.isfinite(bounds)) and np.all(lo <= hi)):
        raise InvalidArgumentError("bounds must be finite with lower <= upper")
    obj = _Objective(model, to_schedule, budget, diag)
    obj.converged = False
    try:
        _explore_then_refine(obj, np.asarray(x0, dtype=float), lo, hi, seed)
    except _BudgetExhausted:
        pass
    return obj, obj.converged


def optimize_linear_ramp(
    model: IsingModel,
    p: int,
    initial: Optional[LinearRampParams] = None,
    bounds: Sequence = config.RAMP_BOUNDS,
    budget: int = config.BUDGET_LINEAR_RAMP,
    seed: int = 0,
    diag: Optional[CostDiagonal] = None,
):
    """Derivative-free search over (alpha_I, b_I, alpha_z, b_z)."""
    initial = initial or LinearRampParams.defaults()
    scaling = GammaScaling.for_model(model)

    def to_schedule(x):
        return fixed_angle_schedule(p, LinearRampParams(*x), scaling)

    obj, converged = _bounded_search(model, to_schedule, initial.as_vector(), bounds, budget, seed, diag)
    result = obj.result(converged)
    return LinearRampParams(*obj.best_x), result


def optimize_gamma_only(
    model: IsingModel,
    p: int,
    fixed_beta_params: Optional[tuple] = None,
    initial: Optional[tuple] = None,
    bounds: Sequence = config.RAMP_BOUNDS[:2],
    budget: int = config.BUDGET_GAMMA_ONLY,
    seed: int = 0,
    diag: Optional[CostDiagonal] = None,
):
    """Derivative-free search over (alpha_I, b_I) with (alpha_z, b_z) held fixed."""
    d = LinearRampParams.defaults()
    alpha_z, b_z = fixed_beta_params if fixed_beta_params is not None else (d.alpha_z, d.b_z)
    x0 = initial if initial is not None else (d.alpha_I, d.b_I)
    scaling = GammaScaling.for_model(model)

    def to_schedule(x):
        return fixed_angle_schedule(p, LinearRampParams(x[0], x[1], alpha_z, b_z), scaling)

    obj, converged = _bounded_search(model, to_schedule, x0, bounds, budget, seed, diag)
    result = obj.result(converged)
    return LinearRampParams(obj.best_x[0], obj.best_x[1], alpha_z, b_z), result


def transfer(
    source: Union[AngleSchedule, LinearRampParams],
    target_model: IsingModel,
    p: Optional[int] = None,
) -> AngleSchedule:
    """Schedule for ``target_model`` from angles or ramp parameters found elsewhere.

    Raw schedules are reused verbatim; ramp parameters are re-expanded with the
    target's gamma scaling (``p`` is then required).
    """
    if isinstance(source, AngleSchedule):
        return source
    if p is None:
        raise InvalidArgumentError("depth p is required to expand ramp parameters")
    return fixed_angle_schedule(p, source, GammaScaling.for_model(target_model))
