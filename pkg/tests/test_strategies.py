import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from crystal_qaoa import config
from crystal_qaoa.engine import AngleSchedule, build_cost_diagonal, expectation, run_circuit, sample
from crystal_qaoa.errors import InvalidArgumentError, NumericalFailureError
from crystal_qaoa.ising import IsingModel, random_instance
from crystal_qaoa.strategies import (
    GammaScaling,
    LinearRampParams,
    _Objective,
    fixed_angle_schedule,
    optimize_full,
    optimize_gamma_only,
    optimize_linear_ramp,
    transfer,
)

from oracles import batched_expectations, ramp_grid


def reevaluate(model, schedule):
    diag = build_cost_diagonal(model)
    return expectation(run_circuit(model, schedule, diag), diag)


class TestFixedAngle:
    def test_p1(self):
        s = fixed_angle_schedule(1)
        assert s.gamma == (-0.2,) and s.beta == (1.5,)

    def test_p2(self):
        s = fixed_angle_schedule(2)
        assert s.gamma == (-0.20, -0.215)
        assert s.beta == (1.5, 0.9)

    def test_pure(self):
        a = fixed_angle_schedule(7, LinearRampParams(0.11, 0.3, 0.9, 1.7), 0.37)
        assert a == fixed_angle_schedule(7, LinearRampParams(0.11, 0.3, 0.9, 1.7), 0.37)

    def test_scale_halves_gamma(self):
        a, b = fixed_angle_schedule(4), fixed_angle_schedule(4, scaling=2.0)
        assert np.array_equal(np.array(b.gamma) * 2, np.array(a.gamma))
        assert a.beta == b.beta

    def test_defaults_come_from_config(self):
        assert LinearRampParams.defaults().to_dict() == config.FIXED_ANGLE_PARAMS

    def test_zero_scale_rejected(self):
        with pytest.raises(InvalidArgumentError):
            fixed_angle_schedule(2, scaling=GammaScaling.for_model(IsingModel(3, 1.0)))

    def test_bad_depth(self):
        with pytest.raises(InvalidArgumentError):
            fixed_angle_schedule(0)

    def test_scaling_is_max_coefficient(self):
        m = IsingModel(3, 0.0, [0.1, -0.4, 0.2], ((0, 2, -0.3),))
        assert GammaScaling.for_model(m).scale_factor == 0.4


class TestOptimizeFull:
    def test_single_qubit_global_minimum(self):
        m = IsingModel(1, 0.0, [1.0])
        axis = np.linspace(-np.pi, np.pi, 2001)
        g, b = np.meshgrid(axis, axis, indexing="ij")
        grid_min = np.min(np.sin(2 * b) * np.sin(2 * g))
        res = optimize_full(m, 1)
        assert res.converged
        assert abs(res.final_cost - grid_min) <= 1e-6

    def test_budget_one(self):
        m = random_instance(5, 1.0, 0)
        res = optimize_full(m, 3, budget=1)
        init = fixed_angle_schedule(3, scaling=GammaScaling.for_model(m))
        assert not res.converged and res.evaluations == 1
        assert res.final_cost == reevaluate(m, init)
        assert res.schedule == init

    def test_improves_on_initial(self):
        m = random_instance(10, 1.0, 0)
        res = optimize_full(m, 5)
        assert res.final_cost <= res.initial_cost
        assert res.evaluations <= config.BUDGET_FULL
        assert res.final_cost == pytest.approx(reevaluate(m, res.schedule), abs=1e-9)

    def test_trace_counts_every_evaluation(self):
        res = optimize_full(random_instance(4, 1.0, 1), 2, budget=37)
        assert res.evaluations == len(res.trace) <= 37
        assert res.final_cost == min(c for _, c in res.trace)

    def test_depth_mismatch(self):
        with pytest.raises(InvalidArgumentError):
            optimize_full(random_instance(3, 1.0, 0), 2, initial=fixed_angle_schedule(3))

    def test_non_finite_objective(self, monkeypatch):
        import crystal_qaoa.strategies as strategies

        monkeypatch.setattr(strategies, "expectation", lambda state, diag: float("nan"))
        with pytest.raises(NumericalFailureError):
            optimize_full(random_instance(3, 1.0, 0), 1)


class TestRampSearch:
    def test_collapsed_bounds(self):
        m = random_instance(6, 1.0, 0)
        pt = LinearRampParams(0.1, 0.3, 1.0, 1.4)
        params, res = optimize_linear_ramp(m, 3, bounds=[(v, v) for v in pt.as_vector()])
        assert params == pt and res.evaluations == 1

    def test_improves_on_initial(self):
        m = random_instance(10, 1.0, 3)
        params, res = optimize_linear_ramp(m, 5, budget=200)
        assert res.evaluations <= 200
        assert res.final_cost <= res.initial_cost
        sched = fixed_angle_schedule(5, params, GammaScaling.for_model(m))
        assert res.final_cost == pytest.approx(reevaluate(m, sched), abs=1e-9)

    def test_stays_in_bounds(self):
        bounds = [(0.0, 0.5), (0.1, 0.4), (0.5, 1.0), (1.0, 2.0)]
        params, res = optimize_linear_ramp(random_instance(5, 1.0, 2), 2, bounds=bounds, budget=80)
        for v, (lo, hi) in zip(params.as_vector(), bounds):
            assert lo <= v <= hi

    def test_seeded(self):
        m = random_instance(6, 1.0, 4)
        a = optimize_linear_ramp(m, 2, budget=60, seed=5)
        b = optimize_linear_ramp(m, 2, budget=60, seed=5)
        assert a[0] == b[0] and a[1].trace == b[1].trace

    def test_infinite_bounds_rejected(self):
        with pytest.raises(InvalidArgumentError):
            optimize_linear_ramp(random_instance(3, 1.0, 0), 1, bounds=[(0, np.inf)] * 4)

    @pytest.mark.slow
    @pytest.mark.parametrize("seed", [0, 1])
    def test_grid_oracle(self, seed):
        m = random_instance(8, 1.0, seed)
        scale = GammaScaling.for_model(m).scale_factor
        _, gam, bet = ramp_grid(3, scale, config.RAMP_BOUNDS, 20)
        grid_min = batched_expectations(m, gam, bet).min()
        _, res = optimize_linear_ramp(m, 3, budget=1000, seed=seed)
        assert res.final_cost <= grid_min + 0.05 * abs(grid_min)


class TestGammaOnly:
    def test_collapsed_bounds(self):
        m = random_instance(6, 1.0, 0)
        params, res = optimize_gamma_only(m, 2, (0.8, 1.1), (0.05, 0.25), bounds=[(0.05, 0.05), (0.25, 0.25)])
        assert params == LinearRampParams(0.05, 0.25, 0.8, 1.1)
        assert res.evaluations == 1

    def test_beta_is_held(self):
        m = random_instance(6, 1.0, 1)
        params, res = optimize_gamma_only(m, 3, (0.7, 1.3), budget=50)
        assert (params.alpha_z, params.b_z) == (0.7, 1.3)
        assert res.final_cost <= res.initial_cost

    @pytest.mark.slow
    @pytest.mark.parametrize("seed", [0, 1])
    def test_grid_oracle(self, seed):
        m = random_instance(8, 1.0, seed)
        scale = GammaScaling.for_model(m).scale_factor
        d = LinearRampParams.defaults()
        _, gam, bet = ramp_grid(3, scale, config.RAMP_BOUNDS[:2], 100, fixed=(d.alpha_z, d.b_z))
        grid_min = batched_expectations(m, gam, bet).min()
        _, res = optimize_gamma_only(m, 3, budget=300, seed=seed)
        assert res.final_cost <= grid_min + 0.05 * abs(grid_min)


class TestTransfer:
    def test_schedule_verbatim(self):
        s = AngleSchedule((0.1, 0.2), (0.3, 0.4))
        assert transfer(s, random_instance(4, 1.0, 0)) is s

    def test_identity_transfer_same_distribution(self):
        m = random_instance(8, 1.0, 2)
        res = optimize_full(m, 2, budget=60)
        a = sample(run_circuit(m, res.schedule), 5000, seed=1)
        b = sample(run_circuit(m, transfer(res.schedule, m)), 5000, seed=1)
        assert a.as_dict() == b.as_dict()

    def test_equal_scale_models(self):
        a = IsingModel(3, 0.0, [0.5, 0.1, 0.0], ((0, 1, -0.2),))
        b = IsingModel(5, 3.0, [0.0, -0.5, 0.2, 0.1, 0.0], ((1, 4, 0.3),))
        params = LinearRampParams(0.1, 0.4, 1.0, 1.2)
        assert transfer(params, a, 4) == transfer(params, b, 4)

    def test_rescales_to_target(self):
        params = LinearRampParams.defaults()
        big = IsingModel(2, 0.0, [2.0, 0.0])
        assert transfer(params, big, 2).gamma == fixed_angle_schedule(2, scaling=2.0).gamma

    def test_params_need_depth(self):
        with pytest.raises(InvalidArgumentError):
            transfer(LinearRampParams.defaults(), random_instance(3, 1.0, 0))


class TestObjective:
    def test_first_minimum_wins_ties(self):
        m = IsingModel(1, 0.0, [1.0])
        obj = _Objective(m, AngleSchedule.from_vector, budget=5)
        obj([0.0, 0.0])
        obj([0.0, 1.0])
        assert obj.best_x.tolist() == [0.0, 0.0]

    def test_budget_must_be_positive(self):
        with pytest.raises(InvalidArgumentError):
            _Objective(IsingModel(1, 0.0, [1.0]), AngleSchedule.from_vector, budget=0)


@settings(max_examples=10, deadline=None)
@given(st.integers(2, 6), st.integers(0, 500), st.integers(1, 3))
def test_optimizer_soundness(n, seed, p):
    m = random_instance(n, 1.0, seed)
    results = [
        optimize_full(m, p, budget=40),
        optimize_linear_ramp(m, p, budget=40, seed=seed)[1],
        optimize_gamma_only(m, p, budget=30, seed=seed)[1],
    ]
    for res in results:
        assert res.final_cost <= res.initial_cost
        assert abs(res.final_cost - reevaluate(m, res.schedule)) <= 1e-9


@settings(max_examples=8, deadline=None)
@given(st.integers(2, 6), st.integers(0, 500), st.floats(-20, 20))
def test_argmin_invariant_under_offset(n, seed, delta):
    m = random_instance(n, 1.0, seed)
    shifted = m.with_offset(delta)
    assert optimize_full(m, 2, budget=50).schedule == optimize_full(shifted, 2, budget=50).schedule
    a, _ = optimize_linear_ramp(m, 2, budget=50, seed=1)
    b, _ = optimize_linear_ramp(shifted, 2, budget=50, seed=1)
    assert a == b
