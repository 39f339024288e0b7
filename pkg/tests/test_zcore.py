import numpy as np
import pytest
from hypothesis import given, strategies as st

from zchange import zcore
from zchange.limits import DimensionMismatch
from zchange.models import (
    OuConfig,
    gaussian_mean_spec,
    gaussian_meanvar_spec,
    meanvar_start,
    ou_closed_form,
    ou_drift_spec,
    ou_pairs,
    ou_simulate,
)
from zchange.numerics import NotPositiveDefinite, RngStream, quad_form
from zchange.zcore import (
    EstimatingFunctionSpec,
    InsufficientData,
    ZPath,
    changepoint_estimate,
    information_hat,
    run_test,
    solve_z_estimator,
    z_process,
)


def zero_path(n, d=1):
    return ZPath(n=n, u=np.arange(n + 1) / n, z=np.zeros((n + 1, d)), sqnorm=np.zeros(n + 1), min_pivot=1.0)


def linear_transform(spec, A):
    """The same model with every estimating function premultiplied by ``A``."""
    return EstimatingFunctionSpec(
        dim=spec.dim,
        psi=lambda x, t: spec.psi_rows(x, t) @ A.T,
        dpsi=lambda x, t: A @ spec.dpsi_rows(x, t),
        label=spec.label + "-transformed",
    )


def fit_path(spec, data, theta0, mode="outer"):
    fit = solve_z_estimator(spec, data, theta0)
    info = information_hat(spec, data, fit.x, mode)
    return fit, info, z_process(spec, data, fit.x, info)


class TestSolve:
    def test_gaussian_mean(self):
        fit = solve_z_estimator(gaussian_mean_spec(1.0), np.array([1.0, 2.0, 3.0, 4.0]), [0.0])
        assert fit.x[0] == pytest.approx(2.5, abs=1e-12)

    def test_meanvar_two_points(self):
        # root of the score: mean 0 and n-divisor variance 1
        fit = solve_z_estimator(gaussian_meanvar_spec(), np.array([-1.0, 1.0]), [0.2, 0.8])
        np.testing.assert_allclose(fit.x, [0.0, 1.0], atol=1e-10)

    def test_residual_tolerance(self):
        data = np.random.default_rng(1).standard_normal(300) * 2 + 1
        spec = gaussian_meanvar_spec()
        fit = solve_z_estimator(spec, data, [0.0, 1.0])
        assert np.max(np.abs(spec.psi_rows(data, fit.x).mean(axis=0))) <= 1e-10

    def test_ou_closed_form(self):
        cfg = OuConfig(theta=1.0, sigma=1.0, delta=0.1, n=2000)
        pairs = ou_pairs(ou_simulate(cfg, RngStream(5)))
        fit = solve_z_estimator(ou_drift_spec(1.0, 0.1), pairs, [3.0])
        assert fit.x[0] == pytest.approx(ou_closed_form(pairs, 0.1), abs=1e-8)

    def test_wrong_theta_length(self):
        with pytest.raises(ValueError):
            solve_z_estimator(gaussian_mean_spec(), np.ones(3), [0.0, 1.0])

    def test_equal_data_fails_downstream(self):
        # the variance score has no finite root; the information matrix degenerates
        with pytest.raises(NotPositiveDefinite, match="gaussian-meanvar"):
            run_test(gaussian_meanvar_spec(), np.ones(10), [1.0, 1.0])


class TestInformation:
    def test_gaussian_mean_modes(self):
        x = np.array([0.5, -1.0, 2.0, 0.1])
        spec = gaussian_mean_spec(1.0)
        th = np.array([x.mean()])
        np.testing.assert_array_equal(information_hat(spec, x, th, "jacobian"), [[1.0]])
        assert information_hat(spec, x, th, "outer")[0, 0] == pytest.approx(x.var(), rel=1e-14)

    def test_identical_observations(self):
        x = np.full(10, 3.0)
        with pytest.raises(NotPositiveDefinite):
            information_hat(gaussian_mean_spec(), x, [3.0], "outer")

    def test_ou_jacobian(self):
        cfg = OuConfig(theta=1.0, sigma=0.7, delta=0.1, n=500)
        pairs = ou_pairs(ou_simulate(cfg, RngStream(2)))
        info = information_hat(ou_drift_spec(0.7, 0.1), pairs, [1.0], "jacobian")
        expected = 0.1 * np.sum(pairs[:, 0] ** 2) / (len(pairs) * 0.7**2)
        assert info[0, 0] == pytest.approx(expected, rel=1e-12)

    def test_unknown_mode(self):
        with pytest.raises(ValueError):
            information_hat(gaussian_mean_spec(), np.arange(4.0), [1.5], "hessian")


class TestZProcess:
    def test_two_point_example(self):
        path = z_process(gaussian_mean_spec(1.0), np.array([-1.0, 1.0]), [0.0], [[1.0]])
        np.testing.assert_allclose(path.z[:, 0], [0.0, -1 / np.sqrt(2), 0.0], atol=1e-15)
        np.testing.assert_array_equal(path.u, [0.0, 0.5, 1.0])
        assert zcore.test_statistic(path) == pytest.approx(1 / np.sqrt(2), rel=1e-15)
        assert changepoint_estimate(path) == 0.5

    @given(st.integers(0, 2**32 - 1), st.integers(20, 200))
    def test_starts_at_zero_and_pins(self, seed, n):
        x = np.random.default_rng(seed).standard_normal(n)
        _, info, path = fit_path(gaussian_meanvar_spec(), x, meanvar_start(x))
        assert np.all(path.z[0] == 0.0)
        assert path.norm[-1] <= path.pinning_bound()
        np.testing.assert_allclose(path.sqnorm, np.sum(path.z**2, axis=1), rtol=1e-12, atol=1e-300)

    @given(st.integers(0, 2**32 - 1))
    def test_whitening_invariance(self, seed):
        rng = np.random.default_rng(seed)
        x = rng.standard_normal(150) * 1.5 + 0.3
        A = rng.standard_normal((2, 2)) + 3 * np.eye(2)
        spec, spec_a = gaussian_meanvar_spec(), linear_transform(gaussian_meanvar_spec(), A)
        fit, _, p1 = fit_path(spec, x, meanvar_start(x))
        p2 = z_process(spec_a, x, fit.x, information_hat(spec_a, x, fit.x, "outer"))
        np.testing.assert_allclose(p2.sqnorm[1:-1], p1.sqnorm[1:-1], rtol=1e-8)

    @given(st.integers(0, 2**32 - 1))
    def test_whitening_invariance_refit(self, seed):
        rng = np.random.default_rng(seed)
        x = rng.standard_normal(150) * 1.5 + 0.3
        A = rng.standard_normal((2, 2)) + 3 * np.eye(2)
        spec, spec_a = gaussian_meanvar_spec(), linear_transform(gaussian_meanvar_spec(), A)
        paths = []
        for sp in (spec, spec_a):
            fit = solve_z_estimator(sp, x, meanvar_start(x), tol=1e-14)
            paths.append(z_process(sp, x, fit.x, information_hat(sp, x, fit.x, "outer")))
        np.testing.assert_allclose(paths[1].sqnorm[1:-1], paths[0].sqnorm[1:-1], rtol=1e-8)

    def test_factorization_invariance(self):
        x = np.random.default_rng(3).standard_normal(80)
        spec = gaussian_meanvar_spec()
        fit, info, path = fit_path(spec, x, [0.0, 1.0])
        partial = np.cumsum(spec.psi_rows(x, fit.x), axis=0) / np.sqrt(len(x))
        direct = [quad_form(v, info) for v in partial]
        np.testing.assert_allclose(path.sqnorm[1:], direct, rtol=1e-12, atol=1e-20)

    def test_custom_grid_must_match(self):
        spec = EstimatingFunctionSpec(
            dim=1, psi=gaussian_mean_spec().psi, dpsi=gaussian_mean_spec().dpsi,
            label="bad-grid", time_grid=lambda d, t: np.linspace(0, 1, 3),
        )
        with pytest.raises(ValueError):
            z_process(spec, np.arange(5.0), [2.0], [[1.0]])


class TestStatistic:
    def test_zero_path(self):
        path = zero_path(10)
        assert zcore.test_statistic(path) == 0.0
        assert changepoint_estimate(path) == 0.0

    @given(st.integers(0, 2**32 - 1))
    def test_reversal_invariance(self, seed):
        x = np.random.default_rng(seed).standard_normal(64)
        spec = gaussian_mean_spec()
        _, _, fwd = fit_path(spec, x, [0.0])
        _, _, bwd = fit_path(spec, x[::-1].copy(), [0.0])
        assert zcore.test_statistic(bwd) == pytest.approx(zcore.test_statistic(fwd), abs=1e-9)

    @given(st.integers(0, 2**32 - 1), st.integers(2, 7))
    def test_monotone_refinement(self, seed, stride):
        x = np.random.default_rng(seed).standard_normal(100)
        _, _, path = fit_path(gaussian_mean_spec(), x, [0.0])
        assert zcore.test_statistic(path) >= np.max(path.norm[::stride])

    def test_argmax_first_index(self):
        path = ZPath(n=4, u=np.arange(5) / 4, z=np.array([[0], [1.0], [-1.0], [1.0], [0]]),
                     sqnorm=np.array([0, 1.0, 1.0, 1.0, 0]), min_pivot=1.0)
        assert changepoint_estimate(path) == 0.25


class TestRunTest:
    def test_report_fields(self):
        x = RngStream(8).generator.standard_normal(200)
        rep = run_test(gaussian_mean_spec(), x, [0.0])
        assert 0.0 <= rep.p_value <= 1.0
        assert rep.reject_at == {a: rep.p_value <= a for a in (0.10, 0.05, 0.01)}
        assert 0.0 <= rep.changepoint_u <= 1.0
        assert rep.theta_hat[0] == pytest.approx(x.mean(), abs=1e-12)
        assert rep.info_hat.shape == (1, 1)
        assert rep.pinning_residual <= 1e-8

    @pytest.mark.parametrize("x", [np.array([]), np.array([7.0])])
    def test_degenerate_input(self, x):
        with pytest.raises(InsufficientData):
            run_test(gaussian_mean_spec(), x, [0.0])

    def test_single_observation_solves(self):
        fit = solve_z_estimator(gaussian_mean_spec(), np.array([7.0]), [0.0])
        assert fit.x[0] == 7.0

    def test_meanvar_needs_table(self, small_table_2d):
        x = RngStream(9).generator.standard_normal(300)
        with pytest.raises(DimensionMismatch):
            run_test(gaussian_meanvar_spec(), x, [0.0, 1.0])
        rep = run_test(gaussian_meanvar_spec(), x, [0.0, 1.0], crit=small_table_2d)
        assert 1 / (small_table_2d.reps + 1) <= rep.p_value <= 1.0

    def test_detects_shift(self):
        x = RngStream(10).generator.standard_normal(500)
        x[250:] += 1.0
        rep = run_test(gaussian_mean_spec(), x, [0.0])
        assert rep.reject_at[0.01]
        assert abs(rep.changepoint_u - 0.5) < 0.1

    def test_to_dict_is_json_ready(self):
        import json

        x = RngStream(11).generator.standard_normal(50)
        d = run_test(gaussian_mean_spec(), x, [0.0]).to_dict()
        assert json.loads(json.dumps(d)) == d
