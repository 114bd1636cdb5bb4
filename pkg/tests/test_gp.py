"""Tests for GP regression, hyperparameter fitting and GP-compensated dynamics."""

from __future__ import annotations

import numpy as np
import pytest

from gp_skrl.dynamics.bicycle import discrete_step_nominal, nominal_jacobians
from gp_skrl.errors import EmptyDataError, RankDeficientError, ShapeMismatchError
from gp_skrl.gp.hyperparams import fit_hyperparams, marginal_log_likelihood
from gp_skrl.gp.regression import (
    GPHyperparams,
    GPModel,
    GPTrainingSet,
    channel_matrix,
    fitc_posterior,
    full_gp_posterior,
    gp_mean_jacobian,
)
from gp_skrl.gp.residuals import (
    LearnedDynamics,
    fit_gp_model,
    held_out_residual_rms,
    inducing_set,
    learned_jacobians,
    residual_target,
)
from gp_skrl.schemas.config import GPOptions
from gp_skrl.schemas.vehicle import NOMINAL_PARAMS

SELECTED = [0, 1, 3, 6, 7]


def _inputs(rng: np.random.Generator, n: int) -> np.ndarray:
    return np.column_stack(
        [
            rng.uniform(5.0, 15.0, n),
            rng.uniform(-1.0, 1.0, n),
            rng.uniform(-0.5, 0.5, n),
            rng.uniform(-0.5, 0.5, n),
            rng.uniform(0.0, 100.0, n),
            rng.uniform(-5.0, 5.0, n),
            rng.uniform(-1.0, 1.0, n),
            rng.uniform(-0.5, 0.5, n),
        ]
    )


def _spread(rng: np.random.Generator, n: int) -> np.ndarray:
    """Inputs spread over every selected coordinate, so small Gram matrices stay well conditioned."""
    return rng.uniform(-3.0, 3.0, size=(n, 8))


def _training(
    rng: np.random.Generator, n: int, n_y: int = 6, noise: float = 0.0, inputs: np.ndarray | None = None
) -> GPTrainingSet:
    Z = _inputs(rng, n) if inputs is None else inputs
    base = 0.1 * np.sin(Z[:, 0] / 3.0) + 0.2 * Z[:, 1] * Z[:, 6] - 0.1 * Z[:, 7]
    targets = np.column_stack([base * (a + 1) for a in range(n_y)])
    return GPTrainingSet(Z, targets + noise * rng.normal(size=targets.shape))


def _hp(n_y: int = 6) -> GPHyperparams:
    return GPHyperparams.uniform(n_y, signal_std=1.0, lengthscale=1.5, noise_variance=1e-3)


class TestTrainingSet:
    def test_wrong_input_width_rejected(self):
        with pytest.raises(ShapeMismatchError):
            GPTrainingSet(np.zeros((3, 6)), np.zeros((3, 6)))

    def test_row_mismatch_rejected(self):
        with pytest.raises(ShapeMismatchError):
            GPTrainingSet(np.zeros((3, 8)), np.zeros((4, 6)))

    def test_non_finite_rejected(self):
        Z = np.zeros((2, 8))
        Z[0, 0] = np.nan
        with pytest.raises(ValueError, match="finite"):
            GPTrainingSet(Z, np.zeros((2, 6)))

    def test_concatenate(self):
        rng = np.random.default_rng(0)
        joined = GPTrainingSet.concatenate([_training(rng, 4), _training(rng, 5)])
        assert len(joined) == 9
        with pytest.raises(EmptyDataError):
            GPTrainingSet.concatenate([])


class TestChannels:
    def test_full_is_identity(self):
        np.testing.assert_array_equal(channel_matrix("full"), np.eye(6))

    def test_lateral_selects_vy_and_omega(self):
        B = channel_matrix("lateral")
        assert B.shape == (6, 2)
        assert B[1, 0] == 1.0 and B[3, 1] == 1.0
        assert B.sum() == 2.0

    def test_unknown_channel(self):
        with pytest.raises(ValueError, match="Unknown residual channel"):
            channel_matrix("vertical")

    def test_hyperparameter_count_must_match_channel(self):
        with pytest.raises(ShapeMismatchError):
            GPModel(_hp(6), channel="lateral")


class TestPosterior:
    def test_single_point_closed_form(self):
        z0 = np.array([[10.0, 0.2, 0.0, 0.1, 0.0, 0.0, 0.3, -0.1]])
        hp = GPHyperparams.uniform(2, signal_std=2.0, lengthscale=1.5, noise_variance=0.01)
        model = GPModel(hp, input_indices=SELECTED, channel="lateral")
        model.fit(GPTrainingSet(z0, np.array([[0.7, -0.7]])))
        # unselected coordinates (phi, X, Y) must not matter
        z_star = np.array([10.5, 0.0, 1.0, 0.0, 9.0, 9.0, 0.2, 0.0])
        d2 = np.sum((z_star[SELECTED] - z0[0, SELECTED]) ** 2)
        k = 4.0 * np.exp(-d2 / (2 * 1.5**2))
        mean, var = model.predict(z_star)
        assert mean[0, 0] == pytest.approx(k * 0.7 / 4.01, rel=1e-8)
        assert mean[0, 1] == pytest.approx(-k * 0.7 / 4.01, rel=1e-8)
        assert var[0, 0] == pytest.approx(4.0 - k * k / 4.01, rel=1e-8)

    def test_empty_model_is_the_prior(self):
        model = GPModel(_hp())
        mean, var = model.predict(np.zeros(8))
        np.testing.assert_array_equal(mean, np.zeros((1, 6)))
        np.testing.assert_allclose(var, np.ones((1, 6)))
        assert model.kind == "empty"

    def test_fitc_with_all_inputs_inducing_matches_full(self):
        rng = np.random.default_rng(1)
        training = _training(rng, 12, inputs=_spread(rng, 12))
        full = GPModel(_hp()).fit(training)
        fitc = GPModel(_hp()).fit(training, inducing=training.inputs[:, SELECTED])
        assert full.kind == "full" and fitc.kind == "fitc"
        for z in _spread(rng, 10):
            m_full, v_full = full_gp_posterior(z, full)
            m_fitc, v_fitc = fitc_posterior(z, fitc)
            np.testing.assert_allclose(m_fitc, m_full, atol=1e-6)
            np.testing.assert_allclose(v_fitc, v_full, atol=1e-6)

    def test_posterior_kind_is_checked(self):
        rng = np.random.default_rng(2)
        full = GPModel(_hp()).fit(_training(rng, 5))
        with pytest.raises(ValueError, match="inducing set"):
            fitc_posterior(np.zeros(8), full)

    def test_variance_is_non_negative_and_shrinks_at_data(self):
        rng = np.random.default_rng(3)
        training = _training(rng, 40)
        model = GPModel(_hp()).fit(training)
        _, var_data = model.predict(training.inputs)
        far = training.inputs.copy()
        far[:, 0] += 100.0
        _, var_far = model.predict(far)
        assert np.all(var_data >= 0.0)
        assert np.all(var_data < var_far)
        np.testing.assert_allclose(var_far, 1.0, atol=1e-6)

    def test_noise_free_data_is_interpolated(self):
        rng = np.random.default_rng(4)
        training = _training(rng, 30)
        model = GPModel(GPHyperparams.uniform(6, 1.0, 1.5, 1e-8)).fit(training)
        np.testing.assert_allclose(model.predict_mean(training.inputs), training.targets, atol=1e-4)

    def test_predict_mean_agrees_with_predict(self):
        rng = np.random.default_rng(5)
        model = GPModel(_hp()).fit(_training(rng, 20), inducing=_inputs(rng, 6)[:, SELECTED])
        Z = _inputs(rng, 7)
        np.testing.assert_allclose(model.predict_mean(Z), model.predict(Z)[0])

    def test_clamp_projects_onto_training_box(self):
        rng = np.random.default_rng(6)
        training = _training(rng, 20)
        model = GPModel(_hp()).fit(training)
        z = training.inputs[:1].copy()
        z[0, 0] = 1e3
        edge = z.copy()
        edge[0, 0] = training.inputs[:, 0].max()
        np.testing.assert_allclose(model.predict_mean(z, clamp=True), model.predict_mean(edge))

    def test_query_width_checked(self):
        model = GPModel(_hp())
        with pytest.raises(ShapeMismatchError):
            model.predict(np.zeros(6))


class TestMeanJacobian:
    def test_matches_finite_differences(self):
        rng = np.random.default_rng(7)
        model = GPModel(_hp()).fit(_training(rng, 25))
        h = 1e-6
        for z in _inputs(rng, 5):
            Jx, Ju = gp_mean_jacobian(z, model)
            J = np.concatenate([Jx, Ju], axis=1)
            fd = np.empty((6, 8))
            for j in range(8):
                d = np.zeros(8)
                d[j] = h
                fd[:, j] = (model.predict_mean(z + d)[0] - model.predict_mean(z - d)[0]) / (2 * h)
            np.testing.assert_allclose(J, fd, rtol=1e-5, atol=1e-7)

    def test_clamped_query_is_flat_in_the_held_coordinates(self):
        rng = np.random.default_rng(15)
        training = _training(rng, 25)
        model = GPModel(_hp()).fit(training)
        middle = 0.5 * (training.inputs.min(axis=0) + training.inputs.max(axis=0))
        z = middle.copy()
        z[0] = 1e3
        z[7] = -1e3
        edge = model.clamp(z[None, SELECTED])[0]
        jac = model.mean_jacobian(z, clamp=True)[0]
        assert np.all(jac[:, [0, 7]] == 0.0)
        inside = model.mean_jacobian(middle, clamp=True)[0]
        assert np.any(inside[:, [0, 7]] != 0.0)
        h = 1e-6
        for j in (1, 3, 6):
            d = np.zeros(8)
            d[j] = h
            fd = (model.predict_mean(z + d, clamp=True)[0] - model.predict_mean(z - d, clamp=True)[0]) / (2 * h)
            np.testing.assert_allclose(jac[:, j], fd, rtol=1e-5, atol=1e-7)
        assert edge[0] == training.inputs[:, 0].max()

    def test_unselected_inputs_have_zero_derivative(self):
        rng = np.random.default_rng(8)
        model = GPModel(_hp()).fit(_training(rng, 10))
        jac = model.mean_jacobian(_inputs(rng, 3))
        assert np.all(jac[:, :, [2, 4, 5]] == 0.0)


class TestPersistence:
    @pytest.mark.parametrize("sparse", [False, True], ids=["full", "fitc"])
    def test_save_load_predicts_identically(self, tmp_path, sparse):
        rng = np.random.default_rng(9)
        training = _training(rng, 20)
        inducing = training.inputs[::4][:, SELECTED] if sparse else None
        model = GPModel(_hp()).fit(training, inducing)
        loaded = GPModel.load(model.save(tmp_path / "gp.npz"))
        Z = _inputs(rng, 5)
        assert loaded.kind == model.kind
        np.testing.assert_array_equal(loaded.predict(Z)[0], model.predict(Z)[0])
        np.testing.assert_array_equal(loaded.predict(Z)[1], model.predict(Z)[1])

    def test_empty_model_round_trips(self, tmp_path):
        loaded = GPModel.load(GPModel(_hp(2), channel="lateral").save(tmp_path / "gp.npz"))
        assert loaded.kind == "empty"
        assert loaded.channel == "lateral"


class TestHyperparams:
    def test_fixed_mode_returns_configured_values(self):
        rng = np.random.default_rng(10)
        hp = fit_hyperparams(_training(rng, 10), GPOptions(signal_std=3.0, lengthscale=2.0, noise_variance=0.01))
        assert hp.signal_variance == [9.0] * 6
        assert hp.lengthscale == [2.0] * 6

    def test_optimize_never_lowers_likelihood(self):
        rng = np.random.default_rng(11)
        training = _training(rng, 40, n_y=2, noise=0.01)
        options = GPOptions(mode="optimize", channel="lateral", max_sweeps=2)
        start = GPHyperparams.uniform(2, options.signal_std, options.lengthscale, options.noise_variance)
        fitted = fit_hyperparams(training, options)
        Z = training.inputs[:, SELECTED]
        for a in range(2):
            before = marginal_log_likelihood(Z, training.targets[:, a], start.dim(a))
            after = marginal_log_likelihood(Z, training.targets[:, a], fitted.dim(a))
            assert after >= before

    def test_optimize_needs_two_points(self):
        rng = np.random.default_rng(12)
        with pytest.raises(EmptyDataError):
            fit_hyperparams(_training(rng, 1), GPOptions(mode="optimize"))

    def test_fitc_likelihood_with_all_inducing_matches_full(self):
        rng = np.random.default_rng(13)
        training = _training(rng, 12, n_y=1, noise=0.01, inputs=_spread(rng, 12))
        Z = training.inputs[:, SELECTED]
        y = training.targets[:, 0]
        hp = (1.0, 1.5, 1e-2)
        assert marginal_log_likelihood(Z, y, hp, inducing=Z) == pytest.approx(
            marginal_log_likelihood(Z, y, hp), abs=1e-5
        )


class TestResiduals:
    def test_lateral_projection(self):
        x = np.array([10.0, 0.0, 0.0, 0.0, 0.0, 0.0])
        e = np.array([0.0, 0.3, 0.0, -0.1, 0.0, 0.0])
        target = residual_target(x, np.zeros(2), x + e, lambda x, u: x, channel_matrix("lateral"))
        np.testing.assert_allclose(target, [0.3, -0.1])

    def test_full_channel_returns_the_whole_residual(self):
        x = np.array([10.0, 0.1, 0.2, 0.0, 1.0, 2.0])
        e = np.array([0.01, -0.02, 0.03, 0.04, -0.05, 0.06])
        np.testing.assert_allclose(residual_target(x, np.zeros(2), x + e, lambda x, u: x), e)

    def test_rows_broadcast(self):
        x = np.tile([10.0, 0.0, 0.0, 0.0, 0.0, 0.0], (4, 1))
        targets = residual_target(x, np.zeros((4, 2)), x + 1.0, lambda x, u: x, channel_matrix("lateral"))
        assert targets.shape == (4, 2)

    def test_rank_deficient_injection_rejected(self):
        B = np.zeros((6, 2))
        B[1, 0] = B[1, 1] = 1.0
        with pytest.raises(RankDeficientError):
            residual_target(np.zeros(6), np.zeros(2), np.zeros(6), lambda x, u: x, B)

    def test_learned_jacobians_without_model_are_nominal(self):
        x = np.array([10.0, 0.1, 0.0, 0.05, 0.0, 0.0])
        u = np.array([0.2, 0.01])
        A, B = nominal_jacobians(x, u, NOMINAL_PARAMS, 0.05)
        for model in (None, GPModel(_hp())):
            jac = learned_jacobians(x, u, A, B, model)
            np.testing.assert_array_equal(jac.A_d, A)
            np.testing.assert_array_equal(jac.B_d_ctl, B)

    def test_learned_jacobians_add_injected_mean_jacobian(self):
        rng = np.random.default_rng(14)
        model = GPModel(_hp(2), channel="lateral").fit(_training(rng, 20, n_y=2))
        z = _inputs(rng, 1)[0]
        A, B = nominal_jacobians(z[:6], z[6:], NOMINAL_PARAMS, 0.05)
        jac = learned_jacobians(z[:6], z[6:], A, B, model)
        dm = model.mean_jacobian(z, clamp=True)[0]
        np.testing.assert_allclose(jac.A_d, A + model.B_d @ dm[:, :6])
        np.testing.assert_allclose(jac.B_d_ctl, B + model.B_d @ dm[:, 6:])


class TestLearnedDynamics:
    def _data(self, rng: np.random.Generator, offset: np.ndarray) -> GPTrainingSet:
        Z = _inputs(rng, 80)
        x, u = Z[:, :6], Z[:, 6:]
        x_next = discrete_step_nominal(x, u, NOMINAL_PARAMS, 0.05) + offset
        targets = residual_target(x, u, x_next, lambda a, b: discrete_step_nominal(a, b, NOMINAL_PARAMS, 0.05))
        return GPTrainingSet(Z, targets)

    def test_without_model_steps_nominally(self):
        dyn = LearnedDynamics(NOMINAL_PARAMS, 0.05)
        x = np.array([10.0, 0.1, 0.2, 0.0, 1.0, 2.0])
        u = np.array([0.3, 0.05])
        np.testing.assert_array_equal(dyn.step(x, u), discrete_step_nominal(x, u, NOMINAL_PARAMS, 0.05))
        assert not dyn.has_model
        np.testing.assert_array_equal(dyn.residual(x, u), np.zeros((1, 6)))

    def test_recovers_a_constant_residual(self):
        rng = np.random.default_rng(15)
        offset = np.array([0.0, 0.05, 0.0, -0.02, 0.0, 0.0])
        training = self._data(rng, offset)
        model = fit_gp_model(training, GPOptions(sparse="full", signal_std=1.0, noise_variance=1e-6))
        dyn = LearnedDynamics(NOMINAL_PARAMS, 0.05, model)
        x, u = training.inputs[0, :6], training.inputs[0, 6:]
        expected = discrete_step_nominal(x, u, NOMINAL_PARAMS, 0.05) + offset
        np.testing.assert_allclose(dyn.step(x, u), expected, atol=1e-3)
        assert held_out_residual_rms(model, self._data(np.random.default_rng(16), offset)) < 0.01

    @pytest.mark.parametrize(
        ("sparse", "kind"), [("full", "full"), ("random", "fitc"), ("ald", "fitc")], ids=["full", "random", "ald"]
    )
    def test_sparsification_modes(self, sparse, kind):
        rng = np.random.default_rng(17)
        training = _training(rng, 100)
        options = GPOptions(sparse=sparse, inducing_fraction=0.1)
        model = fit_gp_model(training, options, np.random.default_rng(0))
        assert model.kind == kind
        if sparse == "random":
            assert len(model.inducing) == 10

    def test_ald_inducing_set_is_smaller_than_the_data(self):
        rng = np.random.default_rng(18)
        training = _training(rng, 300)
        inducing = inducing_set(training, GPOptions(sparse="ald", ald_threshold=0.3), rng)
        assert 0 < len(inducing) < 300
        assert inducing.shape[1] == len(SELECTED)
