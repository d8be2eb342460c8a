import numpy as np
import pytest

from phaselin import (
    DimensionMismatchError,
    NoiseSpec,
    SignalPrior,
    UndefinedMetricError,
    build_estimator,
    empirical_mse,
    estimate,
    make_gaussian_matrix,
    n_mse,
    sample_signal,
    spawn_rng,
)


class TestNMse:
    def test_perfect_estimate(self):
        x = np.array([1.0, -2.0, 3.0])
        r = n_mse(x, x)
        assert r.nmse == 0.0
        assert r.alpha == pytest.approx(1.0)

    def test_scale_and_phase_blind(self):
        rng = spawn_rng(60)
        x = sample_signal(SignalPrior(np.zeros(6, dtype=complex), 2.0), rng)
        for _ in range(20):
            c = rng.uniform(0.1, 5.0)
            theta = rng.uniform(0, 2 * np.pi)
            r = n_mse(x, c * np.exp(1j * theta) * x)
            assert r.nmse <= 1e-12
            assert r.alpha == pytest.approx(np.exp(-1j * theta) / c, rel=1e-9)

    def test_optimal_over_alignment_grid(self):
        rng = spawn_rng(61)
        x = sample_signal(SignalPrior(np.zeros(5, dtype=complex), 2.0), rng)
        x_hat = x + 0.3 * sample_signal(SignalPrior(np.zeros(5, dtype=complex), 1.0), rng)
        best = n_mse(x, x_hat).nmse
        energy = float(np.vdot(x, x).real)
        for c in np.linspace(0.2, 2.0, 40):
            for theta in np.linspace(0, 2 * np.pi, 90, endpoint=False):
                alpha = c * np.exp(1j * theta)
                cand = float(np.vdot(x - alpha * x_hat, x - alpha * x_hat).real) / energy
                assert cand >= best - 1e-10

    def test_orthogonal_estimate_scores_one(self):
        x = np.array([1.0, 0.0])
        r = n_mse(x, np.array([0.0, 1.0]))
        assert r.nmse == 1.0
        assert r.alpha == 0.0

    def test_zero_estimate_convention(self):
        r = n_mse(np.array([1.0, 2.0]), np.zeros(2))
        assert (r.nmse, r.alpha) == (1.0, 0.0)

    def test_zero_truth_rejected(self):
        with pytest.raises(UndefinedMetricError):
            n_mse(np.zeros(3), np.ones(3))

    def test_shape_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            n_mse(np.ones(3), np.ones(4))

    def test_real_inputs_give_real_alpha(self):
        r = n_mse(np.array([1.0, 2.0]), np.array([2.0, 4.0]))
        assert isinstance(r.alpha, float)
        assert r.alpha == pytest.approx(0.5)
        assert r.nmse <= 1e-15

    def test_sign_flip_real(self):
        x = np.array([1.0, -1.0, 2.0])
        r = n_mse(x, -x)
        assert r.nmse <= 1e-15
        assert r.alpha == pytest.approx(-1.0)


def _scalar_setup():
    # one-dimensional instance with hand-checked moments: prior mean 1,
    # error variance 0.1, A = [2]; the affine estimator has mse 0.1 exactly
    A = np.array([[2.0]])
    prior = SignalPrior(np.array([1.0]), np.array([[0.1]]))
    return A, prior


class TestEmpiricalMse:
    def test_trials_floor(self):
        A, prior = _scalar_setup()
        est = build_estimator(A, prior)
        with pytest.raises(ValueError):
            empirical_mse(est, A, prior, None, 1, spawn_rng(62))

    def test_matches_prediction_scalar(self):
        A, prior = _scalar_setup()
        est = build_estimator(A, prior)
        mse, se = empirical_mse(est, A, prior, None, 200_000, spawn_rng(63))
        assert se < 0.005
        assert mse == pytest.approx(est.predicted_mse, rel=0.02)

    def test_prior_only_estimator_recovers_error_trace(self):
        rng = spawn_rng(64)
        A = make_gaussian_matrix(12, 3, "complex", rng)
        prior = SignalPrior(np.ones(3, dtype=complex), 0.3)
        W = np.zeros((3, 12), dtype=complex)
        mse, se = empirical_mse((W, prior.mean), A, prior, None, 50_000, rng)
        assert abs(mse - 0.9) <= 3 * se

    def test_callable_estimator(self):
        A, prior = _scalar_setup()
        mse, se = empirical_mse(lambda Y: np.ones((1, Y.shape[1])), A, prior, None,
                                10_000, spawn_rng(65))
        # the constant prior-mean guess has mse = trace of the error covariance
        assert abs(mse - 0.1) <= 3 * se

    def test_tuple_and_object_forms_agree(self):
        A, prior = _scalar_setup()
        est = build_estimator(A, prior)
        a = empirical_mse(est, A, prior, None, 5_000, spawn_rng(66))
        b = empirical_mse((est.gain, est.offset), A, prior, None, 5_000, spawn_rng(66))
        assert a == b

    def test_bad_estimator_type(self):
        A, prior = _scalar_setup()
        with pytest.raises(TypeError):
            empirical_mse(42, A, prior, None, 100, spawn_rng(67))

    def test_noise_increases_error(self):
        rng = spawn_rng(68)
        A = make_gaussian_matrix(16, 4, "real", rng)
        prior = SignalPrior(np.ones(4), 0.2)
        noise = NoiseSpec(meas_cov=4.0)
        clean_est = build_estimator(A, prior)
        clean, _ = empirical_mse(clean_est, A, prior, None, 20_000, spawn_rng(69))
        noisy_est = build_estimator(A, prior, noise)
        noisy, _ = empirical_mse(noisy_est, A, prior, noise, 20_000, spawn_rng(69))
        assert noisy > clean

    def test_se_shrinks_with_trials(self):
        A, prior = _scalar_setup()
        est = build_estimator(A, prior)
        _, se_small = empirical_mse(est, A, prior, None, 10_000, spawn_rng(70))
        _, se_big = empirical_mse(est, A, prior, None, 40_000, spawn_rng(70))
        assert 1.4 <= se_small / se_big <= 2.8

    def test_deterministic_given_seed(self):
        A, prior = _scalar_setup()
        est = build_estimator(A, prior)
        assert (empirical_mse(est, A, prior, None, 1_000, spawn_rng(71))
                == empirical_mse(est, A, prior, None, 1_000, spawn_rng(71)))


def test_estimate_consistency_with_batch_apply():
    rng = spawn_rng(72)
    A = make_gaussian_matrix(10, 3, "complex", rng)
    prior = SignalPrior(np.ones(3, dtype=complex), 0.5)
    est = build_estimator(A, prior)
    Y = np.abs(A @ sample_signal(prior, rng, size=4)) ** 2
    batch = estimate(est, Y)
    for j in range(4):
        np.testing.assert_allclose(batch[:, j], estimate(est, Y[:, j]), atol=1e-12)
