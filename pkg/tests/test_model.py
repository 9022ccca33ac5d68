import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wsndetect.model import (
    CovarianceError,
    GaussianMeanModel,
    Hypothesis,
    ObservationBlock,
    build_toeplitz_cov,
    check_covariance,
    local_parameter_dim,
    sample_observations,
)


def test_toeplitz_rho_zero_is_identity():
    np.testing.assert_array_equal(build_toeplitz_cov(0.0, 3), np.eye(3))


def test_toeplitz_first_row():
    C = build_toeplitz_cov(0.3, 10)
    np.testing.assert_allclose(C[0], 0.3 ** np.arange(10), rtol=1e-15)
    np.testing.assert_array_equal(C, C.T)


def test_toeplitz_two_by_two_eigenvalues():
    C = build_toeplitz_cov(0.5, 2)
    np.testing.assert_array_equal(C, [[1.0, 0.5], [0.5, 1.0]])
    np.testing.assert_allclose(np.linalg.eigvalsh(C), [0.5, 1.5], rtol=1e-14)


@pytest.mark.parametrize("rho", [1.0, -1.0, 1.5])
def test_toeplitz_rejects_unit_rho(rho):
    with pytest.raises(ValueError):
        build_toeplitz_cov(rho, 4)


@given(st.floats(-0.95, 0.95), st.integers(1, 12))
@settings(max_examples=50, deadline=None)
def test_toeplitz_is_positive_definite(rho, n):
    G = check_covariance(build_toeplitz_cov(rho, n))
    np.testing.assert_allclose(G @ G.T, build_toeplitz_cov(rho, n), atol=1e-12)


def test_check_covariance_rejects_bad_input():
    with pytest.raises(CovarianceError):
        check_covariance([[1.0, 0.2], [0.3, 1.0]])
    with pytest.raises(CovarianceError):
        check_covariance([[1.0, 2.0], [2.0, 1.0]])
    with pytest.raises(CovarianceError):
        check_covariance(np.ones(3))


def test_model_validates_shapes():
    with pytest.raises(ValueError):
        GaussianMeanModel(np.zeros(2), np.zeros(3), np.eye(2))
    with pytest.raises(ValueError):
        GaussianMeanModel(np.zeros(2), np.zeros(2), np.eye(3))


def test_model_arrays_are_read_only():
    m = GaussianMeanModel.toeplitz([1.0, 2.0], 0.3)
    with pytest.raises(ValueError):
        m.theta1[0] = 5.0
    np.testing.assert_array_equal(m.mean(Hypothesis.H1), [1.0, 2.0])
    np.testing.assert_array_equal(m.mean("H0"), [0.0, 0.0])


def test_null_parameters_hide_alternative():
    m = GaussianMeanModel.toeplitz([1.0, 2.0], 0.3)
    assert not hasattr(m.null, "theta1")
    np.testing.assert_array_equal(m.null.variances, [1.0, 1.0])


def test_observation_block_rejects_nonfinite():
    with pytest.raises(ValueError):
        ObservationBlock(np.array([[1.0, np.nan]]))
    with pytest.raises(ValueError):
        ObservationBlock(np.zeros(3))
    assert ObservationBlock(np.zeros((3, 4))).n_slots == 4


def test_sampling_zero_mean_identity():
    m = GaussianMeanModel(np.zeros(3), np.zeros(3), np.eye(3))
    obs = sample_observations(m, Hypothesis.H1, 100_000, seed=3)
    assert np.max(np.abs(obs.data.mean(axis=1))) < 0.02


def test_sampling_covariance_matches():
    m = GaussianMeanModel.toeplitz(np.zeros(10), 0.3)
    z = sample_observations(m, Hypothesis.H0, 100_000, seed=4).data
    assert np.max(np.abs(np.cov(z) - m.cov)) < 0.05


def test_sampling_deterministic():
    m = GaussianMeanModel.toeplitz(np.ones(4), 0.5)
    a = sample_observations(m, Hypothesis.H1, 50, seed=9).data
    b = sample_observations(m, Hypothesis.H1, 50, seed=9).data
    np.testing.assert_array_equal(a, b)


def test_local_parameter_dim():
    assert local_parameter_dim(GaussianMeanModel.toeplitz(np.zeros(10), 0.3)) == 10
    assert local_parameter_dim(GaussianMeanModel.toeplitz(np.zeros(10), 0.3, cov_known=False)) == 20
    assert local_parameter_dim(GaussianMeanModel.toeplitz(np.zeros(1), 0.3)) == 1
