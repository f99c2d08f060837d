import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hhmala.kernel import init_chain_state, log_accept_ratio, propose, step
from hhmala.preconditioners import DenseFactor, Diagonal, Identity
from hhmala.targets import TargetModel, gaussian_from_covariance


class HalfSpaceGaussian(TargetModel):
    """Standard Gaussian restricted to x_0 <= 0."""

    name = "half_space"

    def log_density(self, x):
        return -np.inf if x[0] > 0 else -0.5 * float(x @ x)

    def grad_log_density(self, x):
        return -x


def _state(target, x, seed=0):
    return init_chain_state(x, target, np.random.default_rng(seed))


def test_proposal_follows_langevin_drift():
    target = gaussian_from_covariance(np.zeros(3), np.diag([1.0, 2.0, 3.0]))
    p = Diagonal(scales=np.array([1.0, 2.0, 0.5]), global_scale=0.4)
    state = _state(target, np.array([1.0, -1.0, 2.0]))
    xi = np.array([0.3, -0.2, 1.0])

    expected = state.position + 0.5 * 0.16 * p.apply_M(state.cached_grad) + 0.4 * p.apply_L(xi)
    assert np.allclose(propose(state, p, target, xi=xi), expected)


def test_accept_ratio_matches_hand_computation():
    target = gaussian_from_covariance(np.zeros(2), np.eye(2))
    p = Identity(d=2, global_scale=0.5)
    x, y = np.array([0.2, -0.4]), np.array([0.5, 0.1])

    def log_q(b, a):
        mean = a + 0.125 * (-a)
        return -np.sum((b - mean) ** 2) / (2 * 0.25)

    expected = (-0.5 * y @ y) - (-0.5 * x @ x) + log_q(x, y) - log_q(y, x)
    assert log_accept_ratio(x, y, target, p) == pytest.approx(expected)


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_accept_ratio_is_antisymmetric(seed):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((4, 4))
    target = gaussian_from_covariance(rng.standard_normal(4), A @ A.T + np.eye(4))
    p = Diagonal(scales=rng.uniform(0.5, 2.0, 4), global_scale=float(rng.uniform(0.1, 1.0)))
    x, y = rng.standard_normal(4), rng.standard_normal(4)

    assert log_accept_ratio(x, y, target, p) == pytest.approx(-log_accept_ratio(y, x, target, p), abs=1e-9)


def test_accept_ratio_one_dimensional_example():
    target = gaussian_from_covariance(np.zeros(1), np.eye(1))
    p = Identity(d=1, global_scale=0.5)
    # log pi(y) - log pi(x) = -0.045, log q(x|y) = -0.2625^2 / 0.5, log q(y|x) = -0.3^2 / 0.5
    assert log_accept_ratio(np.array([0.0]), np.array([0.3]), target, p) == pytest.approx(-0.0028125)


def test_noiseless_proposal_is_drift_only():
    target = gaussian_from_covariance(np.zeros(3), np.eye(3))
    x = np.array([1.0, -2.0, 0.5])
    state = _state(target, x)

    y = propose(state, Identity(d=3, global_scale=0.3), target, xi=np.zeros(3))
    assert np.allclose(y, x * (1 - 0.3 ** 2 / 2))
    tiny = propose(state, Identity(d=3, global_scale=1e-8), target, xi=np.zeros(3))
    assert np.allclose(tiny, x, atol=1e-12)


def test_non_finite_proposal_is_rejected():
    target = HalfSpaceGaussian(2)
    p = Identity(d=2, global_scale=0.1)
    x, y = np.array([-1.0, 0.0]), np.array([1.0, 0.0])

    assert log_accept_ratio(x, y, target, p) == -np.inf


def test_step_never_leaves_support():
    target = HalfSpaceGaussian(2)
    p = Identity(d=2, global_scale=1.5)
    state = _state(target, np.array([-0.05, 0.0]), seed=3)
    for _ in range(200):
        outcome = step(state, p, target)
        if outcome.proposal[0] > 0:
            assert outcome.accept_prob == 0.0
            assert not outcome.accepted
        state = outcome.new_state
        assert state.position[0] <= 0
    assert state.iteration == 200


def test_step_reports_probability_and_updates_cache():
    target = gaussian_from_covariance(np.zeros(2), np.eye(2))
    p = Identity(d=2, global_scale=0.8)
    state = _state(target, np.array([0.5, 0.5]), seed=9)
    outcome = step(state, p, target)

    assert 0.0 <= outcome.accept_prob <= 1.0
    new = outcome.new_state
    assert new.rng is state.rng
    assert new.cached_logdens == pytest.approx(target.log_density(new.position))
    assert np.allclose(new.cached_grad, target.grad_log_density(new.position))
    if outcome.accepted:
        assert np.array_equal(new.position, outcome.proposal)
    else:
        assert np.array_equal(new.position, state.position)


def test_init_rejects_position_outside_support():
    with pytest.raises(ValueError):
        init_chain_state(np.array([1.0, 0.0]), HalfSpaceGaussian(2), np.random.default_rng(0))


def test_same_seed_same_trajectory():
    target = gaussian_from_covariance(np.zeros(3), np.eye(3))
    p = Identity(d=3, global_scale=0.7)
    runs = []
    for _ in range(2):
        state = _state(target, np.ones(3), seed=42)
        for _ in range(50):
            state = step(state, p, target).new_state
        runs.append(state.position)
    assert np.array_equal(runs[0], runs[1])


def _mean_accept(target, p, x0, seed, n=300):
    state = _state(target, x0, seed=seed)
    probs = []
    for _ in range(n):
        outcome = step(state, p, target)
        probs.append(outcome.accept_prob)
        state = outcome.new_state
    return float(np.mean(probs))


def test_acceptance_limits_in_step_size():
    target = gaussian_from_covariance(np.zeros(4), np.eye(4))
    x0 = np.array([0.5, -0.5, 1.0, 0.0])

    assert _mean_accept(target, Identity(d=4, global_scale=1e-4), x0, seed=1) >= 0.99
    assert _mean_accept(target, Identity(d=4, global_scale=1e3), x0, seed=1) <= 0.01


def test_matched_preconditioner_gives_whitened_acceptance():
    rng = np.random.default_rng(11)
    vectors, _ = np.linalg.qr(rng.standard_normal((5, 5)))
    values = np.array([25.0, 4.0, 1.0, 0.25, 0.04])
    correlated = gaussian_from_covariance(np.zeros(5), (vectors * values) @ vectors.T)
    white = gaussian_from_covariance(np.zeros(5), np.eye(5))
    sqrt_cov = DenseFactor.from_eig(np.sqrt(values), vectors, global_scale=1.2)
    z0 = rng.standard_normal(5)

    matched = _mean_accept(correlated, sqrt_cov, sqrt_cov.apply_L(z0), seed=3, n=2000)
    whitened = _mean_accept(white, Identity(d=5, global_scale=1.2), z0, seed=3, n=2000)
    assert abs(matched - whitened) <= 0.02
