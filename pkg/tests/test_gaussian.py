import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from gbsim.gaussian import (
    GaussianState,
    SymplecticMap,
    apply,
    chi,
    compose,
    haar_unitary,
    identity_map,
    interferometer_map,
    squeezer,
    symplectic_form,
    vacuum,
)

from conftest import random_circuit_map, random_pure_state


def test_symplectic_form_properties():
    for n in (1, 2, 4):
        j = symplectic_form(n)
        np.testing.assert_array_equal(j @ j, -np.eye(2 * n))
        np.testing.assert_array_equal(j.T, -j)


def test_vacuum_is_identity_cov_zero_disp():
    one = vacuum(1)
    np.testing.assert_array_equal(one.cov, np.eye(2))
    np.testing.assert_array_equal(one.disp, np.zeros(2))
    three = vacuum(3)
    np.testing.assert_array_equal(three.cov, np.eye(6))
    assert chi(vacuum(2), np.zeros(4)) == 1.0


def test_vacuum_rejects_zero_modes():
    with pytest.raises(ValueError):
        vacuum(0)


def test_state_validation():
    with pytest.raises(ValueError, match="symmetric"):
        GaussianState(1, np.array([[1.0, 0.1], [0.0, 1.0]]), np.zeros(2))
    with pytest.raises(ValueError, match="positive definite"):
        GaussianState(1, np.diag([1.0, -1.0]), np.zeros(2))
    with pytest.raises(ValueError, match="covariance must be"):
        GaussianState(2, np.eye(2), np.zeros(4))


def test_squeezer_zero_is_identity():
    s = squeezer(0, 0.0, 1.234, 1)
    np.testing.assert_array_equal(s.mat, np.eye(2))
    np.testing.assert_array_equal(s.shift, np.zeros(2))


def test_squeezer_mode_out_of_range():
    with pytest.raises(ValueError, match="out of range"):
        squeezer(2, 0.5, 0.0, 2)
    with pytest.raises(ValueError, match="non-negative"):
        squeezer(0, -0.1, 0.0, 1)


def test_squeezed_vacuum_cov_eigenvalues():
    state = apply(squeezer(0, 0.5, 0.0, 1), vacuum(1))
    eig = np.sort(np.linalg.eigvalsh(state.cov))
    np.testing.assert_allclose(eig, [math.exp(-1.0), math.exp(1.0)], rtol=1e-12)


def test_squeezer_acts_on_one_mode_only():
    s = apply(squeezer(1, 0.7, 0.3, 3), vacuum(3))
    np.testing.assert_array_equal(s.cov[:2, :2], np.eye(2))
    np.testing.assert_array_equal(s.cov[4:, 4:], np.eye(2))


def test_interferometer_identity_and_swap():
    np.testing.assert_allclose(interferometer_map(np.eye(2)).mat, np.eye(4), atol=0)
    swap = interferometer_map(np.array([[0.0, 1.0], [1.0, 0.0]]))
    want = np.zeros((4, 4))
    want[0, 2] = want[1, 3] = want[2, 0] = want[3, 1] = 1.0
    np.testing.assert_array_equal(swap.mat, want)


def test_interferometer_single_mode_phase_is_rotation():
    theta = 0.3
    m = interferometer_map(np.array([[np.exp(1j * theta)]])).mat
    rot = np.array(
        [[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]]
    )
    np.testing.assert_allclose(m, rot, atol=1e-15)
    # passive: mean photon of a squeezed state is untouched
    state = apply(squeezer(0, 0.8, 0.1, 1), vacuum(1))
    rotated = apply(interferometer_map(np.array([[np.exp(1j * theta)]])), state)
    before = np.trace(state.cov)
    after = np.trace(rotated.cov)
    assert math.isclose(before, after, rel_tol=1e-12)


def test_interferometer_rejects_non_unitary():
    with pytest.raises(ValueError, match="not unitary"):
        interferometer_map(np.array([[1.0, 0.0], [0.0, 1.1]]))


def test_interferometer_maps_are_orthogonal(rng):
    for n in (2, 3, 5):
        m = interferometer_map(haar_unitary(n, int(rng.integers(2**31)))).mat
        assert np.max(np.abs(m.T @ m - np.eye(2 * n))) < 1e-10


def test_haar_unitary_is_unitary_and_deterministic():
    for n, seed in [(1, 0), (3, 7), (6, 123)]:
        u = haar_unitary(n, seed)
        assert np.max(np.abs(u @ u.conj().T - np.eye(n))) < 1e-12
        np.testing.assert_array_equal(u, haar_unitary(n, seed))
    assert abs(abs(haar_unitary(1, 5)[0, 0]) - 1) < 1e-12


def test_haar_eigenphases_uniform():
    # pooled eigenvalue phases over many draws; KS against uniform(-pi, pi)
    phases = []
    for seed in range(2000):
        phases.extend(np.angle(np.linalg.eigvals(haar_unitary(4, seed))))
    result = stats.kstest(
        np.asarray(phases), stats.uniform(loc=-np.pi, scale=2 * np.pi).cdf
    )
    assert result.pvalue > 0.01


def test_apply_identity_leaves_state():
    state = apply(squeezer(0, 0.4, 0.9, 2), vacuum(2))
    same = apply(identity_map(2), state)
    np.testing.assert_array_equal(same.cov, state.cov)
    np.testing.assert_array_equal(same.disp, state.disp)


def test_apply_dimension_mismatch():
    with pytest.raises(ValueError, match="does not match"):
        apply(identity_map(2), vacuum(1))


def test_apply_is_characteristic_function_pullback(rng):
    n = 2
    layer = random_circuit_map(n, rng)
    shift = rng.normal(size=2 * n)
    layer = SymplecticMap(layer.mat, shift)
    state = random_pure_state(n, rng, displaced=True)
    out = apply(layer, state)
    for _ in range(10):
        x = rng.normal(size=2 * n)
        lhs = chi(out, x)
        rhs = chi(state, x @ layer.mat) * np.exp(1j * (x @ shift))
        assert abs(lhs - rhs) < 1e-10


def test_compose_single_and_pair(rng):
    a = random_circuit_map(2, rng)
    b = random_circuit_map(2, rng)
    only = compose([a])
    np.testing.assert_array_equal(only.mat, a.mat)
    both = compose([a, b])
    state = random_pure_state(2, rng)
    via_compose = apply(both, state)
    sequential = apply(b, apply(a, state))
    np.testing.assert_allclose(via_compose.cov, sequential.cov, atol=1e-12)
    np.testing.assert_allclose(both.mat, b.mat @ a.mat, atol=1e-12)


def test_compose_disjoint_squeezers_commute(rng):
    n = 4
    layers = [squeezer(j, 0.3 + 0.1 * j, 0.2 * j, n) for j in range(n)]
    reference = compose(layers).mat
    for _ in range(5):
        order = rng.permutation(n)
        shuffled = compose([layers[i] for i in order]).mat
        assert np.max(np.abs(shuffled - reference)) < 1e-12


def test_compose_rejects_mixed_dimensions():
    with pytest.raises(ValueError, match="same dimension"):
        compose([identity_map(1), identity_map(2)])


def test_chi_vacuum_and_displaced(rng):
    assert abs(chi(vacuum(1), np.array([1.0, 0.0])) - math.exp(-0.25)) < 1e-15
    d0 = rng.normal(size=4)
    displaced = GaussianState(2, np.eye(4), d0)
    for _ in range(5):
        x = rng.normal(size=4)
        want = np.exp(-x @ x / 4) * np.exp(1j * (x @ d0))
        assert abs(chi(displaced, x) - want) < 1e-12


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 4))
def test_symplectic_closure_and_purity(seed, n):
    rng = np.random.default_rng(seed)
    layer = random_circuit_map(n, rng)
    j = symplectic_form(n)
    assert np.max(np.abs(layer.mat @ j @ layer.mat.T - j)) < 1e-9
    assert abs(np.linalg.det(layer.mat) - 1) < 1e-9
    state = apply(layer, vacuum(n))
    assert abs(np.linalg.det(state.cov) - 1) < 1e-9


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 4))
def test_uncertainty_relation(seed, n):
    rng = np.random.default_rng(seed)
    state = apply(random_circuit_map(n, rng), vacuum(n))
    eigs = np.linalg.eigvalsh(state.cov + 1j * symplectic_form(n))
    assert eigs.min() > -1e-9


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_chi_bounded_by_one(seed):
    rng = np.random.default_rng(seed)
    state = random_pure_state(2, rng, displaced=True)
    x = rng.normal(scale=2.0, size=4)
    assert abs(chi(state, x)) <= 1 + 1e-12
    assert chi(state, np.zeros(4)) == 1.0
