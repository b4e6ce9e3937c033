"""Photon-number observables and loss functions of a Gaussian state.

Mean photon number and the differential photon number are derivatives of the
characteristic function at the origin:

    <n_j>             = -((lap_j + 1) chi / 2)|_0
    <(n_j - n_k)^2>   = ((lap_j - lap_k)^2 / 4 - 1/2) chi|_0

with lap_j = d^2/dq_j^2 + d^2/dp_j^2. Both are available in closed form
(Gaussian moments) and through the jet engine; the two paths must agree and
the test suite holds them to 1e-10.

Only even-order derivatives at 0 are ever taken, so the imaginary part of
chi never contributes and a nonzero displacement can be folded in as the
real factor cos(x . d).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .gaussian import GaussianState
from .jets import (
    DegreeCaps,
    JetPolynomial,
    QuadraticExponentForm,
    jet_from_quadratic,
    jet_multiply,
    laplacian_power_derivative,
)

__all__ = [
    "ObservableReport",
    "mean_photon",
    "mean_photon_jet",
    "diff_photon_sq",
    "diff_photon_sq_closed",
    "loss_pair",
    "loss_mean",
    "observable_report",
    "pair_diff_value_and_cov_sensitivity",
]

NEGATIVE_ROUNDOFF_TOL = 1e-9


def mean_photon(state: GaussianState, j: int) -> float:
    """Mean photon number of mode j, closed form."""
    _check_mode(state, j)
    g, d = state.cov, state.disp
    a, b = 2 * j, 2 * j + 1
    return (g[a, a] + g[b, b]) / 4 + (d[a] ** 2 + d[b] ** 2) / 2 - 0.5


def _phase_cosine_jet(d: np.ndarray, caps: DegreeCaps) -> JetPolynomial | None:
    """Jet of cos(d . x), or None when no retained variable is displaced."""
    active = [s for s in range(caps.n_vars) if caps.caps[s] >= 1 and d[s] != 0.0]
    if not active:
        return None
    shape = caps.shape
    linear = np.zeros(shape)
    for s in active:
        idx = [0] * caps.n_vars
        idx[s] = 1
        linear[tuple(idx)] = d[s]
    linear_jet = JetPolynomial(caps, linear)
    square = jet_multiply(linear_jet, linear_jet)
    total = np.zeros(shape)
    origin = (0,) * caps.n_vars
    total[origin] = 1.0
    term = JetPolynomial(caps, total)
    for m in range(1, caps.total_degree // 2 + 1):
        term = jet_multiply(term, square)
        term = JetPolynomial(caps, term.coeffs * (-1.0 / ((2 * m - 1) * (2 * m))))
        if not term.coeffs.any():
            break
        total = total + term.coeffs
    return JetPolynomial(caps, total)


def _chi_even_jet(state: GaussianState, caps: DegreeCaps) -> JetPolynomial:
    """Jet of the real part of chi, exact for even-order extraction."""
    form = QuadraticExponentForm(-state.cov / 2, np.zeros(state.dim))
    jet = jet_from_quadratic(form, caps)
    cosine = _phase_cosine_jet(state.disp, caps)
    if cosine is not None:
        jet = jet_multiply(jet, cosine)
    return jet


def mean_photon_jet(state: GaussianState, j: int) -> float:
    """Mean photon number of mode j via jet differentiation of chi."""
    _check_mode(state, j)
    caps_list = [0] * state.dim
    caps_list[2 * j] = caps_list[2 * j + 1] = 2
    jet = _chi_even_jet(state, DegreeCaps(tuple(caps_list)))
    lap = laplacian_power_derivative(jet, [(2 * j, 2 * j + 1, 1)])
    return -0.5 * (lap + 1.0)


def diff_photon_sq(state: GaussianState, j: int, k: int) -> float:
    """Differential photon number <(n_j - n_k)^2> via fourth-order jets."""
    _check_mode(state, j)
    _check_mode(state, k)
    if j == k:
        raise ValueError("differential photon number needs two distinct modes")
    j, k = sorted((j, k))  # symmetric quantity; keep (j,k) and (k,j) bit-equal
    caps_list = [0] * state.dim
    for v in (2 * j, 2 * j + 1, 2 * k, 2 * k + 1):
        caps_list[v] = 4
    jet = _chi_even_jet(state, DegreeCaps(tuple(caps_list)))
    l_jj = laplacian_power_derivative(jet, [(2 * j, 2 * j + 1, 2)])
    l_kk = laplacian_power_derivative(jet, [(2 * k, 2 * k + 1, 2)])
    l_jk = laplacian_power_derivative(
        jet, [(2 * j, 2 * j + 1, 1), (2 * k, 2 * k + 1, 1)]
    )
    value = 0.25 * (l_jj - 2 * l_jk + l_kk) - 0.5
    return _clip_roundoff(value, "differential photon number")


def diff_photon_sq_closed(state: GaussianState, j: int, k: int) -> float:
    """Closed-form <(n_j - n_k)^2> for zero displacement (Wick pairing)."""
    _check_mode(state, j)
    _check_mode(state, k)
    if j == k:
        raise ValueError("differential photon number needs two distinct modes")
    if np.any(state.disp != 0.0):
        raise ValueError("closed form implemented for zero displacement only")
    j, k = sorted((j, k))
    sigma = state.cov / 2
    value = (
        _n_squared(sigma, j)
        + _n_squared(sigma, k)
        - 2 * _n_cross(sigma, j, k)
    )
    return _clip_roundoff(value, "differential photon number")


def _n_squared(sigma: np.ndarray, j: int) -> float:
    a, b = 2 * j, 2 * j + 1
    saa, sbb, sab = sigma[a, a], sigma[b, b], sigma[a, b]
    return 0.25 * (
        3 * saa**2 + 3 * sbb**2 + 2 * saa * sbb + 4 * sab**2 - 2 * (saa + sbb)
    )


def _n_cross(sigma: np.ndarray, j: int, k: int) -> float:
    mean_j = (sigma[2 * j, 2 * j] + sigma[2 * j + 1, 2 * j + 1]) / 2 - 0.5
    mean_k = (sigma[2 * k, 2 * k] + sigma[2 * k + 1, 2 * k + 1]) / 2 - 0.5
    block = sigma[2 * j : 2 * j + 2, 2 * k : 2 * k + 2]
    return mean_j * mean_k + 0.5 * float(np.sum(block**2))


def loss_pair(state: GaussianState) -> float:
    """Pair loss exp(<(n_0 - n_1)^2>); minimal (= 1) for pair-correlated modes."""
    if state.n_modes < 2:
        raise ValueError("pair loss needs at least two modes")
    return math.exp(diff_photon_sq(state, 0, 1))


def loss_mean(state: GaussianState) -> float:
    """Contrast loss exp((<n_0> - <n_1>)^2), built from per-mode means only."""
    if state.n_modes < 2:
        raise ValueError("mean loss needs at least two modes")
    return math.exp((mean_photon(state, 0) - mean_photon(state, 1)) ** 2)


@dataclass(frozen=True)
class ObservableReport:
    per_mode_mean: np.ndarray = field(repr=False)
    pairwise_diff_sq: dict
    total_mean: float


def observable_report(state: GaussianState, pairs=None) -> ObservableReport:
    """Collect means and requested differential photon numbers."""
    if pairs is None:
        pairs = [(0, 1)] if state.n_modes >= 2 else []
    means = np.array([mean_photon(state, j) for j in range(state.n_modes)])
    diffs = {(j, k): diff_photon_sq(state, j, k) for j, k in pairs}
    return ObservableReport(means, diffs, float(means.sum()))


# Operator expansion of (lap_0 - lap_1)^2 / 4 on the variables (q0, p0, q1, p1):
# weights and derivative orders used for both the value and its sensitivity.
_PAIR_OPS: list[tuple[float, tuple[int, int, int, int]]] = (
    [(0.25 * math.comb(2, m), (2 * m, 4 - 2 * m, 0, 0)) for m in range(3)]
    + [(0.25 * math.comb(2, m), (0, 0, 2 * m, 4 - 2 * m)) for m in range(3)]
    + [
        (-0.5, (2 * m0, 2 - 2 * m0, 2 * m1, 2 - 2 * m1))
        for m0 in range(2)
        for m1 in range(2)
    ]
)


def pair_diff_value_and_cov_sensitivity(cov_block: np.ndarray):
    """<(n_0 - n_1)^2> of a zero-displacement two-mode covariance block,
    together with its gradient with respect to the block entries.

    The value is the usual fourth-order jet evaluation; the gradient reads
    the same jet shifted by one monomial, since perturbing the quadratic
    exponent by dP multiplies the truncated series by dP. Supports the
    forward-mode gradient of the training loop. Returns (value, grad) with
    grad[s, t] = d value / d cov[s, t] for symmetric perturbations.
    """
    cov_block = np.asarray(cov_block, dtype=float)
    if cov_block.shape != (4, 4):
        raise ValueError("expected the 4x4 covariance block of two modes")
    caps = DegreeCaps((4, 4, 4, 4))
    jet = jet_from_quadratic(
        QuadraticExponentForm(-cov_block / 2, np.zeros(4)), caps
    )
    coeffs = jet.coeffs
    value = -0.5
    for weight, orders in _PAIR_OPS:
        scale = weight
        for o in orders:
            scale *= math.factorial(o)
        value += scale * coeffs[orders]
    # d value / d Q[s, t]: coefficient reads shifted by the monomial k_s k_t.
    q_sens = np.zeros((4, 4))
    for s in range(4):
        for t in range(s, 4):
            acc = 0.0
            for weight, orders in _PAIR_OPS:
                shifted = list(orders)
                shifted[s] -= 1
                shifted[t] -= 1
                if shifted[s] < 0 or shifted[t] < 0:
                    continue
                scale = weight
                for o in orders:
                    scale *= math.factorial(o)
                acc += scale * coeffs[tuple(shifted)]
            q_sens[s, t] = q_sens[t, s] = acc
    # chain: dP = sum_st dQ_st k_s k_t / 2 and Q = -cov/2.
    return float(value), -q_sens / 4


def _clip_roundoff(value: float, what: str) -> float:
    if value < -NEGATIVE_ROUNDOFF_TOL:
        raise ValueError(f"{what} is {value}, far below zero: state data is broken")
    if value < 0.0:
        warnings.warn(
            f"{what} {value} clipped to 0 (round-off)", RuntimeWarning, stacklevel=3
        )
        return 0.0
    return value


def _check_mode(state: GaussianState, j: int):
    if not 0 <= j < state.n_modes:
        raise ValueError(f"mode {j} out of range for {state.n_modes} modes")
