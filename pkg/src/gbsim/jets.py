"""Truncated multivariate Taylor (jet) arithmetic.

A jet stores the Taylor coefficients of a function around 0, on a dense
hyper-rectangular grid of multi-indices bounded per variable by a cap.
Multiplication truncates to the caps, so high-order mixed derivatives of
exp(quadratic) can be read off exactly (up to float rounding) without any
symbolic or automatic differentiation machinery.

Coefficients are real: every exponent form fed in here (covariance
quadratics, Husimi forms) is real after the displacement phase has been
folded by the caller.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "DegreeCaps",
    "JetPolynomial",
    "QuadraticExponentForm",
    "jet_from_quadratic",
    "jet_multiply",
    "constant_jet",
    "extract_mixed_derivative",
    "laplacian_power_derivative",
]


@dataclass(frozen=True)
class DegreeCaps:
    """Per-variable maximum retained power. Table size is prod(caps+1)."""

    caps: tuple[int, ...]

    def __post_init__(self):
        if any(c < 0 for c in self.caps):
            raise ValueError("degree caps must be non-negative")
        object.__setattr__(self, "caps", tuple(int(c) for c in self.caps))

    @property
    def n_vars(self) -> int:
        return len(self.caps)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(c + 1 for c in self.caps)

    @property
    def total_degree(self) -> int:
        return sum(self.caps)


@dataclass(frozen=True)
class JetPolynomial:
    """Dense truncated Taylor polynomial: coeffs[i0,...,ik] is the
    coefficient of x0^i0 ... xk^ik."""

    caps: DegreeCaps
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.asarray(self.coeffs, dtype=float)
        if arr.shape != self.caps.shape:
            raise ValueError(
                f"coefficient array shape {arr.shape} does not match caps {self.caps.shape}"
            )
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "coeffs", arr)


@dataclass(frozen=True)
class QuadraticExponentForm:
    """Data of the scalar function exp(0.5 k^T quad k + lin . k + const)."""

    quad: np.ndarray
    lin: np.ndarray
    const: float = 0.0

    def __post_init__(self):
        q = np.asarray(self.quad, dtype=float)
        b = np.asarray(self.lin, dtype=float)
        if q.ndim != 2 or q.shape[0] != q.shape[1]:
            raise ValueError("quad must be a square matrix")
        if b.shape != (q.shape[0],):
            raise ValueError("lin length must match quad dimension")
        if np.max(np.abs(q - q.T), initial=0.0) >= 1e-12:
            raise ValueError("quad must be symmetric to 1e-12")
        q = q.copy()
        b = b.copy()
        q.flags.writeable = False
        b.flags.writeable = False
        object.__setattr__(self, "quad", q)
        object.__setattr__(self, "lin", b)
        object.__setattr__(self, "const", float(self.const))

    @property
    def n_vars(self) -> int:
        return self.quad.shape[0]


def constant_jet(value: float, caps: DegreeCaps) -> JetPolynomial:
    coeffs = np.zeros(caps.shape)
    coeffs[(0,) * caps.n_vars] = value
    return JetPolynomial(caps, coeffs)


def _monomials_within_caps(form: QuadraticExponentForm, caps: DegreeCaps):
    """Sparse (exponent, coefficient) list for 0.5 k^T Q k + b.k, dropping
    monomials that exceed the caps (they can never contribute)."""
    n = caps.n_vars
    monos: list[tuple[tuple[int, ...], float]] = []
    for s in range(n):
        if form.lin[s] != 0.0 and caps.caps[s] >= 1:
            e = [0] * n
            e[s] = 1
            monos.append((tuple(e), form.lin[s]))
    for s in range(n):
        for t in range(s, n):
            c = 0.5 * form.quad[s, s] if s == t else form.quad[s, t]
            if c == 0.0:
                continue
            e = [0] * n
            e[s] += 2 if s == t else 1
            if s != t:
                e[t] += 1
            if any(e[v] > caps.caps[v] for v in (s, t)):
                continue
            monos.append((tuple(e), c))
    return monos


def _shifted_accumulate(out: np.ndarray, src: np.ndarray, shift, coeff: float):
    """out += coeff * (monomial x^shift) * src, truncated to out's shape."""
    dst_slices = tuple(slice(s, None) for s in shift)
    src_slices = tuple(slice(None, dim - s) for s, dim in zip(shift, src.shape))
    out[dst_slices] += coeff * src[src_slices]


def _multiply_sparse(dense: np.ndarray, monos) -> np.ndarray:
    out = np.zeros_like(dense)
    for shift, coeff in monos:
        _shifted_accumulate(out, dense, shift, coeff)
    return out


def jet_from_quadratic(form: QuadraticExponentForm, caps: DegreeCaps) -> JetPolynomial:
    """Taylor-expand exp(0.5 k^T Q k + b.k + c) at k = 0, truncated to caps.

    Uses the scaled series sum_m p^m / m! on the constant-free exponent p;
    each multiplication by p raises the minimum total degree, so the series
    terminates after at most sum(caps) terms.
    """
    if form.n_vars != caps.n_vars:
        raise ValueError(
            f"form has {form.n_vars} variables but caps describe {caps.n_vars}"
        )
    monos = _monomials_within_caps(form, caps)
    total = np.zeros(caps.shape)
    total[(0,) * caps.n_vars] = 1.0
    term = total.copy()
    for m in range(1, caps.total_degree + 1):
        term = _multiply_sparse(term, monos) / m
        if not term.any():
            break
        total += term
    return JetPolynomial(caps, total * math.exp(form.const))


def jet_multiply(a: JetPolynomial, b: JetPolynomial) -> JetPolynomial:
    """Truncated product of two jets with identical caps."""
    if a.caps != b.caps:
        raise ValueError("jet caps mismatch")
    # Iterate over the sparser factor; each nonzero entry becomes a shifted add.
    if np.count_nonzero(b.coeffs) <= np.count_nonzero(a.coeffs):
        dense, sparse = a.coeffs, b.coeffs
    else:
        dense, sparse = b.coeffs, a.coeffs
    out = np.zeros_like(dense)
    for idx in np.argwhere(sparse != 0.0):
        _shifted_accumulate(out, dense, tuple(idx), sparse[tuple(idx)])
    return JetPolynomial(a.caps, out)


def extract_mixed_derivative(jet: JetPolynomial, orders) -> float:
    """Value of the mixed partial derivative d^|orders| f / prod dx_i^orders_i
    at 0, i.e. coefficient(orders) times prod(orders_i!)."""
    orders = tuple(int(o) for o in orders)
    if len(orders) != jet.caps.n_vars:
        raise ValueError("orders length must match the number of variables")
    if any(o < 0 for o in orders):
        raise ValueError("derivative orders must be non-negative")
    if any(o > c for o, c in zip(orders, jet.caps.caps)):
        raise ValueError(f"orders {orders} exceed caps {jet.caps.caps}")
    scale = 1.0
    for o in orders:
        scale *= math.factorial(o)
    return float(jet.coeffs[orders]) * scale


def laplacian_power_derivative(jet: JetPolynomial, mode_pairs) -> float:
    """Evaluate prod_j (d^2/dx_{a_j}^2 + d^2/dx_{b_j}^2)^{n_j} f at 0.

    mode_pairs is a list of (var_a, var_b, power); the binomial expansion of
    each squared-gradient power is summed over extract_mixed_derivative.
    """
    pairs = [(int(a), int(b), int(p)) for a, b, p in mode_pairs]
    used: set[int] = set()
    for a, b, p in pairs:
        if p < 0:
            raise ValueError("laplacian power must be non-negative")
        if a == b or a in used or b in used:
            raise ValueError("laplacian pairs must use distinct variables")
        used.update((a, b))
        for v in (a, b):
            if 2 * p > jet.caps.caps[v]:
                raise ValueError(
                    f"power {p} needs cap {2 * p} on variable {v}, "
                    f"have {jet.caps.caps[v]}"
                )
    total = 0.0
    base = [0] * jet.caps.n_vars
    # Cartesian product over the binomial split of each pair.
    for choice in np.ndindex(*(p + 1 for _, _, p in pairs)):
        orders = list(base)
        weight = 1.0
        for (a, b, p), m in zip(pairs, choice):
            weight *= math.comb(p, m)
            orders[a] = 2 * m
            orders[b] = 2 * (p - m)
        total += weight * extract_mixed_derivative(jet, orders)
    return total
