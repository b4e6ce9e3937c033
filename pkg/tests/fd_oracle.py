"""Finite-difference oracle for Taylor coefficients.

Central-difference tensor stencils on a uniform half-step grid, evaluated in
extended precision and Richardson-extrapolated twice (steps h, h/2, h/4).
Kept deliberately independent of the jet engine: it only ever calls the
scalar function being checked.

High-order mixed differences amplify rounding noise like eps / h^order, so
the oracle is trustworthy up to a total derivative order of about 8; keep
sum(caps) <= 8 and compare with a small absolute floor for near-zero
coefficients.
"""

import math

import numpy as np

FD_STEP = 0.2
FD_RTOL = 1e-6
FD_ATOL = 5e-9


def _stencil(order: int, n_offsets: int, max_cap: int, h: float) -> np.ndarray:
    """Weights over the offsets grid (units of h/2) for one 1-D derivative."""
    w = np.zeros(n_offsets, dtype=np.longdouble)
    for i in range(order + 1):
        w[(order - 2 * i) + max_cap] += (-1) ** i * math.comb(order, i)
    return w / np.longdouble(h) ** order


def _coefficients_at_step(f, caps, h: float) -> np.ndarray:
    d = len(caps)
    max_cap = max(caps)
    offsets = (np.arange(-max_cap, max_cap + 1) * (h / 2)).astype(np.longdouble)
    grids = np.meshgrid(*([offsets] * d), indexing="ij")
    points = np.stack(grids, axis=-1)
    values = f(points)
    out = np.empty(tuple(c + 1 for c in caps), dtype=np.longdouble)
    n_offsets = 2 * max_cap + 1
    for orders in np.ndindex(*out.shape):
        acc = values
        scale = 1.0
        for o in orders:
            acc = np.tensordot(_stencil(o, n_offsets, max_cap, h), acc, axes=(0, 0))
            scale *= math.factorial(o)
        out[orders] = acc / scale
    return out


def fd_taylor_coefficients(f, caps, h: float = FD_STEP) -> np.ndarray:
    """Richardson-extrapolated Taylor coefficients of f at 0 up to caps.

    f must accept an array of shape (..., len(caps)) and return values of
    shape (...,); it will be handed longdouble points.
    """
    f_h = _coefficients_at_step(f, caps, h)
    f_half = _coefficients_at_step(f, caps, h / 2)
    f_quarter = _coefficients_at_step(f, caps, h / 4)
    first = (4 * f_half - f_h) / 3
    second = (4 * f_quarter - f_half) / 3
    return ((16 * second - first) / 15).astype(float)


def quadratic_exponential(quad: np.ndarray, lin: np.ndarray, const: float = 0.0):
    """The scalar function exp(x quad x / 2 + lin . x + const), vectorized."""
    quad = quad.astype(np.longdouble)
    lin = lin.astype(np.longdouble)
    const = np.longdouble(const)

    def f(points: np.ndarray) -> np.ndarray:
        quad_part = 0.5 * np.einsum("...a,ab,...b->...", points, quad, points)
        return np.exp(quad_part + points @ lin + const)

    return f
