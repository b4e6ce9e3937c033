"""Gaussian states and symplectic layers in the quantum phase space.

Conventions
-----------
Quadratures are interleaved, (q0, p0, q1, p1, ...), so a state on n modes
lives in dimension N = 2n. The characteristic function of a Gaussian state is

    chi(x) = exp(-x g x^T / 4 + i x . d)

with g the real N x N covariance matrix and d the real displacement vector.
The vacuum has g = identity and d = 0 (variance 1/2 per quadrature, i.e.
q = (a + a^dag)/sqrt(2)).

A unitary layer acts by pullback: chi'(x) = chi(x M) exp(i x . d'), which in
covariance form is g -> M g M^T and d -> M d + d'. Layers compose left of
earlier layers, vacuum side first.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "GaussianState",
    "SymplecticMap",
    "symplectic_form",
    "vacuum",
    "identity_map",
    "squeezer",
    "interferometer_map",
    "haar_unitary",
    "apply",
    "compose",
    "chi",
]

SYMMETRY_TOL = 1e-12
SYMPLECTIC_TOL = 1e-10
UNITARY_TOL = 1e-10


def symplectic_form(n_modes: int) -> np.ndarray:
    """Block-diagonal J with n copies of [[0, 1], [-1, 0]] (interleaved order)."""
    if n_modes < 1:
        raise ValueError("need at least one mode")
    j = np.zeros((2 * n_modes, 2 * n_modes))
    for m in range(n_modes):
        j[2 * m, 2 * m + 1] = 1.0
        j[2 * m + 1, 2 * m] = -1.0
    return j


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=float)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class GaussianState:
    """Immutable Gaussian state: covariance matrix and displacement vector."""

    n_modes: int
    cov: np.ndarray = field(repr=False)
    disp: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.n_modes < 1:
            raise ValueError("need at least one mode")
        n = 2 * self.n_modes
        cov = np.asarray(self.cov, dtype=float)
        disp = np.asarray(self.disp, dtype=float)
        if cov.shape != (n, n):
            raise ValueError(f"covariance must be {n}x{n}, got {cov.shape}")
        if disp.shape != (n,):
            raise ValueError(f"displacement must have length {n}, got {disp.shape}")
        if np.max(np.abs(cov - cov.T)) >= SYMMETRY_TOL:
            raise ValueError("covariance matrix is not symmetric")
        # Positive definiteness; cheapest decisive check.
        try:
            np.linalg.cholesky(cov)
        except np.linalg.LinAlgError:
            raise ValueError("covariance matrix is not positive definite") from None
        object.__setattr__(self, "cov", _frozen(cov))
        object.__setattr__(self, "disp", _frozen(disp))

    @property
    def dim(self) -> int:
        return 2 * self.n_modes


@dataclass(frozen=True)
class SymplecticMap:
    """Linear phase-space layer (M, d'): R -> M R + d'."""

    mat: np.ndarray = field(repr=False)
    shift: np.ndarray = field(repr=False)

    def __post_init__(self):
        mat = np.asarray(self.mat, dtype=float)
        shift = np.asarray(self.shift, dtype=float)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1] or mat.shape[0] % 2:
            raise ValueError("map matrix must be square with even dimension")
        if shift.shape != (mat.shape[0],):
            raise ValueError("shift length must match matrix dimension")
        j = symplectic_form(mat.shape[0] // 2)
        if np.max(np.abs(mat @ j @ mat.T - j)) >= SYMPLECTIC_TOL:
            raise ValueError("matrix does not satisfy the symplectic condition")
        object.__setattr__(self, "mat", _frozen(mat))
        object.__setattr__(self, "shift", _frozen(shift))

    @property
    def n_modes(self) -> int:
        return self.mat.shape[0] // 2

    @property
    def dim(self) -> int:
        return self.mat.shape[0]


def vacuum(n_modes: int) -> GaussianState:
    """The n-mode vacuum: identity covariance, zero displacement."""
    if n_modes < 1:
        raise ValueError("need at least one mode")
    n = 2 * n_modes
    return GaussianState(n_modes, np.eye(n), np.zeros(n))


def identity_map(n_modes: int) -> SymplecticMap:
    return SymplecticMap(np.eye(2 * n_modes), np.zeros(2 * n_modes))


def squeezer(mode: int, r: float, phi: float, n_modes: int) -> SymplecticMap:
    """Single-mode squeezer on `mode`, identity elsewhere.

    The 2x2 block is cosh(r) I - sinh(r) (cos(phi) Z + sin(phi) X), the
    Heisenberg action of S(xi) = exp((xi* a^2 - xi a^dag^2)/2) with
    xi = r e^{i phi}. On vacuum it produces mean photon number sinh(r)^2.
    """
    if not 0 <= mode < n_modes:
        raise ValueError(f"mode {mode} out of range for {n_modes} modes")
    if r < 0:
        raise ValueError("squeezing magnitude must be non-negative")
    ch, sh = np.cosh(r), np.sinh(r)
    block = np.array(
        [
            [ch - sh * np.cos(phi), -sh * np.sin(phi)],
            [-sh * np.sin(phi), ch + sh * np.cos(phi)],
        ]
    )
    mat = np.eye(2 * n_modes)
    mat[2 * mode : 2 * mode + 2, 2 * mode : 2 * mode + 2] = block
    return SymplecticMap(mat, np.zeros(2 * n_modes))


def _embed_unitary(u: np.ndarray) -> np.ndarray:
    """Orthogonal-symplectic matrix of a passive layer, interleaved ordering.

    In mode-blocked (all q then all p) ordering the matrix is
    [[X, -Y], [Y, X]] with U = X + iY; a fixed index permutation carries it
    to the interleaved convention. Linear in U, so it is reused for tangents.
    """
    n = u.shape[0]
    x, y = np.real(u), np.imag(u)
    blocked = np.block([[x, -y], [y, x]])
    order = np.empty(2 * n, dtype=int)
    order[0::2] = np.arange(n)
    order[1::2] = np.arange(n, 2 * n)
    return blocked[np.ix_(order, order)]


def interferometer_map(u: np.ndarray) -> SymplecticMap:
    """Symplectic map of a passive linear-optical unitary acting on modes."""
    u = np.asarray(u, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise ValueError("interferometer matrix must be square")
    n = u.shape[0]
    if np.max(np.abs(u @ u.conj().T - np.eye(n))) >= UNITARY_TOL:
        raise ValueError("interferometer matrix is not unitary")
    return SymplecticMap(_embed_unitary(u), np.zeros(2 * n))


def haar_unitary(n: int, seed: int) -> np.ndarray:
    """Haar-distributed n x n unitary, deterministic for a fixed seed.

    QR of a complex Ginibre matrix with the R-diagonal phases divided out
    (Mezzadri construction).
    """
    if n < 1:
        raise ValueError("need at least one mode")
    rng = np.random.default_rng(seed)
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def apply(sympl: SymplecticMap, state: GaussianState) -> GaussianState:
    """Evolve a state through one layer: g -> M g M^T, d -> M d + d'."""
    if sympl.dim != state.dim:
        raise ValueError(
            f"map dimension {sympl.dim} does not match state dimension {state.dim}"
        )
    m = sympl.mat
    cov = m @ state.cov @ m.T
    cov = (cov + cov.T) / 2  # remove rounding asymmetry
    return GaussianState(state.n_modes, cov, m @ state.disp + sympl.shift)


def compose(maps) -> SymplecticMap:
    """Collapse an ordered list of layers, vacuum-side map applied first."""
    maps = list(maps)
    if not maps:
        raise ValueError("need at least one map to compose")
    dim = maps[0].dim
    if any(m.dim != dim for m in maps):
        raise ValueError("all maps must share the same dimension")
    mat = np.eye(dim)
    shift = np.zeros(dim)
    for layer in maps:
        mat = layer.mat @ mat
        shift = layer.mat @ shift + layer.shift
    return SymplecticMap(mat, shift)


def chi(state: GaussianState, x) -> complex:
    """Characteristic function chi(x) = exp(-x g x^T / 4 + i x . d)."""
    x = np.asarray(x, dtype=float)
    if x.shape != (state.dim,):
        raise ValueError(f"argument must have length {state.dim}")
    return complex(np.exp(-0.25 * x @ state.cov @ x + 1j * (x @ state.disp)))
