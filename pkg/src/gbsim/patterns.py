"""Photon-pattern probabilities of Gaussian states.

The probability of detecting the pattern (n_0, ..., n_{m-1}) is a high-order
derivative of the Husimi Gaussian at the phase-space origin:

    Pr(pattern) = 1 / (pattern! 2^T) * prod_j lap_j^{2 n_j} F(k) |_{k=0}

where T is the total photon number, lap_j acts on the two quadratures of
mode j, and

    F(k) = det(A)^{-1/2} exp(k.k/2 - (k - d)^T A^{-1} (k - d) / 2),
    A = (cov + identity) / 2.

The combined exponent is quadratic, so the derivative is read from a jet
with per-variable caps 2 n_j. An independent truncated-Fock-space oracle
(`fock_oracle_probability`) provides ground truth at small mode counts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .gaussian import GaussianState
from .jets import DegreeCaps, QuadraticExponentForm, jet_from_quadratic, laplacian_power_derivative

__all__ = [
    "PhotonPattern",
    "HusimiForm",
    "PatternDistribution",
    "CutoffError",
    "husimi_form",
    "pattern_probability",
    "enumerate_patterns",
    "distribution",
    "fock_oracle_probability",
    "squeezed_vacuum_amplitudes",
]

PROBABILITY_ROUNDOFF_TOL = 1e-9
ORACLE_NORM_LOSS_TOL = 1e-4
DEFAULT_ORACLE_CUTOFF = 30


class CutoffError(ValueError):
    """Fock-space cutoff too small: truncation-lost norm above tolerance."""


@dataclass(frozen=True)
class PhotonPattern:
    """Per-mode photon counts whose joint probability is queried."""

    counts: tuple[int, ...]

    def __post_init__(self):
        counts = tuple(int(c) for c in self.counts)
        if any(c < 0 for c in counts):
            raise ValueError("photon counts must be non-negative")
        object.__setattr__(self, "counts", counts)

    @classmethod
    def of(cls, counts) -> "PhotonPattern":
        if isinstance(counts, PhotonPattern):
            return counts
        return cls(tuple(counts))

    @property
    def n_modes(self) -> int:
        return len(self.counts)

    @property
    def total(self) -> int:
        return sum(self.counts)

    def digits(self) -> str:
        """Comma-free digit string, e.g. (1, 1, 0, 0) -> '1100'."""
        if any(c > 9 for c in self.counts):
            raise ValueError("digit string only defined for counts below 10")
        return "".join(str(c) for c in self.counts)


@dataclass(frozen=True)
class HusimiForm:
    """Gaussian data of the Q-representation: A = (cov + 1)/2 and friends."""

    a_mat: np.ndarray = field(repr=False)
    a_inv: np.ndarray = field(repr=False)
    det_a: float
    disp: np.ndarray = field(repr=False)
    prefactor: float


@dataclass(frozen=True)
class PatternDistribution:
    """Probabilities over an enumerated pattern family."""

    entries: tuple
    total_photons: int
    metadata: dict = field(default_factory=dict)

    def to_text(self) -> str:
        """One record per line: digit string, space, probability
        (12 significant digits), sorted lexicographically by pattern."""
        lines = [
            f"{pattern.digits()} {prob:.11e}"
            for pattern, prob in sorted(self.entries, key=lambda e: e[0].counts)
        ]
        return "\n".join(lines) + "\n"


def husimi_form(state: GaussianState) -> HusimiForm:
    """Husimi Gaussian data of a state; prefactor is det(A)^{-1/2}.

    The overall constant is fixed from first principles by requiring the
    vacuum probability of a single squeezed mode to come out 1/cosh(r); see
    the single-mode checks in the verification battery.
    """
    a_mat = (state.cov + np.eye(state.dim)) / 2
    try:
        np.linalg.cholesky(a_mat)
    except np.linalg.LinAlgError:
        raise ValueError("Husimi matrix not positive definite: corrupted state") from None
    a_inv = np.linalg.inv(a_mat)
    det_a = float(np.linalg.det(a_mat))
    return HusimiForm(a_mat, a_inv, det_a, state.disp.copy(), det_a**-0.5)


def pattern_probability(
    state: GaussianState, pattern, *, max_total: int = 8
) -> float:
    """Probability of one photon pattern via jet differentiation."""
    pattern = PhotonPattern.of(pattern)
    if pattern.n_modes != state.n_modes:
        raise ValueError(
            f"pattern has {pattern.n_modes} modes, state has {state.n_modes}"
        )
    if pattern.total > max_total:
        raise ValueError(
            f"pattern total {pattern.total} exceeds the configured maximum "
            f"{max_total}; raise max_total explicitly if intended"
        )
    husimi = husimi_form(state)
    caps_list = [0] * state.dim
    for j, c in enumerate(pattern.counts):
        caps_list[2 * j] = caps_list[2 * j + 1] = 2 * c
    quad = np.eye(state.dim) - husimi.a_inv
    lin = husimi.a_inv @ husimi.disp
    const = -0.5 * float(husimi.disp @ husimi.a_inv @ husimi.disp)
    jet = jet_from_quadratic(
        QuadraticExponentForm((quad + quad.T) / 2, lin, const),
        DegreeCaps(tuple(caps_list)),
    )
    pairs = [
        (2 * j, 2 * j + 1, c) for j, c in enumerate(pattern.counts) if c > 0
    ]
    derivative = laplacian_power_derivative(jet, pairs)
    scale = husimi.prefactor / (2**pattern.total)
    for c in pattern.counts:
        scale /= math.factorial(c)
    return _clip_probability(derivative * scale)


def enumerate_patterns(
    n_modes: int, total_photons: int, max_per_mode: int
) -> list[PhotonPattern]:
    """All patterns with the given total and per-mode bound, lexicographic."""
    if n_modes < 1:
        raise ValueError("need at least one mode")
    if total_photons < 0 or max_per_mode < 0:
        raise ValueError("total and per-mode bound must be non-negative")
    if total_photons > n_modes * max_per_mode:
        raise ValueError(
            f"cannot place {total_photons} photons in {n_modes} modes "
            f"with at most {max_per_mode} each"
        )
    out: list[PhotonPattern] = []

    def fill(prefix, remaining):
        slot = len(prefix)
        if slot == n_modes - 1:
            if remaining <= max_per_mode:
                out.append(PhotonPattern(prefix + (remaining,)))
            return
        headroom = (n_modes - slot - 1) * max_per_mode
        low = max(0, remaining - headroom)
        for c in range(low, min(max_per_mode, remaining) + 1):
            fill(prefix + (c,), remaining - c)

    fill((), total_photons)
    return out


def distribution(
    state: GaussianState, total_photons: int, *, max_total: int = 8
) -> PatternDistribution:
    """Probabilities of every binary pattern with the given total."""
    patterns = enumerate_patterns(state.n_modes, total_photons, 1)
    entries = tuple(
        (p, pattern_probability(state, p, max_total=max_total)) for p in patterns
    )
    return PatternDistribution(entries, total_photons, {"n_modes": state.n_modes})


# ---------------------------------------------------------------------------
# Truncated-Fock-space oracle
# ---------------------------------------------------------------------------


def squeezed_vacuum_amplitudes(r: float, phi: float, cutoff: int) -> np.ndarray:
    """Number-basis amplitudes of S(r e^{i phi})|0>, counts 0..cutoff-1.

    Two-term recursion c_{m+2} = -e^{i phi} tanh(r) sqrt((m+1)/(m+2)) c_m,
    c_0 = 1/sqrt(cosh r); odd amplitudes vanish.
    """
    if cutoff < 1:
        raise ValueError("cutoff must be positive")
    c = np.zeros(cutoff, dtype=complex)
    c[0] = 1.0 / math.sqrt(math.cosh(r))
    factor = -np.exp(1j * phi) * math.tanh(r)
    for m in range(0, cutoff - 2, 2):
        c[m + 2] = factor * math.sqrt((m + 1) / (m + 2)) * c[m]
    return c


def _permanent(mat: np.ndarray) -> complex:
    """Ryser's formula; fine for the small matrices the oracle needs."""
    n = mat.shape[0]
    if n == 0:
        return 1.0 + 0.0j
    total = 0.0 + 0.0j
    for subset in range(1, 1 << n):
        parity = 1 - 2 * (bin(subset).count("1") & 1)
        cols = [c for c in range(n) if subset >> c & 1]
        total += parity * np.prod(mat[:, cols].sum(axis=1))
    return total * (-1) ** n


def _transition_amplitude(u: np.ndarray, out_counts, in_counts) -> complex:
    """<out| U |in> for a passive layer; rows repeat per output counts,
    columns per input counts."""
    rows = np.repeat(np.arange(u.shape[0]), out_counts)
    cols = np.repeat(np.arange(u.shape[0]), in_counts)
    perm = _permanent(u[np.ix_(rows, cols)])
    norm = 1.0
    for c in list(out_counts) + list(in_counts):
        norm *= math.factorial(c)
    return perm / math.sqrt(norm)


def fock_oracle_probability(
    squeeze_r,
    squeeze_phi,
    unitary: np.ndarray,
    pattern,
    *,
    cutoff: int = DEFAULT_ORACLE_CUTOFF,
) -> float:
    """Brute-force pattern probability in the truncated number basis.

    Builds each single-mode squeezed vacuum by recursion, then applies the
    interferometer exactly inside the photon-number sector of the queried
    pattern (passive optics conserves the total). The per-mode cutoff only
    bounds the reported truncation loss; the sector amplitudes themselves
    are exact. Raises CutoffError when the lost norm exceeds 1e-4.
    """
    r = np.atleast_1d(np.asarray(squeeze_r, dtype=float))
    phi = np.atleast_1d(np.asarray(squeeze_phi, dtype=float))
    pattern = PhotonPattern.of(pattern)
    n = pattern.n_modes
    if r.shape != (n,) or phi.shape != (n,):
        raise ValueError("squeeze parameter lengths must match the pattern")
    u = np.asarray(unitary, dtype=complex)
    if u.shape != (n, n):
        raise ValueError("unitary shape must match the number of modes")
    if cutoff < 2 * max(pattern.counts, default=0) + 4:
        raise CutoffError("cutoff below 2 * max count + 4")
    amps = [squeezed_vacuum_amplitudes(r[j], phi[j], cutoff) for j in range(n)]
    lost = 1.0 - float(np.prod([np.sum(np.abs(c) ** 2) for c in amps]))
    if lost > ORACLE_NORM_LOSS_TOL:
        raise CutoffError(
            f"truncation-lost norm {lost:.3e} above {ORACLE_NORM_LOSS_TOL}; "
            "increase the cutoff"
        )
    total = pattern.total
    if total >= cutoff:
        raise CutoffError("pattern total must sit below the cutoff")
    amplitude = 0.0 + 0.0j
    for source in enumerate_patterns(n, total, total):
        weight = 1.0 + 0.0j
        for j, m in enumerate(source.counts):
            weight *= amps[j][m]
        if weight == 0.0:
            continue
        amplitude += weight * _transition_amplitude(u, pattern.counts, source.counts)
    return float(abs(amplitude) ** 2)


def _clip_probability(p: float) -> float:
    if p < -PROBABILITY_ROUNDOFF_TOL or p > 1.0 + PROBABILITY_ROUNDOFF_TOL:
        raise ValueError(f"probability {p} outside [0, 1] beyond round-off")
    return min(max(p, 0.0), 1.0)
