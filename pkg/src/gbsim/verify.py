"""Built-in oracle battery and invariant sweeps.

Each check returns a CheckResult so the CLI can print one pass/fail line per
check and the test suite can assert on the same battery. The checks mirror
the package's hard numerical contracts: closed-form spot values, agreement
between the jet pipeline and the truncated-Fock oracle, and the structural
invariants of symplectic circuits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .gaussian import (
    GaussianState,
    apply,
    compose,
    haar_unitary,
    interferometer_map,
    squeezer,
    symplectic_form,
    vacuum,
)
from .observables import mean_photon, mean_photon_jet
from .patterns import (
    enumerate_patterns,
    fock_oracle_probability,
    pattern_probability,
)

__all__ = ["CheckResult", "run_battery", "ORACLE_BATTERY"]

# Fixed circuits for the oracle-equivalence battery: mode counts, squeezing
# magnitudes, and interferometer seeds.
ORACLE_BATTERY = {
    "modes": (1, 2, 3),
    "squeeze_r": (0.3, 0.88),
    "seeds": (11, 23, 47),
    "max_total": 4,
}


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _result(name: str, passed: bool, detail: str) -> CheckResult:
    return CheckResult(name, bool(passed), detail)


def check_mean_photon_calibration(r: float = 0.88) -> CheckResult:
    """Squeezed-mode mean photon number equals sinh(r)^2 to 1e-9."""
    worst = 0.0
    for n in (1, 3, 6):
        state = vacuum(n)
        for j in range(n):
            state = apply(squeezer(j, r, math.pi / 4, n), state)
        state = apply(interferometer_map(haar_unitary(n, seed=5)), state)
        for j in range(n):
            worst = max(worst, abs(mean_photon(state, j) - math.sinh(r) ** 2))
    return _result(
        "mean-photon calibration",
        worst < 1e-9,
        f"max |<n> - sinh^2 r| = {worst:.3e}",
    )


def check_closed_form_spot_values(r: float = 0.88) -> CheckResult:
    """Single-mode squeezed vacuum: Pr(0), Pr(2) closed forms, odd parity."""
    state = apply(squeezer(0, r, 0.3, 1), vacuum(1))
    pr0 = pattern_probability(state, (0,))
    pr2 = pattern_probability(state, (2,))
    want0 = 1 / math.cosh(r)
    want2 = math.tanh(r) ** 2 / (2 * math.cosh(r))
    rel0 = abs(pr0 - want0) / want0
    rel2 = abs(pr2 - want2) / want2
    odd = max(pattern_probability(state, (c,)) for c in (1, 3))
    ok = rel0 < 1e-8 and rel2 < 1e-8 and odd < 1e-10
    return _result(
        "closed-form spot checks",
        ok,
        f"rel err Pr(0) {rel0:.2e}, Pr(2) {rel2:.2e}, max odd {odd:.2e}",
    )


def check_oracle_equivalence(rel_tol: float = 1e-6) -> CheckResult:
    """Jet-pipeline probabilities match the Fock oracle over the battery.

    Parity-forbidden patterns sit at the 1e-16 noise floor on both sides, so
    the comparison carries a 1e-10 absolute cushion under the relative gate.
    """
    worst = 0.0
    cases = 0
    for n in ORACLE_BATTERY["modes"]:
        for r in ORACLE_BATTERY["squeeze_r"]:
            for seed in ORACLE_BATTERY["seeds"]:
                u = haar_unitary(n, seed)
                state = vacuum(n)
                for j in range(n):
                    state = apply(squeezer(j, r, math.pi / 4, n), state)
                state = apply(interferometer_map(u), state)
                r_vec = np.full(n, r)
                phi_vec = np.full(n, math.pi / 4)
                for total in range(ORACLE_BATTERY["max_total"] + 1):
                    for pattern in enumerate_patterns(n, total, total):
                        p = pattern_probability(state, pattern)
                        q = fock_oracle_probability(r_vec, phi_vec, u, pattern)
                        err = abs(p - q) / (abs(q) + 1e-10 / rel_tol)
                        worst = max(worst, err)
                        cases += 1
    return _result(
        "oracle equivalence",
        worst < rel_tol,
        f"{cases} patterns, worst relative error {worst:.3e}",
    )


def check_normalization() -> CheckResult:
    """n = 2, r = 0.5: probabilities over counts <= 6 per mode sum to ~1."""
    n, r = 2, 0.5
    u = haar_unitary(n, seed=7)
    state = vacuum(n)
    for j in range(n):
        state = apply(squeezer(j, r, math.pi / 4, n), state)
    state = apply(interferometer_map(u), state)
    total = 0.0
    for c0 in range(7):
        for c1 in range(7):
            total += pattern_probability(state, (c0, c1), max_total=12)
    return _result(
        "normalization", abs(total - 1) < 1e-3, f"sum = {total:.6f}"
    )


def _random_circuit(n: int, rng: np.random.Generator):
    layers = []
    for j in range(n):
        layers.append(squeezer(j, rng.uniform(0, 1.0), rng.uniform(0, 2 * math.pi), n))
    layers.append(interferometer_map(haar_unitary(n, int(rng.integers(2**31)))))
    for j in range(n):
        layers.append(squeezer(j, rng.uniform(0, 0.5), rng.uniform(0, 2 * math.pi), n))
    layers.append(interferometer_map(haar_unitary(n, int(rng.integers(2**31)))))
    return compose(layers)


def check_structural_invariants(n_circuits: int = 100) -> CheckResult:
    """Symplectic, purity, uncertainty, and photon-conservation sweep."""
    rng = np.random.default_rng(20240811)
    worst = {"symplectic": 0.0, "purity": 0.0, "uncertainty": 0.0, "conservation": 0.0}
    for _ in range(n_circuits):
        n = int(rng.integers(1, 5))
        j = symplectic_form(n)
        layer = _random_circuit(n, rng)
        worst["symplectic"] = max(
            worst["symplectic"], np.max(np.abs(layer.mat @ j @ layer.mat.T - j))
        )
        state = apply(layer, vacuum(n))
        worst["purity"] = max(worst["purity"], abs(np.linalg.det(state.cov) - 1))
        eigs = np.linalg.eigvalsh(state.cov + 1j * j)
        worst["uncertainty"] = max(worst["uncertainty"], max(0.0, -eigs.min()))
        total_before = sum(mean_photon(state, m) for m in range(n))
        passive = interferometer_map(haar_unitary(n, int(rng.integers(2**31))))
        after = apply(passive, state)
        total_after = sum(mean_photon(after, m) for m in range(n))
        worst["conservation"] = max(
            worst["conservation"], abs(total_after - total_before)
        )
    ok = (
        worst["symplectic"] < 1e-9
        and worst["purity"] < 1e-9
        and worst["uncertainty"] < 1e-9
        and worst["conservation"] < 1e-9
    )
    detail = ", ".join(f"{k} {v:.2e}" for k, v in worst.items())
    return _result("structural invariants", ok, detail)


def check_jet_closed_form_agreement() -> CheckResult:
    """Closed-form means equal jet-differentiated means on random states."""
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(25):
        n = int(rng.integers(1, 4))
        state = apply(_random_circuit(n, rng), vacuum(n))
        state = GaussianState(n, state.cov, rng.normal(scale=0.7, size=2 * n))
        for j in range(n):
            worst = max(worst, abs(mean_photon(state, j) - mean_photon_jet(state, j)))
    return _result(
        "jet vs closed-form means", worst < 1e-10, f"max gap {worst:.2e}"
    )


def run_battery() -> list[CheckResult]:
    return [
        check_mean_photon_calibration(),
        check_closed_form_spot_values(),
        check_oracle_equivalence(),
        check_normalization(),
        check_structural_invariants(),
        check_jet_closed_form_agreement(),
    ]
