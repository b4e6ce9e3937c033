import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from gbsim.gaussian import (
    GaussianState,
    apply,
    compose,
    haar_unitary,
    interferometer_map,
    squeezer,
    vacuum,
)


def random_circuit_map(n_modes: int, rng: np.random.Generator):
    """Squeezers, a Haar layer, more squeezers, another Haar layer."""
    layers = []
    for j in range(n_modes):
        layers.append(
            squeezer(j, rng.uniform(0, 1.0), rng.uniform(0, 2 * np.pi), n_modes)
        )
    layers.append(interferometer_map(haar_unitary(n_modes, int(rng.integers(2**31)))))
    for j in range(n_modes):
        layers.append(
            squeezer(j, rng.uniform(0, 0.5), rng.uniform(0, 2 * np.pi), n_modes)
        )
    layers.append(interferometer_map(haar_unitary(n_modes, int(rng.integers(2**31)))))
    return compose(layers)


def random_pure_state(n_modes: int, rng: np.random.Generator, displaced=False):
    state = apply(random_circuit_map(n_modes, rng), vacuum(n_modes))
    if displaced:
        state = GaussianState(
            n_modes, state.cov, rng.normal(scale=0.7, size=2 * n_modes)
        )
    return state


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)
