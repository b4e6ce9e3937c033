"""Gaussian boson sampling in the quantum phase space.

States are covariance/displacement pairs, circuits are composed symplectic
layers, photon-pattern probabilities come from high-order jet derivatives of
the Husimi Gaussian, and a trainable interferometer reshapes the pattern
distribution by gradient descent.
"""

from .gaussian import (
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
from .jets import (
    DegreeCaps,
    JetPolynomial,
    QuadraticExponentForm,
    extract_mixed_derivative,
    jet_from_quadratic,
    jet_multiply,
    laplacian_power_derivative,
)
from .observables import (
    ObservableReport,
    diff_photon_sq,
    loss_mean,
    loss_pair,
    mean_photon,
    mean_photon_jet,
    observable_report,
)
from .patterns import (
    CutoffError,
    HusimiForm,
    PatternDistribution,
    PhotonPattern,
    distribution,
    enumerate_patterns,
    fock_oracle_probability,
    husimi_form,
    pattern_probability,
)
from .training import (
    LossComparison,
    PipelineSpec,
    TrainableInterferometer,
    TrainingConfig,
    TrainingDivergence,
    TrainingTrace,
    build_pipeline,
    compare_losses,
    loss_and_grad,
    train,
)

__version__ = "0.1.0"
