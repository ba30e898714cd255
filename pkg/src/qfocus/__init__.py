"""qfocus: expansion of timelike geodesic congruences under quantum matter
fluctuations.

Classical Raychaudhuri dynamics, retarded Green operators for d^2/dt^2 + V,
second-order perturbative moments of the fluctuation field on the flat
background, and Gaussian/Poisson collapse-probability estimates validated by
first-passage Monte Carlo.
"""

from .grids import ProperTimeGrid, DEFAULT_N_POINTS
from .congruence import (
    CongruenceBackground,
    Potential,
    Trajectory,
    RaychaudhuriResult,
    potential_from_background,
    evolve_classical_raychaudhuri,
    theta_from_phi,
    solve_linear_phi,
    detect_collapse,
)
from .green import (
    GreenOperator,
    bisolution,
    retarded_apply,
    retarded_adjoint_apply,
    verify_green,
)
from .smearing import TestFunction, CouplingWindow, PolynomialBump
from .moments import (
    RestrictedTwoPoint,
    RenormConstants,
    fourier_transform,
    variance_adiabatic,
    variance_first_order_spectral,
    variance_report,
    mean_phi,
    c_number_kernel_pairing,
    first_order_field_kernel,
    first_order_term,
    FIRST_ORDER_SIGN,
)
from .stochastic import (
    GaussianModel,
    CollapseReport,
    normal_cdf,
    collapse_probability,
    collapse_probability_tau,
    mean_time_to_collapse,
    simulate_poisson_collapse,
)
from .errors import (
    ConfigurationError,
    ResolutionError,
    ZeroCrossingError,
    InfiniteExpectationError,
)

__version__ = "0.1.0"

__all__ = [
    "ProperTimeGrid",
    "DEFAULT_N_POINTS",
    "CongruenceBackground",
    "Potential",
    "Trajectory",
    "RaychaudhuriResult",
    "potential_from_background",
    "evolve_classical_raychaudhuri",
    "theta_from_phi",
    "solve_linear_phi",
    "detect_collapse",
    "GreenOperator",
    "bisolution",
    "retarded_apply",
    "retarded_adjoint_apply",
    "verify_green",
    "TestFunction",
    "CouplingWindow",
    "PolynomialBump",
    "RestrictedTwoPoint",
    "RenormConstants",
    "fourier_transform",
    "variance_adiabatic",
    "variance_first_order_spectral",
    "variance_report",
    "mean_phi",
    "c_number_kernel_pairing",
    "first_order_field_kernel",
    "first_order_term",
    "FIRST_ORDER_SIGN",
    "GaussianModel",
    "CollapseReport",
    "normal_cdf",
    "collapse_probability",
    "collapse_probability_tau",
    "mean_time_to_collapse",
    "simulate_poisson_collapse",
    "ConfigurationError",
    "ResolutionError",
    "ZeroCrossingError",
    "InfiniteExpectationError",
    "__version__",
]
