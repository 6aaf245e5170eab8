"""Coverage-probability engine for ultra-dense cellular networks with
mixed LOS/NLOS propagation: an analytic evaluator built on interference
Laplace transforms, cross-validated by a Poisson point process Monte Carlo
simulator, plus a sweep CLI that emits figure-ready tables."""

from .analytic import (
    CoverageMethod,
    CoverageResult,
    LaplaceEvaluation,
    OrderTooHigh,
    Scenario,
    coverage,
    coverage_low_density_limit,
    coverage_multislope,
    coverage_nlos,
    coverage_step_simplified,
    coverage_upper_bound,
    exp_composition_derivatives,
    laplace_los,
    laplace_los_derivatives,
    laplace_los_multislope,
    laplace_nlos,
    laplace_nlos_multislope,
    los_success_probability,
)
from .model import (
    Association,
    FadingModel,
    LosKind,
    LosModel,
    NetworkConfig,
    PathLossModel,
    assoc_kernels,
    gamma_ccdf,
    m_from_k,
    pathloss,
    plos,
)
from .montecarlo import (
    EmptyRealization,
    McEstimate,
    Realization,
    SimSpec,
    auto_window_radius,
    estimate_coverage,
    realize,
    sir_of,
)
from .quadrature import (
    DivergentTail,
    NonConvergence,
    QuadSpec,
    integrate_finite,
    integrate_semi_infinite,
)

__version__ = "0.1.0"
