"""Nonlinear connection on the second-order tangent bundle built from a
first-order Lagrangian, with Jacobi-field certification tools."""
from .geom_core import (
    ANALYTIC,
    FORCED_FD,
    BasePoint,
    DiffStrategy,
    DimensionMismatch,
    DomainExit,
    FirstOrderState,
    ForceField,
    GeometryError,
    GeometryModel,
    IndexOutOfRange,
    IntegrationError,
    InvalidSpec,
    SecondOrderState,
    SingularMetric,
    SingularVelocity,
    SprayJet,
    TooFewSamples,
    invert_metric,
    metric_tensor,
)
from .connections import (
    ConnectionPack,
    CurvatureData,
    DualCoefficients,
    adapted_components,
    berwald_coefficients,
    berwald_curvatures,
    c_operator,
    curvature_R,
    delta0_derivative,
    from_pde_coefficients,
    miron_dual_coefficients,
    nonlinear_connection,
    our_dual_coefficients,
    spray_coefficients,
)
from .dynamics import (
    IntegratorConfig,
    Trajectory,
    berwald_covariant_rate,
    deviation_oracle,
    horizontality_residual,
    integrate_jacobi,
    integrate_trajectory,
    parallel_transport,
    v2_residual,
)
from .models import ForceSpec, ModelSpec, build_force, build_model

__version__ = "0.1.0"
