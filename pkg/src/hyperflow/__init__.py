"""Inverse curvature flow of convex graphs in hyperbolic space.

Axisymmetric method-of-lines solver for the expanding flow x' = F^-p nu
together with the geometry, curvature-function and decay diagnostics
needed to check gradient decay and rescaled convergence numerically.
"""

from hyperflow.curvfun import (
    CurvatureFunctionSpec,
    StructureConstants,
    concavity_check,
    epsilon0_estimate,
    eval_F,
    grad_F,
)
from hyperflow.geometry import (
    AxiMesh,
    GraphField,
    SurfaceJet,
    build_jet,
    gradient_v,
    hyperboloid_oracle,
    offcenter_sphere_graph,
    read_snapshot,
    slice_mean_curvature,
    write_snapshot,
)
from hyperflow.flow import (
    FlowConfig,
    FlowState,
    SpeedFunction,
    adaptive_dt,
    barrier_check,
    run,
    scalar_speed,
    spherical_solution,
    step,
)
from hyperflow.diagnostics import (
    DiagnosticsRecord,
    RateFit,
    boundedness_monitor,
    decay_rate_fit,
    grad1_residual,
    max_point_identity,
    record,
)

__version__ = "0.1.0"
