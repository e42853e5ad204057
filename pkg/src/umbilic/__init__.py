"""Geometry checks for almost-umbilical closed surfaces in R^3.

Pipeline: mesh ingestion/validation, analytic test families with
closed-form oracles, per-vertex shape-operator estimation, area-weighted
L^p field calculus, the first Laplace-Beltrami eigenvalue, and the
pinching hypothesis/annulus-conclusion verification with its proof trace.
"""

from .diffgeo import (
    ConvexityStatus,
    SurfaceGeometry,
    VertexGeometry,
    convexity_status,
    estimate_geometry,
    ricci_deficit,
    ricci_from_gauss,
)
from .fields import (
    RescalingLaw,
    ScalarField,
    integrate,
    lp_norm,
    normalize_mesh,
    sublevel_measure,
)
from .mesh import (
    Mesh,
    MeshFormatError,
    MeshMeasures,
    ValidationReport,
    load_mesh,
    measures,
    save_mesh,
    validate_mesh,
)
from .pinching import (
    AnnulusResult,
    HypothesisResult,
    PinchingConstants,
    PinchingReport,
    ProofTrace,
    RothResult,
    amplitude_for_ratio,
    annulus_check,
    check_hypothesis,
    eta_of_epsilon,
    fit_umbilical_mu,
    phi_sup,
    pinch_ratio,
    proof_trace,
    roth_condition,
    sharpness_sweep,
    verify_theorem,
)
from .spectral import (
    ConvergenceError,
    LaplaceSystem,
    SpectralResult,
    aubry_lower_bound,
    build_laplace,
    lambda1,
    lambda1_upper_bound,
)
from .surfgen import (
    Ellipsoid,
    PerturbedSphere,
    Sphere,
    fd_curvatures,
    generate,
    oracle_curvatures,
    oracle_curvatures_at_vertices,
    oracle_geometry,
    oracle_lambda1,
    real_sph_harm,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
