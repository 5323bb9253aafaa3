"""sigma2kit: numerical toolkit for sigma2-curvature boundary problems."""

from .bubble import (
    Bubble,
    BubbleParams,
    boundary_bubble,
    interior_bubble,
    make_bubble_params,
    verify_bubble,
)
from .conformal import (
    BoundaryPointData,
    PointFrameData,
    boundary_conformal,
    cap_average,
    rescale_blowup,
    schouten_exp,
    schouten_pow,
)
from .eigenpath import (
    ModelGeometry,
    PathState,
    annulus_geometry,
    extract_eigenvalue,
    path_residual,
    solve_epsilon_eigen,
    spherical_cap,
    trace_homotopy,
)
from .ellipsoid import (
    EllipsoidSpec,
    SurfacePointGeometry,
    counterexample_geometry,
    find_umbilic_points,
    surface_geometry,
    umbilic_residual,
)
from .radial import (
    BarrierProfile,
    RadialProfile,
    barrier_profile,
    degenerate_family,
    radial_schouten_eigs,
    shoot_annulus,
    shoot_family,
)
from .symfunc import (
    ConeReport,
    SymmetricMatrixN,
    cone_membership,
    mu_gamma_plus,
    newton_tensor_T1,
    sigma1,
    sigma2,
    sigma2_hessian_contract,
)

__version__ = "0.1.0"

__all__ = [
    "Bubble",
    "BubbleParams",
    "BoundaryPointData",
    "BarrierProfile",
    "ConeReport",
    "EllipsoidSpec",
    "ModelGeometry",
    "PathState",
    "PointFrameData",
    "RadialProfile",
    "SurfacePointGeometry",
    "SymmetricMatrixN",
    "annulus_geometry",
    "barrier_profile",
    "boundary_bubble",
    "boundary_conformal",
    "cap_average",
    "cone_membership",
    "counterexample_geometry",
    "degenerate_family",
    "extract_eigenvalue",
    "find_umbilic_points",
    "interior_bubble",
    "make_bubble_params",
    "mu_gamma_plus",
    "newton_tensor_T1",
    "path_residual",
    "radial_schouten_eigs",
    "rescale_blowup",
    "schouten_exp",
    "schouten_pow",
    "shoot_annulus",
    "shoot_family",
    "sigma1",
    "sigma2",
    "sigma2_hessian_contract",
    "solve_epsilon_eigen",
    "spherical_cap",
    "surface_geometry",
    "trace_homotopy",
    "umbilic_residual",
    "verify_bubble",
]
