"""Level-set geometry of ellipsoids: second fundamental form, mean
curvature, umbilic defect, umbilic point location, and the touching
ellipsoid used to break boundary Hessian bounds for negative prescribed
mean curvature.

The hypersurface is F(x) = sum x_i^2 / a_i^2 - 1 = 0.  The 'inward'
orientation (normal pointing at the origin) makes the sphere's mean
curvature positive: H = (n-1)/a.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

ON_SURFACE_TOL = 1e-10
DEFECT_TOL_BASE = 1e-8
DEGENERATE_MINIMA = 32


@dataclass(frozen=True)
class EllipsoidSpec:
    axes: tuple
    orientation: str = "inward"

    def __post_init__(self) -> None:
        object.__setattr__(self, "axes", tuple(float(a) for a in self.axes))
        if len(self.axes) < 3:
            raise ValueError("need ambient dimension >= 3")
        if any(a <= 0 for a in self.axes):
            raise ValueError("all semi-axes must be positive")
        if self.orientation not in ("inward", "outward"):
            raise ValueError("orientation must be 'inward' or 'outward'")

    @property
    def n(self) -> int:
        return len(self.axes)

    def level(self, x) -> float:
        a = np.asarray(self.axes)
        return float(np.sum(np.asarray(x, dtype=float) ** 2 / a**2) - 1.0)

    def project(self, x) -> np.ndarray:
        """Radial projection onto the surface (scale along the ray from 0)."""
        x = np.asarray(x, dtype=float)
        a = np.asarray(self.axes)
        q = math.sqrt(np.sum(x * x / a**2))
        if q == 0.0:
            raise ValueError("cannot project the origin")
        return x / q

    def sample(self, count: int, rng: np.random.Generator) -> np.ndarray:
        """Surface points x_i = a_i v_i / |v| from normalized Gaussians."""
        v = rng.standard_normal((count, self.n))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        return v * np.asarray(self.axes)


@dataclass
class SurfacePointGeometry:
    point: np.ndarray
    normal: np.ndarray
    L: np.ndarray
    H: float
    umbilic_defect: float
    projected: bool = False
    frame: np.ndarray = field(default=None, repr=False)


def _gradient(spec: EllipsoidSpec, x: np.ndarray) -> np.ndarray:
    return 2.0 * x / np.asarray(spec.axes) ** 2


def _tangent_frame(normal: np.ndarray) -> np.ndarray:
    """Orthonormal tangent frame via Gram-Schmidt on the coordinate basis."""
    n = normal.size
    vectors = [normal]
    for i in range(n):
        e = np.zeros(n)
        e[i] = 1.0
        for v in vectors:
            e = e - (e @ v) * v
        norm = np.linalg.norm(e)
        if norm > 1e-8:
            vectors.append(e / norm)
        if len(vectors) == n:
            break
    return np.array(vectors[1:])


def surface_geometry(spec: EllipsoidSpec, x) -> SurfacePointGeometry:
    """Second fundamental form data at a surface point.

    Off-surface inputs beyond the tolerance are radially projected and
    flagged.  With the inward orientation L = hess F / |grad F| restricted
    to the tangent frame and H = tr L; the outward orientation flips both.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (spec.n,):
        raise ValueError("point dimension mismatch")
    if not np.any(x):
        raise ValueError("the origin is not on the surface")
    projected = False
    if abs(spec.level(x)) > ON_SURFACE_TOL:
        x = spec.project(x)
        projected = True
    a2 = np.asarray(spec.axes) ** 2
    grad = _gradient(spec, x)
    gnorm = np.linalg.norm(grad)
    sign = -1.0 if spec.orientation == "inward" else 1.0
    normal = sign * grad / gnorm
    frame = _tangent_frame(normal)
    hess_diag = 2.0 / a2
    # hess F is diagonal, so L_ab = sum_i hessdiag_i e_a[i] e_b[i] / |grad F|
    L = -sign * (frame * hess_diag) @ frame.T / gnorm
    L = 0.5 * (L + L.T)
    H = float(np.trace(L))
    defect = float(np.sum(L * L) - H * H / (spec.n - 1))
    return SurfacePointGeometry(
        point=x, normal=normal, L=L, H=H, umbilic_defect=defect,
        projected=projected, frame=frame,
    )


def mean_curvature_closed_form(spec: EllipsoidSpec, x) -> float:
    """H = (sum a^-4 x^2)^(-1/2) (sum a^-2 - sum a^-6 x^2 / sum a^-4 x^2)."""
    x = np.asarray(x, dtype=float)
    a = np.asarray(spec.axes)
    s4 = np.sum(x * x / a**4)
    s2 = np.sum(1.0 / a**2)
    s6 = np.sum(x * x / a**6)
    return float((s2 - s6 / s4) / math.sqrt(s4))


def umbilic_defect(spec: EllipsoidSpec, x) -> float:
    return surface_geometry(spec, x).umbilic_defect


def umbilic_residual(spec: EllipsoidSpec, x) -> float:
    """Closed-form umbilic condition: LHS - RHS of the defect identity.

    Vanishes exactly where |L|^2 = H^2/(n-1), i.e. at umbilic points,
    without building the tangent frame.
    """
    x = np.asarray(x, dtype=float)
    if not np.any(x):
        raise ValueError("the origin is not on the surface")
    if abs(spec.level(x)) > ON_SURFACE_TOL:
        x = spec.project(x)
    a = np.asarray(spec.axes)
    s2 = np.sum(1.0 / a**2)
    s4 = np.sum(x * x / a**4)
    s6 = np.sum(x * x / a**6)
    s8 = np.sum(x * x / a**8)
    lhs = np.sum(1.0 / a**4) - 2.0 * s8 / s4 + (s6 / s4) ** 2
    rhs = (s2 - s6 / s4) ** 2 / (spec.n - 1)
    return float(lhs - rhs)


def umbilic_defect_batch(spec: EllipsoidSpec, pts: np.ndarray) -> np.ndarray:
    """Vectorized |Lring|^2 over rows of surface points.

    Uses |L|^2 = (|hess F|_tan^2 terms) assembled from the closed forms,
    matching surface_geometry to round-off; used for dense sampling.
    """
    a = np.asarray(spec.axes)
    x = np.asarray(pts, dtype=float)
    s4 = np.sum(x * x / a**4, axis=1)
    s6 = np.sum(x * x / a**6, axis=1)
    s8 = np.sum(x * x / a**8, axis=1)
    gnorm2 = 4.0 * s4
    # full |hess F|^2 minus mixed and normal-normal blocks, then scale
    l2_full = np.sum(4.0 / a**4)
    mixed = 16.0 / gnorm2 * (s8 - 4.0 * s6**2 / gnorm2)
    normal2 = (8.0 * s6 / gnorm2) ** 2
    l2_tan = (l2_full - 2.0 * mixed - normal2) / gnorm2
    h = (np.sum(1.0 / a**2) - s6 / s4) / np.sqrt(s4)
    return l2_tan - h * h / (spec.n - 1)


@dataclass
class UmbilicSearchResult:
    points: list
    min_defect: float
    degenerate: bool
    mode: str


def closed_form_umbilics_n3(spec: EllipsoidSpec) -> list:
    """The four umbilic points of a triaxial ellipsoid with a1 < a2 < a3."""
    if spec.n != 3:
        raise ValueError("closed form is for n = 3")
    a1, a2, a3 = spec.axes
    if not a1 < a2 < a3:
        raise ValueError("closed form requires strictly increasing axes")
    x1 = a1 * math.sqrt((a2**2 - a1**2) / (a3**2 - a1**2))
    x3 = a3 * math.sqrt((a3**2 - a2**2) / (a3**2 - a1**2))
    return [
        np.array([sx * x1, 0.0, sz * x3])
        for sx in (1.0, -1.0)
        for sz in (1.0, -1.0)
    ]


def find_umbilic_points(
    spec: EllipsoidSpec,
    mode: str,
    samples: int = 20000,
    seed: int = 0,
    refine: int = 40,
) -> UmbilicSearchResult:
    """Locate umbilic points, either in closed form (n=3) or numerically.

    numeric_search scans Gaussian-mapped surface samples for low defect,
    refines the best candidates by Nelder-Mead over the direction chart
    v -> (a_i v_i / |v|), and keeps refined points below the scaled
    tolerance.  More than DEGENERATE_MINIMA separated minima flags a
    degenerate family (all-umbilic sphere etc.).
    """
    if mode == "closed_form_n3":
        pts = closed_form_umbilics_n3(spec)
        defects = [umbilic_defect(spec, p) for p in pts]
        return UmbilicSearchResult(
            points=pts, min_defect=float(min(defects)), degenerate=False, mode=mode
        )
    if mode != "numeric_search":
        raise ValueError("mode must be 'closed_form_n3' or 'numeric_search'")

    rng = np.random.default_rng(seed)
    pts = spec.sample(samples, rng)
    defects = umbilic_defect_batch(spec, pts)
    order = np.argsort(defects)
    axes = np.asarray(spec.axes)

    def objective(v):
        v = np.asarray(v)
        norm = np.linalg.norm(v)
        if norm < 1e-12:
            return np.inf
        return umbilic_defect(spec, axes * v / norm)

    found = []
    for idx in order[:refine]:
        v0 = pts[idx] / axes
        res = minimize(objective, v0, method="Nelder-Mead",
                       options={"xatol": 1e-12, "fatol": 1e-16, "maxiter": 800})
        x = axes * res.x / np.linalg.norm(res.x)
        geo = surface_geometry(spec, x)
        tol = DEFECT_TOL_BASE * (1.0 + geo.H**2)
        if geo.umbilic_defect < tol:
            if all(np.linalg.norm(x - q) > 1e-4 for q in found):
                found.append(geo.point)
    min_defect = float(np.min(defects))
    degenerate = len(found) > DEGENERATE_MINIMA
    return UmbilicSearchResult(
        points=[] if degenerate else found,
        min_defect=min_defect,
        degenerate=degenerate,
        mode=mode,
    )


@dataclass
class CounterexampleReport:
    n: int
    eps: float
    axes: tuple
    touch_point: np.ndarray
    h_eps: float
    gap: float  # |h_eps + 1|
    defect: float


def counterexample_geometry(n: int, eps: float) -> CounterexampleReport:
    """Geometry of the ellipsoid touching the unit sphere at (+-1, 0, ..., 0).

    Axes a_i = 1 + (i-1) eps; the annulus-complement orientation gives
    h_eps = -H/(n-1) at the touch points, which tends to -1 as eps -> 0
    while the touch points stay non-umbilic for eps > 0.
    """
    if n < 3:
        raise ValueError("need n >= 3")
    if not 0.0 <= eps < 1.0:
        raise ValueError("eps must lie in [0, 1)")
    axes = tuple(1.0 + i * eps for i in range(n))
    spec = EllipsoidSpec(axes=axes, orientation="inward")
    x0 = np.zeros(n)
    x0[0] = 1.0
    geo = surface_geometry(spec, x0)
    h_eps = -geo.H / (n - 1)
    return CounterexampleReport(
        n=n,
        eps=eps,
        axes=axes,
        touch_point=x0,
        h_eps=float(h_eps),
        gap=abs(h_eps + 1.0),
        defect=float(geo.umbilic_defect),
    )
