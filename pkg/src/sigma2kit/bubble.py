"""Closed-form bubble solutions of the rescaled limit equations.

An interior bubble solves sigma2^(1/2)(g_v^-1 A_v) = f on all of R^n in
the pow convention; a boundary bubble additionally satisfies the
nonlinear Neumann condition dv/dy_n = -((n-2)/2) c v^(n/(n-2)) on the
wall.  Both are spherical-cap metrics in disguise, so the curvature
residuals vanish identically; the verification here separates formula
errors from discretization errors by using analytic radial derivatives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .radial import RadialProfile, radial_schouten_eigs
from .symfunc import dimension_constant, sigma_pair


@dataclass(frozen=True)
class BubbleParams:
    """Spherical-cap parameters of the boundary limit solution.

    With root_cn = sqrt(C_n^2):
        b        = f/(2 root_cn) (1 + c^2 root_cn/(2f))^2
        Ttilde_c = c/sqrt(2f) (C_n^2)^(1/4) / sqrt(b)
        lambda_cap = root_cn / (2f),  T_c = -c sqrt(lambda_cap)
        ybar_n   = -Ttilde_c  (wall through the origin)
    and ybar_n solves the fixed-point relation
        ybar_n^2 b - sqrt(2/f) (C_n^2)^(1/4) sqrt(b) + 1 = 0.
    """

    n: int
    f: float
    c: float
    b: float
    Ttilde_c: float
    ybar_n: float
    lambda_cap: float
    T_c: float

    def invariant_residuals(self) -> dict:
        root_cn = dimension_constant(self.n)
        quarter = root_cn**0.5
        res = {
            "b": self.b
            - self.f / (2 * root_cn) * (1 + self.c**2 * root_cn / (2 * self.f)) ** 2,
            "Ttilde_c": self.Ttilde_c
            - self.c / math.sqrt(2 * self.f) * quarter / math.sqrt(self.b),
            "lambda_cap": self.lambda_cap - root_cn / (2 * self.f),
            "T_c": self.T_c + self.c * math.sqrt(self.lambda_cap),
            "fixed_point": self.ybar_n**2 * self.b
            - math.sqrt(2.0 / self.f) * quarter * math.sqrt(self.b)
            + 1.0,
        }
        return res

    def liouville_constants(self):
        """(a, b, xbar_n) of the half-space Liouville form.

        The profile is (a / (1 + b |y - xbar|^2))^((n-2)/2) with
        a = 2 sqrt(lambda_cap b); the wall relation reads
        (n-2) a^-1 b xbar_n = -((n-2)/2) c in the Neumann convention
        dv/dy_n = -((n-2)/2) c v^(n/(n-2)).
        """
        a = 2.0 * math.sqrt(self.lambda_cap * self.b)
        return a, self.b, self.ybar_n


def make_bubble_params(n: int, f: float, c: float) -> BubbleParams:
    """Fill the cap parameters from the closed forms (wall at y_n = 0)."""
    if f <= 0:
        raise ValueError("limit curvature f must be positive")
    if c < 0:
        raise ValueError("limit boundary mean curvature c must be nonnegative")
    root_cn = dimension_constant(n)
    b = f / (2 * root_cn) * (1 + c * c * root_cn / (2 * f)) ** 2
    ttilde = c / math.sqrt(2 * f) * root_cn**0.5 / math.sqrt(b)
    lam = root_cn / (2 * f)
    params = BubbleParams(
        n=n,
        f=f,
        c=c,
        b=b,
        Ttilde_c=ttilde,
        ybar_n=-ttilde,
        lambda_cap=lam,
        T_c=-c * math.sqrt(lam),
    )
    res = params.invariant_residuals()
    scale = 1.0 + b + ttilde * ttilde * b
    worst = max(abs(v) for v in res.values())
    if worst > 1e-9 * scale:
        raise AssertionError(f"bubble parameter identities violated: {res}")
    return params


class Bubble:
    """Radial profile K (1 + b rho^2)^(-(n-2)/2) about a center on the axis.

    Callable on n-vectors or radii; carries analytic first and second
    radial derivatives for residual checks.
    """

    def __init__(self, n: int, f: float, c: float, K: float, b: float,
                 center_n: float):
        self.n = n
        self.f = f
        self.c = c
        self.K = K
        self.b = b
        self.center_n = center_n

    def radius(self, y) -> np.ndarray:
        y = np.atleast_2d(np.asarray(y, dtype=float))
        offset = np.zeros(self.n)
        offset[-1] = self.center_n
        return np.linalg.norm(y - offset, axis=1)

    def value(self, rho):
        rho = np.asarray(rho, dtype=float)
        return self.K * (1.0 + self.b * rho * rho) ** (-(self.n - 2) / 2.0)

    def d1(self, rho):
        rho = np.asarray(rho, dtype=float)
        base = 1.0 + self.b * rho * rho
        return -self.K * (self.n - 2) * self.b * rho * base ** (-self.n / 2.0)

    def d2(self, rho):
        rho = np.asarray(rho, dtype=float)
        base = 1.0 + self.b * rho * rho
        return (
            -self.K
            * (self.n - 2)
            * self.b
            * base ** (-self.n / 2.0 - 1.0)
            * (1.0 - (self.n - 1) * self.b * rho * rho)
        )

    def __call__(self, y):
        out = self.value(self.radius(y))
        return out if out.size > 1 else float(out[0])

    def normal_derivative_on_wall(self, yprime_norm):
        """dv/dy_n at wall points (y', -T) with T = 0, |y'| given."""
        s = np.asarray(yprime_norm, dtype=float)
        rho = np.sqrt(s * s + self.center_n**2)
        # derivative of v(|y - center|) in the y_n direction on y_n = 0
        out = np.where(rho > 0, self.d1(rho) * (-self.center_n) / np.where(rho > 0, rho, 1.0), 0.0)
        return out

    def profile(self, r_grid) -> RadialProfile:
        r = np.asarray(r_grid, dtype=float)
        return RadialProfile(
            convention="pow",
            n=self.n,
            samples=np.column_stack([r, self.value(r), self.d1(r), self.d2(r)]),
            center_offset=self.center_n,
        )


def interior_bubble(n: int, f: float) -> Bubble:
    """(1 + f/(2 sqrt(C_n^2)) |y|^2)^((2-n)/2); value 1 at the origin."""
    if f <= 0:
        raise ValueError("f must be positive")
    if n < 3:
        raise ValueError("n must be at least 3")
    beta = f / (2.0 * dimension_constant(n))
    return Bubble(n=n, f=f, c=0.0, K=1.0, b=beta, center_n=0.0)


def boundary_bubble(params: BubbleParams) -> Bubble:
    """f^(-(n-2)/4) ((2 b sqrt(C_n^2))^(1/2) / (1 + b |y - ybar_n e_n|^2))^((n-2)/2).

    Lives on the half-space y_n >= 0 (the wall normalization T = 0); at
    c = 0 it degenerates to the interior bubble exactly.
    """
    root_cn = dimension_constant(params.n)
    if params.c == 0.0:
        K = 1.0  # 2 b root_cn = f exactly: degenerate cap, interior bubble
    else:
        K = params.f ** (-(params.n - 2) / 4.0) * (2.0 * params.b * root_cn) ** (
            (params.n - 2) / 4.0
        )
    return Bubble(
        n=params.n, f=params.f, c=params.c, K=K, b=params.b, center_n=params.ybar_n
    )


@dataclass
class BubbleResidualReport:
    interior_max: float
    boundary_max: float
    points_checked: int


def curvature_residual(bubble: Bubble, rho):
    """|sigma2^(1/2)(g_v^-1 A_v) - f| at radii rho from the bubble center."""
    rho = np.asarray(rho, dtype=float)
    v = bubble.value(rho)
    lr, lt = radial_schouten_eigs(
        (rho, v, bubble.d1(rho), bubble.d2(rho)), bubble.n, "pow"
    )
    _, s2 = sigma_pair(lr, lt, bubble.n)
    s2 = np.maximum(s2, 0.0)
    return np.abs(np.sqrt(s2) * v ** (-4.0 / (bubble.n - 2)) - bubble.f)


def neumann_residual(bubble: Bubble, yprime_norm):
    """|dv/dy_n + ((n-2)/2) c v^(n/(n-2))| at wall points with |y'| given."""
    s = np.asarray(yprime_norm, dtype=float)
    rho = np.sqrt(s * s + bubble.center_n**2)
    v = bubble.value(rho)
    dvdn = bubble.normal_derivative_on_wall(s)
    m = (bubble.n - 2) / 2.0
    return np.abs(dvdn + m * bubble.c * v ** (bubble.n / (bubble.n - 2.0)))


def verify_bubble(params: BubbleParams, grid) -> BubbleResidualReport:
    """Max interior and boundary residuals of the boundary bubble on a grid.

    grid is an array of points in the half-space y_n >= 0; the interior
    residual is evaluated at each point, the Neumann residual at the
    wall projections (y', 0).
    """
    pts = np.atleast_2d(np.asarray(grid, dtype=float))
    if pts.shape[1] != params.n:
        raise ValueError("grid points must have dimension n")
    if np.any(pts[:, -1] < 0):
        raise ValueError("grid must lie in the half-space y_n >= 0")
    bub = boundary_bubble(params)
    rho = bub.radius(pts)
    interior = curvature_residual(bub, rho)
    wall = np.linalg.norm(pts[:, :-1], axis=1)
    boundary = neumann_residual(bub, wall)
    return BubbleResidualReport(
        interior_max=float(np.max(interior)),
        boundary_max=float(np.max(boundary)),
        points_checked=pts.shape[0],
    )


def default_grid(n: int, count: int = 30, seed: int = 0, radius: float = 3.0):
    """Half-space sample points, bounded well inside |y| < 1e3."""
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-radius, radius, size=(count, n))
    pts[:, -1] = np.abs(pts[:, -1])
    return pts
