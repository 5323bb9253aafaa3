"""Conformal transformation laws at a point, in both conventions.

All tensors are point-frame values in an orthonormal frame; no global
metric is ever stored.  The 'exp' convention deforms the metric by
e^(-2u) g, the 'pow' convention by u^(4/(n-2)) g.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .radial import RadialProfile
from .symfunc import SymmetricMatrixN

DEFAULT_CAP_ANGLE = math.pi / 4  # cap half-angle used for boundary averages
TRACE_FREE_TOL = 1e-12


@dataclass
class PointFrameData:
    """Background Schouten tensor plus conformal-factor jets at one point."""

    n: int
    A_g: SymmetricMatrixN
    u: float
    grad_u: np.ndarray
    hess_u: SymmetricMatrixN

    def __post_init__(self) -> None:
        self.grad_u = np.asarray(self.grad_u, dtype=float)
        if self.A_g.n != self.n or self.hess_u.n != self.n:
            raise ValueError("tensor dimensions must match n")
        if self.grad_u.shape != (self.n,):
            raise ValueError("grad_u must be an n-vector")


@dataclass
class BoundaryPointData:
    """Mean curvature, trace-free second fundamental form, normal derivative."""

    h_g: float
    Lring: np.ndarray
    du_dn: float

    def __post_init__(self) -> None:
        self.Lring = np.asarray(self.Lring, dtype=float)
        if self.Lring.ndim != 2 or self.Lring.shape[0] != self.Lring.shape[1]:
            raise ValueError("Lring must be square")
        if not np.array_equal(self.Lring, self.Lring.T):
            raise ValueError("Lring must be symmetric")
        if abs(np.trace(self.Lring)) > TRACE_FREE_TOL * (1 + np.abs(self.Lring).max()):
            raise ValueError("Lring must be trace-free")


def schouten_exp(p: PointFrameData) -> SymmetricMatrixN:
    """Schouten tensor of e^(-2u) g: hess u + du x du - |du|^2/2 I + A_g."""
    g = p.grad_u
    a = (
        p.hess_u.entries
        + np.outer(g, g)
        - 0.5 * float(g @ g) * np.eye(p.n)
        + p.A_g.entries
    )
    return SymmetricMatrixN.symmetrized(a)


def schouten_pow(
    n: int,
    u: float,
    grad_u,
    hess_u: SymmetricMatrixN,
    A_g: SymmetricMatrixN,
) -> SymmetricMatrixN:
    """Schouten tensor of u^(4/(n-2)) g for positive u.

    -(2/(n-2)) hess u / u + (2n/(n-2)^2) du x du / u^2
    - (2/(n-2)^2) |du|^2 / u^2 I + A_g.
    """
    if u <= 0:
        raise ValueError("pow convention requires u > 0")
    g = np.asarray(grad_u, dtype=float)
    m2 = (n - 2.0) ** 2
    a = (
        -(2.0 / (n - 2)) * hess_u.entries / u
        + (2.0 * n / m2) * np.outer(g, g) / (u * u)
        - (2.0 / m2) * float(g @ g) / (u * u) * np.eye(n)
        + A_g.entries
    )
    return SymmetricMatrixN.symmetrized(a)


def pow_factor_from_exp(n: int, w: float, grad_w, hess_w: SymmetricMatrixN):
    """Jets of u = e^(-(n-2) w / 2), the factor with u^(4/(n-2)) g = e^(-2w) g."""
    gw = np.asarray(grad_w, dtype=float)
    u = math.exp(-0.5 * (n - 2) * w)
    grad_u = -0.5 * (n - 2) * u * gw
    hess_u = SymmetricMatrixN.symmetrized(
        u * (0.25 * (n - 2) ** 2 * np.outer(gw, gw) - 0.5 * (n - 2) * hess_w.entries)
    )
    return u, grad_u, hess_u


def boundary_conformal(
    b: BoundaryPointData, u: float, convention: str
) -> BoundaryPointData:
    """Transform boundary data under a conformal change.

    exp:  h -> (du/dn + h) e^u,  Lring -> e^(-u) Lring.
    pow:  h -> [h u - (2/(n-2)) du/dn] u^(-n/(n-2)) (the prescribed c of
          the nonlinear Neumann condition), Lring -> u^(2/(n-2)) Lring.

    The returned du_dn is zero: the deformation has been consumed.
    """
    if convention == "exp":
        h_new = (b.du_dn + b.h_g) * math.exp(u)
        l_new = math.exp(-u) * b.Lring
    elif convention == "pow":
        if u <= 0:
            raise ValueError("pow convention requires u > 0")
        n = b.Lring.shape[0] + 1
        h_new = (b.h_g * u - (2.0 / (n - 2)) * b.du_dn) * u ** (-n / (n - 2.0))
        l_new = u ** (2.0 / (n - 2)) * b.Lring
    else:
        raise ValueError("convention must be 'exp' or 'pow'")
    return BoundaryPointData(h_g=h_new, Lring=l_new, du_dn=0.0)


def rescale_blowup(profile: RadialProfile, s: float) -> RadialProfile:
    """Blow-up rescaling v(z) = s^((n-2)/2) u(sz), exact on the samples.

    The sample grid maps to r/s, values and derivatives pick up the
    matching powers of s, and any axis offset of the radial center
    shrinks by s.  No interpolation happens here.
    """
    if s <= 0:
        raise ValueError("scale must be positive")
    n = profile.n
    a = s ** (0.5 * (n - 2))
    r, u, du, ddu = (profile.samples[:, i].copy() for i in range(4))
    samples = np.column_stack([r / s, a * u, a * s * du, a * s * s * ddu])
    return replace(profile, samples=samples, center_offset=profile.center_offset / s)


def _cubic_interp(x, xs, ys):
    """Local cubic (4-point Lagrange) interpolation on a sorted grid."""
    x = np.asarray(x, dtype=float)
    idx = np.clip(np.searchsorted(xs, x) - 1, 1, len(xs) - 3)
    out = np.zeros_like(x, dtype=float)
    for k in range(-1, 3):
        xk = xs[idx + k]
        lk = np.ones_like(out)
        for m in range(-1, 3):
            if m == k:
                continue
            xm = xs[idx + m]
            lk *= (x - xm) / (xk - xm)
        out += ys[idx + k] * lk
    return out


def cap_average(
    profile: RadialProfile,
    r: float,
    theta: float = DEFAULT_CAP_ANGLE,
    quad_order: int = 64,
) -> float:
    """Spherical-cap average of the profile at sphere radius r.

    Averages u over the cap of half-angle theta around the axis, i.e.
    (1/r^(n-1)) times the surface integral, for a function radial about
    a center sitting at profile.center_offset along the axis.  Uses
    Gauss-Legendre quadrature in the polar angle and cubic interpolation
    of the samples.
    """
    if not 0 < theta < math.pi / 2:
        raise ValueError("theta must lie in (0, pi/2)")
    n = profile.n
    nodes, weights = np.polynomial.legendre.leggauss(quad_order)
    phi = 0.5 * theta * (nodes + 1.0)
    w = 0.5 * theta * weights
    a = profile.center_offset
    dist = np.sqrt(np.maximum(r * r + a * a - 2.0 * r * a * np.cos(phi), 0.0))
    vals = _cubic_interp(dist, profile.r, profile.u)
    omega = sphere_area(n - 1)
    return float(omega * np.sum(vals * np.sin(phi) ** (n - 2) * w))


def weighted_cap_average(profile: RadialProfile, r: float, **kw) -> float:
    """r^((n-2)/2) times the cap average; invariant under rescale_blowup."""
    return r ** (0.5 * (profile.n - 2)) * cap_average(profile, r, **kw)


def sphere_area(d: int) -> float:
    """Surface measure of the unit sphere S^(d-1) in R^d."""
    return 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)
