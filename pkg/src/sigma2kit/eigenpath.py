"""Continuation solvers on radially symmetric model geometries.

Two one-parameter families are traced with damped Newton correctors on a
1-D Chebyshev grid:

* the regularized first-eigenvalue family
      sigma2^(1/2)(A_u) = (t + (1-t) f_bg) e^(eps u),   du/dn = -t h_g,
  whose t = 1 solutions converge, as eps -> 0, to the unique constant
  level sigma2(A_v) = e^lambda with vanishing boundary mean curvature;

* the existence homotopy
      sigma2^(1/2)(A_u + S_g(t)) = (1-t) (int e^(-(n+1)u) dmu)^(2/(n+1))
                                   + zeta(t) f e^(-2u),
      du/dn = zeta(t) (c e^(-u) - h_g),
  with S_g(t) = (1 - zeta(t)) (lambda_n V^(2/(n+1)) g - A_g), which at
  t = 1 is the prescribed-curvature problem.

The Newton unknowns are the Chebyshev coefficients of u'' together with
two integration constants (u', u values come from spectral integration,
never from differentiation matrices).  Differentiating point values
amplifies roundoff by about N^4 near the grid corners, which puts an
irreducible 1e-8-level floor under collocation residuals at 201 nodes;
the integrated representation keeps every applied operator bounded and
lets residuals reach the 1e-12 range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .conformal import sphere_area
from .symfunc import dimension_constant, sigma_pair

DEFAULT_NODES = 201
STEP_UNDERFLOW = 1e-6


class InadmissibleStateError(ValueError):
    """Raised when a residual is requested at a state outside the cone."""


class ContinuationError(RuntimeError):
    pass


# -- model geometries --------------------------------------------------------


@dataclass(frozen=True)
class ModelGeometry:
    """Radially symmetric background with analytic curvature data.

    The 1-D coordinate runs over [x0, x1]; a spherical cap uses the
    arclength from the pole (x0 = 0 is a coordinate pole, not a boundary),
    an annulus the Euclidean radius with boundary spheres at both ends.
    a_radial / a_tangential are the constant background Schouten
    eigenvalues, h_* the boundary mean curvatures for the inward normal.
    """

    kind: str
    n: int
    x0: float
    x1: float
    a_radial: float
    a_tangential: float
    volume: float
    h_left: float | None
    h_right: float
    radius: float = 1.0  # sphere radius for caps; unused for annuli

    @property
    def has_pole(self) -> bool:
        return self.kind == "spherical_cap"

    def tangential_coeff(self, x):
        """Coefficient of u' in the tangential Hessian eigenvalue."""
        x = np.asarray(x, dtype=float)
        if self.kind == "spherical_cap":
            return np.cos(x / self.radius) / (self.radius * np.sin(x / self.radius))
        return 1.0 / x

    def measure_density(self, x):
        """Weight of dmu against dx, including the round factor."""
        x = np.asarray(x, dtype=float)
        omega = sphere_area(self.n)
        if self.kind == "spherical_cap":
            return omega * self.radius ** (self.n - 1) * np.sin(x / self.radius) ** (
                self.n - 1
            )
        return omega * x ** (self.n - 1)

    def background_sigma2_half(self) -> float:
        _, s2 = sigma_pair(self.a_radial, self.a_tangential, self.n)
        return math.sqrt(s2) if s2 > 0 else 0.0

    def lambda_n(self) -> float:
        return 1.0 / dimension_constant(self.n)

    def s_coefficient(self) -> tuple:
        """Eigenvalues of lambda_n V^(2/(n+1)) g - A_g (radial, tangential)."""
        lead = self.lambda_n() * self.volume ** (2.0 / (self.n + 1))
        return lead - self.a_radial, lead - self.a_tangential

    def positivity_holds(self) -> bool:
        sr, st = self.s_coefficient()
        return sr > 0 and st > 0


def _sin_power_integral(k: int, theta: float) -> float:
    """int_0^theta sin^k, by the standard reduction (exact recursion)."""
    if k == 0:
        return theta
    if k == 1:
        return 1.0 - math.cos(theta)
    return ((k - 1) * _sin_power_integral(k - 2, theta)
            - math.sin(theta) ** (k - 1) * math.cos(theta)) / k


def spherical_cap(n: int, cap_angle: float, radius: float = 1.0) -> ModelGeometry:
    """Geodesic cap of the round n-sphere of the given radius.

    Background Schouten is 1/(2 radius^2) times the metric; the boundary
    mean curvature for the inward normal is cot(cap_angle)/radius, zero
    at the hemisphere.
    """
    if not 0.0 < cap_angle < math.pi:
        raise ValueError("cap_angle must lie in (0, pi)")
    if radius <= 0:
        raise ValueError("radius must be positive")
    vol = sphere_area(n) * radius**n * _sin_power_integral(n - 1, cap_angle)
    h = math.cos(cap_angle) / (radius * math.sin(cap_angle))
    if abs(h) < 1e-14:
        h = 0.0
    a = 1.0 / (2.0 * radius * radius)
    return ModelGeometry(
        kind="spherical_cap",
        n=n,
        x0=0.0,
        x1=radius * cap_angle,
        a_radial=a,
        a_tangential=a,
        volume=vol,
        h_left=None,
        h_right=h,
        radius=radius,
    )


def annulus_geometry(n: int, r_inner: float, r_outer: float) -> ModelGeometry:
    """Flat annulus; Schouten vanishes, inner/outer h are -1/r_in, +1/r_out."""
    if not 0 < r_inner < r_outer:
        raise ValueError("need 0 < r_inner < r_outer")
    vol = sphere_area(n) * (r_outer**n - r_inner**n) / n
    return ModelGeometry(
        kind="annulus",
        n=n,
        x0=r_inner,
        x1=r_outer,
        a_radial=0.0,
        a_tangential=0.0,
        volume=vol,
        h_left=-1.0 / r_inner,
        h_right=1.0 / r_outer,
    )


def scale_to_positive(geom: ModelGeometry) -> tuple:
    """Rescale the metric by the smallest power of two restoring positivity.

    Returns (geometry, B).  Metric scaling g -> B g multiplies the cap
    radius by sqrt(B) and keeps the cap angle; it never triggers for
    geometries that already satisfy the positivity condition.
    """
    if geom.positivity_holds():
        return geom, 1.0
    if geom.kind != "spherical_cap":
        raise ContinuationError("positivity rescue is implemented for caps only")
    b = 2.0
    angle = geom.x1 / geom.radius
    while b < 2.0**60:
        cand = spherical_cap(geom.n, angle, radius=geom.radius * math.sqrt(b))
        if cand.positivity_holds():
            return cand, b
        b *= 2.0
    raise ContinuationError("could not restore the positivity condition")


# -- Chebyshev machinery -----------------------------------------------------


def _cheb_matrix(m: int):
    """Chebyshev points (descending on [-1,1]) with first and second
    differentiation matrices (barycentric, negative-sum diagonals).

    The matrices serve the value-based public residual; the solvers use
    the integrated basis below.
    """
    if m < 2:
        raise ValueError("need at least 3 nodes")
    x = np.cos(np.pi * np.arange(m + 1) / m)
    w = np.ones(m + 1)
    w[0] = w[m] = 0.5
    w *= (-1.0) ** np.arange(m + 1)
    dx = x[:, None] - x[None, :] + np.eye(m + 1)
    d = (w[None, :] / w[:, None]) / dx
    np.fill_diagonal(d, 0.0)
    np.fill_diagonal(d, -d.sum(axis=1))
    d2 = 2.0 * d * (np.diag(d)[:, None] - 1.0 / dx)
    np.fill_diagonal(d2, 0.0)
    np.fill_diagonal(d2, -d2.sum(axis=1))
    return x, d, d2


def _clencurt(m: int) -> np.ndarray:
    """Clenshaw-Curtis weights on [-1, 1] for the _cheb_matrix nodes."""
    theta = np.pi * np.arange(m + 1) / m
    w = np.zeros(m + 1)
    ii = np.arange(1, m)
    v = np.ones(m - 1)
    if m % 2 == 0:
        w[0] = w[m] = 1.0 / (m * m - 1)
        for k in range(1, m // 2):
            v -= 2.0 * np.cos(2.0 * k * theta[ii]) / (4.0 * k * k - 1)
        v -= np.cos(m * theta[ii]) / (m * m - 1)
    else:
        w[0] = w[m] = 1.0 / (m * m)
        for k in range(1, (m - 1) // 2 + 1):
            v -= 2.0 * np.cos(2.0 * k * theta[ii]) / (4.0 * k * k - 1)
    w[ii] = 2.0 * v / m
    return w


def _integration_coeff_matrix(p: int) -> np.ndarray:
    """Coefficient-space antiderivative on [-1, 1], anchored at xi = -1.

    Maps Chebyshev coefficients a_0..a_(p-1) to the p+1 coefficients of
    the antiderivative that vanishes at xi = -1.
    """
    out = np.zeros((p + 1, p))
    for k in range(1, p + 1):
        if k == 1:
            out[1, 0] = 1.0
            if p > 2:
                out[1, 2] = -0.5
        else:
            if k - 1 < p:
                out[k, k - 1] += 1.0 / (2.0 * k)
            if k + 1 < p:
                out[k, k + 1] -= 1.0 / (2.0 * k)
    signs = (-1.0) ** np.arange(p + 1)
    out[0, :] = -signs[1:] @ out[1:, :]
    return out


@dataclass
class Discretization:
    """Chebyshev grid bound to one geometry, with the integrated basis.

    States for the solvers are vectors z = (what, c1, c0) where what are
    the Chebyshev coefficients of u'' (degree <= nodes-3) and
    u'  = (int u'') + c1,   u = (int int u'') + c1 (x - x0) + c0.
    The precomputed matrices evaluate w = u'', u' and u at the nodes.
    """

    geom: ModelGeometry
    nodes: int
    x: np.ndarray = field(repr=False, default=None)
    D: np.ndarray = field(repr=False, default=None)
    D2: np.ndarray = field(repr=False, default=None)
    w_mu: np.ndarray = field(repr=False, default=None)
    tcoef: np.ndarray = field(repr=False, default=None)
    W: np.ndarray = field(repr=False, default=None)
    U1: np.ndarray = field(repr=False, default=None)
    U2: np.ndarray = field(repr=False, default=None)
    half: float = 0.0

    def __post_init__(self) -> None:
        m = self.nodes - 1
        xi, d, d2 = _cheb_matrix(m)
        half = 0.5 * (self.geom.x1 - self.geom.x0)
        self.half = half
        # ascending grid
        self.x = (self.geom.x0 + half * (1.0 + xi))[::-1].copy()
        self.D = (d / half)[::-1, ::-1].copy()
        self.D2 = (d2 / (half * half))[::-1, ::-1].copy()
        self.w_mu = (half * _clencurt(m))[::-1] * self.geom.measure_density(self.x)
        t = np.empty_like(self.x)
        if self.geom.has_pole:
            t[1:] = self.geom.tangential_coeff(self.x[1:])
            t[0] = 0.0  # pole handled by the limit in eigenvalue assembly
        else:
            t[:] = self.geom.tangential_coeff(self.x)
        self.tcoef = t
        # synthesis at the ascending nodes: T_k(xi(x_i)) = cos(k (m-i) pi / m)
        j = (m - np.arange(m + 1))[:, None]
        k = np.arange(m + 1)[None, :]
        synth = np.cos(np.pi * j * k / m)
        p = self.nodes - 2
        j1 = _integration_coeff_matrix(p)          # (p+1, p)
        j2 = _integration_coeff_matrix(p + 1)      # (p+2, p+1)
        self.W = synth[:, :p].copy()
        self.U1 = half * (synth[:, : p + 1] @ j1)
        self.U2 = half * half * (synth @ (j2 @ j1))

    @property
    def n_coeff(self) -> int:
        return self.nodes - 2

    @property
    def interior(self) -> np.ndarray:
        return np.arange(1, self.nodes - 1)

    def boundary_rows(self):
        """(index, sign) pairs with du/dn = sign * u' at each true boundary."""
        rows = [(self.nodes - 1, -1.0)]
        if not self.geom.has_pole:
            rows.append((0, 1.0))
        return rows

    # -- state handling -------------------------------------------------

    def zero_state(self) -> np.ndarray:
        return np.zeros(self.nodes)

    def split(self, z: np.ndarray):
        return z[: self.n_coeff], float(z[-2]), float(z[-1])

    def fields(self, z: np.ndarray):
        """(w, u', u) node values of the integrated state."""
        what, c1, c0 = self.split(z)
        w = self.W @ what
        up = self.U1 @ what + c1
        u = self.U2 @ what + c1 * (self.x - self.geom.x0) + c0
        return w, up, u

    def state_from_function(self, fn_u, fn_upp) -> np.ndarray:
        """Interpolate an analytic field into the integrated representation."""
        m = self.nodes - 1
        w_desc = fn_upp(self.x)[::-1]
        from scipy.fft import dct

        a = dct(w_desc, type=1) / m
        a[0] *= 0.5
        a[m] *= 0.5
        z = self.zero_state()
        z[: self.n_coeff] = a[: self.n_coeff]
        resid_up = self.D @ fn_u(self.x) - (self.U1 @ z[: self.n_coeff])
        z[-2] = float(np.mean(resid_up))
        z[-1] = float(fn_u(self.x)[0] - (self.U2 @ z[: self.n_coeff])[0]
                      - z[-2] * (self.x[0] - self.geom.x0))
        return z

    def schouten_eigs_from_fields(self, w, up, s_r=0.0, s_t=0.0):
        lr = w + 0.5 * up * up + self.geom.a_radial + s_r
        lt = self.tcoef * up - 0.5 * up * up + self.geom.a_tangential + s_t
        if self.geom.has_pole:
            # tangential limit at the pole: u' cot -> u''
            lt[0] = w[0] + self.geom.a_tangential + s_t
        return lr, lt

    def schouten_values(self, u, s_r=0.0, s_t=0.0):
        """Value-based eigenvalues for the public residual; see fields()
        for the solver-side path."""
        uc = u - float(np.mean(u))
        up = self.D @ uc
        upp = self.D2 @ uc
        lr = upp + 0.5 * up * up + self.geom.a_radial + s_r
        lt = self.tcoef * up - 0.5 * up * up + self.geom.a_tangential + s_t
        if self.geom.has_pole:
            lt[0] = upp[0] + self.geom.a_tangential + s_t
        return lr, lt, up, upp

    def cone_margin_fields(self, w, up, s_r=0.0, s_t=0.0) -> float:
        lr, lt = self.schouten_eigs_from_fields(w, up, s_r, s_t)
        s1, s2 = sigma_pair(lr, lt, self.geom.n)
        return float(min(np.min(s1), np.min(s2)))

    def mean(self, u) -> float:
        return float(self.w_mu @ u / self.geom.volume)


def zeta_ramp(t: float) -> float:
    """Smoothstep ramp: 0 at t=0, identically 1 on [1/2, 1]."""
    s = min(max(2.0 * t, 0.0), 1.0)
    return s * s * (3.0 - 2.0 * s)


def _as_fn(f):
    if callable(f):
        return f
    val = float(f)
    return lambda x: val + 0.0 * np.asarray(x, dtype=float)


def _scalar_at(fn, x):
    v = fn(np.asarray([x]))
    return np.asarray(v, dtype=float).reshape(-1)[0]


def path_s_eigs(geom: ModelGeometry, t: float) -> tuple:
    z = zeta_ramp(t)
    sr, st = geom.s_coefficient()
    return (1.0 - z) * sr, (1.0 - z) * st


# -- residual systems ----------------------------------------------------------


class PathSystem:
    """Homotopy equations in the integrated representation."""

    def __init__(self, disc: Discretization, f, c, f0: float = 0.0):
        self.disc = disc
        self.f_fn = _as_fn(f)
        self.c_fn = _as_fn(c)
        self.f0 = f0
        self.fx = self.f_fn(disc.x)
        self.c_at = {idx: _scalar_at(self.c_fn, disc.x[idx])
                     for idx, _ in disc.boundary_rows()}

    def residual(self, z: np.ndarray, t: float):
        disc = self.disc
        geom = disc.geom
        n = geom.n
        s_r, s_t = path_s_eigs(geom, t)
        w, up, u = disc.fields(z)
        lr, lt = disc.schouten_eigs_from_fields(w, up, s_r, s_t)
        s1, s2 = sigma_pair(lr, lt, n)
        ok = bool(np.min(s1) > 0 and np.min(s2) > 0)
        zeta = zeta_ramp(t)
        res = np.empty(disc.nodes)
        if ok:
            q = float(disc.w_mu @ np.exp(-(n + 1) * u))
            vol_term = (1.0 - t) * q ** (2.0 / (n + 1))
            res[:] = (np.sqrt(np.maximum(s2, 0.0)) - vol_term
                      - zeta * self.fx * np.exp(-2.0 * u) - self.f0)
        if geom.has_pole:
            res[0] = up[0]
        for idx, sign in disc.boundary_rows():
            h = geom.h_right if idx == disc.nodes - 1 else geom.h_left
            res[idx] = sign * up[idx] - zeta * (
                self.c_at[idx] * math.exp(-u[idx]) - h
            )
        return res, ok

    def jacobian(self, z: np.ndarray, t: float):
        disc = self.disc
        geom = disc.geom
        n = geom.n
        s_r, s_t = path_s_eigs(geom, t)
        w, up, u = disc.fields(z)
        lr, lt = disc.schouten_eigs_from_fields(w, up, s_r, s_t)
        _, s2 = sigma_pair(lr, lt, n)
        zeta = zeta_ramp(t)
        sqrt_s2 = np.sqrt(np.maximum(s2, 1e-300))
        ds_dlr = (n - 1) * lt / (2.0 * sqrt_s2)
        ds_dlt = ((n - 1) * lr + (n - 1) * (n - 2) * lt) / (2.0 * sqrt_s2)
        jac = np.empty((disc.nodes, disc.nodes))
        dlr_w = disc.W + up[:, None] * disc.U1
        dlt_w = (disc.tcoef - up)[:, None] * disc.U1
        if geom.has_pole:
            dlt_w[0, :] = disc.W[0, :]
        jac[:, : disc.n_coeff] = (ds_dlr[:, None] * dlr_w
                                  + ds_dlt[:, None] * dlt_w)
        dlr_c1 = up
        dlt_c1 = disc.tcoef - up
        if geom.has_pole:
            dlt_c1 = dlt_c1.copy()
            dlt_c1[0] = 0.0
        jac[:, -2] = ds_dlr * dlr_c1 + ds_dlt * dlt_c1
        jac[:, -1] = 0.0
        # u-dependent right-hand side: volume functional and e^(-2u) term
        du_w = disc.U2
        du_c1 = disc.x - geom.x0
        q = float(disc.w_mu @ np.exp(-(n + 1) * u))
        dq_du = -(n + 1) * disc.w_mu * np.exp(-(n + 1) * u)
        pref = (1.0 - t) * (2.0 / (n + 1)) * q ** (2.0 / (n + 1) - 1.0)
        row_u = pref * dq_du  # d(vol_term)/du_k
        jac[:, : disc.n_coeff] -= np.outer(np.ones(disc.nodes), row_u @ du_w)
        jac[:, -2] -= float(row_u @ du_c1)
        jac[:, -1] -= float(np.sum(row_u))
        diag = 2.0 * zeta * self.fx * np.exp(-2.0 * u)
        jac[:, : disc.n_coeff] += diag[:, None] * du_w
        jac[:, -2] += diag * du_c1
        jac[:, -1] += diag
        if geom.has_pole:
            jac[0, : disc.n_coeff] = disc.U1[0, :]
            jac[0, -2] = 1.0
            jac[0, -1] = 0.0
        for idx, sign in disc.boundary_rows():
            h = geom.h_right if idx == disc.nodes - 1 else geom.h_left
            cv = self.c_at[idx]
            bc_u = zeta * cv * math.exp(-u[idx])
            jac[idx, : disc.n_coeff] = (sign * disc.U1[idx, :]
                                        + bc_u * disc.U2[idx, :])
            jac[idx, -2] = sign + bc_u * (disc.x[idx] - geom.x0)
            jac[idx, -1] = bc_u
        return jac


class EigenSystem:
    """Regularized eigen family in the integrated representation."""

    def __init__(self, disc: Discretization, eps: float):
        self.disc = disc
        self.eps = eps
        self.fbg = disc.geom.background_sigma2_half()

    def residual(self, z: np.ndarray, t: float):
        disc = self.disc
        geom = disc.geom
        w, up, u = disc.fields(z)
        lr, lt = disc.schouten_eigs_from_fields(w, up)
        s1, s2 = sigma_pair(lr, lt, geom.n)
        ok = bool(np.min(s1) > 0 and np.min(s2) > 0)
        res = np.empty(disc.nodes)
        if ok:
            res[:] = np.sqrt(np.maximum(s2, 0.0)) - (
                t + (1.0 - t) * self.fbg
            ) * np.exp(self.eps * u)
        if geom.has_pole:
            res[0] = up[0]
        for idx, sign in disc.boundary_rows():
            h = geom.h_right if idx == disc.nodes - 1 else geom.h_left
            res[idx] = sign * up[idx] + t * h
        return res, ok

    def jacobian(self, z: np.ndarray, t: float):
        disc = self.disc
        geom = disc.geom
        n = geom.n
        w, up, u = disc.fields(z)
        lr, lt = disc.schouten_eigs_from_fields(w, up)
        _, s2 = sigma_pair(lr, lt, n)
        sqrt_s2 = np.sqrt(np.maximum(s2, 1e-300))
        ds_dlr = (n - 1) * lt / (2.0 * sqrt_s2)
        ds_dlt = ((n - 1) * lr + (n - 1) * (n - 2) * lt) / (2.0 * sqrt_s2)
        jac = np.empty((disc.nodes, disc.nodes))
        dlr_w = disc.W + up[:, None] * disc.U1
        dlt_w = (disc.tcoef - up)[:, None] * disc.U1
        if geom.has_pole:
            dlt_w[0, :] = disc.W[0, :]
        jac[:, : disc.n_coeff] = (ds_dlr[:, None] * dlr_w
                                  + ds_dlt[:, None] * dlt_w)
        dlt_c1 = disc.tcoef - up
        if geom.has_pole:
            dlt_c1 = dlt_c1.copy()
            dlt_c1[0] = 0.0
        jac[:, -2] = ds_dlr * up + ds_dlt * dlt_c1
        jac[:, -1] = 0.0
        rhs_u = self.eps * (t + (1.0 - t) * self.fbg) * np.exp(self.eps * u)
        jac[:, : disc.n_coeff] -= rhs_u[:, None] * disc.U2
        jac[:, -2] -= rhs_u * (disc.x - geom.x0)
        jac[:, -1] -= rhs_u
        if geom.has_pole:
            jac[0, : disc.n_coeff] = disc.U1[0, :]
            jac[0, -2] = 1.0
            jac[0, -1] = 0.0
        for idx, sign in disc.boundary_rows():
            jac[idx, : disc.n_coeff] = sign * disc.U1[idx, :]
            jac[idx, -2] = sign
            jac[idx, -1] = 0.0
        return jac


# -- public value-based residual ------------------------------------------------


def path_residual(geom, u, t, f, c, f0=0.0, disc: Discretization | None = None):
    """Residual vector of the homotopy family at parameter t, from node values.

    Interior rows carry the curvature equation, the last (and for annuli
    also the first) row the Neumann condition, and the pole row of a cap
    the regularity condition u'(pole) = 0.  Raises InadmissibleStateError
    instead of evaluating outside the cone.  Evaluating from point values
    costs differentiation roundoff near the corners; solver-side residuals
    use the integrated representation instead.
    """
    u = np.asarray(u, dtype=float)
    if disc is None:
        disc = Discretization(geom, u.size)
    f_fn, c_fn = _as_fn(f), _as_fn(c)
    n = geom.n
    s_r, s_t = path_s_eigs(geom, t)
    lr, lt, up, _ = disc.schouten_values(u, s_r, s_t)
    s1, s2 = sigma_pair(lr, lt, n)
    if not (np.min(s1) > 0 and np.min(s2) > 0):
        raise InadmissibleStateError("state left the admissible cone")
    zeta = zeta_ramp(t)
    q = float(disc.w_mu @ np.exp(-(n + 1) * u))
    res = (np.sqrt(np.maximum(s2, 0.0))
           - (1.0 - t) * q ** (2.0 / (n + 1))
           - zeta * f_fn(disc.x) * np.exp(-2.0 * u) - f0)
    if geom.has_pole:
        res[0] = up[0]
    for idx, sign in disc.boundary_rows():
        h = geom.h_right if idx == disc.nodes - 1 else geom.h_left
        cv = _scalar_at(c_fn, disc.x[idx])
        res[idx] = sign * up[idx] - zeta * (cv * math.exp(-u[idx]) - h)
    return res


# -- damped Newton corrector ---------------------------------------------------


def _solve_linear(jac, rhs):
    try:
        step = np.linalg.solve(jac, rhs)
        if np.all(np.isfinite(step)):
            return step
    except np.linalg.LinAlgError:
        pass
    step, *_ = np.linalg.lstsq(jac, rhs, rcond=None)
    return step


def _newton(system, t, z0, tol, max_iter=60):
    """Damped Newton with an Armijo backtracking line search.

    Steps are shrunk until the trial state is admissible (cone condition
    at every node) and the sup-norm of the residual decreases.
    """
    z = np.asarray(z0, dtype=float).copy()
    r, ok = system.residual(z, t)
    if not ok:
        return z, math.inf, False
    nr = float(np.max(np.abs(r)))
    for _ in range(max_iter):
        if nr < tol:
            return z, nr, True
        jac = system.jacobian(z, t)
        step = _solve_linear(jac, -r)
        alpha = 1.0
        accepted = False
        while alpha >= 1e-12:
            z_try = z + alpha * step
            r_try, ok = system.residual(z_try, t)
            if ok:
                nr_try = float(np.max(np.abs(r_try)))
                if nr_try <= (1.0 - 1e-4 * alpha) * nr or nr_try < tol:
                    z, r, nr = z_try, r_try, nr_try
                    accepted = True
                    break
            alpha *= 0.5
        if not accepted:
            return z, nr, False
    return z, nr, nr < tol


def _continuation(system, record, z0, tol, steps, t_start=0.0, t_end=1.0):
    """March in t with step adaptation and a secant predictor."""
    z = np.asarray(z0, dtype=float).copy()
    z, nr, ok = _newton(system, t_start, z, tol)
    if not ok:
        raise ContinuationError("anchor solve failed at the starting parameter")
    record(t_start, z, nr)
    history = [(t_start, z.copy())]
    dt = (t_end - t_start) / max(steps, 1)
    dt_max = dt
    t = t_start
    while t < t_end - 1e-14:
        dt = min(dt, t_end - t)
        if dt < STEP_UNDERFLOW:
            return z, t, False
        t_try = t + dt
        if t_end - t_try < 1e-12:
            t_try = t_end
        if len(history) >= 2 and history[-1][0] > history[-2][0]:
            t_prev, z_prev = history[-2]
            slope = (history[-1][1] - z_prev) / (history[-1][0] - t_prev)
            z_pred = history[-1][1] + slope * (t_try - t)
        else:
            z_pred = z
        z_new, nr, ok = _newton(system, t_try, z_pred, tol)
        if not ok:
            z_new, nr, ok = _newton(system, t_try, z, tol)
        if ok:
            t = t_try
            z = z_new
            record(t, z, nr)
            history.append((t, z.copy()))
            if len(history) > 3:
                history.pop(0)
            dt = min(2.0 * dt, dt_max)
        else:
            dt *= 0.5
    return z, t, True


# -- public solvers ------------------------------------------------------------


@dataclass
class PathState:
    t: float
    zeta: float
    s_eigs: tuple
    u: np.ndarray
    residual_norm: float
    cone_margin: float

    def to_trace(self, samples: int = 9) -> dict:
        idx = np.linspace(0, self.u.size - 1, samples).round().astype(int)
        return {
            "t": self.t,
            "zeta": self.zeta,
            "residual": self.residual_norm,
            "min_cone_margin": self.cone_margin,
            "u_samples": [float(v) for v in self.u[idx]],
        }


@dataclass
class HomotopyResult:
    states: list
    success: bool
    t_final: float
    message: str
    geometry: ModelGeometry
    rescale_factor: float = 1.0

    @property
    def u_final(self) -> np.ndarray:
        return self.states[-1].u


def trace_homotopy(
    geom: ModelGeometry,
    f,
    c,
    steps: int = 20,
    nodes: int = DEFAULT_NODES,
    tol: float = 1e-9,
    f0: float = 0.0,
    auto_rescale: bool = True,
) -> HomotopyResult:
    """March the existence homotopy from the exactly solvable t = 0 anchor.

    Every accepted state satisfies the residual tolerance and the cone
    condition; step-size underflow aborts with the reachable t.  If the
    positivity condition on lambda_n V^(2/(n+1)) g - A_g fails, the
    background is pre-scaled by the smallest adequate power of two.
    """
    rescale = 1.0
    if not geom.positivity_holds():
        if not auto_rescale:
            raise ContinuationError("background violates the positivity condition")
        geom, rescale = scale_to_positive(geom)
    disc = Discretization(geom, nodes)
    system = PathSystem(disc, f, c, f0)
    states: list[PathState] = []

    def record(t, z, nr):
        s_eigs = path_s_eigs(geom, t)
        w, up, u = disc.fields(z)
        states.append(
            PathState(
                t=t,
                zeta=zeta_ramp(t),
                s_eigs=s_eigs,
                u=u.copy(),
                residual_norm=nr,
                cone_margin=disc.cone_margin_fields(w, up, *s_eigs),
            )
        )

    _, t_final, success = _continuation(system, record, disc.zero_state(), tol, steps)
    message = "reached t = 1" if success else f"step underflow at t = {t_final:.6f}"
    return HomotopyResult(
        states=states,
        success=success,
        t_final=t_final,
        message=message,
        geometry=geom,
        rescale_factor=rescale,
    )


@dataclass
class EpsilonEigenResult:
    u: np.ndarray
    eps: float
    converged: bool
    residual_norm: float
    t_final: float
    mean_u: float
    sandwich: tuple  # (low, eps*u min, eps*u max, high)
    sandwich_ok: bool
    geometry: ModelGeometry
    state: np.ndarray = None


def solve_epsilon_eigen(
    geom: ModelGeometry,
    eps: float,
    nodes: int = DEFAULT_NODES,
    tol: float = 1e-10,
    steps: int = 8,
) -> EpsilonEigenResult:
    """Solve the eps-regularized eigen family up to its t = 1 member.

    The boundary condition ramps du/dn from 0 to -h_g, so the final
    metric has vanishing boundary mean curvature even on caps with
    h_g != 0.  The amplitude bound on eps*u (curvature sandwich) is
    verified on the result.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if geom.background_sigma2_half() <= 0:
        raise InadmissibleStateError("background is not admissible")
    disc = Discretization(geom, nodes)
    system = EigenSystem(disc, eps)
    final = {}

    def record(t, z, nr):
        final["t"], final["z"], final["nr"] = t, z.copy(), nr

    _, t_final, success = _continuation(system, record, disc.zero_state(), tol, steps)
    _, _, u = disc.fields(final["z"])
    fbg = geom.background_sigma2_half()
    low = math.log(fbg / (1.0 + fbg))
    high = abs(math.log(fbg * fbg))
    eu_min, eu_max = float(eps * np.min(u)), float(eps * np.max(u))
    slack = 1e-8
    # The amplitude sandwich comes from interior max/min principle
    # arguments: the lower bound survives the boundary-flattening ramp,
    # the upper bound needs h_g = 0 (otherwise the max may sit on the
    # boundary and is not controlled).
    sandwich_ok = eu_min >= low - slack
    if geom.h_right == 0.0 and (geom.h_left in (None, 0.0)):
        sandwich_ok = sandwich_ok and (eu_max <= high + slack)
    return EpsilonEigenResult(
        u=u,
        eps=eps,
        converged=success,
        residual_norm=final["nr"],
        t_final=t_final,
        mean_u=disc.mean(u),
        sandwich=(low, eu_min, eu_max, high),
        sandwich_ok=sandwich_ok,
        geometry=geom,
        state=final["z"],
    )


@dataclass
class EigenExtractResult:
    lam: float
    v: np.ndarray
    residual: float
    lam_sequence: list
    eps_sequence: list
    cauchy_ok: bool
    geometry: ModelGeometry

    @property
    def level(self) -> float:
        """The eigenvalue constant e^lambda."""
        return math.exp(self.lam)


class _LimitSystem:
    """Bordered limit problem: sigma2(A_v) = Lambda, flat boundary data,
    mean(v) = 0.  Unknowns: integrated state plus Lambda; the mean
    constraint deflates the constant-shift null direction.
    """

    def __init__(self, disc: Discretization):
        self.disc = disc

    def residual(self, y: np.ndarray):
        disc = self.disc
        geom = disc.geom
        z, lam_level = y[:-1], float(y[-1])
        w, up, u = disc.fields(z)
        lr, lt = disc.schouten_eigs_from_fields(w, up)
        s1, s2 = sigma_pair(lr, lt, geom.n)
        ok = bool(np.min(s1) > 0 and np.min(s2) > 0)
        res = np.empty(disc.nodes + 1)
        res[: disc.nodes] = s2 - lam_level
        if geom.has_pole:
            res[0] = up[0]
        for idx, sign in disc.boundary_rows():
            h = geom.h_right if idx == disc.nodes - 1 else geom.h_left
            res[idx] = sign * up[idx] + h
        res[-1] = disc.mean(u)
        return res, ok

    def jacobian(self, y: np.ndarray):
        disc = self.disc
        geom = disc.geom
        n = geom.n
        z = y[:-1]
        w, up, u = disc.fields(z)
        lr, lt = disc.schouten_eigs_from_fields(w, up)
        ds_dlr = (n - 1) * lt
        ds_dlt = (n - 1) * lr + (n - 1) * (n - 2) * lt
        jac = np.zeros((disc.nodes + 1, disc.nodes + 1))
        dlr_w = disc.W + up[:, None] * disc.U1
        dlt_w = (disc.tcoef - up)[:, None] * disc.U1
        if geom.has_pole:
            dlt_w[0, :] = disc.W[0, :]
        jac[: disc.nodes, : disc.n_coeff] = (
            ds_dlr[:, None] * dlr_w + ds_dlt[:, None] * dlt_w
        )
        dlt_c1 = disc.tcoef - up
        if geom.has_pole:
            dlt_c1 = dlt_c1.copy()
            dlt_c1[0] = 0.0
        jac[: disc.nodes, -3] = ds_dlr * up + ds_dlt * dlt_c1
        jac[: disc.nodes, -2] = 0.0
        jac[: disc.nodes, -1] = -1.0
        if geom.has_pole:
            jac[0, :] = 0.0
            jac[0, : disc.n_coeff] = disc.U1[0, :]
            jac[0, -3] = 1.0
        for idx, sign in disc.boundary_rows():
            jac[idx, :] = 0.0
            jac[idx, : disc.n_coeff] = sign * disc.U1[idx, :]
            jac[idx, -3] = sign
        vol = disc.geom.volume
        jac[-1, : disc.n_coeff] = (disc.w_mu @ disc.U2) / vol
        jac[-1, -3] = float(disc.w_mu @ (disc.x - geom.x0)) / vol
        jac[-1, -2] = 1.0
        jac[-1, -1] = 0.0
        return jac


def _polish_limit(disc: Discretization, z0: np.ndarray, level0: float,
                  tol: float = 1e-12, max_iter: int = 40):
    system = _LimitSystem(disc)
    y = np.concatenate([z0, [level0]])
    r, ok = system.residual(y)
    if not ok:
        return None
    nr = float(np.max(np.abs(r)))
    for _ in range(max_iter):
        if nr < tol:
            return y
        step = _solve_linear(system.jacobian(y), -r)
        alpha = 1.0
        accepted = False
        while alpha >= 1e-12:
            y_try = y + alpha * step
            r_try, ok = system.residual(y_try)
            if ok:
                nr_try = float(np.max(np.abs(r_try)))
                if nr_try <= (1.0 - 1e-4 * alpha) * nr or nr_try < tol:
                    y, r, nr = y_try, r_try, nr_try
                    accepted = True
                    break
            alpha *= 0.5
        if not accepted:
            return y if nr < 1e-8 else None
    return y if nr < 1e-8 else None


def extract_eigenvalue(
    geom: ModelGeometry,
    eps_sequence,
    nodes: int = DEFAULT_NODES,
    tol: float = 1e-10,
    polish: bool = True,
) -> EigenExtractResult:
    """First boundary sigma2 eigenvalue by vanishing-regularization limit.

    Runs the eps-solve along the decreasing sequence, extrapolates
    lambda = lim 2 eps mean(u) to eps = 0 (polynomial extrapolation,
    exact for constant backgrounds), and returns the mean-normalized
    eigenfunction v = u - mean(u) solving sigma2(A_v) = e^lambda with
    vanishing boundary mean curvature.  The extrapolated pair seeds a
    mean-deflated bordered Newton polish of the limit equation itself,
    which removes the O(eps) bias of the last regularized solve from the
    reported residual.
    """
    eps_list = [float(e) for e in eps_sequence]
    if len(eps_list) < 1 or any(e <= 0 for e in eps_list):
        raise ValueError("eps_sequence must contain positive values")
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("eps_sequence must be strictly decreasing")
    disc = Discretization(geom, nodes)
    lam_seq = []
    last = None
    for e in eps_list:
        res = solve_epsilon_eigen(geom, e, nodes=nodes, tol=tol)
        if not res.converged:
            raise ContinuationError(f"eps-solve failed to converge at eps={e}")
        lam_seq.append(2.0 * e * res.mean_u)
        last = res

    diffs = [abs(b - a) for a, b in zip(lam_seq, lam_seq[1:])]
    cauchy_ok = all(
        d2 <= d1 + 1e-12 for d1, d2 in zip(diffs, diffs[1:])
    ) if len(diffs) >= 2 else True

    # Neville extrapolation of (eps_i, lam_i) to eps = 0
    tab = list(lam_seq)
    pts = eps_list
    for level in range(1, len(tab)):
        for i in range(len(tab) - level):
            tab[i] = (pts[i + level] * tab[i] - pts[i] * tab[i + 1]) / (
                pts[i + level] - pts[i]
            )
    lam = float(tab[0])

    # seed the limit polish with the mean-normalized last solve
    z_seed = last.state.copy()
    z_seed[-1] -= last.mean_u
    state = z_seed
    if polish:
        y = _polish_limit(disc, z_seed, math.exp(lam))
        if y is not None:
            state = y[:-1]
            lam = math.log(float(y[-1]))

    w, up, u = disc.fields(state)
    v = u - disc.mean(u)
    lr, lt = disc.schouten_eigs_from_fields(w, up)
    _, s2 = sigma_pair(lr, lt, geom.n)
    interior = np.abs(s2 - math.exp(lam))[disc.interior]
    bc = [abs(sign * up[idx] + (geom.h_right if idx == disc.nodes - 1 else geom.h_left))
          for idx, sign in disc.boundary_rows()]
    if geom.has_pole:
        bc.append(abs(up[0]))
    residual = float(max(np.max(interior), max(bc)))
    return EigenExtractResult(
        lam=lam,
        v=v,
        residual=residual,
        lam_sequence=lam_seq,
        eps_sequence=eps_list,
        cauchy_ok=cauchy_ok,
        geometry=geom,
    )


def random_admissible_state(disc: Discretization, rng, scale: float = 0.02):
    """A random integrated state kept inside the admissible cone.

    On pole geometries the slope constant stays zero: u'(pole) != 0
    sends the tangential eigenvalue to +-inf at the first node.
    """
    z = disc.zero_state()
    k = min(8, disc.n_coeff)
    z[:k] = scale * rng.standard_normal(k) / (1.0 + np.arange(k)) ** 2
    z[-2] = 0.0 if disc.geom.has_pole else scale * rng.standard_normal()
    z[-1] = scale * rng.standard_normal()
    return z


def jacobian_fd_error(system, z, t, seed=0, n_dirs=3, h=1e-7) -> float:
    """Relative error between the solver Jacobian and central differences.

    Probes random directions: compares J w against the symmetric
    difference of the residual, normalized by the magnitude of J w.
    """
    jac = system.jacobian(z, t)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_dirs):
        w = rng.standard_normal(z.size)
        w /= np.linalg.norm(w)
        rp, okp = system.residual(z + h * w, t)
        rm, okm = system.residual(z - h * w, t)
        if not (okp and okm):
            raise InadmissibleStateError("probe left the admissible cone")
        fd = (rp - rm) / (2.0 * h)
        jw = jac @ w
        denom = max(float(np.max(np.abs(jw))), 1.0)
        worst = max(worst, float(np.max(np.abs(jw - fd))) / denom)
    return worst
