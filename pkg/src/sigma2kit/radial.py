"""Radial reductions of the curvature equations.

A radial conformal factor turns the Schouten tensor into a two-eigenvalue
problem (one radial, one tangential with multiplicity n-1).  This module
holds the closed-form eigenvalues for both conformal conventions, the
degenerate solution families on annuli, the singular barrier family with
its chi1/chi2 coefficients, and an RK4 shooting solver for the normalized
sigma2 equation on annuli with nonlinear Neumann data at the inner sphere.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .symfunc import binom2, sigma_pair

CONVENTIONS = ("pow", "exp")


@dataclass
class RadialProfile:
    """Sampled radial function (r, u, u', u'') plus the conformal convention.

    convention 'pow' means the metric u^(4/(n-2)) g_E (u > 0 required);
    'exp' means e^(-2u) g_E.
    """

    convention: str
    n: int
    samples: np.ndarray  # shape (m, 4): columns r, u, du, ddu
    center_offset: float = 0.0  # axis offset of the radial center, for cap averages

    def __post_init__(self) -> None:
        if self.convention not in CONVENTIONS:
            raise ValueError(f"convention must be one of {CONVENTIONS}")
        self.samples = np.asarray(self.samples, dtype=float)
        if self.samples.ndim != 2 or self.samples.shape[1] != 4:
            raise ValueError("samples must have shape (m, 4)")
        r = self.samples[:, 0]
        if np.any(r <= 0) or np.any(np.diff(r) <= 0):
            raise ValueError("radii must be strictly increasing and positive")
        if self.convention == "pow" and np.any(self.samples[:, 1] <= 0):
            raise ValueError("pow convention requires u > 0")

    @property
    def r(self) -> np.ndarray:
        return self.samples[:, 0]

    @property
    def u(self) -> np.ndarray:
        return self.samples[:, 1]

    @property
    def du(self) -> np.ndarray:
        return self.samples[:, 2]

    @property
    def ddu(self) -> np.ndarray:
        return self.samples[:, 3]

    def schouten_eigs(self):
        """(lambda_radial, lambda_tangential) arrays along the sample grid."""
        return radial_schouten_eigs(
            (self.r, self.u, self.du, self.ddu), self.n, self.convention
        )

    def sigma_columns(self):
        """(sigma1, sigma2) of the Schouten spectrum along the grid."""
        lr, lt = self.schouten_eigs()
        return sigma_pair(lr, lt, self.n)

    def to_csv(self, path) -> None:
        """Write columns r, u, du, ddu, sigma1, sigma2."""
        s1, s2 = self.sigma_columns()
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["r", "u", "du", "ddu", "sigma1", "sigma2"])
            for i in range(self.samples.shape[0]):
                row = [self.r[i], self.u[i], self.du[i], self.ddu[i], s1[i], s2[i]]
                writer.writerow([format(v, ".17g") for v in row])


def radial_schouten_eigs(point, n: int, convention: str):
    """Schouten eigenvalues of a radial conformal factor over a flat background.

    point is (r, u, du, ddu); scalars or aligned arrays.  Returns
    (lambda_radial, lambda_tangential); the tangential value carries
    multiplicity n-1.
    """
    if convention not in CONVENTIONS:
        raise ValueError(f"convention must be one of {CONVENTIONS}")
    r, u, du, ddu = (np.asarray(v, dtype=float) for v in point)
    if np.any(r <= 0):
        raise ValueError("radius must be positive")
    if convention == "pow":
        if np.any(u <= 0):
            raise ValueError("pow convention requires u > 0")
        q = du / u
        m = 2.0 / (n - 2)
        lam_r = -m * ddu / u + (2.0 * n - 2.0) / (n - 2) ** 2 * q * q
        lam_t = -m * du / (r * u) - 2.0 / (n - 2) ** 2 * q * q
    else:
        lam_r = ddu + 0.5 * du * du
        lam_t = du / r - 0.5 * du * du
    return lam_r, lam_t


@dataclass
class DegenerateFamily:
    """One member of the classified radial null families of the sigma2 operator.

    case 'a' (only when the cone constant mu equals 1, i.e. n = 4):
        u(r) = C1 r^(-C2), C1 > 0, 0 <= C2 <= n-2.
    case 'b' (mu != 1):
        u(r) = (C3 r^(1-mu) + C4)^((n-2)/(mu-1)), C3, C4 >= 0, C3 + C4 > 0.
    """

    n: int
    case: str
    constants: tuple

    def evaluate(self, r):
        r = np.asarray(r, dtype=float)
        if self.case == "a":
            c1, c2 = self.constants
            u = c1 * r ** (-c2)
            du = -c2 * c1 * r ** (-c2 - 1.0)
            ddu = c2 * (c2 + 1.0) * c1 * r ** (-c2 - 2.0)
        else:
            c3, c4 = self.constants
            mu = 0.5 * (self.n - 2)
            p = (self.n - 2) / (mu - 1.0)
            base = c3 * r ** (1.0 - mu) + c4
            u = base**p
            dbase = (1.0 - mu) * c3 * r ** (-mu)
            ddbase = -mu * (1.0 - mu) * c3 * r ** (-mu - 1.0)
            du = p * base ** (p - 1.0) * dbase
            ddu = p * (p - 1.0) * base ** (p - 2.0) * dbase * dbase + p * base ** (
                p - 1.0
            ) * ddbase
        return u, du, ddu

    def profile(self, r_grid) -> RadialProfile:
        r = np.asarray(r_grid, dtype=float)
        u, du, ddu = self.evaluate(r)
        return RadialProfile(
            convention="pow", n=self.n, samples=np.column_stack([r, u, du, ddu])
        )


def degenerate_family(n: int, case: str, constants) -> DegenerateFamily:
    """Build a degenerate radial family member after validating the parameter ranges."""
    constants = tuple(float(c) for c in constants)
    if len(constants) != 2:
        raise ValueError("constants must be a pair")
    mu = 0.5 * (n - 2)
    if case == "a":
        if mu != 1.0:
            raise ValueError("case 'a' requires the cone constant mu = 1 (n = 4)")
        c1, c2 = constants
        if c1 <= 0:
            raise ValueError("C1 must be positive")
        if not 0.0 <= c2 <= n - 2:
            raise ValueError(f"C2 must lie in [0, {n - 2}]")
    elif case == "b":
        if mu == 1.0:
            raise ValueError("case 'b' requires the cone constant mu != 1")
        c3, c4 = constants
        if c3 < 0 or c4 < 0 or c3 + c4 <= 0:
            raise ValueError("need C3, C4 >= 0 with C3 + C4 > 0")
    else:
        raise ValueError("case must be 'a' or 'b'")
    return DegenerateFamily(n=n, case=case, constants=constants)


# -- barrier family ----------------------------------------------------------


@dataclass
class BarrierProfile:
    """Singular barrier r^-(n-2-delta) e^(b r) with its curvature coefficients.

    chi1 is the tangential Schouten eigenvalue of the barrier over a flat
    background, chi1 - chi2 the radial one.  In the flat half-space model
    sigma2 of the barrier metric equals
    (n-1)(chi1 - chi2) chi1 + C(n-1,2) chi1^2 exactly, and stays negative
    below the validity radius r1.
    """

    n: int
    delta: float
    rate_b: float
    r1: float
    r_chain: dict = field(default_factory=dict)

    def value(self, r):
        r = np.asarray(r, dtype=float)
        return r ** (-(self.n - 2 - self.delta)) * np.exp(self.rate_b * r)

    def derivatives(self, r):
        r = np.asarray(r, dtype=float)
        v = self.value(r)
        a = -(self.n - 2 - self.delta)
        dlog = a / r + self.rate_b
        d2log = -a / (r * r)
        dv = v * dlog
        ddv = v * (dlog * dlog + d2log)
        return v, dv, ddv

    def chi1(self, r):
        r = np.asarray(r, dtype=float)
        n, d, b = self.n, self.delta, self.rate_b
        m2 = (n - 2.0) ** 2
        return (
            2.0 * d * (n - 2 - d) / (m2 * r * r)
            - 2.0 * b * b / m2
            + 2.0 * (n - 2 - 2 * d) * b / (m2 * r)
        )

    def chi2(self, r):
        r = np.asarray(r, dtype=float)
        n, d, b = self.n, self.delta, self.rate_b
        m2 = (n - 2.0) ** 2
        return (
            4.0 * d * (n - 2 - d) / (m2 * r * r)
            + (6.0 * (n - 2) - 8.0 * d) * b / (m2 * r)
            - 2.0 * n * b * b / m2
            + 2.0 * b * b / (n - 2)
        )

    def sigma2_flat(self, r):
        """sigma2 of the barrier's Schouten spectrum in the flat model."""
        c1 = self.chi1(r)
        c2 = self.chi2(r)
        return (self.n - 1) * (c1 - c2) * c1 + binom2(self.n - 1) * c1 * c1

    def sigma1_flat(self, r):
        c1 = self.chi1(r)
        c2 = self.chi2(r)
        return (c1 - c2) + (self.n - 1) * c1

    def profile(self, r_grid) -> RadialProfile:
        r = np.asarray(r_grid, dtype=float)
        v, dv, ddv = self.derivatives(r)
        return RadialProfile(
            convention="pow", n=self.n, samples=np.column_stack([r, v, dv, ddv])
        )


def barrier_profile(n: int, delta: float, rate_b: float | None = None) -> BarrierProfile:
    """Construct the barrier family member for n in {3, 4} and 0 < delta < 1/2.

    rate_b defaults to 1 for n=3 and 8 for n=4.  The flat-model validity
    radius r1 is delta(1-delta) for n=3; for n=4 it is the minimum of the
    radius chain r2..r5 driven by rate_b.
    """
    if n not in (3, 4):
        raise ValueError("barrier family is available for n in {3, 4}")
    if not 0.0 < delta < 0.5:
        raise ValueError("delta must lie in (0, 1/2)")
    if rate_b is None:
        rate_b = 1.0 if n == 3 else 8.0
    rate_b = float(rate_b)
    if rate_b <= 0:
        raise ValueError("rate_b must be positive")
    if n == 3:
        r1 = delta * (1.0 - delta)
        chain = {"r1": r1}
    else:
        b = rate_b
        r2 = math.sqrt(delta * (2 - delta)) / (2 * b)
        r3 = min(r2, delta * (2 - delta) / (b * (1 - delta)))
        r4 = min(r2, delta * (2 - delta) / (b * (3 - 2 * delta)))
        r5 = min(r4, (2 - delta) / (2 * b))
        r1 = min(r2, r3, r4, r5)
        chain = {"r2": r2, "r3": r3, "r4": r4, "r5": r5, "r1": r1}
    return BarrierProfile(n=n, delta=delta, rate_b=rate_b, r1=r1, r_chain=chain)


# -- shooting on annuli ------------------------------------------------------


class ShootingError(Exception):
    pass


@dataclass
class ShootResult:
    profile: RadialProfile
    reached_outer: bool
    exit_radius: float | None
    exit_reason: str | None
    ddu_inner: float
    sup_u: float
    sup_u_inv: float
    sup_du: float
    family_index: int = 0

    @property
    def bound_c0(self) -> float:
        return self.sup_u + self.sup_u_inv + self.sup_du


def _shoot_rhs(r, u, du, n):
    """u'' from the normalized sigma2 equation; linear solve in u''.

    The tangential eigenvalue is u''-free, so
    sigma2 = (n-1) lr lt + C(n-1,2) lt^2 = u^(8/(n-2))
    pins lr, and lr is affine in u''.  Returns (ddu, lr, lt); the caller
    owns admissibility checks.  Raises on pivot loss (tangential trace of
    the boundary block hitting zero).
    """
    if u <= 0:
        raise ShootingError("conformal factor left the positive range")
    q = du / u
    m = 2.0 / (n - 2)
    lt = -m * du / (r * u) - 2.0 / (n - 2) ** 2 * q * q
    pivot = (n - 1) * lt
    target = u ** (8.0 / (n - 2))
    if pivot <= 1e-14 * (1.0 + abs(target)):
        raise ShootingError("tangential trace pivot vanished")
    lr = (target - binom2(n - 1) * lt * lt) / pivot
    ddu = 0.5 * (n - 2) * u * ((2.0 * n - 2.0) / (n - 2) ** 2 * q * q - lr)
    return ddu, lr, lt


def shoot_initial_slope(n: int, c: float, u1: float) -> float:
    """Inner Neumann datum: u'(1) = -((n-2)/2) (u1 + c u1^(n/(n-2)))."""
    return -0.5 * (n - 2) * (u1 + c * u1 ** (n / (n - 2.0)))


def singular_inner_value(n: int, c: float) -> float:
    """Inner value at which the tangential pivot vanishes on the inner sphere.

    Finite only for c < 0; the blow-up family climbs toward it.
    """
    if c >= 0:
        return math.inf
    return (-1.0 / c) ** (0.5 * (n - 2))


def shoot_annulus(
    n: int,
    R0: float,
    c: float,
    u1: float,
    family_index: int = 0,
    k: int = 2,
    step: float = 1e-3,
    sigma1_floor: float = -1e-12,
) -> ShootResult:
    """Integrate the normalized sigma2 equation outward from the unit sphere.

    The equation is u^(-4/(n-2)) sigma2^(1/2)(spectrum) = 1 with the
    nonlinear Neumann condition at r = 1.  Classical RK4 with a fixed
    step; cone exit (sigma1 of the full spectrum crossing zero) or pivot
    loss terminates integration, with the exit radius refined by
    bisection on the last healthy step.
    """
    if k != 2:
        raise ValueError("only the k = 2 equation is implemented")
    if R0 <= 1.0:
        raise ValueError("outer radius must exceed 1")
    if u1 <= 0:
        raise ValueError("inner value u1 must be positive")
    if step <= 0:
        raise ValueError("step must be positive")

    du1 = shoot_initial_slope(n, c, u1)

    def rhs(r, y):
        ddu, _, _ = _shoot_rhs(r, y[0], y[1], n)
        return np.array([y[1], ddu])

    def admissible(r, y):
        try:
            ddu, lr, lt = _shoot_rhs(r, y[0], y[1], n)
        except ShootingError:
            return False
        s1, _ = sigma_pair(lr, lt, n)
        return s1 >= sigma1_floor * (1.0 + abs(s1))

    ddu0, lr0, lt0 = _shoot_rhs(1.0, u1, du1, n)
    s1_0, _ = sigma_pair(lr0, lt0, n)
    if s1_0 < sigma1_floor:
        raise ShootingError("initial data outside the admissible cone")

    rows = [(1.0, u1, du1, ddu0)]
    r = 1.0
    y = np.array([u1, du1])
    exit_radius = None
    exit_reason = None
    n_steps = int(math.ceil((R0 - 1.0) / step))
    for i in range(n_steps):
        h = min(step, R0 - r)
        if h <= 0:
            break
        try:
            k1 = rhs(r, y)
            k2 = rhs(r + 0.5 * h, y + 0.5 * h * k1)
            k3 = rhs(r + 0.5 * h, y + 0.5 * h * k2)
            k4 = rhs(r + h, y + h * k3)
            y_new = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            ok = admissible(r + h, y_new)
        except ShootingError:
            ok = False
            y_new = None
        if not ok:
            # bisect the step to locate where admissibility is lost
            lo, hi = 0.0, h
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                try:
                    k1 = rhs(r, y)
                    k2 = rhs(r + 0.5 * mid, y + 0.5 * mid * k1)
                    k3 = rhs(r + 0.5 * mid, y + 0.5 * mid * k2)
                    k4 = rhs(r + mid, y + mid * k3)
                    y_mid = y + (mid / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
                    if admissible(r + mid, y_mid):
                        lo = mid
                    else:
                        hi = mid
                except ShootingError:
                    hi = mid
            exit_radius = r + lo
            exit_reason = "cone exit or pivot loss"
            break
        r += h
        y = y_new
        ddu, _, _ = _shoot_rhs(r, y[0], y[1], n)
        rows.append((r, y[0], y[1], ddu))

    samples = np.array(rows)
    profile = RadialProfile(convention="pow", n=n, samples=samples)
    sup_u = float(np.max(np.abs(samples[:, 1])))
    sup_u_inv = float(np.max(1.0 / np.abs(samples[:, 1])))
    sup_du = float(np.max(np.abs(samples[:, 2])))
    return ShootResult(
        profile=profile,
        reached_outer=exit_radius is None,
        exit_radius=exit_radius,
        exit_reason=exit_reason,
        ddu_inner=float(ddu0),
        sup_u=sup_u,
        sup_u_inv=sup_u_inv,
        sup_du=sup_du,
        family_index=family_index,
    )


def shoot_family(
    n: int,
    R0: float,
    c: float,
    members: int = 4,
    gap0: float = 0.25,
    step: float = 1e-3,
) -> list[ShootResult]:
    """Shoot a family of inner data marching toward the singular value.

    For c < 0 the tangential pivot at the inner sphere vanishes at
    u1* = (-1/c)^((n-2)/2); member j starts at u1 = u1* (1 - gap0 / 2^j),
    so the family climbs toward u1* and the inner second derivative
    blows up while u, 1/u, u' stay bounded.
    """
    u1_star = singular_inner_value(n, c)
    if not math.isfinite(u1_star):
        raise ValueError("family blow-up requires c < 0")
    results = []
    for j in range(members):
        u1 = u1_star * (1.0 - gap0 * 0.5**j)
        results.append(
            shoot_annulus(n, R0, c, u1, family_index=j, step=step)
        )
    return results
