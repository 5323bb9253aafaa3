"""Elementary symmetric curvature functions and Garding-cone tests.

Everything here acts on dense symmetric matrices (curvature tensors
expressed in an orthonormal frame) or directly on eigenvalue lists.
sigma2 is computed trace-wise, never through an eigendecomposition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

MAX_DIM = 8
CONE_TOL_DEFAULT = 1e-10


def binom2(n: int) -> float:
    """C(n,2) = n(n-1)/2, the sigma2 value of the identity."""
    return 0.5 * n * (n - 1)


class SymmetricMatrixN:
    """Dense symmetric n x n matrix, 2 <= n <= 8, with sorted eigenvalues.

    Symmetry is required exactly (bitwise) at construction; callers that
    start from nearly-symmetric data should symmetrize first via
    ``SymmetricMatrixN.symmetrized``.
    """

    __slots__ = ("entries",)

    def __init__(self, entries) -> None:
        a = np.asarray(entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("entries must be a square matrix")
        n = a.shape[0]
        if not 2 <= n <= MAX_DIM:
            raise ValueError(f"dimension must be in [2, {MAX_DIM}], got {n}")
        if not np.array_equal(a, a.T):
            raise ValueError("entries must be exactly symmetric")
        self.entries = a

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @classmethod
    def identity(cls, n: int) -> "SymmetricMatrixN":
        return cls(np.eye(n))

    @classmethod
    def diagonal(cls, values) -> "SymmetricMatrixN":
        return cls(np.diag(np.asarray(values, dtype=float)))

    @classmethod
    def symmetrized(cls, entries) -> "SymmetricMatrixN":
        a = np.asarray(entries, dtype=float)
        return cls(0.5 * (a + a.T))

    def eigenvalues(self) -> np.ndarray:
        """Eigenvalues sorted descending."""
        return np.linalg.eigvalsh(self.entries)[::-1]

    def __repr__(self) -> str:  # pragma: no cover
        return f"SymmetricMatrixN(n={self.n})"


@dataclass(frozen=True)
class ConeReport:
    """Cone-membership verdict with signed margins.

    verdict is one of 'interior', 'boundary', 'outside'.  margin is the
    smallest of the relevant symmetric-function values (sigma1 for k=1,
    min(sigma1, sigma2) for k=2).
    """

    k: int
    verdict: str
    sigma1: float
    sigma2: float
    margin: float


def _as_matrix(W) -> np.ndarray:
    if isinstance(W, SymmetricMatrixN):
        return W.entries
    return np.asarray(W, dtype=float)


def sigma1(W) -> float:
    """First symmetric function: the trace."""
    return float(np.trace(_as_matrix(W)))


def sigma2(W) -> float:
    """Second symmetric function, trace-wise: (tr(W)^2 - tr(W^2)) / 2."""
    a = _as_matrix(W)
    t = np.trace(a)
    return float(0.5 * (t * t - np.sum(a * a)))


def newton_tensor_T1(W) -> SymmetricMatrixN:
    """First Newton tensor sigma1(W) I - W (the gradient of sigma2)."""
    a = _as_matrix(W)
    return SymmetricMatrixN(np.trace(a) * np.eye(a.shape[0]) - a)


def sigma2_hessian_contract(P, Q) -> float:
    """Second-derivative bilinear form of sigma2: tr(P) tr(Q) - tr(PQ)."""
    p = _as_matrix(P)
    q = _as_matrix(Q)
    if p.shape != q.shape:
        raise ValueError("P and Q must have the same dimension")
    return float(np.trace(p) * np.trace(q) - np.sum(p * q.T))


def sigma1_eigs(lam) -> float:
    return float(np.sum(np.asarray(lam, dtype=float)))


def sigma2_eigs(lam) -> float:
    """sigma2 of an eigenvalue list, via (sum^2 - sum of squares)/2."""
    v = np.asarray(lam, dtype=float)
    s = np.sum(v)
    return float(0.5 * (s * s - np.sum(v * v)))


def sigma_pair(lam_radial, lam_tangential, n: int):
    """(sigma1, sigma2) of the spectrum (lr, lt, ..., lt) with lt repeated n-1 times.

    This is the spectrum every radial conformal factor produces; both
    solvers and the barrier checks share it.
    """
    lr = np.asarray(lam_radial, dtype=float)
    lt = np.asarray(lam_tangential, dtype=float)
    s1 = lr + (n - 1) * lt
    s2 = (n - 1) * lr * lt + binom2(n - 1) * lt * lt
    return s1, s2


def cone_membership(lam, k: int, tol: float = CONE_TOL_DEFAULT) -> ConeReport:
    """Classify an eigenvalue list against the Garding cone of index k.

    The verdict uses an absolute tolerance scaled by (1 + |sigma1|):
    interior iff every relevant sigma_j clears +tol, boundary iff the
    smallest one sits within tol of zero and none dips below -tol.
    """
    if k not in (1, 2):
        raise ValueError("cone index k must be 1 or 2")
    if tol <= 0:
        raise ValueError("tol must be positive")
    s1 = sigma1_eigs(lam)
    s2 = sigma2_eigs(lam)
    relevant = [s1] if k == 1 else [s1, s2]
    scale = 1.0 + abs(s1)
    eff = tol * scale
    smallest = min(relevant)
    if all(s > eff for s in relevant):
        verdict = "interior"
    elif abs(smallest) <= eff and all(s >= -eff for s in relevant):
        verdict = "boundary"
    else:
        verdict = "outside"
    return ConeReport(k=k, verdict=verdict, sigma1=s1, sigma2=s2, margin=smallest)


def mu_gamma_plus(n: int) -> float:
    """The unique mu >= 0 putting (-mu, 1, ..., 1) on the sigma2 cone boundary.

    Solved by root-finding on mu -> sigma2(-mu, 1, ..., 1); the closed
    form is (n-2)/2 and serves as the bracket sanity check.
    """
    if n < 3:
        raise ValueError("mu_gamma_plus requires n >= 3")

    def f(mu: float) -> float:
        lam = np.full(n, 1.0)
        lam[0] = -mu
        return sigma2_eigs(lam)

    # sigma2 is linear decreasing in mu: positive at 0, negative at n-1.
    root = brentq(f, 0.0, float(n - 1), xtol=1e-14, rtol=8.9e-16)
    assert abs(root - 0.5 * (n - 2)) < 1e-10
    return float(root)


def partial_trace_decomposition(W):
    """Split W into (W_top, W_nn, W_n-row) for the last-index expansion.

    Returns the leading (n-1) block, the corner entry and the off-block
    column, so callers can verify
    sigma2(W) = sigma2(W_top) + sigma1(W_top) W_nn - sum_a W_na^2.
    """
    a = _as_matrix(W)
    return a[:-1, :-1], float(a[-1, -1]), a[:-1, -1].copy()


def dimension_constant(n: int) -> float:
    """sqrt(C_n^2), the sigma2^(1/2) of the identity; appears in all bubble scales."""
    return math.sqrt(binom2(n))
