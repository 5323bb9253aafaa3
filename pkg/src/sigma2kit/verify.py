"""Condensed invariant battery behind the verify-all subcommand.

Each check returns (name, passed, detail).  The full tolerances live in
the test suite; this battery samples the same properties at a size that
finishes in seconds.
"""

from __future__ import annotations

import math

import numpy as np

from . import bubble as bubble_mod
from . import eigenpath, ellipsoid, radial, symfunc


def _sigma2_eig_oracle(entries) -> float:
    lam = np.linalg.eigvalsh(entries)
    total = 0.0
    for i in range(len(lam)):
        for j in range(i + 1, len(lam)):
            total += lam[i] * lam[j]
    return total


def run_verification_battery(seed: int = 0, fast: bool = True):
    checks = []
    rng = np.random.default_rng(seed)
    nodes = 81 if fast else 201

    # sigma2 equivalence against the eigenvalue-product oracle
    worst = 0.0
    count = 200 if fast else 1000
    for _ in range(count):
        n = int(rng.integers(3, 7))
        w = symfunc.SymmetricMatrixN.symmetrized(rng.standard_normal((n, n)))
        a = symfunc.sigma2(w)
        b = _sigma2_eig_oracle(w.entries)
        worst = max(worst, abs(a - b) / max(1.0, abs(b)))
    checks.append(("sigma2-oracle-equivalence", worst < 1e-12, f"max rel err {worst:.3e}"))

    # cone-boundary anchors
    r3 = symfunc.cone_membership([-0.5, 1.0, 1.0], 2)
    r4 = symfunc.cone_membership([-1.0, 1.0, 1.0, 1.0], 2)
    ok = r3.verdict == "boundary" and r4.verdict == "boundary"
    checks.append(("cone-boundary-anchors", ok,
                   f"sigma2 anchors {r3.sigma2:.1e}, {r4.sigma2:.1e}"))

    # mu constants
    mus = [symfunc.mu_gamma_plus(n) for n in (3, 4, 5)]
    ok = np.allclose(mus, [0.5, 1.0, 1.5], atol=1e-12)
    checks.append(("mu-gamma-plus", ok, f"mu = {mus}"))

    # ellipsoid umbilic golden values
    spec = ellipsoid.EllipsoidSpec(axes=(1.0, 2.0, 3.0))
    pts = ellipsoid.closed_form_umbilics_n3(spec)
    defects = [ellipsoid.umbilic_defect(spec, p) for p in pts]
    ok = len(pts) == 4 and max(defects) < 1e-9
    checks.append(("ellipsoid-umbilic-closed-form", ok, f"max defect {max(defects):.2e}"))

    rep = ellipsoid.counterexample_geometry(3, 0.01)
    ok = rep.gap <= 0.05 and rep.defect > 0
    checks.append(("counterexample-geometry", ok,
                   f"|h+1| = {rep.gap:.4e}, defect {rep.defect:.3e}"))

    # bubble residuals
    worst_i = worst_b = 0.0
    for n in (3, 4):
        for f in (1.0, 2.0):
            for c in (0.0, 0.5):
                params = bubble_mod.make_bubble_params(n, f, c)
                grid = bubble_mod.default_grid(n, 20, seed=seed)
                r = bubble_mod.verify_bubble(params, grid)
                worst_i = max(worst_i, r.interior_max)
                worst_b = max(worst_b, r.boundary_max)
    ok = worst_i < 1e-8 and worst_b < 1e-8
    checks.append(("bubble-residuals", ok,
                   f"interior {worst_i:.2e}, boundary {worst_b:.2e}"))

    # degenerate families
    worst = 0.0
    r_grid = np.geomspace(0.1, 10.0, 200)
    for _ in range(10 if fast else 50):
        fam_a = radial.degenerate_family(4, "a", (rng.uniform(0.2, 3.0),
                                                  rng.uniform(0.0, 2.0)))
        fam_b = radial.degenerate_family(3, "b", (rng.uniform(0.0, 2.0),
                                                  rng.uniform(0.1, 2.0)))
        for fam in (fam_a, fam_b):
            _, s2 = fam.profile(r_grid).sigma_columns()
            worst = max(worst, float(np.max(np.abs(s2))))
    checks.append(("degenerate-families", worst < 1e-9, f"max |sigma2| {worst:.2e}"))

    # barrier exclusion
    ok = True
    detail = []
    for n in (3, 4):
        for delta in (0.1, 0.25, 0.4):
            bar = radial.barrier_profile(n, delta)
            r = np.geomspace(bar.r1 * 1e-3, bar.r1 * (1 - 1e-9), 50)
            s2 = bar.sigma2_flat(r)
            ok = ok and bool(np.all(s2 < 0))
            detail.append(f"{n}/{delta}: {float(np.max(s2)):.1e}")
    checks.append(("barrier-exclusion", ok, "; ".join(detail)))

    # shooting against the global bubble restriction
    n = 3
    a = math.sqrt(2.0 * symfunc.dimension_constant(n))
    u1 = (a / 2.0) ** ((n - 2) / 2.0)
    res = radial.shoot_annulus(n, 2.0, 0.0, u1, step=2e-3)
    exact = (a / (1.0 + res.profile.r**2)) ** ((n - 2) / 2.0)
    err = float(np.max(np.abs(res.profile.u - exact)))
    checks.append(("shoot-bubble-restriction", err < 1e-6, f"max err {err:.2e}"))

    # eigen anchor on the hemisphere
    geom = eigenpath.spherical_cap(4, math.pi / 2)
    eig = eigenpath.extract_eigenvalue(geom, [2e-3, 1e-3], nodes=nodes)
    ok = abs(eig.level - 1.5) < 1e-6 and float(np.max(np.abs(eig.v))) < 1e-8
    checks.append(("eigen-hemisphere-anchor", ok,
                   f"e^lambda = {eig.level:.12f}"))

    # homotopy anchor on the hemisphere
    hres = eigenpath.trace_homotopy(geom, 1.0, 0.0, steps=10, nodes=nodes)
    target = -0.5 * math.log(symfunc.dimension_constant(4) / 2.0)
    err = float(np.max(np.abs(hres.u_final - target)))
    ok = hres.success and err < 1e-6
    checks.append(("homotopy-hemisphere-anchor", ok,
                   f"success={hres.success}, endpoint err {err:.2e}"))

    # Jacobian vs finite differences at random admissible states
    disc = eigenpath.Discretization(geom, 41)
    system = eigenpath.PathSystem(disc, 1.0, 0.0)
    worst = 0.0
    for k in range(5):
        z = eigenpath.random_admissible_state(disc, rng)
        worst = max(worst, eigenpath.jacobian_fd_error(system, z, 0.1 * k, seed=seed))
    checks.append(("jacobian-fd", worst < 1e-5, f"rel err {worst:.2e}"))

    return checks
