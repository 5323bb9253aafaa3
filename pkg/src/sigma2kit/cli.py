"""Command-line front end.

One subcommand per module plus a config-driven sweep.  Every run writes
a JSON report {command, inputs, outputs, residuals, pass}; subcommands
with series output also write CSV files and render a figure alongside
them (disable with --no-plot).  Exit codes: 0 pass, 2 numerical failure,
1 usage error.
"""

from __future__ import annotations

import argparse
import math
import os
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import bubble as bubble_mod
from . import eigenpath, ellipsoid, plots, radial, report, symfunc
from .verify import run_verification_battery

DEFAULT_OUT = Path("sigma2_reports")


class UsageError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    params: dict = field(default_factory=dict)
    output_path: str = ""
    seed: int = 0
    tolerances: dict = field(default_factory=dict)


def _floats(text) -> list:
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    return [float(p) for p in str(text).split(",") if p.strip() != ""]


def _parse_matrix(text: str) -> np.ndarray:
    rows = [[float(v) for v in row.split(",")] for row in text.split(";")]
    return np.asarray(rows, dtype=float)


PARAM_SPECS = {
    "symfunc": {"matrix": str, "diag": _floats},
    "cone": {"lambda": _floats, "k": int, "tol": float},
    "ellipsoid": {
        "action": str, "axes": _floats, "mode": str, "samples": int,
        "eps": float, "n": int, "point": _floats,
    },
    "bubble": {"n": int, "f": float, "c": float, "grid_points": int},
    "radial": {
        "family": str, "n": int, "constants": _floats,
        "r_min": float, "r_max": float, "num": int,
    },
    "barrier": {"n": int, "delta": float, "rate_b": float, "grid": int},
    "shoot": {
        "n": int, "r0": float, "c": float, "u1": float, "step": float,
        "members": int, "gap0": float, "family_index": int,
    },
    "eigen": {"n": int, "cap_angle": float, "eps_seq": _floats, "nodes": int},
    "homotopy": {
        "n": int, "cap_angle": float, "f": float, "c": float,
        "steps": int, "nodes": int, "kind": str,
        "r_inner": float, "r_outer": float,
    },
    "verify-all": {"fast": int},
}


def validate_params(command: str, params: dict) -> dict:
    spec = PARAM_SPECS.get(command)
    if spec is None:
        raise UsageError(f"unknown command {command!r}")
    out = {}
    for key, value in params.items():
        if value is None:
            continue
        if key not in spec:
            raise UsageError(f"unknown parameter {key!r} for command {command!r}")
        out[key] = spec[key](value)
    return out


# -- handlers -----------------------------------------------------------------


def _artifact_base(report_path: Path) -> Path:
    return report_path.with_suffix("")


def run_symfunc(cfg: RunConfig, report_path: Path, plot: bool) -> dict:
    p = cfg.params
    if "diag" in p:
        w = symfunc.SymmetricMatrixN.diagonal(p["diag"])
    elif "matrix" in p:
        w = symfunc.SymmetricMatrixN.symmetrized(_parse_matrix(p["matrix"]))
    else:
        raise UsageError("symfunc needs --diag or --matrix")
    t1 = symfunc.newton_tensor_T1(w)
    outputs = {
        "n": w.n,
        "sigma1": symfunc.sigma1(w),
        "sigma2": symfunc.sigma2(w),
        "eigenvalues": list(w.eigenvalues()),
        "newton_trace": symfunc.sigma1(t1),
        "mu_gamma_plus": symfunc.mu_gamma_plus(w.n) if w.n >= 3 else None,
    }
    euler = symfunc.sigma2_hessian_contract(w, w) - 2.0 * symfunc.sigma2(w)
    residuals = {"euler_identity": abs(euler)}
    return report.make_report("symfunc", _inputs(cfg), outputs, residuals,
                              abs(euler) < 1e-10 * (1 + abs(outputs["sigma2"])))


def run_cone(cfg: RunConfig, report_path: Path, plot: bool) -> dict:
    p = cfg.params
    if "lambda" not in p:
        raise UsageError("cone needs --lambda")
    rep = symfunc.cone_membership(
        p["lambda"], p.get("k", 2), p.get("tol", symfunc.CONE_TOL_DEFAULT)
    )
    outputs = {
        "verdict": rep.verdict,
        "sigma1": rep.sigma1,
        "sigma2": rep.sigma2,
        "margin": rep.margin,
        "k": rep.k,
    }
    return report.make_report("cone", _inputs(cfg), outputs, {}, True)


def run_ellipsoid(cfg: RunConfig, report_path: Path, plot: bool) -> dict:
    p = cfg.params
    action = p.get("action", "umbilic")
    if action == "umbilic":
        spec = ellipsoid.EllipsoidSpec(axes=tuple(p["axes"]))
        mode = p.get("mode", "closed_form_n3" if spec.n == 3 else "numeric_search")
        res = ellipsoid.find_umbilic_points(
            spec, mode, samples=p.get("samples", 20000), seed=cfg.seed
        )
        defects = [ellipsoid.umbilic_defect(spec, q) for q in res.points]
        outputs = {
            "mode": res.mode,
            "points": [list(q) for q in res.points],
            "count": len(res.points),
            "degenerate": res.degenerate,
            "min_sample_defect": res.min_defect,
        }
        residuals = {"max_point_defect": max(defects) if defects else 0.0}
        passed = res.degenerate or all(d < 1e-8 for d in defects)
        return report.make_report("ellipsoid", _inputs(cfg), outputs, residuals, passed)
    if action == "counterexample":
        rep = ellipsoid.counterexample_geometry(p["n"], p["eps"])
        outputs = {
            "axes": list(rep.axes),
            "h_eps": rep.h_eps,
            "gap": rep.gap,
            "defect": rep.defect,
        }
        passed = rep.gap <= 5.0 * max(rep.eps, 1e-300) if rep.eps > 0 else rep.gap < 1e-12
        return report.make_report("ellipsoid", _inputs(cfg), outputs,
                                  {"gap": rep.gap}, passed)
    if action == "geometry":
        spec = ellipsoid.EllipsoidSpec(axes=tuple(p["axes"]))
        geo = ellipsoid.surface_geometry(spec, np.asarray(p["point"]))
        closed = ellipsoid.mean_curvature_closed_form(spec, geo.point)
        outputs = {
            "point": list(geo.point),
            "H": geo.H,
            "H_closed_form": closed,
            "umbilic_defect": geo.umbilic_defect,
            "projected": geo.projected,
        }
        residuals = {"H_vs_closed_form": abs(geo.H - closed)}
        return report.make_report("ellipsoid", _inputs(cfg), outputs, residuals,
                                  residuals["H_vs_closed_form"] < 1e-10 * (1 + abs(closed)))
    raise UsageError(f"unknown ellipsoid action {action!r}")


def run_bubble(cfg: RunConfig, report_path: Path, plot: bool) -> dict:
    p = cfg.params
    params = bubble_mod.make_bubble_params(p["n"], p["f"], p.get("c", 0.0))
    grid = bubble_mod.default_grid(p["n"], p.get("grid_points", 30), seed=cfg.seed)
    rep = bubble_mod.verify_bubble(params, grid)
    bub = bubble_mod.boundary_bubble(params)
    r = np.linspace(0.05, 5.0, 200)
    prof = bub.profile(r)
    base = _artifact_base(report_path)
    csv_path = base.parent / (base.name + "_profile.csv")
    prof.to_csv(csv_path)
    artifacts = [str(csv_path)]
    if plot:
        artifacts.append(str(plots.plot_profile(prof, base.parent / (base.name + "_profile.png"),
                                                title="boundary bubble")))
    outputs = {
        "b": params.b,
        "Ttilde_c": params.Ttilde_c,
        "ybar_n": params.ybar_n,
        "lambda_cap": params.lambda_cap,
        "T_c": params.T_c,
        "artifacts": artifacts,
    }
    residuals = {
        "interior_max": rep.interior_max,
        "boundary_max": rep.boundary_max,
        "param_identities": max(abs(v) for v in params.invariant_residuals().values()),
    }
    passed = rep.interior_max < 1e-8 and rep.boundary_max < 1e-8
    return report.make_report("bubble", _inputs(cfg), outputs, residuals, passed)


def run_radial(cfg: RunConfig, report_path: Path, plot: bool) -> dict:
    p = cfg.params
    fam = radial.degenerate_family(p["n"], p.get("family", "b"), p["constants"])
    r = np.geomspace(p.get("r_min", 0.1), p.get("r_max", 10.0), p.get("num", 400))
    prof = fam.profile(r)
    s1, s2 = prof.sigma_columns()
    base = _artifact_base(report_path)
    csv_path = base.parent / (base.name + "_profile.csv")
    prof.to_csv(csv_path)
    artifacts = [str(csv_path)]
    if plot:
        artifacts.append(str(plots.plot_profile(prof, base.parent / (base.name + "_profile.png"),
                                                title=f"degenerate family {fam.case}")))
    outputs = {"case": fam.case, "constants": list(fam.constants), "artifacts": artifacts}
    residuals = {
        "max_abs_sigma2": float(np.max(np.abs(s2))),
        "min_sigma1": float(np.min(s1)),
    }
    passed = residuals["max_abs_sigma2"] < 1e-9 and residuals["min_sigma1"] >= -1e-9
    return report.make_report("radial", _inputs(cfg), outputs, residuals, passed)


def run_barrier(cfg: RunConfig, report_path: Path, plot: bool) -> dict:
    p = cfg.params
    bar = radial.barrier_profile(p["n"], p["delta"], p.get("rate_b"))
    m = p.get("grid", 100)
    r = np.geomspace(bar.r1 * 1e-3, bar.r1 * (1 - 1e-9), m)
    s2 = bar.sigma2_flat(r)
    if bar.n == 3:
        bound = -3.0 * bar.delta**2 * (1 - bar.delta) ** 2 / r**4
        bound_ok = bool(np.all(s2 <= bound + 1e-9 * np.abs(bound)))
    else:
        r2 = bar.r_chain["r2"]
        mask = r < r2
        bound = -3.0 * bar.rate_b * bar.delta * (2 - bar.delta) / (4.0 * r**3)
        bound_ok = bool(np.all(s2[mask] < bound[mask]))
    base = _artifact_base(report_path)
    rows = np.column_stack([r, bar.chi1(r), bar.chi2(r), s2, bound])
    csv_path = report.write_csv(
        base.parent / (base.name + "_grid.csv"),
        ["r", "chi1", "chi2", "sigma2", "bound"],
        rows,
    )
    artifacts = [str(csv_path)]
    if plot:
        artifacts.append(str(plots.plot_barrier(r, s2, bound,
                                                base.parent / (base.name + "_grid.png"),
                                                title=f"barrier n={bar.n} delta={bar.delta}")))
    outputs = {
        "rate_b": bar.rate_b,
        "r1": bar.r1,
        "r_chain": dict(bar.r_chain),
        "artifacts": artifacts,
    }
    residuals = {"max_sigma2": float(np.max(s2))}
    passed = bool(np.all(s2 < 0.0)) and bound_ok
    return report.make_report("barrier", _inputs(cfg), outputs, residuals, passed)


def run_shoot(cfg: RunConfig, report_path: Path, plot: bool) -> dict:
    p = cfg.params
    base = _artifact_base(report_path)
    artifacts = []
    if "members" in p:
        results = radial.shoot_family(
            p["n"], p.get("r0", 1.5), p["c"],
            members=p["members"], gap0=p.get("gap0", 0.25),
            step=p.get("step", 1e-3),
        )
        dd = [abs(r.ddu_inner) for r in results]
        growth = [b / a for a, b in zip(dd, dd[1:])]
        bound = max(r.bound_c0 for r in results)
        rows = [
            [r.family_index, r.profile.u[0], r.ddu_inner, r.sup_u, r.sup_u_inv,
             r.sup_du, r.bound_c0]
            for r in results
        ]
        csv_path = report.write_csv(
            base.parent / (base.name + "_family.csv"),
            ["family_index", "u1", "ddu_inner", "sup_u", "sup_u_inv", "sup_du", "bound_c0"],
            rows,
        )
        artifacts.append(str(csv_path))
        if plot:
            artifacts.append(str(plots.plot_sweep_scalar(
                [f"j={r.family_index}" for r in results], dd,
                base.parent / (base.name + "_family.png"),
                ylabel="|u''(1)|", title="inner Hessian growth")))
        outputs = {
            "ddu_inner": dd,
            "growth_factors": growth,
            "sup_bound": bound,
            "artifacts": artifacts,
        }
        passed = all(g >= 2.0 for g in growth) and math.isfinite(bound)
        return report.make_report("shoot", _inputs(cfg), outputs,
                                  {"min_growth": min(growth)}, passed)
    if "u1" not in p:
        # family member addressed by index: march toward the singular datum
        if p.get("c", 0.0) >= 0:
            raise UsageError("shoot needs --u1 (or c < 0 with a family index)")
        u1_star = radial.singular_inner_value(p["n"], p["c"])
        p = dict(p, u1=u1_star * (1.0 - p.get("gap0", 0.25) * 0.5 ** p.get("family_index", 0)))
    res = radial.shoot_annulus(
        p["n"], p.get("r0", 2.0), p.get("c", 0.0), p["u1"],
        family_index=p.get("family_index", 0), step=p.get("step", 1e-3),
    )
    csv_path = base.parent / (base.name + "_profile.csv")
    res.profile.to_csv(csv_path)
    artifacts.append(str(csv_path))
    if plot:
        artifacts.append(str(plots.plot_profile(res.profile,
                                                base.parent / (base.name + "_profile.png"),
                                                title="annulus shoot")))
    outputs = {
        "reached_outer": res.reached_outer,
        "exit_radius": res.exit_radius,
        "exit_reason": res.exit_reason,
        "ddu_inner": res.ddu_inner,
        "sup_u": res.sup_u,
        "sup_u_inv": res.sup_u_inv,
        "sup_du": res.sup_du,
        "artifacts": artifacts,
    }
    # a flagged admissibility exit is a reported outcome, not a failure
    return report.make_report("shoot", _inputs(cfg), outputs, {}, True)


def run_eigen(cfg: RunConfig, report_path: Path, plot: bool) -> dict:
    p = cfg.params
    geom = eigenpath.spherical_cap(p["n"], p.get("cap_angle", math.pi / 2))
    eps_seq = p.get("eps_seq", [4e-4, 2e-4, 1e-4])
    res = eigenpath.extract_eigenvalue(geom, eps_seq, nodes=p.get("nodes", 201))
    base = _artifact_base(report_path)
    disc = eigenpath.Discretization(geom, p.get("nodes", 201))
    csv_path = report.write_csv(
        base.parent / (base.name + "_eigenfunction.csv"),
        ["x", "v"], np.column_stack([disc.x, res.v]),
    )
    artifacts = [str(csv_path)]
    if plot:
        artifacts.append(str(plots.plot_eigen_function(
            disc.x, res.v, base.parent / (base.name + "_eigenfunction.png"),
            title="first boundary eigenfunction")))
    outputs = {
        "lambda": res.lam,
        "level": res.level,
        "lambda_sequence": res.lam_sequence,
        "cauchy_ok": res.cauchy_ok,
        "artifacts": artifacts,
    }
    residuals = {"limit_equation": res.residual}
    passed = res.cauchy_ok and res.residual < 1e-6
    return report.make_report("eigen", _inputs(cfg), outputs, residuals, passed)


def run_homotopy(cfg: RunConfig, report_path: Path, plot: bool) -> dict:
    p = cfg.params
    if p.get("kind", "spherical_cap") == "annulus":
        geom = eigenpath.annulus_geometry(p["n"], p.get("r_inner", 1.0),
                                          p.get("r_outer", 2.0))
    else:
        geom = eigenpath.spherical_cap(p["n"], p.get("cap_angle", math.pi / 2))
    res = eigenpath.trace_homotopy(
        geom, p.get("f", 1.0), p.get("c", 0.0),
        steps=p.get("steps", 20), nodes=p.get("nodes", 201),
    )
    base = _artifact_base(report_path)
    trace = [s.to_trace() for s in res.states]
    trace_path = base.parent / (base.name + "_trace.json")
    trace_path.parent.mkdir(parents=True, exist_ok=True)
    trace_path.write_text(report.canonical_json({"states": trace}))
    artifacts = [str(trace_path)]
    if plot:
        artifacts.append(str(plots.plot_homotopy(res.states,
                                                 base.parent / (base.name + "_trace.png"),
                                                 title="homotopy trace")))
    final = res.states[-1]
    outputs = {
        "success": res.success,
        "t_final": res.t_final,
        "message": res.message,
        "rescale_factor": res.rescale_factor,
        "endpoint_u_range": [float(np.min(final.u)), float(np.max(final.u))],
        "artifacts": artifacts,
    }
    residuals = {"endpoint": final.residual_norm}
    return report.make_report("homotopy", _inputs(cfg), outputs, residuals,
                              res.success and final.residual_norm < 1e-8)


def run_verify_all(cfg: RunConfig, report_path: Path, plot: bool) -> dict:
    checks = run_verification_battery(seed=cfg.seed, fast=bool(cfg.params.get("fast", 1)))
    outputs = {
        "checks": [
            {"name": name, "pass": ok, "detail": detail}
            for name, ok, detail in checks
        ]
    }
    passed = all(ok for _, ok, _ in checks)
    residuals = {"failed_checks": float(sum(1 for _, ok, _ in checks if not ok))}
    return report.make_report("verify-all", _inputs(cfg), outputs, residuals, passed)


HANDLERS = {
    "symfunc": run_symfunc,
    "cone": run_cone,
    "ellipsoid": run_ellipsoid,
    "bubble": run_bubble,
    "radial": run_radial,
    "barrier": run_barrier,
    "shoot": run_shoot,
    "eigen": run_eigen,
    "homotopy": run_homotopy,
    "verify-all": run_verify_all,
}


def run_config(cfg: RunConfig, plot: bool = True) -> tuple:
    """Run one configured command; returns (report, report_path)."""
    merged = dict(cfg.params)
    for key, value in cfg.tolerances.items():
        merged.setdefault(key, value)
    params = validate_params(cfg.command, merged)
    cfg = RunConfig(cfg.command, params, cfg.output_path, cfg.seed, cfg.tolerances)
    report_path = Path(cfg.output_path) if cfg.output_path else (
        DEFAULT_OUT / f"{cfg.command.replace('-', '_')}.json"
    )
    rep = HANDLERS[cfg.command](cfg, report_path, plot)
    report.write_report(rep, report_path)
    return rep, report_path


def _inputs(cfg: RunConfig) -> dict:
    inputs = {"seed": cfg.seed}
    for k, v in cfg.params.items():
        if isinstance(v, (list, tuple)):
            inputs[k] = [float(x) if isinstance(x, (int, float)) else x for x in v]
        else:
            inputs[k] = v
    return inputs


# -- sweep --------------------------------------------------------------------


def parse_sweep_config(text: str) -> tuple:
    """Parse the line-oriented key=value config with 'grid NAME = v1, v2' rows."""
    base = RunConfig(command="")
    grids = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"malformed config line: {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key.startswith("grid "):
            name = key[5:].strip()
            grids.append((name, [v.strip() for v in value.split(",")]))
        elif key == "command":
            base.command = value
        elif key == "output":
            base.output_path = value
        elif key == "seed":
            base.seed = int(value)
        elif key.endswith("tol"):
            base.tolerances[key] = value
        else:
            base.params[key] = value
    if not base.command:
        raise UsageError("config must set 'command'")
    if base.command not in PARAM_SPECS:
        raise UsageError(f"unknown command {base.command!r}")
    spec = PARAM_SPECS[base.command]
    for name, _ in grids:
        if name not in spec:
            raise UsageError(f"unknown grid parameter {name!r}")
    return base, grids


def _sweep_cells(grids):
    if not grids:
        return []
    cells = [{}]
    for name, values in grids:
        cells = [dict(c, **{name: v}) for c in cells for v in values]
    return cells


def run_sweep(config_path: str, out_dir: str | None = None, plot: bool = True) -> int:
    text = Path(config_path).read_text()
    base, grids = parse_sweep_config(text)
    out = Path(out_dir) if out_dir else (
        Path(base.output_path) if base.output_path else DEFAULT_OUT / "sweep"
    )
    cells = _sweep_cells(grids)
    if not cells:
        index = {"command": base.command, "cells": [], "pass": True}
        report_path = out / "index.json"
        report_path.parent.mkdir(parents=True, exist_ok=True)
        report_path.write_text(report.canonical_json(index))
        return 0

    def run_cell(i_cell):
        i, cell = i_cell
        params = dict(base.params)
        params.update({k: str(v) for k, v in cell.items()})
        cfg = RunConfig(
            command=base.command,
            params=params,
            output_path=str(out / f"cell_{i:03d}" / "report.json"),
            seed=base.seed + i,
        )
        try:
            rep, path = run_config(cfg, plot=False)
            return i, cell, rep, None
        except Exception as exc:  # recorded per cell
            return i, cell, None, str(exc)

    max_workers = int(os.environ.get("SIGMA2_THREADS", "0")) or min(8, os.cpu_count() or 1)
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        results = list(pool.map(run_cell, enumerate(cells)))

    rows = []
    all_pass = True
    for i, cell, rep, err in sorted(results, key=lambda r: r[0]):
        row = {"cell": i, "params": {k: float(v) if _is_number(v) else v
                                     for k, v in cell.items()}}
        if rep is None:
            row["pass"] = False
            row["error"] = err
            all_pass = False
        else:
            row["pass"] = rep["pass"]
            row["scalars"] = _index_scalars(rep)
            all_pass = all_pass and rep["pass"]
        rows.append(row)
    index = {"command": base.command, "cells": rows, "pass": all_pass}
    (out / "index.json").parent.mkdir(parents=True, exist_ok=True)
    (out / "index.json").write_text(report.canonical_json(index))
    header = ["cell", "pass"] + sorted({k for _, c, _, _ in results for k in c})
    csv_rows = []
    for row in rows:
        csv_rows.append([row["cell"], int(row["pass"])]
                        + [row["params"].get(k, "") for k in header[2:]])
    report.write_csv(out / "index.csv", header, csv_rows)
    if plot:
        scalar_keys = sorted({k for row in rows for k in row.get("scalars", {})})
        if scalar_keys and rows:
            key = scalar_keys[0]
            vals = [row.get("scalars", {}).get(key, math.nan) for row in rows]
            plots.plot_sweep_scalar([str(r["cell"]) for r in rows], vals,
                                    out / "index.png", ylabel=key,
                                    title=f"sweep: {base.command}")
    return 0 if all_pass else 2


def _is_number(v) -> bool:
    try:
        float(v)
        return True
    except (TypeError, ValueError):
        return False


def _index_scalars(rep: dict) -> dict:
    scalars = {}
    for section in ("residuals", "outputs"):
        for k, v in rep.get(section, {}).items():
            if isinstance(v, (int, float)) and not isinstance(v, bool):
                scalars[k] = float(v)
    return scalars


# -- argument parsing ----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="sigma2",
        description="sigma2-curvature boundary toolkit",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", help="JSON report path")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--no-plot", action="store_true",
                       help="skip figure rendering next to CSV output")

    p = sub.add_parser("symfunc", help="symmetric functions of a matrix")
    p.add_argument("--matrix", help="rows 'a,b;c,d' (symmetrized)")
    p.add_argument("--diag", help="diagonal entries 'a,b,c'")
    common(p)

    p = sub.add_parser("cone", help="Garding-cone membership of an eigenvalue list")
    p.add_argument("--lambda", dest="lam", required=True, help="eigenvalues 'l1,l2,...'")
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--tol", type=float, default=symfunc.CONE_TOL_DEFAULT)
    common(p)

    p = sub.add_parser("ellipsoid", help="ellipsoid umbilic geometry")
    p.add_argument("action", choices=["umbilic", "counterexample", "geometry"])
    p.add_argument("--axes", help="semi-axes 'a1,a2,...'")
    p.add_argument("--mode", choices=["closed_form_n3", "numeric_search"])
    p.add_argument("--samples", type=int)
    p.add_argument("--eps", type=float)
    p.add_argument("--n", type=int)
    p.add_argument("--point", help="surface point 'x1,...,xn'")
    common(p)

    p = sub.add_parser(
        "bubble", help="bubble parameters and residuals",
        epilog="CSV columns: r, u, du, ddu, sigma1, sigma2 (radial profile)",
    )
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--f", type=float, required=True)
    p.add_argument("--c", type=float, default=0.0)
    p.add_argument("--grid-points", dest="grid_points", type=int, default=30)
    common(p)

    p = sub.add_parser(
        "radial", help="degenerate radial families (CSV profile)",
        epilog="CSV columns: r, u, du, ddu, sigma1, sigma2",
    )
    p.add_argument("--family", choices=["a", "b"], required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--constants", required=True, help="'C1,C2' or 'C3,C4'")
    p.add_argument("--r-min", dest="r_min", type=float, default=0.1)
    p.add_argument("--r-max", dest="r_max", type=float, default=10.0)
    p.add_argument("--num", type=int, default=400)
    common(p)

    p = sub.add_parser(
        "barrier", help="singular barrier exclusion grid",
        epilog="CSV columns: r, chi1, chi2, sigma2, bound",
    )
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--rate-b", dest="rate_b", type=float)
    p.add_argument("--grid", type=int, default=100)
    common(p)

    p = sub.add_parser(
        "shoot", help="annulus shooting (single or family)",
        epilog="CSV columns: r, u, du, ddu, sigma1, sigma2 (single run) or "
               "family_index, u1, ddu_inner, sup_u, sup_u_inv, sup_du, bound_c0",
    )
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--r0", type=float, default=2.0)
    p.add_argument("--c", type=float, default=0.0)
    p.add_argument("--u1", type=float)
    p.add_argument("--step", type=float, default=1e-3)
    p.add_argument("--members", type=int, help="run a blow-up family instead")
    p.add_argument("--gap0", type=float, default=0.25)
    common(p)

    p = sub.add_parser(
        "eigen", help="first boundary eigenvalue on a cap",
        epilog="CSV columns: x, v (mean-normalized eigenfunction on the polar grid)",
    )
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--cap-angle", dest="cap_angle", type=float, default=math.pi / 2)
    p.add_argument("--eps-seq", dest="eps_seq", default="4e-4,2e-4,1e-4")
    p.add_argument("--nodes", type=int, default=201)
    common(p)

    p = sub.add_parser("homotopy", help="existence homotopy on a model geometry")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--kind", choices=["spherical_cap", "annulus"],
                   default="spherical_cap")
    p.add_argument("--cap-angle", dest="cap_angle", type=float, default=math.pi / 2)
    p.add_argument("--r-inner", dest="r_inner", type=float, default=1.0)
    p.add_argument("--r-outer", dest="r_outer", type=float, default=2.0)
    p.add_argument("--f", type=float, default=1.0)
    p.add_argument("--c", type=float, default=0.0)
    p.add_argument("--steps", type=int, default=20)
    p.add_argument("--nodes", type=int, default=201)
    common(p)

    p = sub.add_parser("verify-all", help="run the invariant battery")
    p.add_argument("--fast", type=int, default=1)
    common(p)

    p = sub.add_parser("sweep", help="config-driven Cartesian sweep")
    p.add_argument("config", help="line-oriented key=value config file")
    p.add_argument("--out", help="output directory")
    p.add_argument("--no-plot", action="store_true")
    return ap


def _glue_negative_values(argv):
    """Join '--flag -0.5,...' into '--flag=-0.5,...' so argparse accepts
    values that begin with a minus sign."""
    out = []
    skip = False
    for i, tok in enumerate(argv):
        if skip:
            skip = False
            continue
        nxt = argv[i + 1] if i + 1 < len(argv) else None
        if (tok.startswith("--") and "=" not in tok and nxt is not None
                and re.match(r"^-(\.?\d)", nxt)):
            out.append(f"{tok}={nxt}")
            skip = True
        else:
            out.append(tok)
    return out


def dispatch(argv) -> int:
    """Parse arguments, run the command, write the report; return exit code."""
    parser = build_parser()
    try:
        ns = parser.parse_args(_glue_negative_values(list(argv)))
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    try:
        if ns.command == "sweep":
            return run_sweep(ns.config, ns.out, plot=not ns.no_plot)
        skip = {"command", "out", "seed", "no_plot"}
        params = {k.replace("lam", "lambda") if k == "lam" else k: v
                  for k, v in vars(ns).items() if k not in skip}
        cfg = RunConfig(
            command=ns.command,
            params={k: v for k, v in params.items() if v is not None},
            output_path=ns.out or "",
            seed=ns.seed,
        )
        rep, path = run_config(cfg, plot=not ns.no_plot)
        sys.stdout.write(report.canonical_json(
            {"pass": rep["pass"], "report": str(path)}
        ))
        return 0 if rep["pass"] else 2
    except UsageError as exc:
        sys.stderr.write(f"usage error: {exc}\n")
        return 1
    except (ValueError, KeyError) as exc:
        sys.stderr.write(f"usage error: {exc}\n")
        return 1


def main() -> None:  # pragma: no cover
    sys.exit(dispatch(sys.argv[1:]))
