"""Command-line front end.

Exit codes: 0 = success / all verdicts passed, 1 = a verdict failed,
2 = usage or configuration error. Every report embeds the tool version, a
hash of the effective configuration, and the seed, and is byte-for-byte
deterministic for a fixed (version, config, seed).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, models
from .bochner import bochner_residuals
from .calculus import ScalarField
from .cdconstants import certify_parameters, derive_constants, entropy_diameter_quadrature
from .curvature import curvature_report
from .geodesics import (
    GeodesicState,
    ShootingConfig,
    cc_distance,
    heisenberg_distance,
    integrate_geodesic,
)
from .polynomials import scaled_random_polynomial
from .structure import HormanderError, StructureError, validate_structure


class UsageError(ValueError):
    pass


def _load_model(args) -> models.ModelDescriptor:
    if getattr(args, "structure", None):
        from . import srsio

        return srsio.load_structure(args.structure)
    if not getattr(args, "model", None):
        raise UsageError("need --model or --structure")
    return models.build(args.model)


def _sample_fields(md, n, rng):
    s = md.structure
    ctr = md.reference_box.mean(axis=1)
    hw = (md.reference_box[:, 1] - md.reference_box[:, 0]) / 2
    return [ScalarField.from_polynomial(
        scaled_random_polynomial(s.chart_dim, 4, rng, ctr, hw)) for _ in range(n)]


def _report(args, command: str, results: dict, passed: bool) -> dict:
    cfg = {k: v for k, v in sorted(vars(args).items())
           if k not in ("func", "out") and v is not None}
    blob = json.dumps(cfg, sort_keys=True, default=str)
    return {
        "tool": "srcurv",
        "version": __version__,
        "command": command,
        "config": cfg,
        "config_hash": hashlib.sha256(blob.encode()).hexdigest()[:16],
        "seed": getattr(args, "seed", None),
        "passed": bool(passed),
        "results": results,
    }


def _flatten(prefix: str, obj, rows: list) -> None:
    if isinstance(obj, dict):
        for k in sorted(obj):
            _flatten(f"{prefix}.{k}" if prefix else str(k), obj[k], rows)
    elif isinstance(obj, (list, tuple)):
        for i, v in enumerate(obj):
            _flatten(f"{prefix}[{i}]", v, rows)
    else:
        rows.append((prefix, obj))


def _emit(report: dict, args) -> None:
    fmt = getattr(args, "format", "json") or "json"
    if fmt == "json":
        text = json.dumps(report, indent=1, sort_keys=True, default=float) + "\n"
    elif fmt == "csv":
        rows = []
        _flatten("", report, rows)
        text = "key,value\n" + "\n".join(f"{k},{v}" for k, v in rows) + "\n"
    else:
        rows = []
        _flatten("", report, rows)
        width = max(len(k) for k, _ in rows)
        text = "\n".join(f"{k:<{width}}  {v}" for k, v in rows) + "\n"
    out = getattr(args, "out", None)
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _json_safe(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, float) and math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


# -- commands -----------------------------------------------------------------


def cmd_validate(args) -> tuple[dict, bool]:
    md = _load_model(args)
    rng = np.random.default_rng(args.seed)
    pts = md.sample_points(args.points, rng)
    rep = validate_structure(md.structure, pts, args.tol)
    res = {
        "model": md.name,
        "points": args.points,
        "max_xx_residual": float(rep.bracket_xx_residual.max()),
        "max_xz_residual": float(rep.bracket_xz_residual.max()),
        "delta_skew": rep.delta_skew_residual,
        "omega_skew": rep.omega_skew_residual,
        "gamma_skew": rep.gamma_skew_residual,
        "min_span_sigma": float(rep.min_span_singular_value.min()),
    }
    return res, rep.passed


def cmd_verify_bochner(args) -> tuple[dict, bool]:
    md = _load_model(args)
    rng = np.random.default_rng(args.seed)
    worst_h = worst_v = 0.0
    for f in _sample_fields(md, args.fields, rng):
        pts = md.sample_points(args.points, rng)
        br = bochner_residuals(md.structure, f, pts)
        worst_h = max(worst_h, float(np.abs(br.horizontal).max()))
        worst_v = max(worst_v, float(np.abs(br.vertical).max()))
    res = {"model": md.name, "fields": args.fields, "points_per_field": args.points,
           "max_horizontal_residual": worst_h, "max_vertical_residual": worst_v,
           "tol": args.tol}
    return res, worst_h <= args.tol and worst_v <= args.tol


def cmd_certify(args) -> tuple[dict, bool]:
    md = _load_model(args)
    rng = np.random.default_rng(args.seed)
    pts = md.sample_points(args.points, rng)
    cdp = md.cdp
    cert = certify_parameters(md.structure, pts, cdp, args.tol)
    res = {"model": md.name,
           "rho1": cdp.rho1, "rho2": cdp.rho2, "kappa": cdp.kappa,
           "min_r_margin": float(cert.r_margins.min()),
           "max_t_margin": float(cert.t_margins.max()), "tol": args.tol}
    return res, cert.passed


def cmd_constants(args) -> tuple[dict, bool]:
    md = _load_model(args)
    dc = derive_constants(md.cdp)
    res = {"model": md.name,
           "cd_parameters": {"rho1": md.cdp.rho1, "rho2": md.cdp.rho2,
                             "kappa": md.cdp.kappa, "d": md.cdp.d,
                             "vertical_rank": md.cdp.vertical_rank}}
    res.update({k: _json_safe(v) for k, v in dc.as_dict().items()})
    if md.cdp.rho1 > 0:
        numeric, closed, rel = entropy_diameter_quadrature(md.cdp)
        res["diameter_quadrature"] = {"numeric": numeric, "closed_form": closed,
                                      "relative_difference": rel}
    return res, True


def cmd_geodesic(args) -> tuple[dict, bool]:
    md = _load_model(args)
    s = md.structure
    x0 = np.array([float(v) for v in args.x.split(",")])
    u0 = np.array([float(v) for v in args.u.split(",")])
    a0 = np.array([float(v) for v in args.a.split(",")]) if args.a else np.zeros(s.v)
    tr = integrate_geodesic(s, GeodesicState(x0, u0, a0), args.time, args.steps)
    if args.out:
        header = (["t"] + [f"x{c}" for c in range(s.chart_dim)]
                  + [f"u{i}" for i in range(s.d)] + [f"a{p}" for p in range(s.v)])
        rows = [",".join(header)]
        for i in range(len(tr.times)):
            vals = ([tr.times[i]] + list(tr.positions[i]) + list(tr.velocities[i])
                    + list(tr.a))
            rows.append(",".join(repr(float(v)) for v in vals))
        Path(args.out).write_text("\n".join(rows) + "\n")
    res = {"model": md.name, "speed_drift": tr.speed_drift,
           "endpoint": tr.positions[-1].tolist(),
           "exported": bool(args.out)}
    args.out = None  # --out carried the trajectory; the report goes to stdout
    return res, tr.speed_drift < 1e-8


def cmd_distance(args) -> tuple[dict, bool]:
    md = _load_model(args)
    s = md.structure
    x = np.array([float(v) for v in args.x.split(",")])
    y = np.array([float(v) for v in args.y.split(",")])
    from .heat.simulate import is_group_model

    hc = slice(0, s.d) if (is_group_model(md) or md.name.startswith("euclidean")) else None
    res_d = cc_distance(s, x, y, ShootingConfig(tol=args.tol), horizontal_coords=hc)
    res = {"model": md.name, "distance": res_d.value, "status": res_d.status,
           "endpoint_error": res_d.endpoint_error,
           "lower_bound": _json_safe(res_d.lower_bound)}
    ok = res_d.status == "converged" and (
        res_d.lower_bound is None or res_d.value >= res_d.lower_bound - 1e-6)
    return res, ok


def _diffusion_config(args, t):
    from .heat import DiffusionConfig

    return DiffusionConfig(n_paths=args.paths, dt=args.dt, t_max=t, seed=args.seed)


def cmd_simulate(args) -> tuple[dict, bool]:
    from .heat import ensemble_to_bytes, estimate_Ptf, simulate_paths

    md = _load_model(args)
    x0 = (np.array([float(v) for v in args.x.split(",")]) if args.x
          else md.reference_box.mean(axis=1))
    cfg = _diffusion_config(args, args.time)
    ens = simulate_paths(md, x0, cfg)
    mass = estimate_Ptf(md, x0, lambda p: np.ones(len(p)), args.time, cfg, ens=ens)
    if args.out:
        Path(args.out).write_bytes(ensemble_to_bytes(ens))
    res = {"model": md.name, "paths": args.paths, "dt": args.dt, "t": args.time,
           "censored_fraction": ens.censored_fraction(),
           "mass_estimate": mass.mean, "exported": bool(args.out)}
    args.out = None  # --out carried the ensemble; the report goes to stdout
    return res, ens.censored_fraction() < 0.01 and abs(mass.mean - 1.0) < 1e-12


def cmd_check_liyau(args) -> tuple[dict, bool]:
    from .heat import liyau_check

    md = _load_model(args)
    rng = np.random.default_rng(args.seed)
    pts = 0.25 * rng.standard_normal((5, md.structure.chart_dim))

    def bump(p):
        return np.exp(-0.5 * (p ** 2).sum(axis=1))

    cfg = _diffusion_config(args, args.time * 1.2)
    rep = liyau_check(md, bump, args.time, pts, md.cdp, cfg)
    res = {"model": md.name, "t": args.time,
           "slack": rep.slack.tolist(), "stderr": rep.stderr.tolist(),
           "bias": rep.bias.tolist(), "h": rep.h, "delta": rep.delta}
    return res, rep.passed


def cmd_check_harnack(args) -> tuple[dict, bool]:
    from .heat import harnack_check

    md = _load_model(args)
    x = np.zeros(md.structure.chart_dim) if not args.x else \
        np.array([float(v) for v in args.x.split(",")])
    cfg = _diffusion_config(args, args.t2)
    rep = harnack_check(md, x, x, args.t1, args.t2, md.cdp, cfg)
    res = {"model": md.name, "s": args.t1, "t": args.t2,
           "p_lhs": rep.lhs.value, "p_lhs_stderr": rep.lhs.stderr,
           "p_rhs": rep.rhs.value, "p_rhs_stderr": rep.rhs.stderr,
           "factor": rep.factor, "margin": rep.margin, "tolerance": rep.tolerance}
    return res, rep.passed


def cmd_volume(args) -> tuple[dict, bool]:
    from .heat import ball_volume, volume_growth_fit

    md = _load_model(args)
    if md.name.startswith("heisenberg"):
        dist = lambda x, p: heisenberg_distance(p, base=x)
    elif md.name.startswith("euclidean"):
        dist = lambda x, p: np.linalg.norm(p - x, axis=1)
    else:
        raise UsageError(f"volume command supports flat/group models, not {md.name}")
    rng = np.random.default_rng(args.seed)
    x = np.zeros(md.structure.chart_dim)
    radii = [1.0, 2.0, 4.0, 8.0]
    vols, errs = [], []
    for r in radii:
        bv = ball_volume(md, x, r, args.points, dist, rng)
        vols.append(bv.value)
        errs.append(bv.stderr)
    slope, _ = volume_growth_fit(np.array(radii), np.array(vols))
    D = derive_constants(md.cdp).D
    monotone = bool(np.all(np.diff(vols) > 0))
    res = {"model": md.name, "radii": radii, "volumes": vols, "stderr": errs,
           "exponent": slope, "upper_bound_exponent": D}
    return res, monotone and slope <= D + 0.1


def cmd_lambda1(args) -> tuple[dict, bool]:
    from .heat import lambda1_estimate

    md = _load_model(args)
    est = lambda1_estimate(md, n_grid=args.points if args.points != 100 else 48)
    bound = derive_constants(md.cdp).lambda1_bound
    res = {"model": md.name, "lambda1": est.value, "coarse": est.coarse,
           "fine": est.fine, "lichnerowicz_bound": bound}
    return res, est.value >= bound - 0.02 * max(1.0, bound)


def cmd_report_all(args) -> tuple[dict, bool]:
    from .heat import lambda1_estimate, simulate_paths

    rng = np.random.default_rng(args.seed)
    all_ok = True
    out = {}
    for name in models.BUILTIN_NAMES:
        md = models.build(name)
        entry = {}
        pts = md.sample_points(40, rng)
        vrep = validate_structure(md.structure, pts, 1e-9)
        entry["validate"] = vrep.passed
        cert = certify_parameters(md.structure, md.sample_points(100, rng), md.cdp, 1e-9)
        entry["certify"] = cert.passed
        crep = curvature_report(md.structure, md.sample_points(20, rng))
        entry["tensoriality_gap"] = crep.tensoriality_gap
        worst = 0.0
        for f in _sample_fields(md, 3, rng):
            br = bochner_residuals(md.structure, f, md.sample_points(5, rng))
            worst = max(worst, float(np.abs(br.horizontal).max()),
                        float(np.abs(br.vertical).max()))
        entry["bochner_residual"] = worst
        entry["constants"] = {k: _json_safe(v)
                              for k, v in derive_constants(md.cdp).as_dict().items()
                              if k in ("D", "diameter_bound", "lambda1_bound")}
        if md.sim.kind == "chart_poly":
            cfg = _diffusion_config(
                argparse.Namespace(paths=2000, dt=2e-3, seed=args.seed), 0.25)
            ens = simulate_paths(md, md.reference_box.mean(axis=1), cfg)
            entry["censored_fraction"] = ens.censored_fraction()
        if md.compact:
            entry["lambda1"] = lambda1_estimate(md, n_grid=32).value
        ok = (vrep.passed and cert.passed and crep.tensoriality_gap <= 1e-9
              and worst <= 1e-9)
        entry["passed"] = ok
        all_ok = all_ok and ok
        out[name] = entry
    return out, all_ok


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="srcurv",
                                 description="sub-Riemannian curvature toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, points=100):
        p.add_argument("--model", help="builtin model name")
        p.add_argument("--structure", help="srs-v1 structure file")
        p.add_argument("--seed", type=int, default=20240)
        p.add_argument("--tol", type=float, default=1e-9)
        p.add_argument("--points", type=int, default=points)
        p.add_argument("--fields", type=int, default=10)
        p.add_argument("--paths", type=int, default=100000)
        p.add_argument("--dt", type=float, default=1e-3)
        p.add_argument("--out", help="write the report here instead of stdout")
        p.add_argument("--format", choices=("json", "csv", "text"), default="json")
        p.add_argument("--threads", type=int,
                       default=int(os.environ.get("SRC_THREADS", "0")) or None)

    p = sub.add_parser("validate", help="check commutation relations and span")
    common(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("verify-bochner", help="Bochner identity residuals")
    common(p, points=20)
    p.set_defaults(func=cmd_verify_bochner)

    p = sub.add_parser("certify", help="certify (rho1, rho2, kappa)")
    common(p)
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("constants", help="derived constants record")
    common(p)
    p.set_defaults(func=cmd_constants)

    p = sub.add_parser("geodesic", help="integrate a normal geodesic")
    common(p)
    p.add_argument("--x", required=True, help="start point, comma separated")
    p.add_argument("--u", required=True, help="initial horizontal velocity")
    p.add_argument("--a", default="", help="vertical parameters")
    p.add_argument("--time", type=float, default=1.0)
    p.add_argument("--steps", type=int, default=1000)
    p.set_defaults(func=cmd_geodesic)

    p = sub.add_parser("distance", help="Carnot-Caratheodory distance")
    common(p)
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    p.set_defaults(func=cmd_distance)
    p.set_defaults(tol=1e-8)

    p = sub.add_parser("simulate", help="simulate the diffusion")
    common(p)
    p.add_argument("--x", default="")
    p.add_argument("--time", type=float, default=1.0)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("check-liyau", help="Li-Yau gradient estimate check")
    common(p)
    p.add_argument("--time", type=float, default=1.0)
    p.set_defaults(func=cmd_check_liyau)

    p = sub.add_parser("check-harnack", help="kernel Harnack check")
    common(p)
    p.add_argument("--x", default="")
    p.add_argument("--t1", type=float, default=0.5)
    p.add_argument("--t2", type=float, default=1.0)
    p.set_defaults(func=cmd_check_harnack)

    p = sub.add_parser("volume", help="ball volume growth")
    common(p, points=100000)
    p.set_defaults(func=cmd_volume)

    p = sub.add_parser("lambda1", help="first nonzero eigenvalue of -L")
    common(p)
    p.set_defaults(func=cmd_lambda1)

    p = sub.add_parser("report-all", help="battery over all builtin models")
    common(p)
    p.set_defaults(func=cmd_report_all)
    return ap


def run(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return 2 if e.code not in (0, None) else 0
    if getattr(args, "threads", None):
        try:
            import numba

            numba.set_num_threads(max(1, args.threads))
        except Exception:
            pass
    try:
        results, passed = args.func(args)
    except (UsageError, StructureError, ValueError, OSError, KeyError) as e:
        sys.stderr.write(f"error: {e}\n")
        return 2
    except HormanderError as e:
        sys.stderr.write(f"error: {e}\n")
        return 1
    report = _report(args, args.command, results, passed)
    _emit(report, args)
    return 0 if passed else 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
