#!/usr/bin/env python3
"""
lab.py - Command-line front end for the radial Liouville lab

Subcommands drive the numerical modules and write CSV/JSON into the output
directory, closing every run with manifest.json. Exit codes: 0 success,
1 runtime error or failed criterion, 2 usage error.

  lab.py shoot --beta 0.8164966 --rmax 50
  lab.py family --kind log --k 8,16,32 --delta 0.5
  lab.py verify --only pohozaev
"""

import argparse
import os
import sys
import time
from typing import List, Optional

import numpy as np

import console
import diagnostics
import entire_solutions
import export
import families
import greens_pohozaev
import radial_engine
import runconfig
import verify
from entire_solutions import BETA_STAR, QUANTUM
from runconfig import ConfigError, RunConfig

SCRIPT_DIR = os.path.dirname(os.path.abspath(__file__))
REPO_ROOT = os.path.dirname(os.path.dirname(SCRIPT_DIR))
DEFAULT_CONFIG = os.path.join(REPO_ROOT, "config.json")

POHOZAEV_RADII = (1.0, 2.0, 5.0, 10.0, 20.0, 50.0)
NECK_CURVE_POINTS = 40


def _label(value: float) -> str:
    return export.format_number(float(value))


def _parse_bracket(text: str):
    parts = text.split(":")
    try:
        lo, hi = (float(p) for p in parts)
    except ValueError:
        raise ConfigError(f"bracket must be lo:hi, got {text!r}")
    return lo, hi


def cmd_shoot(cfg: RunConfig, args, out: export.OutputDir) -> dict:
    if args.beta_range:
        rows = entire_solutions.energy_vs_beta_scan(cfg.scan_betas, cfg.ode, cfg.workers, cfg.eps_w, cfg.log_band)
        out.write_csv("shoot_scan.csv", export.SCAN_COLUMNS, export.scan_rows(rows))
        for row in rows:
            if row.error:
                console.warn_msg(f"beta={row.beta!r}: {row.error}")
        return {"rows": [row.as_dict() for row in rows]}

    result = entire_solutions.shoot(args.beta, cfg.ode, cfg.eps_w, cfg.log_band)
    name = f"shoot_{_label(args.beta)}"
    summary = export.shoot_summary(result)
    out.write_csv(f"{name}.csv", export.PROFILE_COLUMNS, export.profile_rows(result.profile))
    out.write_json(f"{name}.json", summary)
    energy = "n/a" if result.energy_total is None else f"{result.energy_total / QUANTUM:.9f} x 16pi^2"
    console.info_msg(f"beta={args.beta!r}: {result.trajectory.tag}, energy {energy}")
    return summary


def cmd_scan(cfg: RunConfig, args, out: export.OutputDir) -> dict:
    rows = entire_solutions.energy_vs_beta_scan(cfg.scan_betas, cfg.ode, cfg.workers, cfg.eps_w, cfg.log_band)
    out.write_csv("scan.csv", export.SCAN_COLUMNS, export.scan_rows(rows))
    errors = [row for row in rows if row.error]
    for row in errors:
        console.warn_msg(f"beta={row.beta!r}: {row.error}")
    console.info_msg(f"{len(rows)} shots, {len(errors)} failed")
    return {"rows": [row.as_dict() for row in rows]}


def _neck_fit(member: families.FamilyMember, delta: float) -> Optional[dict]:
    r0 = 96.0 ** 0.25 * member.mu
    if delta / r0 <= 2.0:
        return None
    x = np.geomspace(1.0, delta / r0, 200)
    fit = diagnostics.fit_neck_profile(x, diagnostics.neck_samples(member, r0, x))
    return {"k": member.k, "a": fit.a, "rms": fit.rms, "a_free": fit.a_free, "rho_free": fit.rho_free,
            "rms_free": fit.rms_free, "is_neck": fit.is_neck, "turning_point": fit.turning_point,
            "energy_from_a": greens_pohozaev.energy_from_a(max(fit.a, 0.0))}


def cmd_family(cfg: RunConfig, args, out: export.OutputDir) -> dict:
    kind, delta = cfg.family_kind, cfg.delta
    spec = families.FamilySpec(kind, cfg.k_values, cfg.beta)
    members = sorted(families.build_family(spec, config=cfg.ode), key=lambda m: m.k)
    for member in members:
        out.write_csv(f"members/{kind}_k{export.k_label(member.k)}.csv", export.MEMBER_COLUMNS,
                      export.member_rows(member, export.member_grid(member, delta)))

    series = diagnostics.diagnostic_series(members, delta, cfg.workers)
    report = diagnostics.regime_classify(series)
    out.write_csv(f"series_{kind}.csv", export.SERIES_COLUMNS, export.series_rows(series))

    inside = [m for m in members if cfg.intvk_R * m.mu < delta]
    skipped = len(members) - len(inside)
    if skipped:
        console.info_msg(f"estimates skip {skipped} member(s) with R*mu >= delta")
    estimates = diagnostics.estimate_series(inside, delta, cfg.intvk_R, cfg.eta, cfg.workers)

    necks = [(m.k, R, diagnostics.neck_energy(m, delta, R)) for m in members for R in sorted(cfg.neck_R)
             if R * m.mu < delta]
    out.write_csv(f"necks_{kind}.csv", ("k", "R", "neck_energy"), necks)

    summary = {
        "kind": kind,
        "delta": delta,
        "beta": cfg.beta,
        "regime": report.as_dict(),
        "estimates": [e.as_dict() for e in estimates],
        "neck_fits": [fit for fit in (_neck_fit(m, delta) for m in members) if fit is not None],
        "monotonicity": [{"k": m.k, "case": diagnostics.monotonicity_case(m, delta)} for m in members],
    }
    out.write_json(f"regime_{kind}.json", summary)
    alpha = "n/a" if report.alpha is None else f"{report.alpha / QUANTUM:.6f} x 16pi^2"
    console.info_msg(f"{kind}: regime {report.regime} (confident={report.confident}), alpha {alpha}")
    return summary


def cmd_classify(cfg: RunConfig, args, out: export.OutputDir) -> dict:
    rows = entire_solutions.energy_vs_beta_scan(cfg.scan_betas, cfg.ode, cfg.workers, cfg.eps_w, cfg.log_band)
    summary = {"rows": [{"beta": r.beta, "class": r.tag, "a": r.a, "error": r.error} for r in rows]}
    for row in rows:
        console.info_msg(f"beta={row.beta!r}: {row.tag or row.error}")
    if args.bracket:
        lo, hi = _parse_bracket(args.bracket)
        beta = entire_solutions.find_beta_star(lo, hi, args.bisect_tol, cfg.ode)
        summary["beta_star"] = {"value": beta, "bracket": [lo, hi], "tol": args.bisect_tol,
                                "error": abs(beta - BETA_STAR)}
        console.info_msg(f"beta* = {beta!r} (closed form {BETA_STAR!r})")
    out.write_json("classify.json", summary)
    return summary


def cmd_greens(cfg: RunConfig, args, out: export.OutputDir) -> dict:
    delta = cfg.delta
    r = np.linspace(0.02 * delta, delta, 50)
    H = greens_pohozaev.h_delta_at_zero(r, delta)
    G = greens_pohozaev.g_delta_radial(r, 0.0, delta)
    lap = radial_engine.laplacian_of(lambda x: greens_pohozaev.h_delta_at_zero(x, delta), r[:-1])
    out.write_csv("greens_h.csv", ("r", "H", "G", "lap_H"), zip(r, H, G, list(lap) + [None]))

    spec = families.FamilySpec(cfg.family_kind, cfg.k_values, cfg.beta)
    members = sorted(families.build_family(spec, config=cfg.ode), key=lambda m: m.k)
    rows = []
    for member in members:
        row = {"k": member.k, "representation_residual": greens_pohozaev.representation_residual(member, delta)}
        if cfg.family_kind == families.LOG_FAMILY:
            row["green_limit_residual"] = greens_pohozaev.green_limit_residual(member, delta, lower=0.2 * delta)
        rows.append(row)
        console.info_msg(f"k={member.k:g}: representation residual {row['representation_residual']:.3e}")
    summary = {"kind": cfg.family_kind, "delta": delta, "members": rows,
               "laplacian_of_h_max_rel_error": float(np.max(np.abs(lap / G[:-1] - 1.0)))}
    out.write_json("greens.json", summary)
    return summary


def cmd_pohozaev(cfg: RunConfig, args, out: export.OutputDir) -> dict:
    beta = BETA_STAR if args.beta is None else args.beta
    result = entire_solutions.shoot(beta, cfg.ode, cfg.eps_w, cfg.log_band)
    profile = result.profile
    radii = sorted({min(R, profile.r_max) for R in (runconfig.parse_list(args.r) if args.r else POHOZAEV_RADII)})
    rows = []
    for R in radii:
        terms = greens_pohozaev.pohozaev_terms(profile, R, V=radial_engine.unit_weight)
        rows.append((R, terms.volume, terms.boundary, terms.rhs_energy_form, radial_engine.energy(profile, R)))
    out.write_csv(f"pohozaev_{_label(beta)}.csv", ("r", "volume", "boundary", "rhs_energy_form", "energy"), rows)

    worst = greens_pohozaev.identity_gap(np.random.default_rng(cfg.seed), cfg.pohozaev_samples)
    summary = {"shot": export.shoot_summary(result), "random_profiles": cfg.pohozaev_samples, "seed": cfg.seed,
               "worst_identity_gap": worst}
    out.write_json(f"pohozaev_{_label(beta)}.json", summary)
    console.info_msg(f"{cfg.pohozaev_samples} random profiles: worst identity gap {worst:.3e}")
    return summary


def cmd_verify(cfg: RunConfig, args, out: export.OutputDir) -> dict:
    names = verify.select(args.only)
    console.section("Acceptance criteria")
    results = verify.run_checks(cfg, names)
    for result in results:
        console.section(result.name)
        result.emit()
    data = verify.report(results)
    out.write_json("verify.json", data)
    return data


def cmd_export_plotdata(cfg: RunConfig, args, out: export.OutputDir) -> dict:
    out.write_csv("plot/bubble_profile.csv", export.PROFILE_COLUMNS,
                  export.profile_rows(entire_solutions.bubble_profile(cfg.ode.r_max, 2001)))
    rows = entire_solutions.energy_vs_beta_scan(cfg.scan_betas, cfg.ode, cfg.workers, cfg.eps_w, cfg.log_band)
    out.write_csv("plot/energy_vs_beta.csv", export.SCAN_COLUMNS, export.scan_rows(rows))

    kinds = [families.LOG_FAMILY, families.QUAD2_FAMILY]
    if cfg.beta is not None:
        kinds.insert(1, families.QUAD1_FAMILY)
    else:
        console.info_msg("no beta configured, skipping the quad1 series")
    regimes = {}
    for kind in kinds:
        spec = families.FamilySpec(kind, cfg.k_values, cfg.beta)
        members = families.build_family(spec, config=cfg.ode)
        series = diagnostics.diagnostic_series(members, cfg.delta, cfg.workers)
        out.write_csv(f"plot/series_{kind}.csv", export.SERIES_COLUMNS, export.series_rows(series))
        regimes[kind] = diagnostics.regime_classify(series).regime

    member = families.log_family(max(cfg.k_values))
    top = 0.99 * cfg.delta / member.mu
    outer = entire_solutions.bubble_outer_fraction
    curve = []
    radii = np.geomspace(1.0, top, NECK_CURVE_POINTS) if top > 1.0 else []
    for R in radii:
        predicted = QUANTUM * float(outer(R) - outer(member.k * cfg.delta))
        curve.append((float(R), diagnostics.neck_energy(member, cfg.delta, float(R)), predicted))
    out.write_csv("plot/neck_curve_log.csv", ("R", "neck_energy", "closed_form"), curve)
    return {"regimes": regimes, "files": sorted(out.written)}


COMMANDS = {
    "shoot": cmd_shoot,
    "scan": cmd_scan,
    "family": cmd_family,
    "classify": cmd_classify,
    "greens": cmd_greens,
    "pohozaev": cmd_pohozaev,
    "verify": cmd_verify,
    "export-plotdata": cmd_export_plotdata,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file (default: config.json at the repository root)")
    common.add_argument("--out", help="Output directory (overrides LIOUVILLE4_OUTPUT_DIR and the config)")
    common.add_argument("--workers", type=int, help="Worker count for scans (default: PARALLEL or 1)")
    common.add_argument("--json", dest="json_out", help="Also write the command summary JSON to this path")

    parser = argparse.ArgumentParser(description="Radial solutions of the fourth-order Liouville equation on R^4")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("shoot", parents=[common], help="Shoot one beta, or a beta range")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--beta", type=float, help="Delta v(0)")
    group.add_argument("--beta-range", help="a:b:h, inclusive")
    p.add_argument("--rmax", type=float, help="Integration radius")
    p.add_argument("--tol", type=float, help="Relative integrator tolerance")

    p = sub.add_parser("scan", parents=[common], help="Energy against beta")
    p.add_argument("--beta-range", help="a:b:h, inclusive")
    p.add_argument("--rmax", type=float, help="Integration radius")

    p = sub.add_parser("family", parents=[common], help="Build a family and classify its regime")
    p.add_argument("--kind", choices=families.FAMILY_KINDS)
    p.add_argument("--k", help="Comma-separated k values")
    p.add_argument("--delta", type=float)
    p.add_argument("--beta", type=float, help="Backing entire solution for quad1")

    p = sub.add_parser("classify", parents=[common], help="Classify shots and optionally bisect for beta*")
    p.add_argument("--beta", help="Comma-separated betas")
    p.add_argument("--bracket", help="lo:hi bracket for beta*")
    p.add_argument("--bisect-tol", type=float, default=1e-8)
    p.add_argument("--rmax", type=float, help="Integration radius")
    p.add_argument("--tol", type=float, help="Relative integrator tolerance")

    p = sub.add_parser("greens", parents=[common], help="Green kernels and representation residuals")
    p.add_argument("--kind", choices=families.FAMILY_KINDS)
    p.add_argument("--k", help="Comma-separated k values")
    p.add_argument("--delta", type=float)
    p.add_argument("--beta", type=float)

    p = sub.add_parser("pohozaev", parents=[common], help="Pohozaev balance along a shot")
    p.add_argument("--beta", type=float, help="Delta v(0) (default: beta*)")
    p.add_argument("--r", help="Comma-separated radii")
    p.add_argument("--samples", type=int, help="Random profiles in the identity check")

    p = sub.add_parser("verify", parents=[common], help="Run the acceptance suite")
    p.add_argument("--only", help="Comma-separated criteria: " + ",".join(verify.CRITERION_NAMES))
    p.add_argument("--tol", type=float, help="Replace every numeric threshold")

    p = sub.add_parser("export-plotdata", parents=[common], help="Plot-ready CSV bundle")
    p.add_argument("--k", help="Comma-separated k values")
    p.add_argument("--delta", type=float)
    p.add_argument("--beta", type=float)
    return parser


def overrides_from_args(args) -> dict:
    """Flags in config-file shape; flags a subcommand lacks read as None."""
    def get(name):
        return getattr(args, name, None)

    scan_betas = None
    if get("beta_range"):
        scan_betas = list(runconfig.parse_range(args.beta_range))
    elif args.command == "classify" and get("beta"):
        scan_betas = list(runconfig.parse_list(args.beta))
    family_beta = get("beta") if args.command in ("family", "greens", "export-plotdata") else None
    return {
        "ode": {"r_max": get("rmax"), "rtol": get("tol") if args.command in ("shoot", "classify") else None},
        "families": {"kind": get("kind"), "k": get("k"), "delta": get("delta"), "beta": family_beta},
        "scan": {"betas": scan_betas},
        "verify": {"tol": get("tol") if args.command == "verify" else None, "pohozaev_samples": get("samples")},
        "output_dir": args.out,
        "workers": args.workers,
    }


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    try:
        config_path = args.config or (DEFAULT_CONFIG if os.path.exists(DEFAULT_CONFIG) else None)
        cfg = runconfig.resolve(runconfig.load_config(config_path), overrides_from_args(args))
        if args.command == "verify":
            verify.select(args.only)
    except (ConfigError, verify.VerifyError) as e:
        console.log("ERROR", str(e))
        return 2

    started = time.monotonic()
    console.section(f"{args.command} -> {cfg.output_dir}")
    out = export.OutputDir(cfg.output_dir)
    try:
        summary = COMMANDS[args.command](cfg, args, out)
    except (ConfigError, verify.VerifyError) as e:
        console.log("ERROR", str(e))
        return 2
    except Exception as e:
        console.log("ERROR", f"{args.command} failed: {e}")
        return 1
    out.write_manifest(cfg.as_dict())

    if args.json_out:
        try:
            with open(args.json_out, "w", encoding="utf-8") as f:
                f.write(export.dumps_json(summary))
            console.log("INFO", f"Wrote {args.json_out}")
        except OSError as e:
            console.fail_msg(f"Failed to write JSON output: {e}")
            return 1
    console.log("INFO", f"Finished in {time.monotonic() - started:.1f}s")

    if args.command == "verify":
        for name in summary["failed"]:
            console.log("ERROR", f"criterion failed: {name}")
        return console.summary(summary["errors"], summary["warnings"])
    return 0


if __name__ == "__main__":
    sys.exit(main())
