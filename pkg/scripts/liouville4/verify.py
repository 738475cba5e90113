#!/usr/bin/env python3
"""
verify.py - Acceptance suite for the numerical modules

Each criterion is a function of the RunConfig returning a CheckLog, so it can
run in a worker process; results are printed and reported in criterion order
whatever order they finish in. --tol replaces every numeric threshold, which
makes a forced failure easy to provoke.
"""

import concurrent.futures
import hashlib
import math
import tempfile
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

import diagnostics
import entire_solutions
import export
import families
import greens_pohozaev
import radial_engine
from console import CheckLog
from entire_solutions import BETA_STAR, QUANTUM
from runconfig import RunConfig

CHECK_BETAS = (1.0, 1.5, 2.0)
LOG_KS = (8, 16, 32, 64)
QUAD1_KS = (4, 8, 16, 32, 64)
QUAD1_BETA = 1.5
QUAD2_KS = (2, 3, 4)
CHECK_DELTA = 0.5


class VerifyError(ValueError):
    pass


def _limit(cfg: RunConfig, default: float) -> float:
    return default if cfg.tol is None else cfg.tol


def _compare(result: CheckLog, label: str, value: float, limit: float):
    if value < limit:
        result.pass_msg(f"{label}: {value:.3e} < {limit:.1e}")
    else:
        result.fail_msg(f"{label}: {value:.3e} >= {limit:.1e}")


def check_beta_star(cfg: RunConfig) -> CheckLog:
    result = CheckLog("beta_star")
    beta = entire_solutions.find_beta_star(0.5, 1.0, 1e-8, cfg.ode)
    error = abs(beta - BETA_STAR)
    result.data.update(beta_star=beta, error=error)
    _compare(result, f"beta* = {beta!r} against sqrt(2/3)", error, _limit(cfg, 1e-6))
    return result


def check_closed_form(cfg: RunConfig) -> CheckLog:
    result = CheckLog("closed_form")
    shot = entire_solutions.shoot(BETA_STAR, cfg.ode, cfg.eps_w, cfg.log_band)
    profile = shot.profile
    deviation = float(np.max(np.abs(profile.u - entire_solutions.bubble(profile.r))))
    result.data.update(r_max=profile.r_max, sup_deviation=deviation, tag=shot.trajectory.tag)
    if profile.r_max < cfg.ode.r_max * (1.0 - 1e-12):
        result.fail_msg(f"shot at beta* stopped at r={profile.r_max!r} ({shot.event.kind})")
    if shot.trajectory.tag != entire_solutions.LOG_ENTIRE:
        result.fail_msg(f"shot at beta* classified {shot.trajectory.tag}")
    _compare(result, f"sup|v - v0| on [0, {profile.r_max:g}]", deviation, _limit(cfg, 1e-6))
    return result


def check_quantization(cfg: RunConfig) -> CheckLog:
    result = CheckLog("quantization")
    bubble = families.log_family(1)
    inner = diagnostics.member_mass(bubble, 100.0, quadrature=True)
    tail = QUANTUM * float(entire_solutions.bubble_outer_fraction(100.0))
    error = abs((inner + tail) / QUANTUM - 1.0)
    result.data.update(energy=inner + tail, tail=tail, relative_error=error)
    _compare(result, f"energy of v0 = {inner + tail!r} against 16pi^2", error, _limit(cfg, 1e-8))
    return result


def check_sub_quantization(cfg: RunConfig) -> CheckLog:
    result = CheckLog("sub_quantization")
    margin = 1e-3 * QUANTUM
    rows = entire_solutions.energy_vs_beta_scan(CHECK_BETAS, cfg.ode, 1, cfg.eps_w, cfg.log_band)
    result.data["rows"] = [row.as_dict() for row in rows]
    for row in rows:
        if row.error:
            result.fail_msg(f"beta={row.beta!r}: {row.error}")
        elif row.tag != entire_solutions.QUADRATIC_ENTIRE:
            result.fail_msg(f"beta={row.beta!r}: class {row.tag}, expected {entire_solutions.QUADRATIC_ENTIRE}")
        elif not margin < row.energy < QUANTUM - margin:
            result.fail_msg(f"beta={row.beta!r}: energy {row.energy!r} not inside (0, 16pi^2) by {margin:.3g}")
        else:
            result.pass_msg(f"beta={row.beta!r}: energy/16pi^2 = {row.energy / QUANTUM:.6f}, a = {row.a:.6g}")
    return result


def _regime(result: CheckLog, label: str, members, delta: float, want: str) -> diagnostics.DiagnosticSeries:
    series = diagnostics.diagnostic_series(members, delta)
    report = diagnostics.regime_classify(series)
    result.data[label] = report.as_dict()
    if report.regime == want and report.slope is not None:
        result.pass_msg(f"{label}: regime {report.regime}, d_k trend slope {report.slope:.3f}")
    else:
        result.fail_msg(f"{label}: regime {report.regime}, expected {want}")
    return series


def check_trichotomy(cfg: RunConfig) -> CheckLog:
    result = CheckLog("trichotomy")
    _regime(result, "log", [families.log_family(k) for k in LOG_KS], CHECK_DELTA, diagnostics.REGIME_LOG)

    entire = entire_solutions.shoot(QUAD1_BETA, cfg.ode, cfg.eps_w, cfg.log_band)
    if entire.trajectory.tag != entire_solutions.QUADRATIC_ENTIRE:
        result.fail_msg(f"quad1 backing shot at beta={QUAD1_BETA!r} classified {entire.trajectory.tag}")
    else:
        members = [families.quad1_family(k, entire) for k in QUAD1_KS]
        series = _regime(result, "quad1", members, CHECK_DELTA, diagnostics.REGIME_QUADRATIC)
        d_last = series.d_k[-1]
        target = 8.0 * entire.trajectory.a_slope
        result.data["quad1_d_over_8a"] = d_last / target
        _compare(result, f"quad1 d_{QUAD1_KS[-1]} against 8a = {target:.6g}", abs(d_last / target - 1.0),
                 _limit(cfg, 0.02))

    table = families.phi_table()
    _regime(result, "quad2", [families.quad2_family(k, table) for k in QUAD2_KS], CHECK_DELTA,
            diagnostics.REGIME_FLAT)
    return result


def check_log_mass(cfg: RunConfig) -> CheckLog:
    result = CheckLog("log_mass")
    member = families.log_family(64)
    out_frac = float(entire_solutions.bubble_outer_fraction(64 * CHECK_DELTA))
    want = QUANTUM * (1.0 - out_frac)
    quadrature = diagnostics.member_mass(member, CHECK_DELTA, quadrature=True)
    result.data.update(mass=quadrature, out_frac=out_frac)
    result.info_msg(f"outFrac(32) = {out_frac:.4e}")
    _compare(result, "quadrature against closed form", abs(quadrature / want - 1.0), _limit(cfg, 1e-8))
    _compare(result, "mass(B_1/2) against 16pi^2", abs(quadrature / QUANTUM - 1.0), _limit(cfg, 1e-3))
    return result


def check_quad2_mass(cfg: RunConfig) -> CheckLog:
    result = CheckLog("quad2_mass")
    table = families.phi_table()
    members = [families.quad2_family(k, table) for k in (2, 3)]
    for member in members:
        k = member.k
        # e^{-50} of the Gaussian lies outside this radius
        total = diagnostics.member_mass(member, 10.0 / k ** 3, quadrature=True)
        want = 4.0 * math.pi ** 2 / k ** 8
        result.data[f"mass_k{k:g}"] = total
        _compare(result, f"k={k:g} total mass against 4pi^2/k^8", abs(total / want - 1.0), _limit(cfg, 1e-6))
    series = diagnostics.diagnostic_series(members, 0.0)
    for k, d in zip(series.k_values, series.d_k):
        _compare(result, f"k={k:g} d_k at origin against k^4", abs(d / k ** 4 - 1.0), _limit(cfg, 1e-12))
    return result


def check_neck(cfg: RunConfig) -> CheckLog:
    result = CheckLog("neck")
    member = families.log_family(64)
    outer = entire_solutions.bubble_outer_fraction
    edge = float(outer(member.k * CHECK_DELTA))
    for R in sorted(cfg.neck_R):
        neck = (diagnostics.member_mass(member, CHECK_DELTA, quadrature=True)
                - diagnostics.member_mass(member, R * member.mu, quadrature=True))
        want = QUANTUM * (float(outer(R)) - edge)
        result.data[f"neck_R{R:g}"] = neck
        _compare(result, f"R={R:g} neck {neck:.6g} against 16pi^2 outFrac", abs(neck / want - 1.0),
                 _limit(cfg, 1e-2))
    closed = [diagnostics.neck_energy(member, CHECK_DELTA, R) for R in sorted(cfg.neck_R)]
    if all(a > b for a, b in zip(closed, closed[1:])):
        result.pass_msg("neck energy decreasing in R")
    else:
        result.fail_msg(f"neck energy not decreasing in R: {closed!r}")
    return result


def check_pohozaev(cfg: RunConfig) -> CheckLog:
    result = CheckLog("pohozaev")
    worst = greens_pohozaev.identity_gap(np.random.default_rng(cfg.seed), cfg.pohozaev_samples)
    result.data["worst_identity_gap"] = worst
    _compare(result, f"{cfg.pohozaev_samples} random profiles, volume against boundary", worst,
             _limit(cfg, 1e-8))

    terms = greens_pohozaev.pohozaev_terms(families.log_family(1), 50.0)
    result.data["bubble"] = terms.as_dict()
    _compare(result, f"v0 boundary term {terms.boundary:.6g} at r=50 against -16pi^2",
             abs(terms.boundary / -QUANTUM - 1.0), _limit(cfg, 5e-3))
    return result


def _paraboloid(delta: float) -> radial_engine.RadialProfile:
    return radial_engine.sample_profile(np.linspace(0.0, delta, 101), lambda r: -r ** 2 / 8.0,
                                        lambda r: -r / 4.0, lambda r: 1.0, lambda r: 0.0)


def check_representation(cfg: RunConfig) -> CheckLog:
    result = CheckLog("representation")
    delta = CHECK_DELTA
    bubble = greens_pohozaev.representation_residual(families.log_family(1), delta)
    biharmonic = greens_pohozaev.representation_residual(_paraboloid(1.0), delta, V=lambda r: 0.0)
    r = np.linspace(0.05 * delta, 0.9 * delta, 20)
    lap = radial_engine.laplacian_of(lambda x: greens_pohozaev.h_delta_at_zero(x, delta), r)
    green = greens_pohozaev.g_delta_radial(r, 0.0, delta)
    fd = float(np.max(np.abs(lap / green - 1.0)))
    result.data.update(bubble=bubble, biharmonic=biharmonic, laplacian_of_h=fd)
    _compare(result, "v0 representation residual on B_1/2", bubble, _limit(cfg, 1e-7))
    _compare(result, "biharmonic representation residual", biharmonic, _limit(cfg, 1e-12))
    _compare(result, "Laplacian of H(., 0) against G(., 0) at 20 radii", fd, _limit(cfg, 1e-6))
    return result


def _spread(values: Sequence[float]) -> float:
    values = [v for v in values if v is not None]
    lo = min(values)
    return math.inf if lo <= 0.0 else max(values) / lo


def check_estimates(cfg: RunConfig) -> CheckLog:
    result = CheckLog("estimates")
    wpe = diagnostics.wpe_sup(families.log_family(1), (0.0, 50.0))
    result.data["wpe_bubble"] = wpe
    _compare(result, f"wpe_sup of v0 = {wpe:.8f} against 96^(1/4)/2", abs(wpe - 96.0 ** 0.25 / 2.0),
             _limit(cfg, 1e-6))

    reports = diagnostics.estimate_series([families.log_family(k) for k in LOG_KS], CHECK_DELTA, cfg.intvk_R, 1.0)
    result.data["log_family"] = [rep.as_dict() for rep in reports]
    for name in ("wpe_sup", "intvk_ratio"):
        spread = _spread([getattr(rep, name) for rep in reports])
        _compare(result, f"log family {name} max/min", spread, _limit(cfg, 3.0))
    # r|u′| < 2 on the log family, so ef1 stays below 2 + δ²Δu(δ)/4
    ef1_ratio = max(rep.ef1_sup / (2.0 + CHECK_DELTA ** 2 * float(families.log_family(rep.k).lap(CHECK_DELTA)) / 4.0)
                    for rep in reports)
    result.data["log_ef1_bound_ratio"] = ef1_ratio
    _compare(result, "log family ef1_sup over 2 + delta^2 lap(delta)/4", ef1_ratio, _limit(cfg, 1.0))
    for rep in reports:
        if rep.mono_radius != CHECK_DELTA:
            result.fail_msg(f"log k={rep.k:g}: r e^u breaks monotonicity at {rep.mono_radius!r}")
    if all(rep.mono_radius == CHECK_DELTA for rep in reports):
        result.pass_msg("log family: r e^u decreasing on [4 mu_k, delta]")

    member = families.log_family(16)
    ratios = [diagnostics.intvk_ratio(member, CHECK_DELTA, R) for R in (2.0, 4.0, 6.0)]
    _compare(result, "intvk_ratio max/min over R = 2, 4, 6", _spread(ratios), _limit(cfg, 3.0))

    table = families.phi_table()
    quad2 = [families.quad2_family(k, table) for k in (2, 3)]
    ef1 = [diagnostics.ef1_sup(m, CHECK_DELTA) for m in quad2]
    ef2 = [diagnostics.ef2_residual(m, CHECK_DELTA) for m in quad2]
    result.data.update(quad2_ef1=ef1, quad2_ef2=ef2)
    _compare(result, "quad2 ef1_sup k=3 over k=2", ef1[1] / ef1[0], _limit(cfg, 2.0 + 1e-12))
    _compare(result, "quad2 ef2_residual k=3 over k=2", ef2[1] / ef2[0], _limit(cfg, 1.5 + 1e-12))
    return result


def write_reference_outputs(out: export.OutputDir, cfg: RunConfig):
    """A small fixed set of outputs whose manifest must not change between runs."""
    out.write_csv("profile_bubble.csv", export.PROFILE_COLUMNS,
                  export.profile_rows(entire_solutions.bubble_profile(5.0, 101)))
    members = [families.log_family(k) for k in LOG_KS]
    series = diagnostics.diagnostic_series(members, CHECK_DELTA)
    out.write_csv("series_log.csv", export.SERIES_COLUMNS, export.series_rows(series))
    out.write_json("regime_log.json", diagnostics.regime_classify(series).as_dict())
    rng = np.random.default_rng(cfg.seed)
    samples = [greens_pohozaev.pohozaev_terms(greens_pohozaev.random_smooth_profile(rng), 1.0).as_dict()
               for _ in range(5)]
    out.write_json("pohozaev_samples.json", samples)
    return out.write_manifest(cfg.as_dict())


def check_determinism(cfg: RunConfig) -> CheckLog:
    result = CheckLog("determinism")
    manifests = []
    for _ in range(2):
        with tempfile.TemporaryDirectory() as tmp:
            path = write_reference_outputs(export.OutputDir(tmp, quiet=True), cfg)
            with open(path, "rb") as f:
                manifests.append(f.read())
    result.data["manifest_sha256"] = hashlib.sha256(manifests[0]).hexdigest()
    if manifests[0] == manifests[1]:
        result.pass_msg("two exports produced byte-identical manifests")
    else:
        result.fail_msg("manifests differ between two exports of one config")
    return result


CRITERIA: Tuple[Tuple[str, Callable[[RunConfig], CheckLog]], ...] = (
    ("beta_star", check_beta_star),
    ("closed_form", check_closed_form),
    ("quantization", check_quantization),
    ("sub_quantization", check_sub_quantization),
    ("trichotomy", check_trichotomy),
    ("log_mass", check_log_mass),
    ("quad2_mass", check_quad2_mass),
    ("neck", check_neck),
    ("pohozaev", check_pohozaev),
    ("representation", check_representation),
    ("estimates", check_estimates),
    ("determinism", check_determinism),
)
CRITERION_NAMES = tuple(name for name, _ in CRITERIA)


def select(only: Optional[str]) -> List[str]:
    if not only:
        return list(CRITERION_NAMES)
    names = [n.strip() for n in only.split(",") if n.strip()]
    unknown = [n for n in names if n not in CRITERION_NAMES]
    if unknown or not names:
        raise VerifyError(f"unknown criteria {unknown!r}; choose from {', '.join(CRITERION_NAMES)}")
    return sorted(set(names), key=CRITERION_NAMES.index)


def run_check(name: str, cfg: RunConfig) -> CheckLog:
    try:
        return dict(CRITERIA)[name](cfg)
    except Exception as e:
        result = CheckLog(name)
        result.fail_msg(f"raised {type(e).__name__}: {e}")
        return result


def run_checks(cfg: RunConfig, names: Sequence[str]) -> List[CheckLog]:
    if cfg.workers <= 1 or len(names) <= 1:
        results = [run_check(n, cfg) for n in names]
    else:
        results = []
        with concurrent.futures.ProcessPoolExecutor(max_workers=cfg.workers) as executor:
            futures = {executor.submit(run_check, n, cfg): n for n in names}
            for future in concurrent.futures.as_completed(futures):
                try:
                    results.append(future.result())
                except Exception as e:
                    result = CheckLog(futures[future])
                    result.fail_msg(f"Parallel verification failed: {e}")
                    results.append(result)
    results.sort(key=lambda r: CRITERION_NAMES.index(r.name))
    return results


def report(results: Sequence[CheckLog]) -> Dict[str, object]:
    errors = sum(r.errors for r in results)
    warnings = sum(r.warnings for r in results)
    return {
        "valid": errors == 0,
        "errors": errors,
        "warnings": warnings,
        "failed": [r.name for r in results if not r.passed],
        "criteria": {r.name: {"passed": r.passed, "errors": r.errors, "warnings": r.warnings, "data": r.data}
                     for r in results},
    }
