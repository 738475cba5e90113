#!/usr/bin/env python3
"""
entire_solutions.py - Shooting over β = Δv(0) for Δ²v = e^{4v} on R^4

Every radial entire solution normalized by v(0) = 0 is fixed by β. A shot
ends in one of three classes: the log solution v₀ = ln(√96/(√96+r²)) with
energy 16π², a quadratic solution v ~ −a r² with energy below 16π², or
growth where e^{4v} is not integrable. The boundary between growth and the
quadratic class is β* = Δv₀(0) = √(2/3).
"""

import concurrent.futures
import math
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence

import numpy as np

import radial_engine
from radial_engine import (GROWTH_ABORT, QUADRATIC_ESCAPE, SPHERE_AREA, STEP_FAILURE,
                           OdeConfig, RadialProfile, TerminationEvent)

SQRT96 = math.sqrt(96.0)
BETA_STAR = 8.0 / SQRT96
QUANTUM = 16.0 * math.pi ** 2

LOG_ENTIRE = "LogEntire"
QUADRATIC_ENTIRE = "QuadraticEntire"
GROWTH = "Growth"

EPS_W = 1e-3
LOG_BAND = 0.5
TAIL_FACTOR = 0.9
SLOPE_AGREEMENT = 0.01
PROBE_RMAX = 1e6


class ShootError(ValueError):
    pass


def bubble(r):
    r = np.asarray(r, dtype=float)
    return np.log(SQRT96 / (SQRT96 + r ** 2))


def bubble_derivative(r):
    r = np.asarray(r, dtype=float)
    return -2.0 * r / (SQRT96 + r ** 2)


def bubble_laplacian(r):
    r = np.asarray(r, dtype=float)
    t = SQRT96 + r ** 2
    return 8.0 / t - 4.0 * r ** 2 / t ** 2


def bubble_laplacian_derivative(r):
    r = np.asarray(r, dtype=float)
    t = SQRT96 + r ** 2
    return -24.0 * r / t ** 2 + 16.0 * r ** 3 / t ** 3


def bubble_outer_fraction(R):
    """Share of the 16π² bubble mass lying outside B_R."""
    t = SQRT96 + np.asarray(R, dtype=float) ** 2
    return 288.0 / t ** 2 - 192.0 * SQRT96 / t ** 3


def bubble_profile(r_max: float = 50.0, count: int = 2001) -> RadialProfile:
    return radial_engine.sample_profile(np.linspace(0.0, r_max, count), bubble, bubble_derivative,
                                        bubble_laplacian, bubble_laplacian_derivative)


@dataclass(frozen=True)
class TrajectoryClass:
    tag: str
    a_slope: Optional[float] = None
    r_stop: Optional[float] = None
    confident: bool = True

    def __post_init__(self):
        if self.tag not in (LOG_ENTIRE, QUADRATIC_ENTIRE, GROWTH):
            raise ShootError(f"unknown trajectory class: {self.tag!r}")
        if self.tag == QUADRATIC_ENTIRE and not (self.a_slope and self.a_slope > 0.0):
            raise ShootError(f"quadratic class needs a positive slope, got {self.a_slope!r}")


@dataclass(frozen=True)
class SlopeFit:
    a: float
    a_laplacian: float
    log_coeff: float
    offset: float
    consistent: bool


@dataclass(frozen=True, eq=False)
class ShootResult:
    beta: float
    trajectory: TrajectoryClass
    energy_total: Optional[float]
    energy_tail: Optional[float]
    profile: RadialProfile
    event: TerminationEvent
    slope: Optional[SlopeFit] = None


@dataclass(frozen=True)
class ScanRow:
    beta: float
    tag: Optional[str] = None
    a: Optional[float] = None
    energy: Optional[float] = None
    energy_tail: Optional[float] = None
    r_stop: Optional[float] = None
    error: Optional[str] = None

    def as_dict(self) -> dict:
        return {
            "beta": self.beta,
            "class": self.tag,
            "a": self.a,
            "energy": self.energy,
            "energy_tail": self.energy_tail,
            "r_stop": self.r_stop,
            "error": self.error,
        }


def laplacian_slope(profile: RadialProfile) -> float:
    """a from the Laplacian track: (w + r w′/2)/8 at r_max, exact for w = 8a + B/r²."""
    R = profile.r_max
    return float((profile.w[-1] + R * profile.dw[-1] / 2.0) / 8.0)


def classify_trajectory(profile: RadialProfile, event: TerminationEvent,
                        eps_w: float = EPS_W, log_band: float = LOG_BAND) -> TrajectoryClass:
    if event.kind == GROWTH_ABORT:
        return TrajectoryClass(GROWTH, r_stop=event.r_stop)
    if event.kind == STEP_FAILURE:
        return TrajectoryClass(GROWTH, r_stop=event.r_stop, confident=False)

    r, w = profile.r, profile.w
    R = profile.r_max
    w_end = float(w[-1])
    if event.kind == QUADRATIC_ESCAPE:
        return TrajectoryClass(QUADRATIC_ENTIRE, a_slope=max(laplacian_slope(profile), w_end / 8.0),
                               confident=False)

    outer = (r >= R / 10.0) & (r > 0.0)
    if np.all(np.abs(w[outer] * r[outer] ** 2 - 4.0) < log_band):
        return TrajectoryClass(LOG_ENTIRE)
    if w_end > eps_w:
        a = laplacian_slope(profile)
        return TrajectoryClass(QUADRATIC_ENTIRE, a_slope=a if a > 0.0 else w_end / 8.0)

    # nothing conclusive at r_max; report the nearest class
    if w_end <= 0.0:
        return TrajectoryClass(GROWTH, r_stop=R, confident=False)
    if w_end * R ** 2 > 4.0:
        return TrajectoryClass(QUADRATIC_ENTIRE, a_slope=w_end / 8.0, confident=False)
    return TrajectoryClass(LOG_ENTIRE, confident=False)


def asymptotic_slope(profile: RadialProfile) -> SlopeFit:
    """Least-squares fit of v ≈ −a r² + c ln r + d on the outer quarter of the grid."""
    r = profile.r
    sel = (r >= 0.75 * profile.r_max) & (r > 0.0)
    if np.count_nonzero(sel) < 3:
        raise ShootError("outer quarter holds fewer than 3 nodes")
    rs = r[sel]
    design = np.column_stack([-rs ** 2, np.log(rs), np.ones_like(rs)])
    (a, c, d), *_ = np.linalg.lstsq(design, profile.u[sel], rcond=None)
    a_lap = laplacian_slope(profile)
    consistent = abs(a - a_lap) <= SLOPE_AGREEMENT * max(abs(a_lap), 1e-300)
    return SlopeFit(float(a), a_lap, float(c), float(d), bool(consistent))


def gaussian_tail(u_edge: float, a: float, R: float, R_out: float = math.inf) -> float:
    """2π² ∫_R^{R_out} r³ e^{4u_edge − 4·0.9a(r²−R²)} dr, the bound on quadratic tails."""
    lam = 4.0 * TAIL_FACTOR * a
    e4u = math.exp(4.0 * u_edge)

    def primitive(r):
        # ∫_R^r s³ e^{−λ(s²−R²)} ds
        if math.isinf(r):
            return (1.0 / lam ** 2 + R ** 2 / lam) / 2.0
        x = lam * (r ** 2 - R ** 2)
        return (1.0 / lam ** 2 + R ** 2 / lam - (1.0 / lam ** 2 + r ** 2 / lam) * math.exp(-x)) / 2.0

    return SPHERE_AREA * e4u * primitive(R_out)


def energy_tail(profile: RadialProfile, trajectory: TrajectoryClass) -> Optional[float]:
    R = profile.r_max
    u_edge = float(profile.u[-1])
    if trajectory.tag == QUADRATIC_ENTIRE:
        return gaussian_tail(u_edge, trajectory.a_slope, R)
    if trajectory.tag == LOG_ENTIRE:
        p = -R * float(profile.du[-1])
        if p <= 1.0:
            return math.inf
        return SPHERE_AREA * math.exp(4.0 * u_edge) * R ** 4 / (4.0 * p - 4.0)
    return None


def shoot(beta: float, config: Optional[OdeConfig] = None, eps_w: float = EPS_W,
          log_band: float = LOG_BAND) -> ShootResult:
    """Integrate Δ²v = e^{4v}, v(0) = 0, Δv(0) = beta; classify and weigh the result.

    Once Δv turns negative the trajectory cannot stay integrable, so the
    integrator stops there and reports growth.
    """
    config = replace(config or OdeConfig(), sign_abort=True, escape_abort=False)
    profile, event = radial_engine.integrate_ivp(0.0, beta, None, config)
    if event.kind == STEP_FAILURE:
        raise ShootError(f"integrator failed at r={event.r_stop!r} for beta={beta!r}: {event.message}")

    trajectory = classify_trajectory(profile, event, eps_w, log_band)
    if trajectory.tag == GROWTH:
        return ShootResult(beta, trajectory, None, None, profile, event)

    slope = asymptotic_slope(profile) if trajectory.tag == QUADRATIC_ENTIRE else None
    tail = energy_tail(profile, trajectory)
    total = radial_engine.energy(profile, profile.r_max) + tail
    return ShootResult(beta, trajectory, total, tail, profile, event, slope)


def _growth_side(beta: float, config: OdeConfig) -> bool:
    probe = replace(config, r_max=PROBE_RMAX, max_step=math.inf, sign_abort=True, escape_abort=True)
    _, event = radial_engine.integrate_ivp(0.0, beta, None, probe)
    if event.kind == STEP_FAILURE:
        raise ShootError(f"integrator failed at r={event.r_stop!r} for beta={beta!r}: {event.message}")
    return event.kind == GROWTH_ABORT


def find_beta_star(lo: float, hi: float, tol: float = 1e-8, config: Optional[OdeConfig] = None) -> float:
    """Bisect [lo, hi] between a growth shot and a non-growth shot down to width tol.

    Sides are decided by following each shot until Δv vanishes (growth) or
    r²Δv exceeds 4, which the log solution never does (quadratic).
    """
    config = config or OdeConfig()
    if not (lo < hi and tol > 0.0):
        raise ShootError(f"invalid bracket [{lo!r}, {hi!r}] with tol {tol!r}")
    if not _growth_side(lo, config):
        raise ShootError(f"bracket invalid: shot at lo={lo!r} does not grow")
    if _growth_side(hi, config):
        raise ShootError(f"bracket invalid: shot at hi={hi!r} grows")
    while hi - lo > tol:
        mid = (lo + hi) / 2.0
        if _growth_side(mid, config):
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2.0


def scan_row(beta: float, config: Optional[OdeConfig] = None, eps_w: float = EPS_W,
             log_band: float = LOG_BAND) -> ScanRow:
    try:
        if not math.isfinite(beta):
            raise ShootError(f"beta must be finite: {beta!r}")
        result = shoot(beta, config, eps_w, log_band)
    except Exception as e:
        return ScanRow(beta, error=str(e))
    t = result.trajectory
    return ScanRow(beta, t.tag, t.a_slope, result.energy_total, result.energy_tail, t.r_stop)


def energy_vs_beta_scan(betas: Sequence[float], config: Optional[OdeConfig] = None,
                        workers: int = 1, eps_w: float = EPS_W,
                        log_band: float = LOG_BAND) -> List[ScanRow]:
    """Independent shots for every β; rows come back in input order."""
    betas = [float(b) for b in betas]
    if workers <= 1 or len(betas) <= 1:
        return [scan_row(b, config, eps_w, log_band) for b in betas]

    rows: List[Optional[ScanRow]] = [None] * len(betas)
    with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as executor:
        futures = {executor.submit(scan_row, b, config, eps_w, log_band): i for i, b in enumerate(betas)}
        for future in concurrent.futures.as_completed(futures):
            i = futures[future]
            try:
                rows[i] = future.result()
            except Exception as e:
                rows[i] = ScanRow(betas[i], error=f"worker failed: {e}")
    return rows
