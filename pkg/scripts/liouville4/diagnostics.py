#!/usr/bin/env python3
"""
diagnostics.py - Regime classification and estimate suite for blow-up families

A family member u_k carries μ_k = e^{−u_k(0)}. The scalar d_k = μ_k²Δu_k(δ)
separates the regimes of a blowing-up radial sequence:

  ii.a  d_k → 0        rescaled profiles tend to the log solution, mass 16π²
  ii.b  d_k → K > 0    quadratic entire limit with mass in (0, 16π²)
  ii.c  d_k → ∞        profiles flatten to −|x|²/8, mass tends to 0

Bounded u_k(0) is regime i. Alongside the classifier sit the neck energy,
the rescaled profile, and the sup-type estimates the regimes are proved
with, each evaluated on a grid and refined locally.
"""

import concurrent.futures
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq, minimize_scalar

import radial_engine
from entire_solutions import QUANTUM
from families import FamilyMember
from radial_engine import GAUSS_W8, GAUSS_X8, SPHERE_AREA, RadialProfile

REGIME_BOUNDED = "i"
REGIME_LOG = "ii.a"
REGIME_QUADRATIC = "ii.b"
REGIME_FLAT = "ii.c"
INCONCLUSIVE = "inconclusive"

TREND_SLOPE = 0.5
BOUNDED_RANGE = 10.0
ALPHA_TOLERANCE = 1e-2
FLAT_ALPHA = 1e-2 * QUANTUM

NONNEGATIVE = "nonnegative"
NONPOSITIVE = "nonpositive"
SIGN_CHANGE = "sign-change"

NECK_RMS = 0.05
SAMPLES = 2001
MASS_SEGMENTS = 400
INTVK_SEGMENTS = 256


class DiagnosticsError(ValueError):
    pass


@dataclass(frozen=True)
class DiagnosticSeries:
    k_values: Tuple[float, ...]
    d_k: Tuple[float, ...]
    delta: float
    mu: Tuple[float, ...] = ()
    u0: Tuple[float, ...] = ()
    mass_delta: Tuple[float, ...] = ()

    def __post_init__(self):
        if not 0.0 <= self.delta < 1.0:
            raise DiagnosticsError(f"delta must lie in [0, 1): {self.delta!r}")
        if not all(math.isfinite(d) for d in self.d_k):
            raise DiagnosticsError("non-finite d_k in series")
        if len(self.d_k) != len(self.k_values):
            raise DiagnosticsError("d_k and k_values differ in length")

    def rows(self) -> List[dict]:
        return [{"k": k, "mu": mu, "d_k": d, "mass_delta": m}
                for k, mu, d, m in zip(self.k_values, self.mu, self.d_k, self.mass_delta)]


@dataclass(frozen=True)
class RegimeReport:
    regime: str
    slope: Optional[float]
    alpha: Optional[float]
    confident: bool
    u0_range: float = 0.0
    u0_slope: float = 0.0
    d_last: Optional[float] = None

    def as_dict(self) -> dict:
        return {
            "regime": self.regime,
            "slope": self.slope,
            "alpha": self.alpha,
            "alpha_over_quantum": None if self.alpha is None else self.alpha / QUANTUM,
            "confident": self.confident,
            "u0_range": self.u0_range,
            "u0_slope": self.u0_slope,
            "d_last": self.d_last,
        }


@dataclass(frozen=True)
class EstimateReport:
    k: float
    wpe_sup: float
    ef1_sup: float
    intvk_ratio: float
    ef2_dev: Optional[float]
    mono_radius: float
    passed: Dict[str, bool] = field(default_factory=dict)

    def __post_init__(self):
        for name in ("wpe_sup", "ef1_sup", "intvk_ratio", "ef2_dev", "mono_radius"):
            value = getattr(self, name)
            if value is not None and value < 0.0:
                raise DiagnosticsError(f"{name} must be nonnegative, got {value!r}")

    def as_dict(self) -> dict:
        return {
            "k": self.k,
            "wpe_sup": self.wpe_sup,
            "ef1_sup": self.ef1_sup,
            "intvk_ratio": self.intvk_ratio,
            "ef2_dev": self.ef2_dev,
            "mono_radius": self.mono_radius,
            "passed": dict(sorted(self.passed.items())),
        }


@dataclass(frozen=True)
class NeckFit:
    """Constrained a ln(1/x) + (a−1)(x²−1)/2 next to the free a ln(1/x) − ρ(x²−1)/8."""
    a: float
    rms: float
    a_free: float
    rho_free: float
    rms_free: float
    threshold: float = NECK_RMS

    @property
    def is_neck(self) -> bool:
        return self.rms <= self.threshold

    @property
    def turning_point(self) -> Optional[float]:
        # where a ln(1/x) + (a−1)(x²−1)/2 stops decreasing; a pure log never does
        if self.a <= 1.0 + 1e-9:
            return None
        return math.sqrt(self.a / (self.a - 1.0))


def _map_members(fn: Callable, members: Sequence, workers: int) -> list:
    if workers <= 1 or len(members) <= 1:
        return [fn(m) for m in members]
    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(fn, members))


def _grid_sup(fun: Callable, lo: float, hi: float, samples: int = SAMPLES) -> float:
    """max of fun on [lo, hi]: grid search, then a bounded scalar search around the best node."""
    r = np.linspace(lo, hi, samples)
    values = np.asarray(fun(r), dtype=float)
    i = int(np.argmax(values))
    best = float(values[i])
    a, b = r[max(i - 1, 0)], r[min(i + 1, r.size - 1)]
    if b > a:
        res = minimize_scalar(lambda s: -float(fun(s)), bounds=(a, b), method="bounded",
                              options={"xatol": 1e-12 * max(1.0, b)})
        if res.success:
            best = max(best, -float(res.fun))
    return best


def _callables(source) -> Tuple[Callable, Callable]:
    """(u′, Δu) callables for a member or a sampled profile."""
    if isinstance(source, RadialProfile):
        return source.du_at, source.w_at
    return source.du, source.lap


def member_mass(member: FamilyMember, R: float, quadrature: bool = False) -> float:
    """∫_{B_R} V e^{4u} dx, from the member's closed form unless quadrature is asked for."""
    if R < 0.0:
        raise DiagnosticsError(f"radius must be nonnegative: {R!r}")
    member.check_domain(R)
    if R == 0.0:
        return 0.0
    if member.mass is not None and not quadrature:
        return float(member.mass(R))
    inner = min(member.mu, R)
    nodes = np.unique(np.concatenate([[0.0], np.geomspace(1e-3 * inner, R, MASS_SEGMENTS)]))
    pieces = radial_engine.gauss_segments(lambda s: member.density(s) * s ** 3, nodes[:-1], nodes[1:],
                                          GAUSS_X8, GAUSS_W8)
    return SPHERE_AREA * float(np.sum(pieces))


def _series_entry(member: FamilyMember, delta: float) -> Tuple[float, float, float, float, float]:
    member.check_domain(delta)
    d = member.mu ** 2 * float(member.lap(delta))
    return member.k, member.mu, d, member.u0, member_mass(member, delta)


def diagnostic_series(members: Sequence[FamilyMember], delta: float, workers: int = 1) -> DiagnosticSeries:
    """d_k = μ_k²Δu_k(δ) and the ball mass for every member, ordered by k.

    δ = 0 evaluates Δu_k at the origin.
    """
    if not 0.0 <= delta < 1.0:
        raise DiagnosticsError(f"delta must lie in [0, 1): {delta!r}")
    members = sorted(members, key=lambda m: m.k)
    entries = _map_members(lambda m: _series_entry(m, delta), members, workers)
    if not entries:
        return DiagnosticSeries((), (), delta)
    k, mu, d, u0, mass = (tuple(float(v) for v in col) for col in zip(*entries))
    return DiagnosticSeries(k, d, delta, mu, u0, mass)


def alpha_extrapolate(k_values: Sequence[float], masses: Sequence[float]) -> float:
    """Limit of m(k) = α + C k^{−p} through the last three members.

    Falls back to the last mass when the tail is not monotone and contracting.
    """
    k = np.asarray(k_values, dtype=float)
    m = np.asarray(masses, dtype=float)
    if k.size == 0 or k.size != m.size:
        raise DiagnosticsError("need matching, non-empty k values and masses")
    if k.size < 3:
        return float(m[-1])
    (k1, k2, k3), (m1, m2, m3) = k[-3:], m[-3:]
    d1, d2 = m2 - m1, m3 - m2
    if d1 == 0.0 or d2 == 0.0 or (d1 > 0.0) != (d2 > 0.0) or abs(d2) >= abs(d1):
        return float(m3)
    ratio = d1 / d2

    def mismatch(p):
        return (k1 ** -p - k2 ** -p) / (k2 ** -p - k3 ** -p) - ratio

    try:
        p = brentq(mismatch, 1e-3, 30.0, xtol=1e-12)
    except ValueError:
        return float(m3)
    C = d2 / (k3 ** -p - k2 ** -p)
    return float(m3 - C * k3 ** -p)


def _log_slope(x, y) -> float:
    x = np.asarray(x, dtype=float)
    if np.ptp(x) == 0.0:
        return 0.0
    return float(np.polyfit(x, np.asarray(y, dtype=float), 1)[0])


def regime_classify(series: DiagnosticSeries, masses: Optional[Sequence[float]] = None,
                    s0: float = TREND_SLOPE, alpha_tol: float = ALPHA_TOLERANCE) -> RegimeReport:
    """Place a family in regime i, ii.a, ii.b or ii.c, or report inconclusive.

    The trend is the log-log slope of d_k over members with k ≥ k_max/8, or all
    members when fewer than three qualify. Two members still get a regime from
    the two-point slope, never a confident one.
    """
    masses = list(series.mass_delta if masses is None else masses)
    k = np.asarray(series.k_values, dtype=float)
    d = np.asarray(series.d_k, dtype=float)
    alpha = alpha_extrapolate(k, masses) if masses else None
    if alpha is not None:
        alpha = float(np.clip(alpha, 0.0, QUANTUM))
    if k.size < 2:
        return RegimeReport(INCONCLUSIVE, None, alpha, False)
    enough = k.size >= 3

    u0 = np.asarray(series.u0, dtype=float) if series.u0 else np.zeros_like(k)
    u0_range = float(np.ptp(u0))
    u0_slope = _log_slope(np.log(k), u0)
    d_last = float(d[-1])

    if u0_range < BOUNDED_RANGE and u0_slope < s0:
        return RegimeReport(REGIME_BOUNDED, None, alpha, enough, u0_range, u0_slope, d_last)

    tail = k >= k[-1] / 8.0
    if np.count_nonzero(tail) < 3:
        tail = np.ones_like(k, dtype=bool)
    if np.any(d[tail] <= 0.0):
        return RegimeReport(INCONCLUSIVE, None, alpha, False, u0_range, u0_slope, d_last)
    slope = _log_slope(np.log(k[tail]), np.log(d[tail]))

    def report(regime, confident):
        return RegimeReport(regime, slope, alpha, bool(confident) and enough, u0_range, u0_slope, d_last)

    if slope <= -s0:
        return report(REGIME_LOG, alpha is not None and abs(alpha / QUANTUM - 1.0) <= alpha_tol)
    if slope >= s0:
        if alpha is not None and alpha >= FLAT_ALPHA:
            return report(INCONCLUSIVE, False)
        return report(REGIME_FLAT, True)
    if d_last > 0.0:
        return report(REGIME_QUADRATIC, alpha is not None and 0.0 < alpha < QUANTUM * (1.0 - 1e-3))
    return report(INCONCLUSIVE, False)


def rescaled_v(member: FamilyMember, x):
    """v_k(x) = u_k(μ_k x) − u_k(0)."""
    x = np.abs(np.asarray(x, dtype=float))
    r = member.check_domain(member.mu * x)
    return member.u(r) - member.u0


def neck_energy(member: FamilyMember, delta: float, R: float) -> float:
    """Mass of the annulus B_δ ∖ B_{Rμ_k}."""
    inner = R * member.mu
    if not 0.0 <= inner < delta:
        raise DiagnosticsError(f"R*mu = {inner!r} must lie in [0, delta={delta!r})")
    return member_mass(member, delta) - member_mass(member, inner)


def wpe_sup(member: FamilyMember, omega: Tuple[float, float], samples: int = SAMPLES) -> float:
    """sup of r e^{u(r)} over the annulus omega = (r₁, r₂)."""
    r1, r2 = omega
    if not 0.0 <= r1 < r2:
        raise DiagnosticsError(f"invalid annulus {omega!r}")
    member.check_domain(r2)
    return _grid_sup(lambda r: r * np.exp(member.u(r)), r1, r2, samples)


def ef1_sup(member: FamilyMember, delta: float, samples: int = SAMPLES) -> float:
    """sup over r ≤ δ of r |u′(r) + Δu(δ) r/4|."""
    member.check_domain(delta)
    d = float(member.lap(delta))
    return _grid_sup(lambda r: r * np.abs(member.du(r) + d * r / 4.0), 0.0, delta, samples)


def intvk_ratio(member: FamilyMember, delta: float, R: float, segments: int = INTVK_SEGMENTS) -> float:
    """∫_{B_R} |Δv_k − μ_k²Δu_k(δ)| dx / R²."""
    mu = member.mu
    if not 0.0 < R < delta / mu:
        raise DiagnosticsError(f"R={R!r} must lie in (0, delta/mu={delta / mu!r})")
    member.check_domain(delta)
    d = mu ** 2 * float(member.lap(delta))

    def integrand(s):
        return np.abs(mu ** 2 * member.lap(mu * s) - d) * s ** 3

    nodes = np.linspace(0.0, R, segments + 1)
    pieces = radial_engine.gauss_segments(integrand, nodes[:-1], nodes[1:], GAUSS_X8, GAUSS_W8)
    return SPHERE_AREA * float(np.sum(pieces)) / R ** 2


def ef2_residual(member: FamilyMember, delta: float, samples: int = SAMPLES) -> float:
    """sup |u(x/√D) − u(0) + |x|²/8| / ln(2+|x|²) for D = Δu(δ), over x/√D ≤ δ."""
    member.check_domain(delta)
    D = float(member.lap(delta))
    if not D > 0.0:
        raise DiagnosticsError(f"Laplacian at delta must be positive, got {D!r}")
    scale = math.sqrt(D)
    x = np.linspace(0.0, delta * scale, samples)
    dev = member.u(x / scale) - member.u0 + x ** 2 / 8.0
    return float(np.max(np.abs(dev) / np.log(2.0 + x ** 2)))


def mono_radius(member: FamilyMember, eta: float = 1.0, delta: float = 0.5, R_eta: float = 4.0,
                samples: int = SAMPLES) -> Tuple[float, bool]:
    """Largest r_k ≤ δ with r^η e^{u} nonincreasing on [max(4, R_η)μ_k, r_k].

    break_found is set whenever r_k < δ, including a window that starts
    increasing.
    """
    if not 1.0 <= eta < 2.0:
        raise DiagnosticsError(f"eta must lie in [1, 2): {eta!r}")
    member.check_domain(delta)
    start = max(4.0, R_eta) * member.mu
    if start >= delta:
        return delta, False

    # sign of (r^η e^u)′ is the sign of η + r u′
    def slope(r):
        return eta + r * np.asarray(member.du(r), dtype=float)

    r = np.geomspace(start, delta, samples)
    h = slope(r)
    rising = np.flatnonzero(h > 0.0)
    if rising.size == 0:
        return delta, False
    i = int(rising[0])
    if i == 0:
        return float(start), True
    return float(brentq(lambda s: float(slope(s)), r[i - 1], r[i], xtol=1e-14)), True


def _first_crossing(fun: Callable, r: np.ndarray, values: np.ndarray, downward: bool) -> Optional[float]:
    if downward:
        hits = np.flatnonzero((values[:-1] > 0.0) & (values[1:] <= 0.0))
    else:
        hits = np.flatnonzero((values[:-1] < 0.0) & (values[1:] >= 0.0))
    if hits.size == 0:
        return None
    i = int(hits[0])
    if values[i + 1] == 0.0:
        return float(r[i + 1])
    return float(brentq(lambda s: float(fun(s)), r[i], r[i + 1], xtol=1e-14))


def detect_monotone_breaks(source, delta: float, samples: int = SAMPLES) -> Tuple[Optional[float], Optional[float]]:
    """(s_k, τ_k): first zero of Δu on (0, δ], then the first zero of u′ past it.

    `source` is a FamilyMember or a RadialProfile covering [0, δ].
    """
    du, lap = _callables(source)
    r = np.linspace(0.0, delta, samples)[1:]
    w = np.asarray(lap(r), dtype=float)
    s_k = _first_crossing(lap, r, w, downward=True)
    if s_k is None:
        return None, None
    past = r[r > s_k]
    if past.size < 2:
        return s_k, None
    grid = np.concatenate([[s_k], past])
    tau_k = _first_crossing(du, grid, np.asarray(du(grid), dtype=float), downward=False)
    return s_k, tau_k


def monotonicity_case(source, delta: float, samples: int = SAMPLES) -> str:
    """Which sign pattern Δu shows on B_δ: nonnegative, nonpositive or a sign change."""
    _, lap = _callables(source)
    w = np.asarray(lap(np.linspace(0.0, delta, samples)), dtype=float)
    if np.all(w >= 0.0):
        return NONNEGATIVE
    if np.all(w <= 0.0):
        return NONPOSITIVE
    return SIGN_CHANGE


def neck_samples(member: FamilyMember, r0: float, x) -> np.ndarray:
    """ũ(x) = u(r₀x) − u(r₀), the profile seen from the neck radius r₀."""
    x = np.asarray(x, dtype=float)
    return member.u(member.check_domain(r0 * x)) - float(member.u(r0))


def fit_neck_profile(x, values, threshold: float = NECK_RMS) -> NeckFit:
    x = np.asarray(x, dtype=float)
    y = np.asarray(values, dtype=float)
    if x.shape != y.shape or x.size < 3:
        raise DiagnosticsError("need at least 3 matching samples")
    if np.any(x <= 0.0) or not np.all(np.isfinite(y)):
        raise DiagnosticsError("samples need positive x and finite values")

    log_term = -np.log(x)
    quad_term = x ** 2 - 1.0

    # ũ + (x²−1)/2 = a (ln(1/x) + (x²−1)/2)
    basis = log_term + quad_term / 2.0
    target = y + quad_term / 2.0
    a = float(basis @ target / (basis @ basis))
    rms = float(np.sqrt(np.mean((a * basis - target) ** 2)))

    design = np.column_stack([log_term, -quad_term / 8.0])
    (a_free, rho_free), *_ = np.linalg.lstsq(design, y, rcond=None)
    rms_free = float(np.sqrt(np.mean((design @ [a_free, rho_free] - y) ** 2)))
    return NeckFit(a, rms, float(a_free), float(rho_free), rms_free, threshold)


def estimate_report(member: FamilyMember, delta: float, R: float, eta: float = 1.0,
                    limits: Optional[Dict[str, float]] = None) -> EstimateReport:
    """All sup-type estimates for one member; a flag passes when the value is finite and within its limit."""
    limits = limits or {}
    values = {
        "wpe": wpe_sup(member, (0.0, delta)),
        "ef1": ef1_sup(member, delta),
        "intvk": intvk_ratio(member, delta, R),
    }
    D = float(member.lap(delta))
    values["ef2"] = ef2_residual(member, delta) if D > 0.0 else None
    r_k, _ = mono_radius(member, eta, delta)
    values["mono"] = r_k

    passed = {}
    for name, value in values.items():
        if value is None:
            continue
        passed[name] = bool(math.isfinite(value) and value <= limits.get(name, math.inf))
    return EstimateReport(member.k, values["wpe"], values["ef1"], values["intvk"], values["ef2"], r_k, passed)


def estimate_series(members: Sequence[FamilyMember], delta: float, R: float, eta: float = 1.0,
                    workers: int = 1) -> List[EstimateReport]:
    members = sorted(members, key=lambda m: m.k)
    return _map_members(lambda m: estimate_report(m, delta, R, eta), members, workers)
