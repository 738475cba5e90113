#!/usr/bin/env python3
"""
radial_engine.py - Radial calculus in R^4 for Δ²u = V e^{4u}

Works with the minus-sign Laplacian Δu = −(u″ + 3u′/r). Holds the sampled
profile types, the fourth-order ODE integrator started off the removable
singularity at r = 0 by a Taylor seed, r³-weighted Gauss–Legendre energies
and the radial Poisson solver used for every nested biharmonic solve.

Profiles are immutable; every function here is pure and safe to call from
concurrent workers.
"""

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Optional, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.integrate import solve_ivp
from scipy.interpolate import BPoly, CubicHermiteSpline

# |S^3|, the area of the unit sphere in R^4
SPHERE_AREA = 2.0 * math.pi ** 2

REACHED_RMAX = "ReachedRmax"
GROWTH_ABORT = "GrowthAbort"
STEP_FAILURE = "StepFailure"
QUADRATIC_ESCAPE = "QuadraticEscape"

ZERO_AT_ORIGIN = "zero-at-origin"
ZERO_AT_DELTA = "zero-at-delta"

GAUSS_X4, GAUSS_W4 = leggauss(4)
GAUSS_X8, GAUSS_W8 = leggauss(8)

RadialFunction = Callable[[np.ndarray], np.ndarray]


class RadialEngineError(ValueError):
    pass


def unit_weight(r):
    return np.ones_like(np.asarray(r, dtype=float))


def as_vectorized(f: Callable) -> RadialFunction:
    """Wrap f so constants like `lambda r: 1.0` broadcast over array input."""
    def wrapped(r):
        r = np.asarray(r, dtype=float)
        return np.broadcast_to(np.asarray(f(r), dtype=float), r.shape)
    return wrapped


def _frozen(values, name: str) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim != 1:
        raise RadialEngineError(f"{name} must be one-dimensional, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class RadialGrid:
    nodes: np.ndarray
    origin_included: bool = False

    def __post_init__(self):
        nodes = _frozen(self.nodes, "nodes")
        if nodes.size == 0:
            raise RadialEngineError("grid has no nodes")
        if np.any(nodes < 0.0):
            raise RadialEngineError(f"negative radius in grid: {nodes.min()!r}")
        if np.any(np.diff(nodes) <= 0.0):
            raise RadialEngineError("grid nodes must be strictly increasing")
        if self.origin_included and nodes[0] != 0.0:
            raise RadialEngineError(f"origin_included but first node is {nodes[0]!r}")
        object.__setattr__(self, "nodes", nodes)

    @classmethod
    def from_nodes(cls, nodes) -> "RadialGrid":
        nodes = np.asarray(nodes, dtype=float)
        return cls(nodes, origin_included=bool(nodes.size and nodes[0] == 0.0))

    def __len__(self) -> int:
        return int(self.nodes.size)


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """Sampled radial function with u′, w = Δu and w′ on a strictly increasing grid.

    `mass`, when present, is the cumulative ∫₀^r e^{4u} s³ ds integrated
    alongside the ODE; energy() prefers it over re-quadrature.
    """
    grid: RadialGrid
    u: np.ndarray
    du: np.ndarray
    w: np.ndarray
    dw: np.ndarray
    mass: Optional[np.ndarray] = None

    def __post_init__(self):
        n = len(self.grid)
        for name in ("u", "du", "w", "dw", "mass"):
            values = getattr(self, name)
            if values is None:
                continue
            arr = _frozen(values, name)
            if arr.size != n:
                raise RadialEngineError(f"{name} has {arr.size} values for {n} nodes")
            object.__setattr__(self, name, arr)
        if self.grid.origin_included and (self.du[0] != 0.0 or self.dw[0] != 0.0):
            raise RadialEngineError("odd derivatives must vanish at the origin")

    @property
    def r(self) -> np.ndarray:
        return self.grid.nodes

    @property
    def r_max(self) -> float:
        return float(self.grid.nodes[-1])

    @cached_property
    def ddu(self) -> np.ndarray:
        # u″ = −w − 3u′/r, and u″(0) = −w(0)/4 under even extension
        r = self.r
        out = np.empty_like(self.u)
        inner = r > 0.0
        out[inner] = -self.w[inner] - 3.0 * self.du[inner] / r[inner]
        out[~inner] = -self.w[~inner] / 4.0
        return out

    @cached_property
    def interpolant(self) -> BPoly:
        """Quintic Hermite interpolant of u from (u, u′, u″) at every node."""
        return BPoly.from_derivatives(self.r, np.column_stack([self.u, self.du, self.ddu]))

    @cached_property
    def laplacian_interpolant(self) -> CubicHermiteSpline:
        return CubicHermiteSpline(self.r, self.w, self.dw)

    def _check_range(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        lo, hi = self.r[0], self.r_max
        tol = 1e-12 * max(1.0, hi)
        if np.any(r < lo - tol) or np.any(r > hi + tol):
            raise RadialEngineError(f"radius outside profile range [{lo!r}, {hi!r}]")
        return np.clip(r, lo, hi)

    def at(self, r):
        return self.interpolant(self._check_range(r))

    def du_at(self, r):
        return self.interpolant.derivative()(self._check_range(r))

    def w_at(self, r):
        return self.laplacian_interpolant(self._check_range(r))

    def dw_at(self, r):
        return self.laplacian_interpolant.derivative()(self._check_range(r))


def sample_profile(nodes, u: Callable, du: Callable, w: Callable, dw: Callable) -> RadialProfile:
    """Build a profile from closed-form callables for u, u′, Δu and (Δu)′."""
    grid = RadialGrid.from_nodes(nodes)
    r = grid.nodes
    du_vals = np.array(as_vectorized(du)(r), dtype=float)
    dw_vals = np.array(as_vectorized(dw)(r), dtype=float)
    if grid.origin_included:
        du_vals[0] = 0.0
        dw_vals[0] = 0.0
    return RadialProfile(grid, as_vectorized(u)(r), du_vals, as_vectorized(w)(r), dw_vals)


@dataclass(frozen=True)
class OdeConfig:
    rtol: float = 1e-10
    atol: float = 1e-12
    r_seed: Optional[float] = None
    r_max: float = 50.0
    u_ceiling: float = 50.0
    max_step: float = 0.25
    first_step: Optional[float] = None
    sign_abort: bool = False
    escape_abort: bool = False

    def __post_init__(self):
        if not (self.rtol > 0.0 and self.atol > 0.0):
            raise RadialEngineError(f"tolerances must be positive: rtol={self.rtol!r} atol={self.atol!r}")
        if self.r_seed is not None and not (0.0 < self.r_seed < 1e-2):
            raise RadialEngineError(f"r_seed must lie in (0, 1e-2): {self.r_seed!r}")
        if not math.isfinite(self.u_ceiling):
            raise RadialEngineError("u_ceiling must be finite")
        if not self.r_max > 0.0:
            raise RadialEngineError(f"r_max must be positive: {self.r_max!r}")
        if not self.max_step > 0.0:
            raise RadialEngineError(f"max_step must be positive: {self.max_step!r}")

    def seed_radius(self, u0: float, beta: float) -> float:
        if self.r_seed is not None:
            return self.r_seed
        scale = 1.0
        if beta != 0.0:
            scale = min(scale, math.sqrt(8.0 / abs(beta)))
        return 1e-4 * min(scale, math.exp(-u0))


@dataclass(frozen=True, eq=False)
class TerminationEvent:
    kind: str
    r_stop: float
    state: Tuple[float, ...]
    message: str = ""


def radial_laplacian(r, u) -> np.ndarray:
    """Δu = −(u″ + 3u′/r) by three-point differences on a non-uniform grid.

    A first node at r = 0 is treated by even extension, giving Δu(0) = −4u″(0).
    """
    r = np.asarray(r, dtype=float)
    u = np.asarray(u, dtype=float)
    if r.size < 3:
        raise RadialEngineError(f"grid too coarse for a Laplacian: {r.size} nodes")
    if u.shape != r.shape:
        raise RadialEngineError("values and nodes differ in length")

    h = np.diff(r)
    d1 = np.empty_like(u)
    d2 = np.empty_like(u)

    h1, h2 = h[:-1], h[1:]
    um, u0, up = u[:-2], u[1:-1], u[2:]
    d1[1:-1] = -h2 / (h1 * (h1 + h2)) * um + (h2 - h1) / (h1 * h2) * u0 + h1 / (h2 * (h1 + h2)) * up
    d2[1:-1] = 2.0 * (um / (h1 * (h1 + h2)) - u0 / (h1 * h2) + up / (h2 * (h1 + h2)))

    a, b = h[0], h[1]
    d1[0] = -(2 * a + b) / (a * (a + b)) * u[0] + (a + b) / (a * b) * u[1] - a / (b * (a + b)) * u[2]
    d2[0] = 2.0 * (u[0] / (a * (a + b)) - u[1] / (a * b) + u[2] / (b * (a + b)))

    a, b = h[-2], h[-1]
    d1[-1] = b / (a * (a + b)) * u[-3] - (a + b) / (a * b) * u[-2] + (a + 2 * b) / (b * (a + b)) * u[-1]
    d2[-1] = 2.0 * (u[-3] / (a * (a + b)) - u[-2] / (a * b) + u[-1] / (b * (a + b)))

    out = np.empty_like(u)
    inner = r > 0.0
    out[inner] = -(d2[inner] + 3.0 * d1[inner] / r[inner])
    if r[0] == 0.0:
        out[0] = -4.0 * 2.0 * (u[1] - u[0]) / h[0] ** 2
    return out


def laplacian_of(fun: Callable, r, h=None) -> np.ndarray:
    """Richardson-extrapolated central-difference Laplacian of a radial callable."""
    fun = as_vectorized(fun)
    r = np.atleast_1d(np.asarray(r, dtype=float))
    if h is None:
        h = 1e-2 * np.where(r > 0.0, r, 1.0)
    h = np.broadcast_to(np.asarray(h, dtype=float), r.shape)

    def central(step):
        out = np.empty_like(r)
        inner = r > 0.0
        ri, hi = r[inner], step[inner]
        fp, f0, fm = fun(ri + hi), fun(ri), fun(ri - hi)
        d2 = (fp - 2.0 * f0 + fm) / hi ** 2
        d1 = (fp - fm) / (2.0 * hi)
        out[inner] = -(d2 + 3.0 * d1 / ri)
        ho = step[~inner]
        out[~inner] = -8.0 * (fun(ho) - fun(np.zeros_like(ho))) / ho ** 2
        return out

    return (4.0 * central(h / 2.0) - central(h)) / 3.0


def taylor_seed(u0: float, beta: float, V0: float, r_seed: float) -> np.ndarray:
    """State (u, u′, w, w′) at r_seed from the quartic expansion about r = 0."""
    if not r_seed > 0.0:
        raise RadialEngineError(f"r_seed must be positive: {r_seed!r}")
    c = V0 * math.exp(4.0 * u0)
    r = r_seed
    return np.array([
        u0 - beta * r ** 2 / 8.0 + c * r ** 4 / 192.0,
        -beta * r / 4.0 + c * r ** 3 / 48.0,
        beta - c * r ** 2 / 8.0,
        -c * r / 4.0,
    ])


def integrate_ivp(u0: float, beta: float, V: Optional[Callable] = None,
                  config: Optional[OdeConfig] = None) -> Tuple[RadialProfile, TerminationEvent]:
    """Integrate Δ²u = V e^{4u}, u(0) = u0, Δu(0) = beta outward with DOP853.

    The state is (u, u′, w, w′, m) with u″ = −3u′/r − w, w″ = −3w′/r − V e^{4u}
    and m′ = e^{4u} r³. Every accepted step becomes a grid node; the origin is
    prepended with its exact values.
    """
    config = config or OdeConfig()
    weight = V or (lambda r: 1.0)
    r_seed = config.seed_radius(u0, beta)
    if r_seed >= config.r_max:
        raise RadialEngineError(f"r_seed {r_seed!r} not below r_max {config.r_max!r}")

    V0 = float(weight(0.0))
    seed = taylor_seed(u0, beta, V0, r_seed)
    y0 = np.append(seed, math.exp(4.0 * u0) * r_seed ** 4 / 4.0)
    exp_cap = 4.0 * (config.u_ceiling + 10.0)

    def rhs(r, y):
        u, du, w, dw, _ = y
        e4u = math.exp(min(4.0 * u, exp_cap))
        return [du, -w - 3.0 * du / r, dw, -float(weight(r)) * e4u - 3.0 * dw / r, e4u * r ** 3]

    def growth(r, y):
        return y[0] - config.u_ceiling
    growth.terminal = True
    growth.direction = 1

    events = [growth]
    kinds = [GROWTH_ABORT]
    if config.sign_abort:
        def sign_change(r, y):
            return y[2]
        sign_change.terminal = True
        sign_change.direction = -1
        events.append(sign_change)
        kinds.append(GROWTH_ABORT)
    if config.escape_abort:
        def escape(r, y):
            return y[2] * r * r - 4.0
        escape.terminal = True
        escape.direction = 1
        events.append(escape)
        kinds.append(QUADRATIC_ESCAPE)

    options = {"rtol": config.rtol, "atol": config.atol, "max_step": config.max_step}
    if config.first_step is not None:
        options["first_step"] = config.first_step
    sol = solve_ivp(rhs, (r_seed, config.r_max), y0, method="DOP853", events=events, **options)

    t = sol.t
    y = sol.y
    keep = np.concatenate([[True], np.diff(t) > 0.0])
    t, y = t[keep], y[:, keep]

    r = np.concatenate([[0.0], t])
    profile = RadialProfile(
        RadialGrid(r, origin_included=True),
        np.concatenate([[u0], y[0]]),
        np.concatenate([[0.0], y[1]]),
        np.concatenate([[beta], y[2]]),
        np.concatenate([[0.0], y[3]]),
        mass=np.concatenate([[0.0], y[4]]),
    )

    state = tuple(float(v) for v in y[:4, -1])
    if sol.status == -1:
        # u blows up at a finite radius long before any ceiling is representable;
        # a step collapse while Δu < 0 and u still rises is that blow-up
        blowing_up = state[2] < 0.0 and state[1] > 0.0
        event = TerminationEvent(GROWTH_ABORT if blowing_up else STEP_FAILURE, float(t[-1]), state, sol.message)
    elif sol.status == 1:
        fired = next(i for i, hits in enumerate(sol.t_events) if len(hits))
        event = TerminationEvent(kinds[fired], float(t[-1]), state, sol.message)
    else:
        event = TerminationEvent(REACHED_RMAX, float(t[-1]), state, sol.message)
    return profile, event


def gauss_segments(fun: RadialFunction, a, b, x=GAUSS_X4, wts=GAUSS_W4) -> np.ndarray:
    """Gauss–Legendre integral of fun over each [a_i, b_i]; vectorized over segments."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    half = (b - a) / 2.0
    mid = (b + a) / 2.0
    pts = mid[..., None] + half[..., None] * x
    return np.sum(fun(pts) * wts, axis=-1) * half


def energy(profile: RadialProfile, R: float, V: Optional[Callable] = None) -> float:
    """2π² ∫₀^R V e^{4u} r³ dr on the profile's own grid."""
    r = profile.r
    if R < r[0] or R > profile.r_max * (1.0 + 1e-12):
        raise RadialEngineError(f"R={R!r} outside profile range [{r[0]!r}, {profile.r_max!r}]")
    R = min(R, profile.r_max)
    weight = as_vectorized(V) if V is not None else unit_weight
    u_at = profile.interpolant

    def density(s):
        return weight(s) * np.exp(4.0 * u_at(s)) * s ** 3

    j = int(np.searchsorted(r, R, side="right")) - 1
    if V is None and profile.mass is not None:
        total = float(profile.mass[j])
    else:
        total = float(np.sum(gauss_segments(density, r[:j], r[1:j + 1])))
    if R > r[j]:
        total += float(gauss_segments(density, np.array([r[j]]), np.array([R]))[0])
    return SPHERE_AREA * total


def _moment_to(f: RadialFunction, a, x):
    # ∫_a^x s³ f(s) ds, vectorized over matching arrays a, x
    return gauss_segments(lambda s: s ** 3 * f(s), a, x, GAUSS_X8, GAUSS_W8)


def _check_origin_singularity(f: RadialFunction):
    near = f(np.array([1e-6, 1e-3]))
    if not np.all(np.isfinite(near)):
        raise RadialEngineError("source is not finite near the origin")
    g_inner = 1e-12 * abs(near[0])
    g_outer = 1e-6 * abs(near[1])
    if g_inner > 0.0 and g_inner >= 0.5 * g_outer:
        raise RadialEngineError("source is singular like r^-2 or worse at the origin")


def solve_radial_poisson(f: Callable, mode: str = ZERO_AT_ORIGIN, r_max: float = 1.0,
                         nodes=None, delta: Optional[float] = None) -> RadialProfile:
    """Solve Δψ = f radially via ψ′(r) = −r⁻³ ∫₀^r s³ f(s) ds.

    mode zero-at-origin normalizes ψ(0) = 0; zero-at-delta normalizes ψ(δ) = 0
    with δ defaulting to the outer node. The returned profile stores Δψ = f.
    """
    if mode not in (ZERO_AT_ORIGIN, ZERO_AT_DELTA):
        raise RadialEngineError(f"unknown Poisson mode: {mode!r}")
    f = as_vectorized(f)
    _check_origin_singularity(f)

    if nodes is None:
        count = max(201, int(math.ceil(r_max / 0.02)) + 1)
        nodes = np.linspace(0.0, r_max, count)
    nodes = np.asarray(nodes, dtype=float)
    if mode == ZERO_AT_DELTA and delta is not None:
        if not nodes[0] <= delta <= nodes[-1]:
            raise RadialEngineError(f"delta {delta!r} outside grid")
        nodes = np.union1d(nodes, [delta])
    if nodes[0] != 0.0:
        nodes = np.concatenate([[0.0], nodes])
    grid = RadialGrid(nodes, origin_included=True)

    lo, hi = nodes[:-1], nodes[1:]
    moments = np.concatenate([[0.0], np.cumsum(_moment_to(f, lo, hi))])

    def dpsi(x, idx):
        return -(moments[idx] + _moment_to(f, nodes[idx], x)) / x ** 3

    # ψ increments per interval by 8-point Gauss on ψ′
    half = (hi - lo) / 2.0
    pts = ((hi + lo) / 2.0)[:, None] + half[:, None] * GAUSS_X8
    idx = np.broadcast_to(np.arange(lo.size)[:, None], pts.shape)
    increments = np.sum(dpsi(pts, idx) * GAUSS_W8, axis=1) * half
    psi = np.concatenate([[0.0], np.cumsum(increments)])

    du = np.zeros_like(nodes)
    du[1:] = -moments[1:] / nodes[1:] ** 3

    if mode == ZERO_AT_DELTA:
        anchor = nodes[-1] if delta is None else delta
        psi = psi - psi[int(np.searchsorted(nodes, anchor))]

    w = np.array(f(nodes), dtype=float)
    if not math.isfinite(w[0]):
        w[0] = float(f(np.array([1e-3 * nodes[1]]))[0])
    dw = np.gradient(w, nodes, edge_order=2)
    dw[0] = 0.0
    return RadialProfile(grid, psi, du, w, dw)
