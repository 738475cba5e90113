#!/usr/bin/env python3
"""
greens_pohozaev.py - Radial Green kernels on B_δ ⊂ R^4 and the Pohozaev balance

The Dirichlet Green function of Δ, averaged over spheres, is
g(r, s) = (max(r, s)⁻² − δ⁻²)/(4π²). Applying it twice gives the Navier
Green function H_δ = G_δ∗G_δ of Δ², which turns a solution of Δ²u = f on
B_δ into ∫H_δ f + u(δ) + (δ² − |x|²)Δu(δ)/8.

The Pohozaev functional pairs x·∇u with Δ²u. For radial u the volume
integral equals 2π² F(r) with
F = −r⁴w²/2 − 2r³wu′ − r⁴u′w′, w = Δu,
for any smooth profile, solution or not.
"""

import math
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np
from numpy.polynomial import Polynomial

import radial_engine
from families import CLOSED_FORM, FamilyMember
from radial_engine import GAUSS_W8, GAUSS_X8, SPHERE_AREA, RadialProfile

GREEN_SEGMENTS = 32
POHOZAEV_SEGMENTS = 64
FOUR_PI2 = 4.0 * math.pi ** 2


class GreensError(ValueError):
    pass


def g_delta_radial(r, s, delta: float):
    """Spherical mean of the Dirichlet Green function of Δ on B_δ."""
    r = np.asarray(r, dtype=float)
    s = np.asarray(s, dtype=float)
    if np.any(r < 0.0) or np.any(s < 0.0) or np.any(r > delta) or np.any(s > delta):
        raise GreensError(f"radii must lie in [0, delta={delta!r}]")
    outer = np.maximum(r, s)
    if np.any(outer == 0.0):
        raise GreensError("kernel is singular at r = s = 0")
    return (outer ** -2 - delta ** -2) / FOUR_PI2


@dataclass(frozen=True)
class RadialKernel:
    delta: float

    def __post_init__(self):
        if not self.delta > 0.0:
            raise GreensError(f"delta must be positive: {self.delta!r}")

    def __call__(self, r, s):
        return g_delta_radial(r, s, self.delta)

    def apply(self, f: Callable, r):
        return apply_green(f, self.delta, r)


def _cells(lo: np.ndarray, hi: np.ndarray, n: int) -> Tuple[np.ndarray, np.ndarray]:
    edges = lo[:, None] + (hi - lo)[:, None] * np.linspace(0.0, 1.0, n + 1)
    return edges[:, :-1], edges[:, 1:]


def _integral(fun: Callable, lo: np.ndarray, hi: np.ndarray, n: int) -> np.ndarray:
    a, b = _cells(lo, hi, n)
    return np.sum(radial_engine.gauss_segments(fun, a, b, GAUSS_X8, GAUSS_W8), axis=-1)


def apply_green(f: Callable, delta: float, r, segments: int = GREEN_SEGMENTS):
    """p(r) = 2π² ∫₀^δ g(r, s) f(s) s³ ds, so Δp = f on B_δ and p(δ) = 0.

    Evaluated as ½[A(r)/r² + ∫_r^δ s f ds − A(δ)/δ²] with A(r) = ∫₀^r s³ f ds.
    """
    f = radial_engine.as_vectorized(f)
    r = np.asarray(r, dtype=float)
    shape = r.shape
    r = r.ravel()
    if np.any(r < 0.0) or np.any(r > delta * (1.0 + 1e-12)):
        raise GreensError(f"radius outside [0, delta={delta!r}]")
    r = np.minimum(r, delta)

    def moment(s):
        return s ** 3 * f(s)

    inner = _integral(moment, np.zeros_like(r), r, segments)
    outer = _integral(lambda s: s * f(s), r, np.full_like(r, delta), segments)
    total = float(_integral(moment, np.zeros(1), np.array([delta]), segments)[0])
    scaled = np.divide(inner, r ** 2, out=np.zeros_like(r), where=r > 0.0)
    return (0.5 * (scaled + outer - total / delta ** 2)).reshape(shape)


def apply_navier_green(f: Callable, delta: float, r, segments: int = GREEN_SEGMENTS):
    """q = ∫ H_δ(·, y) f(y) dy through two Green applications: Δq = p, Δp = f, q(δ) = p(δ) = 0."""
    def p(s):
        return apply_green(f, delta, s, segments)

    r = np.asarray(r, dtype=float)
    # one outer radius at a time keeps the nested quadrature arrays small
    values = [float(apply_green(p, delta, x, segments)) for x in r.ravel()]
    return np.array(values, dtype=float).reshape(r.shape)


def h_delta_at_zero(r, delta: float):
    """H_δ(x, 0) = ln(δ/|x|)/(8π²) + (|x|² − δ²)/(32π²δ²)."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0.0) or np.any(r > delta):
        raise GreensError(f"radius must lie in (0, delta={delta!r}]")
    return np.log(delta / r) / (8.0 * math.pi ** 2) + (r ** 2 - delta ** 2) / (32.0 * math.pi ** 2 * delta ** 2)


def _representation_parts(source, delta: float, V: Optional[Callable]):
    if isinstance(source, RadialProfile):
        if source.r_max < delta:
            raise GreensError(f"profile ends at {source.r_max!r}, before delta={delta!r}")
        weight = V if V is not None else radial_engine.unit_weight
        return source.at, source.w_at, radial_engine.as_vectorized(weight)
    if delta > source.domain:
        raise GreensError(f"member domain ends at {source.domain!r}, before delta={delta!r}")
    return source.u, source.lap, radial_engine.as_vectorized(V if V is not None else source.V)


def representation_residual(source, delta: float, V: Optional[Callable] = None, radii=None) -> float:
    """sup over [0, 0.9δ] of |u − ∫H_δ V e^{4u} − u(δ) − (δ² − r²)Δu(δ)/8|."""
    u, lap, weight = _representation_parts(source, delta, V)
    r = np.linspace(0.0, 0.9 * delta, 19) if radii is None else np.asarray(radii, dtype=float)

    def forcing(s):
        return weight(s) * np.exp(4.0 * u(s))

    rhs = (apply_navier_green(forcing, delta, r) + float(u(delta))
           + (delta ** 2 - r ** 2) / 8.0 * float(lap(delta)))
    return float(np.max(np.abs(np.asarray(u(r), dtype=float) - rhs)))


def green_limit_residual(member: FamilyMember, delta: float, lower: float = 0.1, samples: int = 41) -> float:
    """sup over [lower, 0.9δ] of |u(r) − u(δ) − (δ² − r²)Δu(δ)/8 − 16π² H_δ(r, 0)|.

    Tends to zero along a family concentrating all of its 16π² at the origin.
    """
    if not 0.0 < lower < 0.9 * delta:
        raise GreensError(f"lower radius {lower!r} must lie in (0, 0.9*delta)")
    member.check_domain(delta)
    r = np.linspace(lower, 0.9 * delta, samples)
    regular = member.u(r) - float(member.u(delta)) - (delta ** 2 - r ** 2) / 8.0 * float(member.lap(delta))
    return float(np.max(np.abs(regular - 16.0 * math.pi ** 2 * h_delta_at_zero(r, delta))))


@dataclass(frozen=True)
class PohozaevTerms:
    r: float
    volume: float
    boundary: float
    rhs_energy_form: float

    def as_dict(self) -> dict:
        return {"r": self.r, "volume": self.volume, "boundary": self.boundary,
                "rhs_energy_form": self.rhs_energy_form}


def _richardson_derivative(fun: Callable, r):
    r = np.asarray(r, dtype=float)
    h = 1e-3 * np.maximum(r, 1.0)

    def central(step):
        return (fun(r + step) - fun(r - step)) / (2.0 * step)

    return (4.0 * central(h / 2.0) - central(h)) / 3.0


def _pohozaev_parts(source):
    if isinstance(source, RadialProfile):
        return source.at, source.du_at, source.w_at, source.dw_at, None
    lap = source.lap
    dlap = source.dlap or (lambda r: _richardson_derivative(lap, r))
    return source.u, source.du, lap, dlap, source.bilaplacian


def pohozaev_terms(source, r: float, V: Optional[Callable] = None,
                   segments: int = POHOZAEV_SEGMENTS) -> PohozaevTerms:
    """Volume integral ∫_{B_r} (x·∇u)Δ²u, its boundary form, and the energy form.

    Δ²u is V e^{4u} when V is given, otherwise the source's own bilaplacian,
    otherwise a finite-difference Laplacian of its Δu track.
    """
    u, du, lap, dlap, bilaplacian = _pohozaev_parts(source)
    if not r > 0.0:
        raise GreensError(f"radius must be positive: {r!r}")
    if V is not None:
        weight = radial_engine.as_vectorized(V)

        def bilaplacian(s):
            return weight(s) * np.exp(4.0 * u(s))
    elif bilaplacian is None:
        def bilaplacian(s):
            return radial_engine.laplacian_of(lap, np.ravel(s)).reshape(np.shape(s))

    volume = SPHERE_AREA * float(_integral(lambda s: s ** 4 * du(s) * bilaplacian(s),
                                           np.zeros(1), np.array([r]), segments)[0])

    u_r, du_r, w_r, dw_r = (float(g(r)) for g in (u, du, lap, dlap))
    boundary = SPHERE_AREA * (-r ** 4 * w_r ** 2 / 2.0 - 2.0 * r ** 3 * w_r * du_r - r ** 4 * du_r * dw_r)

    if isinstance(source, RadialProfile):
        mass = radial_engine.energy(source, r)
    else:
        mass = SPHERE_AREA * float(_integral(lambda s: np.exp(4.0 * u(s)) * s ** 3,
                                             np.zeros(1), np.array([r]), segments)[0])
    rhs = -mass + SPHERE_AREA * r ** 4 * math.exp(4.0 * u_r) / 4.0
    return PohozaevTerms(float(r), volume, boundary, rhs)


def energy_from_a(a: float) -> float:
    """Mass 4π²a² carried by a neck with logarithmic slope a."""
    if a < 0.0:
        raise GreensError(f"slope must be nonnegative: {a!r}")
    return 4.0 * math.pi ** 2 * a ** 2


def _step(poly: Polynomial) -> Polynomial:
    # d/dt (Q e^{−t}) = (Q′ − Q) e^{−t}
    return poly.deriv() - poly


def _laplacian(poly: Polynomial) -> Polynomial:
    # Δ(Q(t) e^{−t}) for t = r², minus convention: −(8g′ + 4t g″)
    t = Polynomial([0.0, 1.0])
    return -(8.0 * _step(poly) + 4.0 * t * _step(_step(poly)))


def random_smooth_profile(rng: np.random.Generator, degree: int = 3) -> FamilyMember:
    """u = P(r²) e^{−r²} with normal coefficients, and exact u′, Δu, (Δu)′, Δ²u."""
    P = Polynomial(rng.normal(size=degree + 1))
    dP, lapP = _step(P), _laplacian(P)
    dlapP, bilapP = _step(lapP), _laplacian(lapP)

    def closed(poly, odd=False):
        def fun(r):
            r = np.asarray(r, dtype=float)
            t = r ** 2
            value = poly(t) * np.exp(-t)
            return 2.0 * r * value if odd else value
        return fun

    u = closed(P)
    return FamilyMember(1.0, math.exp(-float(P(0.0))), u, closed(dP, odd=True), closed(lapP),
                        radial_engine.unit_weight, CLOSED_FORM, "random", None, closed(bilapP),
                        dlap=closed(dlapP, odd=True))


def identity_gap(rng: np.random.Generator, samples: int, radii: Tuple[float, float] = (0.5, 2.5)) -> float:
    """Worst |volume − boundary|/(1 + |boundary|) over random smooth profiles at random radii."""
    worst = 0.0
    for _ in range(samples):
        member = random_smooth_profile(rng)
        terms = pohozaev_terms(member, float(rng.uniform(*radii)))
        worst = max(worst, abs(terms.volume - terms.boundary) / (1.0 + abs(terms.boundary)))
    return worst
