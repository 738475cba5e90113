#!/usr/bin/env python3
"""
families.py - Explicit blow-up families u_k on the unit ball of R^4

  log    u_k = ln(k√96/(√96+k²r²)), V_k ≡ 1; the bubble concentrates at 0
  quad1  u_k = v(kr) + ln k for a quadratic entire solution v, V_k ≡ 1
  quad2  u_k = ln k − k⁶r²/8 + k⁻⁸φ(k³r) with Δ²φ = e^{−r²/2}, φ(0) = Δφ(0) = 0,
         and V_k = e^{−4u_k}Δ²u_k = e^{−4k⁻⁸φ(k³r)}

Members are immutable and evaluable at any radius; φ is tabulated once per
truncation radius and shared read-only.
"""

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

import entire_solutions
import radial_engine
from entire_solutions import QUADRATIC_ENTIRE, QUANTUM, ShootResult
from radial_engine import RadialProfile

LOG_FAMILY = "log"
QUAD1_FAMILY = "quad1"
QUAD2_FAMILY = "quad2"
FAMILY_KINDS = (LOG_FAMILY, QUAD1_FAMILY, QUAD2_FAMILY)

CLOSED_FORM = "closed-form"
PROFILE_BACKED = "profile-backed"

PHI_RADIUS = 40.0
PHI_SPACING = 0.02
PHI_LIMIT = 1e8


class FamilyError(ValueError):
    pass


@dataclass(frozen=True)
class FamilySpec:
    kind: str
    k_values: Tuple[float, ...]
    beta: Optional[float] = None

    def __post_init__(self):
        if self.kind not in FAMILY_KINDS:
            raise FamilyError(f"unknown family kind: {self.kind!r}")
        ks = tuple(float(k) for k in self.k_values)
        if not ks:
            raise FamilyError("family needs at least one k")
        if any(k < 1.0 for k in ks):
            raise FamilyError(f"k values must be >= 1: {ks!r}")
        object.__setattr__(self, "k_values", ks)
        if self.kind == QUAD1_FAMILY:
            if self.beta is None:
                raise FamilyError("quad1 family needs a beta")
            if self.beta <= entire_solutions.BETA_STAR:
                raise FamilyError(f"quad1 beta must exceed beta* = {entire_solutions.BETA_STAR!r}: {self.beta!r}")


@dataclass(frozen=True, eq=False)
class FamilyMember:
    """One u_k with its weight V_k, μ_k = e^{−u_k(0)} and radial derivatives.

    `lap` is Δu_k (minus convention) and `dlap` its radial derivative. `mass(R)`,
    when known in closed form or from a backing profile, is ∫_{B_R} V_k e^{4u_k} dx.
    """
    k: float
    mu: float
    u: Callable
    du: Callable
    lap: Callable
    V: Callable
    provenance: str
    kind: str = ""
    mass: Optional[Callable[[float], float]] = None
    bilaplacian: Optional[Callable] = None
    domain: float = math.inf
    dlap: Optional[Callable] = None

    @property
    def u0(self) -> float:
        return float(self.u(0.0))

    def density(self, r):
        """V_k e^{4u_k}."""
        return self.V(r) * np.exp(4.0 * self.u(r))

    def check_domain(self, r):
        r = np.asarray(r, dtype=float)
        if np.any(r < 0.0) or np.any(r > self.domain * (1.0 + 1e-12)):
            raise FamilyError(f"radius outside member domain [0, {self.domain!r}]")
        return r


def log_family(k: float) -> FamilyMember:
    if k < 1.0:
        raise FamilyError(f"k must be >= 1: {k!r}")
    k = float(k)

    def u(r):
        return math.log(k) + entire_solutions.bubble(k * np.asarray(r, dtype=float))

    def du(r):
        return k * entire_solutions.bubble_derivative(k * np.asarray(r, dtype=float))

    def lap(r):
        return k ** 2 * entire_solutions.bubble_laplacian(k * np.asarray(r, dtype=float))

    def dlap(r):
        return k ** 3 * entire_solutions.bubble_laplacian_derivative(k * np.asarray(r, dtype=float))

    def mass(R):
        return QUANTUM * (1.0 - float(entire_solutions.bubble_outer_fraction(k * R)))

    def bilaplacian(r):
        return np.exp(4.0 * u(r))

    return FamilyMember(k, 1.0 / k, u, du, lap, radial_engine.unit_weight, CLOSED_FORM,
                        LOG_FAMILY, mass, bilaplacian, dlap=dlap)


@dataclass(frozen=True, eq=False)
class EntireExtension:
    """v, v′ and Δv of an entire profile, continued past r_max by
    v = v(R) − a(ρ²−R²) − (B/2) ln(ρ/R) − e(ρ⁻²−R⁻²), the form where Δv = 8a + B/ρ².
    """
    profile: RadialProfile
    a: float
    B: float
    e: float

    @classmethod
    def from_profile(cls, profile: RadialProfile) -> "EntireExtension":
        R = profile.r_max
        a = entire_solutions.laplacian_slope(profile)
        B = -R ** 3 * float(profile.dw[-1]) / 2.0
        e = R ** 3 * (float(profile.du[-1]) + 2.0 * a * R + B / (2.0 * R)) / 2.0
        return cls(profile, a, B, e)

    def _split(self, rho):
        rho = np.asarray(rho, dtype=float)
        inside = rho <= self.profile.r_max
        return rho, inside, np.where(inside, rho, self.profile.r_max)

    def v(self, rho):
        rho, inside, clipped = self._split(rho)
        R = self.profile.r_max
        far = np.maximum(rho, R)
        ext = (float(self.profile.u[-1]) - self.a * (far ** 2 - R ** 2) - self.B / 2.0 * np.log(far / R)
               - self.e * (far ** -2 - R ** -2))
        return np.where(inside, self.profile.at(clipped), ext)

    def dv(self, rho):
        rho, inside, clipped = self._split(rho)
        far = np.maximum(rho, self.profile.r_max)
        ext = -2.0 * self.a * far - self.B / (2.0 * far) + 2.0 * self.e * far ** -3
        return np.where(inside, self.profile.du_at(clipped), ext)

    def w(self, rho):
        rho, inside, clipped = self._split(rho)
        far = np.maximum(rho, self.profile.r_max)
        return np.where(inside, self.profile.w_at(clipped), 8.0 * self.a + self.B / far ** 2)

    def dw(self, rho):
        rho, inside, clipped = self._split(rho)
        far = np.maximum(rho, self.profile.r_max)
        return np.where(inside, self.profile.dw_at(clipped), -2.0 * self.B / far ** 3)

    def mass(self, rho: float) -> float:
        R = self.profile.r_max
        if rho <= R:
            return radial_engine.energy(self.profile, rho)
        return radial_engine.energy(self.profile, R) + entire_solutions.gaussian_tail(
            float(self.profile.u[-1]), self.a, R, rho)


def quad1_family(k: float, entire: ShootResult) -> FamilyMember:
    if k < 1.0:
        raise FamilyError(f"k must be >= 1: {k!r}")
    if entire.trajectory.tag != QUADRATIC_ENTIRE:
        raise FamilyError(f"quad1 needs a quadratic entire solution, got {entire.trajectory.tag}")
    k = float(k)
    ext = EntireExtension.from_profile(entire.profile)

    def u(r):
        return ext.v(k * np.asarray(r, dtype=float)) + math.log(k)

    def du(r):
        return k * ext.dv(k * np.asarray(r, dtype=float))

    def lap(r):
        return k ** 2 * ext.w(k * np.asarray(r, dtype=float))

    def dlap(r):
        return k ** 3 * ext.dw(k * np.asarray(r, dtype=float))

    def mass(R):
        return ext.mass(k * R)

    def bilaplacian(r):
        return np.exp(4.0 * u(r))

    return FamilyMember(k, 1.0 / k, u, du, lap, radial_engine.unit_weight, PROFILE_BACKED,
                        QUAD1_FAMILY, mass, bilaplacian, dlap=dlap)


@dataclass(frozen=True, eq=False)
class PhiTable:
    """φ with Δ²φ = e^{−r²/2}, φ(0) = Δφ(0) = 0, tabulated on [0, radius].

    Past the table ψ = Δφ = ψ∞ + 1/r² and
    φ = φ(R) + (K/2)(r⁻² − R⁻²) − ψ∞(r² − R²)/8 − ln(r/R)/2, exact once the
    forcing has died out.
    """
    phi_profile: RadialProfile
    psi_profile: RadialProfile
    radius: float
    psi_inf: float
    far_coeff: float
    limit: float = PHI_LIMIT

    def _split(self, r):
        r = np.asarray(r, dtype=float)
        if np.any(r > self.limit):
            raise FamilyError(f"phi evaluated past its limit radius {self.limit!r}")
        inside = r <= self.radius
        return inside, np.where(inside, r, self.radius), np.maximum(r, self.radius)

    def phi(self, r):
        inside, clipped, far = self._split(r)
        R = self.radius
        ext = (float(self.phi_profile.u[-1]) + self.far_coeff / 2.0 * (far ** -2 - R ** -2)
               - self.psi_inf * (far ** 2 - R ** 2) / 8.0 - 0.5 * np.log(far / R))
        return np.where(inside, self.phi_profile.at(clipped), ext)

    def dphi(self, r):
        inside, clipped, far = self._split(r)
        ext = -self.far_coeff / far ** 3 - self.psi_inf * far / 4.0 - 0.5 / far
        return np.where(inside, self.phi_profile.du_at(clipped), ext)

    def psi(self, r):
        inside, clipped, far = self._split(r)
        return np.where(inside, self.psi_profile.at(clipped), self.psi_inf + far ** -2)

    def dpsi(self, r):
        inside, clipped, far = self._split(r)
        return np.where(inside, self.psi_profile.du_at(clipped), -2.0 * far ** -3)


@lru_cache(maxsize=4)
def phi_table(radius: float = PHI_RADIUS) -> PhiTable:
    """Two nested zero-at-origin Poisson solves: Δψ = e^{−r²/2}, then Δφ = ψ."""
    nodes = np.linspace(0.0, radius, int(math.ceil(radius / PHI_SPACING)) + 1)
    psi = radial_engine.solve_radial_poisson(lambda s: np.exp(-s ** 2 / 2.0),
                                             radial_engine.ZERO_AT_ORIGIN, nodes=nodes)
    phi = radial_engine.solve_radial_poisson(psi.at, radial_engine.ZERO_AT_ORIGIN, nodes=nodes)
    phi = RadialProfile(phi.grid, phi.u, phi.du, psi.u, psi.du)

    R = radius
    psi_inf = float(psi.u[-1]) - R ** -2
    far_coeff = -R ** 3 * float(phi.du[-1]) - psi_inf * R ** 4 / 4.0 - R ** 2 / 2.0
    return PhiTable(phi, psi, R, psi_inf, far_coeff)


def quad2_family(k: float, table: Optional[PhiTable] = None) -> FamilyMember:
    if k < 1.0:
        raise FamilyError(f"k must be >= 1: {k!r}")
    k = float(k)
    table = table or phi_table()
    k3, k6, k8 = k ** 3, k ** 6, k ** 8

    def u(r):
        r = np.asarray(r, dtype=float)
        return math.log(k) - k6 * r ** 2 / 8.0 + table.phi(k3 * r) / k8

    def du(r):
        r = np.asarray(r, dtype=float)
        return -k6 * r / 4.0 + table.dphi(k3 * r) / k ** 5

    def lap(r):
        r = np.asarray(r, dtype=float)
        return k6 + table.psi(k3 * r) / k ** 2

    def dlap(r):
        return k * table.dpsi(k3 * np.asarray(r, dtype=float))

    def V(r):
        return np.exp(-4.0 * table.phi(k3 * np.asarray(r, dtype=float)) / k8)

    def bilaplacian(r):
        r = np.asarray(r, dtype=float)
        return k ** 4 * np.exp(-k6 * r ** 2 / 2.0)

    def mass(R):
        x = k6 * R ** 2 / 2.0
        return 4.0 * math.pi ** 2 / k8 * -math.expm1(-x) - 4.0 * math.pi ** 2 / k8 * x * math.exp(-x)

    return FamilyMember(k, 1.0 / k, u, du, lap, V, CLOSED_FORM, QUAD2_FAMILY, mass, bilaplacian, dlap=dlap)


def member_from_profile(profile: RadialProfile, k: float = 1.0, V: Optional[Callable] = None) -> FamilyMember:
    """Treat a sampled profile as a member on [0, r_max]."""
    weight = radial_engine.as_vectorized(V) if V is not None else radial_engine.unit_weight

    def mass(R):
        return radial_engine.energy(profile, R, V)

    return FamilyMember(k, math.exp(-float(profile.u[0])), profile.at, profile.du_at, profile.w_at,
                        weight, PROFILE_BACKED, "profile", mass, domain=profile.r_max, dlap=profile.dw_at)


def build_family(spec: FamilySpec, entire: Optional[ShootResult] = None,
                 config: Optional[radial_engine.OdeConfig] = None) -> List[FamilyMember]:
    if spec.kind == LOG_FAMILY:
        return [log_family(k) for k in spec.k_values]
    if spec.kind == QUAD2_FAMILY:
        table = phi_table()
        return [quad2_family(k, table) for k in spec.k_values]
    entire = entire or entire_solutions.shoot(spec.beta, config)
    return [quad1_family(k, entire) for k in spec.k_values]


def member_table(member: FamilyMember, r: Sequence[float]) -> dict:
    """Columns r, u, V, e4u for a family dump."""
    r = member.check_domain(np.asarray(r, dtype=float))
    u = np.asarray(member.u(r), dtype=float)
    return {"r": r, "u": u, "V": np.asarray(member.V(r), dtype=float), "e4u": np.exp(4.0 * u)}
