"""Perimeter-and-area bounds for planar torsion and the disc-optimality zone.

Knowing only area A and perimeter L of a planar domain pins the
surface defect y^2 = 1 - 4 pi A / L^2 and yields an explicit upper
bound T* on the torsion energy, sharp for the disc.  The same defect
controls the crossover parameter of the two-term energy surrogate
through the profile function g, and a spectral corollary places the
disc at the top of the energy ordering for 0 < alpha < mu_2(Omega).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import xlogy

from . import geometry as geo
from . import robin_energy as energy
from . import steklov as sk
from .geometry import Domain, DEFAULT_BOUNDARY_NODES

__all__ = [
    "PWBound",
    "JThresholdReport",
    "DiscMaxReport",
    "pw_upper_bound",
    "epsilon0_upper",
    "g",
    "threshold_alpha",
    "theorem_J_check",
    "corollary_disc_max",
]


@dataclass(frozen=True)
class PWBound:
    """Torsion bound from (area, perimeter) alone; tight for the disc."""

    area: float
    perimeter: float
    defect: float          # y^2 = 1 - 4 pi A / L^2, in [0, 1)
    R_tilde: float         # L / (2 pi)
    T_star: float          # upper bound on T(Omega)
    epsilon0_upper: float  # upper bound on T(Omega) - T(ball of equal area)


def pw_upper_bound(A: float, L: float) -> PWBound:
    """Upper bound on the torsion energy from area and perimeter.

    T(Omega) <= T* = (pi/2) Rt^4 [ y^4 log(y^2)/2 - 3 y^4/4 + y^2 - 1/4 ]
    with Rt = L/(2 pi) and y^2 the isoperimetric defect.  Requires
    L^2 >= 4 pi A; equality (the disc) gives T* = -pi Rt^4 / 8 exactly.
    """
    if A <= 0 or L <= 0:
        raise ValueError("area and perimeter must be positive")
    y2 = 1.0 - 4.0 * math.pi * A / L ** 2
    if y2 < -1e-12:
        raise ValueError(
            f"L^2 = {L ** 2:.6g} violates the isoperimetric floor 4 pi A = "
            f"{4 * math.pi * A:.6g}")
    y2 = max(y2, 0.0)
    rt = L / (2.0 * math.pi)
    t_star = 0.5 * math.pi * rt ** 4 * (
        0.5 * float(xlogy(y2 ** 2, y2)) - 0.75 * y2 ** 2 + y2 - 0.25)
    eps_up = 0.25 * math.pi * rt ** 4 * y2 * (1.0 + float(xlogy(y2, y2)) - y2)
    return PWBound(A, L, y2, rt, t_star, eps_up)


def epsilon0_upper(A: float, L: float) -> float:
    """Upper bound on the torsion deficit epsilon0 = T(Omega) - T(B)."""
    return pw_upper_bound(A, L).epsilon0_upper


def g(t: float) -> float:
    """Crossover profile g(t) = (1-t)^2 / ((1+sqrt(1-t)) (1 + t log t - t)).

    Defined on [0, 1) with g(0) = 1/2.  Near t = 1 the denominator
    cancels catastrophically, so a Taylor branch in eps = 1 - t is used
    (1 + t log t - t = (eps^2/2)(1 + eps/3 + eps^2/6 + eps^3/10 + ...)).
    """
    if not 0.0 <= t < 1.0:
        raise ValueError("g is defined for 0 <= t < 1")
    eps = 1.0 - t
    root = math.sqrt(eps)
    if eps < 1e-3:
        series = 1.0 + eps / 3.0 + eps ** 2 / 6.0 + eps ** 3 / 10.0 + eps ** 4 / 15.0
        return 2.0 / ((1.0 + root) * series)
    den = 1.0 + float(xlogy(t, t)) - t
    return eps ** 2 / ((1.0 + root) * den)


def threshold_alpha(d: Domain) -> float:
    """(2/R) g(y^2): guaranteed lower bound on the J crossover of a planar domain."""
    if d.dim != 2:
        raise ValueError("the threshold is planar")
    y2 = geo.surface_defect(d)
    R = math.sqrt(geo.volume(d) / math.pi)
    return 2.0 / R * g(y2)


@dataclass(frozen=True)
class JThresholdReport:
    alpha0: float
    threshold: float
    satisfied: bool
    defect: float
    epsilon0: float
    epsilon0_upper: float


def theorem_J_check(d: Domain, *, T_omega: float | None = None,
                    M: int = DEFAULT_BOUNDARY_NODES) -> JThresholdReport:
    """Verify alpha0(Omega) >= (2/R) g(y^2) for a planar domain.

    The crossover alpha0 uses the computed torsion deficit; the
    threshold uses only area and perimeter.  `satisfied` allows a
    1e-9 relative slack for quadrature noise.
    """
    rep = energy.alpha0(d, T_omega=T_omega, M=M)
    thr = threshold_alpha(d)
    ok = rep.alpha0 >= thr * (1.0 - 1e-9)
    eps_up = epsilon0_upper(geo.volume(d), geo.surface_area(d))
    return JThresholdReport(rep.alpha0, thr, bool(ok), geo.surface_defect(d),
                            rep.epsilon0, eps_up)


@dataclass(frozen=True)
class DiscMaxReport:
    alpha: float
    E_domain: float
    E_ball: float
    gap: float            # E_ball - E_domain >= 0 inside the validity zone
    mu2: float
    weinstock: float      # 2 pi / L
    inv_R: float          # 1 / R, equal-area disc
    chain_ok: bool        # mu2 <= 2 pi / L <= 1/R


def corollary_disc_max(d: Domain, alpha: float, *, n_modes: int = 32,
                       M: int = DEFAULT_BOUNDARY_NODES) -> DiscMaxReport:
    """Energy comparison with the equal-area disc for 0 < alpha < mu_2(Omega).

    Inside that window the disc maximizes E among equal-area planar
    domains; the report carries both energies and the Weinstock chain
    mu_2(Omega) <= 2 pi / L <= 1/R that calibrates the window.
    """
    if d.dim != 2 or d.kind == "annulus":
        raise ValueError("simply connected planar domains only")
    if d.kind == "ball":
        d = Domain.star2d(geo.TrigPoly.constant(d.R))
    basis = sk.spectrum_star2d(d, n_modes=n_modes, M_nodes=M)
    mu2 = basis.mu2()
    if not 0.0 < alpha < mu2:
        raise ValueError(
            f"alpha={alpha} outside the validity window (0, mu_2={mu2:.6g})")
    E_dom = energy.energy_series(d, alpha, basis=basis, M=M).E_total
    R = math.sqrt(geo.volume(d) / math.pi)
    wn = math.pi
    E_ball = wn * R ** 2 * (-R ** 2 / 8.0 + R / (2.0 * alpha))
    L = geo.surface_area(d)
    wein = 2.0 * math.pi / L
    chain = mu2 <= wein * (1 + 1e-9) and wein <= (1.0 / R) * (1 + 1e-9)
    return DiscMaxReport(alpha, E_dom, E_ball, E_ball - E_dom, mu2,
                         wein, 1.0 / R, bool(chain))
