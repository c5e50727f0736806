"""Steklov eigenproblems: harmonic functions with d_nu phi = mu phi on the boundary.

Closed-form spectra for balls and spherical shells, a Nystrom
dirichlet-to-neumann solver for planar star domains.  Eigenfunction
traces are normalized in L^2 of the boundary; the constant mode
phi_1 = |dOmega|^{-1/2} always comes first (mu_1 = 0).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import geometry as geo
from .geometry import Domain, DEFAULT_BOUNDARY_NODES
from .layerpot import StarLayerOperator, dominant_degree

__all__ = [
    "SteklovBasis",
    "HarmonicExpansion",
    "spectrum_ball",
    "spectrum_annulus",
    "spectrum_star2d",
    "annulus_radial_eigenvalue",
    "expand_harmonic",
    "tol_res",
    "STATUS_UNIQUE",
    "STATUS_FAMILY",
    "STATUS_NO_SOLUTION",
]

STATUS_UNIQUE = "Unique"
STATUS_FAMILY = "Family"
STATUS_NO_SOLUTION = "NoSolution"


def tol_res(alpha: float) -> float:
    """Resonance detection tolerance: |mu_i - alpha| below this is a hit."""
    return 1e-9 * max(1.0, abs(alpha))


@dataclass(frozen=True)
class SteklovBasis:
    """An eigenvalue-ordered, boundary-orthonormal Steklov basis.

    `mu` is nondecreasing, `k[i]` the angular degree of mode i (0-based
    storage; math indices are 1-based).  For shells, `radial_profiles`
    maps storage index -> (c1, c2) for modes of the form
    c1 + c2 * g(r) with g the degree-0 second radial solution; traces of
    degree k >= 1 modes integrate to zero against radial functions and
    are never evaluated pointwise.  Star bases carry nodal traces on the
    operator's theta grid.
    """

    domain: Domain
    mu: np.ndarray
    k: np.ndarray
    parity: tuple[str, ...]
    kind: str                                   # "ball" | "annulus" | "star"
    traces: np.ndarray | None = None            # (N, M) star nodal values
    thetas: np.ndarray | None = None
    weights: np.ndarray | None = None
    residuals: np.ndarray | None = None
    densities: np.ndarray | None = None
    operator: object | None = None
    radial_profiles: dict | None = None         # annulus: index -> (c1, c2)

    @property
    def count(self) -> int:
        return int(self.mu.size)

    def mu2(self) -> float:
        """First nontrivial eigenvalue."""
        return float(self.mu[1])

    # -- boundary work -------------------------------------------------------

    def trace_matrix(self, thetas: np.ndarray | None = None) -> np.ndarray:
        """Nodal trace values (N, M); analytic bases synthesize on demand (n=2)."""
        if self.kind == "star":
            if thetas is None or thetas is self.thetas:
                return self.traces
            return np.stack([geo.trig_interp(row, thetas) for row in self.traces])
        if self.kind == "ball" and self.domain.dim == 2:
            if thetas is None:
                thetas = np.linspace(0.0, 2.0 * np.pi, DEFAULT_BOUNDARY_NODES,
                                     endpoint=False)
            return np.stack([geo.ball_trace_values(2, self.domain.R, i + 1, thetas)
                             for i in range(self.count)])
        raise ValueError("pointwise traces unavailable for this basis")

    def boundary_quadrature(self):
        if self.kind == "star":
            return self.thetas, self.weights
        if self.kind == "ball" and self.domain.dim == 2:
            M = DEFAULT_BOUNDARY_NODES
            t = np.linspace(0.0, 2.0 * np.pi, M, endpoint=False)
            w = np.full(M, self.domain.R * 2.0 * np.pi / M)
            return t, w
        raise ValueError("no planar boundary grid for this basis")

    def moments(self, g) -> np.ndarray:
        """m_i = integral of phi_i * g over the boundary.

        `g` may be a float (constant boundary data), a pair
        (outer, inner) of constants for shells, an array of nodal values
        on the basis grid, or a callable of theta (planar).
        """
        if isinstance(g, tuple) and self.kind == "annulus":
            return self._annulus_moments(float(g[0]), float(g[1]))
        if isinstance(g, (int, float)):
            if self.kind == "annulus":
                return self._annulus_moments(float(g), float(g))
            m = np.zeros(self.count)
            m[0] = float(g) * math.sqrt(geo.surface_area(self.domain))
            return m
        if callable(g):
            t, w = self.boundary_quadrature()
            return self.trace_matrix(t) @ (np.asarray(g(t)) * w)
        vals = np.asarray(g, dtype=float)
        t, w = self.boundary_quadrature()
        if vals.shape != t.shape:
            raise ValueError("nodal data does not match the basis grid")
        return self.trace_matrix(t) @ (vals * w)

    def _annulus_moments(self, g_outer: float, g_inner: float) -> np.ndarray:
        d = self.domain
        s_out, s_in = geo.surface_components(d)
        a = d.kappa * d.R
        m = np.zeros(self.count)
        for i in range(self.count):
            if self.k[i] != 0:
                continue   # spherical harmonics of degree >= 1 kill constants
            c1, c2 = self.radial_profiles[i]
            phi_out = c1 + c2 * _radial_g(d.dim, d.R)
            phi_in = c1 + c2 * _radial_g(d.dim, a)
            m[i] = phi_out * g_outer * s_out + phi_in * g_inner * s_in
        return m

    # -- interior work (planar) ----------------------------------------------

    def interior_values(self, index: int, pts: np.ndarray) -> np.ndarray:
        """phi_{index+1} at interior points (planar bases)."""
        if self.kind == "star":
            return self.operator.mode_interior(self.densities[index], pts)
        if self.kind == "ball" and self.domain.dim == 2:
            pts = np.atleast_2d(pts)
            r = np.hypot(pts[:, 0], pts[:, 1])
            th = np.arctan2(pts[:, 1], pts[:, 0])
            R = self.domain.R
            i = index + 1
            if i == 1:
                return np.full(r.shape, 1.0 / math.sqrt(2.0 * math.pi * R))
            kk = i // 2
            scale = (r / R) ** kk / math.sqrt(math.pi * R)
            return scale * (np.cos(kk * th) if i % 2 == 0 else np.sin(kk * th))
        raise ValueError("interior evaluation unavailable for this basis")

    def export_rows(self) -> list[dict]:
        rows = []
        for i in range(self.count):
            rows.append({
                "i": i + 1,
                "k": int(self.k[i]),
                "parity": self.parity[i],
                "mu": float(self.mu[i]),
                "residual": float(self.residuals[i]) if self.residuals is not None else 0.0,
            })
        return rows


# ---------------------------------------------------------------------------
# analytic spectra


def spectrum_ball(n: int, R: float, k_max: int = 21) -> SteklovBasis:
    """Ball spectrum mu = k/R with the harmonic-polynomial multiplicities.

    Parameters
    ----------
    n, R : dimension and radius.
    k_max : largest angular degree included.

    The basis lists each eigenvalue with its full multiplicity
    (1 for k=0, then 2 per degree for n=2, 2k+1 for n=3, ...).
    """
    d = Domain.ball(n, R)
    count = sum(geo.ball_mode_multiplicity(n, k) for k in range(k_max + 1))
    ks = geo.ball_mode_degrees(n, count)
    mu = ks / R
    parity = tuple(geo.ball_mode_parities(n, count))
    return SteklovBasis(d, mu.astype(float), ks, parity, "ball")


def _radial_g(n: int, r: float) -> float:
    """Second radial harmonic: r^{2-n}, or ln r in the plane."""
    return math.log(r) if n == 2 else r ** (2 - n)


def _radial_g_prime(n: int, r: float) -> float:
    return 1.0 / r if n == 2 else (2 - n) * r ** (1 - n)


def annulus_radial_eigenvalue(n: int, R: float, kappa: float) -> float:
    """The nonzero eigenvalue of the radial (degree-0) pencil, closed form."""
    if n == 2:
        return (1.0 + 1.0 / kappa) / (R * math.log(1.0 / kappa))
    return (n - 2) * (1.0 + kappa ** (1 - n)) / (R * (kappa ** (2 - n) - 1.0))


def _annulus_pencil(n: int, R: float, a: float, k: int):
    """2x2 generalized pencil for degree-k shell modes; returns (mus, vecs).

    Radial solutions r^k and r^{2-n-k} (ln r for the planar degree-0 pair).
    Rows are the Steklov conditions at the outer/inner spheres.
    """
    if n == 2 and k == 0:
        f = lambda r: np.array([1.0, math.log(r)])
        fp = lambda r: np.array([0.0, 1.0 / r])
    else:
        e1, e2 = k, 2 - n - k
        f = lambda r: np.array([r ** e1, r ** e2])
        fp = lambda r: np.array([e1 * r ** (e1 - 1) if e1 else 0.0, e2 * r ** (e2 - 1)])
    P = np.array([fp(R), -fp(a)])
    Q = np.array([f(R), f(a)])
    # det(P - mu Q) = c2 mu^2 + c1 mu + c0
    c2 = Q[0, 0] * Q[1, 1] - Q[0, 1] * Q[1, 0]
    c1 = -(P[0, 0] * Q[1, 1] + P[1, 1] * Q[0, 0] - P[0, 1] * Q[1, 0] - P[1, 0] * Q[0, 1])
    c0 = P[0, 0] * P[1, 1] - P[0, 1] * P[1, 0]
    disc = math.sqrt(max(c1 * c1 - 4.0 * c2 * c0, 0.0))
    mus = sorted(((-c1 - disc) / (2.0 * c2), (-c1 + disc) / (2.0 * c2)))
    vecs = []
    for mu in mus:
        Mm = P - mu * Q
        # null vector of a (numerically) singular 2x2
        if abs(Mm[0, 0]) + abs(Mm[0, 1]) >= abs(Mm[1, 0]) + abs(Mm[1, 1]):
            v = np.array([-Mm[0, 1], Mm[0, 0]])
        else:
            v = np.array([-Mm[1, 1], Mm[1, 0]])
        vecs.append(v / np.linalg.norm(v))
    return mus, vecs


def spectrum_annulus(n: int, R: float, kappa: float, k_max: int = 12) -> SteklovBasis:
    """Spherical-shell spectrum from per-degree 2x2 radial pencils.

    Degree 0 yields {0, mu_r}; every degree k >= 1 yields two
    eigenvalues, each carried with the spherical-harmonic multiplicity.
    The closed-form mu_r is cross-checked against the pencil root.
    """
    d = Domain.annulus(n, R, kappa)
    a = kappa * R
    entries = []   # (mu, k, parity, (c1, c2) or None)
    for k in range(k_max + 1):
        mus, vecs = _annulus_pencil(n, R, a, k)
        if k == 0:
            mu_closed = annulus_radial_eigenvalue(n, R, kappa)
            if abs(mus[1] - mu_closed) > 1e-8 * max(1.0, mu_closed):
                raise ArithmeticError("radial pencil root disagrees with closed form")
            entries.append((0.0, 0, "const", _normalize_radial(d, vecs[0])))
            entries.append((mus[1], 0, "radial", _normalize_radial(d, vecs[1])))
        else:
            mult = geo.ball_mode_multiplicity(n, k)
            for which, mu in enumerate(mus):
                for j in range(mult):
                    parity = ("cos", "sin")[j] if n == 2 else f"harm{j}"
                    entries.append((mu, k, f"{parity}/r{which}", None))
    entries.sort(key=lambda e: (e[0], e[1]))
    mu = np.array([e[0] for e in entries])
    ks = np.array([e[1] for e in entries], dtype=int)
    parity = tuple(e[2] for e in entries)
    profiles = {i: e[3] for i, e in enumerate(entries) if e[3] is not None}
    return SteklovBasis(d, mu, ks, parity, "annulus", radial_profiles=profiles)


def _normalize_radial(d: Domain, vec: np.ndarray) -> tuple[float, float]:
    """Scale (c1, c2) so the trace has unit boundary L^2 norm, outer trace >= 0."""
    n, R, a = d.dim, d.R, d.kappa * d.R
    s_out, s_in = geo.surface_components(d)
    phi_out = vec[0] + vec[1] * _radial_g(n, R)
    phi_in = vec[0] + vec[1] * _radial_g(n, a)
    norm = math.sqrt(phi_out ** 2 * s_out + phi_in ** 2 * s_in)
    sign = 1.0 if phi_out >= 0 else -1.0
    return (sign * vec[0] / norm, sign * vec[1] / norm)


# ---------------------------------------------------------------------------
# numeric planar spectra


def spectrum_star2d(d: Domain, n_modes: int = 32,
                    M_nodes: int = DEFAULT_BOUNDARY_NODES,
                    operator: StarLayerOperator | None = None) -> SteklovBasis:
    """Nystrom DtN spectrum of a planar star domain.

    Builds the single-layer DtN matrix at M_nodes equispaced boundary
    nodes and solves the symmetric eigenproblem against the boundary
    mass.  Requires M_nodes >= 8 * n_modes.  Residuals report
    || d_nu phi - mu phi || in boundary L^2 per mode.
    """
    if d.kind == "ball" and d.dim == 2:
        d = Domain.star2d(geo.TrigPoly.constant(d.R))
    if d.kind != "star2d":
        raise ValueError("spectrum_star2d needs a planar star domain")
    op = operator if operator is not None else StarLayerOperator(d.rho, M_nodes)
    mu, traces, dens, resid = op.steklov_eigensystem(n_modes)
    mu = mu.copy()
    mu[0] = max(mu[0], 0.0) if abs(mu[0]) < 1e-9 else mu[0]
    ks = np.array([dominant_degree(row) for row in traces], dtype=int)
    parity = tuple("num" for _ in range(n_modes))
    return SteklovBasis(d, mu, ks, parity, "star", traces=traces,
                        thetas=op.thetas, weights=op.weights,
                        residuals=resid, densities=dens, operator=op)


# ---------------------------------------------------------------------------
# harmonic boundary-value expansion


@dataclass(frozen=True)
class HarmonicExpansion:
    """Solution coefficients of  d_nu h = alpha h + g  in a Steklov basis."""

    coefficients: np.ndarray
    moments: np.ndarray
    alpha: float
    status: str
    resonant_indices: tuple[int, ...] = ()   # 1-based


def expand_harmonic(basis: SteklovBasis, alpha: float, g) -> HarmonicExpansion:
    """Expand the harmonic h with d_nu h - alpha h = g over the basis.

    h_i = m_i / (mu_i - alpha) with m_i the boundary moments of g.
    Indices with mu_i within tol_res(alpha) of alpha are resonant: if
    every resonant moment vanishes (to quadrature accuracy) the solution
    exists as a family (coefficients zeroed on the resonant subspace,
    minimal-norm representative); otherwise there is no solution.
    """
    m = basis.moments(g)
    gap = basis.mu - alpha
    res = np.where(np.abs(gap) < tol_res(alpha))[0]
    coeff = np.zeros_like(m)
    ok = np.ones_like(m, dtype=bool)
    ok[res] = False
    coeff[ok] = m[ok] / gap[ok]
    status = STATUS_UNIQUE
    if res.size:
        scale = math.sqrt(float(np.sum(m * m))) or 1.0
        compatible = np.all(np.abs(m[res]) <= 1e-8 * max(1.0, scale))
        status = STATUS_FAMILY if compatible else STATUS_NO_SOLUTION
    return HarmonicExpansion(coeff, m, alpha, status,
                             tuple(int(i) + 1 for i in res))
