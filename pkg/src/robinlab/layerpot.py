"""Nystrom single-layer machinery for planar star-shaped boundaries.

Harmonic functions are represented as single-layer potentials with
density at M equispaced boundary nodes.  The weakly singular log kernel
is integrated with the periodic quadrature of Martensen/Kussmaul type
(kernel splitting), which is spectrally accurate on analytic curves.
The geometry is shrunk so the curve fits in a disc of radius 1/2 before
assembling; the log-kernel operator is then invertible (the scale-1
degeneracy of the 2-D single layer cannot occur) and results are mapped
back.  Interior evaluation uses the plain trapezoid rule and is accurate
only a few node spacings away from the boundary.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .geometry import TrigPoly

TWO_PI = 2.0 * np.pi


def kress_log_weights(M: int) -> np.ndarray:
    """Weights R_l for  int_0^{2pi} ln(4 sin^2((t-s)/2)) f(s) ds  at equispaced nodes.

    Returns R as a length-M vector; the quadrature matrix is R[(i-j) % M].
    """
    if M % 2 != 0:
        raise ValueError("node count must be even")
    m = M // 2
    d = TWO_PI * np.arange(M) / M
    k = np.arange(1, m)
    R = -(4.0 * np.pi / M) * (np.cos(np.outer(d, k)) / k).sum(axis=1)
    R -= (4.0 * np.pi / M ** 2) * np.cos(m * d)
    return R


@dataclass(frozen=True)
class _Curve:
    t: np.ndarray
    x: np.ndarray        # (M, 2)
    speed: np.ndarray
    normal: np.ndarray   # outward
    curv: np.ndarray


def _curve(rho: TrigPoly, M: int, scale: float) -> _Curve:
    t = np.linspace(0.0, TWO_PI, M, endpoint=False)
    r = scale * rho(t)
    r1 = scale * rho(t, 1)
    r2 = scale * rho(t, 2)
    ct, st = np.cos(t), np.sin(t)
    x = np.stack([r * ct, r * st], axis=1)
    x1 = np.stack([r1 * ct - r * st, r1 * st + r * ct], axis=1)
    x2 = np.stack([(r2 - r) * ct - 2.0 * r1 * st, (r2 - r) * st + 2.0 * r1 * ct], axis=1)
    q = np.hypot(x1[:, 0], x1[:, 1])
    nu = np.stack([x1[:, 1], -x1[:, 0]], axis=1) / q[:, None]
    curv = (x1[:, 0] * x2[:, 1] - x1[:, 1] * x2[:, 0]) / q ** 3
    return _Curve(t, x, q, nu, curv)


def single_layer_matrix(c: _Curve) -> np.ndarray:
    """Nystrom matrix of the single layer V (trace of S[sigma] on the curve)."""
    M = c.t.size
    dx = c.x[:, None, :] - c.x[None, :, :]
    dist = np.hypot(dx[..., 0], dx[..., 1])
    ts = c.t[:, None] - c.t[None, :]
    s2 = 2.0 * np.abs(np.sin(0.5 * ts))
    with np.errstate(divide="ignore", invalid="ignore"):
        smooth = -np.log(dist / s2) / TWO_PI
    np.fill_diagonal(smooth, -np.log(c.speed) / TWO_PI)
    R = kress_log_weights(M)
    Rmat = R[(np.arange(M)[:, None] - np.arange(M)[None, :]) % M]
    V = (-Rmat / (4.0 * np.pi) + smooth * (TWO_PI / M)) * c.speed[None, :]
    return V


def normal_derivative_matrix(c: _Curve) -> np.ndarray:
    """Nystrom matrix of the interior normal derivative d_nu S[sigma] = (K' + I/2) sigma."""
    M = c.t.size
    dx = c.x[:, None, :] - c.x[None, :, :]
    dist2 = dx[..., 0] ** 2 + dx[..., 1] ** 2
    num = dx[..., 0] * c.normal[:, 0][:, None] + dx[..., 1] * c.normal[:, 1][:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        ker = -num / dist2 / TWO_PI
    np.fill_diagonal(ker, -c.curv / (4.0 * np.pi))
    A = ker * (c.speed[None, :] * TWO_PI / M)
    A[np.diag_indices(M)] += 0.5
    return A


class StarLayerOperator:
    """Single-layer solver for one Star2D boundary at a fixed node count.

    All public inputs/outputs (boundary values, fluxes, points, weights)
    live on the unscaled domain; the internal shrink factor is hidden.
    """

    def __init__(self, rho: TrigPoly, M: int = 256):
        if M % 2 != 0:
            raise ValueError("node count must be even")
        rmax = -TrigPoly(-rho.a0, tuple(-v for v in rho.cos),
                         tuple(-v for v in rho.sin)).min_value()
        self.gamma = 0.5 / rmax
        self.rho = rho
        self.M = M
        self._c = _curve(rho, M, self.gamma)
        self.V = single_layer_matrix(self._c)
        self.A = normal_derivative_matrix(self._c)
        self._V_lu = sla.lu_factor(self.V)
        # unscaled node data
        self.thetas = self._c.t
        self.points = self._c.x / self.gamma
        self.speed = self._c.speed / self.gamma
        self.normals = self._c.normal
        self.weights = self.speed * (TWO_PI / M)
        self.curvature = self._c.curv * self.gamma

    # -- solves ------------------------------------------------------------

    def dirichlet_density(self, boundary_values: np.ndarray) -> np.ndarray:
        """Density sigma with S[sigma] matching the boundary values."""
        return sla.lu_solve(self._V_lu, np.asarray(boundary_values, dtype=float))

    def robin_density(self, alpha: float, rhs: np.ndarray) -> np.ndarray:
        """Density of the harmonic h with d_nu h - alpha h = rhs on the boundary."""
        mat = self.gamma * self.A - alpha * self.V
        sigma = sla.solve(mat, np.asarray(rhs, dtype=float))
        resid = np.max(np.abs(mat @ sigma - rhs))
        scale = max(1.0, float(np.max(np.abs(rhs))))
        if not np.all(np.isfinite(sigma)) or resid > 1e-6 * scale:
            raise ArithmeticError(
                f"layer-potential Robin solve ill-conditioned (residual {resid:.2e}); "
                "alpha is likely at or near a Steklov eigenvalue")
        return sigma

    # -- evaluation ---------------------------------------------------------

    def trace(self, sigma: np.ndarray) -> np.ndarray:
        return self.V @ sigma

    def normal_derivative(self, sigma: np.ndarray) -> np.ndarray:
        return self.gamma * (self.A @ sigma)

    def evaluate(self, sigma: np.ndarray, pts: np.ndarray) -> np.ndarray:
        """S[sigma] at strictly interior points (plain trapezoid; keep clear of the boundary)."""
        p = self.gamma * np.atleast_2d(pts)
        dx = p[:, None, :] - self._c.x[None, :, :]
        dist = np.hypot(dx[..., 0], dx[..., 1])
        w = self._c.speed * (TWO_PI / self.M)
        return -(np.log(dist) * w[None, :]) @ np.asarray(sigma) / TWO_PI

    def evaluate_gradient(self, sigma: np.ndarray, pts: np.ndarray) -> np.ndarray:
        """Unscaled gradient of S[sigma] at interior points."""
        p = self.gamma * np.atleast_2d(pts)
        dx = p[:, None, :] - self._c.x[None, :, :]
        dist2 = dx[..., 0] ** 2 + dx[..., 1] ** 2
        w = self._c.speed * (TWO_PI / self.M)
        g = -(dx / dist2[..., None] * (w * np.asarray(sigma))[None, :, None]).sum(axis=1)
        return self.gamma * g / TWO_PI

    # -- Steklov eigensystem -------------------------------------------------

    def steklov_eigensystem(self, n_modes: int):
        """First n_modes Steklov eigenpairs (unscaled).

        Returns (mu, traces, densities, residuals): traces are nodal values
        orthonormal under the boundary weights; densities reproduce the
        traces through `evaluate`/`trace` for interior work.

        Rayleigh-Ritz on a trigonometric subspace: the nodal DtN matrix is
        only form-symmetric on resolved vectors, so symmetrizing it
        entrywise corrupts the spectrum on non-circular curves.  Projecting
        the form onto Fourier modes of degree <= M/8 (8 nodes per
        wavelength) keeps the symmetrization error at quadrature level.
        """
        if self.M < 8 * n_modes:
            raise ValueError(
                f"node count {self.M} too small for {n_modes} modes (need >= {8 * n_modes})")
        # A V^{-1} as (V^{-T} A^T)^T; V itself is not symmetric
        D = sla.lu_solve(self._V_lu, self.A.T, trans=1).T
        w_s = self._c.speed * (TWO_PI / self.M)        # scaled boundary weights
        m = self.M // 8
        F = np.empty((self.M, 2 * m + 1))
        F[:, 0] = 1.0
        for k in range(1, m + 1):
            F[:, 2 * k - 1] = np.cos(k * self._c.t)
            F[:, 2 * k] = np.sin(k * self._c.t)
        L = sla.cholesky(F.T @ (w_s[:, None] * F), lower=True)
        F = sla.solve_triangular(L, F.T, lower=True).T  # boundary-orthonormal columns
        B = F.T @ (w_s[:, None] * (D @ F))
        B = 0.5 * (B + B.T)
        vals, vecs = sla.eigh(B)
        order = np.argsort(vals)[:n_modes]
        mu_s = vals[order]
        traces_s = (F @ vecs[:, order]).T              # (n_modes, M), orthonormal in w_s
        resid = np.empty(n_modes)
        dens = np.empty_like(traces_s)
        for i in range(n_modes):
            dens[i] = sla.lu_solve(self._V_lu, traces_s[i])
            r = D @ traces_s[i] - mu_s[i] * traces_s[i]
            resid[i] = math.sqrt(float(np.sum(r * r * w_s)))
        # map back: mu = gamma mu~, phi = sqrt(gamma) phi~, flux residual gains gamma
        mu = self.gamma * mu_s
        traces = math.sqrt(self.gamma) * traces_s
        residuals = self.gamma ** 1.5 * resid
        # sign convention: dominant Fourier component positive, cosine preferred
        for i in range(n_modes):
            if _trace_sign(traces[i]) < 0:
                traces[i] = -traces[i]
                dens[i] = -dens[i]
        return mu, traces, dens, residuals

    def mode_interior(self, density: np.ndarray, pts: np.ndarray) -> np.ndarray:
        """Interior values of an eigenfunction given its (scaled) density."""
        return math.sqrt(self.gamma) * self.evaluate(density, pts)


def _trace_sign(vals: np.ndarray) -> float:
    """Sign fix: project on the dominant angular frequency, cosine template first."""
    c = np.fft.rfft(vals)
    k = int(np.argmax(np.abs(c)))
    if abs(c[k].real) > 1e-8 * vals.size:
        return 1.0 if c[k].real > 0 else -1.0
    if abs(c[k].imag) > 1e-8 * vals.size:
        # rfft imag < 0 corresponds to positive sin coefficient
        return 1.0 if c[k].imag < 0 else -1.0
    nz = vals[np.abs(vals) > 1e-12]
    return 1.0 if (nz.size == 0 or nz[0] > 0) else -1.0


def dominant_degree(vals: np.ndarray) -> int:
    """Dominant angular frequency of nodal boundary values."""
    c = np.fft.rfft(vals)
    return int(np.argmax(np.abs(c)))
