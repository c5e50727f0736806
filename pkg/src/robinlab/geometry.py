"""Computational domains and boundary perturbation fields.

Three domain kinds are supported: balls in R^n, spherical shells
("annulus" here, any n >= 2), and planar star-shaped domains whose
boundary radius rho(theta) is a trigonometric polynomial.  Measures use
closed forms where they exist and periodic-trapezoid quadrature (which
is spectrally accurate for smooth periodic integrands, and exact for
trigonometric polynomials below the Nyquist degree) otherwise.

Perturbation fields are stored as coefficients against the Steklov
boundary eigenbasis of the ball, ordered by eigenvalue with
multiplicity, cosine before sine within an angular degree in 2-D.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

__all__ = [
    "DEFAULT_BOUNDARY_NODES",
    "TrigPoly",
    "Domain",
    "BoundaryGrid",
    "PerturbationField",
    "VolumePreservationReport",
    "W_COMPENSATING",
    "unit_ball_volume",
    "unit_sphere_area",
    "ball_mode_multiplicity",
    "ball_mode_degrees",
    "ball_mode_parities",
    "volume",
    "surface_area",
    "surface_components",
    "mean_curvature",
    "surface_defect",
    "boundary_grid",
    "interior_integral",
    "quadrature_error",
    "check_volume_preserving",
    "trig_interp",
    "ellipse_domain",
    "ellipse_perturbation",
    "random_star_domain",
    "random_perturbation",
    "domain_to_dict",
    "domain_from_dict",
    "perturbation_to_dict",
    "perturbation_from_dict",
]

DEFAULT_BOUNDARY_NODES = 256

# sentinel for a constant (w.nu) chosen to satisfy the second-order volume condition
W_COMPENSATING = "second-order-volume-compensating"


# ---------------------------------------------------------------------------
# trigonometric polynomials


@dataclass(frozen=True)
class TrigPoly:
    """Real trigonometric polynomial a0 + sum_k (a_k cos k t + b_k sin k t)."""

    a0: float
    cos: tuple[float, ...] = ()
    sin: tuple[float, ...] = ()

    @staticmethod
    def constant(c: float) -> "TrigPoly":
        return TrigPoly(float(c))

    @staticmethod
    def from_samples(values: np.ndarray, n_modes: int | None = None,
                     tol: float = 0.0) -> "TrigPoly":
        """Build from equispaced samples on [0, 2pi) via the FFT.

        `n_modes` truncates the expansion; `tol` drops coefficients whose
        magnitude is below tol * max|values|.
        """
        values = np.asarray(values, dtype=float)
        m = values.size
        c = np.fft.rfft(values) / m
        a0 = c[0].real
        kmax = m // 2
        if n_modes is not None:
            kmax = min(kmax, n_modes)
        ak = 2.0 * c[1:kmax + 1].real
        bk = -2.0 * c[1:kmax + 1].imag
        if m % 2 == 0 and kmax == m // 2:
            # Nyquist coefficient is not doubled
            ak = ak.copy()
            ak[-1] *= 0.5
            bk = bk.copy()
            bk[-1] = 0.0
        if tol > 0.0:
            scale = np.max(np.abs(values)) or 1.0
            keep = max([0] + [k + 1 for k in range(len(ak))
                              if abs(ak[k]) > tol * scale or abs(bk[k]) > tol * scale])
            ak, bk = ak[:keep], bk[:keep]
        # strip trailing zeros so equality/serialization stay tidy
        while len(ak) and ak[-1] == 0.0 and bk[-1] == 0.0:
            ak, bk = ak[:-1], bk[:-1]
        return TrigPoly(float(a0), tuple(float(v) for v in ak),
                        tuple(float(v) for v in bk))

    @property
    def degree(self) -> int:
        return max(len(self.cos), len(self.sin))

    def __call__(self, theta, order: int = 0):
        theta = np.asarray(theta, dtype=float)
        out = np.zeros_like(theta)
        if order == 0:
            out = out + self.a0
        shift = order * np.pi / 2.0
        for k in range(1, self.degree + 1):
            ak = self.cos[k - 1] if k <= len(self.cos) else 0.0
            bk = self.sin[k - 1] if k <= len(self.sin) else 0.0
            if ak == 0.0 and bk == 0.0:
                continue
            kk = float(k) ** order
            out = out + kk * (ak * np.cos(k * theta + shift)
                              + bk * np.sin(k * theta + shift))
        return out

    def scaled(self, factor: float) -> "TrigPoly":
        return TrigPoly(self.a0 * factor,
                        tuple(c * factor for c in self.cos),
                        tuple(s * factor for s in self.sin))

    def min_value(self, samples: int = 4096) -> float:
        t = np.linspace(0.0, 2.0 * np.pi, samples, endpoint=False)
        return float(np.min(self(t)))

    def mean(self) -> float:
        return self.a0


# ---------------------------------------------------------------------------
# domains


@dataclass(frozen=True)
class Domain:
    """A ball, spherical shell, or planar star-shaped domain.

    `R` is the outer radius for balls and shells; for Star2D it is the
    equal-area disc radius (derived from rho, stored for convenience).
    """

    kind: str                      # "ball" | "annulus" | "star2d"
    dim: int
    R: float
    kappa: float | None = None    # annulus only, inner radius = kappa * R
    rho: TrigPoly | None = None   # star2d only

    @staticmethod
    def ball(dim: int, R: float) -> "Domain":
        _check_dim(dim)
        if R <= 0.0:
            raise ValueError(f"radius must be positive, got {R}")
        return Domain("ball", dim, float(R))

    @staticmethod
    def annulus(dim: int, R: float, kappa: float) -> "Domain":
        _check_dim(dim)
        if R <= 0.0:
            raise ValueError(f"radius must be positive, got {R}")
        if not 0.0 < kappa < 1.0:
            raise ValueError(f"kappa must lie in (0, 1), got {kappa}")
        return Domain("annulus", dim, float(R), kappa=float(kappa))

    @staticmethod
    def star2d(rho: TrigPoly) -> "Domain":
        if rho.min_value() <= 0.0:
            raise ValueError("rho must be strictly positive")
        area = _star_area(rho, 4 * DEFAULT_BOUNDARY_NODES)
        return Domain("star2d", 2, math.sqrt(area / math.pi), rho=rho)

    @property
    def is_disc_like(self) -> bool:
        return self.kind == "star2d" and self.rho.degree == 0

    def __post_init__(self):
        if self.kind not in ("ball", "annulus", "star2d"):
            raise ValueError(f"unknown domain kind {self.kind!r}")
        if self.kind == "star2d" and self.dim != 2:
            raise ValueError("star2d domains are planar")


def _check_dim(dim: int) -> None:
    if not isinstance(dim, (int, np.integer)) or dim < 2:
        raise ValueError(f"dimension must be an integer >= 2, got {dim}")


def unit_ball_volume(n: int) -> float:
    return math.pi ** (n / 2.0) / math.gamma(n / 2.0 + 1.0)


def unit_sphere_area(n: int) -> float:
    # |S^{n-1}| = n * omega_n
    return n * unit_ball_volume(n)


def _star_area(rho: TrigPoly, M: int) -> float:
    t = np.linspace(0.0, 2.0 * np.pi, M, endpoint=False)
    r = rho(t)
    return float(0.5 * np.sum(r * r) * (2.0 * np.pi / M))


def volume(d: Domain, M: int = DEFAULT_BOUNDARY_NODES) -> float:
    """|Omega|.  Closed form for balls/shells, trapezoid quadrature for Star2D."""
    if d.kind == "ball":
        return unit_ball_volume(d.dim) * d.R ** d.dim
    if d.kind == "annulus":
        return unit_ball_volume(d.dim) * d.R ** d.dim * (1.0 - d.kappa ** d.dim)
    return _star_area(d.rho, M)


def surface_area(d: Domain, M: int = DEFAULT_BOUNDARY_NODES) -> float:
    """|dOmega| (both components for a shell)."""
    if d.kind == "ball":
        return unit_sphere_area(d.dim) * d.R ** (d.dim - 1)
    if d.kind == "annulus":
        return unit_sphere_area(d.dim) * d.R ** (d.dim - 1) * (1.0 + d.kappa ** (d.dim - 1))
    t = np.linspace(0.0, 2.0 * np.pi, M, endpoint=False)
    r, r1 = d.rho(t), d.rho(t, 1)
    return float(np.sum(np.sqrt(r * r + r1 * r1)) * (2.0 * np.pi / M))


def surface_components(d: Domain) -> tuple[float, float]:
    """(outer, inner) boundary measures of a shell."""
    if d.kind != "annulus":
        raise ValueError("surface_components is defined for annuli")
    s = unit_sphere_area(d.dim)
    return s * d.R ** (d.dim - 1), s * (d.kappa * d.R) ** (d.dim - 1)


def mean_curvature(d: Domain, theta=None, component: str = "outer"):
    """Mean curvature of the boundary w.r.t. the outward normal.

    Balls: 1/R.  Shells: 1/R outer, -1/(kappa R) inner.  Star2D: the
    planar curvature of the polar curve at angle(s) `theta`.
    """
    if d.kind == "ball":
        return 1.0 / d.R
    if d.kind == "annulus":
        if component == "outer":
            return 1.0 / d.R
        return -1.0 / (d.kappa * d.R)
    if theta is None:
        raise ValueError("theta required for star2d curvature")
    t = np.asarray(theta, dtype=float)
    r, r1, r2 = d.rho(t), d.rho(t, 1), d.rho(t, 2)
    return (r * r + 2.0 * r1 * r1 - r * r2) / (r * r + r1 * r1) ** 1.5


def surface_defect(d: Domain, M: int = DEFAULT_BOUNDARY_NODES) -> float:
    """Isoperimetric deficit y^2 = 1 - 4 pi A / L^2 (planar domains)."""
    if d.dim != 2:
        raise ValueError("surface_defect is planar only")
    if d.kind == "ball":
        return 0.0
    A = volume(d, M)
    L = surface_area(d, M)
    return 1.0 - 4.0 * math.pi * A / (L * L)


# ---------------------------------------------------------------------------
# boundary grids and quadrature (planar)


@dataclass(frozen=True)
class BoundaryGrid:
    """Equispaced-in-theta boundary nodes of a planar domain with quadrature data."""

    thetas: np.ndarray     # (M,)
    points: np.ndarray     # (M, 2)
    speed: np.ndarray      # |x'(theta)|
    weights: np.ndarray    # speed * dtheta; sums to |dOmega|
    normals: np.ndarray    # (M, 2) outward
    curvature: np.ndarray  # (M,)

    @property
    def M(self) -> int:
        return self.thetas.size

    def integrate(self, values: np.ndarray) -> float:
        return float(np.dot(np.asarray(values), self.weights))


def boundary_grid(d: Domain, M: int = DEFAULT_BOUNDARY_NODES) -> BoundaryGrid:
    """Boundary nodes/weights for a planar ball or Star2D domain."""
    if d.dim != 2 or d.kind == "annulus":
        raise ValueError("boundary_grid covers planar simply connected domains")
    t = np.linspace(0.0, 2.0 * np.pi, M, endpoint=False)
    if d.kind == "ball":
        r = np.full(M, d.R)
        r1 = np.zeros(M)
        r2 = np.zeros(M)
    else:
        r, r1, r2 = d.rho(t), d.rho(t, 1), d.rho(t, 2)
    ct, st = np.cos(t), np.sin(t)
    pts = np.stack([r * ct, r * st], axis=1)
    x1 = np.stack([r1 * ct - r * st, r1 * st + r * ct], axis=1)
    q = np.hypot(x1[:, 0], x1[:, 1])
    normals = np.stack([x1[:, 1], -x1[:, 0]], axis=1) / q[:, None]
    kappa = (r * r + 2.0 * r1 * r1 - r * r2) / (r * r + r1 * r1) ** 1.5
    w = q * (2.0 * np.pi / M)
    return BoundaryGrid(t, pts, q, w, normals, kappa)


def interior_integral(d: Domain, f: Callable[[np.ndarray], np.ndarray],
                      nr: int = 64, ntheta: int = DEFAULT_BOUNDARY_NODES) -> float:
    """integral of f over a planar domain on a polar tensor grid.

    Gauss-Legendre in the radial fraction, trapezoid in angle.  `f` maps
    an (N, 2) array of points to values.  Accuracy degrades for
    integrands that are rough near the boundary (the outermost radial
    node sits within ~1e-4 of it).
    """
    if d.dim != 2 or d.kind == "annulus":
        raise ValueError("interior_integral covers planar simply connected domains")
    u, wu = np.polynomial.legendre.leggauss(nr)
    u = 0.5 * (u + 1.0)
    wu = 0.5 * wu
    t = np.linspace(0.0, 2.0 * np.pi, ntheta, endpoint=False)
    r_b = np.full(ntheta, d.R) if d.kind == "ball" else d.rho(t)
    uu, tt = np.meshgrid(u, t, indexing="ij")
    rr = uu * r_b[None, :]
    pts = np.stack([rr * np.cos(tt), rr * np.sin(tt)], axis=-1).reshape(-1, 2)
    vals = np.asarray(f(pts)).reshape(nr, ntheta)
    jac = uu * (r_b[None, :] ** 2)
    return float(np.sum(vals * jac * wu[:, None]) * (2.0 * np.pi / ntheta))


def quadrature_error(d: Domain, quantity: str = "volume",
                     M: int = DEFAULT_BOUNDARY_NODES) -> float:
    """Node-doubling error estimate for a boundary-quadrature quantity."""
    fn = {"volume": volume, "surface": surface_area}[quantity]
    return abs(fn(d, 2 * M) - fn(d, M))


def trig_interp(values: np.ndarray, new_thetas: np.ndarray) -> np.ndarray:
    """Trigonometric interpolation from equispaced samples on [0, 2pi)."""
    values = np.asarray(values, dtype=float)
    m = values.size
    c = np.fft.rfft(values) / m
    out = np.full_like(np.asarray(new_thetas, dtype=float), c[0].real)
    kmax = m // 2
    for k in range(1, kmax + 1):
        w = 1.0 if (m % 2 == 0 and k == kmax) else 2.0
        out = out + w * (c[k].real * np.cos(k * new_thetas)
                         - c[k].imag * np.sin(k * new_thetas))
    return out


# ---------------------------------------------------------------------------
# ball Steklov mode bookkeeping (ordering shared by perturbations and spectra)


def ball_mode_multiplicity(n: int, k: int) -> int:
    """Dimension of degree-k spherical harmonics on S^{n-1}."""
    if k == 0:
        return 1
    second = math.comb(n + k - 3, k - 2) if k >= 2 else 0
    return math.comb(n + k - 1, k) - second


def ball_mode_degrees(n: int, count: int) -> np.ndarray:
    """Angular degree k_i for basis indices i = 1..count (returned 0-based)."""
    ks = []
    k = 0
    while len(ks) < count:
        ks.extend([k] * ball_mode_multiplicity(n, k))
        k += 1
    return np.asarray(ks[:count], dtype=int)


def ball_mode_parities(n: int, count: int) -> list[str]:
    """Mode labels; cosine before sine for n=2, positional otherwise."""
    labels = []
    k = 0
    while len(labels) < count:
        if k == 0:
            labels.append("const")
        elif n == 2:
            labels.extend(["cos", "sin"])
        else:
            labels.extend([f"harm{j}" for j in range(ball_mode_multiplicity(n, k))])
        k += 1
    return labels[:count]


def ball_trace_values(n: int, R: float, index: int, thetas: np.ndarray) -> np.ndarray:
    """Boundary trace of the index-th (1-based) ball Steklov eigenfunction, n=2 only."""
    if n != 2:
        raise ValueError("pointwise ball traces implemented for n=2 only")
    if index == 1:
        return np.full_like(thetas, 1.0 / math.sqrt(2.0 * math.pi * R))
    k = (index // 2)
    norm = 1.0 / math.sqrt(math.pi * R)
    if index % 2 == 0:
        return norm * np.cos(k * thetas)
    return norm * np.sin(k * thetas)


# ---------------------------------------------------------------------------
# perturbation fields


@dataclass(frozen=True)
class PerturbationField:
    """Boundary perturbation of a ball: v.nu = sum_i b_i phi_i, plus second-order data.

    `b[i-1]` multiplies the i-th ball Steklov boundary eigenfunction.
    `w_normal` is the second-order normal speed (w.nu): the sentinel
    W_COMPENSATING (constant chosen to satisfy the second-order volume
    condition), a constant, or a callable of theta (planar only).
    """

    b: tuple[float, ...]
    w_normal: object = W_COMPENSATING
    t_range: float = 0.1

    @staticmethod
    def from_modes(n: int, amplitudes: dict[int, float], count: int | None = None,
                   w_normal: object = W_COMPENSATING) -> "PerturbationField":
        """Place amplitude on the cosine mode (first slot) of each angular degree k."""
        degrees = ball_mode_degrees(n, 4 * (max(amplitudes) + n + 2))
        b = np.zeros(len(degrees))
        for k, amp in amplitudes.items():
            first = int(np.argmax(degrees == k))
            b[first] = amp
        if count is None:
            count = int(np.max(np.nonzero(b)[0])) + 1 if np.any(b) else 1
        return PerturbationField(tuple(b[:count]), w_normal=w_normal)

    @property
    def b_array(self) -> np.ndarray:
        return np.asarray(self.b, dtype=float)

    def l2sq(self) -> float:
        """integral of (v.nu)^2 over the sphere = sum b_i^2 (orthonormal traces)."""
        return float(np.sum(self.b_array ** 2))

    def vdotnu(self, n: int, R: float, thetas: np.ndarray) -> np.ndarray:
        """Pointwise v.nu on the circle of radius R (n=2)."""
        vals = np.zeros_like(np.asarray(thetas, dtype=float))
        for i, bi in enumerate(self.b, start=1):
            if bi != 0.0:
                vals = vals + bi * ball_trace_values(n, R, i, thetas)
        return vals


@dataclass(frozen=True)
class VolumePreservationReport:
    order: int
    passed: bool
    residual: float
    tolerance: float
    detail: str = ""


def check_volume_preserving(p: PerturbationField, d: Domain, order: int = 1,
                            tol: float | None = None) -> VolumePreservationReport:
    """Check the first- or second-order volume preservation condition on a ball.

    Order 1: integral of v.nu over the boundary vanishes (b_1 = 0).
    Order 2: (n-1) * integral of H (v.nu)^2 + integral of w.nu vanishes;
    this simplified surface form assumes v is purely normal on the
    boundary, so fields with tangential components report a residual.
    """
    if d.kind != "ball":
        raise ValueError("volume preservation checks are defined on balls")
    n, R = d.dim, d.R
    b = p.b_array
    if order == 1:
        residual = abs(b[0]) * math.sqrt(surface_area(d)) if b.size else 0.0
        tolerance = tol if tol is not None else 1e-12 * max(1.0, float(np.max(np.abs(b), initial=0.0)))
        return VolumePreservationReport(1, residual <= tolerance, residual, tolerance)
    if order != 2:
        raise ValueError("order must be 1 or 2")
    curvature_term = (n - 1) / R * float(np.sum(b * b))
    w = p.w_normal
    if w == W_COMPENSATING:
        w_int = -curvature_term
    elif isinstance(w, (int, float)):
        w_int = float(w) * surface_area(d)
    elif callable(w):
        if n != 2:
            raise ValueError("callable w.nu supported on planar balls only")
        t = np.linspace(0.0, 2.0 * np.pi, DEFAULT_BOUNDARY_NODES, endpoint=False)
        w_int = float(np.sum(w(t)) * R * 2.0 * np.pi / DEFAULT_BOUNDARY_NODES)
    else:
        raise ValueError(f"unsupported w_normal {w!r}")
    residual = abs(curvature_term + w_int)
    tolerance = tol if tol is not None else 1e-10 * max(1.0, abs(curvature_term))
    return VolumePreservationReport(2, residual <= tolerance, residual, tolerance)


def compensating_w_constant(p: PerturbationField, d: Domain) -> float:
    """The constant w.nu satisfying the second-order volume condition on a ball."""
    if d.kind != "ball":
        raise ValueError("defined on balls")
    return -(d.dim - 1) / d.R * p.l2sq() / surface_area(d)


# ---------------------------------------------------------------------------
# canned families and random corpora


def ellipse_domain(R: float = 1.0, t: float = 0.1, n_modes: int = 24) -> Domain:
    """Area-preserving ellipse with semi-axes R/(1+t), R(1+t) as a Star2D domain.

    The polar radius of an ellipse is analytic with geometrically decaying
    Fourier coefficients, so a short cosine series represents it to
    machine precision for moderate t.
    """
    if t <= -1.0:
        raise ValueError("t must exceed -1")
    a, b = R / (1.0 + t), R * (1.0 + t)
    th = np.linspace(0.0, 2.0 * np.pi, 4096, endpoint=False)
    r = a * b / np.sqrt((b * np.cos(th)) ** 2 + (a * np.sin(th)) ** 2)
    return Domain.star2d(TrigPoly.from_samples(r, n_modes=n_modes, tol=1e-16))


def ellipse_perturbation(R: float = 1.0) -> PerturbationField:
    """The field v = (-x1, x2), w = (x1, 0) on the disc of radius R.

    v.nu = -R cos(2 theta), i.e. b_4 = -sqrt(pi R^3); the second-order
    part is tangential-laden, so the order-2 surface check reports a
    residual (2 pi R^2) rather than passing.
    """
    b4 = -math.sqrt(math.pi * R ** 3)
    return PerturbationField((0.0, 0.0, 0.0, b4),
                             w_normal=lambda th: R * np.cos(th) ** 2)


def random_star_domain(rng: np.random.Generator, R: float = 1.0,
                       max_degree: int = 5, amplitude: float = 0.1,
                       min_degree: int = 2) -> Domain:
    """Random smooth star domain rho = R (1 + sum of low-degree modes)."""
    cos = np.zeros(max_degree)
    sin = np.zeros(max_degree)
    for k in range(min_degree, max_degree + 1):
        cos[k - 1] = rng.uniform(-amplitude, amplitude) / k
        sin[k - 1] = rng.uniform(-amplitude, amplitude) / k
    rho = TrigPoly(R, tuple(R * c for c in cos), tuple(R * s for s in sin))
    if rho.min_value() <= 0.3 * R:   # keep the polar map well conditioned
        return random_star_domain(rng, R, max_degree, amplitude * 0.5, min_degree)
    return Domain.star2d(rho)


def random_perturbation(rng: np.random.Generator, n: int, max_degree: int = 6,
                        amplitude: float = 1.0, min_degree: int = 2,
                        count: int | None = None) -> PerturbationField:
    """Random volume-preserving perturbation (b_1 = 0, barycenter modes zeroed)."""
    degrees = ball_mode_degrees(n, 256)
    upto = int(np.argmax(degrees > max_degree))
    b = rng.uniform(-amplitude, amplitude, size=upto)
    b[degrees[:upto] < min_degree] = 0.0
    if count is not None:
        b = b[:count]
    return PerturbationField(tuple(b))


# ---------------------------------------------------------------------------
# serialization


def domain_to_dict(d: Domain) -> dict:
    out = {"kind": d.kind, "dim": d.dim, "R": d.R}
    if d.kind == "annulus":
        out["kappa"] = d.kappa
    if d.kind == "star2d":
        out["rho_coeffs"] = {"a0": d.rho.a0, "cos": list(d.rho.cos),
                             "sin": list(d.rho.sin)}
    return out


def domain_from_dict(obj: dict) -> Domain:
    kind = obj["kind"]
    if kind == "ball":
        return Domain.ball(int(obj["dim"]), float(obj["R"]))
    if kind == "annulus":
        return Domain.annulus(int(obj["dim"]), float(obj["R"]), float(obj["kappa"]))
    if kind == "star2d":
        rc = obj["rho_coeffs"]
        rho = TrigPoly(float(rc["a0"]), tuple(rc.get("cos", ())),
                       tuple(rc.get("sin", ())))
        return Domain.star2d(rho)
    raise ValueError(f"unknown domain kind {kind!r}")


def perturbation_to_dict(p: PerturbationField) -> dict:
    if p.w_normal == W_COMPENSATING:
        w_mode = W_COMPENSATING
    elif isinstance(p.w_normal, (int, float)):
        w_mode = float(p.w_normal)
    else:
        raise ValueError("callable w.nu is not serializable")
    return {"b": list(p.b), "w_mode": w_mode, "t_range": p.t_range}


def perturbation_from_dict(obj: dict) -> PerturbationField:
    return PerturbationField(tuple(float(v) for v in obj["b"]),
                             w_normal=obj.get("w_mode", W_COMPENSATING),
                             t_range=float(obj.get("t_range", 0.1)))


def domain_to_json(d: Domain) -> str:
    return json.dumps(domain_to_dict(d))


def domain_from_json(s: str) -> Domain:
    return domain_from_dict(json.loads(s))
