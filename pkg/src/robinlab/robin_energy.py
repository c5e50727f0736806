"""The Robin torsion problem Delta u + 1 = 0, d_nu u = alpha u, and its energy.

For alpha > 0 the boundary condition is a saddle: the energy
E(V) = int |grad V|^2 - alpha oint V^2 - 2 int V has critical value

    E = T(Omega) + sum_i a_i^2 / (alpha - mu_i),

with mu_i the Steklov spectrum and a_i the boundary components of the
torsion flux.  The series splits into a nonnegative part from modes
below alpha and a nonpositive part from modes above; both routes here
(series and direct solve) are kept independent so each can audit the
other.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import geometry as geo
from .errors import SolverError
from .geometry import Domain, DEFAULT_BOUNDARY_NODES
from . import steklov as sk
from .steklov import SteklovBasis, tol_res
from .torsion import TorsionSolution, solve_torsion, flux_coefficients

__all__ = [
    "RobinSolution",
    "EnergyReport",
    "Alpha0Report",
    "ENERGY_COLUMNS",
    "solve_robin",
    "energy_series",
    "energy_direct",
    "energy_split_variational",
    "j_functional",
    "alpha0",
    "pole_scan",
]

ENERGY_COLUMNS = ("alpha", "T", "E_plus", "E_minus", "E_total", "tail_bound", "status")

TAIL_FRACTION = 1e-6    # tail bound above this fraction of |E| is a hard error


@dataclass(frozen=True)
class RobinSolution:
    """One Robin solve: status, energy, and a solution representative.

    For `Family` statuses the representative is the minimal/radial
    member; every member shares the same energy because the resonant
    eigenfunctions have zero mean.
    """

    domain: Domain
    alpha: float
    status: str
    energy: float
    radial: tuple[float, float] | None = None    # u = -r^2/2n + c1 + c2 g(r)
    density: np.ndarray | None = None
    operator: object | None = None
    boundary_values: np.ndarray | None = None

    def u_radial(self, r):
        d = self.domain
        r = np.asarray(r, dtype=float)
        if self.radial is None:
            raise ValueError("no radial profile for this solve")
        c1, c2 = self.radial
        g = np.zeros_like(r)
        if d.kind == "annulus":
            g = np.log(r) if d.dim == 2 else r ** (2 - d.dim)
        return -r ** 2 / (2.0 * d.dim) + c1 + c2 * g

    def interior_values(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(pts)
        if self.operator is not None:
            h = self.operator.evaluate(self.density, pts)
            return -0.25 * (pts[:, 0] ** 2 + pts[:, 1] ** 2) + h
        return self.u_radial(np.hypot(pts[:, 0], pts[:, 1]))


@dataclass(frozen=True)
class EnergyReport:
    """Series energy at one alpha, split by sign, with bookkeeping.

    The first seven fields are the CSV contract (ENERGY_COLUMNS order).
    `tail_bound` majorizes the truncated part of the series; `poles`
    are the eigenvalues carrying nonzero flux components, and
    `pole_distance` is the gap from alpha to the nearest of them.
    """

    alpha: float
    T: float
    E_plus: float
    E_minus: float
    E_total: float
    tail_bound: float
    status: str
    poles: tuple[float, ...] = ()
    pole_distance: float = math.inf
    resonant_indices: tuple[int, ...] = ()
    n_modes: int = 0

    def as_row(self) -> tuple:
        return (self.alpha, self.T, self.E_plus, self.E_minus,
                self.E_total, self.tail_bound, self.status)

    def as_dict(self) -> dict:
        out = {k: getattr(self, k) for k in ENERGY_COLUMNS}
        out["poles"] = list(self.poles)
        out["pole_distance"] = self.pole_distance
        return out


def _default_basis(d: Domain, n_modes: int, M: int) -> SteklovBasis:
    if d.kind == "ball":
        if d.dim == 2:
            return sk.spectrum_ball(2, d.R, k_max=max(4, n_modes // 2))
        return sk.spectrum_ball(d.dim, d.R, k_max=8)
    if d.kind == "annulus":
        return sk.spectrum_annulus(d.dim, d.R, d.kappa, k_max=8)
    return sk.spectrum_star2d(d, n_modes=n_modes, M_nodes=M)


def _flux_norm_sq(ts: TorsionSolution) -> float:
    d = ts.domain
    if d.kind == "ball":
        return ts.flux ** 2 * geo.surface_area(d)
    if d.kind == "annulus":
        s_out, s_in = geo.surface_components(d)
        return ts.flux[0] ** 2 * s_out + ts.flux[1] ** 2 * s_in
    return float(np.sum(ts.flux_nodal ** 2 * ts.weights))


def energy_series(d: Domain, alpha: float, *, n_modes: int = 32,
                  M: int = DEFAULT_BOUNDARY_NODES,
                  basis: SteklovBasis | None = None,
                  ts: TorsionSolution | None = None) -> EnergyReport:
    """Spectral-series energy with sign split and truncation audit.

    Parameters
    ----------
    d, alpha : domain and Robin parameter (alpha != 0 for solvability).
    n_modes, M : star-domain basis size and node count.
    basis, ts : precomputed Steklov basis / torsion solution (reused
        across an alpha grid).

    Returns
    -------
    EnergyReport
        `status` is Unique away from the spectrum; at a resonant
        eigenvalue it is Family when every resonant flux component
        vanishes (the term is dropped; all family members share one
        energy) and NoSolution otherwise (energies become NaN).

    Raises
    ------
    SolverError
        If the truncation tail bound exceeds 1e-6 of |E|.
    """
    if basis is None:
        basis = _default_basis(d, n_modes, M)
    if ts is None:
        ts = solve_torsion(d, M)
    a = flux_coefficients(ts, basis)
    use = np.ones(basis.count, dtype=bool)
    mu = basis.mu
    tail_mu_next = None
    if basis.kind == "star":
        use[-1] = False                      # last pair audits the tail only
        tail_mu_next = float(mu[-1])

    a_scale = math.sqrt(float(np.sum(a * a)))
    nonzero = np.abs(a) > 1e-10 * max(1.0, a_scale)
    poles = tuple(sorted(set(float(m) for m in mu[nonzero])))
    pole_distance = min((abs(alpha - p) for p in poles), default=math.inf)

    gap = mu - alpha
    resonant = np.abs(gap) < tol_res(alpha)
    status = sk.STATUS_UNIQUE
    if np.any(resonant):
        blocked = resonant & nonzero
        status = sk.STATUS_NO_SOLUTION if np.any(blocked) else sk.STATUS_FAMILY
    if status == sk.STATUS_NO_SOLUTION:
        nan = math.nan
        return EnergyReport(alpha, ts.T, nan, nan, nan, 0.0, status, poles,
                            pole_distance,
                            tuple(int(i) + 1 for i in np.where(resonant)[0]),
                            int(np.sum(use)))

    live = use & ~resonant & nonzero
    terms = np.zeros(basis.count)
    terms[live] = a[live] ** 2 / (alpha - mu[live])
    E_plus = float(np.sum(terms[terms > 0]))
    E_minus = float(np.sum(terms[terms < 0]))
    E_total = ts.T + E_plus + E_minus

    tail = 0.0
    if basis.kind == "star":
        missing = max(0.0, _flux_norm_sq(ts) - float(np.sum(a[use] ** 2)))
        if tail_mu_next <= alpha:
            raise SolverError(
                f"alpha={alpha} is not below the truncation eigenvalue "
                f"{tail_mu_next}; increase n_modes")
        tail = missing / (tail_mu_next - alpha)
        if tail > TAIL_FRACTION * max(abs(E_total), 1e-300):
            raise SolverError(
                f"series tail bound {tail:.3e} exceeds {TAIL_FRACTION:.0e} of "
                f"|E|={abs(E_total):.3e}; increase n_modes")
    if not (E_plus >= 0.0 and E_minus <= 0.0):
        raise SolverError("sign split violated; series terms inconsistent")
    return EnergyReport(alpha, ts.T, E_plus, E_minus, E_total, tail, status,
                        poles, pole_distance,
                        tuple(int(i) + 1 for i in np.where(resonant)[0]),
                        int(np.sum(use)))


# ---------------------------------------------------------------------------
# direct solves


def _radial_robin_coefficients(d: Domain, alpha: float) -> tuple[float, float]:
    """(c1, c2) of the radial Robin solution on a shell; singular at {0, mu_r}."""
    n, R = d.dim, d.R
    a = d.kappa * R
    if n == 2:
        g, gp = (lambda r: math.log(r)), (lambda r: 1.0 / r)
    else:
        g, gp = (lambda r: r ** (2 - n)), (lambda r: (2 - n) * r ** (1 - n))
    A = np.array([[-alpha, gp(R) - alpha * g(R)],
                  [-alpha, -gp(a) - alpha * g(a)]])
    rhs = np.array([R / n - alpha * R ** 2 / (2 * n),
                    -a / n - alpha * a ** 2 / (2 * n)])
    det = A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
    scale = max(abs(A).max(), 1.0)
    if abs(det) < 1e-12 * scale * scale:
        raise SolverError(f"radial Robin system singular at alpha={alpha}")
    c = np.linalg.solve(A, rhs)
    return float(c[0]), float(c[1])


def _radial_integral(d: Domain, profile, nodes: int = 96) -> float:
    """int_Omega profile(r) dx via Gauss-Legendre in r."""
    n, R = d.dim, d.R
    r0 = d.kappa * R if d.kind == "annulus" else 0.0
    x, w = np.polynomial.legendre.leggauss(nodes)
    r = 0.5 * (R - r0) * (x + 1.0) + r0
    jac = 0.5 * (R - r0)
    return float(n * geo.unit_ball_volume(n)
                 * np.sum(w * profile(r) * r ** (n - 1)) * jac)


def solve_robin(d: Domain, alpha: float,
                M: int = DEFAULT_BOUNDARY_NODES) -> RobinSolution:
    """Solve the Robin problem directly; the energy is -int u dx.

    Balls and shells use radial closed forms (Family representatives at
    nonradial resonances, where the energy is still single-valued).
    Star domains solve a single-layer boundary system; near a Steklov
    resonance that system degenerates and a SolverError is raised.
    """
    n, R = d.dim, d.R
    if abs(alpha) < tol_res(alpha):
        return RobinSolution(d, alpha, sk.STATUS_NO_SOLUTION, math.nan)
    if d.kind == "ball":
        c1 = R ** 2 / (2 * n) - R / (alpha * n)
        status = sk.STATUS_UNIQUE
        k_hit = round(alpha * R)
        if k_hit >= 1 and abs(alpha - k_hit / R) < tol_res(alpha):
            status = sk.STATUS_FAMILY
        u = lambda r: c1 - r ** 2 / (2 * n)
        E = -_radial_integral(d, u)
        return RobinSolution(d, alpha, status, E, radial=(c1, 0.0))
    if d.kind == "annulus":
        if abs(alpha - sk.annulus_radial_eigenvalue(n, R, d.kappa)) < tol_res(alpha):
            return RobinSolution(d, alpha, sk.STATUS_NO_SOLUTION, math.nan)
        c1, c2 = _radial_robin_coefficients(d, alpha)
        gfun = (lambda r: np.log(r)) if n == 2 else (lambda r: r ** (2 - n))
        u = lambda r: -r ** 2 / (2 * n) + c1 + c2 * gfun(r)
        E = -_radial_integral(d, u)
        status = sk.STATUS_UNIQUE
        for k in range(1, 40):
            mus, _ = sk._annulus_pencil(n, R, d.kappa * R, k)
            if any(abs(alpha - m) < tol_res(alpha) for m in mus):
                status = sk.STATUS_FAMILY
                break
            if min(mus) > alpha + 1.0:
                break
        return RobinSolution(d, alpha, status, E, radial=(c1, c2))
    return _solve_robin_star(d, alpha, M)


def _solve_robin_star(d: Domain, alpha: float, M: int) -> RobinSolution:
    from .layerpot import StarLayerOperator
    op = StarLayerOperator(d.rho, M)
    x, y = op.points[:, 0], op.points[:, 1]
    rr = x * x + y * y
    xdotnu = (op.points * op.normals).sum(axis=1)
    rhs = 0.5 * xdotnu - 0.25 * alpha * rr
    try:
        sigma = op.robin_density(alpha, rhs)
    except ArithmeticError as exc:
        raise SolverError(
            f"Robin boundary system degenerate near alpha={alpha}: {exc}") from exc
    u_b = -0.25 * rr + op.trace(sigma)
    # int u dx = oint u [ (x.nu)/2 - alpha |x|^2/4 ] dS - int |x|^2/4 dx
    vol_term = float(np.sum(op.rho(op.thetas) ** 4) * (2 * np.pi / M) / 16.0)
    int_u = float(np.sum(u_b * rhs * op.weights)) - vol_term
    return RobinSolution(d, alpha, sk.STATUS_UNIQUE, -int_u,
                         density=sigma, operator=op, boundary_values=u_b)


def energy_direct(d: Domain, alpha: float,
                  M: int = DEFAULT_BOUNDARY_NODES) -> float:
    """E by direct solve, independent of the spectral series."""
    sol = solve_robin(d, alpha, M)
    if sol.status == sk.STATUS_NO_SOLUTION:
        raise SolverError(f"no Robin solution at alpha={alpha}")
    return sol.energy


# ---------------------------------------------------------------------------
# variational split


def energy_split_variational(d: Domain, alpha: float, *,
                             basis: SteklovBasis | None = None,
                             ts: TorsionSolution | None = None,
                             n_modes: int = 32,
                             M: int = DEFAULT_BOUNDARY_NODES) -> tuple[float, float]:
    """(E_plus via its maximizer, trial upper bound for E_minus).

    E_plus is re-derived by evaluating the saddle quadratic
    Q(v) = sum (mu_i - alpha) v_i^2 + 2 sum a_i v_i at the explicit
    maximizer on the unstable subspace, rather than summing the series.
    The E_minus bound evaluates Q at the optimally-scaled harmonic trial
    v(x) = x - c with c the boundary barycenter (valid below mu_2; NaN
    when the trial's quadratic form loses positivity).
    """
    if basis is None:
        basis = _default_basis(d, n_modes, M)
    if ts is None:
        ts = solve_torsion(d, M)
    a = flux_coefficients(ts, basis)
    mu = basis.mu
    unstable = mu < alpha - tol_res(alpha)
    v = np.zeros_like(a)
    v[unstable] = a[unstable] / (alpha - mu[unstable])
    e_plus = float(np.sum((mu[unstable] - alpha) * v[unstable] ** 2)
                   + 2.0 * np.sum(a[unstable] * v[unstable]))

    # harmonic coordinate trial for the stable side
    n = d.dim
    vol = geo.volume(d)
    if d.kind == "ball":
        e_minus_bound = 0.0   # coordinate moments vanish by symmetry
    elif d.kind == "annulus":
        e_minus_bound = 0.0
    else:
        g = geo.boundary_grid(d, M)
        c = np.array([g.integrate(g.points[:, i]) for i in range(2)])
        c /= g.integrate(np.ones(g.points.shape[0]))
        num = 0.0
        xc = g.points - c[None, :]
        # int_Omega (x_i - c_i) dx from boundary data: x_i = div(x_i x)/ (n+1)...
        # use oint (x_i - c_i) (x.nu)/(n+1)? simpler: (1/2) oint (x_i-c_i)^2 nu_i-free
        # int_Omega x_i dx = (1/(n+1)) oint x_i (x . nu) dS  for planar n=2 -> 1/3
        mom = np.empty(2)
        for i in range(2):
            mom[i] = g.integrate(g.points[:, i] * (g.points * g.normals).sum(axis=1)) / (n + 1.0)
            mom[i] -= c[i] * vol
            num += mom[i] ** 2
        den = n * vol - alpha * g.integrate((xc ** 2).sum(axis=1))
        e_minus_bound = -num / den if den > 0 else math.nan
    return e_plus, e_minus_bound


# ---------------------------------------------------------------------------
# the J functional and the crossover threshold


def j_functional(d: Domain, alpha: float, *, T_omega: float | None = None,
                 M: int = DEFAULT_BOUNDARY_NODES) -> float:
    """J = T + |Omega|^2 / (alpha |dOmega|), the two-term energy surrogate."""
    if alpha == 0.0:
        raise ValueError("alpha must be nonzero")
    T = solve_torsion(d, M).T if T_omega is None else T_omega
    return T + geo.volume(d) ** 2 / (alpha * geo.surface_area(d))


@dataclass(frozen=True)
class Alpha0Report:
    alpha0: float
    epsilon0: float
    R: float
    T_omega: float
    T_ball: float
    area_ratio_gap: float    # 1/|dB| - 1/|dOmega|


def alpha0(d: Domain, *, T_omega: float | None = None,
           M: int = DEFAULT_BOUNDARY_NODES) -> Alpha0Report:
    """Crossover threshold where J(Omega) overtakes J of the equal-volume ball.

    alpha0 = |B|^2 (1/|dB| - 1/|dOmega|) / epsilon0 with
    epsilon0 = T(Omega) - T(B) >= 0 the torsion deficit.  Below alpha0
    the domain beats the ball on J; above, the ball wins.  Degenerate
    (ball) input returns alpha0 = inf.
    """
    n = d.dim
    vol = geo.volume(d)
    R = (vol / geo.unit_ball_volume(n)) ** (1.0 / n)
    T_ball = -geo.unit_ball_volume(n) * R ** (n + 2) / (n * (n + 2))
    if T_omega is None:
        T_omega = solve_torsion(d, M).T
    eps0 = T_omega - T_ball
    area_ball = geo.unit_sphere_area(n) * R ** (n - 1)
    gap = 1.0 / area_ball - 1.0 / geo.surface_area(d)
    if eps0 <= 1e-14 * abs(T_ball):
        return Alpha0Report(math.inf, max(eps0, 0.0), R, T_omega, T_ball, gap)
    return Alpha0Report(vol ** 2 * gap / eps0, eps0, R, T_omega, T_ball, gap)


def pole_scan(d: Domain, *, basis: SteklovBasis | None = None,
              ts: TorsionSolution | None = None, n_modes: int = 32,
              M: int = DEFAULT_BOUNDARY_NODES,
              rel_tol: float = 1e-10) -> tuple[float, ...]:
    """Eigenvalues that are true energy poles (nonzero flux component)."""
    if basis is None:
        basis = _default_basis(d, n_modes, M)
    if ts is None:
        ts = solve_torsion(d, M)
    a = flux_coefficients(ts, basis)
    scale = math.sqrt(float(np.sum(a * a)))
    hit = np.abs(a) > rel_tol * max(1.0, scale)
    vals = sorted(set(round(float(m), 12) for m in basis.mu[hit]))
    return tuple(vals)
