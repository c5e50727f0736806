"""Command-line frontend: experiment drivers emitting CSV or JSON tables.

Every subcommand writes one table (CSV by default, `--json` for the
same rows as JSON) with 17-significant-digit floats, so identical
configurations reproduce byte-identical output.  Alpha grids skip
values that fall within the resonance tolerance of a detected energy
pole; each exclusion is logged to stderr.  Exit codes: 0 success,
2 invalid configuration, 3 solver failure.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import geometry as geo
from . import oracle
from . import planar_optimality as pw
from . import robin_energy as energy
from . import shape_calculus as sc
from . import steklov as sk
from .errors import SolverError
from .geometry import Domain, PerturbationField, TrigPoly

__all__ = ["main"]


# -- output plumbing ---------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def _native(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (float, np.floating)):
        return float(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    return v


def _emit(args, columns, rows) -> None:
    if args.json:
        payload = {"columns": list(columns),
                   "rows": [dict(zip(columns, map(_native, r))) for r in rows]}
        text = json.dumps(payload, indent=2) + "\n"
    else:
        lines = [",".join(columns)]
        lines += [",".join(_fmt(v) for v in r) for r in rows]
        text = "\n".join(lines) + "\n"
    if args.output in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)


def _log(msg: str) -> None:
    print(msg, file=sys.stderr)


def _workers() -> int:
    cap = os.environ.get("ROBINLAB_THREADS")
    avail = os.cpu_count() or 1
    if cap:
        return max(1, min(avail, int(cap)))
    return avail


def _map_ordered(fn, items):
    items = list(items)
    n = _workers()
    if n == 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items))


# -- argument helpers --------------------------------------------------------

def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _grid(text: str) -> np.ndarray:
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError(f"grid must be start:stop:count, got {text!r}")
    start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
    if count < 1:
        raise ValueError("grid count must be positive")
    return np.linspace(start, stop, count)


def _domain_from_args(args) -> Domain:
    if getattr(args, "domain_json", None):
        with open(args.domain_json, encoding="utf-8") as fh:
            return geo.domain_from_dict(json.load(fh))
    kind = args.domain
    if kind == "ball":
        return Domain.ball(args.dim, args.radius)
    if kind == "annulus":
        if args.kappa is None:
            raise ValueError("annulus domains need --kappa")
        return Domain.annulus(args.dim, args.radius, args.kappa)
    if kind == "star":
        if args.dim != 2:
            raise ValueError("star domains are planar (--dim 2)")
        cos = _floats(args.rho_cos) if args.rho_cos else []
        sin = _floats(args.rho_sin) if args.rho_sin else []
        rho = TrigPoly(args.radius, tuple(cos), tuple(sin))
        return Domain.star2d(rho)
    raise ValueError(f"unknown domain kind {kind!r}")


def _alphas_from_args(args) -> np.ndarray:
    if getattr(args, "alpha_grid", None):
        return _grid(args.alpha_grid)
    if getattr(args, "alpha", None):
        return np.asarray(args.alpha, dtype=float)
    raise ValueError("provide --alpha or --alpha-grid")


def _modes_spec(n: int, text: str) -> PerturbationField:
    """Parse 'k2=1,k3s=-0.5' into a perturbation field (cos slot default)."""
    entries = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        key, _, val = item.partition("=")
        if not key.startswith("k") or not val:
            raise ValueError(f"bad mode spec {item!r}; use k<deg>[c|s]=<value>")
        parity = "c"
        body = key[1:]
        if body and body[-1] in "cs":
            parity, body = body[-1], body[:-1]
        entries.append((int(body), parity, float(val)))
    if not entries:
        raise ValueError("empty --modes spec")
    if any(k < 1 for k, _, _ in entries):
        raise ValueError("mode degrees start at 1")
    if n == 2:
        size = 1 + 2 * max(k for k, _, _ in entries)
        b = np.zeros(size)
        for k, parity, val in entries:
            b[2 * k - 1 if parity == "c" else 2 * k] = val
        return PerturbationField(tuple(b))
    if any(p == "s" for _, p, _ in entries):
        raise ValueError("parity suffixes are planar; use k<deg>=<value> here")
    return PerturbationField.from_modes(n, {k: v for k, _, v in entries})


# -- subcommands -------------------------------------------------------------

def _cmd_spectrum(args) -> int:
    d = _domain_from_args(args)
    if d.kind == "ball":
        basis = sk.spectrum_ball(d.dim, d.R, k_max=args.kmax)
    elif d.kind == "annulus":
        basis = sk.spectrum_annulus(d.dim, d.R, d.kappa, k_max=args.kmax)
    else:
        basis = sk.spectrum_star2d(d, n_modes=args.n_modes, M_nodes=args.nodes)
    cols = ("i", "k", "parity", "mu", "residual")
    rows = [tuple(r[c] for c in cols) for r in basis.export_rows()]
    _emit(args, cols, rows)
    return 0


def _cmd_energy(args) -> int:
    d = _domain_from_args(args)
    alphas = _alphas_from_args(args)
    basis = energy._default_basis(d, args.n_modes, args.nodes)
    from .torsion import solve_torsion
    ts = solve_torsion(d, args.nodes)
    poles = energy.pole_scan(d, basis=basis, ts=ts, M=args.nodes)
    keep = []
    for a in alphas:
        near = [p for p in poles if abs(a - p) < sk.tol_res(a)]
        if near:
            _log(f"excluded alpha={a:.17g}: within tolerance of pole {near[0]:.17g}")
        else:
            keep.append(float(a))
    _log(f"poles: {{{', '.join(f'{p:.12g}' for p in poles)}}}")

    def run(a):
        return energy.energy_series(d, a, n_modes=args.n_modes, M=args.nodes,
                                    basis=basis, ts=ts).as_row()

    rows = _map_ordered(run, keep)
    _emit(args, energy.ENERGY_COLUMNS, rows)
    return 0


def _cmd_split(args) -> int:
    d = _domain_from_args(args)
    alphas = _alphas_from_args(args)
    basis = energy._default_basis(d, args.n_modes, args.nodes)
    from .torsion import solve_torsion
    ts = solve_torsion(d, args.nodes)

    def run(a):
        rep = energy.energy_series(d, a, n_modes=args.n_modes, M=args.nodes,
                                   basis=basis, ts=ts)
        ep, em_bound = energy.energy_split_variational(
            d, a, n_modes=args.n_modes, M=args.nodes, basis=basis, ts=ts)
        # the trial bound only applies below mu_2; NaN means not applicable
        ok = math.isnan(em_bound) or \
            rep.E_minus <= em_bound + 1e-9 * max(1.0, abs(rep.E_minus))
        return (a, rep.E_plus, rep.E_minus, ep, em_bound, ok)

    rows = _map_ordered(run, [float(a) for a in alphas])
    _emit(args, ("alpha", "E_plus", "E_minus", "E_plus_series",
                 "E_minus_bound", "bound_ok"), rows)
    return 0


def _cmd_alpha0(args) -> int:
    d = _domain_from_args(args)
    rep = energy.alpha0(d, M=args.nodes)
    if d.dim == 2 and d.kind != "annulus":
        thr = pw.theorem_J_check(d, T_omega=rep.T_omega, M=args.nodes)
        threshold, ok = thr.threshold, thr.satisfied
    else:
        threshold, ok = math.nan, True
    _emit(args, ("alpha0", "epsilon0", "R", "T_omega", "T_ball",
                 "area_ratio_gap", "threshold", "threshold_ok"),
          [(rep.alpha0, rep.epsilon0, rep.R, rep.T_omega, rep.T_ball,
            rep.area_ratio_gap, threshold, ok)])
    return 0


def _cmd_first_variation(args) -> int:
    d = _domain_from_args(args)
    cos = _floats(args.vn_cos) if args.vn_cos else []
    sin = _floats(args.vn_sin) if args.vn_sin else []
    if cos or sin:
        if d.dim != 2:
            raise ValueError("trigonometric speeds are planar; use --vn-const")
        vn = TrigPoly(args.vn_const, tuple(cos), tuple(sin))
    else:
        vn = args.vn_const
    rows = [(a, sc.first_variation_general(d, a, vn, M=args.nodes))
            for a in _alphas_from_args(args)]
    _emit(args, ("alpha", "E_dot"), rows)
    return 0


def _cmd_second_variation(args) -> int:
    d = _domain_from_args(args)
    if d.kind != "ball":
        raise ValueError("the modal second variation is defined around balls")
    p = _modes_spec(d.dim, args.modes)
    cols = ["alpha", "xi", "E_ddot", "E_ddot_radial", "route_gap", "S_ddot",
            "zone", "definite_negative", "bound", "bound_satisfied"]
    if args.fd_check:
        cols += ["fd_E_ddot", "fd_rel_err", "fd_E_dot"]
    rows = []
    for a in _alphas_from_args(args):
        rep = sc.second_variation_ball(d, a, p)
        sign = sc.classify_sign(d, a, p)
        row = [a, rep.xi, rep.E_ddot, rep.E_ddot_radial, rep.route_gap,
               rep.S_ddot, sign.zone, sign.definite_negative, sign.bound,
               sign.bound_satisfied if sign.bound_satisfied is not None else True]
        if args.fd_check:
            if d.dim != 2:
                raise ValueError("--fd-check needs a planar ball")
            scale = math.sqrt(math.pi * d.R ** 3)
            b = p.b_array
            eta = TrigPoly(0.0, tuple(b[1::2] / scale), tuple(b[2::2] / scale))
            fam = sc.normal_speed_family(eta, d.R)
            steps = np.asarray(_floats(args.fd_steps))
            t_grid = np.concatenate([-steps[::-1], steps])
            fd = sc.finite_difference_check(fam, float(a), t_grid,
                                            route=args.fd_route,
                                            degree=args.fd_degree,
                                            n_modes=args.n_modes, M=args.nodes)
            rel = abs(fd.E_ddot - rep.E_ddot) / max(abs(rep.E_ddot), 1e-300)
            row += [fd.E_ddot, rel, fd.E_dot]
        rows.append(tuple(row))
    _emit(args, tuple(cols), rows)
    return 0


def _cmd_j_variations(args) -> int:
    d = _domain_from_args(args)
    if d.kind != "ball":
        raise ValueError("J variations are defined around balls")
    p = _modes_spec(d.dim, args.modes)
    rows = []
    for a in _alphas_from_args(args):
        rep = sc.j_variations(d, a, p)
        ok = rep.slack_lower >= -1e-9 and rep.slack_upper >= -1e-9
        rows.append((a, rep.J_dot, rep.J_ddot, rep.lower_bound,
                     rep.upper_bound, rep.slack_lower, rep.slack_upper, ok))
    _emit(args, ("alpha", "J_dot", "J_ddot", "lower_bound", "upper_bound",
                 "slack_lower", "slack_upper", "bounds_ok"), rows)
    return 0


def _cmd_pw_check(args) -> int:
    d = _domain_from_args(args)
    if d.dim != 2 or d.kind == "annulus":
        raise ValueError("the area-perimeter bound covers simply connected planar domains")
    area, per = geo.volume(d), geo.surface_area(d)
    bound = pw.pw_upper_bound(area, per)
    T_fem = oracle.fem_dirichlet_T(d, h_max=args.h_max)
    margin = bound.T_star - T_fem
    _emit(args, ("area", "perimeter", "defect", "T_star", "T_fem",
                 "margin", "bound_ok"),
          [(area, per, bound.defect, bound.T_star, T_fem, margin,
            margin >= -1e-8 * max(1.0, abs(T_fem)))])
    return 0


def _cmd_corollary_check(args) -> int:
    d = _domain_from_args(args)
    if args.alpha:
        alphas = [float(a) for a in args.alpha]
    else:
        basis = sk.spectrum_star2d(d if d.kind == "star2d" else
                                   Domain.star2d(TrigPoly.constant(d.R)),
                                   n_modes=args.n_modes, M_nodes=args.nodes)
        R = math.sqrt(geo.volume(d) / math.pi)
        alphas = [min(1.0 / R, 0.9 * basis.mu2())]
    rows = []
    for a in alphas:
        rep = pw.corollary_disc_max(d, a, n_modes=args.n_modes, M=args.nodes)
        ok = rep.gap >= -1e-9 * max(1.0, abs(rep.E_ball))
        rows.append((a, rep.E_domain, rep.E_ball, rep.gap, rep.mu2,
                     rep.weinstock, rep.inv_R, rep.chain_ok, ok))
    _emit(args, ("alpha", "E_domain", "E_ball", "gap", "mu2", "weinstock",
                 "inv_R", "chain_ok", "gap_ok"), rows)
    return 0


def _cmd_oracle_verify(args) -> int:
    d = _domain_from_args(args)

    def run(a):
        rep = energy.energy_series(d, a, n_modes=args.n_modes, M=args.nodes)
        fs = oracle.fem_robin_energy(d, a, h_max=args.h_max)
        diff = abs(rep.E_total - fs.energy)
        ok = diff <= max(10.0 * fs.error, 1e-7 * max(1.0, abs(rep.E_total)))
        return (a, rep.E_total, fs.energy, diff, fs.error, ok)

    rows = _map_ordered(run, [float(a) for a in _alphas_from_args(args)])
    _emit(args, ("alpha", "E_series", "E_fem", "diff", "fem_error",
                 "consistent"), rows)
    return 0


def _cmd_corpus(args) -> int:
    rng = np.random.default_rng(args.seed)
    domains = [geo.random_star_domain(rng) for _ in range(args.count)]

    def run(item):
        idx, d = item
        basis = sk.spectrum_star2d(d, n_modes=args.n_modes, M_nodes=args.nodes)
        from .torsion import solve_torsion
        ts = solve_torsion(d, args.nodes)
        R = math.sqrt(geo.volume(d) / math.pi)
        a = min(1.0 / R, 0.9 * basis.mu2())
        rep = energy.energy_series(d, a, basis=basis, ts=ts, M=args.nodes)
        E_ball = math.pi * R ** 2 * (-R ** 2 / 8.0 + R / (2.0 * a))
        J_dom = energy.j_functional(d, a, T_omega=ts.T, M=args.nodes)
        tol = 1e-9 * max(1.0, abs(E_ball))
        return (idx, R, basis.mu2(), a, rep.E_total, E_ball,
                rep.E_total <= E_ball + tol, J_dom, E_ball,
                J_dom <= E_ball + tol)

    rows = _map_ordered(run, list(enumerate(domains)))
    _emit(args, ("index", "R", "mu2", "alpha", "E_domain", "E_ball", "E_ok",
                 "J_domain", "J_ball", "J_ok"), rows)
    bad = [r for r in rows if not (r[6] and r[9])]
    if bad:
        _log(f"corpus: {len(bad)} domain(s) violated the ball comparison")
        return 3
    return 0


# -- parser ------------------------------------------------------------------

def _add_domain_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--domain", choices=("ball", "annulus", "star"),
                   default="ball")
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--radius", type=float, default=1.0)
    p.add_argument("--kappa", type=float, default=None)
    p.add_argument("--rho-cos", default=None,
                   help="comma-separated cosine coefficients of rho (star)")
    p.add_argument("--rho-sin", default=None)
    p.add_argument("--domain-json", default=None,
                   help="JSON file with a serialized domain (overrides flags)")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--output", default="-")
    p.add_argument("--json", action="store_true",
                   help="emit the table as JSON instead of CSV")
    p.add_argument("--nodes", type=int, default=geo.DEFAULT_BOUNDARY_NODES)
    p.add_argument("--n-modes", type=int, default=32)


def _add_alpha_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--alpha", type=float, action="append",
                   help="repeatable single value")
    p.add_argument("--alpha-grid", default=None, help="start:stop:count")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="robinlab",
        description="Robin torsion energies, Steklov series, and shape derivatives")
    parser.add_argument("--config", default=None,
                        help="JSON file of option defaults (CLI flags win)")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, help_text, alpha=False, kmax=False, modes=False):
        p = sub.add_parser(name, help=help_text)
        _add_domain_args(p)
        _add_common(p)
        if alpha:
            _add_alpha_args(p)
        if kmax:
            p.add_argument("--kmax", type=int, default=12)
        if modes:
            p.add_argument("--modes", required=True,
                           help="perturbation spec, e.g. k2=1,k3s=-0.5")
        p.set_defaults(func=fn)
        return p

    add("spectrum", _cmd_spectrum, "Steklov eigenvalues of a domain", kmax=True)
    add("energy", _cmd_energy, "Robin energy over an alpha grid", alpha=True)
    add("split", _cmd_split, "signed series parts and the trial-space bound",
        alpha=True)
    add("alpha0", _cmd_alpha0, "crossover threshold against the equal-volume ball")
    p = add("first-variation", _cmd_first_variation,
            "Hadamard derivative of the energy", alpha=True)
    p.add_argument("--vn-const", type=float, default=0.0)
    p.add_argument("--vn-cos", default=None)
    p.add_argument("--vn-sin", default=None)
    p = add("second-variation", _cmd_second_variation,
            "modal second variation around a ball", alpha=True, modes=True)
    p.add_argument("--fd-check", action="store_true",
                   help="cross-check by finite differences along the family")
    p.add_argument("--fd-steps", default="0.01,0.02,0.03")
    p.add_argument("--fd-route", choices=("series", "direct", "fem"),
                   default="series")
    p.add_argument("--fd-degree", type=int, default=3)
    add("j-variations", _cmd_j_variations,
        "variations of the torsion-area functional", alpha=True, modes=True)
    p = add("pw-check", _cmd_pw_check,
            "area-perimeter torsion bound versus the element oracle")
    p.add_argument("--h-max", type=float, default=0.065)
    add("corollary-check", _cmd_corollary_check,
        "equal-area disc comparison in the low-alpha window", alpha=True)
    p = add("oracle-verify", _cmd_oracle_verify,
            "series energies against the element oracle", alpha=True)
    p.add_argument("--h-max", type=float, default=0.065)
    p = add("corpus", _cmd_corpus, "random-domain ball-comparison verdicts")
    p.add_argument("--count", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    return parser


def _all_parsers(parser) -> list:
    out, stack = [], [parser]
    while stack:
        cur = stack.pop()
        out.append(cur)
        for act in cur._actions:
            if isinstance(act, argparse._SubParsersAction):
                stack.extend(act.choices.values())
    return out


def _all_dests(parser) -> set:
    dests = set()
    for cur in _all_parsers(parser):
        for act in cur._actions:
            if not isinstance(act, argparse._SubParsersAction) \
                    and act.dest != "help":
                dests.add(act.dest)
    return dests


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    path = None
    for at, tok in enumerate(argv):
        if tok == "--config":
            if at + 1 >= len(argv):
                print("invalid configuration: --config needs a path",
                      file=sys.stderr)
                return 2
            path = argv[at + 1]
            argv = argv[:at] + argv[at + 2:]
            break
        if tok.startswith("--config="):
            path = tok.split("=", 1)[1]
            argv = argv[:at] + argv[at + 1:]
            break
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            print(f"invalid configuration: {exc}", file=sys.stderr)
            return 2
        known = _all_dests(parser)
        bad = set(cfg) - known
        if bad:
            print(f"invalid configuration: unknown keys {sorted(bad)}",
                  file=sys.stderr)
            return 2
        # subparsers parse into fresh namespaces, so push defaults into each
        for sub in _all_parsers(parser):
            dests = {a.dest for a in sub._actions}
            sub.set_defaults(**{k: v for k, v in cfg.items() if k in dests})
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except (SolverError, ArithmeticError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 3
    except (ValueError, OSError) as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
