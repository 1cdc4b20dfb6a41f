"""Command-line entry point: reproducible solve/radial/bounds/verify/sweep
experiments with JSON reports and CSV field dumps.

Exit-code contract: 0 success, 1 usage/config error, 2 numerical failure.
All randomness is seed-determined and reports omit timing, so reruns with
identical seeds produce byte-identical outputs.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from . import __version__

_DOMAINS = ("interval", "rectangle", "disc", "annulus")


@dataclass
class RunConfig:
    """Solve-command parameters; round-trips losslessly through JSON."""

    domain: str = "disc"
    q: float = 1.0
    half_length: float = 1.0
    sides: list[float] | None = None
    radius: float = 1.0
    radii: list[float] | None = None
    n: int = 2048
    nr: int = 64
    ntheta: int = 128
    seed: int = 0
    starts: int = 8
    max_iter: int = 20000
    grad_tol: float = 1e-6
    energy_tol: float = 1e-11
    out: str = "out"

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        for key in d:
            if key not in known:
                raise ValueError(f"unknown config key: {key!r}")
        return cls(**d)

    def domain_spec(self):
        from . import geometry
        if self.domain == "interval":
            return geometry.DomainSpec.interval(self.half_length)
        if self.domain == "rectangle":
            a, b = self.sides if self.sides else (1.0, 1.0)
            return geometry.DomainSpec.rectangle(a, b)
        if self.domain == "disc":
            return geometry.DomainSpec.disc(self.radius)
        if self.domain == "annulus":
            rin, rout = self.radii if self.radii else (0.5, 1.0)
            return geometry.DomainSpec.annulus(rin, rout)
        raise ValueError(f"unknown domain: {self.domain!r}")

    def resolution(self):
        if self.domain == "interval":
            return self.n
        if self.domain == "rectangle":
            return (self.n, self.n)
        return (self.nr, self.ntheta)


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _diagnose(grid, u, q):
    """Full diagnostic block for a computed field."""
    import numpy as np

    from . import diagnostics
    scale = float(np.max(np.abs(u))) if u.size else 0.0
    deltas = np.geomspace(max(scale, 1e-12) * 1e-7, max(scale, 1e-12) / 2, 24)
    curve = diagnostics.zero_measure_curve(grid, u, deltas)
    res = diagnostics.pde_residual(grid, u, q)
    out = {
        "nodal_domains": diagnostics.nodal_domains(grid, u),
        "pde_residual": {
            "interior_norm": res.interior_norm,
            "bracket_violation": res.bracket_violation,
            "flux_norm": res.flux_norm,
            "quantization_floor": res.floor,
        },
        "zero_measure": {
            "kappa_hat": curve.kappa_hat,
            "floor": curve.floor,
            "measure_at_floor": curve.measure_at_floor(),
        },
    }
    if grid.is_polar:
        fs = diagnostics.foliated_schwarz_check(grid, u)
        out["radiality_deviation"] = diagnostics.radiality_deviation(grid, u)
        out["foliated_schwarz"] = {
            "passed": fs.passed,
            "axis_angle": fs.axis_angle,
            "axis_method": fs.axis_method,
            "monotonicity_violation": fs.monotonicity_violation,
            "polarization_defect": fs.polarization_defect,
        }
    return out, curve


def cmd_solve(args) -> int:
    from . import diagnostics, functional, geometry, minimize
    try:
        cfg = _config_from_args(args)
        spec = cfg.domain_spec()
        grid = geometry.build_grid(spec, cfg.resolution())
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    prob = functional.ProblemSpec(grid, cfg.q)
    scfg = minimize.SolveConfig(seed=cfg.seed, starts=cfg.starts,
                                max_iter=cfg.max_iter, grad_tol=cfg.grad_tol,
                                energy_tol=cfg.energy_tol)
    t0 = time.perf_counter()
    report = minimize.multistart(prob, scfg)
    elapsed = time.perf_counter() - t0

    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    geometry.write_field_csv(grid, report.u, out / "field.csv")
    diag, curve = _diagnose(grid, report.u, cfg.q)
    diagnostics.write_zero_curve_csv(curve, out / "zero_curve.csv")
    _write_json(out / "diagnostics.json", diag)
    payload = report.to_dict(grid)
    payload["config"] = {k: v for k, v in cfg.to_dict().items() if k != "out"}
    payload["field_csv"] = "field.csv"
    payload["version"] = __version__
    _write_json(out / "report.json", payload)

    print(f"domain={cfg.domain} q={cfg.q} energy={report.energy:.9f} "
          f"iterations={report.iterations} converged={report.converged} "
          f"({elapsed:.2f}s)")
    print(f"wrote {out / 'report.json'}")
    return 0 if report.converged else 2


def cmd_radial(args) -> int:
    import numpy as np

    from . import radial
    n_dim, q = args.N, args.q
    if n_dim < 2 or not 1.0 <= q < 2.0:
        print(f"invalid N or q: N={n_dim}, q={q}", file=sys.stderr)
        return 1
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    payload = {"N": n_dim, "q": q, "version": __version__}

    m_r = radial.m_radial(n_dim, q)
    payload["m_r"] = m_r
    profile = radial.shoot_neumann(q, n_dim, tol=args.tol)
    payload["shoot"] = {
        "u0": float(profile.u[0]),
        "du_at_1": float(profile.du[-1]),
        "sign_changes": profile.sign_changes(),
        "residual": radial.radial_residual(profile),
    }
    lp = radial.liouville_transform(profile)
    payload["liouville_residual"] = radial.liouville_residual(lp)
    if q == 1.0:
        exact = radial.closed_form_q1(n_dim, r=profile.r)
        payload["closed_form_sup_error"] = float(np.max(np.abs(profile.u - exact.u)))
        payload["h_monotone"] = radial.h_energy_monotone(profile)
        payload["energy_quadrature"] = radial.profile_energy(radial.closed_form_q1(n_dim))
    radial.write_profile_csv(profile, out / "profile.csv")
    _write_json(out / "radial_report.json", payload)
    print(f"N={n_dim} q={q} m_r = {m_r:.7f}")
    if "closed_form_sup_error" in payload:
        print(f"closed-form sup error = {payload['closed_form_sup_error']:.3e}")
    print(f"|u'(1)| = {abs(payload['shoot']['du_at_1']):.3e}")
    return 0


def cmd_bounds(args) -> int:
    from . import radial
    n_lo, n_hi = args.n_min, args.n_max
    if not (2 <= n_lo <= n_hi <= 16):
        print(f"invalid N range [{n_lo}, {n_hi}]", file=sys.stderr)
        return 1
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    all_hold = True
    for n_dim in range(n_lo, n_hi + 1):
        if n_dim == 2:
            upper = radial.test_function_bound(2, 0.0)
            m_r = radial.m_radial(2, 1.0)
            holds = upper < m_r
            h3 = radial.h_value(3.0)
            cubic_ok = None
        else:
            rep = radial.check_inequality_chain(n_dim)
            upper, m_r, holds = rep.upper, rep.m_r, rep.holds
            h3, cubic_ok = rep.h3, rep.h3_cubic_ok
        all_hold &= holds
        rows.append({"N": n_dim, "upper_bound": upper, "m_r": m_r,
                     "holds": holds, "h3": h3, "h3_cubic_ok": cubic_ok})
        print(f"N={n_dim}: upper={upper:.7f}  m_r={m_r:.7f}  "
              f"holds={holds}  h3={h3:.6f}")
    with (out / "bounds.csv").open("w", newline="") as fh:
        import csv as _csv
        wr = _csv.writer(fh)
        wr.writerow(["N", "upper_bound", "m_r", "holds", "h3", "h3_cubic_ok"])
        for row in rows:
            wr.writerow([row["N"], f"{row['upper_bound']:.17g}",
                         f"{row['m_r']:.17g}", int(row["holds"]),
                         f"{row['h3']:.17g}",
                         "" if row["h3_cubic_ok"] is None else int(row["h3_cubic_ok"])])
    _write_json(out / "bounds.json", {"rows": rows, "all_hold": all_hold,
                                      "version": __version__})
    return 0 if all_hold else 2


def cmd_verify(args) -> int:
    from . import diagnostics, functional, geometry
    try:
        report = json.loads(Path(args.report).read_text())
        grid = geometry.grid_from_dict(report)
        field_path = Path(args.report).parent / report.get("field_csv", "field.csv")
        u = geometry.read_field_csv(field_path)
        if u.shape[0] != grid.n_nodes:
            raise ValueError("field dump does not match the embedded grid")
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"unreadable dump: {exc}", file=sys.stderr)
        return 1
    q = args.q if args.q is not None else float(report["q"])
    res = diagnostics.pde_residual(grid, u, q)
    check = functional.in_constraint(functional.ProblemSpec(grid, q), u)
    print(f"interior_norm={res.interior_norm:.3e} "
          f"bracket_violation={res.bracket_violation:.3e} "
          f"flux_norm={res.flux_norm:.3e} "
          f"constraint_residual={check.residual:.3e}")
    # the constraint allowance covers sign-set quantization when a continuum
    # solution is sampled onto the grid (about one layer of boundary cells)
    ok = (res.interior_norm <= args.max_interior
          and res.bracket_violation <= args.max_bracket
          and res.flux_norm <= args.max_flux
          and check.residual <= args.max_constraint * grid.domain.measure)
    if grid.is_polar:
        fs = diagnostics.foliated_schwarz_check(grid, u)
        print(f"nodal_domains={diagnostics.nodal_domains(grid, u)} "
              f"radiality_deviation={diagnostics.radiality_deviation(grid, u):.3f} "
              f"foliated_schwarz={fs.passed}")
    print("verify:", "ok" if ok else "failed thresholds")
    return 0 if ok else 2


def cmd_sweep(args) -> int:
    from . import geometry, minimize
    try:
        q_list = [float(s) for s in args.q_list.split(",") if s]
        if not q_list or any(not 1.0 <= q < 2.0 for q in q_list):
            raise ValueError(f"exponents must lie in [1, 2): {q_list}")
        if sorted(q_list, reverse=True) != q_list:
            raise ValueError("exponent list must be descending")
        cfg = _config_from_args(args)
        grid = geometry.build_grid(cfg.domain_spec(), cfg.resolution())
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    scfg = minimize.SolveConfig(seed=cfg.seed, starts=cfg.starts,
                                max_iter=cfg.max_iter, grad_tol=cfg.grad_tol,
                                energy_tol=cfg.energy_tol)
    t0 = time.perf_counter()
    reports = minimize.continuation_sweep(grid, q_list, scfg)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    with (out / "sweep.csv").open("w", newline="") as fh:
        import csv as _csv
        wr = _csv.writer(fh)
        wr.writerow(["q", "energy", "iterations", "constraint", "converged"])
        for q, rep in zip(q_list, reports):
            wr.writerow([f"{q:.17g}", f"{rep.energy:.17g}", rep.iterations,
                         rep.constraint, int(rep.converged)])
    for q, rep in zip(q_list, reports):
        print(f"t={time.perf_counter() - t0:8.2f}s  q={q:.4f}  "
              f"energy={rep.energy:.9f}  ({rep.constraint})")
    print(f"wrote {out / 'sweep.csv'}")
    return 0 if all(r.converged for r in reports) else 2


def _config_from_args(args) -> RunConfig:
    base = {}
    if getattr(args, "config", None):
        base = json.loads(Path(args.config).read_text())
    cfg = RunConfig.from_dict(base)
    for name in ("domain", "q", "half_length", "radius", "n", "nr", "ntheta",
                 "seed", "starts", "max_iter", "grad_tol", "energy_tol", "out"):
        val = getattr(args, name, None)
        if val is not None:
            setattr(cfg, name, val)
    if getattr(args, "sides", None):
        cfg.sides = [float(v) for v in args.sides]
    if getattr(args, "radii", None):
        cfg.radii = [float(v) for v in args.radii]
    if cfg.domain not in _DOMAINS:
        raise ValueError(f"unknown domain: {cfg.domain!r}")
    return cfg


def _add_solve_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--domain", choices=_DOMAINS, default=None)
    p.add_argument("--q", type=float, default=None)
    p.add_argument("--L", dest="half_length", type=float, default=None,
                   help="interval half-length")
    p.add_argument("--sides", type=float, nargs=2, default=None,
                   help="rectangle side lengths")
    p.add_argument("--R", dest="radius", type=float, default=None,
                   help="disc radius")
    p.add_argument("--radii", type=float, nargs=2, default=None,
                   help="annulus inner and outer radii")
    p.add_argument("--n", type=int, default=None, help="nodes per direction")
    p.add_argument("--nr", type=int, default=None, help="radial rings")
    p.add_argument("--ntheta", type=int, default=None, help="angular nodes")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--starts", type=int, default=None)
    p.add_argument("--max-iter", dest="max_iter", type=int, default=None)
    p.add_argument("--grad-tol", dest="grad_tol", type=float, default=None)
    p.add_argument("--energy-tol", dest="energy_tol", type=float, default=None)
    p.add_argument("--out", type=str, default=None)
    p.add_argument("--config", type=str, default=None,
                   help="JSON file with RunConfig values")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="nodal-lab",
        description="Least-energy sign-changing solutions of the sublinear "
                    "Neumann problem by constrained minimization.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="minimize the constrained energy")
    _add_solve_args(p_solve)

    p_rad = sub.add_parser("radial", help="radial two-point solve and bounds")
    p_rad.add_argument("--N", type=int, required=True)
    p_rad.add_argument("--q", type=float, default=1.0)
    p_rad.add_argument("--tol", type=float, default=1e-8)
    p_rad.add_argument("--out", type=str, default="out")

    p_bnd = sub.add_parser("bounds", help="test-function bounds vs radial energies")
    p_bnd.add_argument("--n-min", type=int, default=2)
    p_bnd.add_argument("--n-max", type=int, default=10)
    p_bnd.add_argument("--out", type=str, default="out")

    p_ver = sub.add_parser("verify", help="re-run diagnostics on a stored field")
    p_ver.add_argument("report", type=str, help="path to a solve report JSON")
    p_ver.add_argument("--q", type=float, default=None)
    p_ver.add_argument("--max-interior", type=float, default=0.1)
    p_ver.add_argument("--max-bracket", type=float, default=1e-8)
    p_ver.add_argument("--max-flux", type=float, default=1e-8)
    p_ver.add_argument("--max-constraint", type=float, default=0.02,
                       help="constraint residual allowance, relative to |Omega|")

    p_swp = sub.add_parser("sweep", help="exponent continuation study")
    p_swp.add_argument("--q-list", type=str, required=True,
                       help="descending comma-separated exponents in [1, 2)")
    _add_solve_args(p_swp)

    args = parser.parse_args(argv)
    handler = {"solve": cmd_solve, "radial": cmd_radial, "bounds": cmd_bounds,
               "verify": cmd_verify, "sweep": cmd_sweep}[args.command]
    try:
        return handler(args)
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
