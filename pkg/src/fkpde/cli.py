"""The ``fk`` command line tool.

Subcommands: gen-ic, solve-ref, solve-mc, export-op, bench, serve.
PDE configs and experiment configs are flat key=value text files; fields
travel as FKF1, operators as FKW1. Exit codes: 0 ok, 2 if any benchmark
row blew up, 3 on configuration errors.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import fileio
from .bench import ConfigError, parse_config, run_experiment, write_report
from .grid import BoundaryKind, make_grid
from .kernel import PropagatorConfig
from .pdes import (AllenCahn, ConvectionDiffusion, NavierStokesVorticity, PdeSpec)
from .refsolvers import (Blowup, crank_nicolson_ns_solve, fd_allen_cahn_solve,
                         mc_solve_full, spectral_convdiff_solve)
from .sampling import GrfSpec, sample_fourier_ic, sample_grf
from .service import MAX_POINTS_DEFAULT, PropagationService, export_operator


def _parse_kv(text: str) -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        out[key] = val
    return out


def load_pde_config(path) -> tuple[PdeSpec, int]:
    """Read a PDE config file -> (PdeSpec, sine-series frequency cap N)."""
    with open(path) as fh:
        kv = _parse_kv(fh.read())
    try:
        name = kv["pde"]
        default_res = "65" if name == "allencahn" else "64"
        res = [int(r) for r in kv.get("grid", default_res).lower().split("x")]
        frames = int(kv.get("frames", 10))
        N = int(kv.get("N", 5))
        if name == "convdiff":
            grid = make_grid(1, res[0], 1.0, BoundaryKind.PERIODIC)
            kind = ConvectionDiffusion(beta=float(kv.get("beta", 0.1)),
                                       kappa=float(kv.get("kappa", 0.005)))
            T = float(kv.get("T", 2.0))
        elif name == "allencahn":
            boundary = BoundaryKind(kv.get("boundary", "dirichlet0"))
            grid = make_grid(1, res[0], 1.0, boundary)
            kind = AllenCahn(boundary=boundary, kappa=float(kv.get("kappa", 0.01)))
            T = float(kv.get("T", 1.0))
        elif name == "navierstokes":
            grid = make_grid(2, res if len(res) == 2 else res[0], 1.0, BoundaryKind.PERIODIC)
            kind = NavierStokesVorticity(nu=float(kv.get("nu", 1e-4)),
                                         forcing=kv.get("forcing", "li"))
            T = float(kv.get("T", 10.0))
        else:
            raise ConfigError(f"unknown pde {name!r}")
        return PdeSpec(kind, grid, T, frames), N
    except KeyError as e:
        raise ConfigError(f"pde config is missing key {e}")
    except (ValueError, TypeError) as e:
        raise ConfigError(str(e))


def _cmd_gen_ic(args) -> int:
    pde, N = load_pde_config(args.pde_config)
    rng = np.random.default_rng(args.seed)
    if isinstance(pde.kind, NavierStokesVorticity):
        fields = [sample_grf(GrfSpec(), pde.grid, rng) for _ in range(args.count)]
    else:
        fields = [sample_fourier_ic(N, pde.grid, rng) for _ in range(args.count)]
    fileio.write_fields(args.out, fields)
    print(f"wrote {args.count} initial conditions to {args.out}")
    return 0


def _cmd_solve_ref(args) -> int:
    pde, _ = load_pde_config(args.pde_config)
    ics = fileio.read_fields(args.ic)
    kind = pde.kind
    out = []
    blowups = 0
    for ic in ics:
        try:
            if isinstance(kind, ConvectionDiffusion):
                traj = spectral_convdiff_solve(ic, kind.beta, kind.kappa, max(args.steps, pde.frames),
                                               pde.frames, pde.horizon, scheme=args.scheme)
            elif isinstance(kind, AllenCahn):
                traj = fd_allen_cahn_solve(ic, kind.boundary, args.steps, pde.frames,
                                           pde.horizon, kind.kappa)
            else:
                traj = crank_nicolson_ns_solve(ic, kind.nu, kind.forcing, args.steps,
                                               pde.frames, pde.horizon)
            out.extend(traj)
        except Blowup as e:
            print(f"blowup: {e}", file=sys.stderr)
            blowups += 1
    if out:
        fileio.write_fields(args.out, out)
        print(f"wrote {len(out)} frames ({pde.frames} per initial condition) to {args.out}")
    return 2 if blowups else 0


def _cmd_solve_mc(args) -> int:
    pde, _ = load_pde_config(args.pde_config)
    if not isinstance(pde.kind, ConvectionDiffusion):
        raise ConfigError("solve-mc covers the linear convection-diffusion case only")
    ics = fileio.read_fields(args.ic)
    out = []
    for ic in ics:
        out.extend(mc_solve_full(ic, pde.kind.beta, pde.kind.kappa, args.particles,
                                 args.steps, args.seed, pde.frames, pde.horizon))
    fileio.write_fields(args.out, out)
    print(f"wrote {len(out)} frames to {args.out}")
    return 0


def _cmd_export_op(args) -> int:
    pde, _ = load_pde_config(args.pde_config)
    dt = args.dt if args.dt is not None else pde.horizon / pde.frames
    config = PropagatorConfig(dt=dt, epsilon=args.epsilon)
    op = export_operator(pde, config, args.out)
    print(f"wrote operator ({op.rows} rows, {op.weights.size} nnz, dt={dt}) to {args.out}")
    return 0


def _cmd_bench(args) -> int:
    with open(args.config) as fh:
        cfg = parse_config(fh.read())
    report = run_experiment(cfg)
    csvs = write_report(report, args.out)
    print(f"wrote {args.out} and {len(csvs)} CSV file(s)")
    if not args.no_figures:
        from .figures import render_error_curves
        stem = args.out[:-5] if args.out.endswith(".json") else args.out
        figs = render_error_curves(report.results, stem)
        print(f"rendered {len(figs)} figure(s)")
    for case in report.results["cases"]:
        if case["blowup"]:
            print(f"case {case['case']}: BLOWUP", file=sys.stderr)
        else:
            print(f"case {case['case']}: E_l2 = {100 * case['e_l2_mean']:.3f}% "
                  f"+- {100 * case['e_l2_std']:.3f}%, "
                  f"E_linf = {100 * case['e_linf_mean']:.3f}%")
    return 2 if report.any_blowup else 0


def _cmd_serve(args) -> int:
    pde, _ = load_pde_config(args.pde_config)
    dt = args.dt if args.dt is not None else pde.horizon / pde.frames
    config = PropagatorConfig(dt=dt, epsilon=args.epsilon)
    service = PropagationService(pde, config, max_points=args.max_points)
    if args.transport == "stdio":
        service.serve_stdio()
        return 0
    if args.transport.startswith("tcp:"):
        port = int(args.transport[4:])
        service.serve_tcp(port, ready_callback=lambda p: print(f"listening on {p}", flush=True))
        return 0
    raise ConfigError(f"transport must be stdio or tcp:PORT, got {args.transport!r}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fk", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-ic", help="sample initial conditions into an FKF1 file")
    g.add_argument("--pde", "--pde-config", dest="pde_config", required=True)
    g.add_argument("--count", type=int, default=10)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=_cmd_gen_ic)

    s = sub.add_parser("solve-ref", help="run the suite's reference solver on stored ICs")
    s.add_argument("--pde-config", required=True)
    s.add_argument("--ic", required=True)
    s.add_argument("--steps", type=int, default=2000)
    s.add_argument("--scheme", default="rk2", choices=("rk2", "exact"),
                   help="convection-diffusion time scheme")
    s.add_argument("--out", required=True)
    s.set_defaults(func=_cmd_solve_ref)

    m = sub.add_parser("solve-mc", help="particle Monte Carlo solver on stored ICs")
    m.add_argument("--pde-config", required=True)
    m.add_argument("--ic", required=True)
    m.add_argument("--particles", type=int, default=2000)
    m.add_argument("--steps", type=int, default=200)
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--out", required=True)
    m.set_defaults(func=_cmd_solve_mc)

    e = sub.add_parser("export-op", help="export the linear propagation operator (FKW1)")
    e.add_argument("--pde-config", required=True)
    e.add_argument("--dt", type=float, default=None, help="default: horizon/frames")
    e.add_argument("--epsilon", type=float, default=1e-4)
    e.add_argument("--out", required=True)
    e.set_defaults(func=_cmd_export_op)

    b = sub.add_parser("bench", help="run a benchmark experiment")
    b.add_argument("--config", required=True)
    b.add_argument("--out", required=True)
    b.add_argument("--no-figures", action="store_true")
    b.set_defaults(func=_cmd_bench)

    v = sub.add_parser("serve", help="serve PROPAGATE/DRIFT/PING over stdio or TCP")
    v.add_argument("--pde-config", required=True)
    v.add_argument("--dt", type=float, default=None)
    v.add_argument("--epsilon", type=float, default=1e-4)
    v.add_argument("--transport", default="stdio")
    v.add_argument("--max-points", type=int, default=MAX_POINTS_DEFAULT)
    v.set_defaults(func=_cmd_serve)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 3
    except (FileNotFoundError, fileio.FormatError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
