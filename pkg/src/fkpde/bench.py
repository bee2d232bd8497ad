"""Benchmark harness: error metrics, experiment orchestration, reports.

An experiment = (suite, case, solver-under-test, seeds). Per seed, the
solver runs on every test initial condition and its trajectory is scored
against the suite's reference solver; the report carries per-seed rows,
the mean/std across seeds, per-frame error curves and wall-clock timings.
The results payload is bitwise deterministic given the config; timings are
kept in a separate section for that reason.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass

import numpy as np

from .grid import BoundaryKind, Field, make_grid
from .kernel import AUTO, HEUN, PropagatorConfig, propagate
from .pdes import (PdeSpec, allencahn_case, convdiff_case, navierstokes_case)
from .refsolvers import (Blowup, convdiff_reference, crank_nicolson_ns_solve,
                         downsample, fd_allen_cahn_solve, mc_solve_full,
                         spectral_convdiff_solve)
from .sampling import GrfSpec, fourier_series_field, sample_grf

SUITES = ("convdiff", "allencahn", "navierstokes")
SOLVERS = ("propagator", "particle_mc", "spectral")
CASES = ("E1", "E2", "E3", "E4")


class ConfigError(ValueError):
    """Bad experiment configuration (CLI exit code 3)."""


@dataclass
class ExperimentConfig:
    suite: str
    case: str = "E1"                 # E1..E4 or "all"
    solver: str = "propagator"
    solver_steps: int = 10           # propagator or spectral steps over the horizon
    particles: int = 2000            # particle_mc only
    test_count: int = 0              # 0 = scale default (50 desk, 200 paper scale)
    seeds: tuple = (0, 1, 2)
    drift_scheme: str = HEUN
    interpolation: str = AUTO
    epsilon: float = 1e-4
    ref_steps: int = 0               # 0 = per-suite default
    test_seed: int = -1              # -1 = suite default (1 for 1D suites, 0 for NS)
    resolution: int = 0              # 0 = suite default
    internal_resolution: int = 0     # spectral solver-under-test internals (0 = resolution)
    paper_scale: bool = False

    def __post_init__(self):
        if self.suite not in SUITES:
            raise ConfigError(f"suite must be one of {SUITES}, got {self.suite!r}")
        if self.case != "all" and self.case not in CASES:
            raise ConfigError(f"case must be E1..E4 or 'all', got {self.case!r}")
        if self.solver not in SOLVERS:
            raise ConfigError(f"solver must be one of {SOLVERS}, got {self.solver!r}")
        if not self.seeds:
            raise ConfigError("seeds must be nonempty")
        if self.test_count == 0:
            self.test_count = 200 if self.paper_scale else 50
        if self.solver_steps < 1 or self.test_count < 1 or self.particles < 1:
            raise ConfigError("solver_steps, test_count and particles must be positive")

    @property
    def cases(self) -> tuple:
        return CASES if self.case == "all" else (self.case,)


_BOOL = {"true": True, "false": False, "1": True, "0": False, "yes": True, "no": False}


def parse_config(text: str) -> ExperimentConfig:
    """Flat key=value lines; '#' starts a comment; seeds are comma-separated."""
    kv = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        kv[key] = val
    fields = {f.name: f.type for f in ExperimentConfig.__dataclass_fields__.values()}
    out = {}
    for key, val in kv.items():
        if key not in ExperimentConfig.__dataclass_fields__:
            raise ConfigError(f"unknown config key {key!r}")
        if key == "seeds":
            out[key] = tuple(int(s) for s in val.split(","))
        elif key == "paper_scale":
            if val.lower() not in _BOOL:
                raise ConfigError(f"paper_scale must be boolean, got {val!r}")
            out[key] = _BOOL[val.lower()]
        elif key in ("epsilon",):
            out[key] = float(val)
        elif key in ("suite", "case", "solver", "drift_scheme", "interpolation"):
            out[key] = val
        else:
            out[key] = int(val)
    if "suite" not in out:
        raise ConfigError("config must set suite")
    return ExperimentConfig(**out)


# ---------------------------------------------------------------------------
# metrics


def per_frame_errors(pred, ref) -> tuple[np.ndarray, np.ndarray]:
    """Per-frame relative l2 and linf errors of two equal-length trajectories."""
    if len(pred) != len(ref):
        raise ValueError(f"trajectories disagree on frame count: {len(pred)} vs {len(ref)}")
    e2, einf = [], []
    for p, r in zip(pred, ref):
        pv = p.values if isinstance(p, Field) else np.asarray(p)
        rv = r.values if isinstance(r, Field) else np.asarray(r)
        if pv.shape != rv.shape:
            raise ValueError("frame shapes disagree")
        denom2 = float(np.linalg.norm(rv.ravel()))
        denom_inf = float(np.max(np.abs(rv)))
        if denom2 == 0.0 or denom_inf == 0.0:
            raise ValueError("reference frame has zero norm")
        e2.append(float(np.linalg.norm((pv - rv).ravel())) / denom2)
        einf.append(float(np.max(np.abs(pv - rv))) / denom_inf)
    return np.asarray(e2), np.asarray(einf)


def relative_errors(pred, ref) -> tuple[float, float]:
    """Frame-averaged (E_l2, E_linf) of a predicted trajectory vs a reference."""
    e2, einf = per_frame_errors(pred, ref)
    return float(np.mean(e2)), float(np.mean(einf))


# ---------------------------------------------------------------------------
# suite wiring


@dataclass
class _SuiteSetup:
    pde: PdeSpec
    n_freq: int                      # sine-series frequency cap (1D suites)
    ics: list                        # task-grid ICs (one Field per test instance)
    references: list                 # list of trajectories (list[Field] per instance)
    desk_note: str
    ics_internal: list = None        # fine-grid ICs for the spectral solver-under-test

    def __post_init__(self):
        if self.ics_internal is None:
            self.ics_internal = self.ics


def _default_test_seed(suite: str) -> int:
    return 0 if suite == "navierstokes" else 1


def _setup_suite(cfg: ExperimentConfig, case: str) -> _SuiteSetup:
    test_seed = cfg.test_seed if cfg.test_seed >= 0 else _default_test_seed(cfg.suite)
    rng = np.random.default_rng(test_seed)
    if cfg.suite == "convdiff":
        res = cfg.resolution or 64
        pde, N = convdiff_case(case, resolution=res)
        kind = pde.kind
        coeffs = [rng.uniform(0, 1, N) for _ in range(cfg.test_count)]
        ics = [fourier_series_field(a, pde.grid) for a in coeffs]
        if cfg.paper_scale:
            fine = make_grid(1, 1024, 1.0, BoundaryKind.PERIODIC)
            steps = cfg.ref_steps or int(round(pde.horizon / 1e-5))
            refs = [[downsample(f, res) for f in
                     spectral_convdiff_solve(fourier_series_field(a, fine), kind.beta,
                                             kind.kappa, steps, pde.frames, pde.horizon)]
                    for a in coeffs]
            note = f"reference: RK2 pseudo-spectral, grid 1024 -> {res}, {steps} steps"
        else:
            refs = [convdiff_reference(ic, kind.beta, kind.kappa, pde.frames, pde.horizon)
                    for ic in ics]
            note = "reference: exact integrating-factor modes (desk scale)"
        return _SuiteSetup(pde, N, ics, refs, note)

    if cfg.suite == "allencahn":
        res = cfg.resolution or 65
        pde, N = allencahn_case(case, resolution=res)
        boundary = pde.kind.boundary
        coeffs = [rng.uniform(0, 1, N) for _ in range(cfg.test_count)]
        ics = [fourier_series_field(a, pde.grid) for a in coeffs]
        if cfg.paper_scale:
            fine_res, dt_ref = 1025, 1e-6
        else:
            # 1025 at dt=1e-4 violates the explicit RK2 diffusion stability
            # bound kappa*dt/h^2 <= 0.5, so desk scale refines less in space.
            fine_res, dt_ref = 8 * (res - 1) + 1, 1e-4
        fine = make_grid(1, fine_res, 1.0, boundary)
        steps = cfg.ref_steps or int(round(pde.horizon / dt_ref))
        steps = _round_steps(steps, pde.frames)
        refs = [[downsample(f, res) for f in
                 fd_allen_cahn_solve(fourier_series_field(a, fine), boundary, steps,
                                     pde.frames, pde.horizon, pde.kind.kappa)]
                for a in coeffs]
        note = f"reference: FD RK2, grid {fine_res} -> {res}, {steps} steps"
        return _SuiteSetup(pde, N, ics, refs, note)

    res = cfg.resolution or 64
    pde = navierstokes_case(case, resolution=res)
    internal = cfg.internal_resolution or (256 if cfg.paper_scale else res)
    if internal > res:
        fine = make_grid(2, internal, 1.0, BoundaryKind.PERIODIC)
        ics_fine = [sample_grf(GrfSpec(), fine, rng) for _ in range(cfg.test_count)]
        ics = [downsample(f, res) for f in ics_fine]
        steps = cfg.ref_steps or (int(round(pde.horizon / 1e-4)) if cfg.paper_scale else 10000)
        steps = _round_steps(steps, pde.frames)
        refs = [[downsample(f, res) for f in
                 crank_nicolson_ns_solve(ic, pde.kind.nu, pde.kind.forcing, steps,
                                         pde.frames, pde.horizon)]
                for ic in ics_fine]
        note = f"reference: CN pseudo-spectral, grid {internal}^2 -> {res}^2, {steps} steps"
        return _SuiteSetup(pde, 0, ics, refs, note, ics_internal=ics_fine)
    ics = [sample_grf(GrfSpec(), pde.grid, rng) for _ in range(cfg.test_count)]
    steps = cfg.ref_steps or 2000
    steps = _round_steps(steps, pde.frames)
    refs = [crank_nicolson_ns_solve(ic, pde.kind.nu, pde.kind.forcing, steps,
                                    pde.frames, pde.horizon) for ic in ics]
    note = f"reference: CN pseudo-spectral at {res}^2 (desk scale), {steps} steps"
    return _SuiteSetup(pde, 0, ics, refs, note)


def _round_steps(steps: int, frames: int) -> int:
    return max(frames, int(math.ceil(steps / frames)) * frames)


def iterate_propagator(ic: Field, pde: PdeSpec, config: PropagatorConfig,
                       steps: int, frames: int) -> list[Field]:
    """Apply the one-step propagator ``steps`` times, recording ``frames``
    uniformly spaced snapshots (steps must be divisible by frames)."""
    if steps % frames:
        raise ValueError("steps must be divisible by frames")
    rec = steps // frames
    u = ic
    out = []
    for s in range(1, steps + 1):
        u = propagate(u, pde, (s - 1) * config.dt, config)
        if s % rec == 0:
            out.append(u)
    return out


def _run_solver(cfg: ExperimentConfig, setup: _SuiteSetup, seed: int, i: int) -> list[Field]:
    pde = setup.pde
    if cfg.solver == "propagator":
        pconf = PropagatorConfig(dt=pde.horizon / cfg.solver_steps, epsilon=cfg.epsilon,
                                 drift_scheme=cfg.drift_scheme, interpolation=cfg.interpolation)
        return iterate_propagator(setup.ics[i], pde, pconf, cfg.solver_steps, pde.frames)
    if cfg.solver == "particle_mc":
        if cfg.suite != "convdiff":
            raise ConfigError("particle_mc covers the linear convection-diffusion suite only")
        kind = pde.kind
        steps = cfg.solver_steps if cfg.solver_steps > pde.frames else 200
        return mc_solve_full(setup.ics[i], kind.beta, kind.kappa, cfg.particles, steps, seed,
                             pde.frames, pde.horizon)
    # spectral solver-under-test (Table 5 protocol, possibly on finer internals)
    ic = setup.ics_internal[i]
    steps = _round_steps(cfg.solver_steps, pde.frames)
    if cfg.suite == "navierstokes":
        traj = crank_nicolson_ns_solve(ic, pde.kind.nu, pde.kind.forcing, steps,
                                       pde.frames, pde.horizon)
    elif cfg.suite == "convdiff":
        traj = spectral_convdiff_solve(ic, pde.kind.beta, pde.kind.kappa, steps,
                                       pde.frames, pde.horizon)
    else:
        traj = fd_allen_cahn_solve(ic, pde.kind.boundary, steps, pde.frames,
                                   pde.horizon, pde.kind.kappa)
    if ic.grid != pde.grid:
        traj = [downsample(f, pde.grid.resolution) for f in traj]
    return traj


# ---------------------------------------------------------------------------
# the experiment loop


@dataclass
class Report:
    results: dict
    timings: dict

    def to_json(self, indent: int = 2) -> str:
        return json.dumps({"results": self.results, "timings": self.timings}, indent=indent)

    @property
    def any_blowup(self) -> bool:
        return any(c["blowup"] for c in self.results["cases"])


def run_experiment(cfg: ExperimentConfig) -> Report:
    t_start = time.perf_counter()
    cases_out = []
    timings = {}
    for case in cfg.cases:
        t0 = time.perf_counter()
        setup = _setup_suite(cfg, case)
        t_ref = time.perf_counter() - t0

        t0 = time.perf_counter()
        seed_rows = []
        for seed in cfg.seeds:
            e2_per, einf_per = [], []
            frame_curves_l2, frame_curves_linf = [], []
            blew_up = False
            for i, ref in enumerate(setup.references):
                try:
                    traj = _run_solver(cfg, setup, seed, i)
                except Blowup:
                    blew_up = True
                    break
                f2, finf = per_frame_errors(traj, ref)
                frame_curves_l2.append(f2)
                frame_curves_linf.append(finf)
                e2_per.append(float(np.mean(f2)))
                einf_per.append(float(np.mean(finf)))
            if blew_up:
                seed_rows.append({"seed": seed, "blowup": True,
                                  "e_l2": None, "e_linf": None,
                                  "per_frame_l2": None, "per_frame_linf": None})
            else:
                seed_rows.append({
                    "seed": seed, "blowup": False,
                    "e_l2": float(np.mean(e2_per)), "e_linf": float(np.mean(einf_per)),
                    "per_frame_l2": np.mean(frame_curves_l2, axis=0).tolist(),
                    "per_frame_linf": np.mean(frame_curves_linf, axis=0).tolist(),
                })
        t_solve = time.perf_counter() - t0

        ok = [r for r in seed_rows if not r["blowup"]]
        agg = {}
        for key in ("e_l2", "e_linf"):
            vals = [r[key] for r in ok]
            agg[f"{key}_mean"] = float(np.mean(vals)) if vals else None
            agg[f"{key}_std"] = float(np.std(vals)) if vals else None
        cases_out.append({
            "case": case, "desk_note": setup.desk_note,
            "seeds": seed_rows, **agg,
            "blowup": any(r["blowup"] for r in seed_rows),
        })
        timings[case] = {"reference_s": t_ref, "solver_s": t_solve}
    timings["total_s"] = time.perf_counter() - t_start
    results = {"config": _config_echo(cfg), "cases": cases_out}
    return Report(results=results, timings=timings)


def _config_echo(cfg: ExperimentConfig) -> dict:
    echo = asdict(cfg)
    echo["seeds"] = list(cfg.seeds)
    return echo


def write_report(report: Report, out_path) -> list:
    """Write the JSON report plus one per-frame CSV per case; returns CSV paths."""
    out_path = str(out_path)
    with open(out_path, "w") as fh:
        fh.write(report.to_json())
    stem = out_path[:-5] if out_path.endswith(".json") else out_path
    csv_paths = []
    for case in report.results["cases"]:
        rows = _mean_frame_curves(case)
        path = f"{stem}_{case['case']}.csv"
        with open(path, "w") as fh:
            fh.write("frame,e_l2,e_linf\n")
            for i, (a, b) in enumerate(rows, 1):
                fh.write(f"{i},{a:.10g},{b:.10g}\n")
        csv_paths.append(path)
    return csv_paths


def _mean_frame_curves(case: dict) -> list:
    ok = [r for r in case["seeds"] if not r["blowup"]]
    if not ok:
        return []
    l2 = np.mean([r["per_frame_l2"] for r in ok], axis=0)
    linf = np.mean([r["per_frame_linf"] for r in ok], axis=0)
    return list(zip(l2.tolist(), linf.tolist()))
