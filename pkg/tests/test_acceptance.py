"""Acceptance suite: the nine exit criteria, one test per criterion.

Each test prints a single PASS/FAIL line (run with -s or -v to see them
live). Tolerances are pinned here, not calibrated at runtime. Monte Carlo
criteria use fixed seeds, so every run is deterministic.
"""

import math
import warnings

import numpy as np
from conftest import diffusion_only_pde
from scipy.stats import norm as scipy_norm

from fkpde.bench import (ExperimentConfig, iterate_propagator, relative_errors,
                         run_experiment)
from fkpde.grid import BoundaryKind, Field, make_grid
from fkpde.kernel import (EULER, OFF, PropagatorConfig, build_kernel,
                          mc_propagate, propagate, select_radius)
from fkpde.pdes import ConvectionDiffusion, PdeSpec, navierstokes_case
from fkpde.refsolvers import Blowup, crank_nicolson_ns_solve, downsample
from fkpde.sampling import GrfSpec, sample_grf

warnings.simplefilter("ignore", UserWarning)


def report(name: str, ok: bool, detail: str):
    print(f"\n{name} {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok, f"{name}: {detail}"


def test_p1_propagator_exact_on_linear_modes():
    g = make_grid(1, 64)
    x = g.axis_coords(0)
    # The tail the radius rule discards enters the mode symbol additively, so
    # resolving the n = 10, kappa = 0.01 mode (decayed to 3.7e-4) to 0.1%
    # needs a tail far below the 1e-4 default; this criterion pins its own.
    cfg = PropagatorConfig(dt=0.2, epsilon=1e-8, normalization_tolerance=1e-6)
    worst = 0.0
    for kappa in (0.005, 0.01):
        pde = PdeSpec(ConvectionDiffusion(beta=0.1, kappa=kappa), g, 2.0)
        for n in range(1, 11):
            u = Field(g, np.sin(2 * np.pi * n * x))
            out = propagate(u, pde, 0.0, cfg)
            exact = (math.exp(-4 * math.pi ** 2 * n ** 2 * kappa * 0.2)
                     * np.sin(2 * np.pi * n * (x + 0.02)))
            rel = np.linalg.norm(out.values - exact) / np.linalg.norm(exact)
            worst = max(worst, rel)
    report("P1", worst < 1e-3,
           f"one-step mode error vs closed form: max rel l2 = {100 * worst:.4f}% (< 0.1%)")


def test_p2_iterated_propagator_convdiff_all_cases():
    cfg = ExperimentConfig(suite="convdiff", case="all", solver="propagator",
                           solver_steps=10, test_count=50, seeds=(0,))
    rep = run_experiment(cfg)
    errs = {c["case"]: c["e_l2_mean"] for c in rep.results["cases"]}
    worst = max(errs.values())
    report("P2", worst <= 0.01,
           "E1-E4 10-frame E_l2 vs spectral reference on 50 ICs: "
           + ", ".join(f"{k}={100 * v:.3f}%" for k, v in errs.items()) + " (<= 1%)")


def test_p3_allencahn_hundred_step_all_cases():
    cfg = ExperimentConfig(suite="allencahn", case="all", solver="propagator",
                           solver_steps=100, test_count=20, seeds=(0,))
    rep = run_experiment(cfg)
    errs = {c["case"]: c["e_l2_mean"] for c in rep.results["cases"]}
    worst = max(errs.values())
    report("P3", worst <= 0.015,
           "Allen-Cahn MCNP-100 E_l2 vs FD reference: "
           + ", ".join(f"{k}={100 * v:.3f}%" for k, v in errs.items()) + " (<= 1.5%)")


def test_p4_navier_stokes_e1_twenty_steps():
    cfg = ExperimentConfig(suite="navierstokes", case="E1", solver="propagator",
                           solver_steps=20, test_count=8, seeds=(0,), ref_steps=2000)
    rep = run_experiment(cfg)
    err = rep.results["cases"][0]["e_l2_mean"]
    report("P4", err <= 0.08,
           f"NS nu=1e-4 Li, 20-step propagator at 64^2 vs CN-2000: "
           f"E_l2 = {100 * err:.3f}% (<= 8%)")


def test_p5_particle_mc_table_reproduction():
    paper = {200: 6.284e-2, 2000: 1.958e-2, 20000: 0.637e-2}
    means = {}
    for m, target in paper.items():
        cfg = ExperimentConfig(suite="convdiff", case="E3", solver="particle_mc",
                               particles=m, test_count=6, seeds=(0, 1, 2))
        rep = run_experiment(cfg)
        means[m] = rep.results["cases"][0]["e_l2_mean"]
    in_band = all(0.5 * paper[m] <= means[m] <= 1.5 * paper[m] for m in paper)
    r1 = means[200] / means[2000]
    r2 = means[2000] / means[20000]
    ratios_ok = 2.2 <= r1 <= 4.5 and 2.2 <= r2 <= 4.5
    report("P5", in_band and ratios_ok,
           f"MCM E3: E_l2 = {100 * means[200]:.3f}/{100 * means[2000]:.3f}/"
           f"{100 * means[20000]:.3f}% for M=200/2000/20000 "
           f"(paper 6.284/1.958/0.637 +-50%), ratios {r1:.2f}, {r2:.2f} in [2.2, 4.5]")


def test_p6_spectral_solver_step_size_sensitivity():
    # paper-scale internals: the coarse-step instability needs the 256^2 grid
    fine = make_grid(2, 256)
    rng = np.random.default_rng(0)
    ics = [sample_grf(GrfSpec(), fine, rng) for _ in range(2)]
    nu, forcing, T = 1e-5, "li", 10.0

    coarse_bad = 0
    for ic in ics:
        try:
            traj = crank_nicolson_ns_solve(ic, nu, forcing, 500, 10, T)
            ref = crank_nicolson_ns_solve(ic, nu, forcing, 10000, 10, T)
            e2, _ = relative_errors(traj, ref)
            if e2 > 2.0:
                coarse_bad += 1
        except Blowup:
            coarse_bad += 1

    fine_errs = []
    for ic in ics:
        ref = crank_nicolson_ns_solve(ic, nu, forcing, 10000, 10, T)
        traj = crank_nicolson_ns_solve(ic, nu, forcing, 2000, 10, T)
        e2, _ = relative_errors([downsample(f, 64) for f in traj],
                                [downsample(f, 64) for f in ref])
        fine_errs.append(e2)
    ok = coarse_bad == len(ics) and max(fine_errs) <= 0.05
    report("P6", ok,
           f"CN at nu=1e-5: 500 steps blew up/exceeded 200% on {coarse_bad}/{len(ics)} runs; "
           f"2000 steps stayed finite with E_l2 = {100 * max(fine_errs):.3f}% (<= 5%)")


def _ns_ablation_errors(case, schemes, n_ic=3, steps=10):
    pde = navierstokes_case(case)
    rng = np.random.default_rng(0)
    ics = [sample_grf(GrfSpec(), pde.grid, rng) for _ in range(n_ic)]
    refs = [crank_nicolson_ns_solve(ic, pde.kind.nu, pde.kind.forcing, 2000, 10, 10.0)
            for ic in ics]
    out = {}
    for label, kw in schemes.items():
        cfg = PropagatorConfig(dt=10.0 / steps, **kw)
        errs = []
        for ic, ref in zip(ics, refs):
            traj = iterate_propagator(ic, pde, cfg, steps, 10)
            errs.append(relative_errors(traj, ref)[0])
        out[label] = float(np.mean(errs))
    return out

def test_p7_ablation_orderings():
    heun_euler = _ns_ablation_errors("E1", {"heun": {}, "euler": {"drift_scheme": EULER}})
    r_drift = heun_euler["euler"] / heun_euler["heun"]
    interp = _ns_ablation_errors("E2", {"auto": {}, "off": {"interpolation": OFF}})
    r_interp = interp["off"] / interp["auto"]
    ok = r_drift >= 1.5 and r_interp >= 3.0
    report("P7", ok,
           f"NS E1 Euler/Heun = {100 * heun_euler['euler']:.2f}%/{100 * heun_euler['heun']:.2f}% "
           f"(ratio {r_drift:.1f} >= 1.5); E2 interp off/on = {100 * interp['off']:.1f}%/"
           f"{100 * interp['auto']:.2f}% (ratio {r_interp:.1f} >= 3)")


def test_p8_kernel_property_suite():
    cfg = PropagatorConfig(dt=0.2)
    failures = []

    # kernel normalization across random draws, per boundary kind
    rng = np.random.default_rng(2718)
    worst = {}
    for kind in (BoundaryKind.PERIODIC, BoundaryKind.DIRICHLET_ZERO, BoundaryKind.NEUMANN_ZERO):
        dev = 0.0
        for _ in range(1000):
            sigma = float(np.exp(rng.uniform(np.log(0.004), np.log(0.05))))
            base = make_grid(1, 64 if kind is BoundaryKind.PERIODIC else 65, 1.0, kind)
            k = build_kernel(base, [rng.uniform(0.0, 1.0)], sigma, cfg)
            dev = max(dev, abs(k.total_mass - 1.0))
        worst[kind.value] = dev
        if dev > 2e-4:
            failures.append(f"{kind.value} mass deviation {dev:.2e}")

    # 2D periodic draws
    dev2 = 0.0
    for _ in range(1000):
        sigma = float(np.exp(rng.uniform(np.log(0.01), np.log(0.05))))
        k = build_kernel(make_grid(2, 32), rng.uniform(0, 1, 2), sigma, cfg)
        dev2 = max(dev2, abs(k.total_mass - 1.0))
    worst["periodic-2d"] = dev2
    if dev2 > 2e-4:
        failures.append(f"2D mass deviation {dev2:.2e}")

    # mass conservation of propagate with f == 0 (periodic and Neumann)
    g = make_grid(1, 64)
    u = Field(g, np.random.default_rng(5).standard_normal(64) + 2.0)
    pde = PdeSpec(ConvectionDiffusion(beta=0.1, kappa=0.005), g, 2.0)
    out = propagate(u, pde, 0.0, cfg)
    drift_mass = abs(np.mean(out.values) - np.mean(u.values)) / abs(np.mean(u.values))
    gb = make_grid(1, 65, 1.0, BoundaryKind.NEUMANN_ZERO)
    ub = Field(gb, np.cos(np.pi * gb.axis_coords(0)) + 2.0)
    outb = propagate(ub, diffusion_only_pde(gb, 0.01), 0.0, PropagatorConfig(dt=0.01))
    w = gb.quadrature_weights()
    drift_mass_b = abs(float(outb.values @ w) - float(ub.values @ w)) / abs(float(ub.values @ w))
    if drift_mass > 1e-3 or drift_mass_b > 1e-3:
        failures.append(f"mass conservation {drift_mass:.2e}/{drift_mass_b:.2e}")

    # radius values against a CDF-bisection oracle
    def oracle(sigma, eps):
        lo, hi = 0.0, 20.0 * sigma
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if 2.0 * scipy_norm.cdf(mid / sigma) - 1.0 < 1.0 - eps:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    rad_dev = 0.0
    for _ in range(200):
        sigma = float(np.exp(rng.uniform(np.log(1e-3), np.log(1.0))))
        eps = float(np.exp(rng.uniform(np.log(1e-6), np.log(0.4))))
        rad_dev = max(rad_dev, abs(select_radius(sigma, 1, eps) - oracle(sigma, eps)) / sigma)
    if rad_dev > 1e-3:
        failures.append(f"radius oracle deviation {rad_dev:.2e}")

    report("P8", not failures,
           f"kernel mass deviations {', '.join(f'{k}={v:.1e}' for k, v in worst.items())} "
           f"(<= 2e-4); mass conservation {drift_mass:.1e}/{drift_mass_b:.1e} (<= 1e-3); "
           f"radius vs bisection {rad_dev:.1e} (<= 1e-3)"
           + ("; FAILURES: " + "; ".join(failures) if failures else ""))


def test_p9_mc_gap_scaling():
    g = make_grid(1, 64)
    u = Field(g, np.sin(2 * np.pi * g.axis_coords(0)) + 0.4 * np.sin(8 * np.pi * g.axis_coords(0)))
    pde = PdeSpec(ConvectionDiffusion(beta=0.1, kappa=0.005), g, 2.0)
    cfg = PropagatorConfig(dt=0.2)
    det = propagate(u, pde, 0.0, cfg)
    reps = 20
    ms = [20 * 4 ** j for j in range(6)]  # 20 .. 20480, three decades
    rms = {}
    for m in ms:
        gaps = []
        for rep in range(reps):
            mc = mc_propagate(u, pde, 0.0, m, 10_000 + rep, cfg)
            gaps.append(np.sqrt(np.mean((mc.values - det.values) ** 2)))
        rms[m] = float(np.mean(gaps))
    ratios = [rms[ms[i]] / rms[ms[i + 1]] for i in range(len(ms) - 1)]
    ok = all(1.4 <= r <= 2.6 for r in ratios)
    report("P9", ok,
           "RMS(mc - propagate) halves per 4x particles: ratios "
           + ", ".join(f"{r:.2f}" for r in ratios) + " (within 2 +- 30%)")
