"""Ground-truth and baseline solvers.

All solvers return ``frames`` snapshots at the uniform times T*k/frames,
k = 1..frames, on the grid of the supplied initial condition; callers that
want the benchmark output resolution run on a fine grid and stride down
with :func:`downsample`. Every solver is deterministic given its inputs
(and seed, for the particle solver).
"""

from __future__ import annotations

import math
import warnings

import numpy as np
from scipy.signal import resample

from .grid import BoundaryKind, Field, Grid
from .pdes import stationary_forcing


class Blowup(RuntimeError):
    """A time integration left the physical range (reported, not crashed)."""


def _frame_steps(steps: int, frames: int) -> np.ndarray:
    if steps % frames:
        raise ValueError(f"steps ({steps}) must be divisible by frames ({frames})")
    return np.arange(1, frames + 1) * (steps // frames)


def downsample(field: Field, out_resolution) -> Field:
    """Strided restriction onto a coarser grid sharing the fine grid's points.

    For band-limited periodic data this keeps the retained Fourier modes
    bit-identical; bounded grids stride (P_fine-1)/(P_out-1).
    """
    grid = field.grid
    out_res = tuple(int(r) for r in (out_resolution if np.iterable(out_resolution)
                                     else [out_resolution] * grid.dim))
    slices = []
    for a in range(grid.dim):
        Pf, Po = grid.resolution[a], out_res[a]
        if grid.boundary.is_periodic:
            if Pf % Po:
                raise ValueError(f"{Pf} does not stride onto {Po} periodically")
            slices.append(slice(None, None, Pf // Po))
        else:
            if (Pf - 1) % (Po - 1):
                raise ValueError(f"{Pf} does not stride onto {Po} on a bounded grid")
            slices.append(slice(None, None, (Pf - 1) // (Po - 1)))
    coarse = Grid(grid.dim, out_res, grid.extent, grid.boundary)
    return Field(coarse, field.values[tuple(slices)].copy())


# ---------------------------------------------------------------------------
# 1D convection-diffusion (linear): pseudo-spectral RK2 and the exact modes


def _convdiff_rates(grid: Grid, beta: float, kappa: float) -> np.ndarray:
    P = grid.resolution[0]
    k = np.fft.fftfreq(P, d=1.0 / P) / grid.extent[0]
    return 2j * np.pi * k * beta - kappa * (2.0 * np.pi * k) ** 2


def spectral_convdiff_solve(ic: Field, beta: float, kappa: float, steps: int,
                            frames: int = 10, horizon: float = 2.0,
                            scheme: str = "rk2") -> list[Field]:
    """du/dt = beta*du/dx + kappa*d2u/dx2 on a periodic grid.

    ``scheme="rk2"`` steps the Fourier modes with second-order Runge-Kutta;
    ``scheme="exact"`` applies the integrating factor exp(lambda_k t)
    directly (the equation is linear, so this is the closed-form solution
    and serves as the reference oracle).
    """
    if ic.grid.dim != 1 or not ic.grid.boundary.is_periodic:
        raise ValueError("convection-diffusion runs on a 1D periodic grid")
    lam = _convdiff_rates(ic.grid, beta, kappa)
    c0 = np.fft.fft(ic.values)
    out = []
    if scheme == "exact":
        for k in range(1, frames + 1):
            t = horizon * k / frames
            out.append(Field(ic.grid, np.fft.ifft(c0 * np.exp(lam * t)).real))
        return out
    if scheme != "rk2":
        raise ValueError(f"unknown scheme {scheme!r}")
    record = set(_frame_steps(steps, frames).tolist())
    dt = horizon / steps
    z = lam * dt
    gain = 1.0 + z + 0.5 * z * z  # RK2 on a linear ODE is the 2nd-order Taylor gain
    worst_gain = float(np.max(np.abs(gain)))
    if steps * math.log(max(worst_gain, 1.0)) > math.log(1e6):
        warnings.warn(f"RK2 mode gain {worst_gain:.3f} compounds to over 1e6 across "
                      f"{steps} steps: outside the stability range")
    c = c0.copy()
    for s in range(1, steps + 1):
        c *= gain
        if s in record:
            vals = np.fft.ifft(c).real
            if not np.all(np.isfinite(vals)) or np.max(np.abs(vals)) > 1e6:
                raise Blowup(f"spectral state left the physical range at step {s}/{steps}")
            out.append(Field(ic.grid, vals))
    return out


def convdiff_reference(ic: Field, beta: float, kappa: float,
                       frames: int = 10, horizon: float = 2.0) -> list[Field]:
    return spectral_convdiff_solve(ic, beta, kappa, steps=frames, frames=frames,
                                   horizon=horizon, scheme="exact")


# ---------------------------------------------------------------------------
# 2D Navier-Stokes vorticity: pseudo-spectral Crank-Nicolson


def crank_nicolson_ns_solve(omega0: Field, nu: float, forcing, steps: int,
                            frames: int = 10, horizon: float = 10.0,
                            blowup_limit: float = 1e6) -> list[Field]:
    """Pseudo-spectral vorticity integration on the periodic unit torus.

    Diffusion is Crank-Nicolson per mode; the advection term -(u.grad)omega
    is evaluated pseudo-spectrally with 2/3-rule dealiasing and advanced
    with Adams-Bashforth-2 (plain Euler on the first step); the stationary
    forcing enters explicitly. Raises :class:`Blowup` when max|omega|
    exceeds ``blowup_limit`` (how the unstable coarse-step runs surface).
    """
    grid = omega0.grid
    if grid.dim != 2 or not grid.boundary.is_periodic:
        raise ValueError("the vorticity solver needs a 2D periodic grid")
    P1, P2 = grid.resolution
    k1 = (np.fft.fftfreq(P1, d=1.0 / P1) / grid.extent[0])[:, None]
    k2 = (np.fft.fftfreq(P2, d=1.0 / P2) / grid.extent[1])[None, :]
    ksq = 4.0 * np.pi ** 2 * (k1 ** 2 + k2 ** 2)
    inv_lap = np.zeros_like(ksq)
    np.divide(1.0, ksq, out=inv_lap, where=ksq > 0)
    dealias = (np.abs(k1) < P1 / 3.0) & (np.abs(k2) < P2 / 3.0)

    f_hat = 0.0
    if isinstance(forcing, str):
        f = stationary_forcing(forcing, grid.points()).reshape(grid.resolution)
        f_hat = np.fft.fft2(f)

    dt = horizon / steps
    record = set(_frame_steps(steps, frames).tolist())
    decay_num = 1.0 - 0.5 * nu * dt * ksq
    decay_den = 1.0 / (1.0 + 0.5 * nu * dt * ksq)

    def advection_hat(w_hat):
        psi_hat = w_hat * inv_lap
        u1 = np.fft.ifft2(2j * np.pi * k2 * psi_hat).real
        u2 = np.fft.ifft2(-2j * np.pi * k1 * psi_hat).real
        wx = np.fft.ifft2(2j * np.pi * k1 * w_hat).real
        wy = np.fft.ifft2(2j * np.pi * k2 * w_hat).real
        return np.fft.fft2(-(u1 * wx + u2 * wy)) * dealias

    w_hat = np.fft.fft2(omega0.values)
    n_prev = None
    out = []
    for s in range(1, steps + 1):
        n_cur = advection_hat(w_hat)
        ab = n_cur if n_prev is None else 1.5 * n_cur - 0.5 * n_prev
        w_hat = (w_hat * decay_num + dt * (ab + f_hat)) * decay_den
        n_prev = n_cur
        if s in record or not np.all(np.isfinite(w_hat)):
            w = np.fft.ifft2(w_hat).real
            if not np.all(np.isfinite(w)) or np.max(np.abs(w)) > blowup_limit:
                raise Blowup(f"vorticity exceeded {blowup_limit:g} at step {s}/{steps}")
            if s in record:
                out.append(Field(grid, w))
    return out


# ---------------------------------------------------------------------------
# 1D Allen-Cahn: finite differences with ghost points, RK2 in time


def fd_allen_cahn_solve(ic: Field, boundary: BoundaryKind, steps: int,
                        frames: int = 10, horizon: float = 1.0,
                        kappa: float = 0.01) -> list[Field]:
    """du/dt = kappa*d2u/dx2 + u - u^3 on [0, 1] with zero-value or
    zero-flux walls (second-order central Laplacian, RK2 time stepping)."""
    grid = ic.grid
    if grid.dim != 1 or grid.boundary.is_periodic:
        raise ValueError("the Allen-Cahn solver needs a bounded 1D grid")
    if boundary != grid.boundary:
        raise ValueError("boundary does not match the grid")
    h = grid.spacing[0]
    dt = horizon / steps
    if kappa * dt / h ** 2 > 0.5:
        warnings.warn(f"kappa*dt/h^2 = {kappa * dt / h ** 2:.3f} > 0.5: "
                      "the explicit step is outside its stability range")
    record = set(_frame_steps(steps, frames).tolist())
    dirichlet = boundary is BoundaryKind.DIRICHLET_ZERO

    def rhs(u):
        lap = np.empty_like(u)
        lap[1:-1] = u[2:] - 2.0 * u[1:-1] + u[:-2]
        if dirichlet:
            lap[0] = u[1] - 2.0 * u[0]          # ghost value -u[0] pins u(0)=0
            lap[-1] = u[-2] - 2.0 * u[-1]
        else:
            lap[0] = 2.0 * (u[1] - u[0])        # mirror ghost makes du/dx(0)=0
            lap[-1] = 2.0 * (u[-2] - u[-1])
        return kappa * lap / h ** 2 + u - u ** 3

    u = ic.values.copy()
    if dirichlet:
        u[0] = u[-1] = 0.0
    out = []
    for s in range(1, steps + 1):
        k1 = rhs(u)
        k2 = rhs(u + dt * k1)
        u = u + 0.5 * dt * (k1 + k2)
        if dirichlet:
            u[0] = u[-1] = 0.0
        if s in record:
            if not np.all(np.isfinite(u)):
                raise Blowup(f"Allen-Cahn state became non-finite at step {s}")
            out.append(Field(grid, u.copy()))
    return out


# ---------------------------------------------------------------------------
# particle Monte Carlo solver (linear convection-diffusion only)


_MC_REFINE = 32  # spectral refinement of the field before per-particle lookups


def mc_solve_full(ic: Field, beta: float, kappa: float, M: int, steps: int,
                  seed: int, frames: int = 10, horizon: float = 2.0) -> list[Field]:
    """Full Euler-Maruyama particle solver for the periodic linear equation.

    The field is advanced through ``steps`` uniform sub-frames: at each one,
    every grid point launches M particles over a single Euler-Maruyama
    increment (Brownian std sqrt(2*kappa*dt)) and the new grid value is the
    particle average of the current field, looked up after spectral
    refinement by linear interpolation. Gaussian streams are split per grid
    point, so results are independent of evaluation order.
    """
    grid = ic.grid
    if grid.dim != 1 or not grid.boundary.is_periodic:
        raise ValueError("the particle solver covers the periodic 1D linear case")
    P = grid.resolution[0]
    L = grid.extent[0]
    record = set(_frame_steps(steps, frames).tolist())
    dt = horizon / steps
    sig_step = math.sqrt(2.0 * kappa * dt)
    x = grid.axis_coords(0)
    gens = [np.random.default_rng((int(seed), p)) for p in range(P)]
    fine_n = P * _MC_REFINE
    u = ic.values.copy()
    out = []
    for s in range(1, steps + 1):
        fine = resample(u, fine_n)
        if sig_step > 0.0:
            b = np.stack([g.standard_normal(M) for g in gens])
        else:
            b = 0.0
        pos = np.mod(x[:, None] + beta * dt + sig_step * b, L)
        scaled = pos * (fine_n / L)
        i0 = np.floor(scaled).astype(np.int64)
        frac = scaled - i0
        i0 %= fine_n
        vals = fine[i0] * (1.0 - frac) + fine[(i0 + 1) % fine_n] * frac
        u = vals.mean(axis=1) if sig_step > 0.0 else vals[:, 0]
        if s in record:
            out.append(Field(grid, u.copy()))
    return out
