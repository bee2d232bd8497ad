"""One-step Feynman-Kac propagator and its supporting machinery.

A step of size dt maps u_t to u_{t+dt} by (i) tracing every grid point
backward along the drift with Heun's two-stage scheme, (ii) spreading the
diffusion mass sigma = sqrt(2*kappa*dt) over neighbouring grid points of a
(possibly spectrally upsampled) working grid through a boundary-aware
Gaussian transition kernel, and (iii) adding a trapezoid-in-time forcing
contribution weighted by the same kernel. The sampling-based
Euler-Maruyama estimator ``mc_propagate`` computes the same expectation by
averaging particles and is the propagator's independent cross-check.

Everything here is a pure function of its inputs; propagation is bitwise
deterministic for a fixed config.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import ndtri

from .grid import BoundaryKind, Field, Grid, spectral_interpolate
from .pdes import PdeSpec, drift, forcing_values

HEUN = "heun"
EULER = "euler"
AUTO = "auto"
OFF = "off"


class NormalizationFailure(RuntimeError):
    """Kernel mass cannot be brought within tolerance at the upsample cap."""


class DriftOutOfDomain(RuntimeError):
    """A bounded-domain backtrace left the domain (drift should be zero there)."""


class CflAdvisory(UserWarning):
    """Non-fatal: one backtrace step covers more than a quarter of the domain."""


@dataclass(frozen=True)
class PropagatorConfig:
    dt: float
    epsilon: float = 1e-4
    drift_scheme: str = HEUN
    interpolation: str = AUTO
    upsample_cap: int = 16
    image_terms: int = 8
    normalization_tolerance: Optional[float] = None

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if not 0 < self.epsilon < 0.5:
            raise ValueError("epsilon must lie in (0, 0.5)")
        if self.image_terms < 1:
            raise ValueError("image_terms must be >= 1")
        if self.drift_scheme not in (HEUN, EULER):
            raise ValueError(f"unknown drift scheme {self.drift_scheme!r}")
        if self.interpolation not in (AUTO, OFF):
            raise ValueError(f"unknown interpolation mode {self.interpolation!r}")

    @property
    def tolerance(self) -> float:
        return 2.0 * self.epsilon if self.normalization_tolerance is None else self.normalization_tolerance


@dataclass(frozen=True)
class TransitionKernel:
    source: np.ndarray
    indices: np.ndarray
    weights: np.ndarray
    absorbed_mass: float
    working_resolution: tuple[int, ...]

    @property
    def total_mass(self) -> float:
        return float(np.sum(self.weights)) + self.absorbed_mass


def select_radius(sigma: float, dim: int, epsilon: float) -> float:
    """Smallest r with total Gaussian(sigma) mass 1 - epsilon inside ||x|| <= r."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if not 0 < epsilon <= 0.5:
        raise ValueError("epsilon must lie in (0, 0.5]")
    if dim == 1:
        return sigma * float(ndtri(1.0 - epsilon / 2.0))
    if dim == 2:
        return sigma * math.sqrt(2.0 * math.log(1.0 / epsilon))
    raise ValueError("dim must be 1 or 2")


# ---------------------------------------------------------------------------
# off-grid field evaluation


class PeriodicEvaluator:
    """Exact truncated-Fourier evaluation of periodic samples at arbitrary points."""

    def __init__(self, values: np.ndarray, grid: Grid):
        self.grid = grid
        if grid.dim == 1:
            P = values.size
            c = np.fft.fft(values) / P
            k = np.fft.fftfreq(P, d=1.0 / P)
            keep = np.abs(c) > 1e-14 * (np.max(np.abs(c)) + 1e-300)
            self.c, self.k = c[keep], k[keep]
        else:
            P1, P2 = grid.resolution
            self.C = np.fft.fft2(values) / (P1 * P2)
            self.k1 = np.fft.fftfreq(P1, d=1.0 / P1) / grid.extent[0]
            self.k2 = np.fft.fftfreq(P2, d=1.0 / P2) / grid.extent[1]

    def __call__(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(points)
        if self.grid.dim == 1:
            if self.c.size == 0:
                return np.zeros(pts.shape[0])
            phase = np.exp(2j * np.pi * np.outer(pts[:, 0] / self.grid.extent[0], self.k))
            return (phase @ self.c).real
        e1 = np.exp(2j * np.pi * np.outer(pts[:, 0], self.k1))
        e2 = np.exp(2j * np.pi * np.outer(pts[:, 1], self.k2))
        return np.einsum("nj,nj->n", e1 @ self.C, e2).real


class LinearEvaluator:
    """Piecewise-linear evaluation on a bounded 1D grid (clamped at the walls)."""

    def __init__(self, values: np.ndarray, grid: Grid):
        self.x = grid.axis_coords(0)
        self.values = values

    def __call__(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(points)
        return np.interp(pts[:, 0], self.x, self.values)


def make_evaluator(values: np.ndarray, grid: Grid):
    if grid.boundary.is_periodic:
        return PeriodicEvaluator(values, grid)
    if grid.dim != 1:
        raise NotImplementedError("bounded off-grid evaluation is 1D only")
    return LinearEvaluator(values, grid)


def _eval_vector(field: Field, points: np.ndarray) -> np.ndarray:
    """Evaluate a (possibly vector) field at points -> (N, components)."""
    cols = [make_evaluator(field.component(i), field.grid)(points) for i in range(field.components)]
    return np.stack(cols, axis=-1)


# ---------------------------------------------------------------------------
# drift backtrace


def _wrap_points(points: np.ndarray, grid: Grid) -> np.ndarray:
    return np.mod(points, np.asarray(grid.extent))


def heun_backtrace(x, beta_end: Field, beta_start: Field, dt: float, scheme: str = HEUN) -> np.ndarray:
    """Backtraced departure points xi_c for query points x (N, dim).

    Heun: b1 = beta_end(x)*dt, b2 = beta_start(x + b1)*dt,
    xi_c = x + (b1 + b2)/2. Euler keeps only b1. Periodic results wrap; a
    bounded result outside [0, extent] raises DriftOutOfDomain.
    """
    grid = beta_end.grid
    pts = np.asarray(x, dtype=np.float64).reshape(-1, grid.dim)
    b1 = _eval_vector(beta_end, pts) * dt
    if scheme == EULER:
        xi = pts + b1
    elif scheme == HEUN:
        mid = pts + b1
        if grid.boundary.is_periodic:
            mid = _wrap_points(mid, grid)
        b2 = _eval_vector(beta_start, mid) * dt
        xi = pts + 0.5 * (b1 + b2)
    else:
        raise ValueError(f"unknown drift scheme {scheme!r}")
    if grid.boundary.is_periodic:
        return _wrap_points(xi, grid)
    if np.any(xi < 0.0) or np.any(xi > np.asarray(grid.extent)):
        raise DriftOutOfDomain("backtrace left the bounded domain")
    return xi


# ---------------------------------------------------------------------------
# transition kernels


class _RowBuilder:
    """Builds one kernel row (neighbour indices + probability weights) per
    backtraced point on a fixed working grid. All rows share sigma and the
    neighbourhood radius r."""

    def __init__(self, work: Grid, sigma: float, config: PropagatorConfig):
        self.work = work
        self.sigma = float(sigma)
        self.config = config
        self.r = select_radius(sigma, work.dim, config.epsilon)
        self.h = work.spacing
        self.norm = (2.0 * math.pi * sigma ** 2) ** (-work.dim / 2.0)
        self.qw = work.quadrature_weights()
        self.boundary = work.boundary
        # periodic images along an axis only matter once the tail reaches L/2
        self.need_images = [sigma > L / 18.0 for L in work.extent]
        K = config.image_terms
        self.shifts = np.arange(-K, K + 1, dtype=np.float64)
        if work.dim == 1:
            m = int(self.r / self.h[0]) + 1
            self.offsets1 = np.arange(-m, m + 1)
        else:
            m1 = int(self.r / self.h[0]) + 1
            m2 = int(self.r / self.h[1]) + 1
            o1, o2 = np.meshgrid(np.arange(-m1, m1 + 1), np.arange(-m2, m2 + 1), indexing="ij")
            gap1 = np.maximum(np.abs(o1) - 1, 0) * self.h[0]
            gap2 = np.maximum(np.abs(o2) - 1, 0) * self.h[1]
            keep = gap1 ** 2 + gap2 ** 2 <= self.r ** 2
            self.offsets2 = np.stack([o1[keep], o2[keep]], axis=-1)

    def _gauss1(self, d: np.ndarray, axis: int = 0) -> np.ndarray:
        s2 = 2.0 * self.sigma ** 2
        if not self.need_images[axis]:
            return np.exp(-d ** 2 / s2)
        L = self.work.extent[axis]
        return np.exp(-(d[..., None] + self.shifts * L) ** 2 / s2).sum(axis=-1)

    def row(self, xi: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
        if self.work.dim == 1:
            if self.boundary.is_periodic:
                return self._row_periodic_1d(float(xi[0]))
            return self._row_bounded(float(xi[0]))
        return self._row_periodic_2d(xi)

    def _row_periodic_1d(self, xi: float):
        h, L = self.h[0], self.work.extent[0]
        P = self.work.resolution[0]
        if 2 * self.offsets1.size >= P:  # ball wraps: take every point once
            idx = np.arange(P)
            d = idx * h - xi
            d -= np.round(d / L) * L
        else:
            cand = int(np.floor(xi / h)) + self.offsets1
            d = cand * h - xi
            idx = cand % P
        mask = np.abs(d) <= self.r
        idx, d = idx[mask], d[mask]
        order = np.argsort(idx, kind="stable")
        idx, d = idx[order], d[order]
        w = self.norm * self._gauss1(d) * self.qw[idx]
        return idx, w, 0.0

    def _row_periodic_2d(self, xi: np.ndarray):
        h1, h2 = self.h
        P1, P2 = self.work.resolution
        if 2 * (int(self.r / min(self.h)) + 1) + 1 >= min(P1, P2):
            # ball wraps the torus: take every point once, wrapped distances
            pts = self.work.points()
            d = pts - xi
            for a, L in enumerate(self.work.extent):
                d[:, a] -= np.round(d[:, a] / L) * L
            mask = d[:, 0] ** 2 + d[:, 1] ** 2 <= self.r ** 2
            idx = np.nonzero(mask)[0]
            d1, d2 = d[mask, 0], d[mask, 1]
        else:
            base = np.floor(xi / np.asarray(self.h)).astype(np.int64)
            cand = base + self.offsets2
            d1 = cand[:, 0] * h1 - xi[0]
            d2 = cand[:, 1] * h2 - xi[1]
            mask = d1 ** 2 + d2 ** 2 <= self.r ** 2
            cand, d1, d2 = cand[mask], d1[mask], d2[mask]
            idx = (cand[:, 0] % P1) * P2 + (cand[:, 1] % P2)
            order = np.argsort(idx, kind="stable")
            idx, d1, d2 = idx[order], d1[order], d2[order]
        if self.need_images[0] or self.need_images[1]:
            g = self._gauss1(d1, 0) * self._gauss1(d2, 1)
        else:
            g = np.exp(-(d1 ** 2 + d2 ** 2) / (2.0 * self.sigma ** 2))
        w = self.norm * g * self.qw[idx]
        return idx, w, 0.0

    def _bounded_density(self, y: np.ndarray, xi: float) -> np.ndarray:
        """Absorbed (Dirichlet) or reflected (Neumann) density by the method
        of images with period 2L, truncated at +-image_terms images."""
        L = self.work.extent[0]
        s2 = 2.0 * self.sigma ** 2
        shifts = self.shifts * 2.0 * L
        direct = np.exp(-(y[:, None] - xi + shifts) ** 2 / s2).sum(axis=1)
        mirror = np.exp(-(y[:, None] + xi + shifts) ** 2 / s2).sum(axis=1)
        if self.boundary is BoundaryKind.DIRICHLET_ZERO:
            dens = direct - mirror
            return self.norm * np.maximum(dens, 0.0)  # clip -1e-300 rounding at the walls
        return self.norm * (direct + mirror)

    def _row_bounded(self, xi: float):
        h = self.h[0]
        P = self.work.resolution[0]
        cand = int(np.floor(xi / h)) + self.offsets1
        cand = cand[(cand >= 0) & (cand < P)]
        mask = np.abs(cand * h - xi) <= self.r
        idx = cand[mask]
        w = self._bounded_density(idx * h, xi) * self.qw[idx]
        absorbed = 0.0
        if self.boundary is BoundaryKind.DIRICHLET_ZERO:
            full = self._bounded_density(np.arange(P) * h, xi) @ self.qw
            absorbed = float(1.0 - full)
        return idx, w, absorbed

    def check_row(self, w: np.ndarray, absorbed: float) -> bool:
        return abs(float(np.sum(w)) + absorbed - 1.0) <= self.config.tolerance


def plan_upsample_factor(grid: Grid, sigma: float, config: PropagatorConfig) -> int:
    """Smallest power-of-2 factor bringing the working spacing to <= sigma/2."""
    if config.interpolation == OFF:
        return 1
    factor = 1
    while max(grid.spacing) / factor > sigma / 2.0 and factor < config.upsample_cap:
        factor *= 2
    return factor


def transition_kernel(working_grid: Grid, xi_c, sigma: float, boundary: BoundaryKind,
                      config: PropagatorConfig) -> TransitionKernel:
    """Kernel row for one backtraced point on an explicit working grid.

    Raises NormalizationFailure when the mass check fails and interpolation
    is not switched off; escalating across factors is propagate's job (or
    use :func:`build_kernel`, which plans and escalates for one row).
    """
    if boundary != working_grid.boundary:
        raise ValueError("boundary does not match the working grid")
    xi = np.atleast_1d(np.asarray(xi_c, dtype=np.float64))
    builder = _RowBuilder(working_grid, sigma, config)
    idx, w, absorbed = builder.row(xi)
    if config.interpolation != OFF and not builder.check_row(w, absorbed):
        raise NormalizationFailure(
            f"kernel mass {np.sum(w) + absorbed:.6f} misses 1 by more than {config.tolerance}")
    return TransitionKernel(xi, idx, w, absorbed, working_grid.resolution)


def build_kernel(grid: Grid, xi_c, sigma: float, config: PropagatorConfig) -> TransitionKernel:
    """One kernel row on the escalated working grid (the same planning that
    propagate applies: start from the sigma/2 spacing rule, double the
    factor while the measured mass misses tolerance, fail at the cap)."""
    factor = plan_upsample_factor(grid, sigma, config)
    while True:
        try:
            return transition_kernel(grid.refined(factor), xi_c, sigma, grid.boundary, config)
        except NormalizationFailure:
            if config.interpolation == OFF or factor >= config.upsample_cap:
                raise
            factor *= 2


# ---------------------------------------------------------------------------
# the propagator


class _EscalationNeeded(Exception):
    pass


def _advisory_cfl(beta_end: Field, config: PropagatorConfig, grid: Grid) -> None:
    comps = beta_end.values if beta_end.components > 1 else beta_end.values[None]
    speed = np.sqrt(np.sum(comps ** 2, axis=0))
    if float(np.max(speed)) * config.dt > min(grid.extent) / 4.0:
        warnings.warn(CflAdvisory("one drift step exceeds a quarter of the domain"))


def _forcing_end_values(pde: PdeSpec, t_end: float, state_end: Field) -> np.ndarray:
    """f(x_p, t+dt) at the coarse grid points (zeros for the unforced case)."""
    grid = pde.grid
    if pde.forcing_is_state_dependent:
        return forcing_values(pde, grid.points(), t_end, state_end.values.ravel())
    return forcing_values(pde, grid.points(), t_end)


def _one_pass(u_t: Field, pde: PdeSpec, t: float, config: PropagatorConfig,
              beta_end: Field, beta_start: Field, state_end: Field,
              collect_rows: bool = False):
    """One application of the expectation step with fixed drift endpoints.

    Returns (Field, rows, factor) where rows is the per-point
    (indices, weights) list when collect_rows is set (used by the operator
    assembly; the float path there is identical by construction) and factor
    is the upsample factor actually used after any escalation.
    """
    grid = pde.grid
    sigma = math.sqrt(2.0 * pde.diffusivity * config.dt)
    points = grid.points()
    _advisory_cfl(beta_end, config, grid)
    xi = heun_backtrace(points, beta_end, beta_start, config.dt, config.drift_scheme)
    f_end = _forcing_end_values(pde, t + config.dt, state_end)
    has_forcing = _pde_has_forcing(pde)

    if sigma == 0.0:
        out = _point_values(u_t, xi)
        if has_forcing:
            f_start = _point_forcing(pde, t, u_t, xi)
            out = out + 0.5 * config.dt * (f_end + f_start)
        return Field(grid, out.reshape(grid.resolution)).check_finite(), None, 1

    factor = plan_upsample_factor(grid, sigma, config)
    while True:
        try:
            out, rows = _kernel_pass(u_t, pde, t, config, xi, f_end, sigma, factor,
                                     has_forcing, collect_rows)
            break
        except _EscalationNeeded:
            if config.interpolation == OFF or factor >= config.upsample_cap:
                raise NormalizationFailure(
                    f"kernel mass out of tolerance at upsample factor {factor}")
            factor *= 2
    return Field(grid, out.reshape(grid.resolution)).check_finite(), rows, factor


def _pde_has_forcing(pde: PdeSpec) -> bool:
    from .pdes import ConvectionDiffusion
    return not isinstance(pde.kind, ConvectionDiffusion)


def _point_values(u_t: Field, xi: np.ndarray) -> np.ndarray:
    """u_t at backtraced points, gathering exactly when a point is a grid node."""
    grid = u_t.grid
    h = np.asarray(grid.spacing)
    nearest = np.round(xi / h).astype(np.int64)
    snapped = np.all(nearest * h == xi, axis=1)
    out = np.empty(xi.shape[0])
    if np.any(snapped):
        res = grid.resolution
        wrapped = nearest[snapped] % np.asarray(res) if grid.boundary.is_periodic \
            else np.clip(nearest[snapped], 0, np.asarray(res) - 1)
        flat = wrapped[:, 0] if grid.dim == 1 else wrapped[:, 0] * res[1] + wrapped[:, 1]
        out[snapped] = u_t.values.ravel()[flat]
    if not np.all(snapped):
        ev = make_evaluator(u_t.values, grid)
        out[~snapped] = ev(xi[~snapped])
    return out


def _point_forcing(pde: PdeSpec, t: float, u_t: Field, xi: np.ndarray) -> np.ndarray:
    if pde.forcing_is_state_dependent:
        return forcing_values(pde, xi, t, _point_values(u_t, xi))
    return forcing_values(pde, xi, t)


def _kernel_pass(u_t, pde, t, config, xi, f_end, sigma, factor, has_forcing, collect_rows):
    grid = pde.grid
    work_field = spectral_interpolate(u_t, factor, cap=config.upsample_cap)
    work = work_field.grid
    u_work = work_field.values.ravel()
    builder = _RowBuilder(work, sigma, config)
    f_work = None
    if has_forcing:
        if pde.forcing_is_state_dependent:
            f_work = forcing_values(pde, work.points(), t, u_work)
        else:
            f_work = forcing_values(pde, work.points(), t)
    check = config.interpolation == AUTO
    n = grid.npoints
    out = np.empty(n)
    rows = [] if collect_rows else None
    for p in range(n):
        idx, w, absorbed = builder.row(xi[p])
        if check and not builder.check_row(w, absorbed):
            raise _EscalationNeeded
        val = float(np.dot(w, u_work[idx]))
        if has_forcing:
            val += 0.5 * config.dt * (f_end[p] + float(np.dot(w, f_work[idx])))
        out[p] = val
        if collect_rows:
            rows.append((idx, w))
    return out, rows


def propagate(u_t: Field, pde: PdeSpec, t: float, config: PropagatorConfig) -> Field:
    """One deterministic Feynman-Kac step: u at time t -> u at time t + dt.

    State-dependent drift (Navier-Stokes) and forcing (the Allen-Cahn
    reaction) use a predictor-corrector: a first pass with both drift
    stages frozen at time t supplies the t+dt field, a second pass then
    re-propagates with the end-of-step drift/forcing taken from it. For
    constant drift and forcing the first pass is already exact.
    """
    beta_t = drift(pde, u_t)
    first, _, _ = _one_pass(u_t, pde, t, config, beta_t, beta_t, u_t)
    if not (pde.drift_is_state_dependent or pde.forcing_is_state_dependent):
        return first
    beta_end = drift(pde, first) if pde.drift_is_state_dependent else beta_t
    second, _, _ = _one_pass(u_t, pde, t, config, beta_end, beta_t, first)
    return second


def mc_propagate(u_t: Field, pde: PdeSpec, t: float, M: int, rng, config: PropagatorConfig) -> Field:
    """Euler-Maruyama Monte Carlo estimate of the same one-step expectation.

    Per grid point x_p, averages u_t(x_p + beta_end(x_p)*dt + sigma*b) over
    M standard-normal draws b (independent streams per grid point, so the
    result does not depend on evaluation order), plus f(x_p, t+dt)*dt.
    With sigma = 0 the estimator is deterministic and M is irrelevant.
    """
    if M < 1:
        raise ValueError("M must be >= 1")
    grid = pde.grid
    base_seed = int(rng) if isinstance(rng, (int, np.integer)) else int(rng.integers(2 ** 62))
    sigma = math.sqrt(2.0 * pde.diffusivity * config.dt)
    points = grid.points()

    beta_t = drift(pde, u_t)
    if pde.drift_is_state_dependent or pde.forcing_is_state_dependent:
        predictor, _, _ = _one_pass(u_t, pde, t, config, beta_t, beta_t, u_t)
        beta_end = drift(pde, predictor) if pde.drift_is_state_dependent else beta_t
        state_end = predictor
    else:
        beta_end, state_end = beta_t, u_t
    b_end = beta_end.values.reshape(beta_end.components, -1).T if beta_end.components > 1 \
        else beta_end.values.reshape(-1, 1)
    f_end = _forcing_end_values(pde, t + config.dt, state_end)

    drifted = points + b_end * config.dt
    n = grid.npoints
    out = np.empty(n)
    ext = np.asarray(grid.extent)
    if sigma == 0.0:
        if grid.boundary.is_periodic:
            drifted = np.mod(drifted, ext)
        out = _point_values(u_t, drifted)
    else:
        ev = make_evaluator(u_t.values, grid) if grid.boundary.is_periodic \
            else LinearEvaluator(u_t.values, grid)
        for p in range(n):
            gen = np.random.default_rng((base_seed, p))
            b = gen.standard_normal((M, grid.dim))
            pos = drifted[p] + sigma * b
            if grid.boundary.is_periodic:
                pos = np.mod(pos, ext)
                out[p] = float(np.mean(ev(pos)))
            elif grid.boundary is BoundaryKind.DIRICHLET_ZERO:
                alive = np.all((pos >= 0.0) & (pos <= ext), axis=1)
                vals = np.zeros(M)
                if np.any(alive):
                    vals[alive] = ev(pos[alive])
                out[p] = float(np.mean(vals))
            else:  # Neumann: reflect into [0, L]
                pos = np.abs(np.mod(pos, 2.0 * ext))
                pos = np.where(pos > ext, 2.0 * ext - pos, pos)
                out[p] = float(np.mean(ev(pos)))
    out = out + f_end * config.dt
    return Field(grid, out.reshape(grid.resolution)).check_finite()


# ---------------------------------------------------------------------------
# linear-operator export


@dataclass
class SparseOperator:
    """Row-compressed propagation operator W plus forcing vector g with
    apply(u) == propagate(u) bit-for-bit (assembled through the same row
    builder and accumulated with the same dot products)."""

    rows: int
    cols: int
    row_ptr: np.ndarray
    col_idx: np.ndarray
    weights: np.ndarray
    forcing: np.ndarray
    dt: float
    factor: int
    pde_header: dict
    grid: Grid

    def apply(self, u: Field) -> Field:
        if u.grid != self.grid:
            raise ValueError("field grid does not match the operator")
        u_work = spectral_interpolate(u, self.factor).values.ravel() if self.factor > 1 \
            else u.values.ravel()
        out = np.empty(self.rows)
        add_g = bool(np.any(self.forcing))
        for p in range(self.rows):
            s, e = self.row_ptr[p], self.row_ptr[p + 1]
            val = float(np.dot(self.weights[s:e], u_work[self.col_idx[s:e]]))
            if add_g:
                val += self.forcing[p]
            out[p] = val
        return Field(self.grid, out.reshape(self.grid.resolution))

    def nnz_per_row(self) -> np.ndarray:
        return np.diff(self.row_ptr)


def assemble_linear_operator(pde: PdeSpec, config: PropagatorConfig) -> SparseOperator:
    """Exact sparse rewrite of propagate for constant drift and
    state-independent forcing (the linear convection-diffusion case)."""
    if pde.drift_is_state_dependent or pde.forcing_is_state_dependent:
        raise ValueError("only constant-drift, state-independent-forcing PDEs are linear; "
                         "use the propagation service for the others")
    grid = pde.grid
    zero = Field(grid, np.zeros(grid.resolution))
    beta = drift(pde, zero)
    sigma = math.sqrt(2.0 * pde.diffusivity * config.dt)
    if sigma == 0.0:
        raise ValueError("kappa must be positive to assemble a kernel operator")
    _, rows, factor = _one_pass(zero, pde, 0.0, config, beta, beta, zero, collect_rows=True)
    f_end = _forcing_end_values(pde, config.dt, zero)
    work = grid.refined(factor)
    has_forcing = _pde_has_forcing(pde)
    f_work = forcing_values(pde, work.points(), 0.0) if has_forcing else None

    n = grid.npoints
    row_ptr = np.zeros(n + 1, dtype=np.int64)
    cols, weights = [], []
    g = np.zeros(n)
    for p, (idx, w) in enumerate(rows):
        row_ptr[p + 1] = row_ptr[p] + idx.size
        cols.append(idx)
        weights.append(w)
        if has_forcing:
            g[p] = 0.5 * config.dt * (f_end[p] + float(np.dot(w, f_work[idx])))
    return SparseOperator(
        rows=n, cols=work.npoints,
        row_ptr=row_ptr, col_idx=np.concatenate(cols), weights=np.concatenate(weights),
        forcing=g, dt=config.dt, factor=factor, pde_header=pde.header(), grid=grid,
    )
