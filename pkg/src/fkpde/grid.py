"""Uniform sample grids in 1D/2D with boundary semantics.

Periodic grids hold P points over [0, L) (the duplicated right endpoint is
omitted, spacing h = L/P); bounded grids (zero-Dirichlet / zero-Neumann)
hold P points over [0, L] including both endpoints (spacing h = L/(P-1)).
Coordinates are exactly i*h. Grids and fields are immutable after
construction and safe to share across threads.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import resample

UPSAMPLE_CAP = 16


class BoundaryKind(enum.Enum):
    PERIODIC = "periodic"
    DIRICHLET_ZERO = "dirichlet0"
    NEUMANN_ZERO = "neumann0"

    @property
    def is_periodic(self) -> bool:
        return self is BoundaryKind.PERIODIC


@dataclass(frozen=True)
class Grid:
    """Uniform rectangular grid. Use :func:`make_grid` to construct."""

    dim: int
    resolution: tuple[int, ...]
    extent: tuple[float, ...]
    boundary: BoundaryKind

    @property
    def spacing(self) -> tuple[float, ...]:
        if self.boundary.is_periodic:
            return tuple(L / P for L, P in zip(self.extent, self.resolution))
        return tuple(L / (P - 1) for L, P in zip(self.extent, self.resolution))

    @property
    def cell_volume(self) -> float:
        return math.prod(self.spacing)

    @property
    def npoints(self) -> int:
        return math.prod(self.resolution)

    def axis_coords(self, axis: int = 0) -> np.ndarray:
        h = self.spacing[axis]
        return np.arange(self.resolution[axis]) * h

    def points(self) -> np.ndarray:
        """All grid coordinates as an (npoints, dim) array in row-major order."""
        axes = [self.axis_coords(a) for a in range(self.dim)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def quadrature_weights(self) -> np.ndarray:
        """Per-point cell volumes (npoints,).

        Periodic cells all have volume h; on bounded grids the two endpoint
        cells are half cells, which is what makes the point-mass quadrature
        of a reflected/absorbed density conserve mass.
        """
        w = np.ones(self.npoints)
        if not self.boundary.is_periodic:
            per_axis = []
            for a in range(self.dim):
                wa = np.ones(self.resolution[a])
                wa[0] = wa[-1] = 0.5
                per_axis.append(wa)
            mesh = np.meshgrid(*per_axis, indexing="ij")
            w = math.prod(mesh) if self.dim > 1 else mesh[0]
            w = np.asarray(w).ravel()
        return w * self.cell_volume

    def refined(self, factor: int) -> "Grid":
        """The grid this one upsamples onto (factor*P periodic, factor*(P-1)+1 bounded)."""
        if self.boundary.is_periodic:
            res = tuple(P * factor for P in self.resolution)
        else:
            res = tuple((P - 1) * factor + 1 for P in self.resolution)
        return Grid(self.dim, res, self.extent, self.boundary)


@dataclass(frozen=True)
class Field:
    """Scalar or vector samples on a grid.

    ``values`` has shape ``resolution`` for scalar fields and
    ``(components,) + resolution`` for vector fields, float64 throughout.
    """

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        expect = self.grid.resolution
        if vals.shape != expect and vals.shape[1:] != expect:
            raise ValueError(f"field shape {vals.shape} does not match grid {expect}")
        object.__setattr__(self, "values", vals)

    @property
    def components(self) -> int:
        return 1 if self.values.shape == self.grid.resolution else self.values.shape[0]

    def component(self, i: int) -> np.ndarray:
        return self.values if self.components == 1 else self.values[i]

    def flat(self) -> np.ndarray:
        return self.values.reshape(self.components, -1) if self.components > 1 else self.values.ravel()

    def check_finite(self) -> "Field":
        if not np.all(np.isfinite(self.values)):
            raise FloatingPointError("field contains non-finite values")
        return self


def make_grid(dim, resolution, extent=1.0, boundary=BoundaryKind.PERIODIC) -> Grid:
    """Build a uniform grid; resolution/extent may be scalars or per-axis tuples."""
    if dim not in (1, 2):
        raise ValueError(f"dim must be 1 or 2, got {dim}")
    if isinstance(boundary, str):
        boundary = BoundaryKind(boundary)
    res = tuple(int(r) for r in (resolution if np.iterable(resolution) else [resolution] * dim))
    ext = tuple(float(e) for e in (extent if np.iterable(extent) else [extent] * dim))
    if len(res) != dim or len(ext) != dim:
        raise ValueError("resolution/extent arity does not match dim")
    if any(r < 4 for r in res):
        raise ValueError(f"resolution must be >= 4 per axis, got {res}")
    if any(e <= 0 for e in ext):
        raise ValueError(f"extent must be positive, got {ext}")
    return Grid(dim, res, ext, boundary)


def _resample_periodic(values: np.ndarray, factor: int) -> np.ndarray:
    """Fourier zero-padding interpolation along every axis (exact on band-limited input)."""
    out = values
    for axis in range(values.ndim):
        out = resample(out, out.shape[axis] * factor, axis=axis)
    return out


def _extend(values: np.ndarray, boundary: BoundaryKind, axis: int) -> np.ndarray:
    """Odd (sine) or even (cosine) reflection of a bounded axis into a 2L-periodic one."""
    body = np.moveaxis(values, axis, 0)
    mirror = body[-2:0:-1]
    if boundary is BoundaryKind.DIRICHLET_ZERO:
        mirror = -mirror
    return np.moveaxis(np.concatenate([body, mirror], axis=0), 0, axis)


def spectral_interpolate(field: Field, factor: int, cap: int = UPSAMPLE_CAP) -> Field:
    """Band-limited upsampling of a field by an integer power-of-2 factor.

    Periodic fields use Fourier zero padding; Dirichlet/Neumann fields are
    extended to a 2L-periodic signal by odd/even reflection first, so the
    boundary condition survives interpolation exactly. Returned values are
    point samples (band-limited inputs are reproduced exactly at the new
    coordinates).
    """
    factor = int(factor)
    if factor < 1 or factor & (factor - 1):
        raise ValueError(f"factor must be a positive power of 2, got {factor}")
    if factor > cap:
        raise ValueError(f"factor {factor} exceeds the upsample cap {cap}")
    grid = field.grid
    fine = grid.refined(factor)
    if factor == 1:
        return Field(fine, field.values.copy())

    def one(slab: np.ndarray) -> np.ndarray:
        if grid.boundary.is_periodic:
            return _resample_periodic(slab, factor)
        ext = slab
        for axis in range(slab.ndim):
            ext = _extend(ext, grid.boundary, axis)
        ext = _resample_periodic(ext, factor)
        sl = tuple(slice(0, (P - 1) * factor + 1) for P in grid.resolution)
        return ext[sl]

    if field.components == 1:
        vals = one(field.values)
    else:
        vals = np.stack([one(field.values[c]) for c in range(field.components)])
    return Field(fine, vals).check_finite()


def neighborhood(grid: Grid, center, r: float) -> np.ndarray:
    """Flat indices of grid points within distance r of ``center`` (closed ball).

    Periodic grids use the torus metric; bounded grids the Euclidean one.
    Indices come back sorted ascending; an empty result is legal.
    """
    if r <= 0:
        raise ValueError("radius must be positive")
    center = np.atleast_1d(np.asarray(center, dtype=np.float64))
    if center.shape != (grid.dim,):
        raise ValueError(f"center must have {grid.dim} coordinates")
    per_axis = []
    for a in range(grid.dim):
        h = grid.spacing[a]
        P = grid.resolution[a]
        c = center[a]
        lo = math.ceil((c - r) / h - 1e-12)
        hi = math.floor((c + r) / h + 1e-12)
        idx = np.arange(lo, hi + 1)
        if grid.boundary.is_periodic:
            if hi - lo + 1 >= P:
                idx = np.arange(P)
            d = idx * h - c
            L = grid.extent[a]
            d -= np.round(d / L) * L
            idx = idx % P
        else:
            keep = (idx >= 0) & (idx < P)
            idx = idx[keep]
            d = idx * h - c
        order = np.argsort(idx, kind="stable")
        per_axis.append((idx[order], d[order]))

    if grid.dim == 1:
        idx, d = per_axis[0]
        sel = np.abs(d) <= r
        return np.unique(idx[sel])
    (ix, dx), (iy, dy) = per_axis
    d2 = dx[:, None] ** 2 + dy[None, :] ** 2
    sel = d2 <= r * r
    flat = ix[:, None] * grid.resolution[1] + iy[None, :]
    return np.unique(flat[sel])
