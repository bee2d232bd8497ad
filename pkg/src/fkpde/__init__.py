"""Feynman-Kac propagation engine for convection-diffusion-type PDEs."""

from .grid import BoundaryKind, Field, Grid, make_grid, neighborhood, spectral_interpolate
from .kernel import (CflAdvisory, DriftOutOfDomain, NormalizationFailure,
                     PropagatorConfig, SparseOperator, TransitionKernel,
                     assemble_linear_operator, heun_backtrace, mc_propagate,
                     propagate, select_radius, transition_kernel)
from .pdes import (AllenCahn, ConvectionDiffusion, NavierStokesVorticity, PdeSpec,
                   drift, forcing_value, velocity_from_vorticity)
from .refsolvers import (Blowup, crank_nicolson_ns_solve, fd_allen_cahn_solve,
                         mc_solve_full, spectral_convdiff_solve)
from .sampling import GrfSpec, sample_fourier_ic, sample_grf

__version__ = "0.1.0"
