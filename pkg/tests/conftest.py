import types

from fkpde.pdes import ConvectionDiffusion


def diffusion_only_pde(grid, kappa):
    """Duck-typed stand-in for PdeSpec: pure diffusion, no drift, no forcing,
    on an arbitrary grid (lets tests drive bounded kernels without the
    Allen-Cahn reaction)."""
    return types.SimpleNamespace(
        kind=ConvectionDiffusion(beta=0.0, kappa=kappa), grid=grid,
        diffusivity=kappa, drift_is_state_dependent=False,
        forcing_is_state_dependent=False)
