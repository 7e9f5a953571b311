"""Measured finite element constants of the stability analysis.

On the constrained BDM1 space of each mesh:

    c0       largest  ||u||_DG^2 / ||u||_h^2
    c1       smallest ||u||_h^2 / ||u||_DG^2     (Korn; c0 c1 = 1)
    c2       largest  |a_h(u, u)| / ||u||_DG^2    (a_h is symmetric)
    c3       largest  ||u||^2 / ||u||_1,h^2       (Poincare)
    alpha_a  smallest a_h(u, u) / ||u||_h^2       (coercivity)
    beta_s   inf-sup of (div u, q) in ||u||_1,h x ||q||
    beta_v   inf-sup of (div v, q) in ||v||_div x ||q||

The DG and broken H1 norms coincide on piecewise linears, so c0 is taken
between the DG and h norms. Pressures range over zero-mean P0, the
largest space on which the inf-sup constants can be positive.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigh, null_space

from mpet_lab.domain.mesh import build_structured_mesh
from mpet_lab.domain.parameters import StabilityReport
from mpet_lab.fem.dg import DgConfig, dg_forms
from mpet_lab.fem.operators import assemble_div, assemble_mass
from mpet_lab.fem.spaces import SpaceKind, build_dofmap

logger = logging.getLogger(__name__)

CONSTANTS = ("c0", "c1", "c2", "c3", "alpha_a", "beta_s", "beta_v")


def _pencil(a: sp.spmatrix | np.ndarray, b: sp.spmatrix | np.ndarray) -> np.ndarray:
    dense_a = a.toarray() if sp.issparse(a) else a
    dense_b = b.toarray() if sp.issparse(b) else b
    return eigh(
        0.5 * (dense_a + dense_a.T), 0.5 * (dense_b + dense_b.T), eigvals_only=True
    )


def _inf_sup(div: sp.spmatrix, gram: sp.spmatrix, mass_p: sp.spmatrix) -> float:
    """sqrt of the smallest eigenvalue of D G^-1 D^T against M_P on
    zero-mean pressures."""
    areas = mass_p.diagonal()
    zero_mean = null_space(areas[None, :])
    d = div.toarray() @ zero_mean
    schur = d.T @ np.linalg.solve(gram.toarray(), d)
    mass = zero_mean.T @ mass_p.toarray() @ zero_mean
    return float(np.sqrt(max(_pencil(schur, mass)[0], 0.0)))


def measure_mesh_constants(nx: int, dg: DgConfig | None = None) -> StabilityReport:
    dg = dg or DgConfig()
    mesh = build_structured_mesh(nx, nx)
    displacement = build_dofmap(mesh, SpaceKind.BDM1, constrain_boundary=True)
    pressure = build_dofmap(mesh, SpaceKind.P0)
    forms = dg_forms(displacement, dg)
    a_h = forms.elasticity(dg.penalty)
    h_gram, dg_gram = forms.h_gram, forms.dg_gram
    mass = assemble_mass(mesh, displacement, displacement, dg.quadrature_degree)
    mass_p = assemble_mass(mesh, pressure, pressure)
    div = assemble_div(mesh, displacement, pressure)
    div_gram = (mass + div.T @ sp.diags(1.0 / mesh.triangle_areas) @ div).tocsr()

    elasticity = _pencil(a_h, dg_gram)
    report = StabilityReport(
        nx=nx,
        c0=float(_pencil(dg_gram, h_gram)[-1]),
        c1=float(_pencil(h_gram, dg_gram)[0]),
        c2=float(np.max(np.abs(elasticity))),
        c3=float(_pencil(mass, dg_gram)[-1]),
        alpha_a=float(_pencil(a_h, h_gram)[0]),
        beta_s=_inf_sup(div, dg_gram, mass_p),
        beta_v=_inf_sup(div, div_gram, mass_p),
    )
    logger.info(
        "constants on %dx%d: alpha_a=%.4g beta_s=%.4g beta_v=%.4g c3=%.4g",
        nx,
        nx,
        report.alpha_a,
        report.beta_s,
        report.beta_v,
        report.c3,
    )
    return report


def measure_fem_constants(
    sizes: Sequence[int], dg: DgConfig | None = None
) -> list[StabilityReport]:
    return [measure_mesh_constants(nx, dg) for nx in sizes]


def constant_spread(reports: Sequence[StabilityReport]) -> dict[str, float]:
    """max / min of every constant across meshes."""
    spread = {}
    for name in CONSTANTS:
        values = np.array([getattr(report, name) for report in reports], dtype=float)
        spread[name] = float(values.max() / values.min())
    return spread
