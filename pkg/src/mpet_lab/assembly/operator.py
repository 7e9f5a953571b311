"""The symmetric time-step operator, its preconditioner and the norm matrix.

One Crank-Nicolson step solves A y = G with y = (u, v, u_dot, v_dot, p):

    mechanics block   tau^2/4 E (u, u) + Lambda_uv-weighted masses
    pressure coupling -tau^2/4 (alpha_i div u + div v_i, q_i) + sym
    pressure block    -tau^2/4 (Lambda_1 (x) M_P)

with E = 2 mu a_h + lam div^T M_P^-1 div. There is no velocity-pressure
coupling. The preconditioner is block-diagonal,

    B_uv = tau^2/4 [E + S^T (Lambda^-1 (x) M_P^-1) S] + Lambda_uv masses,
    B_p  = tau^2/4 (Lambda (x) M_P),

where S (u, v) = alpha_i div u + div v_i, and W = diag(B_uv, B_p) is the
Gram matrix of the stability norm. A and B_uv share one mass assembly, so
W and the term-by-term norm agree to rounding.

Velocities default to RT0. BDM1 velocities are accepted too; see
`timestep.stepper.run_convergence` for why the temporal order experiment
uses them.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from mpet_lab.assembly.layout import BlockLayout, PressureProjector
from mpet_lab.domain.mesh import Mesh
from mpet_lab.domain.parameters import (
    DerivedCoefficients,
    MpetParameters,
    NormWeights,
    build_norm_weights,
    derive_coefficients,
)
from mpet_lab.fem.dg import DgConfig, assemble_dg_elasticity
from mpet_lab.fem.operators import assemble_div, assemble_mass
from mpet_lab.fem.spaces import DofMap, SpaceError, SpaceKind, build_dofmap

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class OperatorPieces:
    displacement: DofMap
    velocity: DofMap
    pressure: DofMap
    mass_dd: sp.csr_matrix
    mass_dv: sp.csr_matrix
    mass_vv: sp.csr_matrix
    mass_p: sp.csr_matrix
    div: sp.csr_matrix
    divdiv: sp.csr_matrix
    a_h: sp.csr_matrix

    def elasticity(self, params: MpetParameters) -> sp.csr_matrix:
        return (2.0 * params.mu * self.a_h + params.lam * self.divdiv).tocsr()

    def mass_between(self, a: int, b: int, n: int) -> sp.csr_matrix:
        """Mass matrix between mechanics blocks a and b (0..2n+1)."""
        a_disp, b_disp = a <= n, b <= n
        if a_disp and b_disp:
            return self.mass_dd
        if a_disp:
            return self.mass_dv
        if b_disp:
            return self.mass_dv.T.tocsr()
        return self.mass_vv


@dataclass(frozen=True, eq=False)
class BlockSystem:
    mesh: Mesh
    params: MpetParameters
    derived: DerivedCoefficients
    weights: NormWeights
    dg: DgConfig
    layout: BlockLayout
    pieces: OperatorPieces
    matrix: sp.csr_matrix
    norm_matrix: sp.csr_matrix
    b_uv: sp.csr_matrix
    b_p: sp.csr_matrix
    projector: PressureProjector

    def block(self, row: str, col: str, matrix: sp.spmatrix | None = None):
        source = self.matrix if matrix is None else matrix
        return source[self.layout.slice(row), self.layout.slice(col)]

    @property
    def dofs(self) -> int:
        return self.layout.total


def build_pieces(
    mesh: Mesh,
    dg: DgConfig,
    velocity_space: SpaceKind | str = SpaceKind.RT0,
    require_coercive: bool = True,
) -> OperatorPieces:
    velocity_kind = SpaceKind(velocity_space)
    if not velocity_kind.is_vector:
        raise SpaceError(f"velocities need a vector space, got {velocity_kind}")
    displacement = build_dofmap(mesh, SpaceKind.BDM1, constrain_boundary=True)
    velocity = (
        displacement
        if velocity_kind is SpaceKind.BDM1
        else build_dofmap(mesh, velocity_kind, constrain_boundary=True)
    )
    pressure = build_dofmap(mesh, SpaceKind.P0)

    mass_p = assemble_mass(mesh, pressure, pressure)
    div = assemble_div(mesh, displacement, pressure)
    inverse_areas = sp.diags(1.0 / mesh.triangle_areas)
    return OperatorPieces(
        displacement=displacement,
        velocity=velocity,
        pressure=pressure,
        mass_dd=assemble_mass(mesh, displacement, displacement, dg.quadrature_degree),
        mass_dv=assemble_mass(mesh, displacement, velocity, dg.quadrature_degree),
        mass_vv=assemble_mass(mesh, velocity, velocity, dg.quadrature_degree),
        mass_p=mass_p,
        div=div,
        divdiv=(div.T @ inverse_areas @ div).tocsr(),
        a_h=assemble_dg_elasticity(mesh, displacement, dg, require_coercive),
    )


def _mechanics_mass(pieces: OperatorPieces, lambda_uv: np.ndarray, n: int) -> list:
    size = 2 * n + 2
    grid = [[None] * size for _ in range(size)]
    for a in range(size):
        for b in range(size):
            if lambda_uv[a, b] != 0.0:
                grid[a][b] = lambda_uv[a, b] * pieces.mass_between(a, b, n)
    return grid


def _add(grid: list, a: int, b: int, term: sp.spmatrix) -> None:
    grid[a][b] = term if grid[a][b] is None else grid[a][b] + term


def _coupling_rows(pieces: OperatorPieces, derived: DerivedCoefficients, n: int):
    """S as a block grid: row i holds alpha_i div (u) and div (v_i)."""
    rows = []
    for i in range(n):
        row = [None] * (n + 1)
        row[0] = derived.alpha[i] * pieces.div
        row[1 + i] = pieces.div
        rows.append(row)
    return rows


def _preconditioner_blocks(
    params: MpetParameters,
    derived: DerivedCoefficients,
    weights: NormWeights,
    pieces: OperatorPieces,
) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    n, quarter = params.n, params.tau**2 / 4.0
    grid = _mechanics_mass(pieces, weights.lambda_uv, n)
    _add(grid, 0, 0, quarter * pieces.elasticity(params))

    # S^T (Lambda^-1 (x) M_P^-1) S = (R^T Lambda^-1 R) (x) divdiv on (u, v)
    coupling = np.zeros((n, n + 1))
    coupling[:, 0] = derived.alpha
    coupling[:, 1:] = np.eye(n)
    weight = coupling.T @ weights.lam_inverse() @ coupling
    for a in range(n + 1):
        for b in range(n + 1):
            if weight[a, b] != 0.0:
                _add(grid, a, b, quarter * weight[a, b] * pieces.divdiv)

    b_uv = sp.bmat(grid, format="csr")
    b_p = (quarter * sp.kron(weights.lam, pieces.mass_p)).tocsr()
    return b_uv, b_p


def assemble_preconditioner(
    mesh: Mesh,
    params: MpetParameters,
    dg: DgConfig | None = None,
    velocity_space: SpaceKind | str = SpaceKind.RT0,
) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    dg = dg or DgConfig()
    derived = derive_coefficients(params)
    weights = build_norm_weights(params, derived)
    pieces = build_pieces(mesh, dg, velocity_space)
    return _preconditioner_blocks(params, derived, weights, pieces)


def assemble_operator(
    mesh: Mesh,
    params: MpetParameters,
    dg: DgConfig | None = None,
    velocity_space: SpaceKind | str = SpaceKind.RT0,
    require_coercive: bool = True,
) -> BlockSystem:
    dg = dg or DgConfig()
    n, tau = params.n, params.tau
    quarter = tau**2 / 4.0
    derived = derive_coefficients(params)
    weights = build_norm_weights(params, derived)
    pieces = build_pieces(mesh, dg, velocity_space, require_coercive)

    mechanics = _mechanics_mass(pieces, weights.lambda_uv, n)
    _add(mechanics, 0, 0, quarter * pieces.elasticity(params))

    size = 2 * n + 2
    grid = [row + [None] * n for row in mechanics] + [
        [None] * (size + n) for _ in range(n)
    ]
    for i, row in enumerate(_coupling_rows(pieces, derived, n)):
        for b, term in enumerate(row):
            if term is not None:
                grid[size + i][b] = -quarter * term
                grid[b][size + i] = -quarter * term.T
    for i in range(n):
        for j in range(n):
            if weights.lambda1[i, j] != 0.0:
                term = -quarter * weights.lambda1[i, j] * pieces.mass_p
                grid[size + i][size + j] = term
    pressure_size = pieces.pressure.ndofs

    matrix = sp.bmat(grid, format="csr")
    b_uv, b_p = _preconditioner_blocks(params, derived, weights, pieces)
    layout = BlockLayout(
        n=n,
        displacement_size=pieces.displacement.ndofs,
        velocity_size=pieces.velocity.ndofs,
        pressure_size=pressure_size,
    )
    system = BlockSystem(
        mesh=mesh,
        params=params,
        derived=derived,
        weights=weights,
        dg=dg,
        layout=layout,
        pieces=pieces,
        matrix=matrix,
        norm_matrix=sp.block_diag([b_uv, b_p], format="csr"),
        b_uv=b_uv,
        b_p=b_p,
        projector=PressureProjector(layout, mesh.triangle_areas),
    )
    logger.info(
        "assembled %dx%d mesh, n=%d, %s velocities: %d dofs, %d nonzeros",
        mesh.nx,
        mesh.ny,
        n,
        pieces.velocity.kind,
        layout.total,
        matrix.nnz,
    )
    return system


@dataclass(frozen=True)
class NormTerms:
    elasticity: float
    mass: float
    divergence: float
    pressure: float

    @property
    def total(self) -> float:
        return self.elasticity + self.mass + self.divergence + self.pressure


def norm_terms(system: BlockSystem, x: np.ndarray) -> NormTerms:
    """The stability norm of x, one term at a time."""
    params, pieces, layout = system.params, system.pieces, system.layout
    n, quarter = params.n, params.tau**2 / 4.0
    names = layout.names
    blocks = [x[layout.slice(name)] for name in names]

    u = blocks[0]
    elasticity = quarter * float(u @ (pieces.elasticity(params) @ u))

    mass = 0.0
    lambda_uv = system.weights.lambda_uv
    for a in range(2 * n + 2):
        for b in range(2 * n + 2):
            if lambda_uv[a, b] != 0.0:
                pairing = blocks[a] @ (pieces.mass_between(a, b, n) @ blocks[b])
                mass += lambda_uv[a, b] * float(pairing)

    areas = system.mesh.triangle_areas
    div_u = pieces.div @ u
    sources = np.array(
        [
            alpha * div_u + pieces.div @ blocks[1 + i]
            for i, alpha in enumerate(system.derived.alpha)
        ]
    )
    lam_inverse = system.weights.lam_inverse()
    divergence = quarter * float(
        np.einsum("it,ij,jt->", sources / areas, lam_inverse, sources)
    )

    pressures = np.array([x[block] for block in layout.pressure_slices()])
    pressure = quarter * float(
        np.einsum("it,ij,jt->", pressures * areas, system.weights.lam, pressures)
    )
    return NormTerms(elasticity, mass, divergence, pressure)
