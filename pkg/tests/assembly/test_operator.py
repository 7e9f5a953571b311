"""The block time-step operator, its preconditioner and the norm matrix."""

import numpy as np
import pytest
import scipy.sparse as sp

from mpet_lab.assembly.operator import assemble_operator, norm_terms
from mpet_lab.domain.mesh import build_structured_mesh
from mpet_lab.domain.parameters import MpetParameters
from mpet_lab.fem.spaces import SpaceKind


@pytest.fixture
def system():
    params = MpetParameters.create(
        2, mu=2.0, lam=10.0, K=[1.0, 1e-2], c_p=[1.0, 0.5], beta_tilde=3.0, tau=0.1
    )
    return assemble_operator(build_structured_mesh(2, 2), params)


def test_operator_is_symmetric(system):
    a = system.matrix
    assert abs(a - a.T).max() < 1e-12 * abs(a).max()


def test_layout_matches_the_spaces(system):
    layout = system.layout
    # constrained 2x2 mesh: 8 interior edges, 8 triangles
    assert layout.displacement_size == 16
    assert layout.velocity_size == 8
    assert layout.pressure_size == 8
    assert system.dofs == 3 * 16 + 3 * 8 + 2 * 8


def test_pressure_block_is_scaled_storage_and_transfer(system):
    quarter = system.params.tau**2 / 4.0
    pp = system.matrix[system.layout.pressures, system.layout.pressures].toarray()
    expected = -quarter * sp.kron(system.weights.lambda1, system.pieces.mass_p)

    np.testing.assert_allclose(pp, expected.toarray(), atol=1e-15)
    assert np.linalg.eigvalsh(pp)[-1] <= 1e-14


@pytest.mark.parametrize(("row", "col"), [("ud", "vd1"), ("ud", "p1"), ("vd2", "p2")])
def test_velocity_blocks_do_not_couple(system, row, col):
    assert system.block(row, col).nnz == 0


def test_biot_coupling_uses_alpha_and_divergence(system):
    quarter = system.params.tau**2 / 4.0
    alpha = system.derived.alpha[0]
    div = system.pieces.div.toarray()

    np.testing.assert_allclose(
        system.block("p1", "u").toarray(), -quarter * alpha * div, atol=1e-15
    )
    np.testing.assert_allclose(
        system.block("p1", "v1").toarray(), -quarter * div, atol=1e-15
    )


def test_uncoupled_network_leaves_the_solid_alone():
    params = MpetParameters.create(
        1, phi=0.25, rho=1.0, rho_m=4.0, K=1e15, alpha_tilde=0.25, c_p=0.0, tau=1e-3
    )
    system = assemble_operator(build_structured_mesh(2, 2), params)

    assert abs(system.block("u", "v1")).max() < 1e-12


def test_preconditioner_blocks_are_positive_definite(system):
    for block in (system.b_uv, system.b_p):
        dense = block.toarray()
        np.testing.assert_allclose(dense, dense.T, atol=1e-12 * abs(dense).max())
        assert np.linalg.eigvalsh(dense)[0] > 0


def test_norm_matrix_matches_term_by_term_norm(system):
    x = np.random.default_rng(4).standard_normal(system.dofs)
    terms = norm_terms(system, x)

    assert x @ (system.norm_matrix @ x) == pytest.approx(terms.total, rel=1e-10)
    assert terms.elasticity > 0 and terms.pressure > 0


def test_bdm1_velocities_share_the_displacement_space():
    params = MpetParameters.create(1)
    system = assemble_operator(
        build_structured_mesh(2, 2), params, velocity_space=SpaceKind.BDM1
    )

    assert system.layout.velocity_size == system.layout.displacement_size
    assert system.pieces.velocity is system.pieces.displacement
