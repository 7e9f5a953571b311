"""Interior-penalty elasticity form and the mesh-dependent norms."""

import numpy as np
import pytest

from mpet_lab.domain.mesh import build_structured_mesh
from mpet_lab.fem.dg import (
    DgConfig,
    DgConfigError,
    assemble_dg_elasticity,
    dg_forms,
    dg_norms,
    is_positive_definite,
)
from mpet_lab.fem.operators import constant_field, interpolate
from mpet_lab.fem.spaces import SpaceError, SpaceKind, build_dofmap


@pytest.fixture
def mesh():
    return build_structured_mesh(2, 2)


@pytest.fixture
def bdm(mesh):
    return build_dofmap(mesh, SpaceKind.BDM1, constrain_boundary=True)


@pytest.mark.parametrize(
    "overrides", [{"penalty": 0.0}, {"penalty": -1.0}, {"quadrature_degree": 1}]
)
def test_config_rejects_bad_settings(overrides):
    with pytest.raises(DgConfigError):
        DgConfig(**overrides)


def test_elasticity_form_is_symmetric(mesh, bdm):
    a_h = assemble_dg_elasticity(mesh, bdm, DgConfig(penalty=10.0)).toarray()

    assert np.abs(a_h - a_h.T).max() < 1e-12 * np.abs(a_h).max()


def test_elasticity_form_is_coercive_on_constrained_space(mesh, bdm):
    a_h = assemble_dg_elasticity(
        mesh, bdm, DgConfig(penalty=10.0), require_coercive=True
    )

    assert is_positive_definite(a_h)


def test_form_lives_on_bdm1_only(mesh):
    with pytest.raises(SpaceError):
        dg_forms(build_dofmap(mesh, SpaceKind.RT0))


def test_rigid_translation_has_no_strain_energy():
    mesh = build_structured_mesh(2, 2)
    free = build_dofmap(mesh, SpaceKind.BDM1, constrain_boundary=False)
    forms = dg_forms(free)
    x = interpolate(mesh, free, constant_field((1.0, 2.0)))

    assert x @ (forms.strain @ x) == pytest.approx(0.0, abs=1e-13)


def test_norms_of_zero_are_zero(mesh, bdm):
    norms = dg_norms(mesh, bdm, np.zeros(bdm.ndofs))

    assert (norms.h, norms.one_h, norms.dg) == (0.0, 0.0, 0.0)


def test_dg_norm_equals_broken_h1_norm_for_linears(mesh, bdm):
    x = np.random.default_rng(1).standard_normal(bdm.ndofs)
    norms = dg_norms(mesh, bdm, x)

    assert norms.dg == norms.one_h
    assert norms.h > 0


def test_norm_ratio_stays_in_a_fixed_interval():
    ratios = []
    for nx in (2, 4):
        mesh = build_structured_mesh(nx, nx)
        bdm = build_dofmap(mesh, SpaceKind.BDM1)
        rng = np.random.default_rng(nx)
        for _ in range(100):
            norms = dg_norms(mesh, bdm, rng.standard_normal(bdm.ndofs))
            ratios.append(norms.h / norms.dg)

    # Korn: ||eps u|| <= ||grad u||, and the Gram matrices share the jump term
    assert max(ratios) <= 1.0 + 1e-12
    assert min(ratios) > 0.2
