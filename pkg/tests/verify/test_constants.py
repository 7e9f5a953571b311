"""Measured finite element constants on a few meshes."""

import pytest

from mpet_lab.fem.dg import DgConfig
from mpet_lab.verify.constants import (
    CONSTANTS,
    constant_spread,
    measure_fem_constants,
    measure_mesh_constants,
)


@pytest.fixture(scope="module")
def reports():
    return measure_fem_constants([2, 4], DgConfig(penalty=10.0))


def test_every_constant_is_positive(reports):
    for report in reports:
        assert report.positive_where_claimed()
        for name in CONSTANTS:
            assert getattr(report, name) is not None


def test_norm_equivalence_constants_are_reciprocal(reports):
    for report in reports:
        assert report.c0 >= 1.0 - 1e-12
        assert report.c1 <= 1.0 + 1e-12
        assert report.c0 * report.c1 == pytest.approx(1.0, rel=1e-8)


def test_inf_sup_in_the_div_norm_is_at_most_one(reports):
    # ||div v|| <= ||v||_div, so the supremum is bounded by one
    for report in reports:
        assert 0.0 < report.beta_v <= 1.0 + 1e-12


def test_spread_is_max_over_min(reports):
    spread = constant_spread(reports)

    assert set(spread) == set(CONSTANTS)
    assert all(value >= 1.0 for value in spread.values())


@pytest.mark.slow
def test_poincare_and_coercivity_are_mesh_independent():
    reports = [measure_mesh_constants(nx) for nx in (2, 4, 8)]
    spread = constant_spread(reports)

    assert spread["c3"] < 2.0
    assert spread["alpha_a"] < 2.0
