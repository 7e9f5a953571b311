import numpy as np
import pytest

from mpet_lab.assembly.layout import BlockLayout, PressureProjector


@pytest.fixture
def layout():
    return BlockLayout(n=2, displacement_size=4, velocity_size=3, pressure_size=2)


def test_block_order_and_offsets(layout):
    assert layout.names == ("u", "v1", "v2", "ud", "vd1", "vd2", "p1", "p2")
    assert layout.total == 3 * 4 + 3 * 3 + 2 * 2
    assert layout.slice("ud") == slice(12, 15)
    assert layout.mechanics == slice(0, 21)
    assert layout.pressures == slice(21, 25)
    assert layout.describe()[-1] == {"name": "p2", "offset": 23, "size": 2}


def test_projector_removes_area_weighted_means(layout):
    areas = np.array([1.0, 3.0])
    projector = PressureProjector(layout, areas)
    x = np.random.default_rng(0).standard_normal(layout.total)

    projected = projector.project(x)

    np.testing.assert_allclose(projector.means(projected), 0.0, atol=1e-15)
    np.testing.assert_array_equal(projected[layout.mechanics], x[layout.mechanics])
    np.testing.assert_allclose(projector.project(projected), projected, atol=1e-15)


def test_remove_means_shifts_each_block_by_a_constant(layout):
    projector = PressureProjector(layout, np.array([1.0, 1.0]))
    x = np.zeros(layout.total)
    x[layout.slice("p1")] = [2.0, 4.0]
    x[layout.slice("p2")] = [1.0, 1.0]

    shifted = projector.remove_means(x)

    np.testing.assert_allclose(shifted[layout.slice("p1")], [-1.0, 1.0])
    np.testing.assert_allclose(shifted[layout.slice("p2")], [0.0, 0.0])
    assert projector.constraints.shape == (layout.total, 2)
