import numpy as np
import pytest

from mpet_lab.assembly.layout import BlockLayout
from mpet_lab.timestep.state import State


def test_blocks_are_views_by_name():
    layout = BlockLayout(n=1, displacement_size=2, velocity_size=1, pressure_size=3)
    y = np.arange(layout.total, dtype=float)
    state = State(0.5, y, layout)

    np.testing.assert_array_equal(state.displacement, [0.0, 1.0])
    np.testing.assert_array_equal(state.network(1), [2.0, 3.0])
    np.testing.assert_array_equal(state.pressure(1), [6.0, 7.0, 8.0])


def test_shape_must_match_layout():
    layout = BlockLayout(n=1, displacement_size=2, velocity_size=1, pressure_size=3)

    with pytest.raises(ValueError, match="layout needs"):
        State(0.0, np.zeros(3), layout)
    assert State.zeros(layout, t=1.0).y.sum() == 0.0
