"""Right-hand side of one step and the load presets."""

import numpy as np
import pytest

from mpet_lab.assembly.operator import assemble_operator
from mpet_lab.assembly.rhs import (
    LoadError,
    LoadSpec,
    assemble_rhs,
    preset_loads,
)
from mpet_lab.domain.mesh import build_structured_mesh
from mpet_lab.domain.parameters import MpetParameters
from mpet_lab.fem.operators import constant_field, load_moments
from mpet_lab.timestep.state import State


def downward(points, t):
    return constant_field((0.0, -2.0))(points)


@pytest.fixture
def system():
    params = MpetParameters.create(1, tau=0.1, T=1.0, c_p=2.0)
    return assemble_operator(build_structured_mesh(2, 2), params)


def test_zero_state_and_loads_give_zero(system):
    rhs = assemble_rhs(system, State.zeros(system.layout), LoadSpec.zero(1))

    np.testing.assert_array_equal(rhs, 0.0)


def test_constant_body_force_enters_with_trapezoidal_weight(system):
    loads = LoadSpec(downward, LoadSpec.zero(1).network_forces)
    rhs = assemble_rhs(system, State.zeros(system.layout), loads)
    tau = system.params.tau
    expected = tau**2 / 2.0 * load_moments(
        system.pieces.displacement, constant_field((0.0, -2.0))
    )

    np.testing.assert_allclose(rhs[system.layout.slice("u")], expected, atol=1e-15)
    others = np.delete(rhs, np.arange(system.layout.displacement_size))
    np.testing.assert_array_equal(others, 0.0)


def test_pressure_enters_coupling_and_storage_rows(system):
    layout = system.layout
    y = np.zeros(layout.total)
    p = np.random.default_rng(9).standard_normal(layout.pressure_size)
    y[layout.slice("p1")] = p
    quarter = system.params.tau**2 / 4.0

    rhs = assemble_rhs(system, State(0.0, y, layout), LoadSpec.zero(1))

    div = system.pieces.div
    alpha = system.derived.alpha[0]
    np.testing.assert_allclose(rhs[layout.slice("u")], quarter * alpha * (div.T @ p))
    np.testing.assert_allclose(rhs[layout.slice("v1")], quarter * (div.T @ p))
    np.testing.assert_allclose(
        rhs[layout.slice("p1")], -quarter * 2.0 * (system.pieces.mass_p @ p)
    )
    np.testing.assert_array_equal(rhs[layout.slice("ud")], 0.0)


def test_step_must_end_inside_the_interval(system):
    late = State.zeros(system.layout, t=0.95)

    with pytest.raises(LoadError, match="leaves the time interval"):
        assemble_rhs(system, late, LoadSpec.zero(1))


def test_network_count_must_match(system):
    with pytest.raises(LoadError):
        assemble_rhs(system, State.zeros(system.layout), LoadSpec.zero(2))


def test_network_forces_are_symmetrized():
    def solid(points, t):
        return np.ones(points.shape)

    def fluid(points, t):
        return 2.0 * np.ones(points.shape)

    loads = LoadSpec.from_network_forces(solid, [fluid, fluid], [0.1, 0.3])
    points = np.zeros((4, 2))

    np.testing.assert_allclose(loads.body_force(points, 0.0), 1.0 + 0.8)
    np.testing.assert_allclose(loads.network_forces[1](points, 0.0), -2.0)


def test_network_forces_need_one_porosity_each():
    with pytest.raises(LoadError):
        LoadSpec.from_network_forces(downward, [downward], [0.1, 0.2])


def test_presets():
    pulse = preset_loads("pulse", 2)
    points = np.array([[0.5, 0.5]])

    assert len(pulse.network_forces) == 2
    np.testing.assert_allclose(pulse.body_force(points, 0.0), 0.0)
    np.testing.assert_allclose(pulse.body_force(points, 0.5), [[1.0, 1.0]])
    np.testing.assert_allclose(
        preset_loads("gravity", 1).body_force(points, 0.3), [[0.0, -1.0]]
    )
    with pytest.raises(LoadError):
        preset_loads("earthquake", 1)
