import numpy as np
import pytest

from chaosrd.errors import InvalidArgumentError
from chaosrd.grid_ops import PeriodicGrid
from chaosrd.legendre_chaos import LegendreBasis, build_tensors, recurrence_coefficients
from chaosrd.models import (
    FieldState,
    ModelSpec,
    initial_condition,
    rhs_det,
    rhs_ipce,
    steady_states,
    turing_condition,
)


@pytest.fixture
def grid():
    return PeriodicGrid(32)


@pytest.fixture
def grayscott():
    return ModelSpec.load({"model": "grayscott"})


def test_load_scalar_defaults():
    spec = ModelSpec.load({"model": "cubic", "D": 1})

    assert spec.diffusion == (1.0,)
    assert (spec.a, spec.b) == (1.0, 2.0)
    assert spec.species == 1
    assert spec.system_id == 8


def test_load_grayscott_defaults(grayscott):
    assert grayscott.diffusion == (2e-5, 1e-5)
    assert (grayscott.a, grayscott.b) == (0.058, 0.062)
    assert grayscott.feed == 0.04
    assert grayscott.species == 2
    assert grayscott.system_id == 0
    assert grayscott.D == 2e-5


@pytest.mark.parametrize("kwargs", [
    {"kind": "quartic", "diffusion": (0.0,), "a": 1.0, "b": 2.0},
    {"kind": "linear", "diffusion": (0.0,), "a": 2.0, "b": 1.0},
    {"kind": "linear", "diffusion": (-1.0,), "a": 1.0, "b": 2.0},
    {"kind": "linear", "diffusion": (0.0,), "a": 1.0, "b": 2.0, "dim": 3},
    {"kind": "grayscott", "diffusion": (1e-5,), "a": 0.058, "b": 0.062},
    {"kind": "grayscott", "diffusion": (2e-5, 1e-5), "a": 0.058, "b": 0.062, "feed": 0.0},
])
def test_invalid_spec(kwargs):
    with pytest.raises(InvalidArgumentError):
        ModelSpec(**kwargs)


def test_with_interval():
    spec = ModelSpec.load({"model": "linear"}).with_interval(0.5, 0.75)

    assert (spec.a, spec.b) == (0.5, 0.75)


def test_scalar_initial_condition(grid):
    state = initial_condition(ModelSpec.load({"model": "linear"}), grid)

    assert state.values.shape == (1, 32)
    assert np.allclose(state.u, np.cos(np.pi * grid.nodes))
    with pytest.raises(InvalidArgumentError):
        state.v


def test_scalar_initial_condition_2d():
    grid = PeriodicGrid(8, dim=2)
    state = initial_condition(ModelSpec.load({"model": "linear", "dim": 2}), grid)
    x, y = grid.mesh()

    assert state.values.shape == (1, 8, 8)
    assert np.allclose(state.u, np.cos(np.pi * x) * np.cos(np.pi * y))


def test_initial_condition_dimension_mismatch(grid):
    with pytest.raises(InvalidArgumentError):
        initial_condition(ModelSpec.load({"model": "linear", "dim": 2}), grid)


@pytest.mark.parametrize("square_exponent", [False, True])
def test_grayscott_initial_condition_1d(grid, square_exponent):
    spec = ModelSpec.load({"model": "grayscott", "square_exponent": square_exponent})
    state = initial_condition(spec, grid)

    assert state.values.shape == (2, 32)
    assert np.all(state.u < 1.0)
    assert np.all(state.v > 0.0)
    assert state.u.argmin() == 16


def test_grayscott_initial_condition_2d():
    grid = PeriodicGrid(28, dim=2)
    state = initial_condition(ModelSpec.load({"model": "grayscott", "dim": 2}), grid)

    assert state.values.shape == (2, 28, 28)
    assert np.allclose(state.u + state.v, 1.0)
    assert state.v.max() == pytest.approx(0.25, abs=1e-3)


@pytest.mark.parametrize("model, power", [("linear", 1), ("quadratic", 2), ("cubic", 3)])
def test_scalar_rhs(model, power):
    values = np.linspace(-1, 1, 9)[None]

    assert np.allclose(rhs_det(ModelSpec.load({"model": model}), 1.5, values), -1.5 * values**power)


def test_grayscott_rhs(grayscott):
    u, v = np.array([0.5, 1.0]), np.array([0.25, 0.0])

    rhs = rhs_det(grayscott, 0.06, np.stack([u, v]))

    assert np.allclose(rhs[0], -u * v**2 + 0.04 * (1 - u))
    assert np.allclose(rhs[1], u * v**2 - 0.1 * v)
    assert np.all(rhs[:, 1] == 0.0)


@pytest.mark.parametrize("model", ["linear", "quadratic", "cubic", "grayscott"])
def test_galerkin_rhs_of_degree_zero_uses_the_mean(model, grid):
    spec = ModelSpec.load({"model": model})
    tensors = build_tensors(LegendreBasis(spec.a, spec.b, 0))
    values = initial_condition(spec, grid).values

    rhs = rhs_ipce(spec, tensors, values[None])

    assert rhs.shape == (1,) + values.shape
    assert np.allclose(rhs[0], rhs_det(spec, 0.5 * (spec.a + spec.b), values))


def test_galerkin_rhs_of_deterministic_state(grid):
    spec = ModelSpec.load({"model": "linear"})
    tensors = build_tensors(LegendreBasis(1.0, 2.0, 3))
    coefficients = np.zeros((4, 1, 32))
    coefficients[0] = initial_condition(spec, grid).values

    rhs = rhs_ipce(spec, tensors, coefficients)

    u = coefficients[0, 0]
    assert np.allclose(rhs[0, 0], -1.5 * u)
    assert np.allclose(rhs[1, 0], -0.5 * recurrence_coefficients(1)[0] * u)
    assert np.allclose(rhs[2:], 0.0)


def test_cubic_routes_agree_on_deterministic_state(grid):
    spec = ModelSpec.load({"model": "cubic"})
    tensors = build_tensors(LegendreBasis(1.0, 2.0, 2))
    coefficients = np.zeros((3, 1, 32))
    coefficients[0] = initial_condition(spec, grid).values

    exact = rhs_ipce(spec, tensors, coefficients, cubic_route="tensor")
    truncated = rhs_ipce(spec, tensors, coefficients, cubic_route="truncated")

    assert np.allclose(exact, truncated)


def test_unknown_cubic_route(grid):
    spec = ModelSpec.load({"model": "cubic"})
    tensors = build_tensors(LegendreBasis(1.0, 2.0, 1))

    with pytest.raises(InvalidArgumentError):
        rhs_ipce(spec, tensors, np.zeros((2, 1, 32)), cubic_route="exact")


def test_field_state_species():
    state = FieldState(np.zeros((2, 4)), 1.0)

    assert state.u.shape == state.v.shape == (4,)


def test_steady_states():
    states = steady_states(0.04, 0.02)

    assert states.d == pytest.approx(0.64)
    assert states.v_red == 0.0
    assert states.v_blue == pytest.approx(0.6)
    assert states.v_one == pytest.approx(0.2 / 3)


def test_blue_state_is_a_fixed_point():
    feed, kill = 0.04, 0.02
    v = steady_states(feed, kill).v_blue
    u = (feed + kill) / v

    assert u * v**2 == pytest.approx(feed * (1 - u))


def test_steady_states_with_alpha():
    assert steady_states(0.04, 0.02, alpha=1.0).v_blue == pytest.approx(0.9)


def test_only_trivial_state_without_real_roots():
    states = steady_states(0.04, 0.06)

    assert states.d <= 0
    assert states.v_blue is None
    assert states.v_one is None


def test_steady_states_need_feed():
    with pytest.raises(InvalidArgumentError):
        steady_states(0.0, 0.06)


@pytest.mark.parametrize("v0, expected", [(0.0, True), (0.6, False)])
def test_turing_condition(v0, expected):
    assert turing_condition(0.04, 0.02, v0) is expected


def test_turing_condition_at_the_fold():
    assert turing_condition(0.04, 0.06, 0.2) is True
