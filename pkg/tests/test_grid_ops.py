import numpy as np
import pytest

from chaosrd.errors import InvalidGridError, ShapeError
from chaosrd.grid_ops import (
    PeriodicGrid,
    build_fd_laplacian,
    dealias_mask,
    forward_transform,
    inverse_transform,
    solve_shifted,
    spectral_symbol,
)


def semidiscrete_eigenvalue(grid):
    return 4 / grid.h**2 * np.sin(np.pi * grid.h / 2) ** 2


@pytest.fixture
def grid():
    return PeriodicGrid(64)


@pytest.fixture
def grid_2d():
    return PeriodicGrid(16, dim=2)


def test_grid_nodes(grid):
    assert grid.h == 2 / 64
    assert grid.nodes[0] == -1.0
    assert grid.nodes[-1] == pytest.approx(1 - grid.h)
    assert grid.shape == (64,)
    assert grid.size == 64


def test_grid_mesh_uses_matrix_indexing(grid_2d):
    x, y = grid_2d.mesh()

    assert x.shape == y.shape == (16, 16)
    assert np.all(x[:, 0] == grid_2d.nodes)
    assert np.all(y[0, :] == grid_2d.nodes)


@pytest.mark.parametrize("p, dim", [(0, 1), (8, 3)])
def test_invalid_grid(p, dim):
    with pytest.raises(InvalidGridError):
        PeriodicGrid(p, dim)


def test_check_field_rejects_wrong_shape(grid):
    with pytest.raises(ShapeError):
        grid.check_field(np.zeros(63))


@pytest.mark.parametrize("p", [1, 2])
def test_fd_laplacian_needs_three_points(p):
    with pytest.raises(InvalidGridError):
        build_fd_laplacian(PeriodicGrid(p))


def test_fd_laplacian_is_periodic():
    op = build_fd_laplacian(PeriodicGrid(8))
    matrix = op.matrix.toarray() * op.grid.h**2

    assert matrix[0, 7] == 1.0
    assert matrix[7, 0] == 1.0
    assert np.all(np.diag(matrix) == -2.0)
    assert np.allclose(matrix.sum(axis=1), 0.0)
    assert np.allclose(matrix, matrix.T)


def test_fd_laplacian_eigenvector(grid):
    op = build_fd_laplacian(grid)
    u = np.cos(np.pi * grid.nodes)

    assert np.allclose(op.apply(u), -semidiscrete_eigenvalue(grid) * u, atol=1e-8)


def test_fd_laplacian_2d_is_kronecker_sum(grid_2d):
    op = build_fd_laplacian(grid_2d)
    x, y = grid_2d.mesh()
    u = np.cos(np.pi * x) * np.cos(np.pi * y)

    assert op.order == 256
    assert np.allclose(op.apply(u), -2 * semidiscrete_eigenvalue(grid_2d) * u, atol=1e-9)


def test_stiffness_is_positive_semidefinite(grid):
    eigenvalues = np.linalg.eigvalsh(build_fd_laplacian(grid).stiffness.toarray())

    assert eigenvalues.min() > -1e-8


@pytest.mark.parametrize("shift", [1e-4, 0.01, 0.5])
def test_solve_shifted_residual(grid, shift):
    op = build_fd_laplacian(grid)
    rhs = np.random.default_rng(1).standard_normal((3, 64))

    x = solve_shifted(op, shift, rhs)

    assert x.shape == rhs.shape
    residual = x - shift * op.apply(x) - rhs
    assert np.linalg.norm(residual) <= 1e-12 * np.linalg.norm(rhs)


def test_solve_shifted_without_shift_copies(grid):
    op = build_fd_laplacian(grid)
    rhs = np.ones(64)

    x = solve_shifted(op, 0.0, rhs)

    assert x is not rhs
    assert np.all(x == rhs)


def test_factorization_is_cached(grid):
    op = build_fd_laplacian(grid)

    assert op.factorization(0.25) is op.factorization(0.25)
    assert op.factorization(0.25) is not op.factorization(0.25, axis=-1)


@pytest.mark.parametrize("axis", [-1, -2])
def test_solve_shifted_along_axis(grid_2d, axis):
    op = build_fd_laplacian(grid_2d)
    rhs = np.random.default_rng(2).standard_normal((2, 16, 16))

    x = solve_shifted(op, 0.01, rhs, axis=axis)

    assert np.allclose(x - 0.01 * op.apply_axis(x, axis), rhs, atol=1e-12)


def test_axis_solves_split_the_2d_operator(grid_2d):
    op = build_fd_laplacian(grid_2d)
    x, y = grid_2d.mesh()
    rhs = np.cos(np.pi * x) * np.cos(np.pi * y)
    shift = 0.02

    split = solve_shifted(op, shift, solve_shifted(op, shift, rhs, axis=-1), axis=-2)
    lam = semidiscrete_eigenvalue(grid_2d)

    assert np.allclose(split, rhs / (1 + shift * lam) ** 2)


def test_spectral_symbol_counts_nyquist_as_positive():
    symbol = spectral_symbol(PeriodicGrid(8))

    assert list(symbol.wavenumbers[0]) == [0, 1, 2, 3, 4, -3, -2, -1]
    assert symbol.diagonal[4] == -((4 * np.pi) ** 2)


def test_spectral_symbol_needs_even_p():
    with pytest.raises(InvalidGridError):
        spectral_symbol(PeriodicGrid(9))


def test_forward_transform_of_cosine():
    grid = PeriodicGrid(16)
    u_hat = forward_transform(np.cos(np.pi * grid.nodes), grid)

    expected = np.zeros(16)
    expected[[1, 15]] = 8.0
    assert np.allclose(u_hat, expected, atol=1e-12)


@pytest.mark.parametrize("j", [1, 3, 7])
def test_spectral_second_derivative_is_exact(j):
    grid = PeriodicGrid(32)
    symbol = spectral_symbol(grid)
    u = np.exp(1j * np.pi * j * grid.nodes)

    derivative = inverse_transform(symbol.diagonal * forward_transform(u, grid), grid, real=False)

    assert np.allclose(derivative, -((np.pi * j) ** 2) * u, atol=1e-9)


def test_spectral_second_derivative_2d():
    grid = PeriodicGrid(16, dim=2)
    symbol = spectral_symbol(grid)
    x, y = grid.mesh()
    u = np.cos(np.pi * x) * np.sin(2 * np.pi * y)

    derivative = inverse_transform(symbol.diagonal * forward_transform(u, grid), grid)

    assert np.allclose(derivative, -5 * np.pi**2 * u, atol=1e-9)


def test_inverse_transform_inverts(grid_2d):
    u = np.random.default_rng(3).standard_normal((2, 16, 16))

    assert np.allclose(inverse_transform(forward_transform(u, grid_2d), grid_2d), u)


@pytest.mark.parametrize("rule, kept", [("two-thirds", 9), ("half", 7)])
def test_dealias_mask(rule, kept):
    mask = dealias_mask(PeriodicGrid(12), rule)

    assert mask.sum() == kept
    assert mask[0]
    assert not mask.flags.writeable


def test_dealias_mask_2d():
    mask = dealias_mask(PeriodicGrid(12, dim=2))

    assert mask.shape == (12, 12)
    assert mask.sum() == 81


def test_unknown_dealias_rule():
    with pytest.raises(InvalidGridError):
        dealias_mask(PeriodicGrid(12), "quarter")
