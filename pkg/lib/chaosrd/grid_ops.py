# -*- encoding: utf-8; py-indent-offset: 4 -*-
#
# chaosrd computes mean and variance of random reaction-diffusion
# equations with intrusive and non-intrusive polynomial chaos.
#
# Copyright (C) 2024 chaosrd contributors

# This program is free software; you can redistribute it and/or
# modify it under the terms of the GNU General Public License
# as published by the Free Software Foundation; either version 2
# of the License, or (at your option) any later version.

# This program is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU General Public License for more details.

# You should have received a copy of the GNU General Public License
# along with this program; if not, write to the Free Software
# Foundation, Inc., 51 Franklin Street, Fifth Floor, Boston, MA  02110-1301, USA.
"""
Periodic grids and the operators living on them.

Fields are numpy arrays whose trailing ``dim`` axes are the spatial
axes of a :class:`PeriodicGrid`. Any leading axes (species, PCE
coefficients) are treated as a batch, so every operator here acts
block-diagonally on stacked fields.
"""

import dataclasses
import logging
import threading
from functools import cache
from typing import Dict, Optional, Tuple

import numpy as np
import scipy.fft
from scipy import sparse
from scipy.sparse.linalg import splu

from chaosrd.errors import InvalidGridError, NumericalFailure, ShapeError

RESIDUAL_TOLERANCE = 1e-12

# Modes with |j| > p / divisor are zeroed before and after every
# nonlinear evaluation of the spectral schemes.
DEALIAS_RULES = {
    "two-thirds": 3,
    "half": 4,
}


@dataclasses.dataclass(frozen=True)
class PeriodicGrid:
    """
    Uniform grid on the periodic domain (-1, 1)^dim.

    The right endpoint is identified with the left one, so a grid with
    ``p`` points per dimension has the nodes x_i = -1 + 2i/p,
    i = 0, ..., p-1, and the spacing h = 2/p.
    """

    p: int
    dim: int = 1

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise InvalidGridError(f"Unsupported grid dimension {self.dim!r}")

        if self.p < 1:
            raise InvalidGridError(f"Invalid number of grid points {self.p!r}")

    @property
    def h(self) -> float:
        "Grid spacing"
        return 2.0 / self.p

    @property
    def nodes(self) -> np.ndarray:
        "Nodes along one dimension"
        return -1.0 + 2.0 * np.arange(self.p) / self.p

    @property
    def shape(self) -> Tuple[int, ...]:  # pylint: disable=missing-function-docstring
        return (self.p,) * self.dim

    @property
    def size(self) -> int:  # pylint: disable=missing-function-docstring
        return self.p**self.dim

    def mesh(self) -> Tuple[np.ndarray, ...]:
        "Coordinate arrays of shape ``self.shape``, one per dimension"
        return tuple(np.meshgrid(*([self.nodes] * self.dim), indexing="ij"))

    def check_field(self, field: np.ndarray) -> None:
        "Raise a ShapeError if the trailing axes of field do not match the grid"
        if field.ndim < self.dim or field.shape[-self.dim:] != self.shape:
            raise ShapeError(
                f"Field of shape {field.shape!r} does not live on a grid of shape {self.shape!r}"
            )


class FdLaplacian:
    """
    Periodic second order finite difference Laplacian.

    ``matrix`` is the operator Δ_h itself with
    (Δ_h u)_i = (u_{i-1} - 2u_i + u_{i+1}) / h² in 1D and the Kronecker
    sum I⊗Δ_h + Δ_h⊗I in 2D. The stiffness matrix A = -Δ_h is positive
    semidefinite; all shifted systems are of the form I + cA.

    Factorizations of shifted systems are cached per shift and axis and
    may be shared between threads.
    """

    def __init__(self, grid: PeriodicGrid, axis_matrix: sparse.csr_matrix):
        self.grid = grid
        self.axis_matrix = axis_matrix.tocsr()

        if grid.dim == 1:
            self.matrix = self.axis_matrix
        else:
            identity = sparse.identity(grid.p, format="csr")
            self.matrix = (
                sparse.kron(identity, self.axis_matrix) + sparse.kron(self.axis_matrix, identity)
            ).tocsr()

        self._factorizations: Dict[Tuple[float, Optional[int]], object] = {}
        self._lock = threading.Lock()
        self._logger = logging.getLogger(__name__)

    @property
    def order(self) -> int:
        "Number of unknowns the operator acts on"
        return self.matrix.shape[0]

    @property
    def stiffness(self) -> sparse.csr_matrix:
        "The positive semidefinite matrix A = -Δ_h"
        return -self.matrix

    def apply(self, field: np.ndarray) -> np.ndarray:
        "Apply Δ_h to every field stacked along the leading axes"
        self.grid.check_field(field)
        return _apply_flat(self.matrix, field, self.grid.dim)

    def apply_axis(self, field: np.ndarray, axis: int) -> np.ndarray:
        "Apply the 1D operator along a single array axis (-1 or -2)"
        self.grid.check_field(field)
        moved = np.moveaxis(field, axis, -1)
        result = _apply_flat(self.axis_matrix, moved, 1)
        return np.moveaxis(result, -1, axis)

    def factorization(self, shift: float, axis: Optional[int] = None):
        """
        Sparse LU factorization of I + shift·A.

        With ``axis`` given only the 1D operator along that axis is
        factorized. Results are cached and reused across time steps.
        """
        key = (float(shift), None if axis is None else int(axis))
        with self._lock:
            try:
                return self._factorizations[key]
            except KeyError:
                pass

            stiffness = -(self.matrix if axis is None else self.axis_matrix)
            system = (sparse.identity(stiffness.shape[0], format="csc") + shift * stiffness).tocsc()
            try:
                lu = splu(system)
            except RuntimeError as err:
                self._logger.error("Factorizing I + %r·A failed: %s", shift, err)
                raise NumericalFailure(f"Shifted system with shift {shift!r} is singular") from err

            self._logger.debug("Factorized I + %r·A (axis %r, order %i)", shift, axis, stiffness.shape[0])
            self._factorizations[key] = lu
            return lu


def _apply_flat(matrix, field: np.ndarray, dim: int) -> np.ndarray:
    "Multiply matrix onto the flattened trailing ``dim`` axes of field"
    batch_shape = field.shape[: field.ndim - dim]
    flat = field.reshape((-1, matrix.shape[0]))
    result = (matrix @ flat.T).T
    return np.asarray(result).reshape(batch_shape + field.shape[field.ndim - dim:])


def build_fd_laplacian(grid: PeriodicGrid) -> FdLaplacian:
    "Build the periodic finite difference Laplacian Δ_h for the grid"
    p = grid.p
    if p < 3:
        raise InvalidGridError(f"The finite difference Laplacian needs p >= 3, got {p!r}")

    ones = np.ones(p)
    axis_matrix = sparse.diags(
        [ones[:1], ones[:-1], -2 * ones, ones[:-1], ones[:1]],
        [-(p - 1), -1, 0, 1, p - 1],
        shape=(p, p),
        format="csr",
    ) / grid.h**2

    return FdLaplacian(grid, axis_matrix)


def solve_shifted(
    op: FdLaplacian, shift: float, rhs: np.ndarray, axis: Optional[int] = None
) -> np.ndarray:
    """
    Solve (I + shift·A) x = rhs with A = -Δ_h.

    All fields stacked along the leading axes of rhs are solved with the
    same cached factorization. With ``axis`` given, only the 1D
    operator along that array axis is inverted, which realizes the
    factors I + shift·(I⊗A_p) (axis -1) and I + shift·(A_p⊗I) (axis -2)
    of the dimensional splitting.
    """
    op.grid.check_field(rhs)
    if shift == 0:
        return np.array(rhs, dtype=float, copy=True)

    lu = op.factorization(shift, axis)
    if axis is None:
        solution = _solve_flat(lu, rhs, op.grid.dim)
        applied = solution - shift * op.apply(solution)
    else:
        moved = np.moveaxis(rhs, axis, -1)
        solution = np.moveaxis(_solve_flat(lu, moved, 1), -1, axis)
        applied = solution - shift * op.apply_axis(solution, axis)

    residual = float(np.linalg.norm(applied - rhs))
    rhs_norm = float(np.linalg.norm(rhs))
    if not np.isfinite(residual) or residual > RESIDUAL_TOLERANCE * rhs_norm:
        raise NumericalFailure(
            f"Shifted solve with shift {shift!r} left residual {residual!r} "
            f"for a right hand side of norm {rhs_norm!r}",
            residual=residual,
        )

    return solution


def _solve_flat(lu, rhs: np.ndarray, dim: int) -> np.ndarray:
    size = lu.shape[0]
    flat = np.ascontiguousarray(rhs.reshape((-1, size)).T, dtype=float)
    return lu.solve(flat).T.reshape(rhs.shape)


@dataclasses.dataclass(frozen=True, eq=False)
class SpectralSymbol:
    """
    Diagonal Fourier representation of the Laplacian.

    ``wavenumbers`` holds the integer wavenumbers per dimension in the
    layout of the forward transform, ``diagonal`` the entries
    -(πj)² (1D) or -(πj₁)² - (πj₂)² (2D).
    """

    grid: PeriodicGrid
    wavenumbers: Tuple[np.ndarray, ...]
    diagonal: np.ndarray


@cache
def _wavenumbers(p: int) -> np.ndarray:
    # Layout of the FFT with the Nyquist mode counted as +p/2.
    j = np.rint(scipy.fft.fftfreq(p, 1.0 / p))
    if p % 2 == 0:
        j[p // 2] = p // 2
    j.setflags(write=False)
    return j


def spectral_symbol(grid: PeriodicGrid) -> SpectralSymbol:
    "Fourier symbol of the Laplacian on the periodic grid (p even)"
    if grid.p % 2:
        raise InvalidGridError(f"Spectral operators need an even p, got {grid.p!r}")

    j = _wavenumbers(grid.p)
    per_axis = -((np.pi * j) ** 2)
    if grid.dim == 1:
        diagonal = per_axis.astype(complex)
    else:
        diagonal = (per_axis[:, None] + per_axis[None, :]).astype(complex)

    return SpectralSymbol(grid, (j,) * grid.dim, diagonal)


@cache
def _phase(grid: PeriodicGrid) -> np.ndarray:
    # e^{-iπ j x_0} with x_0 = -1 turns the FFT kernel into e^{-iπ j x_n}.
    sign = np.where(_wavenumbers(grid.p) % 2 == 0, 1.0, -1.0)
    phase = sign if grid.dim == 1 else np.outer(sign, sign)
    phase.setflags(write=False)
    return phase


def _spatial_axes(grid: PeriodicGrid) -> Tuple[int, ...]:
    return tuple(range(-grid.dim, 0))


def forward_transform(u: np.ndarray, grid: PeriodicGrid) -> np.ndarray:
    """
    Discrete Fourier transform û_j = Σ_n e^{-iπ j x_n} u_n.

    Transforms the trailing spatial axes; leading axes are batched.
    """
    grid.check_field(u)
    return scipy.fft.fftn(u, axes=_spatial_axes(grid)) * _phase(grid)


def inverse_transform(u_hat: np.ndarray, grid: PeriodicGrid, real: bool = True) -> np.ndarray:
    "Inverse of :func:`forward_transform`, real part only unless ``real`` is False"
    grid.check_field(u_hat)
    u = scipy.fft.ifftn(u_hat * _phase(grid), axes=_spatial_axes(grid))
    if real:
        return u.real

    return u


@cache
def dealias_mask(grid: PeriodicGrid, rule: str = "two-thirds") -> np.ndarray:
    """
    Boolean mask of retained Fourier modes.

    The default keeps |j| <= p/3 in every dimension, "half" keeps
    |j| <= p/4 as required for cubic products.
    """
    try:
        divisor = DEALIAS_RULES[rule]
    except KeyError as kerr:
        raise InvalidGridError(f"Unknown dealiasing rule {rule!r}") from kerr

    keep = np.abs(_wavenumbers(grid.p)) <= grid.p / divisor
    mask = keep if grid.dim == 1 else np.outer(keep, keep)
    mask.setflags(write=False)
    return mask
