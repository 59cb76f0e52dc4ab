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
Intrusive polynomial chaos.

The Galerkin system for the coefficients u_0 ... u_N is stepped with the
deterministic integrators. Its linear part is block diagonal, so every
coefficient field is diffused by the same operator; only the reaction
couples the coefficients.
"""

import dataclasses
import logging
from functools import partial
from typing import Optional

import numpy as np

from chaosrd.det_solvers import Observer, TimeGrid, create_integrator
from chaosrd.errors import InvalidArgumentError
from chaosrd.grid_ops import PeriodicGrid
from chaosrd.legendre_chaos import GalerkinTensors, LegendreBasis
from chaosrd.models import ModelSpec, initial_condition, rhs_ipce

LOGGER = logging.getLogger(__name__)


@dataclasses.dataclass
class PceState:
    "Coefficient fields of shape (N+1, S, *grid) at time t"

    coefficients: np.ndarray
    t: float = 0.0

    @property
    def N(self) -> int:  # pylint: disable=missing-function-docstring
        return self.coefficients.shape[0] - 1

    @property
    def mean(self) -> np.ndarray:
        "E[u] = u_0"
        return self.coefficients[0]

    @property
    def variance(self) -> np.ndarray:
        "Var[u] = Σ_{i≥1} u_i²"
        return variance(self.coefficients)


def mean(coefficients: np.ndarray) -> np.ndarray:
    "Expected value of an expansion in the orthonormal basis"
    return coefficients[0]


def variance(coefficients: np.ndarray) -> np.ndarray:
    "Variance of an expansion in the orthonormal basis"
    return np.sum(coefficients[1:] ** 2, axis=0)


def initial_coefficients(spec: ModelSpec, N: int, grid: PeriodicGrid) -> np.ndarray:
    "u_0 = u_init, all other coefficients zero"
    values = initial_condition(spec, grid).values
    coefficients = np.zeros((N + 1,) + values.shape)
    coefficients[0] = values
    return coefficients


def ipce_solve(
    scheme: str,
    spec: ModelSpec,
    tensors: GalerkinTensors,
    grid: PeriodicGrid,
    time_grid: TimeGrid,
    observer: Optional[Observer] = None,
    cubic_route: str = "tensor",
    **options,
) -> PceState:
    """
    Integrate the Galerkin system with the given scheme.

    The observer receives the coefficient array of shape (N+1, S, *grid).
    """
    basis = tensors.basis
    if (basis.a, basis.b) != (spec.a, spec.b):
        raise InvalidArgumentError(
            f"Tensors on [{basis.a!r}, {basis.b!r}] do not fit the model interval [{spec.a!r}, {spec.b!r}]"
        )

    reaction = partial(rhs_ipce, spec, tensors, cubic_route=cubic_route)
    integrator = create_integrator(scheme, grid, time_grid, spec.diffusion, reaction, **options)
    LOGGER.debug("Intrusive %s run of the %s model with N=%i", scheme, spec.kind, basis.N)
    coefficients = integrator.run(initial_coefficients(spec, basis.N, grid), observer)
    return PceState(coefficients, time_grid.T)


def _checked(basis: LegendreBasis, tensors: GalerkinTensors) -> GalerkinTensors:
    if basis != tensors.basis:
        raise InvalidArgumentError(f"Tensors were built for {tensors.basis!r}, not {basis!r}")
    return tensors


def ipce_ee_solve(spec, basis, tensors, grid, time_grid, observer=None, **options) -> PceState:
    "Block explicit Euler"
    return ipce_solve("ee", spec, _checked(basis, tensors), grid, time_grid, observer, **options)


def ipce_etdrdp_solve(spec, basis, tensors, grid, time_grid, observer=None, **options) -> PceState:
    "Block ETD-RDP, 1D"
    return ipce_solve("etdrdp", spec, _checked(basis, tensors), grid, time_grid, observer, **options)


def ipce_etdrdpif_solve_2d(spec, basis, tensors, grid, time_grid, observer=None, **options) -> PceState:
    "Block ETD-RDP-IF, 2D"
    return ipce_solve("etdrdpif", spec, _checked(basis, tensors), grid, time_grid, observer, **options)


def ipce_etdrk4_solve(spec, basis, tensors, grid, time_grid, observer=None, **options) -> PceState:
    "Block ETDRK4 with per-coefficient transforms"
    return ipce_solve("etdrk4", spec, _checked(basis, tensors), grid, time_grid, observer, **options)
