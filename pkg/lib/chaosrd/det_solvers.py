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
Time integrators for u_t = DΔu + F(u) on periodic grids.

Four schemes are available, registered under their ids:

  ee        explicit Euler with the finite difference Laplacian
  etdrdp    second order exponential time differencing with real distinct
            poles, 1D finite differences
  etdrdpif  the same with dimensional splitting and an integrating factor,
            2D finite differences
  etdrk4    fourth order exponential Runge-Kutta in Fourier space

The integrators only see arrays of shape (..., S, *grid) and a reaction
function, so the same classes step deterministic states (S, *grid) and
stacked chaos coefficients (N+1, S, *grid).
"""

import dataclasses
import logging
from abc import ABC, abstractmethod
from functools import cache, partial
from typing import Callable, Dict, Optional, Sequence, Tuple, Type

import numpy as np

from chaosrd.errors import BlowUpError, InvalidArgumentError
from chaosrd.grid_ops import (
    FdLaplacian,
    PeriodicGrid,
    SpectralSymbol,
    build_fd_laplacian,
    dealias_mask,
    forward_transform,
    inverse_transform,
    solve_shifted,
    spectral_symbol,
)
from chaosrd.models import FieldState, ModelSpec, initial_condition, rhs_det

BLOW_UP_THRESHOLD = 1e12
DEFAULT_CONTOUR_POINTS = 32

Observer = Callable[[int, float, np.ndarray], None]
Reaction = Callable[[np.ndarray], np.ndarray]


@dataclasses.dataclass(frozen=True)
class TimeGrid:
    "M uniform steps of size k = T/M"

    T: float
    M: int

    def __post_init__(self):
        if self.M < 1:
            raise InvalidArgumentError(f"Invalid number of time steps {self.M!r}")

        if not self.T > 0:
            raise InvalidArgumentError(f"Invalid final time {self.T!r}")

    @property
    def k(self) -> float:  # pylint: disable=missing-function-docstring
        return self.T / self.M

    def time(self, n: int) -> float:
        "Time after n steps, exactly T for n = M"
        if n == self.M:
            return self.T
        return n * self.k

    @property
    def times(self) -> np.ndarray:  # pylint: disable=missing-function-docstring
        times = np.arange(self.M + 1) * self.k
        times[-1] = self.T
        return times


@dataclasses.dataclass(frozen=True, eq=False)
class EtdCoefficients:
    """
    Mode-wise coefficients of the fourth order exponential Runge-Kutta step.

    ``E`` = e^{Lh}, ``E2`` = e^{Lh/2}, ``Q`` = L⁻¹(e^{Lh/2} - 1) and the
    three update weights f1, f2, f3. ``max_imaginary`` is the largest
    imaginary part dropped after the contour averages.
    """

    E: np.ndarray
    E2: np.ndarray
    Q: np.ndarray
    f1: np.ndarray
    f2: np.ndarray
    f3: np.ndarray
    max_imaginary: float


def build_etd_coefficients(
    symbol: SpectralSymbol,
    h: float,
    contour_points: int = DEFAULT_CONTOUR_POINTS,
    diffusion: Sequence[float] = (1.0,),
) -> EtdCoefficients:
    """
    Evaluate the coefficients by averaging over a circle of radius one
    around every h·D·L_jj.

    The circle nodes are the roots of unity rotated by half a spacing, so
    no node coincides with the removable singularity at zero. The result
    carries a leading axis over the diffusion coefficients.
    """
    if contour_points < 16:
        raise InvalidArgumentError(f"Contour needs at least 16 points, got {contour_points!r}")

    diffusion = np.asarray(diffusion, dtype=float)
    shape = (len(diffusion),) + (1,) * symbol.diagonal.ndim
    Lh = h * diffusion.reshape(shape) * symbol.diagonal.real

    roots = np.exp(2j * np.pi * (np.arange(1, contour_points + 1) - 0.5) / contour_points)
    z = Lh[..., None] + roots
    ez = np.exp(z)
    averages = {
        "Q": np.mean((np.exp(z / 2) - 1) / z, axis=-1),
        "f1": np.mean((-4 - z + ez * (4 - 3 * z + z**2)) / z**3, axis=-1),
        "f2": np.mean((2 + z + ez * (z - 2)) / z**3, axis=-1),
        "f3": np.mean((-4 - 3 * z - z**2 + ez * (4 - z)) / z**3, axis=-1),
    }
    max_imaginary = max(float(np.max(np.abs(value.imag))) for value in averages.values())
    real = {name: h * value.real for name, value in averages.items()}

    return EtdCoefficients(
        E=np.exp(Lh),
        E2=np.exp(Lh / 2),
        max_imaginary=h * max_imaginary,
        **real,
    )


@cache
def _laplacian(grid: PeriodicGrid) -> FdLaplacian:
    # Shared so cached factorizations survive across samples.
    return build_fd_laplacian(grid)


@cache
def _coefficients(grid: PeriodicGrid, k: float, diffusion: Tuple[float, ...], contour_points: int) -> EtdCoefficients:
    return build_etd_coefficients(spectral_symbol(grid), k, contour_points, diffusion)


class SchemeRegistry:
    "Collects the integrator classes by scheme id"

    def __init__(self):
        self._schemes: Dict[str, Type["Integrator"]] = {}

    def register(self, cls):
        "Class decorator, registers under ``cls.name()``"
        self._schemes[cls.name()] = cls
        return cls

    def get(self, name: str) -> Type["Integrator"]:  # pylint: disable=missing-function-docstring
        try:
            return self._schemes[name]
        except KeyError as kerr:
            raise InvalidArgumentError(f"Unknown scheme {name!r}") from kerr

    def names(self):  # pylint: disable=missing-function-docstring
        return sorted(self._schemes)


scheme_registry = SchemeRegistry()


class Integrator(ABC):
    """
    Fixed step integrator for states of shape (..., S, *grid).

    ``diffusion`` holds one coefficient per species S, ``reaction`` maps
    a state to the reaction part of its time derivative.
    """

    dims: Tuple[int, ...] = (1, 2)

    def __init__(
        self,
        grid: PeriodicGrid,
        time_grid: TimeGrid,
        diffusion: Sequence[float],
        reaction: Reaction,
        dealias: str = "two-thirds",
        contour_points: int = DEFAULT_CONTOUR_POINTS,
    ):
        if grid.dim not in self.dims:
            raise InvalidArgumentError(
                f"Scheme {self.name()!r} does not support {grid.dim}D grids"
            )

        self._grid = grid
        self._time_grid = time_grid
        self._diffusion = tuple(float(d) for d in diffusion)
        self._reaction = reaction
        self._dealias = dealias
        self._contour_points = contour_points
        self._logger = logging.getLogger(__name__)

    @classmethod
    @abstractmethod
    def name(cls) -> str:
        "Scheme id"

    @abstractmethod
    def step(self, state: np.ndarray) -> np.ndarray:
        "Advance the internal state by one step"

    def to_internal(self, values: np.ndarray) -> np.ndarray:
        "Representation the scheme steps in"
        return np.array(values, dtype=float, copy=True)

    def to_physical(self, state: np.ndarray) -> np.ndarray:
        "Grid values of an internal state"
        return state

    def magnitude(self, state: np.ndarray) -> float:
        "Bound on the largest grid value of an internal state"
        return float(np.max(np.abs(state)))

    @property
    def _diffusion_array(self) -> np.ndarray:
        return np.asarray(self._diffusion).reshape((-1,) + (1,) * self._grid.dim)

    def _check(self, state: np.ndarray, n: int) -> None:
        magnitude = self.magnitude(state)
        if not np.isfinite(magnitude) or magnitude > BLOW_UP_THRESHOLD:
            time = self._time_grid.time(n)
            self._logger.error("Solution blew up at step %i (t=%r)", n, time)
            raise BlowUpError(f"Solution blew up at step {n} (t={time!r})", n, time)

    def _notify(self, observer: Optional[Observer], n: int, state: np.ndarray) -> None:
        if observer is None:
            return
        view = self.to_physical(state).view()
        view.flags.writeable = False
        observer(n, self._time_grid.time(n), view)

    def run(self, initial: np.ndarray, observer: Optional[Observer] = None) -> np.ndarray:
        """
        Integrate from the initial values up to T.

        The observer is called M+1 times with (step, time, read-only values).
        """
        self._grid.check_field(initial)
        self._logger.debug(
            "Running %s with M=%i, k=%r on %r", self.name(), self._time_grid.M, self._time_grid.k, self._grid
        )
        state = self.to_internal(initial)
        self._notify(observer, 0, state)
        for n in range(1, self._time_grid.M + 1):
            state = self.step(state)
            self._check(state, n)
            self._notify(observer, n, state)

        return self.to_physical(state)


class FiniteDifferenceIntegrator(Integrator):  # pylint: disable=abstract-method
    "Base of the schemes working with the periodic finite difference Laplacian"

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self._laplacian = _laplacian(self._grid)

    def _shifted(self, fraction: float, values: np.ndarray, axis: Optional[int] = None) -> np.ndarray:
        "Apply (I + fraction·k·D_s·A)⁻¹ species by species"
        result = np.empty_like(values)
        for s, diffusion in enumerate(self._diffusion):
            index = (Ellipsis, s) + (slice(None),) * self._grid.dim
            shift = fraction * self._time_grid.k * diffusion
            result[index] = solve_shifted(self._laplacian, shift, values[index], axis)

        return result


@scheme_registry.register
class ExplicitEuler(FiniteDifferenceIntegrator):
    "u⁺ = u + k(DΔ_h u + F(u))"

    @classmethod
    def name(cls) -> str:  # pylint: disable=missing-function-docstring
        return "ee"

    def step(self, state: np.ndarray) -> np.ndarray:
        diffusion = self._diffusion_array * self._laplacian.apply(state)
        return state + self._time_grid.k * (diffusion + self._reaction(state))


@scheme_registry.register
class EtdRdp(FiniteDifferenceIntegrator):
    """
    Exponential time differencing with the real distinct pole
    approximation 9(I + k/3·DA)⁻¹ - 8(I + k/4·DA)⁻¹ of e^{-kDA}.
    """

    dims = (1,)

    @classmethod
    def name(cls) -> str:  # pylint: disable=missing-function-docstring
        return "etdrdp"

    def step(self, state: np.ndarray) -> np.ndarray:
        k = self._time_grid.k
        current = self._reaction(state)
        predicted = self._reaction(self._shifted(1.0, state + k * current))
        return self._shifted(1 / 3, 9 * state + 2 * k * current + k * predicted) - self._shifted(
            1 / 4, 8 * state + 1.5 * k * current + 0.5 * k * predicted
        )


@scheme_registry.register
class EtdRdpIf(FiniteDifferenceIntegrator):
    """
    Two dimensional variant with dimensional splitting.

    A₁ = I⊗A_p acts along the last array axis, A₂ = A_p⊗I along the one
    before. A₁ is treated through the integrating factor, A₂ by the real
    distinct pole step.
    """

    dims = (2,)

    @classmethod
    def name(cls) -> str:  # pylint: disable=missing-function-docstring
        return "etdrdpif"

    def _rational_first(self, values: np.ndarray) -> np.ndarray:
        return 9 * self._shifted(1 / 3, values, -1) - 8 * self._shifted(1 / 4, values, -1)

    def step(self, state: np.ndarray) -> np.ndarray:
        k = self._time_grid.k
        current = self._reaction(state)
        predicted = self._reaction(self._shifted(1.0, self._shifted(1.0, state + k * current, -1), -2))
        third = self._rational_first(9 * state + 2 * k * current) + k * predicted
        quarter = self._rational_first(8 * state + 1.5 * k * current) + 0.5 * k * predicted
        return self._shifted(1 / 3, third, -2) - self._shifted(1 / 4, quarter, -2)


@scheme_registry.register
class Etdrk4(Integrator):
    """
    Fourth order exponential Runge-Kutta in Fourier space.

    Every evaluation of the reaction is dealiased before the inverse and
    after the forward transform.
    """

    @classmethod
    def name(cls) -> str:  # pylint: disable=missing-function-docstring
        return "etdrk4"

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self._mask = dealias_mask(self._grid, self._dealias)
        self._coefficients = _coefficients(
            self._grid, self._time_grid.k, self._diffusion, self._contour_points
        )

    def to_internal(self, values: np.ndarray) -> np.ndarray:
        return forward_transform(np.asarray(values, dtype=float), self._grid)

    def to_physical(self, state: np.ndarray) -> np.ndarray:
        return inverse_transform(state, self._grid)

    def magnitude(self, state: np.ndarray) -> float:
        # |u_n| <= Σ_j |û_j| / size for every grid value
        spatial = tuple(range(-self._grid.dim, 0))
        return float(np.max(np.sum(np.abs(state), axis=spatial))) / self._grid.size

    def _nonlinear(self, state: np.ndarray) -> np.ndarray:
        values = inverse_transform(self._mask * state, self._grid)
        return self._mask * forward_transform(self._reaction(values), self._grid)

    def step(self, state: np.ndarray) -> np.ndarray:
        c = self._coefficients
        current = self._nonlinear(state)
        a = c.E2 * state + c.Q * current
        at_a = self._nonlinear(a)
        b = c.E2 * state + c.Q * at_a
        at_b = self._nonlinear(b)
        stage = c.E2 * a + c.Q * (2 * at_b - current)
        at_c = self._nonlinear(stage)
        return c.E * state + c.f1 * current + 2 * c.f2 * (at_a + at_b) + c.f3 * at_c


def create_integrator(
    scheme: str,
    grid: PeriodicGrid,
    time_grid: TimeGrid,
    diffusion: Sequence[float],
    reaction: Reaction,
    **options,
) -> Integrator:
    "Instantiate the integrator registered under ``scheme``"
    return scheme_registry.get(scheme)(grid, time_grid, diffusion, reaction, **options)


def solve(
    scheme: str,
    spec: ModelSpec,
    xi: float,
    grid: PeriodicGrid,
    time_grid: TimeGrid,
    observer: Optional[Observer] = None,
    **options,
) -> FieldState:
    """
    Integrate the model for a single value ξ of the random parameter.

    Blow-ups are re-raised naming ξ.
    """
    integrator = create_integrator(
        scheme, grid, time_grid, spec.diffusion, partial(rhs_det, spec, xi), **options
    )
    try:
        values = integrator.run(initial_condition(spec, grid).values, observer)
    except BlowUpError as err:
        raise err.with_parameter(xi) from err

    return FieldState(values, time_grid.T)


def ee_solve(spec, xi, grid, time_grid, observer=None, **options) -> FieldState:
    "Explicit Euler with the finite difference Laplacian"
    return solve("ee", spec, xi, grid, time_grid, observer, **options)


def etdrdp_solve(spec, xi, grid, time_grid, observer=None, **options) -> FieldState:
    "ETD-RDP on a 1D grid"
    return solve("etdrdp", spec, xi, grid, time_grid, observer, **options)


def etdrdpif_solve_2d(spec, xi, grid, time_grid, observer=None, **options) -> FieldState:
    "ETD-RDP-IF on a 2D grid"
    return solve("etdrdpif", spec, xi, grid, time_grid, observer, **options)


def etdrk4_solve(spec, xi, grid, time_grid, observer=None, **options) -> FieldState:
    "Spectral ETDRK4, p even"
    return solve("etdrk4", spec, xi, grid, time_grid, observer, **options)
