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
Non-intrusive polynomial chaos.

A deterministic solver is run once per sample point and the snapshots
are projected onto the Legendre basis,

    u_i(x, t) ≈ Σ_j w_j u(x, t, ξ_j) P_i(ξ_j).
"""

import dataclasses
import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from itertools import zip_longest
from typing import Callable, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from chaosrd.det_solvers import Observer, TimeGrid, scheme_registry, solve
from chaosrd.errors import BlowUpError, InvalidArgumentError
from chaosrd.grid_ops import PeriodicGrid
from chaosrd.legendre_chaos import eval_reference
from chaosrd.models import ModelSpec
from chaosrd.samplers import SampleSet

BlackBox = Callable[[float, Observer], object]


@dataclasses.dataclass(frozen=True, eq=False)
class ProjectionResult:
    """
    Projected coefficients of shape (N'+1, len(times), S, *grid).

    ``second_moment`` is Σ_j w_j u(ξ_j)², accumulated alongside.
    """

    times: np.ndarray
    steps: Tuple[int, ...]
    coefficients: np.ndarray
    second_moment: np.ndarray
    sample_count: int
    kind: str

    @property
    def degree(self) -> int:  # pylint: disable=missing-function-docstring
        return self.coefficients.shape[0] - 1

    @property
    def mean(self) -> np.ndarray:
        "E[u] = u_0 at every observation time"
        return self.coefficients[0]

    @property
    def variance(self) -> np.ndarray:
        "Σ_{i=1}^{N'} u_i² at every observation time"
        return np.sum(self.coefficients[1:] ** 2, axis=0)


class DeterministicBlackBox:
    "Runs a registered deterministic scheme for one parameter value"

    def __init__(self, scheme: str, spec: ModelSpec, grid: PeriodicGrid, time_grid: TimeGrid, **options):
        scheme_registry.get(scheme)
        self.scheme = scheme
        self._spec = spec
        self._grid = grid
        self._time_grid = time_grid
        self._options = options
        self._lock = threading.Lock()
        self.runs = 0

    def __call__(self, xi: float, observer: Observer):
        with self._lock:
            self.runs += 1
        return solve(self.scheme, self._spec, xi, self._grid, self._time_grid, observer, **self._options)


def default_steps(time_grid: TimeGrid, dim: int) -> Tuple[int, ...]:
    "Every step in 1D, every 10th step and the last one in 2D"
    if dim == 1:
        return tuple(range(time_grid.M + 1))

    steps = list(range(0, time_grid.M + 1, 10))
    if steps[-1] != time_grid.M:
        steps.append(time_grid.M)
    return tuple(steps)


def steps_for_times(time_grid: TimeGrid, times: Sequence[float]) -> Tuple[int, ...]:
    "Step indices of observation times, which must lie on the time grid"
    steps = []
    for time in times:
        n = int(round(time / time_grid.k))
        if not 0 <= n <= time_grid.M or not np.isclose(time_grid.time(n), time, rtol=0, atol=1e-12):
            raise InvalidArgumentError(f"Observation time {time!r} is not on the time grid")
        steps.append(n)

    return tuple(steps)


def _chunks(iterable, size: int) -> Iterator[List]:
    args = [iter(iterable)] * size
    for chunk in zip_longest(*args):
        yield [item for item in chunk if item is not None]


class _SnapshotRecorder:
    "Observer keeping copies of the values at selected steps, optionally of one species"

    def __init__(self, steps: Sequence[int], species: Optional[int] = None):
        self._wanted = set(steps)
        self._steps = steps
        self._species = slice(None) if species is None else slice(species, species + 1)
        self._frames = {}

    def __call__(self, n: int, t: float, values: np.ndarray) -> None:
        if n in self._wanted:
            self._frames[n] = np.array(values[self._species])

    def stacked(self) -> np.ndarray:  # pylint: disable=missing-function-docstring
        try:
            return np.stack([self._frames[n] for n in self._steps])
        except KeyError as kerr:
            raise InvalidArgumentError(f"Black box never reported step {kerr.args[0]!r}") from kerr


def project_samples(samples: SampleSet, values: np.ndarray, degree: int) -> np.ndarray:
    """
    Project sample values of shape (q, ...) onto P_0 ... P_degree.

    Samples are accumulated in their given order.
    """
    if values.shape[0] != samples.size:
        raise InvalidArgumentError(f"Expected {samples.size} sample values, got {values.shape[0]}")

    weighted = samples.weights * eval_reference(degree, samples.reference)
    coefficients = np.zeros((degree + 1,) + values.shape[1:])
    for j in range(samples.size):
        coefficients += np.multiply.outer(weighted[:, j], values[j])

    return coefficients


def nipce_run(
    spec: ModelSpec,
    scheme: str,
    samples: SampleSet,
    degree: int,
    grid: PeriodicGrid,
    time_grid: TimeGrid,
    steps: Optional[Sequence[int]] = None,
    workers: int = 1,
    black_box: Optional[BlackBox] = None,
    species: Optional[int] = None,
    **options,
) -> ProjectionResult:
    """
    Run the deterministic solver for every sample and project.

    Each sample is solved exactly once, independent of ``degree``. With
    ``species`` set only that species is kept, its axis keeps length one.
    With several workers the samples are solved concurrently but summed
    in sample order, so results do not depend on ``workers``.
    """
    logger = logging.getLogger(__name__)
    if degree < 0:
        raise InvalidArgumentError(f"Invalid projection degree {degree!r}")

    if (samples.a, samples.b) != (spec.a, spec.b):
        raise InvalidArgumentError(
            f"Samples on [{samples.a!r}, {samples.b!r}] do not fit the model interval [{spec.a!r}, {spec.b!r}]"
        )

    if black_box is None:
        black_box = DeterministicBlackBox(scheme, spec, grid, time_grid, **options)

    if steps is None:
        steps = default_steps(time_grid, grid.dim)
    steps = tuple(steps)

    if degree + 1 > samples.size:
        logger.warning("Projecting onto %i polynomials with only %i samples", degree + 1, samples.size)

    weighted = samples.weights * eval_reference(degree, samples.reference)

    def sample(j: int) -> np.ndarray:
        recorder = _SnapshotRecorder(steps, species)
        xi = float(samples.points[j])
        try:
            black_box(xi, recorder)
        except BlowUpError as err:
            if err.xi is None:
                raise err.with_parameter(xi) from err
            raise
        return recorder.stacked()

    logger.info("Solving %i %s samples with %s", samples.size, samples.kind, scheme)
    coefficients = None
    second_moment = None
    with ThreadPoolExecutor(max_workers=max(1, workers)) as executor:
        for chunk in _chunks(range(samples.size), max(1, workers) * 2):
            for j, snapshots in zip(chunk, executor.map(sample, chunk)):
                if coefficients is None:
                    coefficients = np.zeros((degree + 1,) + snapshots.shape)
                    second_moment = np.zeros(snapshots.shape)
                coefficients += np.multiply.outer(weighted[:, j], snapshots)
                second_moment += samples.weights[j] * snapshots**2

    logger.debug("Projected onto %i polynomials at %i times", degree + 1, len(steps))
    times = np.array([time_grid.time(n) for n in steps])
    return ProjectionResult(times, steps, coefficients, second_moment, samples.size, samples.kind)
