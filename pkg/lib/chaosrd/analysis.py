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
Exact solutions, error measures and the experiments built from them.

An experiment turns a :class:`chaosrd.config.RunConfig` into result
tables: relative L² errors of the mean or the variance over time for
several intrusive or non-intrusive runs, final-time errors over a range
of step counts, relative runtimes, or a plain solution field.
"""

import dataclasses
import logging
import math
import time
from functools import reduce
from typing import Callable, List, Optional, Sequence

import numpy as np

from chaosrd.config import ERROR_SCHEMES, RunConfig
from chaosrd.det_solvers import TimeGrid, solve
from chaosrd.errors import BlowUpError, InvalidArgumentError
from chaosrd.grid_ops import PeriodicGrid
from chaosrd.ipce_solvers import ipce_solve, variance
from chaosrd.legendre_chaos import LegendreBasis, build_tensors, operation_count, reference_rule
from chaosrd.models import ModelSpec, initial_condition, steady_states, turing_condition
from chaosrd.nipce_driver import nipce_run, steps_for_times
from chaosrd.samplers import make_samples

LOGGER = logging.getLogger(__name__)

DISCRETIZATIONS = {
    "ee": "FD_EE",
    "etdrdp": "FD_ETDRDP",
    "etdrdpif": "FD_ETDRDP",
    "etdrk4": "Spectral",
}

# Error level above which a Gray-Scott intrusive curve is reported as broken down
BREAKDOWN_LEVEL = 0.1

# Upper bound on the number of intervals between recorded error points
MAX_OUTPUT_INTERVALS = 1000


def _coordinates(x, dim: int):
    if dim == 1:
        return (np.asarray(x, dtype=float),)
    if len(x) != 2:
        raise InvalidArgumentError("2D evaluation needs a pair of coordinate arrays")
    return tuple(np.asarray(c, dtype=float) for c in x)


def _cosine_profile(x, dim: int):
    return reduce(np.multiply, [np.cos(np.pi * c) for c in _coordinates(x, dim)])


def _uniform_average(rate: float, width: float, t: float) -> float:
    "(1/(width·t)) ∫ e^{-st} ds over [rate, rate + width]"
    return math.exp(-rate * t) * -math.expm1(-width * t) / (width * t)


def exact_mean_linear(x, t: float, a: float, b: float, D: float, dim: int = 1):
    """
    E[u] for u_t = DΔu - Ku, u(x, 0) = Π cos(πx_i), K ~ U[a, b].

    ``x`` is an array in 1D and a pair of arrays in 2D.
    """
    profile = _cosine_profile(x, dim)
    if t == 0:
        return profile
    return profile * _uniform_average(dim * D * np.pi**2 + a, b - a, t)


def exact_variance_linear(x, t: float, a: float, b: float, D: float, dim: int = 1):
    "Var[u] = E[u²] - E[u]² for the linear model"
    if t == 0:
        return np.zeros_like(_cosine_profile(x, dim))
    profile = _cosine_profile(x, dim)
    second = profile**2 * _uniform_average(2 * (dim * D * np.pi**2 + a), 2 * (b - a), t)
    return second - exact_mean_linear(x, t, a, b, D, dim) ** 2


def semidiscrete_eigenvalue(grid: PeriodicGrid) -> float:
    "Eigenvalue -λ_h of the 1D finite difference Laplacian for cos(πx), λ_h returned"
    return 4 / grid.h**2 * math.sin(math.pi * grid.h / 2) ** 2


def semidiscrete_linear_solution(grid: PeriodicGrid, xi: float, t: float, D: float) -> np.ndarray:
    """
    Exact solution of the linear model after finite difference
    discretization in space, free of any spatial error.
    """
    rate = xi + grid.dim * D * semidiscrete_eigenvalue(grid)
    return math.exp(-rate * t) * _cosine_profile(grid.mesh() if grid.dim == 2 else grid.nodes, grid.dim)


def exact_linear_solution(grid: PeriodicGrid, xi: float, t: float, D: float) -> np.ndarray:
    "e^{-(ξ + dim·Dπ²)t} Π cos(πx_i)"
    rate = xi + grid.dim * D * np.pi**2
    return math.exp(-rate * t) * _cosine_profile(grid.mesh() if grid.dim == 2 else grid.nodes, grid.dim)


def closed_form_solution(model: str, xi, u0: np.ndarray, t: float) -> np.ndarray:
    "Pointwise solution of u' = -ξ u^m, valid without diffusion"
    if model == "linear":
        return np.exp(-xi * t) * u0
    if model == "quadratic":
        return u0 / (1 + xi * t * u0)
    if model == "cubic":
        return u0 / np.sqrt(1 + 2 * xi * t * u0**2)

    raise InvalidArgumentError(f"No closed form for model {model!r}")


def rel_l2_error(approx: np.ndarray, reference: np.ndarray) -> Optional[float]:
    """
    ‖approx - reference‖ / ‖reference‖ in the discrete L² norm.

    The uniform quadrature weight h^dim cancels. Returns None if the
    reference vanishes, as the relative error is undefined there.
    """
    if approx.shape != reference.shape:
        raise InvalidArgumentError(f"Cannot compare shapes {approx.shape!r} and {reference.shape!r}")

    norm = float(np.linalg.norm(reference))
    if norm == 0.0:
        return None
    return float(np.linalg.norm(approx - reference)) / norm


@dataclasses.dataclass
class ErrorSeries:
    """
    Relative errors over time for one curve.

    Undefined points are NaN.
    """

    label: str
    times: np.ndarray
    errors: np.ndarray
    metadata: dict = dataclasses.field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.errors = np.asarray(self.errors, dtype=float)
        if self.times.shape != self.errors.shape:
            raise InvalidArgumentError(f"{len(self.times)} times but {len(self.errors)} errors")
        if np.any(np.diff(self.times) <= 0):
            raise InvalidArgumentError("Times must be strictly increasing")
        if np.any(self.errors[~np.isnan(self.errors)] < 0):
            raise InvalidArgumentError("Errors must be nonnegative")

    @property
    def final(self) -> float:  # pylint: disable=missing-function-docstring
        return float(self.errors[-1])


@dataclasses.dataclass(frozen=True, eq=False)
class ReferenceSolution:
    """
    Mean and variance of the first species at the observation times,
    arrays of shape (len(times), *grid).
    """

    kind: str
    times: np.ndarray
    mean: np.ndarray
    variance: np.ndarray
    provenance: dict

    def statistic(self, name: str) -> np.ndarray:  # pylint: disable=missing-function-docstring
        return self.mean if name == "mean" else self.variance


@dataclasses.dataclass
class ResultTable:
    "Columns of one output file, the first column being the abscissa"

    name: str
    header: List[str]
    columns: np.ndarray
    metadata: dict = dataclasses.field(default_factory=dict)


@dataclasses.dataclass
class ExperimentResult:  # pylint: disable=missing-class-docstring
    tables: List[ResultTable]
    series: List[ErrorSeries]
    reference: Optional[ReferenceSolution] = None


def series_table(name: str, series: Sequence[ErrorSeries], metadata: dict) -> ResultTable:
    "Table with the common times followed by one error column per series"
    if not series:
        raise InvalidArgumentError("No error series to tabulate")
    times = series[0].times
    for curve in series[1:]:
        if curve.times.shape != times.shape or np.any(curve.times != times):
            raise InvalidArgumentError(f"Curve {curve.label!r} uses other times")
    columns = np.column_stack([times] + [curve.errors for curve in series])
    return ResultTable(name, ["t"] + [curve.label for curve in series], columns, metadata)


def discretization_label(scheme: str, dim: int) -> str:
    "FD_EE, FD_ETDRDP or Spectral, suffixed with _2D on 2D grids"
    label = DISCRETIZATIONS[scheme]
    return label + "_2D" if dim == 2 else label


def diffusion_label(spec: ModelSpec) -> str:  # pylint: disable=missing-function-docstring
    return f"{spec.D:.5f}"


def ipce_file_name(scheme: str, statistic: str, spec: ModelSpec) -> str:  # pylint: disable=missing-function-docstring
    disc = discretization_label(scheme, spec.dim)
    return f"errorarray_{disc}_{statistic}_system={spec.system_id}_D={diffusion_label(spec)}.txt"


def nipce_file_name(scheme: str, statistic: str, spec: ModelSpec) -> str:  # pylint: disable=missing-function-docstring
    disc = discretization_label(scheme, spec.dim)
    return f"errorarray_{statistic}_Nonintrusive_{disc}_system={spec.system_id}_D={diffusion_label(spec)}.txt"


def output_divisor(step_counts: Sequence[int], dim: int = 1, limit: int = MAX_OUTPUT_INTERVALS) -> int:
    """
    Number of output intervals shared by all time grids.

    2D curves keep every 10th of the common steps. The result is the
    largest divisor of the common step count within these bounds, so the
    output times lie on every grid.
    """
    common = reduce(math.gcd, [int(m) for m in step_counts])
    bound = max(1, min(limit, common // 10 if dim == 2 else common))
    return max(d for d in range(1, bound + 1) if common % d == 0)


def closed_form_statistics(spec: ModelSpec, grid: PeriodicGrid, times: Sequence[float], q: int = 200):
    "Mean and variance of the per-sample closed forms by q-point Gauss quadrature"
    nodes, weights = reference_rule(q)
    xi = LegendreBasis(spec.a, spec.b, 0).from_reference(nodes)
    u0 = initial_condition(spec, grid).u
    expand = (slice(None),) + (None,) * grid.dim
    means, variances = [], []
    for t in times:
        samples = closed_form_solution(spec.kind, xi[expand], u0, t)
        mean = np.tensordot(weights, samples, axes=1)
        means.append(mean)
        variances.append(np.tensordot(weights, (samples - mean) ** 2, axes=1))

    return np.array(means), np.array(variances)


def build_reference(config: RunConfig, spec: ModelSpec, grid: PeriodicGrid, times: np.ndarray) -> ReferenceSolution:
    """
    Reference mean and variance at the given times.

    The linear model has exact formulas, scalar models without
    diffusion have closed forms per sample; everything else is solved
    non-intrusively with ETDRK4 and Gauss quadrature.
    """
    if spec.kind == "linear":
        a, b, D = spec.a, spec.b, spec.D
        coords = grid.mesh() if grid.dim == 2 else grid.nodes
        mean = np.array([exact_mean_linear(coords, t, a, b, D, grid.dim) for t in times])
        var = np.array([exact_variance_linear(coords, t, a, b, D, grid.dim) for t in times])
        return ReferenceSolution("exact-closed-form", times, mean, var, {"formula": "linear"})

    if spec.kind != "grayscott" and spec.D == 0:
        mean, var = closed_form_statistics(spec, grid, times)
        return ReferenceSolution("sampled-closed-form", times, mean, var, {"q": 200})

    if grid.p % 2:
        LOGGER.error("Spectral reference needs an even p, got %i", grid.p)
        raise InvalidArgumentError(f"Spectral reference needs an even p, got {grid.p!r}")
    time_grid = TimeGrid(config.T, config.reference_M)
    samples = make_samples("GQ", config.reference_q, spec.a, spec.b)
    # The mean needs P_0 only, the variance then comes from the second moment.
    degree = config.degree if config.statistic == "variance" else 0
    LOGGER.info("Computing reference with ETDRK4, M=%i, q=%i", config.reference_M, config.reference_q)
    result = nipce_run(
        spec,
        "etdrk4",
        samples,
        degree,
        grid,
        time_grid,
        steps=steps_for_times(time_grid, times),
        species=0,
        workers=config.workers,
        contour_points=config.contour_points,
        dealias=config.dealias,
    )
    mean = result.mean[:, 0]
    if degree:
        var = result.variance[:, 0]
    else:
        var = np.maximum(result.second_moment[:, 0] - mean**2, 0.0)
    provenance = {"scheme": "etdrk4", "M": config.reference_M, "q": config.reference_q, "degree": degree}
    return ReferenceSolution("high-resolution-niPCE-GQ", times, mean, var, provenance)


def _errors(approx: Sequence[np.ndarray], reference: np.ndarray) -> np.ndarray:
    errors = []
    for computed, expected in zip(approx, reference):
        error = rel_l2_error(computed, expected)
        if error is None:
            LOGGER.warning("Reference vanishes, relative error undefined at point %i", len(errors))
            error = np.nan
        errors.append(error)
    return np.array(errors)


class _StatisticRecorder:
    "Observer storing a statistic of the first species every ``stride`` steps"

    def __init__(self, stride: int, statistic: Callable[[np.ndarray], np.ndarray]):
        self._stride = stride
        self._statistic = statistic
        self.frames: List[np.ndarray] = []

    def __call__(self, n: int, t: float, values: np.ndarray) -> None:
        if n % self._stride == 0:
            self.frames.append(np.array(self._statistic(values)))


class ExperimentRunner:
    """Runs the experiment described by a RunConfig"""

    def __init__(self, config: RunConfig):
        self._config = config
        self._spec = ModelSpec.load(config.model_dict())
        self._grid = PeriodicGrid(config.p, config.dim)
        self._logger = logging.getLogger(__name__)

    @property
    def spec(self) -> ModelSpec:  # pylint: disable=missing-function-docstring
        return self._spec

    def _options(self) -> dict:
        return {"contour_points": self._config.contour_points, "dealias": self._config.dealias}

    def _metadata(self, **extra) -> dict:
        return dict(self._config.as_dict(), **extra)

    def run(self) -> ExperimentResult:  # pylint: disable=missing-function-docstring
        command = self._config.command
        self._logger.info("Running %s experiment for the %s model", command, self._spec.kind)
        if command == "ipce":
            return self._ipce_curves()
        if command == "nipce":
            return self._nipce_curves()
        if command == "sweep":
            return self._sweep()
        if command == "runtimes":
            return self._runtimes()
        if command == "grayscott":
            return self._grayscott()
        if command == "det":
            return self._deterministic()

        raise InvalidArgumentError(f"Unknown command {command!r}")

    def _reference_steps(self) -> List[int]:
        if self._spec.kind == "linear" or (self._spec.kind != "grayscott" and self._spec.D == 0):
            return []
        return [self._config.reference_M]

    def _output_times(self, step_counts: Sequence[int]) -> np.ndarray:
        divisor = output_divisor(list(step_counts) + self._reference_steps(), self._grid.dim)
        return TimeGrid(self._config.T, divisor).times

    def ipce_series(self, scheme: str, N: int, M: int, reference: ReferenceSolution) -> ErrorSeries:
        "Error curve of one intrusive run, NaN from a blow-up onwards"
        statistic = _statistic_of_coefficients(self._config.statistic)
        divisor = len(reference.times) - 1
        recorder = _StatisticRecorder(M // divisor, statistic)
        tensors = build_tensors(LegendreBasis(self._spec.a, self._spec.b, N))
        try:
            ipce_solve(
                scheme,
                self._spec,
                tensors,
                self._grid,
                TimeGrid(self._config.T, M),
                recorder,
                cubic_route=self._config.cubic_route,
                **self._options(),
            )
        except BlowUpError as err:
            self._logger.warning("Intrusive run with N=%i blew up at t=%r", N, err.time)

        errors = np.full(len(reference.times), np.nan)
        recorded = len(recorder.frames)
        errors[:recorded] = _errors(recorder.frames, reference.statistic(self._config.statistic)[:recorded])
        return ErrorSeries(f"N={N}", reference.times, errors, {"scheme": scheme, "N": N, "M": M})

    def nipce_series(self, scheme: str, kind: str, M: int, reference: ReferenceSolution) -> ErrorSeries:
        "Error curve of one sampler, Monte Carlo curves averaged over mc_runs seeds"
        config = self._config
        time_grid = TimeGrid(config.T, M)
        steps = steps_for_times(time_grid, reference.times)
        seeds = [config.seed + run for run in range(config.mc_runs)] if kind == "MC" else [config.seed]
        degree = config.degree if config.statistic == "variance" else 0
        curves = []
        for seed in seeds:
            samples = make_samples(kind, config.q, self._spec.a, self._spec.b, seed)
            try:
                result = nipce_run(
                    self._spec, scheme, samples, degree, self._grid, time_grid,
                    steps=steps, workers=config.workers, species=0, **self._options(),
                )
            except BlowUpError as err:
                self._logger.warning("Non-intrusive %s run blew up: %s", kind, err)
                curves.append(np.full(len(steps), np.nan))
                continue
            approx = result.mean[:, 0] if config.statistic == "mean" else result.variance[:, 0]
            curves.append(_errors(approx, reference.statistic(config.statistic)))

        with np.errstate(invalid="ignore"):
            errors = np.mean(curves, axis=0)
        return ErrorSeries(kind, reference.times, errors, {"scheme": scheme, "q": config.q, "M": M})

    def _ipce_curves(self) -> ExperimentResult:
        config = self._config
        times = self._output_times([config.M])
        reference = build_reference(config, self._spec, self._grid, times)
        series = [self.ipce_series(config.scheme, N, config.M, reference) for N in config.N_list]
        _log_final(self._logger, series)
        name = ipce_file_name(config.scheme, config.statistic, self._spec)
        table = series_table(name, series, self._metadata(reference=reference.provenance))
        return ExperimentResult([table], series, reference)

    def _nipce_curves(self) -> ExperimentResult:
        config = self._config
        times = self._output_times([config.M])
        reference = build_reference(config, self._spec, self._grid, times)
        series = [self.nipce_series(config.scheme, kind, config.M, reference) for kind in config.samplers]
        _log_final(self._logger, series)
        name = nipce_file_name(config.scheme, config.statistic, self._spec)
        table = series_table(name, series, self._metadata(reference=reference.provenance))
        return ExperimentResult([table], series, reference)

    def _sweep(self) -> ExperimentResult:
        config = self._config
        times = np.array([0.0, config.T])
        reference = build_reference(config, self._spec, self._grid, times)
        header = ["M"]
        columns = [np.array(config.M_list, dtype=float)]
        series = []
        for scheme in ERROR_SCHEMES[config.dim]:
            intrusive, sampled = [], []
            for M in config.M_list:
                intrusive.append(self.ipce_series(scheme, config.N, M, reference).final)
                sampled.append(self.nipce_series(scheme, "GQ", M, reference).final)
            label = scheme.upper()
            header += [f"iPCE_{label}", f"niPCE_{label}"]
            columns += [np.array(intrusive), np.array(sampled)]
            self._logger.info("Swept %s over M=%s", scheme, config.M_list)
            series.append(ErrorSeries(f"iPCE_{label}", columns[0], intrusive))
            series.append(ErrorSeries(f"niPCE_{label}", columns[0], sampled))

        name = f"Performanceplot_{config.statistic}_system={self._spec.system_id}_D={diffusion_label(self._spec)}.txt"
        table = ResultTable(name, header, np.column_stack(columns), self._metadata(reference=reference.provenance))
        return ExperimentResult([table], series, reference)

    def _runtimes(self) -> ExperimentResult:
        config = self._config
        table = runtime_ratio(
            self._spec, config.scheme, config.N_list, config.repetitions, config.T, config.M, self._grid,
            **self._options(),
        )
        table.metadata = self._metadata()
        return ExperimentResult([table], [])

    def _grayscott(self) -> ExperimentResult:
        spec = self._spec
        k = 0.5 * (spec.a + spec.b)
        states = steady_states(spec.feed, k)
        self._logger.info("Steady states at k=%r: %s", k, states)
        for label, v0 in (("red", states.v_red), ("blue", states.v_blue)):
            if v0 is not None:
                self._logger.info(
                    "Turing condition at the %s state: %s", label, turing_condition(spec.feed, k, v0)
                )

        result = self._ipce_curves()
        for curve in result.series:
            if np.nanmax(curve.errors) > BREAKDOWN_LEVEL or np.isnan(curve.final):
                self._logger.warning("Intrusive Gray-Scott curve %s broke down", curve.label)
        return result

    def _deterministic(self) -> ExperimentResult:
        config = self._config
        xi = config.xi if config.xi is not None else 0.5 * (self._spec.a + self._spec.b)
        time_grid = TimeGrid(config.T, config.M)
        state = solve(config.scheme, self._spec, xi, self._grid, time_grid, **self._options())
        if self._spec.kind == "linear":
            exact = exact_linear_solution(self._grid, xi, config.T, self._spec.D)
            self._logger.info("Relative error against the exact solution: %r", rel_l2_error(state.u, exact))

        mesh = self._grid.mesh()
        header = ["x", "y"][: self._grid.dim] + ["u", "v"][: self._spec.species]
        columns = np.column_stack([c.ravel() for c in mesh] + [field.ravel() for field in state.values])
        disc = discretization_label(config.scheme, self._grid.dim)
        name = f"solution_{disc}_system={self._spec.system_id}_xi={xi:.5f}.txt"
        return ExperimentResult([ResultTable(name, header, columns, self._metadata(xi=xi))], [])


def _statistic_of_coefficients(name: str) -> Callable[[np.ndarray], np.ndarray]:
    if name == "mean":
        return lambda coefficients: coefficients[0, 0]
    return lambda coefficients: variance(coefficients[:, 0])


def _log_final(logger: logging.Logger, series: Sequence[ErrorSeries]) -> None:
    for curve in series:
        logger.info("Final error of %s: %r", curve.label, curve.final)


def run_experiment(config: RunConfig) -> ExperimentResult:
    "Run the experiment a validated config describes"
    return ExperimentRunner(config).run()


def runtime_ratio(
    spec: ModelSpec,
    scheme: str,
    N_list: Sequence[int],
    repetitions: int = 10,
    T: float = 0.1,
    M: int = 10,
    grid: Optional[PeriodicGrid] = None,
    **options,
) -> ResultTable:
    """
    Wall-clock ratios R_N = t_N / t_0 of intrusive runs, averaged over
    the repetitions, next to the contraction operation counts.
    """
    if grid is None:
        grid = PeriodicGrid(128, spec.dim)

    time_grid = TimeGrid(T, M)

    def average_runtime(N: int) -> float:
        tensors = build_tensors(LegendreBasis(spec.a, spec.b, N))
        started = time.perf_counter()
        for _ in range(repetitions):
            ipce_solve(scheme, spec, tensors, grid, time_grid, **options)
        return (time.perf_counter() - started) / repetitions

    baseline = average_runtime(0)
    rows = []
    for N in N_list:
        runtime = baseline if N == 0 else average_runtime(N)
        rows.append((N, runtime / baseline, operation_count(spec.kind, N)))
        LOGGER.info("N=%i: R_N=%.3f, %i operations", N, rows[-1][1], rows[-1][2])

    name = f"runtimearray_{scheme.upper()}.txt"
    return ResultTable(name, ["N", "R_N", "operations"], np.array(rows, dtype=float))
