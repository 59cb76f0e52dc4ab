import logging

import numpy as np
import pytest

from chaosrd.analysis import (
    ErrorSeries,
    ExperimentRunner,
    build_reference,
    closed_form_solution,
    closed_form_statistics,
    discretization_label,
    exact_linear_solution,
    exact_mean_linear,
    exact_variance_linear,
    ipce_file_name,
    nipce_file_name,
    output_divisor,
    rel_l2_error,
    run_experiment,
    runtime_ratio,
    semidiscrete_eigenvalue,
    series_table,
)
from chaosrd.config import resolve
from chaosrd.errors import InvalidArgumentError
from chaosrd.grid_ops import PeriodicGrid
from chaosrd.legendre_chaos import LegendreBasis, reference_rule
from chaosrd.models import ModelSpec


def quadrature_moments(xi_function, q=20, a=1.0, b=2.0):
    nodes, weights = reference_rule(q)
    values = np.array([xi_function(xi) for xi in LegendreBasis(a, b, 0).from_reference(nodes)])
    mean = np.tensordot(weights, values, axes=1)
    return mean, np.tensordot(weights, (values - mean) ** 2, axes=1)


@pytest.mark.parametrize("t", [0.5, 2.0])
def test_exact_moments_match_quadrature(t):
    grid = PeriodicGrid(16)

    mean, var = quadrature_moments(lambda xi: exact_linear_solution(grid, xi, t, 0.1))

    assert np.allclose(exact_mean_linear(grid.nodes, t, 1.0, 2.0, 0.1), mean, atol=1e-13)
    assert np.allclose(exact_variance_linear(grid.nodes, t, 1.0, 2.0, 0.1), var, atol=1e-13)


def test_exact_moments_match_quadrature_2d():
    grid = PeriodicGrid(8, dim=2)

    mean, var = quadrature_moments(lambda xi: exact_linear_solution(grid, xi, 1.0, 0.05))

    assert np.allclose(exact_mean_linear(grid.mesh(), 1.0, 1.0, 2.0, 0.05, dim=2), mean, atol=1e-13)
    assert np.allclose(exact_variance_linear(grid.mesh(), 1.0, 1.0, 2.0, 0.05, dim=2), var, atol=1e-13)


def test_exact_moments_at_start():
    x = np.linspace(-1, 1, 5)

    assert np.allclose(exact_mean_linear(x, 0.0, 1.0, 2.0, 1.0), np.cos(np.pi * x))
    assert np.all(exact_variance_linear(x, 0.0, 1.0, 2.0, 1.0) == 0.0)


def test_2d_evaluation_needs_two_coordinates():
    with pytest.raises(InvalidArgumentError):
        exact_mean_linear((np.zeros(3),), 1.0, 1.0, 2.0, 0.0, dim=2)


def test_semidiscrete_eigenvalue_approaches_continuum():
    coarse = semidiscrete_eigenvalue(PeriodicGrid(16))
    fine = semidiscrete_eigenvalue(PeriodicGrid(256))

    assert coarse < fine < np.pi**2
    assert fine == pytest.approx(np.pi**2, rel=1e-3)


@pytest.mark.parametrize("model", ["linear", "quadratic", "cubic"])
def test_closed_forms_start_at_initial_condition(model):
    u0 = np.linspace(-1, 1, 7)

    assert np.allclose(closed_form_solution(model, 1.5, u0, 0.0), u0)


def test_closed_form_of_quadratic_model():
    u0 = np.array([0.5, -0.5])

    assert np.allclose(closed_form_solution("quadratic", 2.0, u0, 0.4), [0.5 / 1.4, -0.5 / 0.6])


def test_closed_form_needs_scalar_model():
    with pytest.raises(InvalidArgumentError):
        closed_form_solution("grayscott", 1.0, np.zeros(3), 1.0)


def test_closed_form_statistics_of_linear_model():
    spec = ModelSpec.load({"model": "linear"})
    grid = PeriodicGrid(16)

    mean, var = closed_form_statistics(spec, grid, [0.0, 1.0])

    assert mean.shape == var.shape == (2, 16)
    assert np.allclose(mean[1], exact_mean_linear(grid.nodes, 1.0, 1.0, 2.0, 0.0), atol=1e-13)
    assert np.allclose(var[1], exact_variance_linear(grid.nodes, 1.0, 1.0, 2.0, 0.0), atol=1e-13)


def test_rel_l2_error():
    reference = np.array([3.0, 4.0])

    assert rel_l2_error(reference, reference) == 0.0
    assert rel_l2_error(np.array([3.0, 4.5]), reference) == pytest.approx(0.1)
    assert rel_l2_error(np.ones(2), np.zeros(2)) is None
    with pytest.raises(InvalidArgumentError):
        rel_l2_error(np.ones(3), reference)


@pytest.mark.parametrize("times, errors", [
    ([0.0, 1.0], [0.1]),
    ([0.0, 0.0], [0.1, 0.2]),
    ([0.0, 1.0], [0.1, -0.2]),
])
def test_invalid_error_series(times, errors):
    with pytest.raises(InvalidArgumentError):
        ErrorSeries("N=1", times, errors)


def test_error_series_allows_undefined_points():
    series = ErrorSeries("N=1", [0.0, 1.0], [np.nan, 0.5])

    assert series.final == 0.5


def test_series_table():
    series = [ErrorSeries("N=1", [0.0, 1.0], [0.0, 0.2]), ErrorSeries("N=2", [0.0, 1.0], [0.0, 0.1])]

    table = series_table("errors.txt", series, {"model": "linear"})

    assert table.header == ["t", "N=1", "N=2"]
    assert table.columns.shape == (2, 3)
    assert np.all(table.columns[1] == [1.0, 0.2, 0.1])


def test_series_table_checks_times():
    series = [ErrorSeries("N=1", [0.0, 1.0], [0.0, 0.2]), ErrorSeries("N=2", [0.0, 2.0], [0.0, 0.1])]

    with pytest.raises(InvalidArgumentError):
        series_table("errors.txt", series, {})
    with pytest.raises(InvalidArgumentError):
        series_table("errors.txt", [], {})


@pytest.mark.parametrize("scheme, dim, expected", [
    ("ee", 1, "FD_EE"),
    ("etdrdp", 1, "FD_ETDRDP"),
    ("etdrdpif", 2, "FD_ETDRDP_2D"),
    ("etdrk4", 2, "Spectral_2D"),
])
def test_discretization_label(scheme, dim, expected):
    assert discretization_label(scheme, dim) == expected


def test_file_names():
    linear = ModelSpec.load({"model": "linear"})
    linear_2d = ModelSpec.load({"model": "linear", "dim": 2})
    cubic = ModelSpec.load({"model": "cubic", "D": 1.0})

    assert ipce_file_name("ee", "mean", linear) == "errorarray_FD_EE_mean_system=6_D=0.00000.txt"
    assert ipce_file_name("etdrdp", "variance", cubic) == "errorarray_FD_ETDRDP_variance_system=8_D=1.00000.txt"
    assert nipce_file_name("etdrk4", "mean", linear_2d) == (
        "errorarray_mean_Nonintrusive_Spectral_2D_system=6_D=0.00000.txt"
    )


def test_output_divisor():
    assert output_divisor([1000, 200]) == 200
    assert output_divisor([100, 1000, 200]) == 100
    assert output_divisor([7]) == 7


@pytest.mark.parametrize("step_counts, dim, expected", [
    ([1000], 2, 100),
    ([1000, 200], 2, 20),
    ([7], 2, 1),
    ([200000, 200000], 1, 1000),
    ([1500], 1, 750),
])
def test_output_divisor_thins_and_caps(step_counts, dim, expected):
    divisor = output_divisor(step_counts, dim)

    assert divisor == expected
    assert all(M % divisor == 0 for M in step_counts)


@pytest.fixture
def small():
    return {"p": 16, "T": 0.4, "M": 10, "q": 6, "degree": 5, "reference_M": 20, "reference_q": 4}


@pytest.mark.parametrize("raw, kind", [
    ({"model": "linear"}, "exact-closed-form"),
    ({"model": "linear", "D": 1.0}, "exact-closed-form"),
    ({"model": "quadratic"}, "sampled-closed-form"),
    ({"model": "cubic", "D": 0.1}, "high-resolution-niPCE-GQ"),
])
def test_reference_kinds(small, raw, kind):
    config = resolve(dict(small, **raw))
    runner = ExperimentRunner(config)
    grid = PeriodicGrid(16)
    times = np.array([0.0, 0.2, 0.4])

    reference = build_reference(config, runner.spec, grid, times)

    assert reference.kind == kind
    assert reference.mean.shape == reference.variance.shape == (3, 16)
    assert np.allclose(reference.mean[0], np.cos(np.pi * grid.nodes))


def test_spectral_reference_projects_by_statistic(small):
    times = np.array([0.0, 0.2, 0.4])
    references = {}
    for statistic in ("mean", "variance"):
        config = resolve(dict(small, model="cubic", D=0.1, statistic=statistic, degree=3))
        references[statistic] = build_reference(config, ExperimentRunner(config).spec, PeriodicGrid(16), times)

    assert references["mean"].provenance["degree"] == 0
    assert references["variance"].provenance["degree"] == 3
    assert np.allclose(references["mean"].mean, references["variance"].mean, rtol=0, atol=1e-14)
    assert np.all(references["mean"].variance >= 0.0)


def test_spectral_reference_needs_even_grid(small):
    config = resolve(dict(small, model="cubic", D=0.1, scheme="ee", p=15))

    with pytest.raises(InvalidArgumentError):
        build_reference(config, ExperimentRunner(config).spec, PeriodicGrid(15), np.array([0.0, 0.4]))


def test_intrusive_mean_errors():
    config = resolve({"command": "ipce", "model": "linear", "p": 16, "T": 1.0, "M": 20, "N_list": [1, 3]})

    result = run_experiment(config)

    (table,) = result.tables
    assert table.name == "errorarray_Spectral_mean_system=6_D=0.00000.txt"
    assert table.header == ["t", "N=1", "N=3"]
    assert table.columns.shape == (21, 3)
    assert np.all(table.columns[0, 1:] < 1e-12)
    assert result.series[1].final < result.series[0].final
    assert result.reference.kind == "exact-closed-form"


def test_variance_is_undefined_at_start():
    config = resolve({
        "command": "ipce", "model": "linear", "scheme": "etdrdp", "statistic": "variance",
        "p": 16, "T": 1.0, "M": 20, "N_list": [2],
    })

    (curve,) = run_experiment(config).series

    assert np.isnan(curve.errors[0])
    assert np.all(np.isfinite(curve.errors[1:]))


def test_output_times_follow_the_reference_steps():
    config = resolve({
        "command": "ipce", "model": "cubic", "D": 0.1, "p": 16, "T": 0.4, "M": 20, "N_list": [1],
        "reference_M": 10, "reference_q": 4, "degree": 3,
    })

    (table,) = run_experiment(config).tables

    assert np.allclose(table.columns[:, 0], np.linspace(0.0, 0.4, 11))


def test_sampling_errors():
    config = resolve({
        "command": "nipce", "model": "linear", "p": 16, "T": 1.0, "M": 40, "q": 8, "degree": 7,
        "samplers": ["MC", "GQ"], "mc_runs": 2,
    })

    result = run_experiment(config)

    (table,) = result.tables
    assert table.name == "errorarray_mean_Nonintrusive_Spectral_system=6_D=0.00000.txt"
    assert table.header == ["t", "MC", "GQ"]
    mc, gq = result.series
    assert gq.final < 1e-6
    assert gq.final < mc.final


def test_performance_sweep():
    config = resolve({
        "command": "sweep", "model": "quadratic", "D": 0.0, "T": 0.4, "p": 16, "N": 2,
        "M_list": [10, 20], "q": 6, "degree": 5,
    })

    result = run_experiment(config)

    (table,) = result.tables
    assert table.name == "Performanceplot_mean_system=7_D=0.00000.txt"
    assert table.header == ["M", "iPCE_EE", "niPCE_EE", "iPCE_ETDRDP", "niPCE_ETDRDP", "iPCE_ETDRK4", "niPCE_ETDRK4"]
    assert table.columns.shape == (2, 7)
    assert list(table.columns[:, 0]) == [10.0, 20.0]
    assert np.all(np.isfinite(table.columns))
    assert result.reference.kind == "sampled-closed-form"


def test_runtimes():
    config = resolve({
        "command": "runtimes", "model": "cubic", "scheme": "etdrdp", "p": 16, "T": 0.01, "M": 2,
        "N_list": [0, 1], "repetitions": 1,
    })

    (table,) = run_experiment(config).tables

    assert table.name == "runtimearray_ETDRDP.txt"
    assert table.header == ["N", "R_N", "operations"]
    assert list(table.columns[0]) == [0.0, 1.0, 1.0]
    assert list(table.columns[1, [0, 2]]) == [1.0, 8.0]
    assert table.columns[1, 1] > 0


def test_runtime_ratio_defaults_to_a_fine_grid():
    table = runtime_ratio(ModelSpec.load({"model": "linear"}), "etdrk4", [0], repetitions=1, M=1)

    assert table.columns.shape == (1, 3)
    assert table.columns[0, 1] == 1.0


def test_deterministic_solution():
    config = resolve({"command": "det", "model": "linear", "p": 16, "T": 0.5, "M": 10})

    (table,) = run_experiment(config).tables

    assert table.name == "solution_Spectral_system=6_xi=1.50000.txt"
    assert table.header == ["x", "u"]
    assert table.columns.shape == (16, 2)
    exact = exact_linear_solution(PeriodicGrid(16), 1.5, 0.5, 0.0)
    assert np.allclose(table.columns[:, 1], exact, atol=1e-6)


def test_deterministic_grayscott_2d():
    config = resolve({
        "command": "det", "model": "grayscott", "dim": 2, "scheme": "etdrdpif", "p": 16, "T": 1.0, "M": 10,
        "xi": 0.06,
    })

    (table,) = run_experiment(config).tables

    assert table.name == "solution_FD_ETDRDP_2D_system=0_xi=0.06000.txt"
    assert table.header == ["x", "y", "u", "v"]
    assert table.columns.shape == (256, 4)


def test_grayscott_experiment(caplog):
    config = resolve({
        "command": "grayscott", "model": "grayscott", "dim": 2, "p": 16, "T": 1.0, "M": 10,
        "reference_M": 10, "reference_q": 3, "degree": 2, "N_list": [1],
    })

    with caplog.at_level(logging.INFO, logger="chaosrd"):
        result = run_experiment(config)

    (table,) = result.tables
    assert table.name == "errorarray_Spectral_2D_mean_system=0_D=0.00002.txt"
    assert result.reference.kind == "high-resolution-niPCE-GQ"
    (curve,) = result.series
    assert curve.errors[0] < 1e-12
    assert np.all(np.isfinite(curve.errors))
    assert "Steady states" in caplog.text
