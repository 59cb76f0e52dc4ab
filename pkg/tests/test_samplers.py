import numpy as np
import pytest

from chaosrd.errors import InvalidArgumentError
from chaosrd.samplers import canonical_kind, make_samples, sampler_registry, star_discrepancy


@pytest.fixture(params=["MC", "QMC-Sobol", "QMC-Halton", "GQ"])
def kind(request):
    yield request.param


def test_registered_kinds():
    assert sampler_registry.kinds() == ["GQ", "MC", "QMC-Halton", "QMC-Sobol"]


@pytest.mark.parametrize("name, expected", [
    ("mc", "MC"),
    ("MC", "MC"),
    ("sobol", "QMC-Sobol"),
    ("qmc", "QMC-Sobol"),
    ("QMC-Halton", "QMC-Halton"),
    ("gq", "GQ"),
])
def test_canonical_kind(name, expected):
    assert canonical_kind(name) == expected


def test_unknown_kind():
    with pytest.raises(InvalidArgumentError):
        make_samples("latin-hypercube", 10, 1.0, 2.0)


def test_samples_lie_in_interval(kind):
    samples = make_samples(kind, 33, 1.0, 2.0, seed=4)

    assert samples.size == 33
    assert np.all(samples.points > 1.0)
    assert np.all(samples.points < 2.0)
    assert samples.weights.sum() == pytest.approx(1.0)
    assert np.allclose(samples.points, 1.5 + 0.5 * samples.reference)


def test_samples_are_read_only(kind):
    samples = make_samples(kind, 4, 1.0, 2.0)

    with pytest.raises(ValueError):
        samples.points[0] = 0.0


@pytest.mark.parametrize("q, a, b", [(0, 1.0, 2.0), (5, 2.0, 1.0), (5, 1.0, 1.0)])
def test_invalid_sample_requests(kind, q, a, b):
    with pytest.raises(InvalidArgumentError):
        make_samples(kind, q, a, b)


def test_monte_carlo_is_reproducible():
    first = make_samples("MC", 20, 1.0, 2.0, seed=7)
    second = make_samples("MC", 20, 1.0, 2.0, seed=7)
    other = make_samples("MC", 20, 1.0, 2.0, seed=8)

    assert np.all(first.points == second.points)
    assert not np.all(first.points == other.points)
    assert np.all(first.weights == 1 / 20)


def radical_inverse(n):
    value, scale = 0.0, 0.5
    while n:
        value += (n & 1) * scale
        n >>= 1
        scale /= 2
    return value


def test_sobol_points_skip_zero():
    samples = make_samples("QMC-Sobol", 3, 0.0, 1.0)

    assert list(samples.points) == [0.5, 0.25, 0.75]


@pytest.mark.parametrize("kind", ["QMC-Sobol", "QMC-Halton"])
@pytest.mark.parametrize("q", [5, 6, 50])
def test_low_discrepancy_points_are_van_der_corput(kind, q):
    samples = make_samples(kind, q, 0.0, 1.0)

    expected = [radical_inverse(n) for n in range(1, q + 1)]
    assert np.allclose(samples.points, expected, rtol=0, atol=1e-15)


def test_halton_points_follow_van_der_corput():
    samples = make_samples("QMC-Halton", 3, 0.0, 1.0)

    assert list(samples.points) == [0.5, 0.25, 0.75]


def test_gauss_samples():
    samples = make_samples("GQ", 2, 1.0, 2.0)

    assert np.allclose(samples.points, [1.5 - 0.5 / np.sqrt(3), 1.5 + 0.5 / np.sqrt(3)])
    assert np.allclose(samples.weights, [0.5, 0.5])


@pytest.mark.parametrize("kind, seed, label", [
    ("MC", 3, "MC q=8 seed=3"),
    ("GQ", 3, "GQ q=8"),
])
def test_describe(kind, seed, label):
    samples = make_samples(kind, 8, 1.0, 2.0, seed=seed)

    assert samples.describe() == label
    assert samples.seed == (seed if kind == "MC" else None)


def test_low_discrepancy_beats_monte_carlo():
    sobol = make_samples("QMC-Sobol", 256, 1.0, 2.0)
    random = make_samples("MC", 256, 1.0, 2.0, seed=0)

    assert star_discrepancy(sobol) < star_discrepancy(random)


def test_sobol_discrepancy_decreases():
    discrepancies = [star_discrepancy(make_samples("QMC-Sobol", q, 1.0, 2.0)) for q in (64, 256, 1024)]

    assert discrepancies[0] > discrepancies[1] > discrepancies[2]


def test_monte_carlo_spread_follows_square_root_rate():
    q = 10_000
    estimates = [make_samples("MC", q, 1.0, 2.0, seed=seed).points.mean() for seed in range(10)]

    expected = 1 / np.sqrt(12 * q)
    assert expected / 3 <= np.std(estimates, ddof=1) <= 3 * expected


@pytest.mark.parametrize("q", [1, 2, 7, 20])
def test_gauss_samples_are_symmetric(q):
    samples = make_samples("GQ", q, 1.0, 2.0)

    assert np.allclose(np.sort(3.0 - samples.points), np.sort(samples.points), rtol=0, atol=1e-14)
    order = np.argsort(samples.points)
    assert np.allclose(samples.weights[order], samples.weights[order][::-1], rtol=0, atol=1e-14)
