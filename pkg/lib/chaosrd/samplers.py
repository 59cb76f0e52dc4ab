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
Points in parameter space for non-intrusive polynomial chaos.
"""

import dataclasses
import logging
from typing import Callable, Dict, Optional, Tuple

import numpy as np
from scipy.stats import qmc

from chaosrd.errors import InvalidArgumentError
from chaosrd.legendre_chaos import reference_rule

LOGGER = logging.getLogger(__name__)

# Accepted spellings, mapped to the canonical kind.
KIND_ALIASES = {
    "mc": "MC",
    "sobol": "QMC-Sobol",
    "qmc-sobol": "QMC-Sobol",
    "qmc": "QMC-Sobol",
    "halton": "QMC-Halton",
    "qmc-halton": "QMC-Halton",
    "gq": "GQ",
}


@dataclasses.dataclass(frozen=True, eq=False)
class SampleSet:
    """
    Sample points ξ_j in [a, b] with weights summing to one.

    ``reference`` holds the same points mapped to [-1, 1]; basis
    polynomials are evaluated there so that arbitrarily narrow
    intervals stay well conditioned.
    """

    kind: str
    a: float
    b: float
    points: np.ndarray
    weights: np.ndarray
    reference: np.ndarray
    seed: Optional[int] = None

    @property
    def size(self) -> int:  # pylint: disable=missing-function-docstring
        return len(self.points)

    def describe(self) -> str:
        "Short label such as 'GQ q=50'"
        if self.kind == "MC":
            return f"MC q={self.size} seed={self.seed}"
        return f"{self.kind} q={self.size}"


class SamplerRegistry:
    "Maps canonical kinds to functions producing reference points and weights"

    def __init__(self):
        self._generators: Dict[str, Callable[[int, Optional[int]], Tuple[np.ndarray, np.ndarray]]] = {}

    def register(self, kind: str):
        "Decorator registering a generator under the given kind"

        def wrapper(generator):
            self._generators[kind] = generator
            return generator

        return wrapper

    def get(self, kind: str):  # pylint: disable=missing-function-docstring
        try:
            return self._generators[kind]
        except KeyError as kerr:
            raise InvalidArgumentError(f"Unknown sampler kind {kind!r}") from kerr

    def kinds(self):  # pylint: disable=missing-function-docstring
        return sorted(self._generators)


sampler_registry = SamplerRegistry()


def _equal_weights(q: int) -> np.ndarray:
    return np.full(q, 1.0 / q)


@sampler_registry.register("MC")
def _monte_carlo(q: int, seed: Optional[int]) -> Tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(0 if seed is None else seed)
    return rng.uniform(-1.0, 1.0, q), _equal_weights(q)


def _van_der_corput(q: int) -> Tuple[np.ndarray, np.ndarray]:
    # Base 2 radical inverse of 1 ... q, the leading point 0 would sit on a.
    engine = qmc.Halton(d=1, scramble=False)
    engine.fast_forward(1)
    unit = engine.random(q)[:, 0]
    return 2.0 * unit - 1.0, _equal_weights(q)


@sampler_registry.register("QMC-Sobol")
def _sobol(q: int, seed: Optional[int]) -> Tuple[np.ndarray, np.ndarray]:
    # In one dimension the Sobol sequence is the van der Corput sequence,
    # scipy's Sobol engine only differs by its Gray code order.
    return _van_der_corput(q)


@sampler_registry.register("QMC-Halton")
def _halton(q: int, seed: Optional[int]) -> Tuple[np.ndarray, np.ndarray]:
    return _van_der_corput(q)


@sampler_registry.register("GQ")
def _gauss(q: int, seed: Optional[int]) -> Tuple[np.ndarray, np.ndarray]:
    nodes, weights = reference_rule(q)
    return nodes.copy(), weights.copy()


def canonical_kind(kind: str) -> str:
    "Canonical sampler kind for a user supplied name"
    if kind in sampler_registry.kinds():
        return kind

    try:
        return KIND_ALIASES[kind.lower()]
    except KeyError as kerr:
        raise InvalidArgumentError(f"Unknown sampler kind {kind!r}") from kerr


def make_samples(kind: str, q: int, a: float, b: float, seed: Optional[int] = None) -> SampleSet:
    """
    Create q sample points of the given kind on [a, b].

    MC draws i.i.d. uniform points from a generator seeded with ``seed``;
    QMC-Sobol and QMC-Halton use the unscrambled one dimensional
    sequences without their leading zero; GQ uses Gauss-Legendre nodes.
    """
    kind = canonical_kind(kind)
    if q < 1:
        raise InvalidArgumentError(f"Invalid number of samples {q!r}")

    if not b > a:
        raise InvalidArgumentError(f"Invalid interval [{a!r}, {b!r}]")

    reference, weights = sampler_registry.get(kind)(q, seed)
    points = 0.5 * (a + b) + 0.5 * (b - a) * reference
    for array in (points, weights, reference):
        array.setflags(write=False)

    LOGGER.debug("Created %i %s samples on [%r, %r]", q, kind, a, b)
    return SampleSet(kind, a, b, points, weights, reference, seed if kind == "MC" else None)


def star_discrepancy(samples: SampleSet) -> float:
    "L2-star discrepancy of the points scaled to the unit interval"
    unit = (0.5 * (samples.reference + 1.0))[:, None]
    return float(qmc.discrepancy(unit, method="L2-star"))
