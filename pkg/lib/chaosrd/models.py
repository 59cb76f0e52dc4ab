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
The equations: u_t = DΔu - K u^m for m = 1, 2, 3 and the Gray-Scott system

    u_t = D_u Δu - u v² + F (1 - u)
    v_t = D_v Δv + u v² - (F + k) v

with K respectively k uniformly distributed.

States are arrays of shape (S, *grid) with S = 1 for the scalar models
and S = 2 (u, v) for Gray-Scott. Intrusive states carry an additional
leading axis over the N+1 chaos coefficients.
"""

import dataclasses
import logging
from typing import NamedTuple, Optional, Tuple

import numpy as np
from scipy.special import gamma

from chaosrd.errors import InvalidArgumentError
from chaosrd.grid_ops import PeriodicGrid
from chaosrd.legendre_chaos import (
    GalerkinTensors,
    linearization_table,
    multiply_by_parameter,
    truncated_cube,
)

LOGGER = logging.getLogger(__name__)

SCALAR_MODELS = {
    "linear": 1,
    "quadratic": 2,
    "cubic": 3,
}

MODEL_KINDS = tuple(SCALAR_MODELS) + ("grayscott",)

# Identifiers used in the names of the output files
SYSTEM_IDS = {
    "linear": 6,
    "quadratic": 7,
    "cubic": 8,
    "grayscott": 0,
}

CUBIC_ROUTES = ("tensor", "truncated")


@dataclasses.dataclass(frozen=True)
class ModelSpec:
    """
    Equation and distribution of its random coefficient.

    ``diffusion`` holds one coefficient per species. [a, b] is the
    support of K for the scalar models and of k for Gray-Scott.
    """

    kind: str
    diffusion: Tuple[float, ...]
    a: float
    b: float
    dim: int = 1
    feed: float = 0.04
    center: float = 0.0
    square_exponent: bool = False

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise InvalidArgumentError(f"Unknown model {self.kind!r}")

        if not self.b > self.a:
            raise InvalidArgumentError(f"Invalid interval [{self.a!r}, {self.b!r}]")

        if len(self.diffusion) != self.species or any(d < 0 for d in self.diffusion):
            raise InvalidArgumentError(f"Invalid diffusion {self.diffusion!r} for model {self.kind!r}")

        if self.dim not in (1, 2):
            raise InvalidArgumentError(f"Unsupported dimension {self.dim!r}")

        if self.kind == "grayscott" and self.feed <= 0:
            raise InvalidArgumentError(f"Invalid feed rate {self.feed!r}")

    @classmethod
    def load(cls, cfg: dict) -> "ModelSpec":
        "Build a spec from a plain dict, filling in the defaults of the model"
        kind = cfg.get("model", "linear")
        if kind == "grayscott":
            diffusion = tuple(cfg.get("diffusion", (2e-5, 1e-5)))
            a, b = cfg.get("interval", (0.058, 0.062))
        else:
            diffusion = (float(cfg.get("D", 0.0)),)
            a, b = cfg.get("interval", (1.0, 2.0))

        return cls(
            kind=kind,
            diffusion=diffusion,
            a=float(a),
            b=float(b),
            dim=int(cfg.get("dim", 1)),
            feed=float(cfg.get("feed", 0.04)),
            center=float(cfg.get("center", 0.0)),
            square_exponent=bool(cfg.get("square_exponent", False)),
        )

    @property
    def species(self) -> int:
        "Number of unknown fields"
        return 2 if self.kind == "grayscott" else 1

    @property
    def system_id(self) -> int:  # pylint: disable=missing-function-docstring
        return SYSTEM_IDS[self.kind]

    @property
    def D(self) -> float:
        "Diffusion of the first species"
        return self.diffusion[0]

    def with_interval(self, a: float, b: float) -> "ModelSpec":
        "Same model with another parameter interval"
        return dataclasses.replace(self, a=a, b=b)


@dataclasses.dataclass
class FieldState:
    "Values of shape (S, *grid) at time t"

    values: np.ndarray
    t: float = 0.0

    @property
    def u(self) -> np.ndarray:  # pylint: disable=missing-function-docstring
        return self.values[0]

    @property
    def v(self) -> np.ndarray:
        "Second species, Gray-Scott only"
        if self.values.shape[0] < 2:
            raise InvalidArgumentError("State has a single species")
        return self.values[1]


def initial_condition(spec: ModelSpec, grid: PeriodicGrid) -> FieldState:
    "Initial state of the model on the grid"
    if grid.dim != spec.dim:
        raise InvalidArgumentError(
            f"Model is set up for dimension {spec.dim!r}, grid has dimension {grid.dim!r}"
        )

    mesh = grid.mesh()
    if spec.kind != "grayscott":
        u = np.prod([np.cos(np.pi * x) for x in mesh], axis=0)
        return FieldState(u[None].copy())

    if grid.dim == 1:
        shifted = mesh[0] - spec.center
        exponent = shifted**2 if spec.square_exponent else shifted**3
        u = 1 - 5 / (3 * np.sqrt(2 * np.pi)) * np.exp(-6 * shifted**2)
        v = 0.37 * 7.5 / (2 * np.sqrt(2) * gamma(1 / 3)) * np.exp(-7 * exponent / np.sqrt(2))
    else:
        x, y = mesh
        v = np.zeros(grid.shape)
        for cx in (-2 / 7, 2 / 7):
            for cy in (-2 / 7, 2 / 7):
                v += np.exp(-150 * ((x - cx) ** 2 + (y - cy) ** 2))
        v /= 4
        u = 1 - v

    return FieldState(np.stack([u, v]))


def rhs_det(spec: ModelSpec, xi: float, values: np.ndarray) -> np.ndarray:
    """
    Reaction part of the right hand side for the parameter value ξ.

    Diffusion is left to the solvers.
    """
    if spec.kind == "grayscott":
        u, v = values[0], values[1]
        reaction = u * v**2
        return np.stack([-reaction + spec.feed * (1 - u), reaction - (spec.feed + xi) * v])

    return -xi * values ** SCALAR_MODELS[spec.kind]


def rhs_ipce(
    spec: ModelSpec,
    tensors: GalerkinTensors,
    coefficients: np.ndarray,
    cubic_route: str = "tensor",
) -> np.ndarray:
    """
    Galerkin projection of the reaction part.

    ``coefficients`` has shape (N+1, S, *grid); the result has the same
    shape. With ``cubic_route="truncated"`` the cube is formed by the
    degree-N truncated product formula before the projection.
    """
    tensors.check_coefficients(coefficients)
    if spec.kind == "linear":
        return -tensors.linear(coefficients)

    if spec.kind == "quadratic":
        return -tensors.quadratic(coefficients)

    if spec.kind == "cubic":
        if cubic_route == "tensor":
            return -tensors.cubic(coefficients)

        if cubic_route == "truncated":
            cube = truncated_cube(linearization_table(tensors.basis.N), coefficients)
            return -multiply_by_parameter(tensors.basis, cube)[: tensors.size]

        raise InvalidArgumentError(f"Unknown cubic route {cubic_route!r}")

    u, v = coefficients[:, 0], coefficients[:, 1]
    reaction = tensors.mixed(u, v)
    feed = -spec.feed * u
    feed[0] += spec.feed
    return np.stack([-reaction + feed, reaction - spec.feed * v - tensors.linear(v)], axis=1)


class SteadyStates(NamedTuple):
    v_red: float
    v_blue: Optional[float]
    v_one: Optional[float]
    d: float


def steady_states(feed: float, kill: float, alpha: Optional[float] = None) -> SteadyStates:
    """
    Homogeneous steady states of Gray-Scott in terms of v.

    d = 1 - 4(F+k)²/F decides whether the two nontrivial states exist.
    ``alpha`` scales them and defaults to F/(F+k), which makes
    (u, v) = (½(1∓√d), ½α(1±√d)) the fixed points of the reaction.
    """
    if feed <= 0:
        raise InvalidArgumentError(f"Invalid feed rate {feed!r}")

    d = 1 - 4 * (feed + kill) ** 2 / feed
    if d <= 0:
        return SteadyStates(0.0, None, None, d)

    if alpha is None:
        alpha = feed / (feed + kill)

    root = np.sqrt(d)
    return SteadyStates(0.0, 0.5 * alpha * (1 + root), 0.5 * alpha * (1 - root), d)


def turing_condition(feed: float, kill: float, v0: float) -> bool:
    "Necessary condition for Turing instability around the state with v = v0"
    left = (2 * (feed + kill) - (v0**2 + feed)) ** 2
    right = 8 * (feed + kill) * (v0**2 - feed)
    return bool(left > right)
