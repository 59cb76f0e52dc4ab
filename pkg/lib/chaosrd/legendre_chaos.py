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
Orthonormal Legendre chaos for a parameter uniformly distributed on [a, b].

The basis polynomials are P_n(x) = √(2n+1) L_n(z) with L_n the classical
Legendre polynomials and z = (2x - a - b) / (b - a) the reference
coordinate, so that E[P_i P_j] = δ_ij for the uniform density.

Besides the basis this module provides Gauss-Legendre quadrature in
the probability convention (weights sum to one), the Galerkin tensors
used by the intrusive solvers and the product linearization of
Legendre polynomials.
"""

import csv
import dataclasses
import logging
from functools import cache, cached_property
from typing import List, NamedTuple, TextIO, Tuple

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.special import factorial, poch

from chaosrd.errors import DomainError, InvalidArgumentError, ShapeError

LOGGER = logging.getLogger(__name__)


class QuadratureRule(NamedTuple):
    nodes: np.ndarray
    weights: np.ndarray


def recurrence_coefficients(count: int) -> np.ndarray:
    "β_1 ... β_count of z P_n = β_{n+1} P_{n+1} + β_n P_{n-1}"
    n = np.arange(1, count + 1, dtype=float)
    return n / np.sqrt(4 * n**2 - 1)


@dataclasses.dataclass(frozen=True)
class LegendreBasis:
    """
    Orthonormal Legendre polynomials P_0 ... P_N supported on [a, b]
    """

    a: float
    b: float
    N: int

    def __post_init__(self):
        if not self.b > self.a:
            raise InvalidArgumentError(f"Invalid interval [{self.a!r}, {self.b!r}]")

        if self.N < 0:
            raise InvalidArgumentError(f"Invalid maximal degree {self.N!r}")

    @property
    def size(self) -> int:
        "Number of basis polynomials"
        return self.N + 1

    @property
    def midpoint(self) -> float:  # pylint: disable=missing-function-docstring
        return 0.5 * (self.a + self.b)

    @property
    def half_width(self) -> float:  # pylint: disable=missing-function-docstring
        return 0.5 * (self.b - self.a)

    def to_reference(self, x):
        "Map parameter values to [-1, 1]"
        return (2 * np.asarray(x, dtype=float) - self.a - self.b) / (self.b - self.a)

    def from_reference(self, z):
        "Map reference values back to [a, b]"
        return self.midpoint + self.half_width * np.asarray(z, dtype=float)


def eval_reference(N: int, z) -> np.ndarray:
    """
    Evaluate P_0 ... P_N at reference points z in [-1, 1].

    Returns an array of shape (N+1,) + shape(z).
    """
    z = np.asarray(z, dtype=float)
    values = np.empty((N + 1,) + z.shape)
    values[0] = 1.0
    if N == 0:
        return values

    beta = recurrence_coefficients(N)
    values[1] = z / beta[0]
    for n in range(1, N):
        values[n + 1] = (z * values[n] - beta[n - 1] * values[n - 1]) / beta[n]

    return values


def eval_basis(basis: LegendreBasis, x) -> np.ndarray:
    "Values P_0(x) ... P_N(x) for parameter values x in [a, b]"
    x = np.asarray(x, dtype=float)
    slack = 4 * np.finfo(float).eps * max(1.0, abs(basis.a), abs(basis.b))
    if np.any(x < basis.a - slack) or np.any(x > basis.b + slack):
        LOGGER.error("Basis evaluated outside of [%r, %r]", basis.a, basis.b)
        raise DomainError(f"Value {x!r} outside of [{basis.a!r}, {basis.b!r}]")

    return eval_reference(basis.N, np.clip(basis.to_reference(x), -1.0, 1.0))


@cache
def reference_rule(q: int) -> QuadratureRule:
    """
    Gauss-Legendre rule with q nodes on [-1, 1] in the probability
    convention.

    Nodes are the eigenvalues of the Jacobi matrix (Golub-Welsch), the
    weights follow from the Christoffel function. The rule is made
    exactly symmetric about zero.
    """
    if q < 1:
        raise InvalidArgumentError(f"Invalid number of quadrature nodes {q!r}")

    if q == 1:
        nodes, weights = np.zeros(1), np.ones(1)
    else:
        nodes = eigh_tridiagonal(np.zeros(q), recurrence_coefficients(q - 1), eigvals_only=True)
        nodes = np.sort(nodes)
        weights = 1.0 / np.sum(eval_reference(q - 1, nodes) ** 2, axis=0)
        nodes = 0.5 * (nodes - nodes[::-1])
        weights = 0.5 * (weights + weights[::-1])
        weights /= weights.sum()

    nodes.setflags(write=False)
    weights.setflags(write=False)
    return QuadratureRule(nodes, weights)


def gauss_legendre(q: int, a: float, b: float) -> QuadratureRule:
    "Gauss-Legendre nodes on [a, b] with weights summing to one"
    if not b > a:
        raise InvalidArgumentError(f"Invalid interval [{a!r}, {b!r}]")

    nodes, weights = reference_rule(q)
    return QuadratureRule(0.5 * (a + b) + 0.5 * (b - a) * nodes, weights.copy())


@dataclasses.dataclass(frozen=True, eq=False)
class GalerkinTensors:
    """
    Expectations of products of basis polynomials.

    K2[i, η] = E[ξ P_i P_η], K3[i, j, η] = E[ξ P_i P_j P_η] and
    K4[i, j, k, η] = E[ξ P_i P_j P_k P_η]; E4 is K4 without the factor ξ.
    Instances are read-only and may be shared between threads.
    """

    basis: LegendreBasis
    K2: np.ndarray
    K3: np.ndarray
    K4: np.ndarray
    E4: np.ndarray

    @property
    def size(self) -> int:  # pylint: disable=missing-function-docstring
        return self.basis.size

    @cached_property
    def _quadratic_terms(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        i, j = np.triu_indices(self.size)
        multiplicity = np.where(i == j, 1.0, 2.0)
        return i, j, multiplicity[:, None] * self.K3[i, j, :]

    @cached_property
    def _cubic_terms(self) -> Tuple[np.ndarray, ...]:
        i, j, k = _sorted_triples(self.size)
        return i, j, k, _multiplicities(i, j, k)[:, None] * self.K4[i, j, k, :]

    @cached_property
    def _mixed_terms(self) -> Tuple[np.ndarray, ...]:
        n = self.size
        j, k = np.triu_indices(n)
        i = np.repeat(np.arange(n), len(j))
        j, k = np.tile(j, n), np.tile(k, n)
        multiplicity = np.where(j == k, 1.0, 2.0)
        return i, j, k, multiplicity[:, None] * self.E4[i, j, k, :]

    def check_coefficients(self, u: np.ndarray) -> None:
        "Raise a ShapeError unless u holds one field per basis polynomial"
        if u.ndim < 1 or u.shape[0] != self.size:
            raise ShapeError(
                f"Expected {self.size} coefficient fields, got an array of shape {u.shape!r}"
            )

    def linear(self, u: np.ndarray) -> np.ndarray:
        "Σ_i K2[i, η] u_i"
        self.check_coefficients(u)
        return np.tensordot(self.K2.T, u, axes=1)

    def quadratic(self, u: np.ndarray) -> np.ndarray:
        "Σ_{i,j} K3[i, j, η] u_i u_j, summed over i <= j"
        self.check_coefficients(u)
        i, j, weights = self._quadratic_terms
        return np.tensordot(weights.T, u[i] * u[j], axes=1)

    def cubic(self, u: np.ndarray) -> np.ndarray:
        "Σ_{i,j,k} K4[i, j, k, η] u_i u_j u_k, summed over i <= j <= k"
        self.check_coefficients(u)
        i, j, k, weights = self._cubic_terms
        return np.tensordot(weights.T, u[i] * u[j] * u[k], axes=1)

    def mixed(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        "Σ_{i,j,k} E4[i, j, k, η] u_i v_j v_k, summed over j <= k"
        self.check_coefficients(u)
        self.check_coefficients(v)
        i, j, k, weights = self._mixed_terms
        return np.tensordot(weights.T, u[i] * v[j] * v[k], axes=1)


def _sorted_triples(n: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    triples = [(i, j, k) for i in range(n) for j in range(i, n) for k in range(j, n)]
    i, j, k = np.array(triples, dtype=int).T
    return i, j, k


def _multiplicities(i: np.ndarray, j: np.ndarray, k: np.ndarray) -> np.ndarray:
    distinct = 1 + (i != j).astype(int) + (j != k).astype(int)
    # 1 distinct index: 1 ordering, 2: 3 orderings, 3: 6 orderings
    return np.choose(distinct - 1, [1.0, 3.0, 6.0])


def build_tensors(basis: LegendreBasis) -> GalerkinTensors:
    """
    Compute the Galerkin tensors with a 2N+2 point Gauss rule.

    The integrands are polynomials of degree at most 4N+1, which the rule
    integrates exactly.
    """
    nodes, weights = reference_rule(2 * basis.N + 2)
    values = eval_reference(basis.N, nodes)
    weighted = weights * basis.from_reference(nodes)

    K2 = np.einsum("q,iq,jq->ij", weighted, values, values)
    K3 = np.einsum("q,iq,jq,kq->ijk", weighted, values, values, values)
    K4 = np.einsum("q,iq,jq,kq,lq->ijkl", weighted, values, values, values, values)
    E4 = np.einsum("q,iq,jq,kq,lq->ijkl", weights, values, values, values, values)
    for tensor in (K2, K3, K4, E4):
        tensor.setflags(write=False)

    LOGGER.debug("Built Galerkin tensors for N=%i on [%r, %r]", basis.N, basis.a, basis.b)
    return GalerkinTensors(basis, K2, K3, K4, E4)


def write_tensor_csv(tensors: GalerkinTensors, stream: TextIO) -> int:
    "Write K4 as rows i,j,k,eta,value and return the number of rows"
    writer = csv.writer(stream)
    writer.writerow(["i", "j", "k", "eta", "value"])
    rows = 0
    for index in np.ndindex(tensors.K4.shape):
        writer.writerow(list(index) + [repr(float(tensors.K4[index]))])
        rows += 1

    return rows


def _pochhammer_ratio(r: int) -> float:
    "A_r = (1/2)_r / r!"
    return float(poch(0.5, r) / factorial(r, exact=True))


def product_coefficient(alpha: int, beta: int, p: int) -> float:
    """
    Coefficient C(α, β, p) of the product formula

        P_α P_β = Σ_{p=0}^{min(α, β)} C(α, β, p) P_{α+β-2p}

    for the orthonormal polynomials.
    """
    if not 0 <= p <= min(alpha, beta):
        raise InvalidArgumentError(f"Invalid product index p={p!r} for ({alpha!r}, {beta!r})")

    total = alpha + beta
    degree = total - 2 * p
    classical = (
        _pochhammer_ratio(p) * _pochhammer_ratio(alpha - p) * _pochhammer_ratio(beta - p)
        / _pochhammer_ratio(total - p)
        * (2 * total - 4 * p + 1) / (2 * total - 2 * p + 1)
    )
    return classical * np.sqrt((2 * alpha + 1) * (2 * beta + 1) / (2 * degree + 1))


def linearize_product(first: np.ndarray, second: np.ndarray) -> np.ndarray:
    """
    Coefficients of the product of two Legendre expansions.

    Both arguments hold coefficients along axis 0 (fields may follow);
    the result has len(first) + len(second) - 1 coefficients and is
    exact, no truncation takes place.
    """
    first = np.asarray(first, dtype=float)
    second = np.asarray(second, dtype=float)
    field_shape = np.broadcast_shapes(first.shape[1:], second.shape[1:])
    result = np.zeros((first.shape[0] + second.shape[0] - 1,) + field_shape)
    for alpha in range(first.shape[0]):
        for beta in range(second.shape[0]):
            product = first[alpha] * second[beta]
            for p in range(min(alpha, beta) + 1):
                result[alpha + beta - 2 * p] += product_coefficient(alpha, beta, p) * product

    return result


def multiply_by_parameter(basis: LegendreBasis, coefficients: np.ndarray) -> np.ndarray:
    """
    Coefficients of ξ·f for f = Σ_m c_m P_m.

    Uses ξ = mid + half·z and z P_m = β_{m+1} P_{m+1} + β_m P_{m-1};
    the result has one coefficient more than the input.
    """
    coefficients = np.asarray(coefficients, dtype=float)
    count = coefficients.shape[0]
    beta = recurrence_coefficients(count)
    result = np.zeros((count + 1,) + coefficients.shape[1:])
    result[:count] += basis.midpoint * coefficients
    for m in range(count):
        result[m + 1] += basis.half_width * beta[m] * coefficients[m]
        if m > 0:
            result[m - 1] += basis.half_width * beta[m - 1] * coefficients[m]

    return result


@dataclasses.dataclass(frozen=True, eq=False)
class LinearizationTable:
    """
    Flattened summands of the truncated cube of an expansion of degree N.

    Each entry contributes weight·u_a·u_b·u_c to the coefficient of P_eta.
    The cube is assembled for every η separately, and for a given η only
    the entries listed here are nonzero, so the total number of summands
    is (N+1) times the number of entries.
    """

    N: int
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    eta: np.ndarray
    weight: np.ndarray

    @property
    def summand_count(self) -> int:
        "Total number of summands Ñ over all η"
        return (self.N + 1) * len(self.weight)

    @property
    def nonzero_count(self) -> int:
        "Number of summands that hit their η"
        return int(np.count_nonzero(self.weight))

    @cached_property
    def scatter(self) -> np.ndarray:
        "Dense (N+1) x entries matrix that adds every summand to its η"
        matrix = np.zeros((self.N + 1, len(self.weight)))
        matrix[self.eta, np.arange(len(self.weight))] = self.weight
        return matrix


@cache
def linearization_table(N: int) -> LinearizationTable:
    "Enumerate the summands of the product formula applied twice, up to degree N"
    if N < 0:
        raise InvalidArgumentError(f"Invalid maximal degree {N!r}")

    entries: List[Tuple[int, int, int, int, float]] = []
    for ell in range(N + 1):
        for m in range(ell + 1):
            for j in range(m + 1):
                for p in range(min(j, m - j) + 1):
                    inner = product_coefficient(j, m - j, p)
                    for n in range(min(ell - m, m - 2 * p) + 1):
                        outer = product_coefficient(ell - m, m - 2 * p, n)
                        entries.append((ell - m, j, m - j, ell - 2 * p - 2 * n, inner * outer))

    a, b, c, eta = (np.array([entry[pos] for entry in entries], dtype=int) for pos in range(4))
    weight = np.array([entry[4] for entry in entries])
    LOGGER.debug("Linearization table for N=%i has %i entries", N, len(entries))
    return LinearizationTable(N, a, b, c, eta, weight)


def truncated_cube(table: LinearizationTable, u: np.ndarray) -> np.ndarray:
    """
    Degree-N truncation of the cube of Σ u_i P_i.

    Only products whose total degree does not exceed N enter, so the
    result differs from the projection of the exact cube.
    """
    if u.shape[0] != table.N + 1:
        raise ShapeError(f"Expected {table.N + 1} coefficient fields, got {u.shape[0]}")

    products = u[table.a] * u[table.b] * u[table.c]
    return np.tensordot(table.scatter, products, axes=1)


def operation_count(model: str, N: int) -> int:
    """
    Number of coefficient products per step of the intrusive right hand side

    The cubic count is the number of summands of the linearized cube.
    """
    size = N + 1
    if model == "linear":
        return size**2
    if model == "quadratic":
        return size**3
    if model == "cubic":
        return linearization_table(N).summand_count
    if model == "grayscott":
        return size**4 + size**2

    raise InvalidArgumentError(f"Unknown model {model!r}")
