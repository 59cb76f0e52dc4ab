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
Exceptions raised by chaosrd.

Every error derives from the builtin the calling code would expect,
so catching ``ValueError`` or ``RuntimeError`` keeps working.
"""

from typing import Optional


class ChaosError(Exception):
    "Base class of all chaosrd errors"


class InvalidArgumentError(ChaosError, ValueError):
    "An argument is outside of what the operation accepts"


class InvalidGridError(InvalidArgumentError):
    "The grid cannot be used for the requested operator"


class DomainError(InvalidArgumentError):
    "A value lies outside the support of the random parameter"


class ShapeError(InvalidArgumentError):
    "Array shapes do not fit together"


class UsageError(InvalidArgumentError):
    "The command line could not be turned into a valid run"


class NumericalFailure(ChaosError, RuntimeError):
    """
    A numerical procedure failed.

    The residual is kept if the failure was detected through one.
    """

    def __init__(self, message: str, residual: Optional[float] = None):
        super().__init__(message)
        self.residual = residual


class BlowUpError(NumericalFailure):
    """
    The solution of a time integration left the representable range.

    Carries the step and time at which this was detected and, when the
    run belongs to a sample of the random parameter, that parameter.
    """

    def __init__(
        self,
        message: str,
        step: int,
        time: float,
        xi: Optional[float] = None,
    ):
        super().__init__(message)
        self.step = step
        self.time = time
        self.xi = xi

    def with_parameter(self, xi: float) -> "BlowUpError":
        "Copy of this error that names the sampled parameter"
        return BlowUpError(
            f"{self.args[0]} (sample xi={xi!r})", self.step, self.time, xi
        )
