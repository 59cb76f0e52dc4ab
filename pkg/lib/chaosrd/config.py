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
Run configuration and the presets of the reference experiments.

A run is described by a flat :class:`RunConfig`. Presets are plain dicts
merged under the explicit options; step counts not given explicitly
are looked up in :data:`STEP_TABLE`.
"""

import dataclasses
import logging
import math
import os
from typing import Dict, List, Tuple

from chaosrd.errors import UsageError
from chaosrd.models import MODEL_KINDS
from chaosrd.samplers import canonical_kind

LOGGER = logging.getLogger(__name__)

COMMANDS = ("det", "ipce", "nipce", "sweep", "runtimes", "grayscott")
SCHEMES = ("ee", "etdrdp", "etdrdpif", "etdrk4")
STATISTICS = ("mean", "variance")
DEALIAS_RULES = ("two-thirds", "half")
CUBIC_ROUTES = ("tensor", "truncated")

OUTPUT_DIR_ENV = "CHAOSRD_OUTPUT_DIR"

# (M for iPCE, M for niPCE, q) per (model, D) and scheme
STEP_TABLE: Dict[Tuple[str, float], Dict[str, Tuple[int, int, int]]] = {
    ("linear", 0.0): {"ee": (1000, 2000, 50), "etdrdp": (200, 200, 50), "etdrk4": (100, 100, 50)},
    ("linear", 1.0): {"ee": (20000, 20000, 50), "etdrdp": (400, 200, 50), "etdrk4": (200, 100, 50)},
    ("quadratic", 0.0): {"ee": (1000, 2000, 50), "etdrdp": (200, 200, 50), "etdrk4": (100, 100, 50)},
    ("quadratic", 1.0): {"ee": (10000, 20000, 50), "etdrdp": (400, 200, 50), "etdrk4": (200, 100, 50)},
    ("cubic", 0.0): {"ee": (1000, 500, 50), "etdrdp": (200, 200, 50), "etdrk4": (100, 100, 50)},
    ("cubic", 1.0): {"ee": (20000, 20000, 50), "etdrdp": (400, 200, 50), "etdrk4": (200, 100, 50)},
    # The cubic exponent of the 1D initial condition makes the reaction stiff early on.
    ("grayscott", 1): {"ee": (200000, 200000, 50), "etdrdp": (200000, 200000, 50), "etdrk4": (200000, 200000, 50)},
    ("grayscott", 2): {"ee": (1000, 1000, 50), "etdrdp": (1000, 1000, 50), "etdrk4": (1000, 1000, 50)},
}

# (M, q) of the non-intrusive ETDRK4 reference solutions
REFERENCE_STEPS = (1000, 200)

DESK_FACTORS = {
    "p": 2,  # p is divided by this, but kept >= 32
    "M": 4,  # M is divided by this, EE is kept stable
    "q": 20,  # cap on the sample counts
    "N": 5,  # cap on the polynomial degrees
    "grayscott_T": 10,  # Gray-Scott T and M are both divided by this
}

ERROR_SCHEMES = {1: ("ee", "etdrdp", "etdrk4"), 2: ("ee", "etdrdpif", "etdrk4")}

PRESETS: Dict[str, dict] = {
    "linear-d0": {"model": "linear", "D": 0.0, "T": 2.0, "p": 128},
    "linear-d1": {"model": "linear", "D": 1.0, "T": 2.0, "p": 128},
    "quadratic-d0": {"model": "quadratic", "D": 0.0, "T": 0.4, "p": 128},
    "quadratic-d1": {"model": "quadratic", "D": 1.0, "T": 2.0, "p": 128},
    "cubic-d0": {"model": "cubic", "D": 0.0, "T": 2.0, "p": 128},
    "cubic-d1": {"model": "cubic", "D": 1.0, "T": 2.0, "p": 128},
    "linear-2d": {"model": "linear", "D": 0.0, "T": 2.0, "p": 64, "dim": 2},
    "variance-d0": {"model": "linear", "D": 0.0, "T": 2.0, "p": 128, "statistic": "variance", "degree": 10},
    "performance": {
        "command": "sweep",
        "model": "quadratic",
        "D": 0.0,
        "T": 0.4,
        "p": 128,
        "N": 5,
        "M_list": [10, 20, 40, 80, 160, 320, 640],
    },
    "runtimes": {
        "command": "runtimes",
        "model": "cubic",
        "D": 0.0,
        "T": 0.1,
        "M": 10,
        "p": 128,
        "N_list": list(range(10)),
        "repetitions": 10,
    },
    "grayscott-1d": {
        "command": "grayscott",
        "model": "grayscott",
        "dim": 1,
        "p": 256,
        "T": 100.0,
        "reference_M": 200000,
        "reference_q": 50,
    },
    "grayscott-2d": {
        "command": "grayscott",
        "model": "grayscott",
        "dim": 2,
        "p": 128,
        "T": 100.0,
        "reference_M": 1000,
        "reference_q": 50,
    },
}

# Cases swept by the performance preset, with their final times
PERFORMANCE_CASES = [
    ("linear", 0.0, 2.0),
    ("linear", 1.0, 2.0),
    ("quadratic", 0.0, 0.4),
    ("quadratic", 1.0, 2.0),
    ("cubic", 0.0, 2.0),
    ("cubic", 1.0, 2.0),
]


@dataclasses.dataclass
class RunConfig:  # pylint: disable=too-many-instance-attributes
    """One experiment, fully resolved"""

    command: str
    model: str
    scheme: str
    D: float
    dim: int
    p: int
    T: float
    M: int
    N_list: List[int]
    N: int
    M_list: List[int]
    samplers: List[str]
    q: int
    degree: int
    interval: Tuple[float, float] | None
    seed: int
    mc_runs: int
    xi: float | None
    statistic: str
    output: str
    contour_points: int
    dealias: str
    cubic_route: str
    reference_M: int
    reference_q: int
    workers: int
    repetitions: int
    desk: bool
    preset: str | None
    gnuplot: bool
    dump_tensors: bool

    @classmethod
    def name(cls) -> str:  # pylint: disable=missing-function-docstring
        return "chaosrd"

    @classmethod
    def load(cls, raw: dict) -> "RunConfig":
        "Fill in defaults for everything not in raw"
        model = raw.get("model", "linear")
        interval = raw.get("interval")
        return cls(
            command=raw.get("command", "ipce"),
            model=model,
            scheme=raw.get("scheme", "etdrk4"),
            D=float(raw.get("D", 0.0)),
            dim=int(raw.get("dim", 1)),
            p=int(raw.get("p", 128)),
            T=float(raw.get("T", 2.0)),
            M=int(raw.get("M", 0)),
            N_list=list(raw.get("N_list", [1, 2, 3, 4, 5])),
            N=int(raw.get("N", 5)),
            M_list=list(raw.get("M_list", [10, 20, 40, 80, 160])),
            samplers=list(raw.get("samplers", ["MC", "QMC-Sobol", "GQ"])),
            q=int(raw.get("q", 0)),
            degree=int(raw.get("degree", 10)),
            interval=None if interval is None else (float(interval[0]), float(interval[1])),
            seed=int(raw.get("seed", 0)),
            mc_runs=int(raw.get("mc_runs", 10)),
            xi=None if raw.get("xi") is None else float(raw["xi"]),
            statistic=raw.get("statistic", "mean"),
            output=raw.get("output") or os.environ.get(OUTPUT_DIR_ENV, "."),
            contour_points=int(raw.get("contour_points", 32)),
            dealias=raw.get("dealias", "two-thirds"),
            cubic_route=raw.get("cubic_route", "tensor"),
            reference_M=int(raw.get("reference_M", REFERENCE_STEPS[0])),
            reference_q=int(raw.get("reference_q", REFERENCE_STEPS[1])),
            workers=int(raw.get("workers", 1)),
            repetitions=int(raw.get("repetitions", 10)),
            desk=bool(raw.get("desk", False)),
            preset=raw.get("preset"),
            gnuplot=bool(raw.get("gnuplot", False)),
            dump_tensors=bool(raw.get("dump_tensors", False)),
        )

    @property
    def model_interval(self) -> Tuple[float, float]:
        "Support of the random parameter"
        if self.interval is not None:
            return self.interval
        return (0.058, 0.062) if self.model == "grayscott" else (1.0, 2.0)

    def model_dict(self) -> dict:
        "Arguments for ModelSpec.load"
        return {"model": self.model, "D": self.D, "dim": self.dim, "interval": self.model_interval}

    def as_dict(self) -> dict:  # pylint: disable=missing-function-docstring
        return dataclasses.asdict(self)

    def validate(self) -> "RunConfig":
        "Raise a UsageError for anything that cannot be run"

        def fail(message: str):
            LOGGER.error(message)
            raise UsageError(message)

        if self.command not in COMMANDS:
            fail(f"Unknown command {self.command!r}")
        if self.model not in MODEL_KINDS:
            fail(f"Unknown model {self.model!r}")
        if self.scheme not in SCHEMES:
            fail(f"Unknown scheme {self.scheme!r}")
        if self.statistic not in STATISTICS:
            fail(f"Unknown statistic {self.statistic!r}")
        if self.dealias not in DEALIAS_RULES:
            fail(f"Unknown dealiasing rule {self.dealias!r}")
        if self.cubic_route not in CUBIC_ROUTES:
            fail(f"Unknown cubic route {self.cubic_route!r}")
        if self.dim not in (1, 2):
            fail(f"Unsupported dimension {self.dim!r}")
        if self.scheme == "etdrdp" and self.dim != 1:
            fail("ETD-RDP needs a 1D grid, use etdrdpif in 2D")
        if self.scheme == "etdrdpif" and self.dim != 2:
            fail("ETD-RDP-IF needs a 2D grid, use etdrdp in 1D")
        if self.scheme == "etdrk4" and self.p % 2:
            fail(f"ETDRK4 needs an even p, got {self.p!r}")
        if self.p < 3:
            fail(f"Invalid number of grid points {self.p!r}")
        if self.T <= 0:
            fail(f"Invalid final time {self.T!r}")
        if self.D < 0:
            fail(f"Invalid diffusion {self.D!r}")
        if self.M < 1 or any(m < 1 for m in self.M_list):
            fail(f"Invalid number of time steps {self.M!r} / {self.M_list!r}")
        if any(later <= earlier for earlier, later in zip(self.M_list, self.M_list[1:])):
            fail(f"Step counts must increase, got {self.M_list!r}")
        if self.q < 1 or self.reference_q < 1 or self.reference_M < 1:
            fail(f"Invalid number of samples {self.q!r}")
        if not self.N_list or any(n < 0 for n in self.N_list) or self.N < 0 or self.degree < 0:
            fail(f"Invalid polynomial degrees {self.N_list!r}, {self.N!r}, {self.degree!r}")
        if self.mc_runs < 1 or self.workers < 1 or self.repetitions < 1:
            fail("mc_runs, workers and repetitions must be positive")
        if self.contour_points < 16:
            fail(f"Contour needs at least 16 points, got {self.contour_points!r}")
        a, b = self.model_interval
        if not b > a:
            fail(f"Invalid interval [{a!r}, {b!r}]")
        if self.xi is not None and not a <= self.xi <= b:
            fail(f"Parameter {self.xi!r} outside of [{a!r}, {b!r}]")
        try:
            self.samplers = [canonical_kind(kind) for kind in self.samplers]
        except ValueError as verr:
            fail(str(verr))

        return self


def table_steps(model: str, D: float, scheme: str, dim: int = 1) -> Tuple[int, int, int]:
    "(M iPCE, M niPCE, q) for a case, falling back to the nearest tabulated D"
    row_scheme = "etdrdp" if scheme == "etdrdpif" else scheme
    if model == "grayscott":
        return STEP_TABLE[("grayscott", dim)][row_scheme]

    diffusions = sorted({d for (m, d) in STEP_TABLE if m == model})
    nearest = min(diffusions, key=lambda d: abs(d - D))
    return STEP_TABLE[(model, nearest)][row_scheme]


def stable_ee_steps(T: float, diffusion: float, p: int, dim: int) -> int:
    "Smallest M keeping explicit Euler stable for the diffusion part, with 10% margin"
    if diffusion <= 0:
        return 1
    h = 2.0 / p
    return math.ceil(1.1 * T * 2 * dim * diffusion / h**2)


def resolve(raw: dict) -> RunConfig:
    """
    Merge a preset under raw, fill in table values and desk scaling.

    Keys in raw win over the preset.
    """
    merged = {}
    preset = raw.get("preset")
    if preset is not None:
        try:
            merged.update(PRESETS[preset])
        except KeyError as kerr:
            raise UsageError(f"Unknown preset {preset!r}") from kerr
    merged.update({key: value for key, value in raw.items() if value is not None})

    config = RunConfig.load(merged)
    if config.model not in MODEL_KINDS or config.scheme not in SCHEMES:
        return config.validate()

    M_ipce, M_nipce, q = table_steps(config.model, config.D, config.scheme, config.dim)
    if "M" not in merged:
        config.M = M_nipce if config.command in ("nipce", "det") else M_ipce
    if "q" not in merged:
        config.q = q

    if config.desk:
        _scale_for_desk(config, merged)

    if config.scheme == "ee" and config.model != "grayscott":
        limit = stable_ee_steps(config.T, config.D, config.p, config.dim)
        if config.M < limit:
            LOGGER.warning("Explicit Euler with M=%i is unstable, needs M >= %i", config.M, limit)

    return config.validate()


def _scale_for_desk(config: RunConfig, merged: dict) -> None:
    config.p = max(32, config.p // DESK_FACTORS["p"])
    config.q = min(config.q, DESK_FACTORS["q"])
    config.reference_q = min(config.reference_q, DESK_FACTORS["q"])
    config.N_list = [n for n in config.N_list if n <= DESK_FACTORS["N"]] or [0]
    config.N = min(config.N, DESK_FACTORS["N"])
    config.degree = min(config.degree, DESK_FACTORS["q"] // 2)
    if config.model == "grayscott":
        factor = DESK_FACTORS["grayscott_T"]
        config.T /= factor
        config.M = max(1, config.M // factor)
        config.reference_M = max(1, config.reference_M // factor)
        return

    factor = DESK_FACTORS["M"]
    if "M" not in merged:
        config.M = max(10, config.M // factor)
    config.reference_M = max(10, config.reference_M // factor)
    if config.scheme == "ee":
        config.M = max(config.M, stable_ee_steps(config.T, config.D, config.p, config.dim))


def expand_preset(name: str, desk: bool = False, **overrides) -> List[RunConfig]:
    "All runs needed for the files of one preset"
    try:
        preset = PRESETS[name]
    except KeyError as kerr:
        raise UsageError(f"Unknown preset {name!r}") from kerr

    command = preset.get("command")
    dim = preset.get("dim", 1)
    schemes = ERROR_SCHEMES[dim]
    base = dict(overrides, preset=name, desk=desk)
    if command == "sweep":
        return [resolve(dict(base, model=model, D=D, T=T)) for model, D, T in PERFORMANCE_CASES]

    if command in ("runtimes", "grayscott"):
        return [resolve(dict(base, scheme=scheme)) for scheme in schemes]

    return [
        resolve(dict(base, command=mode, scheme=scheme))
        for scheme in schemes
        for mode in ("ipce", "nipce")
    ]
