"""Run configuration: a single JSON document, overridable from the command line."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Any, Optional, Union

from ..discretize import INFINITE, Sigma, is_infinite, parse_sigma, sigma_label
from ..errors import UsageError
from ..gc_model import PhaseThresholds

GridSpec = Union[str, int]


@dataclass(frozen=True)
class RunConfig:
    """Parameters shared by all subcommands; each command reads what it needs.

    ``nu``, ``gamma`` and ``sigma`` are lists so that sweeps and single runs use
    one format; ``solve`` and ``spectrum`` require exactly one value each.
    """

    nu: tuple[float, ...] = (30.0,)
    gamma: tuple[float, ...] = (0.0,)
    sigma: tuple[Sigma, ...] = (INFINITE,)
    seed: int = 0
    seeds: int = 1
    grid: GridSpec = "auto"
    N: float = 1e6
    C: float = 1.0
    k: int = 1
    energy_tol: float = 1e-10
    residual_tol: float = 1e-6
    max_iter: int = 5000
    timeout: Optional[float] = None
    jobs: int = 1
    schedule: str = "nu2"
    record_timing: bool = False
    thresholds: PhaseThresholds = field(default_factory=PhaseThresholds)

    def __post_init__(self):
        object.__setattr__(self, "nu", tuple(float(x) for x in _as_list(self.nu)))
        object.__setattr__(self, "gamma", tuple(float(x) for x in _as_list(self.gamma)))
        object.__setattr__(self, "sigma", tuple(parse_sigma(x) for x in _as_list(self.sigma)))
        if isinstance(self.thresholds, dict):
            object.__setattr__(self, "thresholds", PhaseThresholds(**self.thresholds))
        if isinstance(self.grid, str) and self.grid != "auto":
            object.__setattr__(self, "grid", int(self.grid))
        self.validate()

    def validate(self) -> None:
        def bad(msg):
            raise UsageError(f"invalid config: {msg}")

        if not self.nu or not self.gamma or not self.sigma:
            bad("nu, gamma and sigma need at least one value")
        if any(not (math.isfinite(x) and x >= 0) for x in self.nu):
            bad("nu must be finite and >= 0")
        if any(not (math.isfinite(x) and x >= 0) for x in self.gamma):
            bad("gamma must be finite and >= 0")
        if self.seed < 0 or self.seeds < 1:
            bad("seed must be >= 0 and seeds >= 1")
        if self.grid != "auto" and (not isinstance(self.grid, int) or self.grid < 3):
            bad("grid must be 'auto' or an integer >= 3")
        if not self.N >= 1 or not self.C > 0 or self.k < 1:
            bad("need N >= 1, C > 0, k >= 1")
        if not (self.energy_tol > 0 and self.residual_tol > 0 and self.max_iter > 0):
            bad("tolerances and max_iter must be positive")
        if self.timeout is not None and not self.timeout > 0:
            bad("timeout must be positive")
        if self.jobs < 1:
            bad("jobs must be >= 1")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["nu"] = list(self.nu)
        d["gamma"] = list(self.gamma)
        d["sigma"] = [sigma_label(s) if is_infinite(s) else s for s in self.sigma]
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        return cls.from_dict(json.loads(text))

    def merged(self, overrides: dict[str, Any]) -> "RunConfig":
        """Copy with every non-None override applied."""
        changes = {k: v for k, v in overrides.items() if v is not None}
        return replace(self, **changes)

    def single(self) -> tuple[float, float, Sigma]:
        if len(self.nu) != 1 or len(self.gamma) != 1 or len(self.sigma) != 1:
            raise UsageError("this command takes exactly one nu, gamma and sigma")
        return self.nu[0], self.gamma[0], self.sigma[0]


def _as_list(x):
    if isinstance(x, (list, tuple)):
        return x
    return [x]
