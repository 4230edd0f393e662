"""Poisson obstacle configurations on the unit interval.

Random numbers come from the ``philox-exp-v1`` stream: a numpy ``Philox``
(4x64, 10 rounds) bit generator keyed directly with the 64-bit seed, counter
starting at zero. Each raw 64-bit word ``w`` becomes a uniform
``u = ((w >> 11) + 0.5) * 2**-53`` in (0, 1) and an exponential gap
``-log(u) / nu``. Only the raw Philox stream is used, so samples do not depend
on numpy's distribution algorithms and stay reproducible across versions.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, UsageError

RNG_NAME = "philox-exp-v1"
MERGE_DISTANCE = 1e-9

_U64_MASK = (1 << 64) - 1


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class DisorderSample:
    """One realization of the obstacle positions.

    ``multiplicity`` counts raw Poisson points merged into each position
    (points closer than ``MERGE_DISTANCE`` collapse into one obstacle).
    """

    seed: int
    nu: float
    positions: np.ndarray
    multiplicity: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        pos = np.array(self.positions, dtype=float).ravel()
        if self.multiplicity is None:
            mult = np.ones(pos.size, dtype=np.int64)
        else:
            mult = np.array(self.multiplicity, dtype=np.int64).ravel()
        if mult.size != pos.size:
            raise UsageError("multiplicity must match positions")
        if pos.size:
            if not (np.all(pos > 0.0) and np.all(pos < 1.0)):
                raise DomainError("obstacle positions must lie in (0, 1)")
            if np.any(np.diff(pos) <= 0.0):
                raise DomainError("obstacle positions must be strictly increasing")
        object.__setattr__(self, "positions", _readonly(pos))
        object.__setattr__(self, "multiplicity", _readonly(mult))

    @property
    def count(self) -> int:
        """Number of (merged) obstacles m_omega."""
        return int(self.positions.size)

    @property
    def lengths(self) -> np.ndarray:
        """Gap lengths, boundary gaps included; ``count + 1`` entries summing to 1."""
        edges = np.concatenate(([0.0], self.positions, [1.0]))
        return np.diff(edges)

    @property
    def edges(self) -> np.ndarray:
        return np.concatenate(([0.0], self.positions, [1.0]))

    def to_json(self) -> str:
        raw = np.repeat(self.positions, self.multiplicity)
        return json.dumps({"rng": RNG_NAME, "seed": int(self.seed), "nu": float(self.nu),
                           "positions": [float(z) for z in raw]})

    @classmethod
    def from_json(cls, text: str) -> "DisorderSample":
        d = json.loads(text)
        pos, mult = _merge(np.sort(np.asarray(d["positions"], dtype=float)))
        return cls(seed=int(d["seed"]), nu=float(d["nu"]), positions=pos,
                   multiplicity=mult)

    @classmethod
    def from_positions(cls, positions: Sequence[float], seed: int = 0,
                       nu: float = float("nan")) -> "DisorderSample":
        pos, mult = _merge(np.sort(np.asarray(positions, dtype=float)))
        return cls(seed=seed, nu=nu, positions=pos, multiplicity=mult)

    @classmethod
    def empty(cls, seed: int = 0) -> "DisorderSample":
        """Obstacle-free interval (the nu = 0 case)."""
        return cls(seed=seed, nu=0.0, positions=np.empty(0))


def _merge(points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if points.size == 0:
        return points, np.empty(0, dtype=np.int64)
    keep = np.concatenate(([True], np.diff(points) >= MERGE_DISTANCE))
    starts = np.flatnonzero(keep)
    mult = np.diff(np.append(starts, points.size))
    return points[starts], mult


def sample_poisson(nu: float, seed: int) -> DisorderSample:
    """Draw a Poisson point process of intensity ``nu`` on (0, 1).

    Exponential gaps with mean 1/nu are accumulated from 0 until the running
    sum exceeds 1. The result is a pure function of ``(nu, seed)``.
    """
    if not (isinstance(nu, (int, float, np.floating)) and math.isfinite(nu) and nu > 0):
        raise DomainError(f"nu must be finite and positive, got {nu!r}")
    bitgen = np.random.Philox(key=int(seed) & _U64_MASK)
    block = int(nu + 6.0 * math.sqrt(nu) + 16)
    total = 0.0
    points: list[np.ndarray] = []
    while True:
        raw = bitgen.random_raw(block)
        u = ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53
        z = total + np.cumsum(-np.log(u) / nu)
        inside = z < 1.0
        if not inside.all():
            points.append(z[inside])
            break
        points.append(z)
        total = float(z[-1])
    pos, mult = _merge(np.concatenate(points))
    return DisorderSample(seed=int(seed), nu=float(nu), positions=pos, multiplicity=mult)


def largest_interval(sample: DisorderSample) -> tuple[int, float]:
    """Index and length of the longest gap; ties go to the smallest index."""
    lengths = sample.lengths
    i = int(np.argmax(lengths))
    return i, float(lengths[i])


@dataclass(frozen=True)
class IntervalStatistics:
    n_samples: int
    nu: float
    mean_gap: float
    std_gap: float
    mean_count_ratio: float
    std_count_ratio: float
    mean_ell_max: float
    std_ell_max: float
    ell_max: np.ndarray


def interval_statistics(samples: Iterable[DisorderSample]) -> IntervalStatistics:
    """Empirical gap statistics over a set of samples sharing one ``nu``.

    The per-sample mean gap is ``1/(m+1)``; standard deviations are
    population values (zero for a single sample).
    """
    samples = list(samples)
    if not samples:
        raise UsageError("interval_statistics needs at least one sample")
    nus = {s.nu for s in samples}
    if len(nus) != 1:
        raise UsageError(f"samples must share one nu, got {sorted(nus)}")
    nu = nus.pop()
    mean_gap = np.array([1.0 / (s.count + 1) for s in samples])
    ratio = np.array([s.count / nu for s in samples])
    ell_max = np.array([largest_interval(s)[1] for s in samples])
    return IntervalStatistics(
        n_samples=len(samples), nu=nu,
        mean_gap=float(mean_gap.mean()), std_gap=float(mean_gap.std()),
        mean_count_ratio=float(ratio.mean()), std_count_ratio=float(ratio.std()),
        mean_ell_max=float(ell_max.mean()), std_ell_max=float(ell_max.std()),
        ell_max=ell_max,
    )
