"""Quantities derived from solved condensates, and model-vs-numerics comparison."""

from __future__ import annotations

import io
import json
import math
from dataclasses import asdict, dataclass
from typing import Optional, Sequence

import numpy as np

from .discretize import Grid
from .disorder import DisorderSample, largest_interval
from .errors import DomainError, UsageError
from .gc_model import GcSolution, mass_per_length
from .gp_solve import GpSolution

OCCUPATION_SHARE = 1e-3
P_WINDOW = 20.0 * math.pi
P_POINTS = 2048
_CHUNK = 256


def default_momenta(window: float = P_WINDOW, points: int = P_POINTS) -> np.ndarray:
    return np.linspace(-window, window, points)


def occupation_threshold(count: int) -> float:
    """One thousandth of the equal share over ``count + 1`` gaps."""
    return OCCUPATION_SHARE / (count + 1)


def _gap_index(sample: DisorderSample, grid: Grid) -> np.ndarray:
    return np.searchsorted(sample.edges, grid.nodes, side="right") - 1


def _check_consistent(solution: GpSolution, sample: DisorderSample, masses: np.ndarray):
    if solution.interval_masses is not None:
        if solution.interval_masses.size != sample.count + 1:
            raise UsageError("solution has %d gaps, sample has %d"
                             % (solution.interval_masses.size, sample.count + 1))
        if np.max(np.abs(masses - solution.interval_masses)) > 1e-8:
            raise UsageError("solution masses do not match the sample's gaps")
    elif solution.potential_values is not None and sample.count:
        # every loaded node must sit next to an obstacle of this sample
        loaded = np.flatnonzero(solution.potential_values)
        if loaded.size:
            z = solution.grid.nodes[loaded]
            j = np.clip(np.searchsorted(sample.positions, z), 1, sample.count) - 1
            near = np.minimum(np.abs(z - sample.positions[j]),
                              np.abs(z - sample.positions[np.minimum(j + 1, sample.count - 1)]))
            if np.any(near > 1.0001 * solution.grid.h):
                raise UsageError("solution potential does not come from this sample")


def interval_masses(solution: GpSolution, sample: DisorderSample) -> tuple[np.ndarray, float]:
    """Grid mass ``h * sum psi^2`` in each gap, and the fraction of occupied gaps."""
    gap = _gap_index(sample, solution.grid)
    masses = np.bincount(gap, weights=solution.grid.h * solution.psi**2,
                         minlength=sample.count + 1)
    _check_consistent(solution, sample, masses)
    lam = np.count_nonzero(masses > occupation_threshold(sample.count)) / (sample.count + 1)
    return masses, float(lam)


def _amplitudes(psi: np.ndarray, grid: Grid, p: np.ndarray) -> np.ndarray:
    """``int exp(i p z) psi(z) dz`` by the trapezoid rule (zero Dirichlet ends)."""
    z = grid.nodes
    out = np.empty(p.size, dtype=complex)
    for s in range(0, p.size, _CHUNK):
        ph = np.outer(p[s:s + _CHUNK], z)
        out[s:s + _CHUNK] = grid.h * (np.cos(ph) @ psi + 1j * (np.sin(ph) @ psi))
    return out


def momentum_density(solution_or_psi, p: Optional[Sequence[float]] = None,
                     grid: Optional[Grid] = None) -> np.ndarray:
    """Momentum density per particle of the fully condensed state.

    ``rho(p)/N = |int exp(ipz) psi(z) dz|^2 / (2 pi)``. Accepts a GpSolution or
    a raw grid array together with ``grid``.
    """
    if isinstance(solution_or_psi, GpSolution):
        psi, grid = solution_or_psi.psi, solution_or_psi.grid
    else:
        psi = np.asarray(solution_or_psi, dtype=float)
        if grid is None or psi.shape != (grid.M,):
            raise UsageError("a raw wavefunction needs its grid")
    p = default_momenta() if p is None else np.asarray(p, dtype=float)
    return np.abs(_amplitudes(psi, grid, p)) ** 2 / (2.0 * math.pi)


def mixture_momentum_density(components: Sequence[np.ndarray], weights: Sequence[float],
                             grid: Grid, p: Optional[Sequence[float]] = None) -> np.ndarray:
    """Momentum density of the incoherent mixture ``sum_k w_k |f_k><f_k|``."""
    w = np.asarray(weights, dtype=float)
    if len(components) != w.size or np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
        raise UsageError("weights must be nonnegative, sum to 1 and match the components")
    p = default_momenta() if p is None else np.asarray(p, dtype=float)
    return sum(wk * momentum_density(f, p, grid) for wk, f in zip(w, components))


def two_hump_pair(grid: Grid, split: float = 0.5) -> tuple[np.ndarray, list[np.ndarray]]:
    """Coherent superposition of two disjoint Dirichlet sine humps, and the humps.

    Both the coherent state and the equal-weight mixture of the humps have
    the same position density.
    """
    z = grid.nodes
    humps = []
    for a, b in ((0.0, split), (split, 1.0)):
        f = np.where((z > a) & (z < b), np.sin(math.pi * (z - a) / (b - a)), 0.0)
        humps.append(f / math.sqrt(grid.h * float(np.dot(f, f))))
    coherent = (humps[0] + humps[1]) / math.sqrt(2.0)
    return coherent, humps


def momentum_csv(p: np.ndarray, rho: np.ndarray) -> str:
    buf = io.StringIO()
    buf.write("p,rho\n")
    for a, b in zip(p, rho):
        buf.write(f"{float(a)!r},{float(b)!r}\n")
    return buf.getvalue()


@dataclass(frozen=True)
class ComparisonReport:
    relative_energy_gap: float
    lambda_num: float
    lambda_gc: float
    mass_tv_distance: float
    e0_num: float
    e_gc: float
    occupation_threshold: float

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    def to_csv_row(self) -> str:
        d = asdict(self)
        return ",".join(d) + "\n" + ",".join(repr(float(v)) for v in d.values()) + "\n"


def predicted_masses(sample: DisorderSample, gc: GcSolution) -> np.ndarray:
    """Model masses ``n(l_i)`` renormalized over the sample's own gaps.

    When no gap of the sample clears the model threshold the whole mass goes
    to the largest gap, the limit of the rule as the threshold is approached.
    """
    n = np.asarray(mass_per_length(sample.lengths, gc.mu, gc.gamma), dtype=float)
    total = n.sum()
    if total > 0:
        return n / total
    out = np.zeros(sample.count + 1)
    out[largest_interval(sample)[0]] = 1.0
    return out


def compare_model(solution: GpSolution, sample: DisorderSample, gc: GcSolution) -> ComparisonReport:
    if solution.gamma == 0:
        raise DomainError("the grand-canonical model is undefined at gamma = 0")
    if not solution.hard_wall:
        raise UsageError("compare_model needs a hard-wall solution")
    if not math.isclose(solution.gamma, gc.gamma, rel_tol=1e-12):
        raise UsageError(f"gamma mismatch: solution {solution.gamma!r}, model {gc.gamma!r}")
    if not math.isclose(sample.nu, gc.nu, rel_tol=1e-12):
        raise UsageError(f"nu mismatch: sample {sample.nu!r}, model {gc.nu!r}")
    masses, lam_num = interval_masses(solution, sample)
    pred = predicted_masses(sample, gc)
    tv = 0.5 * float(np.abs(masses / masses.sum() - pred).sum())
    return ComparisonReport(
        relative_energy_gap=abs(solution.e0 - gc.e_gc) / solution.e0,
        lambda_num=lam_num, lambda_gc=gc.lam, mass_tv_distance=min(tv, 1.0),
        e0_num=solution.e0, e_gc=gc.e_gc,
        occupation_threshold=occupation_threshold(sample.count),
    )
