"""Finite-difference grid, random potential and Dirichlet Schrodinger operators."""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .disorder import DisorderSample
from .errors import DomainError, UsageError

_ON_NODE_TOL = 1e-9


class _Infinite:
    """Symbolic hard-wall strength. Never converted to a float on the grid."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INFINITE"

    def __str__(self):
        return "inf"

    def __reduce__(self):
        return (_Infinite, ())


INFINITE = _Infinite()

Sigma = Union[float, _Infinite]


def is_infinite(sigma) -> bool:
    return sigma is INFINITE


def parse_sigma(value) -> Sigma:
    """Accept a number or one of ``inf``/``infinite``/``INFINITE``."""
    if value is INFINITE:
        return INFINITE
    if isinstance(value, str):
        if value.strip().lower() in ("inf", "infinite", "infinity"):
            return INFINITE
        value = float(value)
    value = float(value)
    if math.isinf(value) and value > 0:
        return INFINITE
    if not math.isfinite(value) or value < 0:
        raise DomainError(f"sigma must be >= 0 or inf, got {value!r}")
    return value


def sigma_label(sigma: Sigma) -> str:
    return "inf" if is_infinite(sigma) else repr(float(sigma))


@dataclass(frozen=True)
class Grid:
    """Interior nodes z_i = i*h, i = 1..M, of the unit interval."""

    M: int

    def __post_init__(self):
        if int(self.M) != self.M or self.M < 3:
            raise UsageError(f"grid needs M >= 3 interior nodes, got {self.M}")
        object.__setattr__(self, "M", int(self.M))

    @property
    def h(self) -> float:
        return 1.0 / (self.M + 1)

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(1, self.M + 1) / (self.M + 1)


def auto_grid_size(nu: float, gamma: float, mu_estimate: Optional[float] = None) -> int:
    """Default resolution: resolve gaps ~1/nu and the healing length ~1/sqrt(mu)."""
    if mu_estimate is None:
        mu_estimate = gamma + math.pi**2
    return int(max(4000, math.ceil(40.0 * nu), math.ceil(8.0 * math.sqrt(mu_estimate)) * 10))


@dataclass(frozen=True)
class PotentialOnGrid:
    values: np.ndarray
    integral: float
    grid: Grid

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("z,W\n")
        for z, w in zip(self.grid.nodes, self.values):
            buf.write(f"{z!r},{w!r}\n")
        return buf.getvalue()

    @classmethod
    def zero(cls, grid: Grid) -> "PotentialOnGrid":
        return cls(values=np.zeros(grid.M), integral=0.0, grid=grid)


def assemble_potential(sample: DisorderSample, sigma: Sigma, grid: Grid) -> PotentialOnGrid:
    """Deposit ``sigma * delta(z - z_j)`` on the grid by linear (two-node) weighting.

    A delta between nodes k and k+1 puts ``(1 - f) * sigma / h`` on node k and
    ``f * sigma / h`` on node k+1, ``f`` being the fractional offset. Deltas in
    the boundary cells put their full weight on the single interior neighbour,
    so ``h * sum(values) == sigma * m`` holds for every placement.
    """
    if is_infinite(sigma):
        raise UsageError("sigma = INFINITE has no grid potential; use solve_hard_wall")
    sigma = float(sigma)
    if not math.isfinite(sigma) or sigma < 0:
        raise DomainError(f"sigma must be finite and >= 0, got {sigma!r}")
    M, h = grid.M, grid.h
    values = np.zeros(M)
    if sample.count and sigma > 0:
        t = sample.positions * (M + 1)
        k = np.floor(t).astype(np.int64)
        frac = t - k
        snap_up = frac > 1.0 - _ON_NODE_TOL
        k[snap_up] += 1
        frac[snap_up] = 0.0
        frac[frac < _ON_NODE_TOL] = 0.0
        on_far_wall = k > M
        k[on_far_wall] = M
        frac[on_far_wall] = 1.0
        weight = sigma * sample.multiplicity / h
        left_w = (1.0 - frac) * weight
        right_w = frac * weight
        # boundary cells: node 0 and node M+1 carry Dirichlet values
        at_left_wall = k == 0
        right_w[at_left_wall] += left_w[at_left_wall]
        left_w[at_left_wall] = 0.0
        at_right_wall = k >= M
        left_w[at_right_wall] += right_w[at_right_wall]
        right_w[at_right_wall] = 0.0
        li = k - 1
        ok = (li >= 0) & (left_w != 0.0)
        np.add.at(values, li[ok], left_w[ok])
        ri = k
        ok = (ri <= M - 1) & (right_w != 0.0)
        np.add.at(values, ri[ok], right_w[ok])
    return PotentialOnGrid(values=values, integral=float(h * values.sum()), grid=grid)


@dataclass(frozen=True)
class TridiagonalOperator:
    """Symmetric tridiagonal matrix acting on grid functions."""

    diagonal: np.ndarray
    offdiagonal: np.ndarray
    grid: Grid

    def __post_init__(self):
        if self.offdiagonal.size != self.diagonal.size - 1:
            raise UsageError("off-diagonal must have M-1 entries")

    @property
    def size(self) -> int:
        return self.diagonal.size

    def matvec(self, v: np.ndarray) -> np.ndarray:
        out = self.diagonal * v
        out[:-1] += self.offdiagonal * v[1:]
        out[1:] += self.offdiagonal * v[:-1]
        return out

    def shifted(self, c: float) -> "TridiagonalOperator":
        return TridiagonalOperator(self.diagonal + c, self.offdiagonal.copy(), self.grid)

    def to_dense(self) -> np.ndarray:
        return (np.diag(self.diagonal) + np.diag(self.offdiagonal, 1)
                + np.diag(self.offdiagonal, -1))

    def norm_bound(self) -> float:
        """Gershgorin bound on the spectral norm."""
        off = np.abs(self.offdiagonal)
        row = np.abs(self.diagonal).copy()
        row[:-1] += off
        row[1:] += off
        return float(row.max())

    def quadratic_form(self, v: np.ndarray) -> float:
        """``h * <v, A v>``, the continuum-normalized expectation."""
        return float(self.grid.h * np.dot(v, self.matvec(v)))


def laplacian_diagonals(grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    inv_h2 = 1.0 / grid.h**2
    return np.full(grid.M, 2.0 * inv_h2), np.full(grid.M - 1, -inv_h2)


def schrodinger_operator(potential: PotentialOnGrid, extra: Optional[np.ndarray] = None,
                         grid: Optional[Grid] = None) -> TridiagonalOperator:
    """Discrete ``-d^2/dz^2 + W (+ extra)`` with Dirichlet ends."""
    grid = grid or potential.grid
    if potential.values.size != grid.M:
        raise UsageError("potential does not match the grid")
    diag, off = laplacian_diagonals(grid)
    diag = diag + potential.values
    if extra is not None:
        extra = np.asarray(extra, dtype=float)
        if extra.shape != (grid.M,):
            raise UsageError(f"extra term must have length {grid.M}, got {extra.shape}")
        diag = diag + extra
    return TridiagonalOperator(diag, off, grid)
