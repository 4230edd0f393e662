"""Mean-field Hamiltonian spectra, the gap lower bound and depletion bounds."""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import eigh_tridiagonal, solve_banded

from .discretize import Grid, PotentialOnGrid, TridiagonalOperator, schrodinger_operator
from .errors import DomainError, UsageError

ORTHO_TOL = 1e-8
RESIDUAL_TOL = 1e-8
CLUSTER_TOL = 1e-8


@dataclass(frozen=True)
class SpectrumResult:
    """Lowest eigenpairs; eigenvectors are columns normalized so h*sum(v**2) = 1."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    gap: float
    gap_bound: float = float("nan")
    eta: float = float("nan")

    def with_bound(self, integral_W: float) -> "SpectrumResult":
        eta, bound = gap_lower_bound(integral_W)
        return SpectrumResult(self.eigenvalues, self.eigenvectors, self.gap, bound, eta)

    def to_json(self) -> str:
        return json.dumps({
            "eigenvalues": [float(x) for x in self.eigenvalues],
            "gap": float(self.gap),
            "gap_bound": _finite_or_str(self.gap_bound),
            "eta": _finite_or_str(self.eta),
        })

    def eigenvectors_csv(self, grid: Grid) -> str:
        buf = io.StringIO()
        k = self.eigenvectors.shape[1]
        buf.write("z," + ",".join(f"psi_{j}" for j in range(k)) + "\n")
        for z, row in zip(grid.nodes, self.eigenvectors):
            buf.write(f"{z!r}," + ",".join(repr(float(x)) for x in row) + "\n")
        return buf.getvalue()


def _finite_or_str(x: float):
    return float(x) if math.isfinite(x) else str(x)


def mean_field_hamiltonian(potential: PotentialOnGrid, gamma: float, psi0: np.ndarray,
                           grid: Optional[Grid] = None) -> TridiagonalOperator:
    """``-d^2 + V + gamma*psi0**2 - (gamma/2) * int psi0**4`` on the grid.

    The scalar shift is kept, so for the GP minimizer the lowest eigenvalue is
    the GP energy itself.
    """
    grid = grid or potential.grid
    psi0 = np.asarray(psi0, dtype=float)
    if psi0.shape != (grid.M,):
        raise UsageError(f"psi0 must have length {grid.M}")
    norm = grid.h * float(np.dot(psi0, psi0))
    if abs(norm - 1.0) > 1e-6:
        raise UsageError(f"psi0 is not normalized (h*sum psi^2 = {norm!r})")
    dens = psi0 * psi0
    shift = 0.5 * gamma * grid.h * float(np.dot(dens, dens))
    return schrodinger_operator(potential, gamma * dens - shift, grid)


def _inverse_iteration(op: TridiagonalOperator, shift: float, v: np.ndarray,
                       steps: int = 3) -> np.ndarray:
    ab = np.zeros((3, op.size))
    ab[0, 1:] = op.offdiagonal
    ab[1] = op.diagonal - shift
    ab[2, :-1] = op.offdiagonal
    for _ in range(steps):
        v = solve_banded((1, 1), ab, v, check_finite=False)
        v /= np.linalg.norm(v)
    return v


def _refine_cluster(op: TridiagonalOperator, lam: np.ndarray, vecs: np.ndarray,
                    idx: list[int], rng: np.random.Generator) -> None:
    """Restart inverse iteration from random vectors with Gram-Schmidt, in place."""
    scale = max(op.norm_bound(), 1.0)
    basis: list[np.ndarray] = []
    for j in idx:
        v = rng.standard_normal(op.size)
        for _ in range(4):
            for b in basis:
                v -= np.dot(b, v) * b
            v /= np.linalg.norm(v)
            v = _inverse_iteration(op, lam[j] - 1e-12 * scale, v, steps=1)
        for b in basis:
            v -= np.dot(b, v) * b
        v /= np.linalg.norm(v)
        basis.append(v)
        vecs[:, j] = v


def lowest_eigenpairs(op: TridiagonalOperator, k: int = 1) -> SpectrumResult:
    """The ``k + 1`` algebraically smallest eigenpairs of a symmetric tridiagonal operator.

    Eigenvalues come from Sturm-sequence bisection and eigenvectors from
    inverse iteration (LAPACK ``stebz``/``stein``). Pairs inside a cluster
    (relative spacing below 1e-8) whose vectors lose orthogonality are
    recomputed from random starts with Gram-Schmidt.
    """
    M = op.size
    if not (1 <= k <= M // 4):
        raise UsageError(f"k must satisfy 1 <= k <= M/4 = {M // 4}, got {k}")
    lam, vecs = eigh_tridiagonal(op.diagonal, op.offdiagonal, select="i",
                                 select_range=(0, k), lapack_driver="stebz",
                                 check_finite=False)
    lam = np.array(lam)
    vecs = np.array(vecs)
    scale = max(op.norm_bound(), 1.0)

    gram = vecs.T @ vecs - np.eye(k + 1)
    if np.max(np.abs(gram)) > ORTHO_TOL:
        rng = np.random.default_rng(0)
        j = 0
        while j <= k:
            cluster = [j]
            while cluster[-1] < k and lam[cluster[-1] + 1] - lam[cluster[-1]] < CLUSTER_TOL * scale:
                cluster.append(cluster[-1] + 1)
            if len(cluster) > 1:
                _refine_cluster(op, lam, vecs, cluster, rng)
            j = cluster[-1] + 1

    for j in range(k + 1):
        r = op.matvec(vecs[:, j]) - lam[j] * vecs[:, j]
        if np.linalg.norm(r) > RESIDUAL_TOL * scale:
            vecs[:, j] = _inverse_iteration(op, lam[j] - 1e-12 * scale, vecs[:, j], steps=2)
            lam[j] = float(np.dot(vecs[:, j], op.matvec(vecs[:, j])))

    signs = np.sign(vecs.sum(axis=0))
    signs[signs == 0] = 1.0
    vecs = vecs * signs / math.sqrt(op.grid.h)
    return SpectrumResult(eigenvalues=lam, eigenvectors=vecs, gap=float(lam[1] - lam[0]))


def gap_lower_bound(integral_W: float) -> tuple[float, float]:
    """``eta = sqrt(pi^2 + 3*int W)`` and ``eta * ln(1 + pi*exp(-2*eta))``.

    Valid for ``-d^2 + W`` on [0, 1] with Dirichlet ends and ``W >= 0``. An
    infinite integral (hard walls) gives ``(inf, 0.0)``.
    """
    if math.isnan(integral_W) or integral_W < 0:
        raise DomainError(f"integral of W must be >= 0, got {integral_W!r}")
    if math.isinf(integral_W):
        return math.inf, 0.0
    eta = math.sqrt(math.pi**2 + 3.0 * integral_W)
    return eta, eta * math.log1p(math.pi * math.exp(-2.0 * eta))


def depletion_bound(N: float, gamma: float, e0: float, e_k: float, C: float = 1.0) -> float:
    """``C * e0/(e_k - e0) * N**(-1/3) * min(sqrt(gamma), gamma)``.

    Values above 1 are returned unchanged; they carry no information.
    """
    if not e_k > e0:
        raise DomainError(f"need e_k > e0, got e_k={e_k!r}, e0={e0!r}")
    if N < 1:
        raise DomainError(f"N must be >= 1, got {N!r}")
    if C <= 0:
        raise DomainError(f"C must be positive, got {C!r}")
    if gamma < 0:
        raise DomainError(f"gamma must be >= 0, got {gamma!r}")
    return C * e0 / (e_k - e0) * N ** (-1.0 / 3.0) * min(math.sqrt(gamma), gamma)


def mean_field_spectrum(potential: PotentialOnGrid, gamma: float, psi0: np.ndarray,
                        k: int = 1) -> SpectrumResult:
    """Spectrum of the mean-field operator plus the gap bound for its potential.

    The potential part ``V + gamma*psi0**2`` integrates to ``int V + gamma``.
    """
    op = mean_field_hamiltonian(potential, gamma, psi0)
    return lowest_eigenpairs(op, k).with_bound(potential.integral + gamma)


def hard_wall_levels(lengths: np.ndarray, masses: np.ndarray, gamma: float, mu: float,
                     k: int = 1, points: int = 2000) -> np.ndarray:
    """The ``k + 1`` lowest levels of the mean-field operator with hard walls.

    The operator splits into independent Dirichlet gaps. Empty gaps contribute
    ``pi^2 j^2/l^2``; in an occupied gap the potential ``gamma*psi0^2`` is built
    from the exact profile on a local grid, and the discretization error is
    removed by pinning the local ground level to the exact common ``mu``. All
    levels carry the scalar shift ``-(gamma/2) int psi0^4``.
    """
    from . import _unit_interval as unit

    lengths = np.asarray(lengths, dtype=float)
    masses = np.asarray(masses, dtype=float)
    occ = masses > 0
    j = np.arange(1, k + 2)
    levels = [math.pi**2 * j**2 / ell**2 for ell in lengths[~occ]]
    quartic = 0.0
    for ell, n in zip(lengths[occ], masses[occ]):
        g = gamma * n * ell
        if g == 0.0:
            levels.append(math.pi**2 * j**2 / ell**2)
            continue
        u = float(unit.u_from_coupling(g)[0])
        s = unit.UnitState(u)
        quartic += n * n / ell * float(s.quartic)
        P = int(min(max(points, math.ceil(40.0 * math.sqrt(float(s.mu)))), 200000))
        ht = 1.0 / (P + 1)
        t = np.arange(1, P + 1) * ht
        W = g * unit.profile(t, u) ** 2
        lam = eigh_tridiagonal(2.0 / ht**2 + W, np.full(P - 1, -1.0 / ht**2),
                               eigvals_only=True, select="i", select_range=(0, k),
                               check_finite=False)
        lam = lam - lam[0] + float(s.mu)
        levels.append(lam / ell**2)
    shift = 0.5 * gamma * quartic
    return np.sort(np.concatenate(levels))[: k + 1] - shift


def hard_wall_spectrum(lengths: np.ndarray, masses: np.ndarray, gamma: float, mu: float,
                       k: int = 1) -> SpectrumResult:
    """Level structure at ``sigma = INFINITE``; no eigenvectors, ``gap_bound = 0``.

    Two or more occupied gaps share the common ground level, so the gap is 0.
    """
    lam = hard_wall_levels(lengths, masses, gamma, mu, k)
    if np.count_nonzero(np.asarray(masses) > 0) > 1:
        lam[1] = lam[0]
    return SpectrumResult(eigenvalues=lam, eigenvectors=np.empty((0, 0)),
                          gap=float(lam[1] - lam[0])).with_bound(math.inf)
