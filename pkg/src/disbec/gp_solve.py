"""Minimizers of the disordered Gross-Pitaevskii functional.

``minimize_gp`` works on the grid for finite scatterer strength. The hard-wall
case ``sigma = INFINITE`` never touches a grid potential: the interval splits
into independent Dirichlet gaps, each gap's GP problem is solved in closed
form (see ``_unit_interval``), and the mass is shared out by equalizing the
per-gap chemical potentials.
"""

from __future__ import annotations

import io
import json
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.linalg import solve_banded
from scipy.sparse.linalg import spsolve

from . import _unit_interval as unit
from .discretize import (Grid, PotentialOnGrid, TridiagonalOperator, auto_grid_size,
                         schrodinger_operator)
from .disorder import DisorderSample
from .errors import ConvergenceError, DomainError, SolveTimeout, UsageError
from .spectrum import lowest_eigenpairs, mean_field_hamiltonian

log = logging.getLogger(__name__)

PI2 = math.pi**2
MIN_GAP_NODES = 4


@dataclass(frozen=True)
class GpOptions:
    energy_tol: float = 1e-10
    residual_tol: float = 1e-6
    max_iter: int = 5000
    newton_max_iter: int = 60
    grid_size: Optional[int] = None
    timeout: Optional[float] = None
    check_ground_state: bool = True


@dataclass
class GpSolution:
    """Discretized condensate and its energetics.

    ``residual`` is ``||h psi - e0 psi||`` in the grid L2 norm for grid solves;
    for hard-wall solves it is the largest chemical-potential mismatch between
    occupied gaps.
    """

    psi: np.ndarray
    e0: float
    mu: float
    kinetic: float
    potential: float
    interaction: float
    residual: float
    iterations: int
    grid: Grid
    gamma: float
    interval_masses: Optional[np.ndarray] = None
    hard_wall: bool = False
    potential_values: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def breakdown(self) -> dict:
        return {"kinetic": self.kinetic, "potential": self.potential,
                "interaction": self.interaction}

    def header(self) -> dict:
        d = {"e0": self.e0, "mu": self.mu, "breakdown": self.breakdown,
             "residual": self.residual, "iterations": self.iterations,
             "interval_masses": None if self.interval_masses is None
             else [float(x) for x in self.interval_masses]}
        return d

    def header_json(self) -> str:
        return json.dumps(self.header(), sort_keys=True)

    def to_csv(self) -> str:
        """Columns z, psi, V. V is empty for hard-wall solutions."""
        buf = io.StringIO()
        buf.write("z,psi,V\n")
        V = self.potential_values
        for i, (z, p) in enumerate(zip(self.grid.nodes, self.psi)):
            v = "" if V is None else repr(float(V[i]))
            buf.write(f"{z!r},{float(p)!r},{v}\n")
        return buf.getvalue()


def gp_energy_terms(A: TridiagonalOperator, potential: PotentialOnGrid, gamma: float,
                    psi: np.ndarray) -> tuple[float, float, float]:
    """Kinetic, external and interaction energy of a grid function."""
    h = A.grid.h
    ext = h * float(np.dot(potential.values, psi * psi))
    kin = A.quadratic_form(psi) - ext
    inter = 0.5 * gamma * h * float(np.sum(psi**4))
    return kin, ext, inter


def _normalize(psi: np.ndarray, h: float) -> np.ndarray:
    return psi / math.sqrt(h * float(np.dot(psi, psi)))


class _Clock:
    def __init__(self, timeout):
        self.deadline = None if timeout is None else time.monotonic() + timeout

    def check(self, psi):
        if self.deadline is not None and time.monotonic() > self.deadline:
            raise SolveTimeout("GP solve exceeded its time budget", last=psi)


def _banded(diag: np.ndarray, off: np.ndarray) -> np.ndarray:
    ab = np.zeros((3, diag.size))
    ab[0, 1:] = off
    ab[1] = diag
    ab[2, :-1] = off
    return ab


def _gradient_flow(A, potential, gamma, psi, opts, clock, max_steps, rel_tol):
    """Backward-Euler normalized gradient flow with adaptive step.

    Returns the final iterate and the number of accepted steps.
    """
    h = A.grid.h
    energy = sum(gp_energy_terms(A, potential, gamma, psi))
    tau = 1.0 / (PI2 + gamma)
    accepted = 0
    for _ in range(max_steps):
        clock.check(psi)
        ab = _banded(1.0 + tau * (A.diagonal + gamma * psi * psi), tau * A.offdiagonal)
        trial = _normalize(solve_banded((1, 1), ab, psi, check_finite=False), h)
        e_trial = sum(gp_energy_terms(A, potential, gamma, trial))
        if e_trial <= energy + 1e-14 * abs(energy):
            change = energy - e_trial
            psi, energy = trial, e_trial
            accepted += 1
            tau = min(tau * 1.5, 1e6 / (PI2 + gamma))
            if change <= rel_tol * abs(energy):
                break
        else:
            tau *= 0.25
            if tau < 1e-16:
                break
    return psi, accepted


def _residual(A, gamma, psi) -> tuple[float, float, np.ndarray]:
    """Rayleigh chemical potential and grid-L2 residual of the GP equation."""
    h = A.grid.h
    Hpsi = A.matvec(psi) + gamma * psi**3
    mu = h * float(np.dot(psi, Hpsi))
    r = Hpsi - mu * psi
    return mu, math.sqrt(h * float(np.dot(r, r))), r


def _newton(A, gamma, psi, opts, clock):
    """Newton iteration on ``(A + gamma psi^2) psi = mu psi``, ``||psi|| = 1``.

    Sign-flipped copies of a weakly coupled lobe are stationary points too;
    when the iteration settles on one with a negative lobe the lobe is flipped
    and Newton restarted.
    """
    iters = 0
    ok = False
    for _ in range(4):
        psi, it, ok = _newton_run(A, gamma, psi, opts, clock)
        iters += it
        if psi.min() >= -1e-10 * psi.max():
            break
        psi = _normalize(np.abs(psi), A.grid.h)
        ok = False
    return _normalize(np.abs(psi), A.grid.h), iters, ok


def _newton_run(A, gamma, psi, opts, clock):
    h = A.grid.h
    M = A.size
    mu, res, r = _residual(A, gamma, psi)
    energy_prev = None
    for it in range(1, opts.newton_max_iter + 1):
        clock.check(psi)
        L = sp.diags([A.offdiagonal, A.diagonal + 3.0 * gamma * psi**2 - mu, A.offdiagonal],
                     [-1, 0, 1], format="csc")
        col = sp.csc_matrix(-psi.reshape(-1, 1))
        row = sp.csc_matrix(h * psi.reshape(1, -1))
        J = sp.bmat([[L, col], [row, None]], format="csc")
        rhs = np.concatenate((-r, [-0.5 * (h * float(np.dot(psi, psi)) - 1.0)]))
        step = spsolve(J, rhs)
        if not np.all(np.isfinite(step)):
            return psi, it, False
        t = 1.0
        while True:
            cand = _normalize(psi + t * step[:M], h)
            mu_c, res_c, r_c = _residual(A, gamma, cand)
            if res_c < res or res_c < 0.1 * opts.residual_tol:
                break
            t *= 0.5
            if t < 1e-3:
                return psi, it, res <= opts.residual_tol
        psi, mu, res, r = cand, mu_c, res_c, r_c
        energy = mu - 0.5 * gamma * h * float(np.sum(psi**4))
        if (res <= opts.residual_tol and energy_prev is not None
                and abs(energy - energy_prev) <= opts.energy_tol * max(1.0, abs(energy))):
            return psi, it, True
        energy_prev = energy
    return psi, opts.newton_max_iter, res <= opts.residual_tol


def _build_solution(A, potential, gamma, psi, iterations) -> GpSolution:
    kin, ext, inter = gp_energy_terms(A, potential, gamma, psi)
    e0 = kin + ext + inter
    mu, res, _ = _residual(A, gamma, psi)
    return GpSolution(psi=psi, e0=e0, mu=e0 + inter, kinetic=kin, potential=ext,
                      interaction=inter, residual=res, iterations=iterations,
                      grid=A.grid, gamma=gamma, potential_values=potential.values)


def minimize_gp(potential: PotentialOnGrid, gamma: float, grid: Optional[Grid] = None,
                opts: Optional[GpOptions] = None) -> GpSolution:
    """Ground state of the GP functional for a finite grid potential.

    Seeds from the linear (gamma = 0) ground state, runs a normalized gradient
    flow until the energy settles to ~1e-8, then polishes with Newton steps on
    the stationarity equation. Before returning, the lowest eigenpair of the
    mean-field operator is compared with the result; a mismatch means the
    iteration found an excited state and the flow is restarted from that
    eigenvector.
    """
    opts = opts or GpOptions()
    grid = grid or potential.grid
    if gamma < 0 or not math.isfinite(gamma):
        raise DomainError(f"gamma must be finite and >= 0, got {gamma!r}")
    if potential.values.size != grid.M:
        raise UsageError("potential does not match the grid")
    clock = _Clock(opts.timeout)
    A = schrodinger_operator(potential, grid=grid)
    seed = lowest_eigenpairs(A, 1).eigenvectors[:, 0]
    psi = _normalize(np.abs(seed), grid.h)
    if gamma == 0.0:
        return _build_solution(A, potential, 0.0, psi, 0)

    total = 0
    for attempt in range(8):
        psi, n_flow = _gradient_flow(A, potential, gamma, psi, opts, clock,
                                     opts.max_iter, 1e-9 if attempt == 0 else 1e-11)
        psi, n_newton, ok = _newton(A, gamma, psi, opts, clock)
        total += n_flow + n_newton
        sol = _build_solution(A, potential, gamma, psi, total)
        if ok and not opts.check_ground_state:
            return sol
        spec = lowest_eigenpairs(mean_field_hamiltonian(potential, gamma, psi, grid), 3)
        tol = 10.0 * opts.residual_tol * max(1.0, abs(sol.e0))
        below = spec.eigenvalues < sol.e0 - tol
        if ok and not below.any():
            return sol
        if not below.any():
            below[0] = True
        # Stalled at a saddle where a weakly coupled well holds ~no amplitude:
        # give the lower mean-field modes real weight and let the flow sort it out.
        log.info("stationary point above the mean-field ground level (%g > %g); restarting",
                 sol.e0, spec.eigenvalues[0])
        mix = psi + np.abs(spec.eigenvectors[:, below]).sum(axis=1)
        psi = _normalize(mix, grid.h)
    raise ConvergenceError(
        "GP minimization did not converge",
        last=sol,
        diagnostics={"residual": sol.residual, "e0": sol.e0, "iterations": total},
    )


# ----------------------------------------------------------------------------
# Hard walls: per-gap closed form plus mass allocation


def _gap_energy(ell, n, gamma):
    """Exact per-gap energy, chemical potential and ``int psi^4`` (vectorized)."""
    ell = np.asarray(ell, dtype=float)
    n = np.asarray(n, dtype=float)
    g = gamma * n * ell
    E = np.zeros(np.broadcast(ell, n).shape)
    mu = np.broadcast_to(PI2 / ell**2, E.shape).astype(float)
    quartic_unit = np.full(E.shape, 1.5)
    lin = g <= 0.0
    E = np.where(lin, n * PI2 / ell**2, E)
    if (~lin).any():
        gi = np.broadcast_to(g, E.shape)[~lin]
        s = unit.UnitState(unit.u_from_coupling(gi))
        ell_b = np.broadcast_to(ell, E.shape)[~lin]
        n_b = np.broadcast_to(n, E.shape)[~lin]
        E[~lin] = n_b * s.energy / ell_b**2
        mu[~lin] = s.mu / ell_b**2
        quartic_unit[~lin] = s.quartic
    quartic = n**2 / ell * quartic_unit
    return E, mu, quartic


def interval_gp(ell: float, n: float, gamma: float, opts: Optional[GpOptions] = None,
                method: str = "exact", rel_step: float = 1e-4) -> tuple[float, float]:
    """Energy E(ell, n) of a Dirichlet gap of length ``ell`` holding mass ``n``.

    Returns ``(E, dE/dn)``; the derivative is a centered difference in n with
    relative step ``rel_step``. ``method="exact"`` uses the elliptic closed
    form, ``method="grid"`` solves the scaled unit-interval problem with
    ``minimize_gp`` (``opts.grid_size`` nodes, default 4000).
    """
    if not ell > 0:
        raise DomainError(f"gap length must be positive, got {ell!r}")
    if n < 0:
        raise DomainError(f"mass must be >= 0, got {n!r}")
    if gamma < 0:
        raise DomainError(f"gamma must be >= 0, got {gamma!r}")
    if n == 0:
        return 0.0, PI2 / ell**2

    if method == "exact":
        def energy(x):
            return float(_gap_energy(ell, x, gamma)[0])
    elif method == "grid":
        grid = Grid((opts.grid_size if opts and opts.grid_size else 4000))
        zero = PotentialOnGrid.zero(grid)

        def energy(x):
            # psi(z) = sqrt(x/ell) phi(z/ell): E = (x/ell^2) * e_unit(gamma*x*ell)
            sol = minimize_gp(zero, gamma * x * ell, grid, opts)
            return x * sol.e0 / ell**2
    else:
        raise UsageError(f"unknown method {method!r}")
    dn = rel_step * n
    E = energy(n)
    dEdn = (energy(n + dn) - energy(n - dn)) / (2.0 * dn)
    return E, dEdn


def _masses_at(mu: float, ell: np.ndarray, gamma: float) -> np.ndarray:
    """Exact gap masses with local chemical potential ``mu`` (0 below threshold)."""
    target = mu * ell**2
    n = np.zeros_like(ell)
    occ = target > PI2
    if occ.any():
        s = unit.UnitState(unit.u_from_mu(target[occ]))
        n[occ] = s.coupling / (gamma * ell[occ])
    return n


def _eligible(lengths: np.ndarray, grid: Grid) -> np.ndarray:
    ok = lengths >= MIN_GAP_NODES * grid.h
    if not ok.all():
        log.warning("%d gap(s) shorter than %d grid cells treated as unoccupiable",
                    int((~ok).sum()), MIN_GAP_NODES)
    return ok


def allocate_masses(lengths: np.ndarray, gamma: float, eligible: Optional[np.ndarray] = None,
                    max_bisections: int = 200) -> tuple[np.ndarray, float, int]:
    """Split unit mass over hard-wall gaps by equalizing local chemical potentials.

    Outer bisection on a common ``mu`` with ``sum_i n_i(mu) = 1``; ``n_i(mu)``
    inverts the gap's chemical potential exactly and vanishes when
    ``mu <= pi^2/ell_i^2``. Returns masses, ``mu`` and the bisection count.
    """
    lengths = np.asarray(lengths, dtype=float)
    if eligible is None:
        eligible = np.ones(lengths.size, dtype=bool)
    if not eligible.any():
        raise ConvergenceError("no gap long enough to hold the condensate",
                               diagnostics={"lengths": lengths.tolist()})
    idx = np.flatnonzero(eligible)
    ell = lengths[idx]
    masses = np.zeros(lengths.size)
    if gamma == 0.0:
        j = idx[int(np.argmax(ell))]
        masses[j] = 1.0
        return masses, PI2 / lengths[j] ** 2, 0

    lo = PI2 / float(ell.max()) ** 2
    hi = 2.0 * lo
    scanned = [lo]
    for _ in range(1000):
        if _masses_at(hi, ell, gamma).sum() > 1.0:
            break
        scanned.append(hi)
        hi *= 2.0
    else:
        raise ConvergenceError("could not bracket the chemical potential",
                               diagnostics={"mu_scanned": [scanned[0], scanned[-1]]})
    it = 0
    while it < max_bisections and hi - lo > 4e-16 * hi:
        mid = 0.5 * (lo + hi)
        if _masses_at(mid, ell, gamma).sum() > 1.0:
            hi = mid
        else:
            lo = mid
        it += 1
    mu = 0.5 * (lo + hi)
    n = _masses_at(mu, ell, gamma)
    n /= n.sum()
    masses[idx] = n
    return masses, mu, it


def solve_hard_wall(sample: DisorderSample, gamma: float, opts: Optional[GpOptions] = None,
                    grid: Optional[Grid] = None) -> GpSolution:
    """GP ground state with the wavefunction pinned to zero at every obstacle.

    Gaps shorter than four grid cells are excluded from the allocation. The
    returned ``psi`` samples the exact per-gap profiles on the grid, rescaled
    gap by gap so that the grid masses equal the allocated ones.
    """
    opts = opts or GpOptions()
    if gamma < 0 or not math.isfinite(gamma):
        raise DomainError(f"gamma must be finite and >= 0, got {gamma!r}")
    if grid is None:
        M = opts.grid_size
        if M is None:
            M = auto_grid_size(max(sample.nu, 0.0) if math.isfinite(sample.nu) else sample.count,
                               gamma)
        grid = Grid(M)
    lengths = sample.lengths
    eligible = _eligible(lengths, grid)
    masses, mu, iters = allocate_masses(lengths, gamma, eligible)

    occ = masses > 0
    E, mu_loc, quartic = _gap_energy(lengths[occ], masses[occ], gamma)
    e0 = float(E.sum())
    inter = 0.5 * gamma * float(quartic.sum())
    residual = float(np.max(np.abs(mu_loc - mu))) if gamma > 0 else 0.0

    z = grid.nodes
    edges = sample.edges
    gap_of = np.searchsorted(edges, z, side="right") - 1
    psi = np.zeros(grid.M)
    for i in np.flatnonzero(occ):
        sel = gap_of == i
        if not sel.any():
            continue
        t = (z[sel] - edges[i]) / lengths[i]
        if gamma == 0.0:
            phi = unit.sine_profile(t)
        else:
            g = gamma * masses[i] * lengths[i]
            phi = unit.profile(t, float(unit.u_from_coupling(g)[0]))
        local = np.maximum(phi, 0.0)
        norm = grid.h * float(np.dot(local, local))
        psi[sel] = local * math.sqrt(masses[i] / norm)

    return GpSolution(psi=psi, e0=e0, mu=e0 + inter, kinetic=e0 - inter, potential=0.0,
                      interaction=inter, residual=residual, iterations=iters, grid=grid,
                      gamma=gamma, interval_masses=masses, hard_wall=True)
