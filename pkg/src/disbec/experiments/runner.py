"""Single solves, sweeps with resume, and the disorder-convergence study."""

from __future__ import annotations

import hashlib
import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from itertools import product
from typing import Callable, Optional

import numpy as np

from ..discretize import (Grid, PotentialOnGrid, Sigma, assemble_potential, auto_grid_size,
                          is_infinite, parse_sigma, sigma_label)
from ..disorder import DisorderSample, largest_interval, sample_poisson
from ..errors import DisbecError, SolveTimeout, UsageError
from ..gc_model import GcSolution, solve_mu, theorem41_conditions
from ..gp_solve import GpOptions, GpSolution, minimize_gp, solve_hard_wall
from ..observables import interval_masses
from ..spectrum import SpectrumResult, depletion_bound, hard_wall_spectrum, mean_field_spectrum
from .config import RunConfig
from .records import NA, SweepRecord, write_records, write_table

log = logging.getLogger(__name__)

SCHEDULES: dict[str, Callable[[float], float]] = {
    "nu2": lambda nu: nu * nu,
    "critical": lambda nu: nu / math.log(nu) ** 2,
    "violating": lambda nu: nu / (2.0 * math.log(nu) ** 2),
    "linear": lambda nu: nu,
}

CONDITION_MARGIN = 10.0
UNDERPOWERED_BELOW = 10


@dataclass
class PointResult:
    sample: DisorderSample
    solution: GpSolution
    spectrum: SpectrumResult
    gc: Optional[GcSolution]
    record: SweepRecord
    potential: Optional[PotentialOnGrid] = None


def make_sample(nu: float, seed: int) -> DisorderSample:
    return DisorderSample.empty(seed) if nu == 0 else sample_poisson(nu, seed)


def gp_options(cfg: RunConfig) -> GpOptions:
    return GpOptions(energy_tol=cfg.energy_tol, residual_tol=cfg.residual_tol,
                     max_iter=cfg.max_iter, timeout=cfg.timeout,
                     grid_size=None if cfg.grid == "auto" else int(cfg.grid))


def _maybe_gc(cfg: RunConfig, nu: float, gamma: float) -> Optional[GcSolution]:
    if gamma > 0 and nu > 0:
        return solve_mu(gamma, nu, thresholds=cfg.thresholds)
    return None


def solve_point(cfg: RunConfig, nu: float, gamma: float, sigma: Sigma, seed: int) -> PointResult:
    """Sample, solve, analyze one configuration. Raises on solver failure."""
    start = time.perf_counter()
    sample = make_sample(nu, seed)
    gc = _maybe_gc(cfg, nu, gamma)
    M = (auto_grid_size(nu, gamma, gc.mu if gc else None) if cfg.grid == "auto"
         else int(cfg.grid))
    grid = Grid(M)
    opts = gp_options(cfg)
    potential = None
    if is_infinite(sigma):
        sol = solve_hard_wall(sample, gamma, opts, grid)
        spec = hard_wall_spectrum(sample.lengths, sol.interval_masses, gamma, sol.mu, cfg.k)
    else:
        potential = assemble_potential(sample, sigma, grid)
        sol = minimize_gp(potential, gamma, grid, opts)
        spec = mean_field_spectrum(potential, gamma, sol.psi, cfg.k)
    _, lam_num = interval_masses(sol, sample)

    e_k = float(spec.eigenvalues[cfg.k])
    dep = (depletion_bound(cfg.N, gamma, sol.e0, e_k, cfg.C)
           if e_k > sol.e0 and gamma > 0 else NA)
    c1 = c2 = NA
    if nu > 1 and gamma > 0:
        c1, c2 = theorem41_conditions(gamma, nu, sigma)
    rec = SweepRecord(
        seed=seed, nu=nu, sigma=sigma_label(sigma), gamma=gamma,
        m_omega=sample.count, ell_max=largest_interval(sample)[1],
        e0_num=sol.e0, mu_num=sol.mu,
        e_gc=gc.e_gc if gc else NA, mu_gc=gc.mu if gc else NA,
        lambda_gc=gc.lam if gc else NA, lambda_num=lam_num,
        lbar=gc.lbar if gc else NA, gap=spec.gap, gap_bound=spec.gap_bound,
        depletion_bound_modC=dep, phase=str(gc.phase) if gc else NA, c1=c1, c2=c2,
        wall_time=time.perf_counter() - start if cfg.record_timing else NA,
    )
    return PointResult(sample, sol, spec, gc, rec, potential)


def run_task(task: tuple) -> SweepRecord:
    """Worker entry point: never raises for solver failures, returns an NA row."""
    cfg_json, nu, gamma, sigma, seed = task
    cfg = RunConfig.from_json(cfg_json)
    sigma = parse_sigma(sigma)
    try:
        return solve_point(cfg, nu, gamma, sigma, seed).record
    except SolveTimeout:
        reason = "timeout"
    except DisbecError as exc:
        reason = f"{type(exc).__name__}: {exc}"
    log.warning("nu=%g gamma=%g sigma=%s seed=%d failed: %s", nu, gamma, sigma, seed, reason)
    return SweepRecord(seed=seed, nu=nu, sigma=sigma_label(sigma), gamma=gamma, reason=reason)


def _result_config(cfg: RunConfig) -> str:
    # parallelism never changes results
    return replace(cfg, jobs=1).to_json()


def task_key(task: tuple) -> str:
    return hashlib.sha256(json.dumps(task).encode()).hexdigest()


def sweep_tasks(cfg: RunConfig) -> list[tuple]:
    c = _result_config(cfg)
    return [(c, nu, gamma, sigma_label(sigma), seed)
            for nu, gamma, sigma, seed in product(cfg.nu, cfg.gamma, cfg.sigma,
                                                  range(cfg.seed, cfg.seed + cfg.seeds))]


def _load_checkpoint(path: str) -> dict[str, SweepRecord]:
    done: dict[str, SweepRecord] = {}
    if not os.path.exists(path):
        return done
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            try:
                entry = json.loads(line)
            except json.JSONDecodeError:
                break  # torn final line from an interrupted run
            done[entry["key"]] = SweepRecord(**entry["record"])
    return done


def run_tasks(tasks: list[tuple], jobs: int = 1, checkpoint: Optional[str] = None,
              limit: Optional[int] = None) -> list[SweepRecord]:
    """Run tasks, skipping those already in ``checkpoint``.

    ``limit`` stops after that many new tasks (used to simulate interruption).
    """
    done = _load_checkpoint(checkpoint) if checkpoint else {}
    todo = [t for t in tasks if task_key(t) not in done]
    if limit is not None:
        todo = todo[:limit]
    fh = open(checkpoint, "a", encoding="utf-8") if checkpoint else None
    try:
        if jobs > 1 and len(todo) > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                results = pool.map(run_task, todo, chunksize=1)
                for t, rec in zip(todo, results):
                    done[task_key(t)] = rec
                    _append(fh, t, rec)
        else:
            for t in todo:
                rec = run_task(t)
                done[task_key(t)] = rec
                _append(fh, t, rec)
    finally:
        if fh:
            fh.close()
    return [done[task_key(t)] for t in tasks if task_key(t) in done]


def _append(fh, task, rec: SweepRecord):
    if fh is None:
        return
    fh.write(json.dumps({"key": task_key(task), "record": rec.__dict__}) + "\n")
    fh.flush()


def sweep(cfg: RunConfig, checkpoint: Optional[str] = None,
          limit: Optional[int] = None) -> list[SweepRecord]:
    return run_tasks(sweep_tasks(cfg), cfg.jobs, checkpoint, limit)


def sweep_csv(cfg: RunConfig, checkpoint: Optional[str] = None) -> str:
    return write_records(sweep(cfg, checkpoint))


GC_COLUMNS = ["nu", "gamma", "sigma", "mu", "lambda", "lbar", "phase", "relation_constant",
              "eq_star_check", "c1", "c2", "e_gc", "threshold_delocalized",
              "threshold_localized", "threshold_few_intervals"]


def gc_rows(cfg: RunConfig) -> list[list]:
    rows = []
    th = cfg.thresholds
    for nu, gamma, sigma in product(cfg.nu, cfg.gamma, cfg.sigma):
        if gamma <= 0 or nu <= 0:
            raise UsageError("the grand-canonical model needs gamma > 0 and nu > 0")
        gc = solve_mu(gamma, nu, thresholds=th)
        c1, c2 = theorem41_conditions(gamma, nu, sigma) if nu > 1 else (NA, NA)
        rows.append([nu, gamma, sigma_label(sigma), gc.mu, gc.lam, gc.lbar, str(gc.phase),
                     gc.relation_constant, gc.eq_star_check, c1, c2, gc.e_gc,
                     th.delocalized, th.localized, th.few_intervals])
    return rows


def gc_csv(cfg: RunConfig) -> str:
    return write_table(GC_COLUMNS, gc_rows(cfg))


CONVERGENCE_COLUMNS = ["nu", "gamma", "sigma", "schedule", "seeds", "solved", "mean_ratio",
                       "std_ratio", "rel_std", "c1", "c2", "conditions_met", "underpowered",
                       "trend"]


@dataclass(frozen=True)
class LadderPoint:
    nu: float
    gamma: float
    sigma: str
    seeds: int
    solved: int
    mean: float
    std: float
    rel_std: float
    c1: float
    c2: float

    @property
    def conditions_met(self) -> bool:
        return self.c1 >= CONDITION_MARGIN and self.c2 >= CONDITION_MARGIN


@dataclass(frozen=True)
class ConvergenceStudy:
    schedule: str
    points: list[LadderPoint]

    @property
    def decreasing(self) -> bool:
        r = [p.rel_std for p in self.points]
        return all(b < a for a, b in zip(r, r[1:]))

    @property
    def underpowered(self) -> bool:
        return min(p.solved for p in self.points) < UNDERPOWERED_BELOW

    @property
    def trend(self) -> str:
        return "decreasing" if self.decreasing else "fluctuating regime"

    def to_csv(self) -> str:
        rows = [[p.nu, p.gamma, p.sigma, self.schedule, p.seeds, p.solved, p.mean, p.std,
                 p.rel_std, p.c1, p.c2, str(p.conditions_met), str(self.underpowered),
                 self.trend] for p in self.points]
        return write_table(CONVERGENCE_COLUMNS, rows)


def convergence_study(cfg: RunConfig, checkpoint: Optional[str] = None) -> ConvergenceStudy:
    """Sample mean and spread of ``e0_num/e_gc`` along a nu-ladder with gamma = schedule(nu)."""
    if cfg.schedule not in SCHEDULES:
        raise UsageError(f"unknown schedule {cfg.schedule!r}; choose from {sorted(SCHEDULES)}")
    if len(cfg.sigma) != 1:
        raise UsageError("the convergence study takes one sigma")
    if any(nu <= 1 for nu in cfg.nu):
        raise UsageError("the convergence study needs nu > 1")
    rule = SCHEDULES[cfg.schedule]
    tasks = []
    for nu in sorted(cfg.nu):
        point_cfg = replace(cfg, nu=(nu,), gamma=(rule(nu),))
        tasks.extend(sweep_tasks(point_cfg))
    records = run_tasks(tasks, cfg.jobs, checkpoint)
    sigma = cfg.sigma[0]
    points = []
    for nu in sorted(cfg.nu):
        gamma = rule(nu)
        rows = [r for r in records if r.nu == nu and r.e0_num != NA]
        ratios = np.array([r.e0_num / r.e_gc for r in rows], dtype=float)
        mean = float(ratios.mean()) if ratios.size else math.nan
        std = float(ratios.std(ddof=1)) if ratios.size > 1 else 0.0
        c1, c2 = theorem41_conditions(gamma, nu, sigma)
        points.append(LadderPoint(nu=nu, gamma=gamma, sigma=sigma_label(sigma),
                                  seeds=cfg.seeds, solved=int(ratios.size), mean=mean,
                                  std=std, rel_std=std / mean if ratios.size else math.nan,
                                  c1=c1, c2=c2))
    return ConvergenceStudy(cfg.schedule, points)
