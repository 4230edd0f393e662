"""Drivers for single runs, sweeps, convergence studies and figures."""

from .config import RunConfig
from .records import FIELDS, NA, SweepRecord, read_records, write_records
from .runner import (SCHEDULES, ConvergenceStudy, PointResult, convergence_study, gc_csv,
                     run_tasks, solve_point, sweep, sweep_tasks)

__all__ = ["RunConfig", "FIELDS", "NA", "SweepRecord", "read_records", "write_records",
           "SCHEDULES", "ConvergenceStudy", "PointResult", "convergence_study", "gc_csv",
           "run_tasks", "solve_point", "sweep", "sweep_tasks"]
