"""Command-line driver: ``disbec {solve,spectrum,gc,sweep,convergence,plot}``."""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from typing import Optional, Sequence

from ..discretize import sigma_label
from ..errors import ConvergenceError, DisbecError, UsageError
from ..gc_model import PhaseThresholds
from .config import RunConfig
from .plots import KINDS, write_svg
from .records import write_records
from .runner import (SCHEDULES, convergence_study, gc_csv, run_tasks, solve_point,
                     sweep_tasks)

log = logging.getLogger("disbec")

EXIT_OK = 0
EXIT_SOLVER = 2
EXIT_USAGE = 3


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _sigmas(text: str) -> list[str]:
    return [x.strip() for x in text.split(",") if x.strip()]


def _grid(text: str):
    return text if text == "auto" else int(text)


def _add_model_args(p: argparse.ArgumentParser, lists: bool):
    conv = _floats if lists else (lambda s: [float(s)])
    sconv = _sigmas if lists else (lambda s: [s])
    p.add_argument("--config", help="JSON config file; flags override its fields")
    p.add_argument("--nu", type=conv)
    p.add_argument("--gamma", type=conv)
    p.add_argument("--sigma", type=sconv, help="number or 'inf'")
    p.add_argument("--seed", type=int)
    p.add_argument("--grid", type=_grid, help="interior node count or 'auto'")
    p.add_argument("--N", type=float, help="particle number for the depletion bound")
    p.add_argument("--C", type=float, help="depletion-bound constant")
    p.add_argument("--energy-tol", dest="energy_tol", type=float)
    p.add_argument("--residual-tol", dest="residual_tol", type=float)
    p.add_argument("--max-iter", dest="max_iter", type=int)
    p.add_argument("--timeout", type=float, help="seconds per solve")
    p.add_argument("--delocalized", type=float, help="phase threshold on lambda")
    p.add_argument("--localized", type=float, help="phase threshold on lambda")
    p.add_argument("--few-intervals", dest="few_intervals", type=float,
                   help="phase threshold on lambda*nu")
    p.add_argument("--record-timing", dest="record_timing", action="store_true", default=None)
    p.add_argument("--out", required=True)


class _Parser(argparse.ArgumentParser):
    """Argument errors exit with the usage code, not argparse's default 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="disbec", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="one disorder sample end to end (output directory)")
    _add_model_args(p, lists=False)

    p = sub.add_parser("spectrum", help="mean-field levels of one solved sample")
    _add_model_args(p, lists=False)
    p.add_argument("--k", type=int)

    p = sub.add_parser("gc", help="grand-canonical model on a parameter grid (CSV)")
    _add_model_args(p, lists=True)

    p = sub.add_parser("sweep", help="disorder sweep over nu x gamma x sigma x seeds (CSV)")
    _add_model_args(p, lists=True)
    p.add_argument("--seeds", type=int)
    p.add_argument("--jobs", type=int)
    p.add_argument("--k", type=int)

    p = sub.add_parser("convergence", help="spread of e0/e_gc along a nu-ladder (CSV)")
    _add_model_args(p, lists=True)
    p.add_argument("--schedule", choices=sorted(SCHEDULES))
    p.add_argument("--seeds", type=int)
    p.add_argument("--jobs", type=int)

    p = sub.add_parser("plot", help="SVG figure from a CSV produced here")
    p.add_argument("csv")
    p.add_argument("--kind", required=True, help=f"one of {sorted(KINDS)}")
    p.add_argument("--out", required=True)
    return parser


def load_config(args: argparse.Namespace) -> RunConfig:
    base = RunConfig()
    if getattr(args, "config", None):
        with open(args.config, encoding="utf-8") as fh:
            base = RunConfig.from_json(fh.read())
    th = base.thresholds
    th_over = {k: getattr(args, k, None) for k in ("delocalized", "localized", "few_intervals")}
    if any(v is not None for v in th_over.values()):
        th = PhaseThresholds(**{**th.__dict__, **{k: v for k, v in th_over.items()
                                                  if v is not None}})
    names = ["nu", "gamma", "sigma", "seed", "seeds", "grid", "N", "C", "k", "energy_tol",
             "residual_tol", "max_iter", "timeout", "jobs", "schedule", "record_timing"]
    return base.merged({**{n: getattr(args, n, None) for n in names}, "thresholds": th})


def _write(path: str, text: str):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _write_meta(path: str, cfg: RunConfig, command: str, extra: Optional[dict] = None):
    meta = {"command": command, "config": cfg.to_dict(), "depletion_bound": "modulo C"}
    meta.update(extra or {})
    _write(path + ".meta.json", json.dumps(meta, sort_keys=True, indent=1) + "\n")


def _num(x):
    if isinstance(x, str):
        return x
    return x if math.isfinite(x) else str(x)


def cmd_solve(cfg: RunConfig, out: str, with_spectrum: bool = False) -> int:
    nu, gamma, sigma = cfg.single()
    os.makedirs(out, exist_ok=True)
    try:
        res = solve_point(cfg, nu, gamma, sigma, cfg.seed)
    except ConvergenceError as exc:
        diag = {"config": cfg.to_dict(), "error": str(exc),
                "diagnostics": {k: _num(v) if isinstance(v, float) else v
                                for k, v in (exc.diagnostics or {}).items()}}
        _write(os.path.join(out, "diagnostics.json"), json.dumps(diag, sort_keys=True) + "\n")
        log.error("solver failed: %s", exc)
        return EXIT_SOLVER
    sol, rec = res.solution, res.record
    summary = {
        "config": cfg.to_dict(), "seed": cfg.seed, "nu": nu, "gamma": gamma,
        "sigma": sigma_label(sigma), "grid_M": sol.grid.M, **sol.header(),
        "record": {k: _num(v) for k, v in rec.__dict__.items()},
        "sample": json.loads(res.sample.to_json()),
        "depletion_bound": "modulo C",
    }
    _write(os.path.join(out, "solution.csv"), sol.to_csv())
    if with_spectrum:
        spec = json.loads(res.spectrum.to_json())
        spec["depletion_bound_modC"] = _num(rec.depletion_bound_modC)
        spec["config"] = cfg.to_dict()
        _write(os.path.join(out, "spectrum.json"), json.dumps(spec, sort_keys=True) + "\n")
        if res.spectrum.eigenvectors.size:
            _write(os.path.join(out, "eigenvectors.csv"),
                   res.spectrum.eigenvectors_csv(sol.grid))
    _write(os.path.join(out, "summary.json"), json.dumps(summary, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_sweep(cfg: RunConfig, out: str) -> int:
    ckpt = out + ".partial"
    records = run_tasks(sweep_tasks(cfg), cfg.jobs, ckpt)
    _write(out, write_records(records))
    _write_meta(out, cfg, "sweep")
    os.remove(ckpt)
    failed = sum(1 for r in records if r.reason)
    if failed:
        log.warning("%d of %d rows failed (NA rows with a reason)", failed, len(records))
    return EXIT_OK


def cmd_convergence(cfg: RunConfig, out: str) -> int:
    ckpt = out + ".partial"
    study = convergence_study(cfg, ckpt)
    _write(out, study.to_csv())
    _write_meta(out, cfg, "convergence", {"trend": study.trend,
                                          "underpowered": study.underpowered})
    os.remove(ckpt)
    return EXIT_OK


def cmd_gc(cfg: RunConfig, out: str) -> int:
    _write(out, gc_csv(cfg))
    _write_meta(out, cfg, "gc", {"e_gc": "MODEL"})
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "plot":
            write_svg(args.csv, args.kind, args.out)
            return EXIT_OK
        cfg = load_config(args)
        if args.command in ("solve", "spectrum"):
            return cmd_solve(cfg, args.out, with_spectrum=args.command == "spectrum")
        if args.command == "sweep":
            return cmd_sweep(cfg, args.out)
        if args.command == "convergence":
            return cmd_convergence(cfg, args.out)
        return cmd_gc(cfg, args.out)
    except (UsageError, ValueError) as exc:
        print(f"disbec: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DisbecError as exc:
        print(f"disbec: error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
