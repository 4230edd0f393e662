"""Static SVG figures from this package's CSV outputs.

Every figure is a pure function of the CSV bytes: text is kept as SVG text,
the id salt is fixed and no date is written.
"""

from __future__ import annotations

import io
import math
from typing import Callable

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from ..errors import UsageError  # noqa: E402
from .records import as_float, read_table  # noqa: E402

PHASE_ORDER = ["DELOCALIZED", "TRANSITION", "LOCALIZED", "FEW_INTERVALS"]
PHASE_COLORS = {"DELOCALIZED": "tab:blue", "TRANSITION": "tab:green",
                "LOCALIZED": "tab:orange", "FEW_INTERVALS": "tab:red"}

_RC = {"svg.hashsalt": "disbec", "svg.fonttype": "none", "path.simplify": False}


def _require(rows: list[dict], *cols: str):
    if not rows:
        raise UsageError("CSV has no data rows")
    missing = [c for c in cols if c not in rows[0]]
    if missing:
        raise UsageError(f"CSV lacks columns {missing}")


def _tag_legend(legend):
    for text in legend.get_texts():
        text.set_gid(f"legend-{text.get_text()}")


def _phase(ax, rows):
    _require(rows, "nu", "gamma", "phase")
    for phase in PHASE_ORDER:
        pts = [(math.log10(as_float(r["gamma"]) / as_float(r["nu"]) ** 2),
                math.log10(as_float(r["nu"]))) for r in rows if r["phase"] == phase]
        if pts:
            xs, ys = zip(*pts)
            ax.scatter(xs, ys, color=PHASE_COLORS[phase], label=phase, s=18)
    if not ax.collections:
        raise UsageError("no rows carry a phase label")
    ax.set_xlabel("log10(gamma/nu^2)")
    ax.set_ylabel("log10(nu)")
    _tag_legend(ax.legend(loc="best"))


def _lambda(ax, rows):
    col = "lambda" if "lambda" in rows[0] else "lambda_gc"
    _require(rows, "nu", "gamma", col)
    for nu in sorted({as_float(r["nu"]) for r in rows}):
        pts = sorted((as_float(r["gamma"]) / nu**2, as_float(r[col]))
                     for r in rows if as_float(r["nu"]) == nu and not math.isnan(as_float(r[col])))
        if pts:
            xs, ys = zip(*pts)
            ax.plot(xs, ys, marker="o", label=f"nu={nu:g}")
    ax.set_xscale("log")
    ax.set_xlabel("gamma/nu^2")
    ax.set_ylabel("occupied fraction")
    _tag_legend(ax.legend(loc="best"))


def _gap(ax, rows):
    _require(rows, "sigma", "m_omega", "gap")
    pts = sorted((as_float(r["sigma"]) * as_float(r["m_omega"]), as_float(r["gap"]))
                 for r in rows if r["sigma"] != "inf" and r["gap"] != "NA"
                 and as_float(r["sigma"]) * as_float(r["m_omega"]) > 0 and as_float(r["gap"]) > 0)
    if not pts:
        raise UsageError("no finite-sigma rows with a positive gap")
    xs, ys = zip(*pts)
    ax.scatter(xs, ys, s=12, label="mean-field gap")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("sigma * m_omega")
    ax.set_ylabel("e1 - e0")
    _tag_legend(ax.legend(loc="best"))


def _convergence(ax, rows):
    _require(rows, "nu", "rel_std", "schedule")
    for sched in sorted({r["schedule"] for r in rows}):
        pts = sorted((as_float(r["nu"]), as_float(r["rel_std"]))
                     for r in rows if r["schedule"] == sched)
        xs, ys = zip(*pts)
        ax.plot(xs, ys, marker="o", label=sched)
    ax.set_xscale("log")
    ax.set_xlabel("nu")
    ax.set_ylabel("std/mean of e0/e_gc")
    _tag_legend(ax.legend(loc="best"))


KINDS: dict[str, Callable] = {"phase": _phase, "lambda": _lambda, "gap": _gap,
                              "convergence": _convergence}


def render_svg(csv_text: str, kind: str) -> bytes:
    if kind not in KINDS:
        raise UsageError(f"unknown plot kind {kind!r}; choose from {sorted(KINDS)}")
    rows = read_table(csv_text)
    _require(rows)
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(6.0, 4.5))
        try:
            KINDS[kind](ax, rows)
            fig.tight_layout()
            buf = io.BytesIO()
            fig.savefig(buf, format="svg", metadata={"Date": None})
        finally:
            plt.close(fig)
    return buf.getvalue()


def write_svg(csv_path: str, kind: str, out_path: str) -> None:
    """Render ``csv_path``; nothing is written if rendering fails."""
    with open(csv_path, "rb") as fh:
        data = fh.read().decode("utf-8")
    svg = render_svg(data, kind)
    with open(out_path, "wb") as fh:
        fh.write(svg)
