"""Sweep rows and their CSV form."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, fields
from typing import Iterable, Optional, Union


NA = "NA"

Value = Union[float, int, str]


@dataclass(frozen=True)
class SweepRecord:
    """One (parameter point, seed) result. Missing values are the string ``"NA"``."""

    seed: int
    nu: float
    sigma: str
    gamma: float
    m_omega: Value = NA
    ell_max: Value = NA
    e0_num: Value = NA
    mu_num: Value = NA
    e_gc: Value = NA
    mu_gc: Value = NA
    lambda_gc: Value = NA
    lambda_num: Value = NA
    lbar: Value = NA
    gap: Value = NA
    gap_bound: Value = NA
    depletion_bound_modC: Value = NA
    phase: str = NA
    c1: Value = NA
    c2: Value = NA
    wall_time: Value = NA
    reason: str = ""

    def sort_key(self):
        return (self.nu, self.gamma, _sigma_order(self.sigma), self.seed)

    def as_row(self) -> list[str]:
        return [_fmt(getattr(self, f)) for f in FIELDS]

    @classmethod
    def from_row(cls, row: dict) -> "SweepRecord":
        kw = {}
        for f in fields(cls):
            raw = row[f.name]
            if f.name in ("seed",):
                kw[f.name] = int(raw)
            elif f.name in ("nu", "gamma"):
                kw[f.name] = float(raw)
            elif f.name in ("sigma", "phase", "reason"):
                kw[f.name] = raw
            elif f.name == "m_omega":
                kw[f.name] = raw if raw == NA else int(raw)
            else:
                kw[f.name] = _parse(raw)
        return cls(**kw)


FIELDS = [f.name for f in fields(SweepRecord)]


def _sigma_order(label: str) -> float:
    return math.inf if label == "inf" else float(label)


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (bool,)):
        return str(v)
    if isinstance(v, int):
        return str(v)
    v = float(v)
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    if math.isnan(v):
        return NA
    return repr(v)


def _parse(raw: str):
    if raw == NA:
        return NA
    return float(raw)


def write_records(records: Iterable[SweepRecord]) -> str:
    """RFC-4180 CSV text, rows sorted by (nu, gamma, sigma, seed)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(FIELDS)
    for r in sorted(records, key=SweepRecord.sort_key):
        w.writerow(r.as_row())
    return buf.getvalue()


def read_records(text: str) -> list[SweepRecord]:
    return [SweepRecord.from_row(row) for row in csv.DictReader(io.StringIO(text))]


def write_table(header: list[str], rows: Iterable[list]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def read_table(text: str) -> list[dict]:
    return list(csv.DictReader(io.StringIO(text)))


def as_float(raw: Optional[str]) -> float:
    if raw is None or raw == NA or raw == "":
        return math.nan
    return float(raw)
