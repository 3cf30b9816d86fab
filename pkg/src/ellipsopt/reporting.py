"""Iteration records, run reports, and the trace CSV format.

Trace files have one row per iteration with the header
``k,feasible,cut_kind,f_estimate,logdet_H,c0,...,c{n-1}``. Floats are written
in shortest round-trip form, so identical runs produce byte-identical files.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .geometry import Vector

CUT_SUBGRADIENT = "subgradient"
CUT_SEPARATION = "separation"
CUT_ZERO_GRAD = "zero-grad-exit"
CUT_SGD = "sgd-step"

TRACE_CUT_KINDS = (CUT_SUBGRADIENT, CUT_SEPARATION, CUT_ZERO_GRAD, CUT_SGD)

TERMINATION_BUDGET = "budget"
TERMINATION_ZERO_GRAD = "zero-gradient"
TERMINATION_DEGENERATE = "degenerate"
TERMINATION_CERTIFIED = "certified"


@dataclass(frozen=True)
class IterationRecord:
    index: int
    center: Vector
    feasible: bool
    cut: Vector | None
    cut_kind: str
    f_estimate: float | None
    log_det_shape: float | None

    def __post_init__(self) -> None:
        if self.cut_kind not in TRACE_CUT_KINDS:
            raise ValueError(f"unknown cut kind {self.cut_kind!r}")


@dataclass(frozen=True)
class SolverReport:
    """What a run returns: the chosen point and how the run went."""

    best_point: Vector
    best_estimate: float
    iterations: int
    batch_size: int
    eval_batch_size: int
    records: tuple[IterationRecord, ...]
    termination: str
    # exact sample accounting: draws spent on gradient batches vs on
    # value estimation (final selection and any internal probing)
    grad_draws: int = 0
    eval_draws: int = 0


def format_float(x: float) -> str:
    return repr(float(x))


def _record_row(record: IterationRecord) -> list[str]:
    return [
        str(record.index),
        "1" if record.feasible else "0",
        record.cut_kind,
        "" if record.f_estimate is None else format_float(record.f_estimate),
        "" if record.log_det_shape is None else format_float(record.log_det_shape),
        *(format_float(c) for c in record.center),
    ]


def trace_header(dim: int) -> list[str]:
    return ["k", "feasible", "cut_kind", "f_estimate", "logdet_H"] + [f"c{i}" for i in range(dim)]


def render_trace_csv(records) -> str:
    records = list(records)
    if not records:
        raise ValueError("cannot render an empty trace")
    dim = records[0].center.shape[0]
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(trace_header(dim))
    for record in records:
        writer.writerow(_record_row(record))
    return buffer.getvalue()


def write_trace_csv(path, records) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(render_trace_csv(records))


def read_trace_csv(path) -> list[IterationRecord]:
    """Parse a trace file back into records (cut vectors are not stored)."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty trace file") from None
        dim = len(header) - 5
        if dim < 1 or header != trace_header(dim):
            raise ValueError(f"{path}: unexpected trace header {header!r}")
        records = []
        for line_no, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise ValueError(f"{path}:{line_no}: expected {len(header)} fields, got {len(row)}")
            records.append(
                IterationRecord(
                    index=int(row[0]),
                    center=np.array([float(c) for c in row[5:]]),
                    feasible=row[1] == "1",
                    cut=None,
                    cut_kind=row[2],
                    f_estimate=None if row[3] == "" else float(row[3]),
                    log_det_shape=None if row[4] == "" else float(row[4]),
                )
            )
    return records
