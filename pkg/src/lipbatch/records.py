"""Experiment traces and their CSV form.

A record file has one row per objective evaluation with the columns::

    replicate, iteration, batch_index, x0..x{d-1}, y, best_so_far,
    design_time_s, eval_time_s, wall_clock_s

Iteration 0 is the initial design. Floats are written with ``repr`` so a
parse/serialize round trip reproduces the file byte for byte.
"""

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from lipbatch.errors import SchemaError

TAIL_COLUMNS = ("y", "best_so_far", "design_time_s", "eval_time_s", "wall_clock_s")


@dataclass(frozen=True)
class Row:
    replicate: int
    iteration: int
    batch_index: int
    x: tuple
    y: float
    best_so_far: float
    design_time_s: float
    eval_time_s: float
    wall_clock_s: float

    def cells(self):
        return [
            str(self.replicate), str(self.iteration), str(self.batch_index),
            *(repr(float(c)) for c in self.x),
            repr(float(self.y)), repr(float(self.best_so_far)),
            repr(float(self.design_time_s)), repr(float(self.eval_time_s)),
            repr(float(self.wall_clock_s)),
        ]


def header(dim):
    return ["replicate", "iteration", "batch_index", *(f"x{i}" for i in range(dim)), *TAIL_COLUMNS]


@dataclass
class ExperimentRecord:
    dim: int = 0
    rows: list = field(default_factory=list)
    recommendation: np.ndarray = None

    def sorted_rows(self):
        return sorted(self.rows, key=lambda r: (r.replicate, r.iteration, r.batch_index))

    def final_best(self):
        """Best-so-far at the last row of every replicate, keyed by replicate."""
        out = {}
        for r in self.sorted_rows():
            out[r.replicate] = r.best_so_far
        return out

    def summary(self):
        vals = np.array(list(self.final_best().values()), dtype=float)
        return {
            "replicates": int(vals.size),
            "mean_final_best": float(np.mean(vals)) if vals.size else float("nan"),
            "std_final_best": _std(vals),
        }

    def extend(self, other):
        self.rows.extend(other.rows)
        self.dim = self.dim or other.dim


def _std(vals):
    return float(np.std(vals, ddof=1)) if vals.size > 1 else 0.0


def rows_to_csv(rows, dim):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header(dim))
    for r in rows:
        w.writerow(r.cells())
    return buf.getvalue()


def write_csv(path, record):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(rows_to_csv(record.sorted_rows(), record.dim))


def parse_csv(text):
    """Parse record CSV text into an :class:`ExperimentRecord`."""
    reader = csv.reader(io.StringIO(text))
    try:
        cols = next(reader)
    except StopIteration:
        raise SchemaError("empty record file") from None
    dim = len(cols) - 3 - len(TAIL_COLUMNS)
    if dim < 1 or cols != header(dim):
        raise SchemaError(f"unexpected columns {cols}")
    rec = ExperimentRecord(dim=dim)
    for cells in reader:
        if len(cells) != len(cols):
            raise SchemaError(f"row has {len(cells)} cells, expected {len(cols)}")
        x = tuple(float(c) for c in cells[3:3 + dim])
        tail = [float(c) for c in cells[3 + dim:]]
        rec.rows.append(Row(int(cells[0]), int(cells[1]), int(cells[2]), x, *tail))
    return rec


def read_csv(path):
    with open(path, encoding="utf-8") as fh:
        return parse_csv(fh.read())


def iteration_series(record):
    """Per-replicate best-so-far and wall clock at the end of each iteration.

    Returns ``(iterations, best, wall)`` where ``best`` and ``wall`` are
    (replicates, iterations) arrays; a replicate that stopped early carries
    its last value forward.
    """
    rows = record.sorted_rows()
    reps = sorted({r.replicate for r in rows})
    iters = sorted({r.iteration for r in rows})
    ri = {k: i for i, k in enumerate(reps)}
    ii = {k: i for i, k in enumerate(iters)}
    best = np.full((len(reps), len(iters)), np.nan)
    wall = np.full((len(reps), len(iters)), np.nan)
    for r in rows:
        best[ri[r.replicate], ii[r.iteration]] = r.best_so_far
        wall[ri[r.replicate], ii[r.iteration]] = r.wall_clock_s
    for arr in (best, wall):
        for j in range(1, arr.shape[1]):
            gap = np.isnan(arr[:, j])
            arr[gap, j] = arr[gap, j - 1]
    return iters, best, wall
