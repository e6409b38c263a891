"""Repeated train/test benchmark across model modes."""

from __future__ import annotations

import csv
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import IO, Iterable, Sequence

import numpy as np

from .data import Dataset, RawTable, train_test
from .metrics import accuracy, paired_one_sided_t, smse
from .model import FitSpec, fit, predict
from .rotation import RandomRotation, RotationSpec
from .sampler import Task
from .tree import Mode

COLUMNS = ("split", "mode", "metric", "value", "seconds")


@dataclass
class BenchRow:
    split: str
    mode: str
    metric: str
    value: float
    seconds: float


def parse_mode(text: str) -> tuple[Mode, int | None]:
    """``oblique``, ``axis``, or ``rotation:R``."""
    if text == "oblique":
        return Mode.OBLIQUE, None
    if text == "axis":
        return Mode.AXIS_ALIGNED, None
    if text.startswith("rotation:"):
        R = int(text.split(":", 1)[1])
        if R < 1:
            raise ValueError("rotation count must be positive")
        return Mode.AXIS_ALIGNED, R
    raise ValueError(f"unknown mode {text!r}; use oblique, axis or rotation:R")


def _rotated(train: Dataset, test: Dataset, R: int, seed: int) -> tuple[Dataset, Dataset]:
    rot = RandomRotation.fit(train.x_cont, RotationSpec(R, seed))
    tr = Dataset(rot.transform(train.x_cont), train.x_cat, train.y, train.n_levels,
                 train.standardizer, train.y_raw)
    te = Dataset(rot.transform(test.x_cont), test.x_cat, test.y, test.n_levels,
                 test.standardizer, test.y_raw)
    return tr, te


def run_job(
    table: RawTable,
    task: Task,
    split_index: int,
    mode_text: str,
    fraction: float,
    seed: int,
    spec_kwargs: dict,
) -> BenchRow:
    start = time.perf_counter()
    split_seed = seed + split_index
    train, test = train_test(table, task.value, fraction, split_seed)
    mode, R = parse_mode(mode_text)
    if R is not None:
        train, test = _rotated(train, test, R, split_seed)
    spec = FitSpec(task=task, mode=mode, seed=split_seed, **spec_kwargs)
    pred = predict(fit(train, spec), test)
    if task is Task.REGRESSION:
        metric, value = "smse", smse(test.y_raw, pred.mean, float(train.y_raw.mean()))
    else:
        metric, value = "accuracy", accuracy(test.y_raw.astype(np.int64), pred.label)
    return BenchRow(str(split_index), mode_text, metric, value, time.perf_counter() - start)


def run_bench(
    table: RawTable,
    task: Task | str = Task.REGRESSION,
    modes: Sequence[str] = ("oblique", "axis"),
    splits: int = 20,
    fraction: float = 0.75,
    seed: int = 0,
    jobs: int = 1,
    **spec_kwargs,
) -> list[BenchRow]:
    """Per-(split, mode) rows followed by summary rows.

    `spec_kwargs` are forwarded to `FitSpec` (e.g. ``M``, ``burn``, ``kept``).
    """
    task = Task(task)
    for m in modes:
        parse_mode(m)
    grid = [(s, m) for s in range(splits) for m in modes]
    args = [(table, task, s, m, fraction, seed, spec_kwargs) for s, m in grid]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(run_job, *zip(*args)))
    else:
        rows = [run_job(*a) for a in args]
    return rows + summarize(rows, modes)


def summarize(rows: Iterable[BenchRow], modes: Sequence[str]) -> list[BenchRow]:
    """Mean metric per mode and, when oblique ran, one-sided paired p-values
    for oblique having lower error than each other mode."""
    rows = list(rows)
    by_mode = {m: sorted((r for r in rows if r.mode == m), key=lambda r: int(r.split)) for m in modes}
    out = []
    for m in modes:
        rs = by_mode[m]
        if not rs:
            continue
        out.append(BenchRow("summary", m, f"mean_{rs[0].metric}",
                            float(np.mean([r.value for r in rs])), sum(r.seconds for r in rs)))

    def err(r: BenchRow) -> float:
        return r.value if r.metric == "smse" else 1.0 - r.value

    base = by_mode.get("oblique")
    if base and len(base) >= 2:
        for m in modes:
            if m == "oblique" or len(by_mode[m]) != len(base):
                continue
            test = paired_one_sided_t([err(r) for r in base], [err(r) for r in by_mode[m]])
            out.append(BenchRow("summary", m, "p_oblique_better", test.pvalue, 0.0))
    return out


def write_rows(rows: Iterable[BenchRow], fh: IO[str] | None = None) -> None:
    fh = fh or sys.stdout
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in rows:
        w.writerow([r.split, r.mode, r.metric, format(r.value, ".10g"), format(r.seconds, ".3f")])
