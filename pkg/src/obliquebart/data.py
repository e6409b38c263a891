"""CSV ingestion, standardization to the sampler's coordinates, and splitting.

Continuous predictors are mapped to [-1, 1] with training min/max; categorical
predictors become 0-based level codes in first-appearance order; a regression
outcome is centered on its midrange and divided by its half-range.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Mapping

import numpy as np

log = logging.getLogger(__name__)

ROLES = ("continuous", "categorical", "outcome", "ignore")
UNSEEN = -1


class DataError(ValueError):
    """Malformed input file or schema."""


@dataclass
class RawTable:
    """Parsed but unscaled data, columns grouped by role."""

    cont_names: list[str]
    x_cont: np.ndarray
    cat_names: list[str] = field(default_factory=list)
    x_cat: np.ndarray | None = None  # object array of raw labels
    outcome_name: str | None = None
    y: np.ndarray | None = None

    def __post_init__(self):
        self.x_cont = np.asarray(self.x_cont, dtype=float)
        if self.x_cont.ndim != 2 or self.x_cont.shape[1] != len(self.cont_names):
            raise DataError("x_cont must be a 2-D array with one column per continuous name")
        if self.x_cat is None:
            self.x_cat = np.empty((self.n, 0), dtype=object)
        self.x_cat = np.asarray(self.x_cat, dtype=object).reshape(self.n, len(self.cat_names))
        if self.y is not None:
            self.y = np.asarray(self.y, dtype=float)

    @property
    def n(self) -> int:
        return self.x_cont.shape[0]

    def levels(self) -> list[list[str]]:
        """Distinct labels of each categorical column, in first-appearance order."""
        return [list(dict.fromkeys(self.x_cat[:, j])) for j in range(len(self.cat_names))]

    def take(self, rows: np.ndarray) -> RawTable:
        return RawTable(
            list(self.cont_names),
            self.x_cont[rows],
            list(self.cat_names),
            self.x_cat[rows],
            self.outcome_name,
            None if self.y is None else self.y[rows],
        )

    def to_csv(self, dest: str | Path | IO[str]) -> None:
        """Write as CSV to a path or an open text stream."""
        if not hasattr(dest, "write"):
            with open(dest, "w", newline="", encoding="utf-8") as fh:
                self.to_csv(fh)
            return
        header = [*self.cont_names, *self.cat_names]
        if self.outcome_name is not None:
            header.append(self.outcome_name)
        w = csv.writer(dest, lineterminator="\n")
        w.writerow(header)
        for i in range(self.n):
            row = [format(v, ".17g") for v in self.x_cont[i]]
            row += [str(v) for v in self.x_cat[i]]
            if self.y is not None:
                row.append(format(self.y[i], ".17g"))
            w.writerow(row)


def load_csv(
    path: str | Path,
    roles: Mapping[str, str] | None = None,
    default_role: str = "continuous",
    require_outcome: bool = True,
) -> RawTable:
    """Read a comma-delimited UTF-8 file with a header row.

    Parameters
    ----------
    path
        CSV file.
    roles
        Column name to role (one of `ROLES`); unlisted columns get
        `default_role`.
    require_outcome
        Raise if no column has the outcome role.
    """
    roles = dict(roles or {})
    for name, role in roles.items():
        if role not in ROLES:
            raise DataError(f"unknown role {role!r} for column {name!r}")
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DataError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if len(set(header)) != len(header):
        dupes = sorted({h for h in header if header.count(h) > 1})
        raise DataError(f"{path}: duplicate column names {dupes}")
    missing = [name for name in roles if name not in header]
    if missing:
        raise DataError(f"{path}: missing columns {missing}")
    body = rows[1:]
    if not body:
        raise DataError(f"{path}: no data rows")
    col_roles = [roles.get(h, default_role) for h in header]
    outcomes = [h for h, r in zip(header, col_roles) if r == "outcome"]
    if len(outcomes) > 1:
        raise DataError(f"{path}: more than one outcome column {outcomes}")
    if require_outcome and not outcomes:
        raise DataError(f"{path}: no outcome column")

    cont_idx = [j for j, r in enumerate(col_roles) if r == "continuous"]
    cat_idx = [j for j, r in enumerate(col_roles) if r == "categorical"]
    out_idx = [j for j, r in enumerate(col_roles) if r == "outcome"]
    n = len(body)
    x_cont = np.empty((n, len(cont_idx)))
    x_cat = np.empty((n, len(cat_idx)), dtype=object)
    y = np.empty(n) if out_idx else None

    def number(i: int, j: int, cell: str) -> float:
        try:
            return float(cell)
        except ValueError:
            raise DataError(
                f"{path}: row {i + 2}, column {header[j]!r}: cannot parse {cell!r} as a number"
            ) from None

    for i, row in enumerate(body):
        if len(row) != len(header):
            raise DataError(f"{path}: row {i + 2} has {len(row)} cells, expected {len(header)}")
        for j, cell in enumerate(row):
            if col_roles[j] != "ignore" and cell.strip() == "":
                raise DataError(f"{path}: row {i + 2}, column {header[j]!r}: missing value")
        for k, j in enumerate(cont_idx):
            x_cont[i, k] = number(i, j, row[j])
        for k, j in enumerate(cat_idx):
            x_cat[i, k] = row[j].strip()
        if out_idx:
            y[i] = number(i, out_idx[0], row[out_idx[0]])
    return RawTable(
        [header[j] for j in cont_idx],
        x_cont,
        [header[j] for j in cat_idx],
        x_cat,
        header[out_idx[0]] if out_idx else None,
        y,
    )


@dataclass
class Standardizer:
    """Training-set statistics that map raw tables to sampler coordinates."""

    cont_names: list[str]
    x_min: np.ndarray
    x_max: np.ndarray
    cat_names: list[str]
    levels: list[list[str]]
    outcome_name: str | None = None
    task: str = "regression"
    y_center: float = 0.0
    y_scale: float = 1.0

    @classmethod
    def fit(cls, table: RawTable, task: str = "regression") -> Standardizer:
        if table.n == 0:
            raise DataError("cannot standardize an empty table")
        x_min = table.x_cont.min(axis=0) if table.cont_names else np.zeros(0)
        x_max = table.x_cont.max(axis=0) if table.cont_names else np.zeros(0)
        for name, lo, hi in zip(table.cont_names, x_min, x_max):
            if lo == hi:
                log.warning("continuous column %r is constant; mapped to 0", name)
        y_center, y_scale = 0.0, 1.0
        if table.y is not None and task == "regression":
            lo, hi = float(table.y.min()), float(table.y.max())
            y_center = 0.5 * (lo + hi)
            y_scale = 0.5 * (hi - lo) if hi > lo else 1.0
        elif table.y is not None and not np.isin(table.y, (0.0, 1.0)).all():
            raise DataError("classification outcome must be coded 0/1")
        return cls(
            list(table.cont_names),
            np.asarray(x_min, dtype=float),
            np.asarray(x_max, dtype=float),
            list(table.cat_names),
            table.levels(),
            table.outcome_name,
            task,
            y_center,
            y_scale,
        )

    @property
    def n_levels(self) -> tuple[int, ...]:
        return tuple(len(lv) for lv in self.levels)

    def scale_x(self, x_cont: np.ndarray) -> np.ndarray:
        span = self.x_max - self.x_min
        safe = np.where(span > 0, span, 1.0)
        z = 2.0 * (np.asarray(x_cont, dtype=float) - self.x_min) / safe - 1.0
        return np.where(span > 0, z, 0.0)

    def unscale_x(self, z: np.ndarray) -> np.ndarray:
        return self.x_min + (np.asarray(z) + 1.0) * 0.5 * (self.x_max - self.x_min)

    def encode(self, x_cat: np.ndarray) -> np.ndarray:
        """Level codes; labels not seen in training become `UNSEEN` (-1)."""
        x_cat = np.asarray(x_cat, dtype=object)
        x_cat = x_cat.reshape(x_cat.shape[0], len(self.cat_names))
        out = np.empty(x_cat.shape, dtype=np.int64)
        for j, levels in enumerate(self.levels):
            lookup = {v: k for k, v in enumerate(levels)}
            out[:, j] = [lookup.get(v, UNSEEN) for v in x_cat[:, j]]
        return out

    def scale_y(self, y: np.ndarray) -> np.ndarray:
        return (np.asarray(y, dtype=float) - self.y_center) / self.y_scale

    def unscale_y(self, z: np.ndarray) -> np.ndarray:
        return self.y_center + self.y_scale * np.asarray(z, dtype=float)

    def transform(self, table: RawTable) -> Dataset:
        if table.cont_names != self.cont_names or table.cat_names != self.cat_names:
            raise DataError(
                f"schema mismatch: expected continuous {self.cont_names} and categorical "
                f"{self.cat_names}, got {table.cont_names} and {table.cat_names}"
            )
        y = None
        if table.y is not None:
            y = self.scale_y(table.y) if self.task == "regression" else table.y.copy()
        return Dataset(
            self.scale_x(table.x_cont),
            self.encode(table.x_cat),
            y,
            self.n_levels,
            self,
            None if table.y is None else table.y.copy(),
        )

    def to_dict(self) -> dict:
        return {
            "cont_names": self.cont_names,
            "x_min": [float(v) for v in self.x_min],
            "x_max": [float(v) for v in self.x_max],
            "cat_names": self.cat_names,
            "levels": self.levels,
            "outcome_name": self.outcome_name,
            "task": self.task,
            "y_center": self.y_center,
            "y_scale": self.y_scale,
        }

    @classmethod
    def from_dict(cls, d: dict) -> Standardizer:
        d = dict(d)
        d["x_min"] = np.array(d["x_min"], dtype=float)
        d["x_max"] = np.array(d["x_max"], dtype=float)
        return cls(**d)


@dataclass
class Dataset:
    """Standardized design matrix and outcome, ready for the sampler."""

    x_cont: np.ndarray
    x_cat: np.ndarray
    y: np.ndarray | None
    n_levels: tuple[int, ...]
    standardizer: Standardizer | None = None
    y_raw: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.x_cont.shape[0]

    @property
    def p_cont(self) -> int:
        return self.x_cont.shape[1]

    @property
    def p_cat(self) -> int:
        return len(self.n_levels)


def standardize(table: RawTable, task: str = "regression") -> Dataset:
    return Standardizer.fit(table, task).transform(table)


def split(
    table: RawTable, fraction: float = 0.75, seed: int | None = None
) -> tuple[RawTable, RawTable]:
    """Uniform random train/test partition of the rows."""
    if not 0 < fraction < 1:
        raise ValueError("fraction must lie strictly between 0 and 1")
    n = table.n
    n_train = int(round(fraction * n))
    if n_train == 0 or n_train == n:
        raise DataError(f"a {fraction} split of {n} rows leaves one side empty")
    perm = np.random.default_rng(seed).permutation(n)
    return table.take(np.sort(perm[:n_train])), table.take(np.sort(perm[n_train:]))


def train_test(
    table: RawTable, task: str = "regression", fraction: float = 0.75, seed: int | None = None
) -> tuple[Dataset, Dataset]:
    """Split, then standardize both parts with the training statistics."""
    train, test = split(table, fraction, seed)
    scaler = Standardizer.fit(train, task)
    return scaler.transform(train), scaler.transform(test)
