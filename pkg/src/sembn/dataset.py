"""Case-level data: loading, validation, complete-case filtering and splitting.

Datasets are immutable after construction; every operation returns a new
object.  Missing cells are represented as NaN in a float-valued frame.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .errors import (
    DegenerateSplit,
    OutOfRangeValue,
    UnknownColumn,
    UnparseableCell,
    UnreadableData,
)

DEFAULT_MISSING_CODES = ("", "NA")


@dataclass(frozen=True)
class VariableSchema:
    """Declaration of a single observed variable.

    kind is "continuous" or "ordinal"; ordinal variables carry the number
    of levels (values are expected in 1..levels).
    """

    name: str
    kind: str = "continuous"
    levels: int | None = None
    missing_codes: tuple[str, ...] = DEFAULT_MISSING_CODES

    def __post_init__(self):
        if self.kind not in ("continuous", "ordinal"):
            raise ValueError(f"unknown variable kind {self.kind!r}")
        if self.kind == "ordinal" and (self.levels is None or self.levels < 2):
            raise ValueError(f"ordinal variable {self.name!r} needs levels >= 2")


@dataclass(frozen=True)
class ObservedDataset:
    """Rectangular table of per-case responses.

    frame: float-valued DataFrame indexed by case id, NaN marks a missing
    cell.  schema order defines column order.
    """

    schema: tuple[VariableSchema, ...]
    frame: pd.DataFrame = field(repr=False)

    def __post_init__(self):
        names = [v.name for v in self.schema]
        if len(set(names)) != len(names):
            raise ValueError("duplicate variable names in schema")
        if list(self.frame.columns) != names:
            raise ValueError("frame columns do not match schema order")

    @property
    def n_cases(self) -> int:
        return len(self.frame)

    @property
    def case_ids(self) -> list:
        return list(self.frame.index)

    def variable(self, name: str) -> VariableSchema:
        for v in self.schema:
            if v.name == name:
                return v
        raise UnknownColumn(f"unknown variable {name!r}")

    def select_cases(self, ids) -> "ObservedDataset":
        return ObservedDataset(self.schema, self.frame.loc[list(ids)])


@dataclass(frozen=True)
class SplitAssignment:
    train_ids: tuple
    validation_ids: tuple
    seed: int
    fraction: float


def _parse_cell(raw: str, var: VariableSchema, row_no: int) -> float:
    text = raw.strip()
    if text in var.missing_codes:
        return math.nan
    try:
        value = float(text)
    except ValueError:
        raise UnparseableCell(
            f"cannot parse {raw!r} in column {var.name!r} at data row {row_no}",
            row=row_no, column=var.name,
        ) from None
    if var.kind == "ordinal":
        if not (value == int(value) and 1 <= value <= var.levels):
            raise OutOfRangeValue(
                f"value {raw!r} outside 1..{var.levels} in column {var.name!r} "
                f"at data row {row_no}",
                row=row_no, column=var.name,
            )
    return value


def load_csv(path, schema) -> ObservedDataset:
    """Load an RFC-4180 CSV with a mandatory header into an ObservedDataset.

    Header names must cover every schema variable (order-insensitive);
    extra file columns are an error too, so typos never pass silently.
    An optional "case_id" column provides row identifiers, otherwise rows
    are numbered 0..n-1 in file order.
    """
    schema = tuple(schema)
    by_name = {v.name: v for v in schema}
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise UnreadableData(f"cannot read data file {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise UnknownColumn(f"{path}: empty file, header required") from None
        header = [h.strip() for h in header]
        id_col = header.index("case_id") if "case_id" in header else None
        data_cols = [h for i, h in enumerate(header) if i != id_col]
        missing = sorted(set(by_name) - set(data_cols))
        if missing:
            raise UnknownColumn(f"{path}: header lacks schema variables {missing}")
        extra = sorted(set(data_cols) - set(by_name))
        if extra:
            raise UnknownColumn(f"{path}: columns {extra} not in schema")

        ids = []
        rows = []
        for row_no, record in enumerate(reader):
            if len(record) != len(header):
                raise UnparseableCell(
                    f"{path}: data row {row_no} has {len(record)} cells, "
                    f"expected {len(header)}", row=row_no,
                )
            cells = {}
            for pos, raw in enumerate(record):
                if pos == id_col:
                    continue
                name = header[pos]
                cells[name] = _parse_cell(raw, by_name[name], row_no)
            ids.append(record[id_col] if id_col is not None else row_no)
            rows.append([cells[v.name] for v in schema])

    frame = pd.DataFrame(rows, columns=[v.name for v in schema],
                         index=ids, dtype=float)
    return ObservedDataset(schema, frame)


def complete_cases(data: ObservedDataset, vars=None) -> ObservedDataset:
    """Rows with no missing cell among `vars` (default: all), order preserved."""
    names = [v.name for v in data.schema] if vars is None else list(vars)
    for name in names:
        data.variable(name)  # raises UnknownColumn
    mask = data.frame[names].notna().all(axis=1)
    return ObservedDataset(data.schema, data.frame.loc[mask])


def split(data: ObservedDataset, fraction: float, seed: int) -> SplitAssignment:
    """Deterministic random train/validation partition of the case ids.

    |train| = round(fraction * n) with round-half-to-even; sampling is
    without replacement using numpy's PCG64 generator, so the assignment
    is reproducible from (seed, fraction, id order) alone.
    """
    if not 0.0 < fraction < 1.0:
        raise DegenerateSplit(f"fraction must be in (0,1), got {fraction}")
    ids = data.case_ids
    n = len(ids)
    n_train = round(fraction * n)
    if n_train == 0 or n_train == n:
        raise DegenerateSplit(f"fraction {fraction} leaves an empty side for n={n}")
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    train = tuple(ids[i] for i in sorted(order[:n_train]))
    validation = tuple(ids[i] for i in sorted(order[n_train:]))
    return SplitAssignment(train, validation, seed=seed, fraction=fraction)


def to_csv(data: ObservedDataset, path, missing_code="NA") -> None:
    """Serialize a dataset back to CSV; inverse of load_csv cell-for-cell."""
    frame = data.frame
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["case_id"] + [v.name for v in data.schema])
        for case_id, row in frame.iterrows():
            cells = [case_id]
            for v in data.schema:
                x = row[v.name]
                if math.isnan(x):
                    cells.append(missing_code)
                elif v.kind == "ordinal":
                    cells.append(int(x))
                else:
                    cells.append(repr(float(x)))
            writer.writerow(cells)
