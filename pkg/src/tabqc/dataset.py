"""Immutable columnar dataset model, file I/O, and per-feature profiling.

A Dataset is the unit every check consumes: typed columns (numeric,
categorical, date) with explicit per-cell null masks. Datasets are frozen
after construction and safe to share across concurrent readers.

File formats
------------
CSV: comma separated, first row header, UTF-8, LF line endings. An empty
field or the literal ``null`` is a null cell. JSON lines: one object per
row; an absent key or JSON ``null`` is a null cell. Date literals are
YYYY-MM-DD in both formats.

dtype inference tries numeric first, then date, then falls back to
categorical. A numeric cell that parses as NaN or infinity maps to null
(there is no NaN sentinel distinct from null). For JSON lines the JSON
types are respected: the string "1.5" is categorical, the number 1.5 is
numeric. The inference cannot tell a categorical column of date-shaped or
number-shaped strings apart from real dates/numbers; pass an explicit
``schema`` override where that matters.
"""

from __future__ import annotations

import io
import json
import math
import re
from collections import Counter
from csv import reader as csv_reader, writer as csv_writer
from dataclasses import dataclass
from datetime import date as Date
from typing import Iterable, Iterator, Mapping, Sequence

from . import stats
from .errors import ParseError, RaggedRow, UnknownColumn
from .storage import LocalStorage, Storage, StoragePath

DTYPE_NUMERIC = "numeric"
DTYPE_CATEGORICAL = "categorical"
DTYPE_DATE = "date"
DTYPES = (DTYPE_NUMERIC, DTYPE_CATEGORICAL, DTYPE_DATE)

_ISO_DATE = re.compile(r"^\d{4}-\d{2}-\d{2}$")
_NULL_LITERALS = ("", "null")


@dataclass(frozen=True)
class Column:
    """One typed column; ``values[i] is None`` exactly where ``null_mask[i]``."""

    name: str
    dtype: str
    values: tuple
    null_mask: tuple

    def __post_init__(self):
        if self.dtype not in DTYPES:
            raise ValueError(f"unknown dtype {self.dtype!r} for column {self.name!r}")
        if len(self.values) != len(self.null_mask):
            raise ValueError(f"column {self.name!r}: values/null_mask length mismatch")
        for v, is_null in zip(self.values, self.null_mask):
            if is_null != (v is None):
                raise ValueError(f"column {self.name!r}: null mask inconsistent with values")
            if v is None:
                continue
            if self.dtype == DTYPE_NUMERIC:
                if not isinstance(v, float) or not math.isfinite(v):
                    raise ValueError(f"column {self.name!r}: numeric cells must be finite floats, got {v!r}")
            elif self.dtype == DTYPE_DATE:
                if not isinstance(v, Date):
                    raise ValueError(f"column {self.name!r}: date cells must be datetime.date, got {v!r}")
            else:
                if not isinstance(v, str):
                    raise ValueError(f"column {self.name!r}: categorical cells must be str, got {v!r}")

    @classmethod
    def of(cls, name: str, dtype: str, cells: Iterable) -> "Column":
        """Build a column from raw cells, coercing ints to floats."""
        values = []
        for v in cells:
            if v is None:
                values.append(None)
            elif dtype == DTYPE_NUMERIC:
                values.append(float(v))
            else:
                values.append(v)
        return cls(name=name, dtype=dtype, values=tuple(values),
                   null_mask=tuple(v is None for v in values))

    def __len__(self) -> int:
        return len(self.values)

    @property
    def null_count(self) -> int:
        return sum(self.null_mask)

    def non_null(self) -> list:
        return [v for v in self.values if v is not None]

    def items(self) -> Iterator[tuple[int, object]]:
        """(original row index, value) pairs over non-null cells."""
        for i, v in enumerate(self.values):
            if v is not None:
                yield i, v


@dataclass(frozen=True)
class Dataset:
    name: str
    columns: tuple
    row_count: int

    def __post_init__(self):
        seen = set()
        for col in self.columns:
            if col.name in seen:
                raise ValueError(f"duplicate column name {col.name!r}")
            seen.add(col.name)
            if len(col) != self.row_count:
                raise ValueError(
                    f"column {col.name!r} has {len(col)} cells, dataset has {self.row_count} rows")

    @classmethod
    def of(cls, name: str, columns: Sequence[Column]) -> "Dataset":
        rows = len(columns[0]) if columns else 0
        return cls(name=name, columns=tuple(columns), row_count=rows)

    @property
    def column_names(self) -> list[str]:
        return [c.name for c in self.columns]

    def column(self, name: str) -> Column:
        for c in self.columns:
            if c.name == name:
                return c
        raise UnknownColumn(f"dataset {self.name!r} has no column {name!r}")

    def has_column(self, name: str) -> bool:
        return any(c.name == name for c in self.columns)

    def numeric_columns(self) -> list[str]:
        return [c.name for c in self.columns if c.dtype == DTYPE_NUMERIC]

    def slice_rows(self, start: int, stop: int | None = None) -> "Dataset":
        """Row-window view; used to derive a previous-period slice."""
        stop = self.row_count if stop is None else stop
        cols = [Column(c.name, c.dtype, c.values[start:stop], c.null_mask[start:stop])
                for c in self.columns]
        return Dataset(name=self.name, columns=tuple(cols),
                       row_count=len(cols[0]) if cols else max(0, stop - start))

    def with_columns(self, replacements: Mapping[str, Column]) -> "Dataset":
        cols = [replacements.get(c.name, c) for c in self.columns]
        return Dataset(name=self.name, columns=tuple(cols), row_count=self.row_count)


@dataclass(frozen=True)
class NumericStats:
    mean: float
    median: float
    std_dev: float
    min: float
    max: float


@dataclass(frozen=True)
class CategoricalStats:
    unique_count: int
    top_k: tuple
    avg_string_length: float


@dataclass(frozen=True)
class FeatureProfile:
    """Summary statistics for one column.

    ``count`` is the number of observed (non-null) cells, so
    count + null_count equals the dataset row count. Date columns profile
    like categoricals over their ISO representation.
    """

    column: str
    dtype: str
    count: int
    null_count: int
    numeric: NumericStats | None = None
    categorical: CategoricalStats | None = None


def column_stats(ds: Dataset, column: str, top_k: int = 10) -> FeatureProfile:
    """Profile one column over its non-null cells.

    Medians interpolate linearly between order statistics and std_dev is the
    population (divisor n) standard deviation; every std-based check in the
    engine references the same conventions.
    """
    col = ds.column(column)
    observed = col.non_null()
    count, null_count = len(observed), col.null_count
    numeric = categorical = None
    if col.dtype == DTYPE_NUMERIC:
        if count:
            numeric = NumericStats(
                mean=stats.mean(observed),
                median=stats.median(observed),
                std_dev=stats.population_std(observed),
                min=min(observed),
                max=max(observed),
            )
    else:
        as_str = [v.isoformat() if isinstance(v, Date) else v for v in observed]
        if count:
            freq = Counter(as_str)
            ranked = sorted(freq.items(), key=lambda kv: (-kv[1], kv[0]))[:top_k]
            categorical = CategoricalStats(
                unique_count=len(freq),
                top_k=tuple(ranked),
                avg_string_length=stats.mean([float(len(s)) for s in as_str]),
            )
    return FeatureProfile(column=column, dtype=col.dtype, count=count,
                          null_count=null_count, numeric=numeric, categorical=categorical)


def profile_dataset(ds: Dataset) -> list[FeatureProfile]:
    return [column_stats(ds, name) for name in ds.column_names]


# --- parsing -----------------------------------------------------------------

def _parse_numeric(raw: str) -> float | None:
    """Float value, or None when the text is not a number. Raises on
    non-finite parses so the caller can map them to null."""
    try:
        v = float(raw)
    except ValueError:
        return None
    if not math.isfinite(v):
        raise _NonFinite()
    return v


class _NonFinite(Exception):
    pass


def _infer_csv_column(name: str, raw_cells: list) -> Column:
    """raw_cells holds str or None; try numeric, then date, else categorical."""
    observed = [c for c in raw_cells if c is not None]

    numeric_ok = bool(observed)
    parsed: list = []
    for raw in raw_cells:
        if raw is None:
            parsed.append(None)
            continue
        try:
            v = _parse_numeric(raw)
        except _NonFinite:
            parsed.append(None)  # NaN/inf on read maps to null
            continue
        if v is None:
            numeric_ok = False
            break
        parsed.append(v)
    if numeric_ok:
        return Column.of(name, DTYPE_NUMERIC, parsed)

    if observed and all(_ISO_DATE.match(c) for c in observed):
        try:
            cells = [None if c is None else Date.fromisoformat(c) for c in raw_cells]
            return Column.of(name, DTYPE_DATE, cells)
        except ValueError:
            pass  # date-shaped but invalid calendar value: fall through

    return Column.of(name, DTYPE_CATEGORICAL, raw_cells)


def _infer_jsonl_column(name: str, cells: list) -> Column:
    observed = [c for c in cells if c is not None]
    if observed and all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in observed):
        vals = [None if c is None or not math.isfinite(float(c)) else float(c) for c in cells]
        return Column.of(name, DTYPE_NUMERIC, vals)
    if observed and all(isinstance(c, str) and _ISO_DATE.match(c) for c in observed):
        try:
            return Column.of(name, DTYPE_DATE,
                             [None if c is None else Date.fromisoformat(c) for c in cells])
        except ValueError:
            pass
    as_str = [None if c is None else (c if isinstance(c, str) else json.dumps(c)) for c in cells]
    return Column.of(name, DTYPE_CATEGORICAL, as_str)


def _coerce_schema(col: Column, dtype: str) -> Column:
    """Apply an explicit schema override to an inferred column."""
    if dtype == col.dtype:
        return col
    if dtype == DTYPE_CATEGORICAL:
        cells = [None if v is None else (v.isoformat() if isinstance(v, Date) else str(v))
                 for v in col.values]
        return Column.of(col.name, dtype, cells)
    if dtype == DTYPE_NUMERIC:
        cells = []
        for v in col.values:
            if v is None:
                cells.append(None)
                continue
            try:
                parsed = _parse_numeric(str(v))
            except _NonFinite:
                cells.append(None)
                continue
            if parsed is None:
                raise ParseError(f"column {col.name!r}: cell {v!r} is not numeric")
            cells.append(parsed)
        return Column.of(col.name, dtype, cells)
    cells = []
    for v in col.values:
        if v is None:
            cells.append(None)
        elif isinstance(v, str) and _ISO_DATE.match(v):
            cells.append(Date.fromisoformat(v))
        else:
            raise ParseError(f"column {col.name!r}: cell {v!r} is not an ISO date")
    return Column.of(col.name, DTYPE_DATE, cells)


def read_table(path: StoragePath | str, format: str = "csv",
               storage: Storage | None = None,
               schema: Mapping[str, str] | None = None,
               name: str | None = None) -> Dataset:
    """Load a dataset from CSV or JSON lines.

    ``schema`` maps column names to dtypes and overrides inference for the
    named columns. A missing file raises FileMissing (a distinct error: the
    file-present check keys on it); malformed content raises ParseError with
    the offending line number.
    """
    if format not in ("csv", "jsonl"):
        raise ValueError(f"unsupported format {format!r}")
    storage = storage or LocalStorage()
    resolved = path.resolved if isinstance(path, StoragePath) else path
    text = storage.read_text(resolved)
    ds_name = name or resolved.rsplit("/", 1)[-1]

    if format == "csv":
        ds = _read_csv(text, ds_name)
    else:
        ds = _read_jsonl(text, ds_name)

    if schema:
        replaced = {}
        for col_name, dtype in schema.items():
            if ds.has_column(col_name):
                replaced[col_name] = _coerce_schema(ds.column(col_name), dtype)
        ds = ds.with_columns(replaced)
    return ds


def _read_csv(text: str, name: str) -> Dataset:
    rows = list(csv_reader(io.StringIO(text)))
    if not rows:
        raise ParseError("empty file: missing header row", line=1)
    header = rows[0]
    if len(set(header)) != len(header):
        raise ParseError("duplicate column names in header", line=1)
    cells: list[list] = [[] for _ in header]
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:  # blank line: a row whose every field is null
            row = [""] * len(header)
        if len(row) != len(header):
            raise RaggedRow(
                f"expected {len(header)} fields, got {len(row)}", line=lineno)
        for j, raw in enumerate(row):
            cells[j].append(None if raw in _NULL_LITERALS else raw)
    columns = [_infer_csv_column(h, cells[j]) for j, h in enumerate(header)]
    return Dataset(name=name, columns=tuple(columns), row_count=len(rows) - 1)


def _read_jsonl(text: str, name: str) -> Dataset:
    records = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc.msg}", line=lineno) from exc
        if not isinstance(obj, dict):
            raise ParseError("each line must be a JSON object", line=lineno)
        records.append(obj)

    keys: list[str] = []
    for rec in records:
        for k in rec:
            if k not in keys:
                keys.append(k)
    columns = [_infer_jsonl_column(k, [rec.get(k) for rec in records]) for k in keys]
    return Dataset(name=name, columns=tuple(columns), row_count=len(records))


# --- writing ------------------------------------------------------------------

def _cell_to_text(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, Date):
        return v.isoformat()
    return v


def write_table(ds: Dataset, path: StoragePath | str, format: str = "csv",
                storage: Storage | None = None) -> None:
    """Serialize a dataset; read_table(write_table(ds)) reproduces ds exactly,
    null masks included. Nulls become empty CSV fields / JSON nulls."""
    if format not in ("csv", "jsonl"):
        raise ValueError(f"unsupported format {format!r}")
    storage = storage or LocalStorage()
    resolved = path.resolved if isinstance(path, StoragePath) else path

    if format == "csv":
        buf = io.StringIO()
        w = csv_writer(buf, lineterminator="\n")
        w.writerow(ds.column_names)
        for i in range(ds.row_count):
            texts = [_cell_to_text(c.values[i]) for c in ds.columns]
            if texts == [""]:  # csv_writer would quote a lone null field
                buf.write("\n")
            else:
                w.writerow(texts)
        storage.write_text(resolved, buf.getvalue())
        return

    lines = []
    for i in range(ds.row_count):
        # explicit nulls keep the key order identical on every line, which
        # is what lets read_table recover the original column order
        rec = {c.name: (c.values[i].isoformat()
                        if isinstance(c.values[i], Date) else c.values[i])
               for c in ds.columns}
        lines.append(json.dumps(rec))
    storage.write_text(resolved, "\n".join(lines) + ("\n" if lines else ""))
