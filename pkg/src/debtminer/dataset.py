"""Coded survey datasets: loading, exporting, uncertain-answer bookkeeping,
systematic-nonresponse removal, and target labelling.

Rows are stored as integer category indices against a
:class:`~debtminer.schema.SurveySchema`; label text only exists at the CSV
boundary.  Uncertain answers are ordinary categories here -- they are
retained and counted, never imputed.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import DataValidationError
from .schema import SurveySchema

TWO_CLASS = "two-class"
THREE_CLASS = "three-class"
NO_DEBT = "NoDebt"
IN_DEBT = "InDebt"
LOW_DEBT = "Low"
HIGH_DEBT = "High"


@dataclass(frozen=True)
class Dataset:
    """Rectangular table of coded responses.

    ``codes`` is an ``n x m`` int array; ``codes[i, j]`` indexes a category
    of ``schema.variables[j]``.  Instances are immutable; operations return
    new datasets.
    """

    schema: SurveySchema
    codes: np.ndarray
    row_ids: tuple[str, ...]

    def __post_init__(self):
        codes = np.asarray(self.codes, dtype=np.int64)
        codes.setflags(write=False)
        object.__setattr__(self, "codes", codes)
        object.__setattr__(self, "row_ids", tuple(self.row_ids))
        if codes.ndim != 2:
            raise DataValidationError("codes must be a 2-D array")
        n, m = codes.shape
        if n == 0:
            raise DataValidationError("dataset must contain at least one row")
        if m != len(self.schema):
            raise DataValidationError(
                f"row width {m} does not match schema ({len(self.schema)} "
                "variables)"
            )
        if len(self.row_ids) != n:
            raise DataValidationError("row_ids length must equal row count")
        for j, var in enumerate(self.schema):
            col = codes[:, j]
            if col.min() < 0 or col.max() >= var.n_categories:
                bad = int(np.argmax((col < 0) | (col >= var.n_categories)))
                raise DataValidationError(
                    f"row {bad + 1}, variable {var.name!r}: code "
                    f"{int(col[bad])} outside 0..{var.n_categories - 1}"
                )

    @property
    def n_rows(self) -> int:
        return self.codes.shape[0]

    @property
    def n_variables(self) -> int:
        return self.codes.shape[1]

    def column(self, name: str) -> np.ndarray:
        return self.codes[:, self.schema.index_of(name)]

    def labels_column(self, name: str) -> list[str]:
        var = self.schema[name]
        return [var.categories[c] for c in self.column(name)]

    def uncertain_mask(self, name: str) -> np.ndarray:
        """Boolean mask of rows whose answer to ``name`` is an uncertain code."""
        var = self.schema[name]
        idx = var.uncertain_indices()
        if not idx:
            return np.zeros(self.n_rows, dtype=bool)
        return np.isin(self.column(name), sorted(idx))

    def uncertain_counts(self) -> dict[str, int]:
        """Per-variable count of uncertain answers, in schema order."""
        return {v.name: int(self.uncertain_mask(v.name).sum()) for v in self.schema}

    def select_rows(self, mask_or_index) -> "Dataset":
        idx = np.asarray(mask_or_index)
        if idx.dtype == bool:
            idx = np.flatnonzero(idx)
        return Dataset(
            schema=self.schema,
            codes=self.codes[idx],
            row_ids=tuple(self.row_ids[i] for i in idx),
        )


def load_dataset(schema_path, csv_path) -> Dataset:
    """Load a coded dataset from a schema JSON file and a labelled CSV.

    The CSV header must match the schema variable names exactly (same names,
    same order) and every cell must be a declared category label of its
    column.  Violations raise :class:`DataValidationError` naming the row
    and column.
    """
    from .schema import load_schema

    schema = load_schema(schema_path)
    return read_csv(schema, csv_path)


def read_csv(schema: SurveySchema, csv_path) -> Dataset:
    """Load a labelled CSV against an already-parsed schema."""
    with open(csv_path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataValidationError(f"{csv_path}: empty file")
        if header != schema.names:
            unknown = [h for h in header if h not in schema]
            if unknown:
                raise DataValidationError(
                    f"{csv_path}: unknown column(s) {unknown}"
                )
            raise DataValidationError(
                f"{csv_path}: header does not match schema order; expected "
                f"{schema.names}, got {header}"
            )
        lookup = [
            {c: i for i, c in enumerate(v.categories)} for v in schema
        ]
        rows = []
        for r, record in enumerate(reader, start=1):
            if len(record) != len(schema):
                raise DataValidationError(
                    f"{csv_path}: row {r} has {len(record)} cells, expected "
                    f"{len(schema)}"
                )
            coded = np.empty(len(schema), dtype=np.int64)
            for j, cell in enumerate(record):
                try:
                    coded[j] = lookup[j][cell]
                except KeyError:
                    raise DataValidationError(
                        f"{csv_path}: row {r}, column "
                        f"{schema.names[j]!r}: unknown category label "
                        f"{cell!r}"
                    ) from None
            rows.append(coded)
    if not rows:
        raise DataValidationError(f"{csv_path}: no data rows")
    return Dataset(
        schema=schema,
        codes=np.vstack(rows),
        row_ids=tuple(str(i) for i in range(1, len(rows) + 1)),
    )


def write_csv(data: Dataset, csv_path) -> None:
    """Export to labelled CSV; ``read_csv`` round-trips it cell-for-cell."""
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(data.schema.names)
        cats = [v.categories for v in data.schema]
        for row in data.codes:
            writer.writerow([cats[j][c] for j, c in enumerate(row)])


@dataclass(frozen=True)
class RemovalReport:
    """Outcome of :func:`drop_systematic_nonresponse`."""

    n_before: int
    n_after: int
    removed_row_ids: tuple[str, ...]
    uncertain_before: dict[str, int]
    uncertain_after: dict[str, int]

    @property
    def n_removed(self) -> int:
        return self.n_before - self.n_after


def drop_systematic_nonresponse(
    data: Dataset, watched: list[str], min_hits: int
) -> tuple[Dataset, RemovalReport]:
    """Remove rows that answered uncertainly on ``min_hits`` or more of the
    ``watched`` variables.

    This is the rule-based analogue of pruning the outlier cluster that
    systematic non-responders form in a category plot: the rows removed are
    exactly those whose uncertain-answer count over the watch-list reaches
    the threshold.  Applying the operation twice is a no-op the second time.

    Returns the reduced dataset and a :class:`RemovalReport` with the
    per-variable uncertain tallies before and after.
    """
    if min_hits < 1:
        raise DataValidationError("min_hits must be >= 1")
    unknown = [w for w in watched if w not in data.schema]
    if unknown:
        raise DataValidationError(f"watched variables not in schema: {unknown}")
    before = data.uncertain_counts()
    if watched:
        hits = np.zeros(data.n_rows, dtype=np.int64)
        for name in watched:
            hits += data.uncertain_mask(name)
        keep = hits < min_hits
    else:
        keep = np.ones(data.n_rows, dtype=bool)
    if keep.sum() < 2:
        raise DataValidationError(
            f"removal would leave {int(keep.sum())} rows (< 2); lower "
            "min_hits or shrink the watch-list"
        )
    removed_ids = tuple(
        rid for rid, k in zip(data.row_ids, keep) if not k
    )
    reduced = data.select_rows(keep) if removed_ids else data
    report = RemovalReport(
        n_before=data.n_rows,
        n_after=reduced.n_rows,
        removed_row_ids=removed_ids,
        uncertain_before=before,
        uncertain_after=reduced.uncertain_counts(),
    )
    return reduced, report


@dataclass(frozen=True)
class TargetLabelling:
    """Class labels derived from the banded debt target variable.

    ``mode`` is ``"two-class"`` (InDebt / NoDebt) or ``"three-class"``
    (NoDebt / Low / High).  By convention the target's first category is the
    no-debt band; higher categories are increasing debt bands.  In
    three-class mode, bands at or below ``debt_split`` are Low and bands
    above it are High.
    """

    mode: str
    labels: tuple[str, ...]
    debt_split: int | None

    def __post_init__(self):
        if self.mode not in (TWO_CLASS, THREE_CLASS):
            raise DataValidationError(f"unknown labelling mode {self.mode!r}")
        object.__setattr__(self, "labels", tuple(self.labels))

    def counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for lab in self.labels:
            out[lab] = out.get(lab, 0) + 1
        return out

    def as_array(self) -> np.ndarray:
        return np.asarray(self.labels, dtype=object)


def build_labels(
    data: Dataset, mode: str, debt_split: int | str = "median"
) -> TargetLabelling:
    """Label every row from the target variable.

    ``debt_split`` applies in three-class mode only: either an explicit band
    index (1-based among the debt bands) or ``"median"``, which uses the
    median band of the rows that carry any debt.
    """
    target = data.schema.target
    codes = data.column(target.name)
    if target.uncertain_indices():
        raise DataValidationError(
            f"target variable {target.name!r} must not declare uncertain codes"
        )
    if mode == TWO_CLASS:
        labels = tuple(NO_DEBT if c == 0 else IN_DEBT for c in codes)
        return TargetLabelling(mode=mode, labels=labels, debt_split=None)
    if mode != THREE_CLASS:
        raise DataValidationError(f"unknown labelling mode {mode!r}")
    positive = codes[codes > 0]
    if positive.size == 0:
        raise DataValidationError("no in-debt rows; cannot split Low/High")
    if debt_split == "median":
        split = int(np.median(positive))
        # A median in the top observed band would leave High empty.
        split = min(split, int(positive.max()) - 1)
        split = max(split, 1)
    else:
        split = int(debt_split)
    if (positive > split).sum() == 0 or (positive <= split).sum() == 0:
        raise DataValidationError(
            f"debt_split={split} leaves an empty Low or High class"
        )
    labels = tuple(
        NO_DEBT if c == 0 else (LOW_DEBT if c <= split else HIGH_DEBT)
        for c in codes
    )
    return TargetLabelling(mode=mode, labels=labels, debt_split=split)
