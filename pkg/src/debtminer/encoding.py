"""Numeric encodings of coded survey variables.

Three schemes cover the modelling needs: full indicator matrices for
homogeneity analysis, reference-dropped indicators for regression-style
models, and centered ordinal scores for likert batteries.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import Dataset
from .errors import EncodingError

FULL_INDICATOR = "full-indicator"
REFERENCE_DROPPED = "reference-dropped"
LIKERT_NUMERIC = "likert-numeric"
ENCODING_SCHEMES = (FULL_INDICATOR, REFERENCE_DROPPED, LIKERT_NUMERIC)


@dataclass(frozen=True)
class EncodedMatrix:
    """Dense numeric design matrix plus provenance of every column.

    ``columns`` holds one ``(variable, category)`` pair per matrix column;
    for the likert scheme the category slot is ``None`` because the whole
    variable collapses to a single score column.
    """

    values: np.ndarray
    columns: tuple[tuple[str, str | None], ...]
    scheme: str

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "columns", tuple(self.columns))
        if values.ndim != 2:
            raise EncodingError("values must be 2-D")
        if values.shape[1] != len(self.columns):
            raise EncodingError("column metadata does not match matrix width")
        if self.scheme not in ENCODING_SCHEMES:
            raise EncodingError(f"unknown scheme {self.scheme!r}")

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_columns(self) -> int:
        return self.values.shape[1]

    def column_names(self) -> list[str]:
        """Flat names, ``variable`` alone or ``variable_category``."""
        return [
            v if c is None else f"{v}_{c}" for v, c in self.columns
        ]

    def variable_slices(self) -> dict[str, slice]:
        """Contiguous column range of each encoded variable."""
        out: dict[str, slice] = {}
        start = 0
        prev = None
        for i, (v, _) in enumerate(self.columns):
            if v != prev:
                if prev is not None:
                    out[prev] = slice(start, i)
                start, prev = i, v
        if prev is not None:
            out[prev] = slice(start, len(self.columns))
        return out


def encode(data: Dataset, variables: list[str], scheme: str) -> EncodedMatrix:
    """Encode the named variables, in the order given.

    ``full-indicator`` yields one 0/1 column per category.
    ``reference-dropped`` omits each variable's first category so the
    columns are linearly independent alongside an intercept.
    ``likert-numeric`` maps a k-point likert item to centered scores
    ``1..k`` minus their midpoint; it rejects unordered categorical
    variables and any row holding an uncertain answer, since those codes
    carry no scale position.
    """
    if scheme not in ENCODING_SCHEMES:
        raise EncodingError(f"unknown scheme {scheme!r}")
    unknown = [v for v in variables if v not in data.schema]
    if unknown:
        raise EncodingError(f"variables not in schema: {unknown}")
    if not variables:
        raise EncodingError("no variables selected")

    blocks: list[np.ndarray] = []
    columns: list[tuple[str, str | None]] = []
    for name in variables:
        var = data.schema[name]
        col = data.column(name)
        if scheme == LIKERT_NUMERIC:
            if var.kind == "categorical":
                raise EncodingError(
                    f"variable {name!r} is categorical; likert-numeric "
                    "encoding needs an ordered scale"
                )
            bad = data.uncertain_mask(name)
            if bad.any():
                row = int(np.argmax(bad))
                raise EncodingError(
                    f"variable {name!r}, row {row + 1}: uncertain answer "
                    f"{var.categories[col[row]]!r} has no scale position"
                )
            k = var.n_categories
            scores = col + 1.0 - (k + 1) / 2.0
            blocks.append(scores[:, None])
            columns.append((name, None))
        else:
            ind = np.zeros((data.n_rows, var.n_categories))
            ind[np.arange(data.n_rows), col] = 1.0
            cats = var.categories
            if scheme == REFERENCE_DROPPED:
                ind = ind[:, 1:]
                cats = cats[1:]
            blocks.append(ind)
            columns.extend((name, c) for c in cats)
    return EncodedMatrix(
        values=np.hstack(blocks), columns=tuple(columns), scheme=scheme
    )


def drop_empty_categories(em: EncodedMatrix) -> EncodedMatrix:
    """Remove indicator columns no row selects.

    Row sums per variable stay 1, so the result is still a valid
    full-indicator encoding; scale columns are never dropped.
    """
    if em.scheme == LIKERT_NUMERIC:
        return em
    keep = em.values.sum(axis=0) > 0
    if keep.all():
        return em
    return EncodedMatrix(
        values=em.values[:, keep],
        columns=tuple(c for c, k in zip(em.columns, keep) if k),
        scheme=em.scheme,
    )
