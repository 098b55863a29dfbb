"""Survey schema: variable declarations and their category vocabularies.

A schema is the contract a coded dataset is validated against.  Each
variable declares its measurement kind, the analysis group it belongs to,
an ordered category list, and which of those categories are "uncertain"
answers ("Don't know", "Prefer not to answer", ...) that carry no
substantive information but are kept and tracked rather than treated as
missing.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .errors import DataValidationError

VARIABLE_KINDS = ("categorical", "likert", "numeric-band")
VARIABLE_GROUPS = ("demographic", "financial", "psychological", "target")


@dataclass(frozen=True)
class VariableSpec:
    """Declaration of a single survey variable.

    Parameters
    ----------
    name : str
        Column name, unique within a schema.
    kind : str
        One of ``"categorical"``, ``"likert"`` (ordered agreement scale) or
        ``"numeric-band"`` (banded quantity such as an income bracket).
    group : str
        One of ``"demographic"``, ``"financial"``, ``"psychological"``,
        ``"target"``.
    categories : tuple of str
        Ordered category labels.  For likert variables the order is the
        scale order; for numeric bands the order is the band order.
    uncertain_codes : tuple of str
        Subset of ``categories`` flagged as non-informative answers.
    """

    name: str
    kind: str
    group: str
    categories: tuple[str, ...]
    uncertain_codes: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.name:
            raise DataValidationError("variable name must be non-empty")
        if self.kind not in VARIABLE_KINDS:
            raise DataValidationError(
                f"variable {self.name!r}: unknown kind {self.kind!r}; "
                f"expected one of {VARIABLE_KINDS}"
            )
        if self.group not in VARIABLE_GROUPS:
            raise DataValidationError(
                f"variable {self.name!r}: unknown group {self.group!r}; "
                f"expected one of {VARIABLE_GROUPS}"
            )
        object.__setattr__(self, "categories", tuple(self.categories))
        object.__setattr__(self, "uncertain_codes", tuple(self.uncertain_codes))
        if len(self.categories) < 2:
            raise DataValidationError(
                f"variable {self.name!r} needs at least 2 categories"
            )
        if len(set(self.categories)) != len(self.categories):
            raise DataValidationError(
                f"variable {self.name!r} has duplicate categories"
            )
        unknown = set(self.uncertain_codes) - set(self.categories)
        if unknown:
            raise DataValidationError(
                f"variable {self.name!r}: uncertain codes {sorted(unknown)} "
                "are not declared categories"
            )

    @property
    def n_categories(self) -> int:
        return len(self.categories)

    def category_index(self, label: str) -> int:
        try:
            return self.categories.index(label)
        except ValueError:
            raise DataValidationError(
                f"variable {self.name!r}: unknown category label {label!r}"
            ) from None

    def uncertain_indices(self) -> frozenset[int]:
        return frozenset(self.categories.index(c) for c in self.uncertain_codes)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "kind": self.kind,
            "group": self.group,
            "categories": list(self.categories),
            "uncertain_codes": list(self.uncertain_codes),
        }


@dataclass(frozen=True)
class SurveySchema:
    """Ordered collection of :class:`VariableSpec` with exactly one target."""

    variables: tuple[VariableSpec, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        names = [v.name for v in self.variables]
        if len(set(names)) != len(names):
            dupes = sorted({n for n in names if names.count(n) > 1})
            raise DataValidationError(f"duplicate variable names: {dupes}")
        targets = [v for v in self.variables if v.group == "target"]
        if len(targets) != 1:
            raise DataValidationError(
                f"schema must declare exactly one target variable, found "
                f"{len(targets)}"
            )

    def __iter__(self):
        return iter(self.variables)

    def __len__(self):
        return len(self.variables)

    @property
    def names(self) -> list[str]:
        return [v.name for v in self.variables]

    @property
    def target(self) -> VariableSpec:
        return next(v for v in self.variables if v.group == "target")

    def __getitem__(self, name: str) -> VariableSpec:
        for v in self.variables:
            if v.name == name:
                return v
        raise DataValidationError(f"unknown variable {name!r}")

    def __contains__(self, name: str) -> bool:
        return any(v.name == name for v in self.variables)

    def group_names(self, group: str) -> list[str]:
        """Names of all variables in ``group``, in schema order."""
        if group not in VARIABLE_GROUPS:
            raise DataValidationError(f"unknown group {group!r}")
        return [v.name for v in self.variables if v.group == group]

    def index_of(self, name: str) -> int:
        for i, v in enumerate(self.variables):
            if v.name == name:
                return i
        raise DataValidationError(f"unknown variable {name!r}")

    def to_dict(self) -> dict:
        return {"variables": [v.to_dict() for v in self.variables]}


def load_schema(path) -> SurveySchema:
    """Read a schema from a JSON file (see ``save_schema`` for the layout)."""
    with open(path, encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as e:
            raise DataValidationError(f"schema file {path}: invalid JSON ({e})")
    if not isinstance(raw, dict) or "variables" not in raw:
        raise DataValidationError(
            f"schema file {path}: expected an object with a 'variables' list"
        )
    specs = []
    for entry in raw["variables"]:
        try:
            specs.append(
                VariableSpec(
                    name=entry["name"],
                    kind=entry["kind"],
                    group=entry["group"],
                    categories=tuple(entry["categories"]),
                    uncertain_codes=tuple(entry.get("uncertain_codes", ())),
                )
            )
        except KeyError as e:
            raise DataValidationError(
                f"schema file {path}: variable entry missing key {e}"
            )
    return SurveySchema(tuple(specs))


def save_schema(schema: SurveySchema, path) -> None:
    """Write a schema as deterministic, diff-friendly JSON."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(schema.to_dict(), fh, indent=2)
        fh.write("\n")
