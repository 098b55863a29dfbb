"""Config-driven batch pipeline.

Five file-to-file stages: ``synth`` writes a survey shaped like the real
collection, ``clean`` screens category plots and removes systematic
non-responders, ``factors`` reduces the item battery to scored factors,
``evaluate`` runs the stepwise model comparison, and ``report`` stitches
the emitted tables into one document.  Stages communicate through files
only, so any stage can be rerun in place, and every number a stage emits
is fixed by (config, seed, input bytes).
"""

import csv
import hashlib
import io
import json
import time
from configparser import ConfigParser
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from . import __version__
from .classifiers import (
    MultinomialLogit, NeuralNetClassifier, RandomForest, gini_importance,
    tune_neural_net,
)
from .dataset import (
    Dataset, build_labels, drop_systematic_nonresponse, read_csv, write_csv,
)
from .encoding import (
    FULL_INDICATOR, LIKERT_NUMERIC, REFERENCE_DROPPED, drop_empty_categories,
    encode,
)
from .errors import (
    ConfigError, DataValidationError, EvaluationError, MissingArtifactError,
)
from .evaluation import (
    GroupedPredictors, chi_square_homogeneity, make_cv_plan, run_stepwise,
    undersample,
)
from .factors import (
    correlation, cronbach_alpha, extract_factors, factor_scores,
    parallel_analysis, reverse_code, varimax,
)
from .homals import category_diagnostics, fit_homals
from .schema import load_schema, save_schema
from .svgplot import grouped_bars, scatter_plot, scree_plot
from .synthetic import GeneratorConfig, generate_synthetic_survey

FAMILY_NAMES = ("multinomial-lr", "random-forest", "neural-net")
STEP_ORDER = ("step1", "step2", "step3")
SINGLE_ORDER = ("financial", "demographic", "psychological")


# ---------------------------------------------------------------------------
# configuration

def _parse_names(raw: str) -> tuple:
    return tuple(part.strip() for part in raw.split(",") if part.strip())


def _parse_bool(raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def _parse_auto_int(raw: str):
    low = raw.strip().lower()
    return "auto" if low == "auto" else int(raw)


def _parse_split(raw: str):
    low = raw.strip().lower()
    return "median" if low == "median" else int(raw)


def _parse_undersample(raw: str):
    low = raw.strip().lower()
    if low in ("auto", "none"):
        return low
    return int(raw)


def _fmt_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ", ".join(value)
    if isinstance(value, float):
        return format(value, "g")
    return str(value)


# section.key -> (attribute, parser). Single source of truth for loading,
# overriding, and snapshotting the configuration.
CONFIG_SCHEMA = {
    "paths.schema": ("schema_path", str),
    "paths.data": ("data_path", str),
    "paths.out": ("out_dir", str),
    "synth.n_rows": ("synth_n_rows", int),
    "synth.nonresponse_fraction": ("synth_nonresponse", float),
    "synth.sporadic_rate": ("synth_sporadic", float),
    "cleaning.watch": ("watch", _parse_names),
    "cleaning.min_hits": ("min_hits", int),
    "cleaning.flag_multiple": ("flag_multiple", float),
    "homals.n_dims": ("homals_n_dims", int),
    "homals.tol": ("homals_tol", float),
    "homals.max_iter": ("homals_max_iter", int),
    "efa.n_random": ("efa_n_random", int),
    "efa.tol": ("efa_tol", float),
    "efa.max_iter": ("efa_max_iter", int),
    "efa.rotation": ("rotation", str),
    "efa.n_factors": ("n_factors", _parse_auto_int),
    "efa.factor_names": ("factor_names", _parse_names),
    "labelling.mode": ("label_mode", str),
    "labelling.debt_split": ("debt_split", _parse_split),
    "evaluation.k": ("cv_k", int),
    "evaluation.repeats": ("cv_repeats", int),
    "evaluation.alpha": ("alpha", float),
    "evaluation.families": ("families", _parse_names),
    "evaluation.n_trees": ("n_trees", int),
    "evaluation.mtry": ("mtry", _parse_auto_int),
    "evaluation.min_leaf": ("min_leaf", int),
    "evaluation.l2": ("l2", float),
    "evaluation.lr_max_iter": ("lr_max_iter", int),
    "evaluation.nn_mode": ("nn_mode", str),
    "evaluation.nn_hidden": ("nn_hidden", int),
    "evaluation.nn_epochs": ("nn_epochs", int),
    "evaluation.nn_learning_rate": ("nn_learning_rate", float),
    "evaluation.undersample": ("undersample", _parse_undersample),
    "evaluation.singles": ("singles", _parse_bool),
    "seed.master": ("seed", int),
}


@dataclass(frozen=True)
class PipelineConfig:
    """Resolved run configuration; every field lands in the manifest."""

    schema_path: str = "schema.json"
    data_path: str = "survey.csv"
    out_dir: str = "run"
    synth_n_rows: int = 2000
    synth_nonresponse: float = 0.20
    synth_sporadic: float = 0.02
    watch: tuple = ()
    min_hits: int = 3
    flag_multiple: float = 2.0
    homals_n_dims: int = 2
    homals_tol: float = 1e-8
    homals_max_iter: int = 500
    efa_n_random: int = 100
    efa_tol: float = 1e-6
    efa_max_iter: int = 200
    rotation: str = "varimax"
    n_factors: object = "auto"
    factor_names: tuple = ()
    label_mode: str = "both"
    debt_split: object = "median"
    cv_k: int = 10
    cv_repeats: int = 10
    alpha: float = 0.025
    families: tuple = FAMILY_NAMES
    n_trees: int = 500
    mtry: object = "auto"
    min_leaf: int = 1
    l2: float = 1e-4
    lr_max_iter: int = 500
    nn_mode: str = "tuned"
    nn_hidden: int = 4
    nn_epochs: int = 10000
    nn_learning_rate: float = 0.1
    undersample: object = "auto"
    singles: bool = True
    seed: int = 1

    def __post_init__(self):
        if self.label_mode not in ("both", "two-class", "three-class"):
            raise ConfigError(
                f"labelling.mode must be both, two-class, or three-class, "
                f"got {self.label_mode!r}"
            )
        if self.rotation not in ("varimax", "none"):
            raise ConfigError(
                f"efa.rotation must be varimax or none, got {self.rotation!r}"
            )
        if self.nn_mode not in ("tuned", "fixed"):
            raise ConfigError(
                f"evaluation.nn_mode must be tuned or fixed, got "
                f"{self.nn_mode!r}"
            )
        unknown = [f for f in self.families if f not in FAMILY_NAMES]
        if unknown:
            raise ConfigError(
                f"unknown families {unknown}; choose from {list(FAMILY_NAMES)}"
            )
        if not self.families:
            raise ConfigError("evaluation.families must not be empty")
        for key, attr in (
            ("evaluation.k", self.cv_k), ("evaluation.repeats", self.cv_repeats),
            ("cleaning.min_hits", self.min_hits),
            ("homals.n_dims", self.homals_n_dims),
        ):
            if attr < 1:
                raise ConfigError(f"{key} must be >= 1, got {attr}")
        if not 0 < self.alpha < 1:
            raise ConfigError("evaluation.alpha must lie in (0, 1)")
        if self.n_factors != "auto" and int(self.n_factors) < 1:
            raise ConfigError("efa.n_factors must be auto or >= 1")
        if self.mtry != "auto" and int(self.mtry) < 1:
            raise ConfigError("evaluation.mtry must be auto or >= 1")

    def to_dict(self) -> dict:
        return {
            key: _fmt_value(getattr(self, attr))
            for key, (attr, _) in CONFIG_SCHEMA.items()
        }

    def to_text(self) -> str:
        lines = []
        section = None
        for key, (attr, _) in CONFIG_SCHEMA.items():
            sec, name = key.split(".", 1)
            if sec != section:
                if section is not None:
                    lines.append("")
                lines.append(f"[{sec}]")
                section = sec
            lines.append(f"{name} = {_fmt_value(getattr(self, attr))}")
        return "\n".join(lines) + "\n"


def load_config(path) -> PipelineConfig:
    """Parse an INI-style config file; the seed must be explicit."""
    path = Path(path)
    if not path.is_file():
        raise MissingArtifactError(f"config file {path} does not exist")
    parser = ConfigParser()
    try:
        parser.read_string(path.read_text(encoding="utf-8"))
    except Exception as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from None
    values = {}
    seen_seed = False
    for section in parser.sections():
        for name, raw in parser.items(section):
            key = f"{section}.{name}"
            if key not in CONFIG_SCHEMA:
                raise ConfigError(f"unknown config key {key!r}")
            attr, parse = CONFIG_SCHEMA[key]
            try:
                values[attr] = parse(raw)
            except (ValueError, TypeError) as exc:
                raise ConfigError(f"bad value for {key!r}: {exc}") from None
            if key == "seed.master":
                seen_seed = True
    if not seen_seed:
        raise ConfigError(
            "config must set seed.master; implicit randomness is not allowed"
        )
    return PipelineConfig(**values)


def apply_overrides(config: PipelineConfig, overrides) -> PipelineConfig:
    """Apply ``section.key=value`` strings on top of a loaded config."""
    values = {}
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        key, raw = item.split("=", 1)
        key = key.strip()
        if key not in CONFIG_SCHEMA:
            raise ConfigError(f"unknown config key {key!r}")
        attr, parse = CONFIG_SCHEMA[key]
        try:
            values[attr] = parse(raw.strip())
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"bad value for {key!r}: {exc}") from None
    return replace(config, **values) if values else config


def default_config_text(out_dir="run", seed=1) -> str:
    """A complete starter config for the standard survey shape."""
    cfg = replace(
        PipelineConfig(),
        out_dir=out_dir,
        seed=seed,
        watch=(
            "house_status", "marital_status", "employment", "education",
            "household_income", "personal_income", "savings",
        ),
    )
    return cfg.to_text()


# ---------------------------------------------------------------------------
# shared plumbing

def _stage_seed(master: int, *key) -> int:
    ss = np.random.SeedSequence(entropy=master, spawn_key=tuple(key))
    return int(ss.generate_state(1)[0])


def _num(v, nd=6) -> str:
    return format(float(v), f".{nd}f")


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_table(path: Path, header, rows) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(row)
    path.write_text(buf.getvalue(), encoding="utf-8")


def _read_table(path: Path, hint: str):
    if not path.is_file():
        raise MissingArtifactError(f"{path} is missing; {hint}")
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DataValidationError(f"{path} is empty")
    return rows[0], rows[1:]


def _require_file(path: Path, hint: str) -> Path:
    if not path.is_file():
        raise MissingArtifactError(f"{path} is missing; {hint}")
    return path


def update_manifest(out: Path, config: PipelineConfig, stage: str,
                    inputs, outputs, seconds: float) -> None:
    """Record a stage's resolved config, checksums, and timing."""
    path = out / "manifest.json"
    if path.is_file():
        manifest = json.loads(path.read_text(encoding="utf-8"))
    else:
        manifest = {"package": "debtminer", "version": __version__,
                    "config": {}, "stages": {}}
    manifest["version"] = __version__
    manifest["config"] = config.to_dict()
    manifest["stages"][stage] = {
        "inputs": {str(p): _sha256(Path(p)) for p in inputs},
        "outputs": {str(p): _sha256(Path(p)) for p in outputs},
        "wall_clock_s": round(seconds, 3),
    }
    path.write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )


def _out_dir(config: PipelineConfig) -> Path:
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_inputs(config: PipelineConfig):
    schema = load_schema(
        _require_file(Path(config.schema_path),
                      "point paths.schema at a schema file or run synth")
    )
    data = read_csv(
        schema,
        _require_file(Path(config.data_path),
                      "point paths.data at a survey CSV or run synth"),
    )
    return schema, data


def _label_modes(config: PipelineConfig):
    if config.label_mode == "both":
        return ("two-class", "three-class")
    return (config.label_mode,)


# ---------------------------------------------------------------------------
# stage: synth

def cmd_synth(config: PipelineConfig) -> dict:
    """Generate a survey with the standard shape and write schema + CSV."""
    started = time.perf_counter()
    gen = GeneratorConfig(
        n_rows=config.synth_n_rows,
        nonresponse_fraction=config.synth_nonresponse,
        sporadic_uncertain_rate=config.synth_sporadic,
    )
    data, truth = generate_synthetic_survey(gen, seed=config.seed)
    schema_path = Path(config.schema_path)
    data_path = Path(config.data_path)
    for p in (schema_path, data_path):
        p.parent.mkdir(parents=True, exist_ok=True)
    save_schema(data.schema, schema_path)
    write_csv(data, data_path)
    out = _out_dir(config)
    update_manifest(out, config, "synth", [], [schema_path, data_path],
                    time.perf_counter() - started)
    return {
        "n_rows": data.n_rows,
        "planted_nonresponders": len(truth.planted_nonresponders),
        "outputs": [str(schema_path), str(data_path)],
    }


# ---------------------------------------------------------------------------
# stage: clean

def _uncertain_labels(schema) -> set:
    labels = set()
    for var in schema:
        labels.update(var.uncertain_codes)
    return labels


def cmd_clean(config: PipelineConfig) -> dict:
    """Category-plot screening and systematic-nonresponse removal.

    Diagnostics describe the data as received; the removal rule then drops
    rows uncertain on at least ``min_hits`` watched variables, and the
    chi-square table reports how much each variable's category mix moved.
    """
    started = time.perf_counter()
    schema, data = _load_inputs(config)
    out = _out_dir(config)
    outputs = []

    uncertain = _uncertain_labels(schema)
    diag_rows = []
    dim_heads = [f"dim{d + 1}" for d in range(config.homals_n_dims)]
    for gi, group in enumerate(("demographic", "financial")):
        names = schema.group_names(group)
        if not names:
            continue
        em = drop_empty_categories(encode(data, list(names), FULL_INDICATOR))
        model = fit_homals(
            em, n_dims=config.homals_n_dims, tol=config.homals_tol,
            max_iter=config.homals_max_iter,
            seed=_stage_seed(config.seed, 10, gi),
        )
        diag = category_diagnostics(model, config.flag_multiple)
        points = []
        for pt in diag.points:
            diag_rows.append(
                [group, pt.variable, pt.category]
                + [_num(c) for c in pt.coords]
                + [_num(pt.distance), pt.count,
                   "true" if pt.flagged else "false"]
            )
            points.append((
                pt.coords[0],
                pt.coords[1] if len(pt.coords) > 1 else 0.0,
                f"{pt.variable}={pt.category}",
                pt.flagged or pt.category in uncertain,
            ))
        svg_path = out / f"quantifications_{group}.svg"
        svg_path.write_text(
            scatter_plot(points, f"Category quantifications: {group}"),
            encoding="utf-8",
        )
        outputs.append(svg_path)

    diag_path = out / "category_diagnostics.csv"
    _write_table(
        diag_path,
        ["group", "variable", "category"] + dim_heads
        + ["distance", "count", "flagged"],
        diag_rows,
    )
    outputs.append(diag_path)

    cleaned, removal = drop_systematic_nonresponse(
        data, list(config.watch), config.min_hits
    )

    summary_path = out / "removal_report.csv"
    _write_table(
        summary_path,
        ["measure", "value"],
        [
            ["rows_before", removal.n_before],
            ["rows_after", removal.n_after],
            ["rows_removed", removal.n_removed],
            ["min_hits", config.min_hits],
            ["watch", ";".join(config.watch)],
        ],
    )
    outputs.append(summary_path)

    counts_path = out / "uncertain_counts.csv"
    _write_table(
        counts_path,
        ["variable", "uncertain_before", "uncertain_after"],
        [[name, removal.uncertain_before[name], removal.uncertain_after[name]]
         for name in schema.names if name in removal.uncertain_before],
    )
    outputs.append(counts_path)

    chi_rows = []
    for var in schema:
        before = np.bincount(data.column(var.name),
                             minlength=var.n_categories)
        after = np.bincount(cleaned.column(var.name),
                            minlength=var.n_categories)
        occupied = (before + after) > 0
        if occupied.sum() < 2:
            continue
        res = chi_square_homogeneity(after[occupied], before[occupied])
        chi_rows.append([
            var.name, _num(res.statistic, 4), res.df,
            _num(res.p_value, 6), _num(res.max_shift, 6),
        ])
    chi_path = out / "chi_square_report.csv"
    _write_table(
        chi_path,
        ["variable", "statistic", "df", "p_value", "max_shift"],
        chi_rows,
    )
    outputs.append(chi_path)

    cleaned_path = out / "cleaned.csv"
    write_csv(cleaned, cleaned_path)
    outputs.append(cleaned_path)

    # analysis table: cleaned rows plus per-group object scores, refit on
    # the cleaned data so the appended dimensions describe what ships
    analysis_header = ["row_id"] + list(schema.names)
    analysis_cols = [list(cleaned.row_ids)]
    for name in schema.names:
        analysis_cols.append(cleaned.labels_column(name))
    for gi, group in enumerate(("demographic", "financial")):
        names = schema.group_names(group)
        if not names:
            continue
        em = drop_empty_categories(
            encode(cleaned, list(names), FULL_INDICATOR)
        )
        model = fit_homals(
            em, n_dims=config.homals_n_dims, tol=config.homals_tol,
            max_iter=config.homals_max_iter,
            seed=_stage_seed(config.seed, 11, gi),
        )
        for d in range(config.homals_n_dims):
            analysis_header.append(f"{group}_dim{d + 1}")
            analysis_cols.append(
                [format(v, ".10g") for v in model.object_scores_[:, d]]
            )
    analysis_path = out / "analysis.csv"
    _write_table(analysis_path, analysis_header,
                 zip(*analysis_cols))
    outputs.append(analysis_path)

    update_manifest(
        out, config, "clean",
        [config.schema_path, config.data_path], outputs,
        time.perf_counter() - started,
    )
    return {
        "rows_removed": removal.n_removed,
        "flagged_categories": sum(r[-1] == "true" for r in diag_rows),
        "outputs": [str(p) for p in outputs],
    }


# ---------------------------------------------------------------------------
# stage: factors

def _factor_labels(config: PipelineConfig, m: int):
    if config.factor_names:
        if len(config.factor_names) != m:
            raise ConfigError(
                f"efa.factor_names lists {len(config.factor_names)} names "
                f"but {m} factors were extracted"
            )
        return list(config.factor_names)
    return [f"factor{i + 1}" for i in range(m)]


def cmd_factors(config: PipelineConfig) -> dict:
    """Scree + parallel analysis, extraction, rotation, reliability, scores."""
    started = time.perf_counter()
    schema, _ = _load_inputs(config)
    out = _out_dir(config)
    cleaned_path = _require_file(out / "cleaned.csv", "run clean first")
    cleaned = read_csv(schema, cleaned_path)
    outputs = []

    item_names = schema.group_names("psychological")
    if not item_names:
        raise DataValidationError("schema has no psychological items")
    items = encode(cleaned, list(item_names), LIKERT_NUMERIC)

    R = correlation(items)
    pa = parallel_analysis(
        items, n_random=config.efa_n_random,
        seed=_stage_seed(config.seed, 12),
    )
    if config.n_factors == "auto":
        m = pa.retained
        if m < 1:
            raise DataValidationError(
                "parallel analysis retained 0 factors; set efa.n_factors "
                "explicitly to force an extraction"
            )
    else:
        m = int(config.n_factors)

    model = extract_factors(
        R, m, max_iter=config.efa_max_iter, tol=config.efa_tol
    )
    if config.rotation == "varimax" and m > 1:
        model = varimax(model)
    names = _factor_labels(config, m)

    scree_csv = out / "scree.csv"
    _write_table(
        scree_csv,
        ["component", "observed_eigenvalue", "mean_random_eigenvalue"],
        [[i + 1, _num(obs), _num(rnd)]
         for i, (obs, rnd) in enumerate(zip(pa.observed, pa.mean_random))],
    )
    outputs.append(scree_csv)
    scree_svg = out / "scree.svg"
    scree_svg.write_text(
        scree_plot(pa.observed, pa.mean_random, retained=pa.retained,
                   title="Scree and parallel analysis"),
        encoding="utf-8",
    )
    outputs.append(scree_svg)

    # display convention: loadings under 0.1 in absolute value print blank
    loadings_path = out / "loadings.csv"
    load_rows = []
    for i, item in enumerate(model.items):
        cells = [
            _num(model.loadings[i, f], 4)
            if abs(model.loadings[i, f]) >= 0.1 else ""
            for f in range(m)
        ]
        load_rows.append([item] + cells + [_num(model.communalities[i], 4)])
    _write_table(loadings_path, ["item"] + names + ["communality"],
                 load_rows)
    outputs.append(loadings_path)

    groups = model.assignment_groups()
    flipped = model.negative_items()
    alpha_items = reverse_code(items, flipped) if flipped else items
    assignment = {
        names[f]: tuple(members)
        for f, members in sorted(groups.items()) if len(members) >= 2
    }
    report = cronbach_alpha(alpha_items, assignment) if assignment else None
    alpha_rows = []
    for f in range(m):
        members = groups.get(f, [])
        fname = names[f]
        if report is not None and fname in report.by_factor():
            entry = report.by_factor()[fname]
            alpha_rows.append([
                fname, len(entry.items), ";".join(entry.items),
                _num(entry.alpha, 4), entry.band,
            ])
        else:
            alpha_rows.append(
                [fname, len(members), ";".join(members), "", "n/a"]
            )
    alpha_path = out / "alpha_table.csv"
    _write_table(
        alpha_path,
        ["factor", "n_items", "items", "alpha", "band"],
        alpha_rows,
    )
    outputs.append(alpha_path)

    scores = factor_scores(model, items)
    analysis_path = _require_file(out / "analysis.csv", "run clean first")
    header, rows = _read_table(analysis_path, "run clean first")
    if len(rows) != cleaned.n_rows:
        raise DataValidationError(
            "analysis.csv does not match cleaned.csv; rerun clean"
        )
    # keep the clean-stage columns (row_id, variables, homals dims) and
    # replace anything after them, so a rerun swaps scores instead of
    # stacking duplicates
    base = 1 + len(schema.names)
    while base < len(header) and header[base].rsplit("_dim", 1)[0] in (
        "demographic", "financial",
    ):
        base += 1
    header = header[:base] + names
    new_rows = [
        row[:base] + [format(v, ".10g") for v in scores[r]]
        for r, row in enumerate(rows)
    ]
    _write_table(analysis_path, header, new_rows)
    outputs.append(analysis_path)

    summary_path = out / "factors_summary.csv"
    _write_table(
        summary_path,
        ["measure", "value"],
        [
            ["retained_by_parallel_analysis", pa.retained],
            ["n_factors_used", m],
            ["rotation", model.rotation],
            ["converged", "true" if model.converged else "false"],
            ["heywood", "true" if model.heywood else "false"],
            ["factor_names", ";".join(names)],
            ["reverse_coded_items", ";".join(flipped)],
            ["variance_explained", _num(model.variance_explained, 4)],
            ["ss_loading_share", ";".join(
                _num(v, 4)
                for v in (model.loadings ** 2).sum(axis=0) / len(model.items)
            )],
        ],
    )
    outputs.append(summary_path)

    update_manifest(
        out, config, "factors",
        [config.schema_path, cleaned_path], outputs,
        time.perf_counter() - started,
    )
    return {
        "retained": pa.retained,
        "n_factors_used": m,
        "heywood": model.heywood,
        "outputs": [str(p) for p in outputs],
    }


# ---------------------------------------------------------------------------
# stage: evaluate

class _TunedNet:
    """Per-cell wrapper that sweeps hidden sizes inside the training fold."""

    def __init__(self, epochs, learning_rate, seed):
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.seed = seed

    def fit(self, X, y):
        self.tuned_ = tune_neural_net(
            X, y, epochs=self.epochs, learning_rate=self.learning_rate,
            seed=self.seed,
        )
        return self

    def predict(self, X):
        return self.tuned_.predict(X)


def _family_factories(config: PipelineConfig) -> dict:
    mtry = None if config.mtry == "auto" else int(config.mtry)
    factories = {}
    for fam in config.families:
        if fam == "multinomial-lr":
            factories[fam] = lambda seed: MultinomialLogit(
                l2=config.l2, max_iter=config.lr_max_iter
            )
        elif fam == "random-forest":
            factories[fam] = lambda seed: RandomForest(
                n_trees=config.n_trees, mtry=mtry,
                min_leaf=config.min_leaf, seed=seed,
            )
        elif config.nn_mode == "fixed":
            factories[fam] = lambda seed: NeuralNetClassifier(
                hidden=config.nn_hidden, epochs=config.nn_epochs,
                learning_rate=config.nn_learning_rate, seed=seed,
            )
        else:
            factories[fam] = lambda seed: _TunedNet(
                config.nn_epochs, config.nn_learning_rate, seed
            )
    return factories


def _read_factor_names(out: Path):
    _, rows = _read_table(out / "factors_summary.csv", "run factors first")
    values = {row[0]: row[1] for row in rows}
    raw = values.get("factor_names", "")
    names = [n for n in raw.split(";") if n]
    if not names:
        raise DataValidationError(
            "factors_summary.csv lists no factor names; rerun factors"
        )
    return names


def _metric_header(class_labels):
    if len(class_labels) == 2:
        return ["accuracy", "sensitivity", "specificity"]
    return ["accuracy"] + [f"recall_{lab}" for lab in class_labels]


def _metric_cells(metrics, class_labels):
    if len(class_labels) == 2:
        return [_num(metrics.accuracy), _num(metrics.sensitivity),
                _num(metrics.specificity)]
    return [_num(metrics.accuracy)] + [
        _num(metrics.recall[lab]) for lab in class_labels
    ]


def _summary_cells(result, class_labels):
    s = result.summary()
    cells = [_num(s["mean_accuracy"]), _num(s["sd_accuracy"])]
    if len(class_labels) == 2:
        cells += [_num(s["mean_sensitivity"]), _num(s["mean_specificity"])]
    else:
        cells += [_num(s[f"mean_recall_{lab}"]) for lab in class_labels]
    return cells


def _summary_header(class_labels):
    base = ["mean_accuracy", "sd_accuracy"]
    if len(class_labels) == 2:
        return base + ["mean_sensitivity", "mean_specificity"]
    return base + [f"mean_recall_{lab}" for lab in class_labels]


def _importance_report(config, out, mode, ds, labels, factor_names,
                       analysis_rows, analysis_header):
    """Forest importances on the full step-3 feature set, Table-style."""
    em = encode(
        ds,
        list(ds.schema.group_names("financial"))
        + list(ds.schema.group_names("demographic")),
        REFERENCE_DROPPED,
    )
    # cleaned.csv row ids are positional, and analysis.csv preserves the
    # cleaned row order, so id k maps to analysis row k-1
    positions = [int(rid) - 1 for rid in ds.row_ids]
    score_cols = []
    for name in factor_names:
        j = analysis_header.index(name)
        col = np.array([float(analysis_rows[p][j]) for p in positions])
        score_cols.append(col)
    X = np.hstack([em.values] + [c[:, None] for c in score_cols])
    names = list(em.column_names()) + list(factor_names)
    forest = RandomForest(
        n_trees=config.n_trees,
        mtry=None if config.mtry == "auto" else int(config.mtry),
        min_leaf=config.min_leaf,
        seed=_stage_seed(config.seed, 14, 0 if mode == "two-class" else 1),
    ).fit(X, labels.as_array())
    gi = gini_importance(forest, names=names)

    imp_path = out / f"importance_{mode}.csv"
    _write_table(
        imp_path,
        ["predictor", "mean_gini_decrease"],
        [[name, _num(val, 4)] for name, val in gi.ranking()],
    )
    stats_path = out / f"importance_descriptives_{mode}.csv"
    row = gi.descriptive_row()
    _write_table(
        stats_path,
        ["min", "q1", "median", "mean", "q3", "max"],
        [[_num(v, 4) for v in row]],
    )
    return [imp_path, stats_path]


def cmd_evaluate(config: PipelineConfig) -> dict:
    """The stepwise protocol over class modes, variants, and families."""
    started = time.perf_counter()
    schema, _ = _load_inputs(config)
    out = _out_dir(config)
    cleaned_path = _require_file(out / "cleaned.csv", "run clean first")
    cleaned = read_csv(schema, cleaned_path)
    analysis_path = _require_file(out / "analysis.csv", "run clean first")
    analysis_header, analysis_rows = _read_table(
        analysis_path, "run clean first"
    )
    factor_names = _read_factor_names(out)
    for col in ("demographic_dim1", "financial_dim1"):
        if col not in analysis_header:
            raise MissingArtifactError(
                f"analysis.csv lacks column {col}; run clean first"
            )
    for col in factor_names:
        if col not in analysis_header:
            raise MissingArtifactError(
                f"analysis.csv lacks factor-score column {col}; "
                "run factors first"
            )
    if len(analysis_rows) != cleaned.n_rows:
        raise DataValidationError(
            "analysis.csv row count does not match cleaned.csv; rerun clean"
        )

    outputs = []
    summary = {}
    factories = _family_factories(config)
    for mi, mode in enumerate(_label_modes(config)):
        labels = build_labels(cleaned, mode, config.debt_split)
        ds = cleaned
        if config.undersample != "none":
            counts = labels.counts()
            ordered = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
            biggest, size = ordered[0]
            target = (
                ordered[1][1] if config.undersample == "auto"
                else int(config.undersample)
            )
            if target < size:
                ds, labels, us_report = undersample(
                    ds, labels, biggest, target,
                    seed=_stage_seed(config.seed, 13, mi, 0),
                )
                us_path = out / f"undersample_{mode}.csv"
                _write_table(
                    us_path,
                    ["measure", "value"],
                    [["target_class", biggest],
                     ["rows_before", us_report.n_before],
                     ["rows_after", us_report.n_after]]
                    + [[f"count_{lab}", n]
                       for lab, n in sorted(labels.counts().items())],
                )
                outputs.append(us_path)

        plan = make_cv_plan(
            labels.as_array(), k=config.cv_k, repeats=config.cv_repeats,
            seed=_stage_seed(config.seed, 13, mi, 1),
        )
        class_labels = tuple(sorted(labels.counts()))

        for variant in ("original", "transformed"):
            gp = GroupedPredictors(
                data=ds,
                financial=tuple(schema.group_names("financial")),
                demographic=tuple(schema.group_names("demographic")),
                psychological=tuple(schema.group_names("psychological")),
                variant=variant,
                n_factors=len(factor_names),
                n_dims=config.homals_n_dims,
            )
            try:
                sw = run_stepwise(
                    gp, factories, plan, alpha=config.alpha,
                    singles=config.singles,
                )
            except EvaluationError as exc:
                raise EvaluationError(
                    f"mode={mode}, variant={variant}: {exc}"
                ) from exc

            cell_rows = []
            summary_rows = []
            scopes = [("step", name, sw.steps[name]) for name in STEP_ORDER]
            scopes += [
                ("single", name, sw.singles[name])
                for name in SINGLE_ORDER if name in sw.singles
            ]
            for scope, name, by_family in scopes:
                for fam in config.families:
                    result = by_family[fam]
                    for cell in result.cells:
                        cell_rows.append(
                            [scope, name, fam, cell.repeat, cell.fold,
                             cell.n_test]
                            + _metric_cells(cell, class_labels)
                        )
                    summary_rows.append(
                        [scope, name, fam]
                        + _summary_cells(result, class_labels)
                    )
            cells_path = out / f"cells_{mode}_{variant}.csv"
            _write_table(
                cells_path,
                ["scope", "name", "family", "repeat", "fold", "n_test"]
                + _metric_header(class_labels),
                cell_rows,
            )
            outputs.append(cells_path)
            summary_path = out / f"summary_{mode}_{variant}.csv"
            _write_table(
                summary_path,
                ["scope", "name", "family"] + _summary_header(class_labels),
                summary_rows,
            )
            outputs.append(summary_path)

            sig_rows = []
            for fam in config.families:
                tt = sw.tests[fam]
                m2 = sw.steps["step2"][fam].summary()["mean_accuracy"]
                m3 = sw.steps["step3"][fam].summary()["mean_accuracy"]
                sig_rows.append([
                    fam, _num(m2), _num(m3),
                    _num(tt.t, 4), tt.df, format(tt.p_value, ".3e"),
                    "true" if tt.significant else "false",
                    "true" if tt.degenerate else "false",
                ])
            sig_path = out / f"significance_{mode}_{variant}.csv"
            _write_table(
                sig_path,
                ["family", "step2_mean_accuracy", "step3_mean_accuracy",
                 "t", "df", "p_value", "significant", "degenerate"],
                sig_rows,
            )
            outputs.append(sig_path)

            chart_path = out / f"step_chart_{mode}_{variant}.svg"
            chart_path.write_text(
                grouped_bars(
                    ["Step 1", "Step 2", "Step 3"],
                    [
                        (fam, [
                            sw.steps[s][fam].summary()["mean_accuracy"]
                            for s in STEP_ORDER
                        ])
                        for fam in config.families
                    ],
                    title=f"Stepwise accuracy ({mode}, {variant})",
                ),
                encoding="utf-8",
            )
            outputs.append(chart_path)
            summary[f"{mode}/{variant}"] = {
                fam: sw.tests[fam].p_value for fam in config.families
            }

        outputs.extend(
            _importance_report(
                config, out, mode, ds, labels, factor_names,
                analysis_rows, analysis_header,
            )
        )

    update_manifest(
        out, config, "evaluate",
        [config.schema_path, cleaned_path, analysis_path], outputs,
        time.perf_counter() - started,
    )
    return {"step3_vs_step2_p": summary,
            "outputs": [str(p) for p in outputs]}


# ---------------------------------------------------------------------------
# stage: report

def _md_table(header, rows) -> str:
    def esc(cell):
        return str(cell).replace("|", "\\|")

    lines = ["| " + " | ".join(esc(h) for h in header) + " |"]
    lines.append("|" + "|".join(" --- " for _ in header) + "|")
    for row in rows:
        lines.append("| " + " | ".join(esc(c) for c in row) + " |")
    return "\n".join(lines)


def _md_csv(path: Path, hint: str, max_rows=None) -> str:
    header, rows = _read_table(path, hint)
    clipped = rows if max_rows is None or len(rows) <= max_rows else rows[:max_rows]
    text = _md_table(header, clipped)
    if clipped is not rows:
        text += f"\n\n(first {max_rows} of {len(rows)} rows; full table in {path.name})"
    return text


def cmd_report(config: PipelineConfig) -> dict:
    """Stitch every emitted table into one markdown report."""
    started = time.perf_counter()
    out = _out_dir(config)
    modes = _label_modes(config)

    required = [
        out / "removal_report.csv", out / "uncertain_counts.csv",
        out / "category_diagnostics.csv", out / "chi_square_report.csv",
        out / "cleaned.csv", out / "analysis.csv",
        out / "quantifications_demographic.svg",
        out / "quantifications_financial.svg",
        out / "scree.csv", out / "scree.svg", out / "loadings.csv",
        out / "alpha_table.csv", out / "factors_summary.csv",
        out / "manifest.json",
    ]
    for mode in modes:
        for variant in ("original", "transformed"):
            required += [
                out / f"summary_{mode}_{variant}.csv",
                out / f"significance_{mode}_{variant}.csv",
                out / f"step_chart_{mode}_{variant}.svg",
            ]
        required += [
            out / f"importance_{mode}.csv",
            out / f"importance_descriptives_{mode}.csv",
        ]
    missing = [str(p) for p in required if not p.is_file()]
    if missing:
        raise MissingArtifactError(
            "cannot assemble report; missing artifacts: " + ", ".join(missing)
        )

    manifest = json.loads((out / "manifest.json").read_text(encoding="utf-8"))
    sections = ["# Survey mining run report", ""]

    sections += ["## Configuration", ""]
    sections.append(_md_table(
        ["key", "value"],
        sorted(manifest.get("config", {}).items()),
    ))
    sections.append("")

    sections += ["## Cleaning", ""]
    sections.append(_md_csv(out / "removal_report.csv", "run clean"))
    sections += ["", "Uncertain answers per variable:", ""]
    sections.append(_md_csv(out / "uncertain_counts.csv", "run clean"))
    sections += ["", "Category distance diagnostics (flagged rows only):", ""]
    header, rows = _read_table(out / "category_diagnostics.csv", "run clean")
    flagged = [r for r in rows if r[-1] == "true"]
    sections.append(_md_table(header, flagged) if flagged
                    else "No categories flagged.")
    sections += [
        "",
        "Category plots: `quantifications_demographic.svg`, "
        "`quantifications_financial.svg`.",
        "",
        "Representativeness after removal (per variable):", "",
        _md_csv(out / "chi_square_report.csv", "run clean"),
        "",
    ]

    sections += ["## Factor structure", ""]
    sections.append(_md_csv(out / "factors_summary.csv", "run factors"))
    sections += [
        "", "Scree and parallel analysis: `scree.svg` (data in `scree.csv`).",
        "", "Rotated loadings (entries under 0.1 suppressed):", "",
        _md_csv(out / "loadings.csv", "run factors"),
        "", "Reliability:", "",
        _md_csv(out / "alpha_table.csv", "run factors"),
        "",
    ]

    sections += ["## Model evaluation", ""]
    for mode in modes:
        sections += [f"### {mode}", ""]
        us_path = out / f"undersample_{mode}.csv"
        if us_path.is_file():
            sections += ["Class balancing:", "",
                         _md_csv(us_path, "run evaluate"), ""]
        for variant in ("original", "transformed"):
            sections += [
                f"#### {variant} variables", "",
                _md_csv(out / f"summary_{mode}_{variant}.csv",
                        "run evaluate"),
                "",
                "Step 3 vs Step 2 paired tests:", "",
                _md_csv(out / f"significance_{mode}_{variant}.csv",
                        "run evaluate"),
                "",
                f"Chart: `step_chart_{mode}_{variant}.svg`.",
                "",
            ]
        sections += [
            "Variable importance (random forest, step-3 predictors):", "",
            _md_csv(out / f"importance_{mode}.csv", "run evaluate",
                    max_rows=15),
            "", "Descriptive statistics of the importances:", "",
            _md_csv(out / f"importance_descriptives_{mode}.csv",
                    "run evaluate"),
            "",
        ]

    sections += ["## Run manifest", ""]
    stage_rows = []
    # the report's own manifest entry is skipped: it holds this file's
    # previous checksum, which would make reruns self-referential
    for stage, entry in sorted(manifest.get("stages", {}).items()):
        if stage == "report":
            continue
        for path, digest in sorted(entry.get("outputs", {}).items()):
            stage_rows.append([stage, Path(path).name, digest[:16]])
    sections.append(_md_table(["stage", "artifact", "sha256 (prefix)"],
                              stage_rows))
    sections += [
        "",
        f"Produced by debtminer {manifest.get('version', __version__)}; "
        "wall-clock timings live in `manifest.json` and are excluded here "
        "so reruns of the same seed reproduce this file byte for byte.",
        "",
    ]

    report_path = out / "report.md"
    report_path.write_text("\n".join(sections), encoding="utf-8")
    update_manifest(
        out, config, "report", [out / "manifest.json"], [report_path],
        time.perf_counter() - started,
    )
    return {"outputs": [str(report_path)]}
