"""Experiment orchestration: configs, replication loops, metrics, and CSV I/O.

A JSON config names either a synthetic study family (gen_example*) or CSV
files, the methods to compare, and the shared training hyperparameters.
``run_experiment`` replays the study over independent replications with
derived seeds (master_seed + r), trains every requested method, scores it
on the held-out test set, and returns tidy result rows that
``write_results`` serializes with full float precision.

Synthetic studies draw a fresh test set per replication; CSV studies are
split 60/20/20 (train/eval/test) on the target and 80/20 on each source,
re-randomized per replication.  The eval split is carved out and never
trained on, but no automatic model selection is performed on it.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field

import numpy as np

from .linear import fit_linear_augment, fit_linear_sirep
from .networks import rep_forward
from .simgen import (
    GeneratedStudy,
    gen_example1,
    gen_example2,
    gen_example3,
    gen_example_s1,
)
from .training import (
    DomainDataset,
    TesrConfig,
    TesrModel,
    predict,
    tesr_features,
    train_ddr,
    train_dnn,
    train_predictor,
    train_stage1,
    train_stage2,
)

KNOWN_METHODS = ("tesr", "ddr", "dnn", "linear_tesr")
KNOWN_EXAMPLES = ("1", "2", "3", "s1")
RESULT_HEADER = ("method", "replicate", "metric", "value", "seed", "wall_time_s")


@dataclass
class ExperimentConfig:
    """Everything needed to reproduce one benchmark run."""

    methods: list[str]
    replications: int = 10
    master_seed: int = 0
    example: str | None = None
    n_s: int = 2000
    n_0: int = 300
    d: int = 60
    n_test: int = 10_000
    departure: str = "l1"
    sources_used: list[int] = field(default_factory=lambda: list(range(1, 9)))
    target_csv: str | None = None
    source_csvs: list[str] = field(default_factory=list)
    csv_task: str = "classification"
    tesr: TesrConfig = field(default_factory=TesrConfig)
    linear_rc: int = 2
    linear_rt: int = 1
    output: str | None = None

    def __post_init__(self):
        if not self.methods:
            raise ValueError("methods must be non-empty")
        for m in self.methods:
            if m not in KNOWN_METHODS:
                raise ValueError(f"unknown method {m!r}")
        if self.replications < 1:
            raise ValueError("replications must be at least 1")
        if self.example is not None and self.example not in KNOWN_EXAMPLES:
            raise ValueError(f"unknown example {self.example!r}")
        if self.example is None and self.target_csv is None:
            raise ValueError("config needs either an example id or CSV paths")


def config_from_dict(raw: dict) -> ExperimentConfig:
    """Build a config from parsed JSON; hyperparameter keys follow the
    conventional names (lambda_e, lambda_z, lambda_c, lambda_e0,
    batch_size, rep_dim, learning_rate, weight_decay, epochs), either at
    the top level or grouped under a "tesr" mapping.  Top-level keys win
    when both forms name the same hyperparameter."""
    raw = dict(raw)
    tesr_kw = {}
    nested = raw.pop("tesr", None)
    if nested is not None:
        if not isinstance(nested, dict):
            raise ValueError("'tesr' must be a mapping of hyperparameters")
        unknown = set(nested) - set(TesrConfig.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown tesr keys: {sorted(unknown)}")
        tesr_kw.update(nested)
        if isinstance(tesr_kw.get("hidden"), list):
            tesr_kw["hidden"] = tuple(tesr_kw["hidden"])
    for key in ("lambda_e", "lambda_z", "lambda_c", "lambda_e0", "batch_size",
                "learning_rate", "weight_decay", "epochs"):
        if key in raw:
            tesr_kw[key] = raw.pop(key)
    if "rep_dim" in raw:
        rd = raw.pop("rep_dim")
        tesr_kw["r_c"] = rd
        tesr_kw["r_t"] = rd
    if "example" in raw and raw["example"] is not None:
        raw["example"] = str(raw["example"])
    known = {f.name for f in ExperimentConfig.__dataclass_fields__.values()}
    unknown = set(raw) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    return ExperimentConfig(tesr=TesrConfig(**tesr_kw), **raw)


def load_config(path: str) -> ExperimentConfig:
    with open(path) as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: invalid JSON ({exc})") from exc
    return config_from_dict(raw)


@dataclass
class ResultRow:
    method: str
    replicate: int
    metric: str
    value: float
    seed: int
    wall_time_s: float

    def __post_init__(self):
        if self.metric not in ("accuracy", "mse"):
            raise ValueError(f"unknown metric {self.metric!r}")
        if self.metric == "accuracy" and not 0.0 <= self.value <= 1.0:
            raise ValueError("accuracy must lie in [0, 1]")
        if self.metric == "mse" and self.value < 0.0:
            raise ValueError("mse must be non-negative")


def evaluate(pipeline, test: DomainDataset, task: str | None = None) -> float:
    """Score a prediction pipeline on a test set.

    ``pipeline`` maps a covariate matrix to predictions: labels for
    classification (scored by the fraction correct) or a value matrix for
    regression (scored by mean squared error).
    """
    if task is None:
        task = test.task
    pred = pipeline(test.x)
    if task == "classification":
        return float(np.mean(np.asarray(pred) == test.y))
    pred = np.asarray(pred, dtype=np.float64)
    if pred.ndim == 1:
        pred = pred[:, None]
    return float(np.mean((pred - test.y) ** 2))


# ------------------------------------------------------------ method runs


def _metric_name(task: str) -> str:
    return "accuracy" if task == "classification" else "mse"


def _run_tesr(study, cfg, rng):
    t0 = time.perf_counter()
    rc_net = train_stage1(study.sources, cfg.tesr, rng)
    shared = time.perf_counter() - t0
    out = []
    for k, pipe_target in enumerate(study.targets):
        t1 = time.perf_counter()
        rt_net = train_stage2(pipe_target, rc_net, cfg.tesr, rng)
        model = TesrModel(rc_net=rc_net, rt_net=rt_net)
        feats = tesr_features(model, pipe_target.x)
        head = train_predictor(
            feats, pipe_target.y, pipe_target.task, cfg.tesr, rng,
            n_classes=pipe_target.n_classes,
        )

        def pipe(x, model=model, head=head, task=pipe_target.task,
                 k=pipe_target.n_classes):
            return predict(head, tesr_features(model, x), task, k)

        value = evaluate(pipe, study.test_sets[k])
        # shared Stage-I cost is spread evenly across targets
        elapsed = (time.perf_counter() - t1) + shared / len(study.targets)
        out.append((k, value, elapsed))
    return out


def _run_ddr(study, cfg, rng):
    out = []
    for k, target in enumerate(study.targets):
        t0 = time.perf_counter()
        rep_net = train_ddr(target, cfg.tesr, rng)
        feats = rep_forward(rep_net, target.x)
        head = train_predictor(
            feats, target.y, target.task, cfg.tesr, rng, n_classes=target.n_classes
        )

        def pipe(x, rep_net=rep_net, head=head, task=target.task,
                 k2=target.n_classes):
            return predict(head, rep_forward(rep_net, x), task, k2)

        value = evaluate(pipe, study.test_sets[k])
        out.append((k, value, time.perf_counter() - t0))
    return out


def _run_dnn(study, cfg, rng):
    out = []
    for k, target in enumerate(study.targets):
        t0 = time.perf_counter()
        net = train_dnn(target, cfg.tesr, rng)

        def pipe(x, net=net, task=target.task, k2=target.n_classes):
            return predict(net, x, task, k2)

        value = evaluate(pipe, study.test_sets[k])
        out.append((k, value, time.perf_counter() - t0))
    return out


def _run_linear_tesr(study, cfg, rng):
    t0 = time.perf_counter()
    b_c = fit_linear_sirep(study.sources, cfg.linear_rc, rng=rng)
    shared = time.perf_counter() - t0
    out = []
    for k, target in enumerate(study.targets):
        t1 = time.perf_counter()
        b_t = fit_linear_augment(target, b_c, cfg.linear_rt, rng=rng)
        feats = np.hstack([target.x @ b_c.B, target.x @ b_t.B])
        head = train_predictor(
            feats, target.y, target.task, cfg.tesr, rng, n_classes=target.n_classes
        )

        def pipe(x, b_c=b_c, b_t=b_t, head=head, task=target.task,
                 k2=target.n_classes):
            f = np.hstack([x @ b_c.B, x @ b_t.B])
            return predict(head, f, task, k2)

        value = evaluate(pipe, study.test_sets[k])
        out.append((k, value, (time.perf_counter() - t1) + shared / len(study.targets)))
    return out


_RUNNERS = {
    "tesr": _run_tesr,
    "ddr": _run_ddr,
    "dnn": _run_dnn,
    "linear_tesr": _run_linear_tesr,
}


# ----------------------------------------------------------- study assembly


def _split_indices(n: int, fractions, rng) -> list[np.ndarray]:
    perm = rng.permutation(n)
    cuts = np.cumsum([int(round(f * n)) for f in fractions[:-1]])
    return np.split(perm, cuts)


def _make_study(cfg: ExperimentConfig, seed: int) -> GeneratedStudy:
    if cfg.example == "1":
        return gen_example1(cfg.n_s, cfg.n_0, cfg.d, seed, cfg.n_test)
    if cfg.example == "2":
        return gen_example2(cfg.n_s, cfg.n_0, cfg.d, seed, cfg.n_test)
    if cfg.example == "3":
        return gen_example3(cfg.departure, cfg.sources_used, cfg.n_s, cfg.n_0,
                            cfg.d, seed, cfg.n_test)
    if cfg.example == "s1":
        return gen_example_s1(cfg.n_s, cfg.n_0, cfg.d, seed, cfg.n_test)
    return _csv_study(cfg, seed)


def _csv_study(cfg: ExperimentConfig, seed: int) -> GeneratedStudy:
    """Split user-supplied CSV data: target 60/20/20, sources 80/20."""
    rng = np.random.default_rng(seed)
    target_full = load_csv_dataset(cfg.target_csv, cfg.csv_task)
    tr, ev, te = _split_indices(target_full.n, (0.6, 0.2, 0.2), rng)
    sources = []
    for path in cfg.source_csvs:
        src = load_csv_dataset(path, "regression")
        keep, _ = _split_indices(src.n, (0.8, 0.2), rng)
        sources.append(src.subset(keep))
    return GeneratedStudy(
        sources=sources,
        targets=[target_full.subset(tr)],
        test_sets=[target_full.subset(te)],
        metadata={"example": "csv", "eval_sets": [target_full.subset(ev)]},
    )


def run_experiment(cfg: ExperimentConfig) -> list[ResultRow]:
    """Replicate the configured study and score every requested method.

    Replicate r uses seed master_seed + r for both data generation and a
    per-method RNG stream, so results are reproducible and no method's
    randomness leaks into another's.
    """
    rows = []
    for r in range(cfg.replications):
        seed = cfg.master_seed + r
        study = _make_study(cfg, seed)
        multi = len(study.targets) > 1
        for method in cfg.methods:
            rng = np.random.default_rng([seed, KNOWN_METHODS.index(method)])
            results = _RUNNERS[method](study, cfg, rng)
            for k, value, elapsed in results:
                name = f"{method}_t{k + 1}" if multi else method
                metric = _metric_name(study.targets[k].task)
                rows.append(ResultRow(name, r, metric, value, seed, elapsed))
    return rows


def summarize(rows: list[ResultRow]) -> dict[tuple[str, str], tuple[float, float]]:
    """Mean and sample SD (ddof=1; 0.0 for singletons) per (method, metric)."""
    groups: dict[tuple[str, str], list[float]] = {}
    for row in rows:
        groups.setdefault((row.method, row.metric), []).append(row.value)
    out = {}
    for key, vals in groups.items():
        arr = np.array(vals)
        sd = float(arr.std(ddof=1)) if len(arr) > 1 else 0.0
        out[key] = (float(arr.mean()), sd)
    return out


# --------------------------------------------------------------------- I/O


def _fmt(x) -> str:
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def write_results(rows: list[ResultRow], path: str) -> None:
    """Result CSV with a fixed header; floats keep 17 significant digits."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RESULT_HEADER)
        for row in rows:
            writer.writerow([
                row.method, row.replicate, row.metric,
                _fmt(float(row.value)), row.seed, _fmt(float(row.wall_time_s)),
            ])


def write_dataset(ds: DomainDataset, path: str, include_domain: bool = False) -> None:
    """Dataset CSV with columns x1..xd, y (and optionally domain)."""
    header = [f"x{i + 1}" for i in range(ds.d)] + ["y"]
    if include_domain:
        header.append("domain")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i in range(ds.n):
            row = [_fmt(float(v)) for v in ds.x[i]]
            if ds.task == "classification":
                row.append(str(int(ds.y[i])))
            else:
                row.append(_fmt(float(ds.y[i, 0])))
            if include_domain:
                row.append(str(ds.domain_id))
            writer.writerow(row)


def _parse_cell(cell: str, path: str, line: int, col: str) -> float:
    try:
        return float(cell)
    except ValueError:
        raise ValueError(
            f"{path}: line {line}: non-numeric value {cell!r} in column {col}"
        ) from None


def load_csv_dataset(path: str, task: str = "classification") -> DomainDataset:
    """Read a dataset CSV with header x1..xd, y and an optional constant
    domain column.  Errors carry 1-based line numbers."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ValueError(f"{path}: empty file")
        header = [h.strip() for h in header]
        has_domain = header[-1] == "domain"
        cols = header[:-1] if has_domain else header
        if len(cols) < 2 or cols[-1] != "y":
            raise ValueError(f"{path}: header must end with column 'y'")
        d = len(cols) - 1
        expected = [f"x{i + 1}" for i in range(d)]
        if cols[:-1] != expected:
            raise ValueError(
                f"{path}: covariate columns must be x1..x{d}, got {cols[:-1]}"
            )
        width = len(header)
        xs, ys, domains = [], [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != width:
                raise ValueError(
                    f"{path}: line {lineno}: expected {width} fields, got {len(row)}"
                )
            xs.append([_parse_cell(c, path, lineno, col)
                       for c, col in zip(row[:d], expected)])
            ys.append(_parse_cell(row[d], path, lineno, "y"))
            if has_domain:
                domains.append(_parse_cell(row[d + 1], path, lineno, "domain"))
    if not xs:
        raise ValueError(f"{path}: no rows")
    domain_id = 0
    if domains:
        uniq = sorted(set(int(v) for v in domains))
        if len(uniq) > 1:
            raise ValueError(
                f"{path}: multiple domains {uniq} in one file; use load_pooled_csv"
            )
        domain_id = uniq[0]
    x = np.array(xs, dtype=np.float64)
    y = np.array(ys, dtype=np.float64)
    if task == "classification":
        if np.any(y != np.round(y)):
            raise ValueError(f"{path}: classification labels must be integers")
        y = y.astype(np.int64)
    return DomainDataset(x=x, y=y, task=task, domain_id=domain_id)


def load_pooled_csv(path: str, task: str = "regression") -> list[DomainDataset]:
    """Read a pooled CSV (x1..xd, y, domain) into one dataset per domain."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ValueError(f"{path}: empty file")
        header = [h.strip() for h in header]
        if header[-1] != "domain":
            raise ValueError(f"{path}: pooled file needs a trailing 'domain' column")
        d = len(header) - 2
        expected = [f"x{i + 1}" for i in range(d)] + ["y", "domain"]
        if d < 1 or header != expected:
            raise ValueError(
                f"{path}: pooled header must be x1..xd, y, domain, got {header}"
            )
        groups: dict[int, list[list[float]]] = {}
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ValueError(
                    f"{path}: line {lineno}: expected {len(header)} fields, "
                    f"got {len(row)}"
                )
            vals = [_parse_cell(c, path, lineno, col)
                    for c, col in zip(row, expected)]
            groups.setdefault(int(vals[-1]), []).append(vals[:-1])
    if not groups:
        raise ValueError(f"{path}: no rows")
    out = []
    for dom in sorted(groups):
        block = np.array(groups[dom], dtype=np.float64)
        y = block[:, d]
        if task == "classification":
            if np.any(y != np.round(y)):
                raise ValueError(f"{path}: classification labels must be integers")
            y = y.astype(np.int64)
        out.append(DomainDataset(x=block[:, :d], y=y, task=task, domain_id=dom))
    return out
