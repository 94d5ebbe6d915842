"""Standard and unseen-code experiment protocols with CSV reporting."""

from __future__ import annotations

import copy
import csv
import io
import logging
import time
from dataclasses import astuple, dataclass, fields
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from ..data import AdmissionRecord, dataset_views
from ..encoders import MLPHead
from ..numeric import rng_stream
from ..ontology import OntologyGraph
from ..unseen import build_unseen_experiment, kfold_code_split, seen_flags
from .config import ExperimentConfig
from .metrics import auroc, average_precision
from .training import (DccaResult, ViewModel, finetune_view, make_encoders, take,
                       train_dcca)

log = logging.getLogger(__name__)

CSV_HEADER = ("task", "view", "variant", "fold", "seed", "auroc", "ap", "corr", "seconds")
UNSEEN_VARIANTS = ("base", "labeling", "dcca", "dcca+labeling")


class ExperimentError(RuntimeError):
    pass


@dataclass(frozen=True)
class MetricsRow:
    task: str
    view: str
    variant: str
    fold: str
    seed: str
    auroc: float
    ap: float
    corr: float
    seconds: float

    def __post_init__(self):
        for name in ("auroc", "ap"):
            v = getattr(self, name)
            if not (np.isnan(v) or 0.0 <= v <= 1.0):
                raise ExperimentError(f"{name}={v} outside [0, 1]")


def _fmt(v) -> str:
    if isinstance(v, float):
        return "nan" if np.isnan(v) else f"{v:.6f}"
    return str(v)


def rows_to_csv(rows: Iterable[MetricsRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow([_fmt(v) for v in astuple(r)])
    return buf.getvalue()


def write_csv(rows: Iterable[MetricsRow], path) -> None:
    Path(path).write_text(rows_to_csv(rows), encoding="utf-8")


def read_csv(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def summarize(rows: Sequence[MetricsRow]) -> list[MetricsRow]:
    """Mean and (population) standard deviation rows per view/variant."""
    out = []
    keys = []
    for r in rows:
        if (r.task, r.view, r.variant) not in keys:
            keys.append((r.task, r.view, r.variant))
    for task, view, variant in keys:
        sel = [r for r in rows if (r.task, r.view, r.variant) == (task, view, variant)]
        vals = {f.name: np.array([getattr(r, f.name) for r in sel], dtype=float)
                for f in fields(MetricsRow) if f.name in ("auroc", "ap", "corr", "seconds")}
        for stat, fn in (("mean", np.mean), ("std", np.std)):
            out.append(MetricsRow(task, view, variant, stat, "all",
                                  *(float(fn(vals[k])) for k in ("auroc", "ap", "corr", "seconds"))))
    return out


class Dataset:
    """Records resolved against an ontology, in both input forms."""

    def __init__(self, records: Sequence[AdmissionRecord], graph: OntologyGraph,
                 vocab_size: int = 0):
        self.records = list(records)
        self.graph = graph
        self.code_sets, self.tokens, self.labels = dataset_views(self.records, graph)
        max_tok = max((max(t) for t in self.tokens if t), default=-1)
        self.vocab_size = max(vocab_size, max_tok + 1, 1)

    def subset(self, idx) -> "Dataset":
        return Dataset([self.records[i] for i in idx], self.graph, self.vocab_size)

    def inputs(self, view: str):
        if view == "code":
            return self.code_sets
        if view == "text":
            return self.tokens
        return (self.code_sets, self.tokens)


class _Clock:
    def __init__(self, enabled: bool):
        self.enabled = enabled
        self.t0 = time.perf_counter()

    def seconds(self) -> float:
        return time.perf_counter() - self.t0 if self.enabled else 0.0


def run_dcca(train: Dataset, valid: Dataset, cfg: ExperimentConfig, seed: int,
             flags: np.ndarray | None = None) -> DccaResult:
    ge, te = make_encoders(train.graph, cfg, train.vocab_size, seed, labeling=flags is not None)
    if flags is not None:
        ge.set_seen(flags)
    return train_dcca((train.code_sets, train.tokens), (valid.code_sets, valid.tokens),
                      cfg, seed, ge, te)


def fit_view(view: str, train: Dataset, valid: Dataset, cfg: ExperimentConfig, seed: int,
             dcca: DccaResult | None = None, flags: np.ndarray | None = None) -> ViewModel:
    """Fine-tune one inference path; encoders start from ``dcca`` when given
    (copied, so the DCCA result can seed several views) or fresh otherwise."""
    if dcca is not None:
        ge, te = copy.deepcopy(dcca.graph_encoder), copy.deepcopy(dcca.text_encoder)
        proj = dcca.projection
    else:
        ge, te = make_encoders(train.graph, cfg, train.vocab_size, seed,
                               labeling=flags is not None)
        proj = None
    if flags is not None:
        ge.set_seen(flags)
    in_dim = ViewModel.feature_dim(view, ge, te, proj)
    head = MLPHead(in_dim, cfg.hidden, cfg.mlp_layers, cfg.mlp_dropout, rng_stream(seed, 15))
    model = ViewModel(view, ge if view != "text" else None, te if view != "code" else None,
                      head, proj)
    finetune_view(model, train.inputs(view), train.labels, valid.inputs(view), valid.labels,
                  cfg, seed)
    return model


def evaluate(model: ViewModel, test: Dataset) -> tuple[float, float]:
    scores = model.decision_function(test.inputs(model.view))
    return auroc(scores, test.labels), average_precision(scores, test.labels)


def split_811(n: int, seed: int):
    perm = rng_stream(seed, 20).permutation(n)
    n_tr = int(round(0.8 * n))
    n_va = int(round(0.1 * n))
    return perm[:n_tr], perm[n_tr:n_tr + n_va], perm[n_tr + n_va:]


def run_standard(data: Dataset, cfg: ExperimentConfig) -> list[MetricsRow]:
    rows = []
    for seed in cfg.seed_list:
        tr, va, te = (data.subset(i) for i in split_811(len(data.records), seed))
        clock = _Clock(cfg.record_time)
        dcca = run_dcca(tr, va, cfg, seed)
        dcca_secs = clock.seconds()
        for view in cfg.view_list:
            for variant in ("base", "dcca"):
                clock = _Clock(cfg.record_time)
                try:
                    model = fit_view(view, tr, va, cfg, seed, dcca if variant == "dcca" else None)
                    a, p = evaluate(model, te)
                except Exception as exc:
                    raise ExperimentError(f"{view}/{variant} seed {seed}: {exc}") from exc
                corr = dcca.best_corr if variant == "dcca" else float("nan")
                secs = clock.seconds() + (dcca_secs if variant == "dcca" else 0.0)
                rows.append(MetricsRow(cfg.task, view, variant, "0", str(seed), a, p, corr, secs))
                log.info("%s %s seed %d: auroc %.4f", view, variant, seed, a)
    return rows


def fold_pairs(cfg: ExperimentConfig) -> list[tuple[int, int]]:
    if cfg.folds == "all":
        return [(i, (i + 1) % cfg.k) for i in range(cfg.k)]
    parts = [int(x) for x in cfg.folds.split(",")]
    if len(parts) != 2:
        raise ExperimentError("folds must be 'all' or 'i,j'")
    return [tuple(parts)]


def run_unseen_pair(data: Dataset, cfg: ExperimentConfig, seed: int, folds,
                    eval_fold: int, dcca_fold: int) -> list[MetricsRow]:
    """The four code-view variants for one fold pairing."""
    split = build_unseen_experiment(data.records, folds, eval_fold, dcca_fold, seed)
    g = data.graph
    full = Dataset(split.full_train, g, data.vocab_size)
    dtrain = Dataset(split.dcca_train, g, data.vocab_size)
    valid = Dataset(split.valid, g, data.vocab_size)
    test = Dataset(split.test, g, data.vocab_size)
    flags = seen_flags(g, g.leaf_ids(split.seen_codes), inherit=cfg.labeling_inherit)
    fold = f"{eval_fold}-{dcca_fold}"
    rows = []
    for variant in UNSEEN_VARIANTS:
        clock = _Clock(cfg.record_time)
        labeled = variant.endswith("labeling")
        try:
            dcca = None
            if variant.startswith("dcca"):
                # the labeling scheme blocks the DCCA fold; plain DCCA sees all training data
                dcca = run_dcca(dtrain if labeled else full, valid, cfg, seed,
                                flags if labeled else None)
            model = fit_view("code", full, valid, cfg, seed, dcca, flags if labeled else None)
            a, p = evaluate(model, test)
        except Exception as exc:
            raise ExperimentError(f"{variant} fold {fold} seed {seed}: {exc}") from exc
        corr = dcca.best_corr if dcca is not None else float("nan")
        rows.append(MetricsRow(cfg.task, "code", variant, fold, str(seed), a, p, corr,
                               clock.seconds()))
        log.info("unseen %s fold %s seed %d: auroc %.4f", variant, fold, seed, a)
    return rows


def unseen_folds(data: Dataset, cfg: ExperimentConfig, seed: int):
    codes = sorted({c for r in data.records for c in r.codes})
    return kfold_code_split(codes, cfg.k, seed)


def run_unseen(data: Dataset, cfg: ExperimentConfig) -> list[MetricsRow]:
    rows = []
    for seed in cfg.seed_list:
        folds = unseen_folds(data, cfg, seed)
        for i, j in fold_pairs(cfg):
            rows.extend(run_unseen_pair(data, cfg, seed, folds, i, j))
    return rows


def run_experiment(data: Dataset, cfg: ExperimentConfig, mode: str = "standard",
                   out=None) -> list[MetricsRow]:
    """Run every seed (and fold pairing) of ``mode``; with ``out`` set, write
    the per-run rows followed by the mean/std summary rows as CSV."""
    if mode == "standard":
        rows = run_standard(data, cfg)
    elif mode == "unseen":
        rows = run_unseen(data, cfg)
    else:
        raise ExperimentError(f"unknown mode {mode!r}")
    if out is not None:
        write_csv(rows + summarize(rows), out)
    return rows
