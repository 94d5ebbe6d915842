"""Seen/unseen code labeling and the unseen-code experiment splits."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .data import AdmissionRecord
from .numeric import rng_stream
from .ontology import OntologyGraph


class SplitError(ValueError):
    pass


def seen_flags(graph: OntologyGraph, seen: Iterable[int], inherit: bool = False) -> np.ndarray:
    """0/1 flag per node: 1 for seen leaves, 0 for everything else.

    With ``inherit=True`` an internal node is flagged 1 when every leaf
    below it is seen.
    """
    seen = set(int(u) for u in seen)
    if not seen:
        raise SplitError("the seen set is empty")
    leaves = set(int(u) for u in graph.leaves)
    if not seen <= leaves:
        raise SplitError(f"seen set contains non-leaf nodes: {sorted(seen - leaves)[:5]}")
    flags = np.zeros(graph.n_nodes)
    flags[sorted(seen)] = 1.0
    if inherit:
        all_seen = np.ones(graph.n_nodes, dtype=bool)
        for leaf in leaves:
            if leaf not in seen:
                all_seen[graph.ancestors(leaf)] = False
        for nd in graph.nodes:
            if not nd.is_leaf and all_seen[nd.id]:
                flags[nd.id] = 1.0
    return flags


def augment_labels(node_init: np.ndarray, flags: np.ndarray) -> np.ndarray:
    """Append the (non-trainable) seen flag as an extra column."""
    node_init = np.asarray(node_init, dtype=np.float64)
    flags = np.asarray(flags, dtype=np.float64)
    if flags.shape != (node_init.shape[0],):
        raise SplitError("need exactly one flag per node")
    return np.hstack([node_init, flags[:, None]])


def kfold_code_split(codes: Sequence, k: int, seed: int) -> list[list]:
    codes = list(codes)
    if not 2 <= k <= len(codes):
        raise SplitError(f"k={k} out of range for {len(codes)} codes")
    if len(set(codes)) != len(codes):
        raise SplitError("codes must be unique")
    perm = rng_stream(seed, 2).permutation(len(codes))
    return [[codes[i] for i in part] for part in np.array_split(perm, k)]


@dataclass(frozen=True)
class UnseenExperimentSplit:
    dcca_train: tuple[AdmissionRecord, ...]
    full_train: tuple[AdmissionRecord, ...]
    valid: tuple[AdmissionRecord, ...]
    test: tuple[AdmissionRecord, ...]
    eval_fold: int
    dcca_fold: int
    k: int
    seen_codes: tuple[str, ...]


def build_unseen_experiment(records: Sequence[AdmissionRecord], folds: Sequence[Sequence[str]],
                            eval_fold: int, dcca_fold: int | None = None,
                            seed: int = 0) -> UnseenExperimentSplit:
    """Split records for one (eval fold, DCCA fold) pairing.

    Records touching an eval-fold code form the evaluation set, halved into
    valid and test (valid takes the odd record). The rest is the full
    training set; its records free of DCCA-fold codes form the DCCA
    training set, whose codes are the seen set.
    """
    k = len(folds)
    if dcca_fold is None:
        dcca_fold = (eval_fold + 1) % k
    if not (0 <= eval_fold < k and 0 <= dcca_fold < k):
        raise SplitError("fold index out of range")
    if eval_fold == dcca_fold:
        raise SplitError("eval and DCCA folds must differ")
    held = set(folds[eval_fold])
    blocked = set(folds[dcca_fold])
    evals, train = [], []
    for r in records:
        (evals if held.intersection(r.codes) else train).append(r)
    dcca = [r for r in train if not blocked.intersection(r.codes)]
    if not evals or not dcca:
        raise SplitError(f"degenerate fold pairing ({eval_fold}, {dcca_fold})")
    perm = rng_stream(seed, 3, eval_fold, dcca_fold).permutation(len(evals))
    n_valid = (len(evals) + 1) // 2
    valid = [evals[i] for i in perm[:n_valid]]
    test = [evals[i] for i in perm[n_valid:]]
    seen = sorted({c for r in dcca for c in r.codes})
    return UnseenExperimentSplit(tuple(dcca), tuple(train), tuple(valid), tuple(test),
                                 eval_fold, dcca_fold, k, tuple(seen))
