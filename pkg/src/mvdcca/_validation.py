"""Input checks shared by the estimator wrappers."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .data import AdmissionRecord, DataError
from .ontology import OntologyGraph


def check_records(X, graph: OntologyGraph, y=None) -> list[AdmissionRecord]:
    """Coerce ``X`` into admission records resolved against ``graph``.

    ``X`` holds either :class:`AdmissionRecord` objects or ``(codes, tokens)``
    pairs. Labels come from ``y`` when given, else from the records (pairs
    without ``y`` get a placeholder label of 0).
    """
    if isinstance(X, (str, bytes)) or not isinstance(X, Sequence):
        X = list(X)
    if len(X) == 0:
        raise DataError("X is empty")
    labels = check_labels(y, len(X)) if y is not None else None
    out = []
    for i, item in enumerate(X):
        if isinstance(item, AdmissionRecord):
            rec = item
        else:
            try:
                codes, tokens = item
            except (TypeError, ValueError):
                raise DataError(f"X[{i}] is neither a record nor a (codes, tokens) pair") from None
            rec = AdmissionRecord(tuple(str(c) for c in codes), tuple(int(t) for t in tokens), 0)
        unknown = [c for c in rec.codes if c not in graph.leaf_index]
        if unknown:
            raise DataError(f"X[{i}] has unknown code {unknown[0]!r}")
        if labels is not None:
            rec = AdmissionRecord(rec.codes, rec.tokens, int(labels[i]))
        out.append(rec)
    return out


def check_labels(y, n: int) -> np.ndarray:
    y = np.asarray(y).ravel()
    if y.shape[0] != n:
        raise DataError(f"y has {y.shape[0]} entries for {n} records")
    if not np.all(np.isin(y, (0, 1))):
        raise DataError("labels must be 0/1")
    return y.astype(np.int64)


def check_view(view: str) -> str:
    if view not in ("code", "text", "both"):
        raise ValueError(f"view must be 'code', 'text' or 'both', got {view!r}")
    return view
