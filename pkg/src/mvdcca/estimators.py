"""scikit-learn style wrappers around the training harness.

``DCCAEmbedder`` learns the correlated code/text embedding and maps records
into canonical coordinates; ``ViewClassifier`` fine-tunes one inference
path, optionally initialised from a fitted embedder.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_records, check_view
from .harness.config import ExperimentConfig
from .harness.experiment import Dataset, fit_view, run_dcca
from .harness.training import encode_text
from .numeric import rng_stream
from .ontology import OntologyGraph


def _train_valid(records, seed: int, valid_fraction: float):
    n = len(records)
    n_va = max(2, int(round(valid_fraction * n)))
    if n - n_va < 2:
        raise ValueError(f"need more records to hold out {n_va} for validation, got {n}")
    perm = rng_stream(seed, 30).permutation(n)
    return [records[i] for i in perm[n_va:]], [records[i] for i in perm[:n_va]]


class DCCAEmbedder(TransformerMixin, BaseEstimator):
    """Deep CCA between the graph encoder and the text encoder.

    Parameters
    ----------
    graph : OntologyGraph
        Ontology the codes resolve against.
    config : ExperimentConfig, optional
        Encoder and DCCA-phase settings; defaults to ``ExperimentConfig()``.
    view : {'code', 'text', 'both'}
        Which canonical coordinates :meth:`transform` returns.
    valid_fraction : float
        Share of ``X`` held out to pick the best epoch.
    random_state : int
        Seed for initialisation, shuffling and the hold-out split.
    """

    def __init__(self, graph: OntologyGraph = None, config: ExperimentConfig = None,
                 view: str = "both", valid_fraction: float = 0.1, random_state: int = 0):
        self.graph = graph
        self.config = config
        self.view = view
        self.valid_fraction = valid_fraction
        self.random_state = random_state

    def _cfg(self):
        return self.config if self.config is not None else ExperimentConfig()

    def fit(self, X, y=None):
        if self.graph is None:
            raise ValueError("DCCAEmbedder needs an ontology graph")
        check_view(self.view)
        records = check_records(X, self.graph)
        tr, va = _train_valid(records, self.random_state, self.valid_fraction)
        cfg = self._cfg()
        train = Dataset(tr, self.graph, cfg.vocab_size)
        valid = Dataset(va, self.graph, train.vocab_size)
        self.result_ = run_dcca(train, valid, cfg, self.random_state)
        self.vocab_size_ = train.vocab_size
        self.correlation_ = self.result_.best_corr
        self.n_features_out_ = self.result_.projection.L * (2 if self.view == "both" else 1)
        return self

    def transform(self, X):
        check_is_fitted(self, "result_")
        records = check_records(X, self.graph)
        data = Dataset(records, self.graph, self.vocab_size_)
        res = self.result_
        proj = res.projection
        parts = []
        if self.view in ("code", "both"):
            parts.append((res.graph_encoder.forward(data.code_sets)[0] - proj.mean_c) @ proj.U)
        if self.view in ("text", "both"):
            parts.append((encode_text(res.text_encoder, data.tokens) - proj.mean_a) @ proj.V)
        return np.hstack(parts)


class ViewClassifier(ClassifierMixin, BaseEstimator):
    """Binary classifier on one view (code, text or both).

    Parameters
    ----------
    graph : OntologyGraph
        Ontology the codes resolve against.
    view : {'code', 'text', 'both'}
        Inference path to train.
    config : ExperimentConfig, optional
        Encoder and fine-tuning settings.
    embedder : DCCAEmbedder, optional
        A fitted embedder whose encoders and frozen projection initialise
        the classifier; without it the encoders start from scratch.
    valid_fraction : float
        Share of ``X`` held out for early stopping.
    random_state : int
        Seed for initialisation, dropout, batching and the hold-out split.
    """

    def __init__(self, graph: OntologyGraph = None, view: str = "text",
                 config: ExperimentConfig = None, embedder: DCCAEmbedder = None,
                 valid_fraction: float = 0.1, random_state: int = 0):
        self.graph = graph
        self.view = view
        self.config = config
        self.embedder = embedder
        self.valid_fraction = valid_fraction
        self.random_state = random_state

    def fit(self, X, y):
        if self.graph is None:
            raise ValueError("ViewClassifier needs an ontology graph")
        check_view(self.view)
        records = check_records(X, self.graph, y)
        tr, va = _train_valid(records, self.random_state, self.valid_fraction)
        cfg = self.config if self.config is not None else ExperimentConfig()
        dcca = None
        vocab = cfg.vocab_size
        if self.embedder is not None:
            check_is_fitted(self.embedder, "result_")
            dcca = self.embedder.result_
            vocab = self.embedder.vocab_size_
        train = Dataset(tr, self.graph, vocab)
        valid = Dataset(va, self.graph, train.vocab_size)
        self.model_ = fit_view(self.view, train, valid, cfg, self.random_state, dcca)
        self.vocab_size_ = train.vocab_size
        self.classes_ = np.array([0, 1])
        return self

    def decision_function(self, X):
        check_is_fitted(self, "model_")
        data = Dataset(check_records(X, self.graph), self.graph, self.vocab_size_)
        return self.model_.decision_function(data.inputs(self.view))

    def predict_proba(self, X):
        p = 0.5 * (1.0 + np.tanh(0.5 * self.decision_function(X)))
        return np.column_stack([1.0 - p, p])

    def predict(self, X):
        return (self.decision_function(X) > 0).astype(np.int64)
