"""Synthetic admissions with a shared latent class behind both views.

Every record draws a latent class ``z``. Its codes come from the leaves of
the class's hot subtrees (or from all leaves with probability
``code_noise``), its tokens from the class topic distribution (or the whole
vocabulary with probability ``token_noise``), and its label from
``Bernoulli(sigmoid(beta[z]))``. The label depends on ``z`` only, so both
views carry the same predictive signal.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .numeric import rng_stream
from .ontology import OntologyGraph


class DataError(ValueError):
    pass


@dataclass(frozen=True)
class AdmissionRecord:
    codes: tuple[str, ...]
    tokens: tuple[int, ...]
    label: int

    def __post_init__(self):
        if not self.codes:
            raise DataError("a record needs at least one code")
        if self.label not in (0, 1):
            raise DataError(f"label must be 0 or 1, got {self.label!r}")


@dataclass(frozen=True)
class GeneratorSpec:
    n_classes: int = 4
    codes_min: int = 3
    codes_max: int = 8
    code_noise: float = 0.3
    tokens_min: int = 60
    tokens_max: int = 200
    vocab_size: int = 2000
    topic_concentration: float = 0.5
    token_noise: float = 0.3
    beta: tuple[float, ...] = field(default=())
    hot_level: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.n_classes < 1:
            raise DataError("n_classes must be positive")
        if not 1 <= self.codes_min <= self.codes_max:
            raise DataError("need 1 <= codes_min <= codes_max")
        if not 0 <= self.tokens_min <= self.tokens_max:
            raise DataError("need 0 <= tokens_min <= tokens_max")
        for name in ("code_noise", "token_noise"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise DataError(f"{name} must be in [0, 1], got {v}")
        if self.vocab_size < self.n_classes:
            raise DataError("vocabulary must have at least one token per class")
        if self.hot_level < 0 or self.hot_level == 1:
            raise DataError("hot_level must be 0 (automatic) or a level >= 2")
        if self.topic_concentration <= 0:
            raise DataError("topic_concentration must be positive")
        if not self.beta:
            object.__setattr__(self, "beta", tuple(np.linspace(-2.0, 2.0, self.n_classes)))
        if len(self.beta) != self.n_classes:
            raise DataError(f"beta needs {self.n_classes} entries, got {len(self.beta)}")
        object.__setattr__(self, "beta", tuple(float(b) for b in self.beta))

    @classmethod
    def from_mapping(cls, values: dict) -> "GeneratorSpec":
        known = {f.name: f for f in fields(cls)}
        kwargs = {}
        for key, raw in values.items():
            if key not in known:
                raise DataError(f"unknown generator setting {key!r}")
            if key == "beta":
                kwargs[key] = tuple(float(v) for v in str(raw).split(",") if v.strip()) \
                    if isinstance(raw, str) else tuple(raw)
            elif key in ("code_noise", "token_noise", "topic_concentration"):
                kwargs[key] = float(raw)
            else:
                kwargs[key] = int(raw)
        return cls(**kwargs)

    def to_mapping(self) -> dict:
        d = asdict(self)
        d["beta"] = ",".join(repr(b) for b in self.beta)
        return d


@dataclass(frozen=True)
class GeneratorModel:
    """Class-conditional structure shared by all records of one dataset."""

    hot_leaves: tuple[np.ndarray, ...]
    topic_tokens: tuple[np.ndarray, ...]
    topic_cdf: tuple[np.ndarray, ...]
    all_leaves: tuple[str, ...]


def _hot_level(graph: OntologyGraph, n_classes: int, level: int = 0) -> list[int]:
    """Roots of the hot subtrees: the nodes of ``level``, or of the
    shallowest level with at least one node per class when ``level`` is 0."""
    levels = [level] if level else range(2, graph.depth + 2)
    for lv in levels:
        nodes = [nd.id for nd in graph.nodes if nd.level == lv]
        if len(nodes) >= n_classes:
            return nodes
    if level:
        raise DataError(f"level {level} has fewer than {n_classes} nodes")
    raise DataError(f"ontology has fewer than {n_classes} leaves")


def build_model(graph: OntologyGraph, spec: GeneratorSpec) -> GeneratorModel:
    rng = rng_stream(spec.seed, 0)
    roots = _hot_level(graph, spec.n_classes, spec.hot_level)
    roots = [roots[i] for i in rng.permutation(len(roots))]
    below: dict[int, list[str]] = {r: [] for r in roots}
    for code, leaf in graph.leaf_index.items():
        for anc in graph.ancestors(leaf) + [leaf]:
            if anc in below:
                below[anc].append(code)
    hot = []
    for z in range(spec.n_classes):
        codes = sorted(c for r in roots[z::spec.n_classes] for c in below[r])
        hot.append(np.array(codes))
    perm = rng.permutation(spec.vocab_size)
    segments = np.array_split(perm, spec.n_classes)
    cdfs = []
    for seg in segments:
        w = rng.dirichlet(np.full(len(seg), spec.topic_concentration))
        cdf = np.cumsum(w)
        cdf[-1] = 1.0
        cdfs.append(cdf)
    return GeneratorModel(tuple(hot), tuple(np.sort(s) for s in segments),
                          tuple(cdfs), tuple(sorted(graph.leaf_index)))


def _draw_record(model: GeneratorModel, spec: GeneratorSpec, rng: np.random.Generator):
    z = int(rng.integers(spec.n_classes))
    m = int(rng.integers(spec.codes_min, spec.codes_max + 1))
    codes = []
    for _ in range(m):
        pool = model.all_leaves if rng.random() < spec.code_noise else model.hot_leaves[z]
        c = str(pool[int(rng.integers(len(pool)))])
        if c not in codes:
            codes.append(c)
    n = int(rng.integers(spec.tokens_min, spec.tokens_max + 1))
    noise = rng.random(n) < spec.token_noise
    uniform = rng.integers(spec.vocab_size, size=n)
    idx = np.searchsorted(model.topic_cdf[z], rng.random(n), side="right")
    topical = model.topic_tokens[z][np.minimum(idx, len(model.topic_cdf[z]) - 1)]
    tokens = np.where(noise, uniform, topical)
    p = 1.0 / (1.0 + np.exp(-spec.beta[z]))
    label = int(rng.random() < p)
    return z, AdmissionRecord(tuple(sorted(codes)), tuple(int(t) for t in tokens), label)


def gen_admissions(graph: OntologyGraph, spec: GeneratorSpec, n_records: int,
                   return_classes: bool = False):
    """Draw ``n_records`` admissions; record ``i`` uses its own random
    stream so any prefix of the output is stable."""
    if n_records < 1:
        raise DataError(f"n_records must be >= 1, got {n_records}")
    model = build_model(graph, spec)
    records, classes = [], []
    for i in range(n_records):
        z, rec = _draw_record(model, spec, rng_stream(spec.seed, 1, i))
        records.append(rec)
        classes.append(z)
    if return_classes:
        return records, np.array(classes)
    return records


def save_dataset(records: Iterable[AdmissionRecord], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            fh.write(json.dumps({"codes": list(r.codes), "tokens": list(r.tokens),
                                 "label": r.label}, separators=(",", ":")))
            fh.write("\n")


def load_dataset(path, graph: OntologyGraph | None = None) -> list[AdmissionRecord]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                rec = AdmissionRecord(tuple(str(c) for c in obj["codes"]),
                                      tuple(int(t) for t in obj["tokens"]),
                                      int(obj["label"]))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise DataError(f"{path}:{lineno}: malformed record ({exc})") from None
            if graph is not None:
                for c in rec.codes:
                    if c not in graph.leaf_index:
                        raise DataError(f"{path}:{lineno}: unknown code {c!r}")
            records.append(rec)
    return records


def dataset_views(records: Sequence[AdmissionRecord], graph: OntologyGraph):
    """Split records into ``(code id sets, token lists, labels)``."""
    code_sets = [graph.leaf_ids(r.codes) for r in records]
    tokens = [list(r.tokens) for r in records]
    labels = np.array([r.label for r in records], dtype=np.int64)
    return code_sets, tokens, labels


def read_key_values(path) -> dict[str, str]:
    """Flat ``key = value`` file; blank lines and ``#`` comments ignored."""
    out = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DataError(f"{path}:{lineno}: expected key = value")
        k, v = line.split("=", 1)
        out[k.strip()] = v.strip()
    return out
