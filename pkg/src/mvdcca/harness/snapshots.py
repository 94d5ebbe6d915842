"""Model snapshots: encoder, head and projection arrays in one artifact,
stamped with the configuration hash they were trained under."""

from __future__ import annotations

import numpy as np

from ..artifacts import read_artifact, write_artifact
from ..dcca import DccaProjection
from ..encoders import GraphEncoder, MLPHead, TextEncoder
from ..ontology import OntologyGraph
from .config import ExperimentConfig, config_from_mapping
from .training import ViewModel, make_encoders

SNAPSHOT_VERSION = 1


class SnapshotError(ValueError):
    pass


def _pack(prefix: str, params: dict, out: dict) -> None:
    for k, v in params.items():
        out[f"{prefix}/{k}"] = v


def _unpack(prefix: str, arrays: dict, params: dict) -> None:
    for k in params:
        key = f"{prefix}/{k}"
        if key not in arrays or arrays[key].shape != params[k].shape:
            raise SnapshotError(f"snapshot is missing or has a mis-shaped {key}")
        params[k][...] = arrays[key]


def save_snapshot(path, cfg: ExperimentConfig, vocab_size: int,
                  graph_encoder: GraphEncoder | None = None,
                  text_encoder: TextEncoder | None = None,
                  head: MLPHead | None = None,
                  projection: DccaProjection | None = None,
                  view: str = "", extra: dict | None = None) -> None:
    arrays: dict[str, np.ndarray] = {}
    if graph_encoder is not None:
        _pack("graph", graph_encoder.params, arrays)
        if graph_encoder.labeling:
            arrays["graph_flags"] = graph_encoder.seen_flags
    if text_encoder is not None:
        _pack("text", text_encoder.params, arrays)
    if head is not None:
        _pack("head", head.params, arrays)
    if projection is not None:
        for k in ("U", "V", "mean_c", "mean_a", "correlations"):
            arrays[f"proj/{k}"] = getattr(projection, k)
    meta = {
        "snapshot_version": SNAPSHOT_VERSION,
        "config": cfg.as_dict(),
        "config_hash": cfg.hash(),
        "vocab_size": int(vocab_size),
        "view": view,
        "labeling": bool(graph_encoder is not None and graph_encoder.labeling),
        "head_in_dim": head.in_dim if head is not None else 0,
        "projection": None if projection is None else
        {"L": projection.L, "r_c": projection.r_c, "r_a": projection.r_a},
        "extra": extra or {},
    }
    write_artifact(path, "model_snapshot", meta, arrays)


def load_snapshot(path, graph: OntologyGraph):
    """Rebuild ``(meta, cfg, graph_encoder, text_encoder, head, projection)``;
    parts absent from the snapshot come back as ``None``."""
    meta, arrays = read_artifact(path, "model_snapshot")
    if meta.get("snapshot_version") != SNAPSHOT_VERSION:
        raise SnapshotError(f"unsupported snapshot version {meta.get('snapshot_version')}")
    cfg = config_from_mapping(meta["config"])
    if cfg.hash() != meta["config_hash"]:
        raise SnapshotError("config hash mismatch")
    ge, te = make_encoders(graph, cfg, meta["vocab_size"], 0, labeling=meta["labeling"])
    has = {k.split("/")[0] for k in arrays}
    if "graph" in has:
        _unpack("graph", arrays, ge.params)
        if meta["labeling"]:
            ge.set_seen(arrays["graph_flags"])
    else:
        ge = None
    if "text" in has:
        _unpack("text", arrays, te.params)
    else:
        te = None
    head = None
    if "head" in has:
        head = MLPHead(meta["head_in_dim"], cfg.hidden, cfg.mlp_layers, cfg.mlp_dropout)
        _unpack("head", arrays, head.params)
    proj = None
    if meta["projection"] is not None:
        p = meta["projection"]
        proj = DccaProjection(arrays["proj/U"], arrays["proj/V"], float(p["r_c"]),
                              float(p["r_a"]), int(p["L"]), arrays["proj/mean_c"],
                              arrays["proj/mean_a"], arrays["proj/correlations"])
    return meta, cfg, ge, te, head, proj


def load_view_model(path, graph: OntologyGraph) -> ViewModel:
    meta, _, ge, te, head, proj = load_snapshot(path, graph)
    if head is None or not meta["view"]:
        raise SnapshotError("snapshot holds no classifier head")
    return ViewModel(meta["view"], ge, te, head, proj)
