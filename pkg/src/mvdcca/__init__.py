"""Multi-view learning between a relational graph encoder over a code
ontology and a two-stage recurrent text encoder, coupled by deep CCA."""

from .dcca import (DccaProjection, cca_oracle, compute_projections, dcca_gradient, project,
                   total_correlation)
from .data import AdmissionRecord, GeneratorSpec, gen_admissions, load_dataset, save_dataset
from .estimators import DCCAEmbedder, ViewClassifier
from .harness import ExperimentConfig, auroc, average_precision, load_config, run_experiment
from .ontology import OntologyGraph, build_ontology, build_tree, random_codes, read_codes
from .unseen import build_unseen_experiment, kfold_code_split, seen_flags

__version__ = "0.1.0"

__all__ = [
    "AdmissionRecord", "DCCAEmbedder", "DccaProjection", "ExperimentConfig", "GeneratorSpec",
    "OntologyGraph", "ViewClassifier", "auroc", "average_precision", "build_ontology",
    "build_tree", "build_unseen_experiment", "cca_oracle", "compute_projections",
    "dcca_gradient", "gen_admissions", "kfold_code_split", "load_config", "load_dataset",
    "project", "random_codes", "read_codes", "run_experiment", "save_dataset", "seen_flags",
    "total_correlation",
]
