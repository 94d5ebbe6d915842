import numpy as np
import pytest

from mvdcca.ontology import build_ontology, random_codes


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_graph():
    return build_ontology(random_codes([3, 3, 2], 7))


@pytest.fixture(scope="session")
def tiny_setup():
    """A small ontology, dataset and config that train in about a second."""
    from mvdcca.data import GeneratorSpec, gen_admissions
    from mvdcca.harness import Dataset, ExperimentConfig

    graph = build_ontology(random_codes([4, 3, 2], 1))
    spec = GeneratorSpec(codes_min=1, codes_max=3, tokens_min=3, tokens_max=12, vocab_size=60,
                         seed=2)
    data = Dataset(gen_admissions(graph, spec, 300), graph, spec.vocab_size)
    cfg = ExperimentConfig(hidden=4, rgcn_layers=2, block_size=4, dcca_epochs=3, task_epochs=3,
                           L=3, dcca_batch=64, task_batch=32, views="text,code,both", k=3,
                           patience=2)
    return graph, data, cfg
