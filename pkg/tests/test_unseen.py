import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mvdcca.data import GeneratorSpec, gen_admissions
from mvdcca.ontology import build_ontology, random_codes
from mvdcca.unseen import (SplitError, augment_labels, build_unseen_experiment,
                           kfold_code_split, seen_flags)


@pytest.fixture(scope="module")
def graph():
    return build_ontology(random_codes([4, 4, 3], 5))


@pytest.fixture(scope="module")
def records(graph):
    spec = GeneratorSpec(codes_min=1, codes_max=3, tokens_min=1, tokens_max=3, seed=3)
    return gen_admissions(graph, spec, 600)


def used_codes(records):
    return sorted({c for r in records for c in r.codes})


def test_augment_labels(graph, rng):
    h0 = rng.standard_normal((graph.n_nodes, 4))
    flags = seen_flags(graph, graph.leaves)
    out = augment_labels(h0, flags)
    assert out.shape == (graph.n_nodes, 5)
    np.testing.assert_array_equal(out[:, :4], h0)
    for n in graph.nodes:
        assert out[n.id, 4] == (1.0 if n.is_leaf else 0.0)
    with pytest.raises(SplitError):
        augment_labels(h0, flags[:-1])


def test_seen_flags_inherit(graph):
    leaves = list(graph.leaves)
    seen = [u for u in leaves if graph.nodes[u].code[0] == graph.nodes[leaves[0]].code[0]]
    flags = seen_flags(graph, seen, inherit=True)
    top = graph.ancestors(leaves[0])[1]
    assert flags[top] == 1.0 and flags[0] == 0.0
    assert seen_flags(graph, seen)[top] == 0.0
    with pytest.raises(SplitError):
        seen_flags(graph, [])
    with pytest.raises(SplitError):
        seen_flags(graph, [0])


def test_kfold_examples():
    folds = kfold_code_split(list("abcdefghij"), 5, seed=1)
    assert [len(f) for f in folds] == [2] * 5
    assert sorted(sum(folds, [])) == list("abcdefghij")
    assert folds == kfold_code_split(list("abcdefghij"), 5, seed=1)
    assert folds != kfold_code_split(list("abcdefghij"), 5, seed=2)
    for k in (1, 11):
        with pytest.raises(SplitError):
            kfold_code_split(list("abcdefghij"), k, 0)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 30), st.integers(0, 1000))
def test_kfold_balanced_partition(n, seed):
    k = min(n, 2 + seed % 9)
    folds = kfold_code_split(list(range(n)), k, seed)
    sizes = [len(f) for f in folds]
    assert max(sizes) - min(sizes) <= 1
    assert sorted(sum(folds, [])) == list(range(n))


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 4), st.integers(0, 1000))
def test_split_invariants(records, i, seed):
    folds = kfold_code_split(used_codes(records), 5, seed)
    s = build_unseen_experiment(records, folds, i, seed=seed)
    held, blocked = set(folds[i]), set(folds[s.dcca_fold])
    assert s.dcca_fold == (i + 1) % 5
    evals = [r for r in records if held & set(r.codes)]
    assert sorted(map(id, s.valid + s.test)) == sorted(map(id, evals))
    assert not set(map(id, s.valid)) & set(map(id, s.test))
    assert len(s.valid) - len(s.test) in (0, 1)
    assert set(map(id, s.dcca_train)) <= set(map(id, s.full_train))
    assert not set(map(id, s.full_train)) & set(map(id, evals))
    assert not {c for r in s.dcca_train for c in r.codes} & blocked
    assert set(s.seen_codes) == {c for r in s.dcca_train for c in r.codes}
    # every evaluation record holds a code never seen in training
    train_codes = {c for r in s.full_train for c in r.codes}
    assert all(set(r.codes) - train_codes for r in s.test)


def test_eval_set_sizes_match_brute_force(records):
    folds = kfold_code_split(used_codes(records), 5, 0)
    sizes = []
    for i in range(5):
        s = build_unseen_experiment(records, folds, i)
        brute = sum(1 for r in records if any(c in folds[i] for c in r.codes))
        assert len(s.valid) + len(s.test) == brute
        sizes.append(brute)
    # each record is counted once per fold it touches
    touched = sum(len({j for j, f in enumerate(folds) for c in r.codes if c in f})
                  for r in records)
    assert sum(sizes) == touched


def test_degenerate_pairing(records):
    folds = [["nope"], used_codes(records)]
    with pytest.raises(SplitError, match="degenerate fold pairing"):
        build_unseen_experiment(records, folds, 0, 1)
    with pytest.raises(SplitError):
        build_unseen_experiment(records, folds, 0, 0)


def test_split_deterministic(records):
    folds = kfold_code_split(used_codes(records), 5, 3)
    assert build_unseen_experiment(records, folds, 2, 4, seed=1) == \
        build_unseen_experiment(records, folds, 2, 4, seed=1)
