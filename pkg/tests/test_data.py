import numpy as np
import pytest
from scipy.special import expit

from mvdcca.data import (AdmissionRecord, DataError, GeneratorSpec, build_model,
                         dataset_views, gen_admissions, load_dataset, read_key_values,
                         save_dataset)
from mvdcca.dcca import cca_oracle
from mvdcca.harness.metrics import auroc
from mvdcca.ontology import build_ontology, random_codes


@pytest.fixture(scope="module")
def graph():
    return build_ontology(random_codes([4, 4, 3], 2))


def segment_of(model, vocab_size):
    seg = np.empty(vocab_size, dtype=np.int64)
    for z, toks in enumerate(model.topic_tokens):
        seg[toks] = z
    return seg


def hot_class(model):
    return {c: z for z, leaves in enumerate(model.hot_leaves) for c in leaves}


def test_noise_free_views_identify_class(graph):
    spec = GeneratorSpec(n_classes=2, code_noise=0.0, token_noise=0.0, beta=(2.0, -2.0),
                         vocab_size=300, tokens_min=5, tokens_max=20, seed=4)
    records, z = gen_admissions(graph, spec, 4000, return_classes=True)
    model = build_model(graph, spec)
    assert not set(model.hot_leaves[0]) & set(model.hot_leaves[1])
    seg, hot = segment_of(model, 300), hot_class(model)
    code_z = np.array([{hot[c] for c in r.codes}.pop() for r in records])
    text_z = np.array([set(seg[list(r.tokens)]).pop() for r in records])
    assert all(len({hot[c] for c in r.codes}) == 1 for r in records)
    np.testing.assert_array_equal(code_z, z)
    np.testing.assert_array_equal(text_z, z)
    # the Bayes rule predicts y = 1 exactly for the class with beta = +2
    y = np.array([r.label for r in records])
    acc = np.mean((code_z == 0) == (y == 1))
    se = np.sqrt(0.881 * 0.119 / len(y))
    assert abs(acc - expit(2.0)) < 3 * se


def test_pure_noise_is_uninformative(graph):
    spec = GeneratorSpec(n_classes=2, code_noise=1.0, token_noise=1.0, vocab_size=300,
                         tokens_min=5, tokens_max=20, seed=5)
    records = gen_admissions(graph, spec, 6000)
    seg = segment_of(build_model(graph, spec), 300)
    score = np.array([np.mean(seg[list(r.tokens)] == 0) for r in records])
    y = np.array([r.label for r in records])
    se = np.sqrt((len(y) + 1) / (12 * y.sum() * (len(y) - y.sum())))
    assert abs(auroc(score, y) - 0.5) < 3 * se


def test_label_base_rate(graph):
    spec = GeneratorSpec(tokens_min=1, tokens_max=2, seed=9)
    y = np.array([r.label for r in gen_admissions(graph, spec, 10_000)])
    p = np.mean(expit(np.array(spec.beta)))
    se = np.sqrt(p * (1 - p) / len(y))
    assert abs(y.mean() - p) < 3 * se


def class_features(records, model, graph, vocab_size, Z):
    seg, hot = segment_of(model, vocab_size), hot_class(model)
    fc = np.zeros((len(records), Z))
    fa = np.zeros((len(records), Z))
    for i, r in enumerate(records):
        for c in r.codes:
            if c in hot:
                fc[i, hot[c]] += 1
        fa[i] = np.bincount(seg[list(r.tokens)], minlength=Z)
    return fc, fa


def test_cross_view_correlation_degrades_with_noise(graph):
    Z = 3
    for field in ("code_noise", "token_noise"):
        totals = []
        for rho in (0.0, 0.3, 0.6, 0.9):
            spec = GeneratorSpec(n_classes=Z, tokens_min=10, tokens_max=20, vocab_size=300,
                                 seed=3, **{field: rho, ("token_noise" if field == "code_noise"
                                                          else "code_noise"): 0.2})
            records = gen_admissions(graph, spec, 3000)
            fc, fa = class_features(records, build_model(graph, spec), graph, 300, Z)
            totals.append(np.sum(cca_oracle(fc, fa, 1e-6)[:Z - 1]))
        assert np.all(np.diff(totals) < 0), (field, totals)


def test_generation_deterministic_and_prefix_stable(graph, tmp_path):
    spec = GeneratorSpec(seed=11, tokens_min=3, tokens_max=9)
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    save_dataset(gen_admissions(graph, spec, 200), a)
    save_dataset(gen_admissions(graph, spec, 200), b)
    assert a.read_bytes() == b.read_bytes()
    assert gen_admissions(graph, spec, 50) == gen_admissions(graph, spec, 200)[:50]


def test_record_ranges(graph):
    spec = GeneratorSpec(codes_min=2, codes_max=4, tokens_min=7, tokens_max=9, vocab_size=50,
                         seed=1)
    for r in gen_admissions(graph, spec, 300):
        assert 1 <= len(r.codes) <= 4 and len(set(r.codes)) == len(r.codes)
        assert 7 <= len(r.tokens) <= 9
        assert all(0 <= t < 50 for t in r.tokens)
        assert all(c in graph.leaf_index for c in r.codes)


def test_spec_validation(graph):
    with pytest.raises(DataError):
        GeneratorSpec(code_noise=1.5)
    with pytest.raises(DataError):
        GeneratorSpec(beta=(1.0,))
    with pytest.raises(DataError):
        GeneratorSpec(codes_min=4, codes_max=2)
    with pytest.raises(DataError):
        gen_admissions(graph, GeneratorSpec(), 0)
    spec = GeneratorSpec.from_mapping({"n_classes": "3", "beta": "1,0,-1", "code_noise": "0.1"})
    assert spec.beta == (1.0, 0.0, -1.0)
    assert GeneratorSpec.from_mapping(spec.to_mapping()) == spec
    with pytest.raises(DataError):
        GeneratorSpec.from_mapping({"bogus": 1})


def test_round_trip(graph, tmp_path):
    records = gen_admissions(graph, GeneratorSpec(seed=2, tokens_min=0, tokens_max=30), 1000)
    save_dataset(records, tmp_path / "d.jsonl")
    assert load_dataset(tmp_path / "d.jsonl", graph) == records


def test_load_errors(graph, tmp_path):
    records = gen_admissions(graph, GeneratorSpec(seed=2, tokens_min=1, tokens_max=3), 3)
    p = tmp_path / "d.jsonl"
    save_dataset(records, p)
    text = p.read_text()
    p.write_text(text[:-10])
    with pytest.raises(DataError, match=":3:"):
        load_dataset(p)
    p.write_text('{"codes": ["ZZZ"], "tokens": [], "label": 1}\n')
    with pytest.raises(DataError, match="'ZZZ'"):
        load_dataset(p, graph)
    p.write_text("")
    assert load_dataset(p) == []


def test_record_validation():
    with pytest.raises(DataError):
        AdmissionRecord((), (1,), 0)
    with pytest.raises(DataError):
        AdmissionRecord(("A",), (1,), 2)


def test_dataset_views(graph):
    records = gen_admissions(graph, GeneratorSpec(seed=1, tokens_min=1, tokens_max=4), 5)
    cs, tk, y = dataset_views(records, graph)
    assert cs[0] == graph.leaf_ids(records[0].codes)
    assert tk[1] == list(records[1].tokens)
    assert y.dtype == np.int64 and len(y) == 5


def test_read_key_values(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("# comment\na = 1\n\nb=x # trailing\n")
    assert read_key_values(p) == {"a": "1", "b": "x"}
    p.write_text("novalue\n")
    with pytest.raises(DataError, match=":1:"):
        read_key_values(p)


def test_hot_level_controls_subtrees(graph):
    # 3 chapters cannot host 4 classes, so the automatic level is the next one
    auto = build_model(graph, GeneratorSpec(n_classes=4, seed=3))
    prefixes = [{c[:2] for c in h} for h in auto.hot_leaves]
    assert all(not prefixes[a] & prefixes[b] for a in range(4) for b in range(a + 1, 4))
    chapters = build_model(graph, GeneratorSpec(n_classes=3, hot_level=2, seed=3))
    assert sorted(len({c[0] for c in h}) for h in chapters.hot_leaves) == [1, 1, 1]
    leaves = build_model(graph, GeneratorSpec(hot_level=graph.depth + 1, seed=3))
    sizes = [len(h) for h in leaves.hot_leaves]
    assert sum(sizes) == len(graph.leaves) and max(sizes) - min(sizes) <= 1


def test_hot_level_errors(graph):
    with pytest.raises(DataError):
        GeneratorSpec(hot_level=1)
    with pytest.raises(DataError, match="fewer than 4 nodes"):
        build_model(graph, GeneratorSpec(n_classes=4, hot_level=2))
