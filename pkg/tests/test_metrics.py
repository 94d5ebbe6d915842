import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mvdcca.harness.metrics import MetricError, auroc, average_precision


def auroc_pairs(s, y):
    pos, neg = s[y == 1], s[y == 0]
    total = sum(1.0 if p > n else 0.5 if p == n else 0.0 for p, n in itertools.product(pos, neg))
    return total / (len(pos) * len(neg))


def ap_ranks(s, y):
    order = sorted(range(len(s)), key=lambda i: -s[i])  # stable: ties keep input order
    hits, precisions = 0, []
    for rank, i in enumerate(order, 1):
        if y[i]:
            hits += 1
            precisions.append(hits / rank)
    return math.fsum(precisions) / len(precisions)


def test_examples():
    s, y = np.array([0.9, 0.8, 0.7, 0.1]), np.array([1, 0, 1, 0])
    assert auroc(s, y) == 0.75
    assert average_precision(s, y) == pytest.approx((1 + 2 / 3) / 2, abs=1e-15)
    assert auroc([3, 2, 1, 0], [1, 1, 0, 0]) == 1.0
    assert auroc([1, 1, 1, 1], [1, 0, 1, 0]) == 0.5
    assert average_precision([3, 2, 1, 0], [1, 1, 0, 0]) == 1.0
    assert average_precision([4, 3, 2, 1, 0], [0, 0, 0, 0, 1]) == pytest.approx(1 / 5)


labels_and_scores = st.integers(2, 40).flatmap(lambda n: st.tuples(
    st.lists(st.integers(0, 1), min_size=n, max_size=n).filter(lambda y: 0 < sum(y) < n),
    st.lists(st.integers(0, 6).map(lambda v: v / 3), min_size=n, max_size=n)))


@settings(max_examples=100, deadline=None)
@given(labels_and_scores)
def test_match_enumeration(data):
    y, s = map(np.array, data)
    assert auroc(s, y) == auroc_pairs(s, y)
    assert average_precision(s, y) == ap_ranks(s, y)


@settings(max_examples=50, deadline=None)
@given(labels_and_scores, st.sampled_from([np.exp, np.arctan, lambda v: 3 * v ** 3 + v]))
def test_auroc_invariant_to_monotone_maps(data, fn):
    y, s = map(np.array, data)
    assert auroc(fn(s), y) == auroc(s, y)


def test_errors():
    with pytest.raises(MetricError):
        auroc([1, 2], [1, 1])
    with pytest.raises(MetricError):
        average_precision([1, 2], [0, 0])
    with pytest.raises(MetricError):
        auroc([1, 2, 3], [0, 1])
    with pytest.raises(MetricError):
        auroc([1, 2], [0, 2])
