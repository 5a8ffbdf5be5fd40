import itertools
from math import comb

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog

from pwareg.enumeration import (
    EnumerationStats,
    binary_bound,
    enumerate_binary_labelings,
    enumerate_multiclass_labelings,
    label_from_pairs,
    labels_from_pair_masks,
    multiclass_bound,
    negate,
    pair_list,
)


def separable(X, plus):
    """Test-local LP: is there (h, b) with sign(h.x + b) = +/- and margin 1?"""
    s = np.where(plus, 1.0, -1.0)
    A = -s[:, None] * np.hstack([X, np.ones((len(X), 1))])
    res = linprog(np.zeros(X.shape[1] + 1), A_ub=A, b_ub=-np.ones(len(X)),
                  bounds=[(None, None)] * (X.shape[1] + 1), method="highs")
    return res.status == 0


def lp_dichotomies(X):
    N = len(X)
    out = set()
    for bits in itertools.product([True, False], repeat=N):
        if separable(X, np.array(bits)):
            out.add(tuple(1 if b else 2 for b in bits))
    return out


def general_position_points(rng, N, d):
    return rng.integers(-3, 4, size=(N, d)) + rng.uniform(-0.1, 0.1, size=(N, d))


def test_three_points_on_a_line():
    labs = {tuple(q) for q in enumerate_binary_labelings([[0], [1], [2]])}
    assert len(labs) == 6
    assert (1, 2, 1) not in labs and (2, 1, 2) not in labs
    assert labs == lp_dichotomies(np.array([[0.0], [1], [2]]))


def test_all_plus_always_yielded():
    rng = np.random.default_rng(3)
    for d in (1, 2, 3):
        X = rng.normal(size=(8, d))
        labs = {tuple(q) for q in enumerate_binary_labelings(X)}
        assert (1,) * 8 in labs and (2,) * 8 in labs


def test_candidates_before_dedup_bound():
    X = general_position_points(np.random.default_rng(0), 10, 2)
    stats = EnumerationStats()
    labs = list(enumerate_binary_labelings(X, dedup=False, stats=stats))
    assert stats.candidates == len(labs) == 2**3 * 45 == 360
    assert len({q.tobytes() for q in labs}) <= binary_bound(10, 2)


def test_dedup_does_not_change_the_set():
    X = general_position_points(np.random.default_rng(1), 9, 2)
    a = {q.tobytes() for q in enumerate_binary_labelings(X, dedup=False)}
    b = [q.tobytes() for q in enumerate_binary_labelings(X)]
    assert len(b) == len(set(b))
    assert a == set(b)


def test_symmetry_prune_keeps_one_of_each_pair():
    X = general_position_points(np.random.default_rng(2), 8, 2)
    full = {tuple(q) for q in enumerate_binary_labelings(X)}
    pruned = {tuple(q) for q in enumerate_binary_labelings(X, symmetry_prune=True)}
    assert len(pruned) * 2 == len(full)
    assert {tuple(negate(np.array(q))) for q in pruned} | pruned == full


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), N=st.integers(3, 8), d=st.integers(1, 2))
def test_enumeration_equals_lp_projection(seed, N, d):
    X = general_position_points(np.random.default_rng(seed), N, d)
    labs = {tuple(q) for q in enumerate_binary_labelings(X)}
    assert labs == lp_dichotomies(X)
    assert len(labs) <= binary_bound(N, d)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), N=st.integers(3, 30))
def test_count_in_1d_is_2N(seed, N):
    x = np.random.default_rng(seed).permutation(N).astype(float)[:, None]
    labs = {tuple(q) for q in enumerate_binary_labelings(x)}
    # thresholds between sorted points plus the two constant labelings, times two orientations
    assert len(labs) == 2 * N


def test_needs_more_points_than_dims():
    with pytest.raises(ValueError):
        list(enumerate_binary_labelings(np.zeros((2, 2))))


def test_verify_rejects_collinear():
    with pytest.raises(ValueError):
        list(enumerate_binary_labelings([[0, 0], [1, 1], [2, 2]], verify=True))


def test_bounds():
    assert binary_bound(10, 2) == 360
    assert multiclass_bound(5, 1, 3) == 8000
    assert binary_bound(7, 3) == 16 * comb(7, 3)


def test_pairwise_rule_examples():
    assert label_from_pairs({(1, 2): 1.0}, 2) == 1
    assert label_from_pairs({(1, 2): -1.0}, 2) == 2
    assert label_from_pairs({(1, 2): 0.5, (1, 3): 2.0, (2, 3): -7.0}, 3) == 1
    assert label_from_pairs({(1, 2): -1.0, (2, 3): -1.0, (1, 3): 1.0}, 3) is None


@settings(max_examples=60, deadline=None)
@given(scores=st.lists(st.integers(-3, 3), min_size=4, max_size=4))
def test_pairwise_rule_is_argmax_with_min_index(scores):
    n = len(scores)
    pv = {(j, k): scores[j - 1] - scores[k - 1] for j, k in pair_list(n)}
    assert label_from_pairs(pv, n) == int(np.argmax(scores)) + 1
    masks = {p: np.array([v >= 0]) for p, v in pv.items()}
    assert labels_from_pair_masks(masks, n)[0] == int(np.argmax(scores)) + 1


def test_multiclass_tuple_count_without_dedup():
    X = np.arange(5.0)[:, None]
    stats = EnumerationStats()
    list(enumerate_multiclass_labelings(X, 3, dedup=False, stats=stats))
    assert stats.tuples == 8000 == multiclass_bound(5, 1, 3)


def test_multiclass_segments_yielded_alternation_not():
    X = np.arange(6.0)[:, None]
    labs = {tuple(q) for q in enumerate_multiclass_labelings(X, 3)}
    assert (1, 1, 2, 2, 3, 3) in labs
    assert (1, 2, 1, 2, 1, 2) not in labs
    assert all(set(q) <= {1, 2, 3} for q in labs)


def test_multiclass_dedup_same_set():
    X = np.random.default_rng(4).normal(size=(5, 1))
    a = {q.tobytes() for q in enumerate_multiclass_labelings(X, 3, dedup=False)}
    b = [q.tobytes() for q in enumerate_multiclass_labelings(X, 3)]
    assert set(b) == a and len(b) == len(a)


def test_multiclass_two_modes_delegates():
    X = np.arange(4.0)[:, None]
    a = {tuple(q) for q in enumerate_multiclass_labelings(X, 2)}
    b = {tuple(q) for q in enumerate_binary_labelings(X)}
    assert a == b
