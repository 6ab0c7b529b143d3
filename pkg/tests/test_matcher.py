import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from axisdesc.descriptor import BranchRecord
from axisdesc.matcher import (
    SimilarityThresholds,
    branch_similarity,
    exhaustive_half,
    feature_similarity,
    match_half,
    match_multi,
    match_shapes,
    pair_weight,
)
from strategies import descriptors, half_records, make_descriptor


def rec(kind="positive", r=0.5, theta=1.0, nl=0.2, k=0):
    return BranchRecord(kind, r, theta, nl, order_index=k)


def test_feature_similarity_values():
    assert feature_similarity(0.3, 0.5, 0.5) == pytest.approx(0.6, abs=1e-12)
    assert feature_similarity(0.0, 0.5, 0.5) == 0.0
    assert feature_similarity(0.0, 0.9, 0.5) == 0.0
    assert feature_similarity(0.7, 0.7, 0.5) == 1.0
    with pytest.raises(ValueError):
        feature_similarity(0, 0, 0)


def test_zero_gate_and_kind():
    a = rec(r=0.2, theta=1.0, nl=0.2)
    assert branch_similarity(a, rec(r=0.2, theta=1.0, nl=0.75)) == 0.0  # length gate
    assert branch_similarity(a, rec(r=0.75, theta=1.0, nl=0.2)) == 0.0  # radius gate
    assert branch_similarity(a, rec(r=0.2, theta=1.0 + math.pi / 2, nl=0.2)) == 0.0
    assert branch_similarity(a, rec("negative", 0.2, 1.0, 0.2)) == 0.0
    b = rec(r=0.3, theta=1.0, nl=0.2)
    assert branch_similarity(a, b) == pytest.approx((0.8 + 1.0 + 1.0) / 3)


def test_thresholds_must_be_positive():
    with pytest.raises(ValueError):
        SimilarityThresholds(r_thr=0)


def test_pair_weight_and_total_by_hand():
    A = make_descriptor([[("positive", 0.0, 0.0, 0.4)], [("positive", 0.5, 1.0, 0.2), ("negative", 0.3, 2.0, 0.1)]])
    B = make_descriptor([[("positive", 0.0, 0.0, 0.5)], [("positive", 0.6, 1.0, 0.2), ("negative", 0.3, 2.5, 0.1)]])
    res = match_shapes(A, B)
    s0 = (0.8 + 1 + 1) / 3
    s1 = (0.8 + 1 + 1) / 3
    s2 = (1 + (1 - 0.5 / (math.pi / 2)) + 1) / 3
    expected = 0.45 * s0 + 0.2 * s1 + 0.1 * s2
    assert res.total == pytest.approx(expected, abs=1e-12)
    assert [p[:2] for p in res.pairs] == [(0, 0), (1, 1), (2, 2)]
    assert pair_weight(A.records[0], B.records[0]) == pytest.approx(0.45)


def test_order_constraint_forbids_crossing():
    # the best unconstrained assignment crosses; the order-preserving one
    # keeps only the heavier pair
    ra = [rec(theta=0.5, nl=0.3, k=0), rec(theta=2.0, nl=0.1, k=1)]
    rb = [rec(theta=1.9, nl=0.1, k=0), rec(theta=0.6, nl=0.3, k=1)]
    pairs, gain, _ = match_half(ra, rb)
    assert pairs == [(0, 1)]
    assert gain == pytest.approx(0.3 * branch_similarity(ra[0], rb[1]))


@settings(max_examples=300, deadline=None)
@given(half_records(6), half_records(6))
def test_branch_and_bound_equals_exhaustive(a, b):
    ra = [rec(*t, k=i) for i, t in enumerate(a)]
    rb = [rec(*t, k=i) for i, t in enumerate(b)]
    p1, g1, _ = match_half(ra, rb)
    p2, g2 = exhaustive_half(ra, rb)
    assert g1 == g2
    assert p1 == p2


@settings(max_examples=100, deadline=None)
@given(descriptors(), descriptors())
def test_match_properties(A, B):
    ab, ba = match_shapes(A, B), match_shapes(B, A)
    assert 0.0 <= ab.total <= 1.0
    assert ab.total == pytest.approx(ba.total, abs=1e-12)
    for seq in (0, 1):
        for h in (0, 1):
            ids_a = {r.order_index for r in A.halves[h].records}
            got = [p[seq] for p in ab.pairs if p[0] in ids_a]
            assert got == sorted(got)
    matched = {p[0] for p in ab.pairs}
    assert matched.isdisjoint(ab.unmatched_a)
    assert len(matched) + len(ab.unmatched_a) == len(A)


@settings(max_examples=60, deadline=None)
@given(descriptors())
def test_self_match_is_total_weight(A):
    # every record pairs with itself at similarity 1 unless it has zero length
    res = match_shapes(A, A)
    assert res.total == pytest.approx(min(1.0, math.fsum(r.norm_length for r in A.records)), abs=1e-12)


def test_match_multi_takes_best_alternative():
    A = make_descriptor([[("positive", 0.0, 0.0, 0.5)], [("positive", 0.0, 0.0, 0.5)]])
    far = make_descriptor([[("negative", 0.0, 0.0, 0.5)], [("negative", 0.0, 0.0, 0.5)]])
    res = match_multi([A], [far, A])
    assert res.total == pytest.approx(1.0)
    assert res.alternatives == (0, 1)
    assert match_multi([], [A]).total == 0.0


def test_variant_mode_penalises_pose():
    A = make_descriptor([[("positive", 0.0, 0.0, 0.5)], [("positive", 0.0, 0.0, 0.5)]])
    B = make_descriptor(
        [[("positive", 0.0, 0.0, 0.5)], [("positive", 0.0, 0.0, 0.5)]], total=200.0, orientation=(0.0, 1.0)
    )
    assert match_shapes(A, B, mode="invariant").total == pytest.approx(1.0)
    # half a right angle off (factor 0.5) at twice the size (factor 0)
    assert match_shapes(A, B, mode="variant").total == 0.0
    C = make_descriptor([[("positive", 0.0, 0.0, 0.5)], [("positive", 0.0, 0.0, 0.5)]], orientation=(0.0, 1.0))
    assert match_shapes(A, C, mode="variant").total == pytest.approx(0.5)
    with pytest.raises(ValueError):
        match_shapes(A, C, mode="other")


def _without(spec, h, k):
    return [rows if i != h else rows[:k] + rows[k + 1 :] for i, rows in enumerate(spec)]


@settings(max_examples=80, deadline=None)
@given(half_records(5), half_records(5), half_records(5), half_records(5), st.data())
def test_deleting_a_branch_never_raises_the_score(a0, a1, b0, b1, data):
    if not (b0 or b1):
        return
    h = data.draw(st.sampled_from([i for i, rows in enumerate((b0, b1)) if rows]))
    k = data.draw(st.integers(0, len((b0, b1)[h]) - 1))
    A = make_descriptor([a0, a1])
    full = match_shapes(A, make_descriptor([b0, b1])).total
    damaged = match_shapes(A, make_descriptor(_without([b0, b1], h, k))).total
    assert damaged <= full + 1e-12
