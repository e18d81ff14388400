import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from robust_collab.hypotheses import (
    Distribution,
    DomainError,
    FiniteExplicit,
    LabelVector,
    ParameterError,
    Powerset,
    Threshold,
    ThresholdRule,
    class_from_dict,
    consistent,
    error_rate,
    evaluate,
    evaluate_many,
    hypothesis_from_dict,
    pac_sample_size,
)


def test_evaluate_threshold():
    f = ThresholdRule(3, 10)
    assert evaluate(f, 5) == 1
    assert evaluate(f, 2) == 0
    assert evaluate(f, 3) == 1


def test_powerset_members_map_bottom_to_zero():
    cls = Powerset(4)
    for f in cls.members():
        assert evaluate(f, cls.bottom) == 0


def test_evaluate_out_of_domain():
    with pytest.raises(DomainError):
        evaluate(ThresholdRule(3, 10), 10)
    with pytest.raises(DomainError):
        evaluate(LabelVector((0, 1)), -1)


def test_error_rate_examples():
    f = LabelVector((0, 1, 1, 0))
    uniform = Distribution.from_masses([0.25] * 4)
    assert error_rate(f, f, uniform) == 0.0
    assert error_rate(LabelVector((1, 1, 1, 0)), f, uniform) == 0.25

    # d=4, eps=0.25: 2*eps/d = 0.125 on each of [0, 4), 0.5 on bottom
    d, eps = 4, 0.25
    dist = Distribution.from_masses([2 * eps / d] * d + [1 - 2 * eps])
    target = LabelVector((0, 0, 0, 0, 0))
    flipped = LabelVector((1, 1, 1, 1, 0))
    assert error_rate(flipped, target, dist) == pytest.approx(0.5, abs=1e-12)


def test_error_rate_domain_mismatch():
    with pytest.raises(DomainError):
        error_rate(LabelVector((0, 1)), LabelVector((0, 1, 0)), Distribution.point_mass(0))


def test_consistent_examples():
    cls = Powerset(2)
    assert consistent(cls, [(1, 1), (1, 0)]) is None
    assert consistent(cls, [(1, 1)]) == LabelVector((0, 1, 0))
    assert consistent(cls, [(cls.bottom, 1)]) is None


def test_threshold_consistent_matches_scan():
    cls = Threshold(10)
    sample = [(2, 0), (7, 1)]
    # brute-force scan over all 11 thresholds
    ok = [t for t in range(11) if all(int(x >= t) == y for x, y in sample)]
    assert ok == [3, 4, 5, 6, 7]
    assert consistent(cls, sample) == ThresholdRule(3, 10)


def test_threshold_empty_sample_returns_smallest():
    assert Threshold(5).default() == ThresholdRule(0, 5)


def test_pac_sample_size_examples():
    # independent evaluation with exact decimal constants
    expected = math.ceil(11 * math.log(10) / 0.1)
    assert expected == 254
    assert pac_sample_size(10, 0.1, 0.1, 1.0) == 254
    assert pac_sample_size(1, 1.0, 1.0, 1.0) == 1
    ratio = pac_sample_size(20, 0.1, 0.1) / pac_sample_size(10, 0.1, 0.1)
    assert 1.8 <= ratio <= 2.0


@pytest.mark.parametrize("eps,delta", [(0, 0.1), (0.1, 0), (1.5, 0.1), (0.1, -1)])
def test_pac_sample_size_rejects(eps, delta):
    with pytest.raises(ParameterError):
        pac_sample_size(3, eps, delta)


@given(
    st.integers(1, 30),
    st.floats(0.01, 1.0),
    st.floats(0.01, 1.0),
    st.integers(1, 5),
)
def test_pac_sample_size_monotone(d, eps, delta, bump):
    m = pac_sample_size(d, eps, delta)
    assert m >= 1
    assert pac_sample_size(d + bump, eps, delta) >= m
    assert pac_sample_size(d, min(1.0, eps * 1.5), delta) <= m
    assert pac_sample_size(d, eps, min(1.0, delta * 1.5)) <= m


def test_distribution_validation():
    with pytest.raises(ValueError):
        Distribution((0, 1), (0.5, 0.6))
    with pytest.raises(ValueError):
        Distribution((0, 1), (1.2, -0.2))
    with pytest.raises(DomainError):
        Distribution.point_mass(5).mass_vector(3)
    Distribution((0, 1), (0.5, 0.5 + 5e-10))


def test_finite_explicit_vc_validation():
    tables = ((0, 0), (0, 1), (1, 0))
    FiniteExplicit(tables, 1)
    with pytest.raises(ParameterError):
        FiniteExplicit(tables, 2)


# ---------------------------------------------------------------- properties

labelled = st.lists(st.tuples(st.integers(0, 8), st.integers(0, 1)), max_size=12)


@pytest.mark.parametrize("cls", [Powerset(8), Threshold(9)], ids=["powerset", "threshold"])
@given(sample=labelled)
def test_consistent_output_agrees_with_sample(cls, sample):
    f = consistent(cls, sample)
    if f is not None:
        assert cls.contains(f)
        assert all(evaluate(f, x) == y for x, y in sample)
    else:
        assert not any(all(evaluate(g, x) == y for x, y in sample) for g in cls.members())


@given(sample=labelled)
def test_threshold_consistent_is_smallest(sample):
    cls = Threshold(9)
    ok = [g for g in cls.members() if all(evaluate(g, x) == y for x, y in sample)]
    f = consistent(cls, sample)
    assert (f is None) == (not ok)
    if ok:
        assert f == ok[0]


@st.composite
def finite_class_and_sample(draw):
    size = draw(st.integers(2, 6))
    k = draw(st.integers(1, 40))
    tables = tuple(tuple(draw(st.integers(0, 1)) for _ in range(size)) for _ in range(k))
    sample = draw(st.lists(st.tuples(st.integers(0, size - 1), st.integers(0, 1)), max_size=6))
    return FiniteExplicit(tables, 0), sample


@given(finite_class_and_sample())
def test_finite_explicit_matches_brute_force(arg):
    cls, sample = arg
    brute = next((LabelVector(t) for t in cls.tables if all(t[x] == y for x, y in sample)), None)
    assert consistent(cls, sample) == brute


def test_powerset_realizes_every_labeling():
    for d in range(1, 13):
        cls = Powerset(d)
        pts = np.arange(d)
        for code in range(2 ** d) if d <= 8 else np.random.default_rng(d).integers(0, 2 ** d, 256):
            labels = (int(code) >> pts) & 1
            f = cls.consistent((pts, labels))
            assert f is not None and f.labels[d] == 0
            assert np.array_equal(f.to_array()[:d], labels)


@settings(max_examples=50)
@given(st.data())
def test_error_rate_additive_over_partition(data):
    size = data.draw(st.integers(2, 10))
    raw = data.draw(st.lists(st.floats(0.01, 1.0), min_size=size, max_size=size))
    masses = np.asarray(raw) / sum(raw)
    f = LabelVector(tuple(data.draw(st.lists(st.integers(0, 1), min_size=size, max_size=size))))
    g = LabelVector(tuple(data.draw(st.lists(st.integers(0, 1), min_size=size, max_size=size))))
    dist = Distribution.from_masses(masses)
    assert error_rate(f, f, dist) == 0.0
    cut = data.draw(st.integers(1, size - 1))
    wrong = evaluate_many(f, np.arange(size)) != evaluate_many(g, np.arange(size))
    left = masses[:cut][wrong[:cut]].sum()
    right = masses[cut:][wrong[cut:]].sum()
    assert error_rate(f, g, dist) == pytest.approx(left + right, abs=1e-12)


@pytest.mark.parametrize(
    "cls",
    [Powerset(3), Threshold(7), FiniteExplicit(((0, 1), (1, 1)), 1)],
    ids=["powerset", "threshold", "finite"],
)
def test_class_json_round_trip(cls):
    assert class_from_dict(json.loads(json.dumps(cls.to_dict()))) == cls
    f = cls.default()
    assert hypothesis_from_dict(json.loads(json.dumps(f.to_dict()))) == f


def test_powerset_member_count():
    assert sum(1 for _ in Powerset(5).members()) == 32
    assert len(set(itertools.islice(Powerset(5).members(), 100))) == 32
