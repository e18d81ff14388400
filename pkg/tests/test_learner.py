import math

import numpy as np
import pytest

from robust_collab.config import LearnerConstants
from robust_collab.hypotheses import Distribution, LabelVector, Powerset, Threshold, ParameterError
from robust_collab.learner import (
    NoConsistentGroup,
    SearchCapExceeded,
    candidate,
    candidate_budget,
    candidate_subsets,
    delta_schedule,
    final_budget,
    loop_continues,
    retains,
    run_naive_baseline,
    run_robust_collaborative,
    run_succeeded,
    summary_csv,
    summary_row,
    validate_candidate,
    validation_budget,
)
from robust_collab.hypotheses import pac_sample_size
from robust_collab.oracles import (
    Adversarial,
    FixedExample,
    Instance,
    Pretender,
    RandomNoise,
    Truthful,
    make_random_instance,
)


def one_informative_instance(n=16, d=20, eps=0.1, seed=0):
    """n-1 users see only bottom; the last spreads 2 eps over [0, d)."""
    cls = Powerset(d)
    target = cls.random_member(np.random.default_rng(seed))
    modes = [Truthful(Distribution.point_mass(cls.bottom)) for _ in range(n - 1)]
    modes.append(Truthful(Distribution.from_masses([2 * eps / d] * d + [1 - 2 * eps])))
    return Instance(cls, target, modes, 0.0, seed)


def test_delta_schedule_examples():
    assert delta_schedule(1, 0.1) == pytest.approx(0.02)
    assert delta_schedule(3, 0.1) == pytest.approx(0.1 / 45)
    with pytest.raises(ParameterError):
        delta_schedule(0, 0.1)


def test_delta_schedule_total_budget():
    delta = 0.1
    spent = sum(2 * delta_schedule(r, delta) for r in range(1, 100_000)) + delta / 3
    assert spent <= delta
    assert sum(2 * delta_schedule(r, delta) for r in range(1, 100_000)) <= 2 * math.pi ** 2 / 30 * delta


def test_candidate_subset_family():
    subsets = list(candidate_subsets(range(10)))
    assert len(subsets) == math.comb(10, 9) + math.comb(10, 10) == 11
    assert subsets[0] == tuple(range(10))
    assert subsets[1] == (0, 1, 2, 3, 4, 5, 6, 7, 8)
    assert subsets[-1] == tuple(range(1, 10))
    assert len(list(candidate_subsets(range(25)))) == 326


def test_candidate_all_truthful_consistent_with_every_dataset():
    inst = make_random_instance(10, 12, 0.0, seed=1, shared=True)
    out = candidate(range(10), inst.hypothesis_class, inst.d, 0.1, 0.02, inst.oracles, LearnerConstants())
    assert out.subset == tuple(range(10))
    for pts, labels in out.datasets.values():
        assert inst.hypothesis_class.consistent((pts, labels)) is not None
        assert np.array_equal(out.hypothesis.to_array()[pts], labels)


def test_candidate_excludes_conflicting_pretender():
    cls = Threshold(12)
    target = Threshold(12).consistent([(5, 0), (6, 1)])  # t=6
    dist = Distribution.from_masses([1 / 12] * 12)
    fake = Threshold(12).consistent([(9, 0), (10, 1)])  # t=10 disagrees on 6..9
    modes = [Truthful(dist) for _ in range(9)] + [Adversarial(Pretender(fake, dist))]
    inst = Instance(cls, target, modes, 0.1, seed=3)
    out = candidate(range(10), cls, inst.d, 0.1, 0.02, inst.oracles, LearnerConstants())

    def pooled(group):
        return (
            np.concatenate([out.datasets[i][0] for i in group]),
            np.concatenate([out.datasets[i][1] for i in group]),
        )

    # the pretender's data conflicts with the truthful pool on the drawn samples
    assert cls.consistent(pooled(range(10))) is None
    assert 9 not in out.subset
    # maximality replay: every subset earlier in the enumeration is inconsistent
    for subset in candidate_subsets(range(10)):
        if subset == out.subset:
            break
        assert cls.consistent(pooled(subset)) is None
    assert cls.consistent(pooled(out.subset)) == out.hypothesis


def test_candidate_raises_when_contract_broken():
    cls = Powerset(2)
    target = LabelVector((0, 0, 0))
    modes = [Adversarial(FixedExample(0, 1)), Adversarial(FixedExample(0, 0))]
    inst = Instance(cls, target, modes, 1.0, seed=0)
    with pytest.raises(NoConsistentGroup):
        candidate([0, 1], cls, inst.d, 0.1, 0.1, inst.oracles, LearnerConstants())


def test_search_cap():
    inst = make_random_instance(100, 4, 0.05, seed=0)
    with pytest.raises(SearchCapExceeded, match="exponential search cap"):
        run_robust_collaborative(inst, 0.1, 0.1)


def test_retention_boundary():
    assert retains(0.08, 0.1)
    assert not retains(0.075, 0.1)
    assert not retains(3 / 40, 0.1)
    assert not retains(0.0, 0.1)


def test_validation_removes_zero_error_users():
    inst = make_random_instance(5, 8, 0.0, seed=2)
    out = validate_candidate(range(5), inst.target, 0.1, 0.1, inst.oracles, LearnerConstants())
    assert out.retained == ()
    assert all(theta == 0.0 for theta in out.thetas.values())
    assert out.samples_per_user == validation_budget(5, 0.1, 0.1, 1.0) == math.ceil(math.log(50) / 0.1)


def test_guard_arithmetic():
    # floor(0.2 * 10) = 2 > 10 / 10
    assert not loop_continues(0.2, 10, 10)
    # floor(0.05 * 100) = 5 <= |G| / 10 exactly while |G| >= 50
    assert loop_continues(0.05, 100, 100)
    assert loop_continues(0.05, 100, 50)
    assert not loop_continues(0.05, 100, 49)
    assert loop_continues(0.0, 7, 0)


def test_no_rounds_when_guard_closed():
    inst = make_random_instance(10, 4, 0.2, seed=5, kind="powerset")
    res = run_robust_collaborative(inst, 0.1, 0.1)
    assert res.trace == []
    assert res.final_phase_users == tuple(range(10))
    k = final_budget(10, 4, 0.1, 0.1, 1.0)
    assert res.ledger.counts == (k,) * 10
    assert res.rounds_used == 1


@pytest.mark.parametrize("seed", range(6))
def test_trace_invariants(seed):
    constants = LearnerConstants(c_cand=0.2)
    inst = one_informative_instance(seed=seed)
    res = run_robust_collaborative(inst, 0.1, 0.1, constants=constants)
    assert len(res.trace) >= 1
    prev = set(range(inst.n))
    assigned = set()
    for rt in res.trace:
        active = set(rt.active)
        assert active == prev
        assert set(rt.retained) <= active
        assert not active & assigned
        assert loop_continues(inst.eta, inst.n, len(rt.active))
        assert rt.delta_r == pytest.approx(0.1 / (5 * rt.round ** 2))
        _, per_user = candidate_budget(len(active), inst.d, 0.1, rt.delta_r, constants.c_cand)
        assert rt.candidate_per_user == per_user
        assert rt.test_per_user == validation_budget(len(active), 0.1, rt.delta_r, constants.c_test)
        assert rt.samples == len(active) * (per_user + rt.test_per_user)
        assigned |= active - set(rt.retained)
        prev = set(rt.retained)
    assert sum(rt.samples for rt in res.trace) + len(res.final_phase_users) * res.final_per_user == res.ledger.total
    assert all(f is not None for f in res.outputs)


def test_multi_round_run_occurs():
    rounds = [
        len(run_robust_collaborative(one_informative_instance(seed=s), 0.1, 0.1, constants=LearnerConstants(c_cand=0.2)).trace)
        for s in range(6)
    ]
    assert max(rounds) >= 2


def test_self_contradicting_adversary_gets_default():
    cls = Powerset(1)
    target = LabelVector((0, 0))
    noisy = RandomNoise(Distribution.point_mass(0), target, 0.5)
    inst = Instance(cls, target, [Truthful(Distribution.point_mass(0)), Adversarial(noisy)], 0.5, seed=1)
    res = run_robust_collaborative(inst, 0.1, 0.1)
    assert res.trace == []
    assert res.outputs[1] == cls.default()
    assert run_succeeded(inst, res, 0.1)


def test_naive_baseline_accounting():
    inst = make_random_instance(1, 6, 0.0, seed=0, kind="powerset")
    assert run_naive_baseline(inst, 0.1, 0.1).ledger.total == pac_sample_size(6, 0.1, 0.1)
    inst = make_random_instance(8, 6, 0.25, seed=0, kind="powerset")
    res = run_naive_baseline(inst, 0.1, 0.1)
    assert res.ledger.total == 8 * pac_sample_size(6, 0.1, 0.1 / 8)


def test_naive_baseline_success_rate():
    ok = 0
    for s in range(200):
        inst = make_random_instance(4, 10, 0.0, seed=s)
        ok += run_succeeded(inst, run_naive_baseline(inst, 0.1, 0.1), 0.1)
    assert ok / 200 >= 0.9


def test_run_result_serialization_deterministic():
    a = run_robust_collaborative(make_random_instance(12, 9, 0.0, seed=4), 0.1, 0.1).to_json()
    b = run_robust_collaborative(make_random_instance(12, 9, 0.0, seed=4), 0.1, 0.1).to_json()
    assert a == b


def test_summary_csv_schema():
    inst = make_random_instance(5, 9, 0.2, seed=4)
    res = run_robust_collaborative(inst, 0.1, 0.1)
    text = summary_csv([summary_row(inst, res, 0.1, 0.1)])
    lines = text.splitlines()
    assert lines[0] == "# schema=1"
    assert lines[1].split(",")[:3] == ["algorithm", "n", "d"]
    assert lines[2].split(",")[-1].count("-") == inst.n_adversarial
