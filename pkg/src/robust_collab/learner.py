"""The iterative robust collaborative learner and the independent-learning baseline.

Round ``r`` keeps a set of active users. While ``floor(eta n) <= |G_r| / 10``
it fits one candidate classifier on a large mutually consistent subgroup,
screens every active user against it, and releases the users it already
serves. Whoever is left afterwards is learned individually.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .config import LearnerConstants, validate_params
from .hypotheses import (
    Hypothesis,
    HypothesisClass,
    ParameterError,
    compress,
    error_rate,
    evaluate_many,
    pac_sample_size,
)
from .oracles import Instance, SampleLedger, adversary_budget


class NoConsistentGroup(RuntimeError):
    """No subgroup of at least 9/10 of the users has a common consistent hypothesis."""


class SearchCapExceeded(RuntimeError):
    """The exhaustive subgroup search was asked to run above its size cap."""


# --------------------------------------------------------------------------
# budgets


def delta_schedule(r: int, delta: float) -> float:
    if r < 1:
        raise ParameterError("round index starts at 1")
    return delta / (5 * r * r)


def candidate_budget(g: int, d: int, eps: float, delta: float, c_cand: float) -> tuple[int, int]:
    """Returns ``(M, per_user)`` with ``per_user = ceil(4M / g)``."""
    m = math.ceil(
        c_cand * ((d * math.log(1 / eps) + g * math.log(2) + math.log(1 / delta)) / eps + g * math.log(g / delta))
    )
    m = max(m, 1)
    return m, math.ceil(4 * m / g)


def validation_budget(g: int, eps: float, delta: float, c_test: float) -> int:
    return max(1, math.ceil(c_test * math.log(g / delta) / eps))


def final_budget(n: int, d: int, eps: float, delta: float, c_final: float) -> int:
    return max(1, math.ceil(c_final * (d * math.log(1 / eps) + math.log(n / delta)) / eps))


def min_subset_size(g: int) -> int:
    """Smallest integer ``h`` with ``h >= 9g/10``."""
    return -(-9 * g // 10)


def loop_continues(eta: float, n: int, active: int) -> bool:
    """Round-loop guard ``floor(eta n) <= active / 10``, in integers."""
    return 10 * adversary_budget(eta, n) <= active


def retains(theta: float, eps: float) -> bool:
    """A user stays active iff its validation error is strictly above 3/4 eps."""
    return theta > 0.75 * eps


def candidate_subsets(group):
    """Subsets of size >= 9/10 of ``group``, largest first, lexicographic within a size."""
    group = sorted(group)
    for size in range(len(group), min_subset_size(len(group)) - 1, -1):
        yield from combinations(group, size)


# --------------------------------------------------------------------------
# subroutines


@dataclass
class CandidateOutcome:
    hypothesis: Hypothesis
    subset: tuple[int, ...]
    samples_per_user: int
    datasets: dict = field(repr=False)


@dataclass
class ValidationOutcome:
    retained: tuple[int, ...]
    thetas: dict
    samples_per_user: int


def candidate(group, cls: HypothesisClass, d: int, eps: float, delta: float, oracles, constants: LearnerConstants) -> CandidateOutcome:
    """Fit one classifier on the first consistent large subgroup of ``group``."""
    group = sorted(group)
    g = len(group)
    if g < 1:
        raise ParameterError("candidate needs a non-empty group")
    if g > constants.max_candidate_group:
        raise SearchCapExceeded(
            f"exponential search cap: |G|={g} > max_candidate_group={constants.max_candidate_group}"
        )
    _, per_user = candidate_budget(g, d, eps, delta, constants.c_cand)
    datasets = {i: oracles[i].draw(per_user) for i in group}
    compact = {i: compress(*datasets[i]) for i in group}
    for subset in candidate_subsets(group):
        pts = np.concatenate([compact[i][0] for i in subset])
        labels = np.concatenate([compact[i][1] for i in subset])
        f = cls.consistent((pts, labels))
        if f is not None:
            return CandidateOutcome(f, subset, per_user, datasets)
    raise NoConsistentGroup(f"no subgroup of size >= {min_subset_size(g)} of {g} users is consistent")


def validate_candidate(group, f_hat: Hypothesis, eps: float, delta: float, oracles, constants: LearnerConstants) -> ValidationOutcome:
    """Keep the users on whom ``f_hat`` errs on more than 3/4 eps of fresh samples."""
    group = sorted(group)
    if not group:
        raise ParameterError("validation needs a non-empty group")
    k = validation_budget(len(group), eps, delta, constants.c_test)
    thetas = {}
    for i in group:
        pts, labels = oracles[i].draw(k)
        thetas[i] = float(np.mean(evaluate_many(f_hat, pts) != labels))
    retained = tuple(i for i in group if retains(thetas[i], eps))
    return ValidationOutcome(retained, thetas, k)


# --------------------------------------------------------------------------
# runs


@dataclass
class RoundTrace:
    round: int
    active: tuple[int, ...]
    delta_r: float
    candidate: Hypothesis
    subset: tuple[int, ...]
    retained: tuple[int, ...]
    candidate_per_user: int
    test_per_user: int
    thetas: dict
    samples: int

    def to_dict(self):
        return {
            "round": self.round,
            "active": list(self.active),
            "delta_r": self.delta_r,
            "candidate": self.candidate.to_dict(),
            "subset": list(self.subset),
            "retained": list(self.retained),
            "candidate_per_user": self.candidate_per_user,
            "test_per_user": self.test_per_user,
            "thetas": {str(k): v for k, v in sorted(self.thetas.items())},
            "samples": self.samples,
        }


@dataclass
class RunResult:
    outputs: list
    ledger: SampleLedger
    trace: list = field(default_factory=list)
    final_phase_users: tuple[int, ...] = ()
    final_per_user: int = 0
    algorithm: str = "robust"
    params: dict = field(default_factory=dict)

    @property
    def rounds_used(self) -> int:
        return len(self.trace) + (1 if self.final_phase_users else 0)

    def to_dict(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "params": self.params,
            "outputs": [f.to_dict() for f in self.outputs],
            "ledger": self.ledger.to_dict(),
            "trace": [t.to_dict() for t in self.trace],
            "rounds_used": self.rounds_used,
            "final_phase_users": list(self.final_phase_users),
            "final_per_user": self.final_per_user,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def run_robust_collaborative(
    instance: Instance,
    eps: float,
    delta: float,
    eta: float | None = None,
    constants: LearnerConstants | None = None,
) -> RunResult:
    constants = constants or LearnerConstants()
    eta = instance.eta if eta is None else eta
    validate_params(eps, delta, eta)
    n, d, cls, oracles = instance.n, instance.d, instance.hypothesis_class, instance.oracles

    outputs: list = [None] * n
    trace = []
    active = tuple(range(n))
    r = 1
    # with eta = 0 the guard alone never fails, so also stop once everyone is served
    while active and loop_continues(eta, n, len(active)):
        if r > constants.max_rounds:
            raise RuntimeError(f"round loop exceeded max_rounds={constants.max_rounds}")
        delta_r = delta_schedule(r, delta)
        before = sum(o.query_count for o in oracles)
        cand = candidate(active, cls, d, eps, delta_r, oracles, constants)
        screen = validate_candidate(active, cand.hypothesis, eps, delta_r, oracles, constants)
        for i in set(active) - set(screen.retained):
            outputs[i] = cand.hypothesis
        trace.append(
            RoundTrace(
                r,
                active,
                delta_r,
                cand.hypothesis,
                cand.subset,
                screen.retained,
                cand.samples_per_user,
                screen.samples_per_user,
                screen.thetas,
                sum(o.query_count for o in oracles) - before,
            )
        )
        active = screen.retained
        r += 1

    k = final_budget(n, d, eps, delta, constants.c_final) if active else 0
    for i in active:
        f = cls.consistent(oracles[i].draw(k))
        # only a self-contradicting (hence adversarial) user can produce None here
        outputs[i] = f if f is not None else cls.default()

    params = {"eps": eps, "delta": delta, "eta": eta, "n": n, "d": d, "constants": constants.to_dict()}
    return RunResult(outputs, instance.ledger(), trace, tuple(active), k, "robust", params)


def run_naive_baseline(instance: Instance, eps: float, delta: float, constants: LearnerConstants | None = None) -> RunResult:
    """Learn every user on its own with ``pac_sample_size(d, eps, delta/n)`` samples."""
    constants = constants or LearnerConstants()
    validate_params(eps, delta)
    n, cls = instance.n, instance.hypothesis_class
    k = pac_sample_size(instance.d, eps, delta / n, constants.c_pac)
    outputs = []
    for o in instance.oracles:
        f = cls.consistent(o.draw(k))
        outputs.append(f if f is not None else cls.default())
    params = {"eps": eps, "delta": delta, "n": n, "d": instance.d, "constants": constants.to_dict()}
    return RunResult(outputs, instance.ledger(), [], tuple(range(n)), k, "naive", params)


# --------------------------------------------------------------------------
# evaluation (reads ground truth; never used by the learners)


def user_errors(instance: Instance, result: RunResult) -> dict:
    """Exact error of each truthful user's output on its own distribution."""
    return {
        i: error_rate(result.outputs[i], instance.target, instance.distribution(i))
        for i in range(instance.n)
        if instance.truthful_mask[i]
    }


def success_flags(instance: Instance, result: RunResult, eps: float) -> list:
    """Per user: ``True``/``False`` for truthful users, ``None`` for adversaries."""
    errs = user_errors(instance, result)
    return [errs[i] < eps if i in errs else None for i in range(instance.n)]


def run_succeeded(instance: Instance, result: RunResult, eps: float) -> bool:
    return all(flag is not False for flag in success_flags(instance, result, eps))


CSV_FIELDS = ["algorithm", "n", "d", "eps", "delta", "eta", "total_samples", "rounds", "success", "user_success"]


def summary_row(instance: Instance, result: RunResult, eps: float, delta: float) -> dict:
    flags = success_flags(instance, result, eps)
    return {
        "algorithm": result.algorithm,
        "n": instance.n,
        "d": instance.d,
        "eps": eps,
        "delta": delta,
        "eta": instance.eta,
        "total_samples": result.ledger.total,
        "rounds": result.rounds_used,
        "success": int(all(f is not False for f in flags)),
        "user_success": "".join("-" if f is None else str(int(f)) for f in flags),
    }


def summary_csv(rows) -> str:
    buf = io.StringIO()
    buf.write("# schema=1\n")
    writer = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()
