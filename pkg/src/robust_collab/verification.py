"""Monte Carlo and exhaustive checks of the learner's guarantees.

Every statistical check runs seeded, independent trials and compares the
empirical success rate against its target with a three-standard-error
margin. Each check accepts a budget scale so that a deliberately
under-sampled variant can be shown to fail.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from functools import partial

import numpy as np

from .config import LearnerConstants
from .hypotheses import (
    Distribution,
    LabelVector,
    Powerset,
    error_rate,
    evaluate,
    pac_sample_size,
)
from .learner import (
    candidate,
    run_naive_baseline,
    run_robust_collaborative,
    run_succeeded,
    validate_candidate,
)
from .oracles import (
    Instance,
    Truthful,
    adversary_budget,
    make_centralized_impossibility_instance,
    make_lower_bound_instance,
    make_random_instance,
)

Z = 3.0


def trial_seed(seed: int, t: int) -> int:
    return int(np.random.SeedSequence([seed, t]).generate_state(1, np.uint32)[0])


def map_trials(fn, seed: int, trials: int, jobs: int = 1) -> list:
    seeds = [trial_seed(seed, t) for t in range(trials)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, seeds, chunksize=max(1, trials // (4 * jobs))))
    return [fn(s) for s in seeds]


@dataclass
class TrialReport:
    check: str
    config: dict
    trials: int
    successes: int
    target: float
    threshold: float | None = None
    ledger_totals: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0 <= self.successes <= self.trials:
            raise ValueError("successes must lie in [0, trials]")
        if self.threshold is None:
            self.threshold = self.target - Z * self.se

    @property
    def rate(self) -> float:
        return self.successes / self.trials if self.trials else 0.0

    @property
    def se(self) -> float:
        if not self.trials:
            return 0.0
        p = self.rate
        return math.sqrt(p * (1 - p) / self.trials)

    @property
    def passed(self) -> bool:
        return self.rate >= self.threshold

    @property
    def verdict(self) -> str:
        return "PASS" if self.passed else "FAIL"

    def to_dict(self) -> dict:
        return {
            "check": self.check,
            "config": self.config,
            "trials": self.trials,
            "successes": self.successes,
            "rate": self.rate,
            "se": self.se,
            "target": self.target,
            "threshold": self.threshold,
            "verdict": self.verdict,
            "ledger_totals": self.ledger_totals,
            "extra": self.extra,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def summary(self) -> str:
        return (
            f"{self.verdict} {self.check}: rate={self.rate:.4f} +/- {self.se:.4f} "
            f"(threshold {self.threshold:.4f}, target {self.target:.4f}, {self.trials} trials)"
        )


REPORT_FIELDS = ["check", "trials", "successes", "rate", "se", "target", "threshold", "verdict"]


def reports_csv(reports) -> str:
    buf = io.StringIO()
    buf.write("# schema=1\n")
    w = csv.DictWriter(buf, fieldnames=REPORT_FIELDS, extrasaction="ignore", lineterminator="\n")
    w.writeheader()
    for r in reports:
        w.writerow(r.to_dict())
    return buf.getvalue()


def _scaled(constants: LearnerConstants, scale: float) -> LearnerConstants:
    if scale == 1.0:
        return constants
    return replace(
        constants,
        c_cand=constants.c_cand * scale,
        c_test=constants.c_test * scale,
        c_final=constants.c_final * scale,
        c_pac=constants.c_pac * scale,
    )


# --------------------------------------------------------------------------
# balls into bins


def balls_count(n: int, c_bins: float, delta: float) -> int:
    return max(1, math.ceil(c_bins * n * math.log(n / delta)))


def _bins_trial(s, n, m):
    rng = np.random.default_rng(s)
    loads = np.bincount(rng.integers(0, n, size=m), minlength=n)
    # max load <= 2m/n, kept in integers
    return bool(loads.max() * n <= 2 * m)


def check_balls_in_bins(n: int, c_bins: float, delta: float, trials: int = 1000, seed: int = 0, scale: float = 1.0, jobs: int = 1) -> TrialReport:
    if n < 1:
        raise ValueError("need at least one bin")
    m = max(1, math.ceil(balls_count(n, c_bins, delta) * scale))
    outcomes = map_trials(partial(_bins_trial, n=n, m=m), seed, trials, jobs)
    cfg = {"n": n, "c_bins": c_bins, "delta": delta, "balls": m, "scale": scale, "seed": seed}
    return TrialReport("balls-in-bins", cfg, trials, sum(outcomes), 1 - delta)


# --------------------------------------------------------------------------
# candidate subroutine


@dataclass(frozen=True)
class LemmaConfig:
    group_size: int = 10
    adversaries: int = 1
    kind: str = "threshold"
    d: int = 16
    eps: float = 0.1
    delta: float = 0.02
    fake: str = "close"
    concentration: float = 1.0
    constants: LearnerConstants = LearnerConstants()


def _candidate_trial(s, cfg: LemmaConfig):
    eta = cfg.adversaries / cfg.group_size
    inst = make_random_instance(cfg.group_size, cfg.d, eta, s, kind=cfg.kind, concentration=cfg.concentration, fake=cfg.fake)
    out = candidate(range(inst.n), inst.hypothesis_class, inst.d, cfg.eps, cfg.delta, inst.oracles, cfg.constants)
    good = sum(
        1
        for i in range(inst.n)
        if inst.truthful_mask[i] and error_rate(out.hypothesis, inst.target, inst.distribution(i)) <= cfg.eps / 2
    )
    return 2 * good >= cfg.group_size, inst.ledger().total


def check_candidate_lemma(cfg: LemmaConfig, trials: int = 500, seed: int = 0, scale: float = 1.0, jobs: int = 1) -> TrialReport:
    """At least half the group is truthful and served within eps/2 by the candidate."""
    if cfg.adversaries * 10 > cfg.group_size:
        raise ValueError("the candidate guarantee needs at most |G|/10 adversaries")
    cfg = replace(cfg, constants=_scaled(cfg.constants, scale))
    res = map_trials(partial(_candidate_trial, cfg=cfg), seed, trials, jobs)
    echo = asdict(cfg) | {"seed": seed, "scale": scale}
    return TrialReport("candidate-lemma", echo, trials, sum(r[0] for r in res), 1 - cfg.delta, ledger_totals=[r[1] for r in res])


# --------------------------------------------------------------------------
# validation subroutine


def make_planted_error_instance(errors, seed: int = 0) -> tuple[Instance, LabelVector]:
    """Users whose exact error under the returned planted classifier is ``errors[i]``.

    Powerset(1): the planted classifier mislabels point 0 and user ``i`` puts
    mass ``errors[i]`` there and the rest on bottom.
    """
    cls = Powerset(1)
    target = LabelVector((0, 0))
    planted = LabelVector((1, 0))
    modes = [Truthful(Distribution.from_masses([e, 1 - e])) for e in errors]
    inst = Instance(cls, target, modes, 0.0, seed, {"name": "planted-errors", "errors": list(errors)})
    return inst, planted


def _test_trial(s, errors, eps, delta, constants):
    inst, planted = make_planted_error_instance(errors, s)
    out = validate_candidate(range(inst.n), planted, eps, delta, inst.oracles, constants)
    kept = set(out.retained)
    ok = True
    for i, e in enumerate(errors):
        if e > eps and i not in kept:
            ok = False
        if e <= eps / 2 and i in kept:
            ok = False
    return ok, inst.ledger().total


def check_test_lemma(
    errors=(0.04, 0.15),
    eps: float = 0.1,
    delta: float = 0.1,
    trials: int = 500,
    seed: int = 0,
    constants: LearnerConstants | None = None,
    scale: float = 1.0,
    jobs: int = 1,
) -> TrialReport:
    """Users with error above eps are kept and users within eps/2 are released."""
    constants = _scaled(constants or LearnerConstants(), scale)
    res = map_trials(partial(_test_trial, errors=tuple(errors), eps=eps, delta=delta, constants=constants), seed, trials, jobs)
    cfg = {"errors": list(errors), "eps": eps, "delta": delta, "c_test": constants.c_test, "scale": scale, "seed": seed}
    return TrialReport("test-lemma", cfg, trials, sum(r[0] for r in res), 1 - delta, ledger_totals=[r[1] for r in res])


# --------------------------------------------------------------------------
# centralized impossibility


def check_centralized_impossibility(n: int = 3, probes: int = 8) -> TrialReport:
    """Exhaustive: every shared classifier has error 1 for a truthful user in one of two identical-looking cases."""
    cases = [make_centralized_impossibility_instance(n, c) for c in (0, 1)]
    tables = []
    for inst in cases:
        tables.append([[tuple(o.query()) for _ in range(probes)] for o in inst.oracles])
    indistinguishable = tables[0] == tables[1]

    rows = []
    fails_somewhere = 0
    for f in cases[0].hypothesis_class.members():
        errs = []
        for inst in cases:
            errs.append(max(error_rate(f, inst.target, inst.distribution(i)) for i in range(n) if inst.truthful_mask[i]))
        worst = max(errs)
        fails_somewhere += worst >= 1.0
        rows.append({"f": list(f.labels), "f(x1)": evaluate(f, 1), "case_errors": errs})
    total = len(rows)
    successes = fails_somewhere if indistinguishable else 0
    return TrialReport(
        "centralized-impossibility",
        {"n": n, "probes": probes},
        total,
        successes,
        1.0,
        threshold=1.0,
        extra={"indistinguishable": indistinguishable, "functions": rows},
    )


# --------------------------------------------------------------------------
# end-to-end runs


@dataclass(frozen=True)
class RunConfig:
    n: int = 16
    d: int = 16
    kind: str = "threshold"
    eta: float = 0.0
    eps: float = 0.1
    delta: float = 0.1
    concentration: float = 1.0
    fake: str = "uniform"
    constants: LearnerConstants = LearnerConstants()


def _run_trial(s, cfg: RunConfig):
    inst = make_random_instance(cfg.n, cfg.d, cfg.eta, s, kind=cfg.kind, concentration=cfg.concentration, fake=cfg.fake)
    res = run_robust_collaborative(inst, cfg.eps, cfg.delta, cfg.eta, cfg.constants)
    return run_succeeded(inst, res, cfg.eps), res.ledger.total, res.rounds_used


def check_end_to_end(cfg: RunConfig, trials: int = 200, seed: int = 0, threshold: float | None = None, scale: float = 1.0, jobs: int = 1) -> TrialReport:
    """Every truthful user ends with an eps-accurate classifier."""
    cfg = replace(cfg, constants=_scaled(cfg.constants, scale))
    res = map_trials(partial(_run_trial, cfg=cfg), seed, trials, jobs)
    rounds = sorted(r[2] for r in res)
    return TrialReport(
        "end-to-end",
        asdict(cfg) | {"seed": seed, "scale": scale},
        trials,
        sum(r[0] for r in res),
        1 - cfg.delta,
        threshold=threshold,
        ledger_totals=[r[1] for r in res],
        extra={"median_rounds": rounds[len(rounds) // 2] if rounds else 0, "max_rounds": rounds[-1] if rounds else 0},
    )


def _pac_trial(s, kind, d, eps, delta, c_pac):
    inst = make_random_instance(1, d, 0.0, s, kind=kind)
    k = pac_sample_size(inst.d, eps, delta, c_pac)
    f = inst.hypothesis_class.consistent(inst.oracles[0].draw(k))
    return error_rate(f, inst.target, inst.distribution(0)) < eps


def check_pac(kind: str = "powerset", d: int = 8, eps: float = 0.1, delta: float = 0.1, c_pac: float = 1.0, trials: int = 500, seed: int = 0, jobs: int = 1) -> TrialReport:
    """Single-distribution PAC guarantee of the consistency oracle."""
    res = map_trials(partial(_pac_trial, kind=kind, d=d, eps=eps, delta=delta, c_pac=c_pac), seed, trials, jobs)
    cfg = {"kind": kind, "d": d, "eps": eps, "delta": delta, "c_pac": c_pac, "seed": seed}
    return TrialReport("pac", cfg, trials, sum(res), 1 - delta)


# --------------------------------------------------------------------------
# overhead


@dataclass
class OverheadEstimate:
    n: int
    d: int
    eta: float
    trials: int
    collaborative_mean: float
    collaborative_se: float
    single_user: float
    success_rate: float
    naive_ratio: float
    predicted_budget: float

    @property
    def ratio(self) -> float:
        return self.collaborative_mean / self.single_user

    @property
    def ratio_se(self) -> float:
        return self.collaborative_se / self.single_user

    def to_dict(self) -> dict:
        return asdict(self) | {"ratio": self.ratio, "ratio_se": self.ratio_se}


OVERHEAD_FIELDS = [
    "n",
    "d",
    "eta",
    "trials",
    "collaborative_mean",
    "collaborative_se",
    "single_user",
    "ratio",
    "ratio_se",
    "naive_ratio",
    "predicted_budget",
    "success_rate",
]


def overhead_csv(estimates) -> str:
    buf = io.StringIO()
    buf.write("# schema=1\n")
    w = csv.DictWriter(buf, fieldnames=OVERHEAD_FIELDS, extrasaction="ignore", lineterminator="\n")
    w.writeheader()
    for e in estimates:
        w.writerow(e.to_dict())
    return buf.getvalue()


def predicted_budget(n: int, d: int, eta: float, eps: float = 0.1, delta: float = 0.1) -> float:
    """Upper-bound shape ``(d ln(1/eps)/eps)(eta n + ln n) + n ln(n/delta)/eps`` with unit constant."""
    return d * math.log(1 / eps) / eps * (eta * n + math.log(n)) + n * math.log(n / delta) / eps


def _overhead_trial(s, n, d, eta, kind, concentration, constants):
    inst = make_random_instance(n, d, eta, s, kind=kind, concentration=concentration)
    res = run_robust_collaborative(inst, 0.1, 0.1, eta, constants)
    return res.ledger.total, run_succeeded(inst, res, 0.1)


def measure_overhead(
    sweep,
    trials: int = 200,
    seed: int = 0,
    constants: LearnerConstants | None = None,
    kind: str = "powerset",
    concentration: float = 1.0,
    jobs: int = 1,
) -> list:
    """Mean sample cost of the robust learner relative to single-user PAC learning.

    ``eps = delta = 0.1`` throughout. The single-user reference is the naive
    learner on one truthful user, whose cost is deterministic.
    """
    constants = constants or LearnerConstants()
    eps = delta = 0.1
    out = []
    for n, d, eta in sweep:
        res = map_trials(
            partial(_overhead_trial, n=n, d=d, eta=eta, kind=kind, concentration=concentration, constants=constants),
            seed,
            trials,
            jobs,
        )
        totals = np.array([r[0] for r in res], dtype=float)
        single_inst = make_random_instance(1, d, 0.0, seed, kind=kind)
        single = run_naive_baseline(single_inst, eps, delta, constants).ledger.total
        naive = n * pac_sample_size(single_inst.d, eps, delta / n, constants.c_pac)
        out.append(
            OverheadEstimate(
                n=n,
                d=d,
                eta=eta,
                trials=trials,
                collaborative_mean=float(totals.mean()),
                collaborative_se=float(totals.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0,
                single_user=float(single),
                success_rate=sum(r[1] for r in res) / trials,
                naive_ratio=naive / single,
                predicted_budget=predicted_budget(n, single_inst.d, eta, eps, delta),
            )
        )
    return out


def check_overhead_shape(trials: int = 200, seed: int = 0, constants: LearnerConstants | None = None, sizes=(4, 8, 16), gap_n: int = 20, gap_eta: float = 0.1, jobs: int = 1) -> TrialReport:
    """Sub-linear growth in n at eta = 0 and a positive additive cost for eta > 0."""
    growth = measure_overhead([(n, n, 0.0) for n in sizes], trials, seed, constants, jobs=jobs)
    pair = measure_overhead([(gap_n, gap_n, 0.0), (gap_n, gap_n, gap_eta)], trials, seed, constants, jobs=jobs)
    growth_ratio = growth[-1].ratio / growth[0].ratio
    n_ratio = sizes[-1] / sizes[0]
    gap = pair[1].ratio - pair[0].ratio
    gap_se = math.hypot(pair[0].ratio_se, pair[1].ratio_se)
    conditions = {
        "sublinear": growth_ratio < 2.5,
        "eta_gap": gap > 0 and gap > Z * gap_se,
    }
    return TrialReport(
        "overhead-shape",
        {"trials": trials, "seed": seed, "sizes": list(sizes), "gap_n": gap_n, "gap_eta": gap_eta},
        len(conditions),
        sum(conditions.values()),
        1.0,
        threshold=1.0,
        extra={
            "conditions": conditions,
            "growth_ratio": growth_ratio,
            "n_ratio": n_ratio,
            "gap": gap,
            "gap_se": gap_se,
            "estimates": [e.to_dict() for e in growth + pair],
        },
    )


# --------------------------------------------------------------------------
# lower-bound instance cost


def _lower_bound_trial(s, n, d, eps, delta, eta, constants):
    inst = make_lower_bound_instance(n, d, eps, eta, s)
    res = run_robust_collaborative(inst, eps, delta, eta, constants)
    return res.ledger.total


def check_lower_bound_cost(
    n: int = 10,
    d: int = 8,
    eps: float = 0.1,
    delta: float = 0.1,
    eta: float = 0.2,
    gamma: float = 1.0,
    trials: int = 100,
    seed: int = 0,
    constants: LearnerConstants | None = None,
    jobs: int = 1,
) -> TrialReport:
    """Mean cost on the hard instance versus ``(eta n + 1) * gamma * pac_sample_size``.

    This measures what the instance forces on this learner; it is not a
    bound over all learners.
    """
    constants = constants or LearnerConstants()
    totals = map_trials(partial(_lower_bound_trial, n=n, d=d, eps=eps, delta=delta, eta=eta, constants=constants), seed, trials, jobs)
    floor_cost = (adversary_budget(eta, n) + 1) * gamma * pac_sample_size(d, eps, delta, constants.c_pac)
    mean = float(np.mean(totals))
    return TrialReport(
        "lower-bound-cost",
        {"n": n, "d": d, "eps": eps, "delta": delta, "eta": eta, "gamma": gamma, "seed": seed},
        1,
        int(mean >= floor_cost),
        1.0,
        threshold=1.0,
        ledger_totals=totals,
        extra={"mean_total": mean, "required": floor_cost},
    )


CHECKS = {
    "balls-in-bins",
    "candidate-lemma",
    "test-lemma",
    "centralized",
    "end-to-end",
    "pac",
    "overhead",
    "lower-bound",
}
