"""User oracles, sample metering and the canonical adversarial instances."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .hypotheses import (
    Distribution,
    FiniteExplicit,
    Hypothesis,
    HypothesisClass,
    LabeledExample,
    LabelVector,
    ParameterError,
    Powerset,
    Threshold,
    ThresholdRule,
    class_from_dict,
    evaluate_many,
    hypothesis_from_dict,
)

# RNG stream tags, combined with the root seed: [seed, tag, index]
_BUILD_STREAM = 0
_ORACLE_STREAM = 1


def oracle_rng(seed: int, oracle_id: int) -> np.random.Generator:
    return np.random.default_rng([seed, _ORACLE_STREAM, oracle_id])


def build_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng([seed, _BUILD_STREAM])


def adversary_budget(eta: float, n: int) -> int:
    """``floor(eta * n)``, robust to float error such as ``0.29 * 100``."""
    return math.floor(eta * n + 1e-9)


# --------------------------------------------------------------------------
# transcript shared by all oracles of one instance


class Transcript:
    """Every response handed out so far, per oracle."""

    def __init__(self, n: int):
        self._chunks: list[list[tuple[np.ndarray, np.ndarray]]] = [[] for _ in range(n)]

    def record(self, oracle_id: int, points: np.ndarray, labels: np.ndarray) -> None:
        self._chunks[oracle_id].append((points, labels))

    def samples(self, oracle_id: int) -> tuple[np.ndarray, np.ndarray]:
        chunks = self._chunks[oracle_id]
        if not chunks:
            return np.empty(0, np.int64), np.empty(0, np.int64)
        return np.concatenate([c[0] for c in chunks]), np.concatenate([c[1] for c in chunks])


# --------------------------------------------------------------------------
# adversary strategies


@dataclass(frozen=True)
class Pretender:
    """Answers as a truthful user of ``dist`` whose target were ``fake_target``."""

    fake_target: Hypothesis
    dist: Distribution
    needs_transcript = False

    def respond(self, k, rng, transcript):
        pts = self.dist.sample(rng, k)
        return pts, evaluate_many(self.fake_target, pts)

    def to_dict(self):
        return {"strategy": "pretender", "fake_target": self.fake_target.to_dict(), "dist": self.dist.to_dict()}


@dataclass(frozen=True)
class FixedExample:
    point: int
    label: int
    needs_transcript = False

    def respond(self, k, rng, transcript):
        return np.full(k, self.point, np.int64), np.full(k, self.label, np.int64)

    def to_dict(self):
        return {"strategy": "fixed", "point": self.point, "label": self.label}


@dataclass(frozen=True)
class Silent:
    """Always returns the uninformative example ``(bottom, 0)``."""

    bottom: int
    needs_transcript = False

    def respond(self, k, rng, transcript):
        return np.full(k, self.bottom, np.int64), np.zeros(k, np.int64)

    def to_dict(self):
        return {"strategy": "silent", "bottom": self.bottom}


@dataclass(frozen=True)
class RandomNoise:
    """Points from ``dist`` labelled by ``base`` with each label flipped w.p. ``flip_prob``."""

    dist: Distribution
    base: Hypothesis
    flip_prob: float
    needs_transcript = False

    def respond(self, k, rng, transcript):
        pts = self.dist.sample(rng, k)
        flips = (rng.random(k) < self.flip_prob).astype(np.int64)
        return pts, evaluate_many(self.base, pts) ^ flips

    def to_dict(self):
        return {
            "strategy": "noise",
            "dist": self.dist.to_dict(),
            "base": self.base.to_dict(),
            "flip_prob": self.flip_prob,
        }


@dataclass(frozen=True)
class ReplayFlip:
    """Colluding adversary: replays another oracle's past samples with flipped labels."""

    source: int
    fallback_point: int
    needs_transcript = True

    def respond(self, k, rng, transcript):
        pts, labels = transcript.samples(self.source)
        if pts.size == 0:
            return np.full(k, self.fallback_point, np.int64), np.ones(k, np.int64)
        idx = rng.integers(0, pts.size, k)
        return pts[idx], 1 - labels[idx]

    def to_dict(self):
        return {"strategy": "replay_flip", "source": self.source, "fallback_point": self.fallback_point}


AdversaryStrategy = Pretender | FixedExample | Silent | RandomNoise | ReplayFlip


def strategy_from_dict(data: dict) -> AdversaryStrategy:
    s = data["strategy"]
    if s == "pretender":
        return Pretender(hypothesis_from_dict(data["fake_target"]), Distribution.from_dict(data["dist"]))
    if s == "fixed":
        return FixedExample(data["point"], data["label"])
    if s == "silent":
        return Silent(data["bottom"])
    if s == "noise":
        return RandomNoise(Distribution.from_dict(data["dist"]), hypothesis_from_dict(data["base"]), data["flip_prob"])
    if s == "replay_flip":
        return ReplayFlip(data["source"], data["fallback_point"])
    raise ValueError(f"unknown adversary strategy {s!r}")


# --------------------------------------------------------------------------
# oracles


@dataclass(frozen=True)
class Truthful:
    dist: Distribution

    def to_dict(self):
        return {"mode": "truthful", "dist": self.dist.to_dict()}


@dataclass(frozen=True)
class Adversarial:
    strategy: AdversaryStrategy

    def to_dict(self):
        return {"mode": "adversarial", **self.strategy.to_dict()}


def mode_from_dict(data: dict) -> Truthful | Adversarial:
    if data["mode"] == "truthful":
        return Truthful(Distribution.from_dict(data["dist"]))
    return Adversarial(strategy_from_dict(data))


class UserOracle:
    """One metered user oracle. Not thread-safe; confine to one trial."""

    def __init__(self, oracle_id, mode, target, rng, transcript):
        self.id = oracle_id
        self.mode = mode
        self._target = target
        self._rng = rng
        self._transcript = transcript
        self.query_count = 0

    @property
    def is_truthful(self) -> bool:
        return isinstance(self.mode, Truthful)

    def draw(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        """``k`` consecutive queries, returned as ``(points, labels)`` arrays."""
        if k < 0:
            raise ValueError("k must be non-negative")
        if self.is_truthful:
            pts = self.mode.dist.sample(self._rng, k)
            labels = evaluate_many(self._target, pts)
        else:
            strategy = self.mode.strategy
            view = self._transcript if strategy.needs_transcript else None
            pts, labels = strategy.respond(k, self._rng, view)
        pts = np.asarray(pts, dtype=np.int64)
        labels = np.asarray(labels, dtype=np.int64)
        self.query_count += k
        self._transcript.record(self.id, pts, labels)
        return pts, labels

    def query(self) -> LabeledExample:
        pts, labels = self.draw(1)
        return LabeledExample(int(pts[0]), int(labels[0]))


def query(oracle: UserOracle) -> LabeledExample:
    return oracle.query()


@dataclass(frozen=True)
class SampleLedger:
    counts: tuple[int, ...]

    @property
    def total(self) -> int:
        return sum(self.counts)

    def to_dict(self):
        return {"per_oracle": list(self.counts), "total": self.total}


# --------------------------------------------------------------------------
# instances


@dataclass
class Instance:
    """A learning problem: class, hidden target and ``n`` user oracles.

    ``truthful_mask`` is ground truth for evaluation only; learners must not
    read it. Oracles are rebuilt from ``modes`` and ``seed`` by ``reset()``.
    """

    hypothesis_class: HypothesisClass
    target: Hypothesis
    modes: list
    eta: float
    seed: int
    generator: dict = field(default_factory=dict)
    oracles: list = field(init=False, repr=False)

    def __post_init__(self):
        if not self.hypothesis_class.contains(self.target):
            raise ParameterError("target is not a member of the class")
        if self.n_adversarial > adversary_budget(self.eta, self.n):
            raise ParameterError(
                f"{self.n_adversarial} adversaries exceed floor(eta*n) = {adversary_budget(self.eta, self.n)}"
            )
        for m in self.modes:
            if isinstance(m, Truthful):
                m.dist.check_domain(self.hypothesis_class.domain_size)
        self.reset()

    @property
    def n(self) -> int:
        return len(self.modes)

    @property
    def d(self) -> int:
        return self.hypothesis_class.vc_dimension

    @property
    def truthful_mask(self) -> tuple[bool, ...]:
        return tuple(isinstance(m, Truthful) for m in self.modes)

    @property
    def n_adversarial(self) -> int:
        return sum(not t for t in self.truthful_mask)

    def reset(self) -> None:
        self.transcript = Transcript(self.n)
        self.oracles = [
            UserOracle(i, m, self.target, oracle_rng(self.seed, i), self.transcript)
            for i, m in enumerate(self.modes)
        ]

    def ledger(self) -> SampleLedger:
        return SampleLedger(tuple(o.query_count for o in self.oracles))

    def distribution(self, i: int) -> Distribution | None:
        m = self.modes[i]
        return m.dist if isinstance(m, Truthful) else None

    def to_dict(self) -> dict:
        return {
            "class": self.hypothesis_class.to_dict(),
            "n": self.n,
            "d": self.d,
            "eta": self.eta,
            "seed": self.seed,
            "generator": self.generator,
            "oracles": [m.to_dict() for m in self.modes],
            # not visible to learners
            "evaluation": {"target": self.target.to_dict(), "truthful_mask": list(self.truthful_mask)},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    @classmethod
    def from_dict(cls, data: dict) -> "Instance":
        return cls(
            hypothesis_class=class_from_dict(data["class"]),
            target=hypothesis_from_dict(data["evaluation"]["target"]),
            modes=[mode_from_dict(m) for m in data["oracles"]],
            eta=data["eta"],
            seed=data["seed"],
            generator=data.get("generator", {}),
        )


# --------------------------------------------------------------------------
# generators


def make_lower_bound_instance(n: int, d: int, eps: float, eta: float, seed: int) -> Instance:
    """Hard instance on ``Powerset(d)``: one informative truthful user hidden among pretenders.

    ``(1-eta)n - 1`` truthful users only ever see bottom; user ``i*`` puts
    mass ``2 eps / d`` on each of ``[0, d)``; ``floor(eta n)`` pretenders copy
    ``i*``'s distribution under their own uniformly random targets.
    Layout: the point-mass users come first, then ``i*``, then the pretenders.
    """
    k = adversary_budget(eta, n)
    if not 1 <= k <= n - 1:
        raise ParameterError(f"need 1 <= floor(eta*n) <= n-1, got {k}")
    if not 0 < eps <= 0.5:
        raise ParameterError("need 0 < eps <= 1/2")
    cls = Powerset(d)
    rng = build_rng(seed)
    target = cls.random_member(rng)
    informative = Distribution.from_masses([2 * eps / d] * d + [1 - 2 * eps])
    modes: list = [Truthful(Distribution.point_mass(cls.bottom)) for _ in range(n - k - 1)]
    modes.append(Truthful(informative))
    modes += [Adversarial(Pretender(cls.random_member(rng), informative)) for _ in range(k)]
    gen = {"name": "lower-bound", "n": n, "d": d, "eps": eps, "eta": eta}
    return Instance(cls, target, modes, eta, seed, gen)


def make_centralized_impossibility_instance(n: int, case: int, eta: float | None = None, seed: int = 0) -> Instance:
    """Two-point instance where the two cases are observationally identical.

    Domain ``{x0, x1} = {0, 1}`` with all four labelings. Users 0 and 1 own
    ``x1``; the rest own ``x0``. Case 0: target all-zero, user 0 lies with
    ``(x1, 1)``. Case 1: target labels ``x1`` as 1, user 1 lies with ``(x1, 0)``.
    """
    if n < 2:
        raise ParameterError("need n >= 2")
    if case not in (0, 1):
        raise ParameterError("case must be 0 or 1")
    if eta is None:
        eta = 1 / n
    if adversary_budget(eta, n) < 1:
        raise ParameterError("need eta * n >= 1")
    x0, x1 = 0, 1
    cls = FiniteExplicit(((0, 0), (0, 1), (1, 0), (1, 1)), 2)
    modes: list = [Truthful(Distribution.point_mass(x1)), Truthful(Distribution.point_mass(x1))]
    if case == 0:
        target = LabelVector((0, 0))
        modes[0] = Adversarial(FixedExample(x1, 1))
    else:
        target = LabelVector((0, 1))
        modes[1] = Adversarial(FixedExample(x1, 0))
    modes += [Truthful(Distribution.point_mass(x0)) for _ in range(n - 2)]
    return Instance(cls, target, modes, eta, seed, {"name": "centralized", "n": n, "case": case})


def _make_class(kind: str, d: int) -> HypothesisClass:
    if kind == "powerset":
        return Powerset(d)
    if kind == "threshold":
        return Threshold(d)
    raise ParameterError(f"unknown class kind {kind!r}")


def close_member(cls: HypothesisClass, target: Hypothesis, rng: np.random.Generator) -> Hypothesis:
    """A class member differing from ``target`` as little as possible."""
    if isinstance(target, ThresholdRule):
        options = [t for t in (target.t - 1, target.t + 1) if 0 <= t <= target.domain_size]
        return ThresholdRule(int(rng.choice(options)), target.domain_size)
    if isinstance(cls, Powerset):
        labels = list(target.labels)
        flip = int(rng.integers(0, cls.d))
        labels[flip] ^= 1
        return LabelVector(tuple(labels))
    raise ParameterError("close fake targets need a Threshold or Powerset class")


def make_random_instance(
    n: int,
    d: int,
    eta: float,
    seed: int,
    kind: str = "threshold",
    concentration: float = 1.0,
    shared: bool = False,
    fake: str = "uniform",
) -> Instance:
    """Heterogeneous users with Dirichlet(``concentration``) distributions.

    ``d`` is the VC dimension for ``powerset`` and the domain size for
    ``threshold``. ``floor(eta n)`` users at random positions are pretenders
    copying a random truthful user's distribution; their fake target is a
    uniform class member (``fake="uniform"``) or a nearest neighbour of the
    true target (``fake="close"``). With ``shared=True`` every user gets the
    same distribution.
    """
    if n < 1 or d < 1:
        raise ParameterError("need n, d >= 1")
    k = adversary_budget(eta, n)
    if k >= n:
        raise ParameterError("at least one user must be truthful")
    cls = _make_class(kind, d)
    rng = build_rng(seed)
    target = cls.random_member(rng)
    size = cls.domain_size
    common = rng.dirichlet(np.full(size, concentration))
    dists = [
        Distribution.from_masses(common if shared else rng.dirichlet(np.full(size, concentration)))
        for _ in range(n)
    ]
    bad = set(int(i) for i in rng.choice(n, size=k, replace=False)) if k else set()
    good = [i for i in range(n) if i not in bad]
    modes: list = []
    for i in range(n):
        if i in bad:
            mimic = dists[int(rng.choice(good))]
            fake_target = close_member(cls, target, rng) if fake == "close" else cls.random_member(rng)
            modes.append(Adversarial(Pretender(fake_target, mimic)))
        else:
            modes.append(Truthful(dists[i]))
    gen = {
        "name": "random",
        "kind": kind,
        "n": n,
        "d": d,
        "eta": eta,
        "concentration": concentration,
        "shared": shared,
        "fake": fake,
    }
    return Instance(cls, target, modes, eta, seed, gen)


def make_instance(name: str, **params) -> Instance:
    """Dispatch on generator name: ``lower-bound``, ``centralized`` or ``random``."""
    if name == "lower-bound":
        return make_lower_bound_instance(params["n"], params["d"], params["eps"], params["eta"], params["seed"])
    if name == "centralized":
        return make_centralized_impossibility_instance(params["n"], params.get("case", 0), params.get("eta"), params.get("seed", 0))
    if name == "random":
        return make_random_instance(
            params["n"],
            params["d"],
            params.get("eta", 0.0),
            params["seed"],
            kind=params.get("kind", "threshold"),
            concentration=params.get("concentration", 1.0),
            shared=params.get("shared", False),
            fake=params.get("fake", "uniform"),
        )
    raise ParameterError(f"unknown generator {name!r}")
