"""Finite-domain hypotheses, hypothesis classes and the consistency oracle.

Points are plain non-negative integers in ``range(domain_size)``. A
``Powerset(d)`` class has domain ``[0, d)`` plus a reserved bottom point at
index ``d`` that every member maps to 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

MASS_TOLERANCE = 1e-9


class DomainError(ValueError):
    """A point or hypothesis does not live on the expected domain."""


class ParameterError(ValueError):
    """A numeric parameter is outside its admissible range."""


class LabeledExample(NamedTuple):
    point: int
    label: int


def _check_points(points: np.ndarray, domain_size: int) -> None:
    if points.size and (points.min() < 0 or points.max() >= domain_size):
        raise DomainError(f"points outside domain [0, {domain_size})")


def as_arrays(examples) -> tuple[np.ndarray, np.ndarray]:
    """Coerce ``examples`` to a ``(points, labels)`` pair of int arrays.

    Accepts an iterable of ``(point, label)`` pairs or an already split pair
    of arrays.
    """
    if isinstance(examples, tuple) and len(examples) == 2 and isinstance(examples[0], np.ndarray):
        points, labels = examples
    else:
        pairs = list(examples)
        points = np.array([p for p, _ in pairs], dtype=np.int64)
        labels = np.array([y for _, y in pairs], dtype=np.int64)
    points = np.asarray(points, dtype=np.int64)
    labels = np.asarray(labels, dtype=np.int64)
    if points.shape != labels.shape:
        raise ValueError("points and labels must have the same length")
    if labels.size and not np.isin(labels, (0, 1)).all():
        raise ValueError("labels must be 0 or 1")
    return points, labels


def compress(points: np.ndarray, labels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Drop duplicate (point, label) pairs; consistency only depends on the set."""
    if points.size == 0:
        return points, labels
    keys = np.unique(points * 2 + labels)
    return keys // 2, keys % 2


# --------------------------------------------------------------------------
# hypotheses


@dataclass(frozen=True)
class LabelVector:
    """Explicit truth table over ``range(len(labels))``."""

    labels: tuple[int, ...]

    def __post_init__(self):
        if any(y not in (0, 1) for y in self.labels):
            raise ValueError("labels must be 0 or 1")

    @property
    def domain_size(self) -> int:
        return len(self.labels)

    def to_array(self) -> np.ndarray:
        return np.asarray(self.labels, dtype=np.int64)

    def to_dict(self) -> dict:
        return {"kind": "labels", "labels": list(self.labels)}


@dataclass(frozen=True)
class ThresholdRule:
    """Label 1 iff ``x >= t``; ``t`` ranges over ``0..domain_size``."""

    t: int
    domain_size: int

    def __post_init__(self):
        if not 0 <= self.t <= self.domain_size:
            raise ValueError(f"threshold {self.t} outside [0, {self.domain_size}]")

    def to_array(self) -> np.ndarray:
        return (np.arange(self.domain_size) >= self.t).astype(np.int64)

    def to_dict(self) -> dict:
        return {"kind": "threshold", "t": self.t, "domain_size": self.domain_size}


Hypothesis = LabelVector | ThresholdRule


def hypothesis_from_dict(data: dict) -> Hypothesis:
    if data["kind"] == "labels":
        return LabelVector(tuple(data["labels"]))
    if data["kind"] == "threshold":
        return ThresholdRule(data["t"], data["domain_size"])
    raise ValueError(f"unknown hypothesis kind {data['kind']!r}")


def evaluate(f: Hypothesis, x: int) -> int:
    if not 0 <= x < f.domain_size:
        raise DomainError(f"point {x} outside domain [0, {f.domain_size})")
    if isinstance(f, ThresholdRule):
        return int(x >= f.t)
    return f.labels[x]


def evaluate_many(f: Hypothesis, points: np.ndarray) -> np.ndarray:
    points = np.asarray(points, dtype=np.int64)
    _check_points(points, f.domain_size)
    if isinstance(f, ThresholdRule):
        return (points >= f.t).astype(np.int64)
    return f.to_array()[points]


# --------------------------------------------------------------------------
# distributions


@dataclass(frozen=True)
class Distribution:
    """Finite-support distribution; ``points`` and ``masses`` are parallel."""

    points: tuple[int, ...]
    masses: tuple[float, ...]

    def __post_init__(self):
        if len(self.points) != len(self.masses) or not self.points:
            raise ValueError("support must be non-empty with one mass per point")
        if len(set(self.points)) != len(self.points):
            raise ValueError("support points must be distinct")
        if min(self.points) < 0:
            raise DomainError("negative support point")
        if min(self.masses) < 0:
            raise ValueError("masses must be non-negative")
        if abs(math.fsum(self.masses) - 1.0) > MASS_TOLERANCE:
            raise ValueError(f"masses sum to {math.fsum(self.masses)!r}, not 1")

    @classmethod
    def point_mass(cls, x: int) -> "Distribution":
        return cls((x,), (1.0,))

    @classmethod
    def from_masses(cls, masses: Sequence[float]) -> "Distribution":
        """Dense mass vector over ``range(len(masses))``; zero entries are dropped."""
        pts = tuple(i for i, m in enumerate(masses) if m > 0)
        return cls(pts, tuple(float(masses[i]) for i in pts))

    def check_domain(self, domain_size: int) -> None:
        if max(self.points) >= domain_size:
            raise DomainError(f"support point {max(self.points)} outside [0, {domain_size})")

    def mass_vector(self, domain_size: int) -> np.ndarray:
        self.check_domain(domain_size)
        v = np.zeros(domain_size)
        v[list(self.points)] = self.masses
        return v

    def sample(self, rng: np.random.Generator, k: int) -> np.ndarray:
        p = np.asarray(self.masses, dtype=float)
        return np.asarray(self.points, dtype=np.int64)[rng.choice(len(p), size=k, p=p / p.sum())]

    def to_dict(self) -> dict:
        return {"points": list(self.points), "masses": list(self.masses)}

    @classmethod
    def from_dict(cls, data: dict) -> "Distribution":
        return cls(tuple(data["points"]), tuple(float(m) for m in data["masses"]))


def error_rate(f: Hypothesis, target: Hypothesis, dist: Distribution) -> float:
    """Exact probability under ``dist`` that ``f`` disagrees with ``target``."""
    if f.domain_size != target.domain_size:
        raise DomainError("hypotheses live on different domains")
    dist.check_domain(f.domain_size)
    pts = np.asarray(dist.points, dtype=np.int64)
    wrong = evaluate_many(f, pts) != evaluate_many(target, pts)
    return float(min(1.0, math.fsum(np.asarray(dist.masses)[wrong])))


# --------------------------------------------------------------------------
# hypothesis classes


class HypothesisClass:
    """Base for the built-in classes.

    ``consistent`` is the consistency oracle: it returns a member agreeing
    with every example or ``None`` when no member does.
    """

    domain_size: int
    vc_dimension: int
    bottom: int | None = None

    def consistent(self, examples) -> Hypothesis | None:
        points, labels = as_arrays(examples)
        _check_points(points, self.domain_size)
        return self._consistent(*compress(points, labels))

    def _consistent(self, points: np.ndarray, labels: np.ndarray) -> Hypothesis | None:
        raise NotImplementedError

    def default(self) -> Hypothesis:
        """The member returned for an empty sample."""
        return self._consistent(np.empty(0, np.int64), np.empty(0, np.int64))

    def contains(self, f: Hypothesis) -> bool:
        raise NotImplementedError

    def random_member(self, rng: np.random.Generator) -> Hypothesis:
        raise NotImplementedError

    def members(self):
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Powerset(HypothesisClass):
    """All ``2**d`` labelings of ``[0, d)``, each mapping bottom (index ``d``) to 0."""

    d: int

    def __post_init__(self):
        if self.d < 1:
            raise ParameterError("Powerset needs d >= 1")

    @property
    def domain_size(self) -> int:
        return self.d + 1

    @property
    def vc_dimension(self) -> int:
        return self.d

    @property
    def bottom(self) -> int:
        return self.d

    def _consistent(self, points, labels):
        # compress() leaves at most one entry per (point, label); a repeated
        # point therefore means both labels were seen
        if points.size != np.unique(points).size:
            return None
        if np.any((points == self.d) & (labels == 1)):
            return None
        out = np.zeros(self.domain_size, dtype=np.int64)
        out[points] = labels
        return LabelVector(tuple(int(v) for v in out))

    def contains(self, f):
        return isinstance(f, LabelVector) and f.domain_size == self.domain_size and f.labels[self.d] == 0

    def random_member(self, rng):
        return LabelVector(tuple(int(v) for v in rng.integers(0, 2, self.d)) + (0,))

    def members(self):
        for code in range(2 ** self.d):
            yield LabelVector(tuple((code >> i) & 1 for i in range(self.d)) + (0,))

    def to_dict(self):
        return {"kind": "powerset", "d": self.d}


@dataclass(frozen=True)
class Threshold(HypothesisClass):
    """Thresholds ``x >= t`` on ``[0, m)`` for ``t`` in ``0..m``."""

    m: int

    def __post_init__(self):
        if self.m < 1:
            raise ParameterError("Threshold needs m >= 1")

    @property
    def domain_size(self) -> int:
        return self.m

    @property
    def vc_dimension(self) -> int:
        return 1

    def _consistent(self, points, labels):
        zeros = points[labels == 0]
        ones = points[labels == 1]
        lo = int(zeros.max()) + 1 if zeros.size else 0
        hi = int(ones.min()) if ones.size else self.m
        if lo > hi:
            return None
        return ThresholdRule(lo, self.m)

    def contains(self, f):
        return isinstance(f, ThresholdRule) and f.domain_size == self.m

    def random_member(self, rng):
        return ThresholdRule(int(rng.integers(0, self.m + 1)), self.m)

    def members(self):
        for t in range(self.m + 1):
            yield ThresholdRule(t, self.m)

    def to_dict(self):
        return {"kind": "threshold", "m": self.m}


@dataclass(frozen=True)
class FiniteExplicit(HypothesisClass):
    """An explicit list of truth tables; ties go to the earliest member."""

    tables: tuple[tuple[int, ...], ...]
    vc_dimension: int
    _matrix: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.tables:
            raise ValueError("FiniteExplicit needs at least one member")
        if len({len(t) for t in self.tables}) != 1:
            raise DomainError("all members must share one domain")
        if self.vc_dimension < 0 or 2 ** self.vc_dimension > len(self.tables):
            raise ParameterError(
                f"vc_dimension {self.vc_dimension} exceeds log2 of {len(self.tables)} members"
            )
        matrix = np.asarray(self.tables, dtype=np.int8)
        if not np.isin(matrix, (0, 1)).all():
            raise ValueError("labels must be 0 or 1")
        object.__setattr__(self, "_matrix", matrix)

    @property
    def domain_size(self) -> int:
        return len(self.tables[0])

    def _consistent(self, points, labels):
        if points.size != np.unique(points).size:
            return None
        ok = (self._matrix[:, points] == labels).all(axis=1)
        hits = np.flatnonzero(ok)
        if hits.size == 0:
            return None
        return LabelVector(self.tables[hits[0]])

    def contains(self, f):
        return isinstance(f, LabelVector) and f.labels in set(self.tables)

    def random_member(self, rng):
        return LabelVector(self.tables[int(rng.integers(len(self.tables)))])

    def members(self):
        for t in self.tables:
            yield LabelVector(t)

    def to_dict(self):
        return {"kind": "finite", "vc_dimension": self.vc_dimension, "tables": [list(t) for t in self.tables]}


def class_from_dict(data: dict) -> HypothesisClass:
    kind = data["kind"]
    if kind == "powerset":
        return Powerset(data["d"])
    if kind == "threshold":
        return Threshold(data["m"])
    if kind == "finite":
        return FiniteExplicit(tuple(tuple(t) for t in data["tables"]), data["vc_dimension"])
    raise ValueError(f"unknown class kind {kind!r}")


def consistent(cls: HypothesisClass, examples) -> Hypothesis | None:
    return cls.consistent(examples)


def pac_sample_size(d: int, eps: float, delta: float, c_pac: float = 1.0) -> int:
    """Realizable PAC sample size ``ceil(c_pac * (d ln(1/eps) + ln(1/delta)) / eps)``, at least 1."""
    if not (0 < eps <= 1 and 0 < delta <= 1):
        raise ParameterError(f"need 0 < eps, delta <= 1 (got eps={eps}, delta={delta})")
    if d < 1:
        raise ParameterError("d must be >= 1")
    if c_pac <= 0:
        raise ParameterError("c_pac must be positive")
    return max(1, math.ceil(c_pac * (d * math.log(1 / eps) + math.log(1 / delta)) / eps))
