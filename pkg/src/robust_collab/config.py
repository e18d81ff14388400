"""Experiment configuration and the explicit constants behind every Theta(.)."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields, replace
from importlib import resources

from .hypotheses import ParameterError


@dataclass(frozen=True)
class LearnerConstants:
    c_pac: float = 1.0
    c_cand: float = 1.0
    c_test: float = 1.0
    c_bins: float = 1.0
    c_final: float = 1.0
    max_candidate_group: int = 25
    # safety stop for the round loop; never reached in calibrated runs
    max_rounds: int = 64

    def __post_init__(self):
        for f in ("c_pac", "c_cand", "c_test", "c_bins", "c_final"):
            if not getattr(self, f) > 0:
                raise ParameterError(f"{f} must be positive")
        if self.max_candidate_group < 1:
            raise ParameterError("max_candidate_group must be >= 1")
        if self.max_rounds < 1:
            raise ParameterError("max_rounds must be >= 1")

    @classmethod
    def calibrated(cls) -> "LearnerConstants":
        """Constants frozen in the package's ``constants.json`` ledger."""
        data = load_constants_ledger()
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in data["constants"].items() if k in names})

    def override(self, **changes) -> "LearnerConstants":
        return replace(self, **{k: v for k, v in changes.items() if v is not None})

    def to_dict(self) -> dict:
        return asdict(self)


def load_constants_ledger() -> dict:
    text = resources.files("robust_collab").joinpath("constants.json").read_text(encoding="utf-8")
    return json.loads(text)


def lower_bound_gamma() -> float:
    return float(load_constants_ledger()["gamma"])


def validate_params(eps: float, delta: float, eta: float = 0.0, n: int = 1, d: int = 1) -> None:
    if not 0 < eps <= 1:
        raise ParameterError(f"eps must lie in (0, 1], got {eps}")
    if not 0 < delta <= 1:
        raise ParameterError(f"delta must lie in (0, 1], got {delta}")
    if not 0 <= eta <= 1:
        raise ParameterError(f"eta must lie in [0, 1], got {eta}")
    if n < 1 or d < 1:
        raise ParameterError("n and d must be >= 1")


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment point: problem parameters, constants and the root seed."""

    n: int
    d: int
    eps: float = 0.1
    delta: float = 0.1
    eta: float = 0.0
    seed: int = 0
    kind: str = "threshold"
    constants: LearnerConstants = LearnerConstants()

    def __post_init__(self):
        validate_params(self.eps, self.delta, self.eta, self.n, self.d)

    def to_dict(self) -> dict:
        return asdict(self)
