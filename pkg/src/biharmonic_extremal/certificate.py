from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum


class Verdict(str, Enum):
    CERTIFIED = "certified"
    REFUTED = "refuted"
    INCONCLUSIVE = "inconclusive"


class NumericalFailure(RuntimeError):
    """Two independent evaluation routes disagree, or a solver broke down."""


@dataclass
class CertificateReport:
    """Outcome of one inequality check.

    ``worst_margin`` is signed and expressed in K0 multiplier units: the
    distance from the requested multiplier to the largest (or smallest)
    admissible one.  ``worst_location`` is the radius where it occurs; 0.0
    stands for the limit r -> 0+.
    """

    verdict: Verdict
    worst_margin: float
    worst_location: float
    method: str
    precision: str
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.verdict is Verdict.CERTIFIED and self.worst_margin < 0:
            raise ValueError("a certified report cannot carry a negative margin")
        if self.verdict is Verdict.REFUTED and not self.worst_margin < 0:
            raise ValueError("a refuted report needs a negative margin")

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict.value,
            "worst_margin": float(self.worst_margin),
            "worst_location": float(self.worst_location),
            "method": self.method,
            "precision": self.precision,
            "details": self.details,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CertificateReport":
        return cls(Verdict(data["verdict"]), data["worst_margin"], data["worst_location"],
                   data["method"], data["precision"], dict(data.get("details", {})))


def dumps(obj) -> str:
    """Canonical JSON: sorted keys, fixed indentation, no NaN."""
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n"


def classify(margin: float, tol: float) -> Verdict:
    if margin >= tol:
        return Verdict.CERTIFIED
    if margin < -tol:
        return Verdict.REFUTED
    return Verdict.INCONCLUSIVE


def exit_code(verdicts) -> int:
    """0 when everything is certified, 1 on any refutation, 2 otherwise."""
    verdicts = list(verdicts)
    if any(v is Verdict.REFUTED for v in verdicts):
        return 1
    if any(v is Verdict.INCONCLUSIVE for v in verdicts):
        return 2
    return 0
