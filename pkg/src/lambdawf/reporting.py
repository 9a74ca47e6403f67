"""Estimate and comparison containers shared by the Monte Carlo harness."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["Estimate", "ComparisonReport"]


@dataclass(frozen=True)
class Estimate:
    """Sample mean with its standard error and a 95% normal interval."""

    mean: float
    stderr: float
    n: int

    def __post_init__(self):
        if self.stderr < 0.0 or self.n < 1:
            raise ValueError("stderr must be nonnegative and n positive")

    @property
    def ci95(self) -> tuple[float, float]:
        return (self.mean - 1.96 * self.stderr, self.mean + 1.96 * self.stderr)

    @classmethod
    def from_samples(cls, samples) -> "Estimate":
        samples = np.asarray(samples, dtype=float)
        n = samples.size
        sd = samples.std(ddof=1) if n > 1 else 0.0
        return cls(mean=float(samples.mean()), stderr=float(sd / math.sqrt(n)), n=n)


@dataclass(frozen=True)
class ComparisonReport:
    """One formula-vs-estimate comparison with a z-score pass/fail verdict.

    extra_tolerance widens the acceptance band by a deterministic amount
    (truncation bias brackets); z is computed against stderr alone and the
    verdict uses |estimate - formula| <= threshold * stderr + extra_tolerance.
    """

    label: str
    formula_value: float
    estimate: Estimate
    threshold: float = 4.0
    extra_tolerance: float = 0.0

    @property
    def z_score(self) -> float:
        err = abs(self.estimate.mean - self.formula_value)
        slack = max(err - self.extra_tolerance, 0.0)
        if self.estimate.stderr == 0.0:
            return 0.0 if slack == 0.0 else math.inf
        return math.copysign(slack / self.estimate.stderr,
                             self.estimate.mean - self.formula_value)

    @property
    def passed(self) -> bool:
        return abs(self.z_score) <= self.threshold

    def csv_row(self, experiment: str) -> str:
        return ",".join(
            [
                experiment,
                self.label,
                f"{self.formula_value:.10g}",
                f"{self.estimate.mean:.10g}",
                f"{self.estimate.stderr:.4g}",
                f"{self.z_score:.4g}",
                "true" if self.passed else "false",
            ]
        )


CSV_HEADER = "experiment,label,formula,estimate,stderr,z,pass"
