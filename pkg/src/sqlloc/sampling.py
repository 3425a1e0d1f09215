"""Sample sizes for manual review, reproducible draws and accuracy intervals."""

from __future__ import annotations

import json
import math
import random
from dataclasses import asdict, dataclass, field
from pathlib import Path
from statistics import NormalDist
from typing import Iterable, Optional

from sqlloc.errors import InvalidParameter, SampleTooLarge

# products such as 1.96**2 * 0.25 / 0.05**2 land a hair above the exact
# integer in floating point; anything closer than this counts as exact
_CEIL_SLACK = 1e-9


def z_score(confidence: float) -> float:
    """Two-sided standard-normal quantile, e.g. 1.959964 for 0.95."""
    if not 0.0 < confidence < 1.0:
        raise InvalidParameter(f"confidence must lie in (0, 1), got {confidence}")
    return NormalDist().inv_cdf(1.0 - (1.0 - confidence) / 2.0)


def required_sample_size(confidence: float, margin: float, p: float = 0.5) -> int:
    """Infinite-population sample size ``ceil(z^2 p (1-p) / E^2)``."""
    if not 0.0 < margin < 1.0:
        raise InvalidParameter(f"margin must lie in (0, 1), got {margin}")
    if not 0.0 < p < 1.0:
        raise InvalidParameter(f"p must lie in (0, 1), got {p}")
    z = z_score(confidence)
    return math.ceil(z * z * p * (1.0 - p) / (margin * margin) - _CEIL_SLACK)


def apply_fpc(n0: int, population: int) -> int:
    """Finite-population correction ``ceil(n0 / (1 + (n0 - 1) / N))``, in exact integers."""
    if n0 < 1 or population < 1:
        raise InvalidParameter("n0 and N must both be at least 1")
    num = n0 * population
    den = population + n0 - 1
    return -(-num // den)


def draw_sample(population_ids: Iterable, n: int, seed: int) -> list:
    """Uniform draw without replacement, deterministic for a seed, returned sorted."""
    pool = sorted(population_ids)
    if len(set(pool)) != len(pool):
        raise InvalidParameter("population ids must be distinct")
    if n < 0:
        raise InvalidParameter("sample size must be non-negative")
    if n > len(pool):
        raise SampleTooLarge(f"cannot draw {n} from a population of {len(pool)}")
    return sorted(random.Random(seed).sample(pool, n))


@dataclass(frozen=True)
class AccuracyEstimate:
    point: float
    low: float
    high: float
    confidence: float
    method: str

    def as_percent(self, digits: int = 2) -> tuple[float, float, float]:
        return (round(self.point * 100, digits), round(self.low * 100, digits),
                round(self.high * 100, digits))


def accuracy_estimate(correct: int, n: int, confidence: float = 0.95,
                      method: str = "wald") -> AccuracyEstimate:
    """Observed accuracy with a Wald (default) or Wilson interval, clipped to [0, 1]."""
    if n < 1 or not 0 <= correct <= n:
        raise InvalidParameter(f"need 0 <= correct <= n and n >= 1, got {correct}/{n}")
    z = z_score(confidence)
    p = correct / n
    if method == "wald":
        half = z * math.sqrt(p * (1 - p) / n)
        low, high = p - half, p + half
    elif method == "wilson":
        denom = 1 + z * z / n
        centre = (p + z * z / (2 * n)) / denom
        half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
        # the interval always contains p; rounding can leave it 1 ulp outside
        low, high = min(centre - half, p), max(centre + half, p)
    else:
        raise InvalidParameter(f"unknown interval method {method!r}")
    return AccuracyEstimate(p, max(0.0, low), min(1.0, high), confidence, method)


@dataclass
class SamplingPlan:
    confidence: float
    z: float
    error_margin: float
    p: float
    population: int
    n0: int
    n: int
    seed: int
    sample_ids: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "SamplingPlan":
        return cls(**json.loads(Path(path).read_text(encoding="utf-8")))


def make_plan(confidence: float, margin: float, population_ids: Iterable, seed: int,
              p: float = 0.5) -> SamplingPlan:
    ids = sorted(population_ids)
    n0 = required_sample_size(confidence, margin, p)
    n = apply_fpc(n0, len(ids))
    return SamplingPlan(confidence, z_score(confidence), margin, p, len(ids), n0, n, seed,
                        draw_sample(ids, n, seed))


def score_review(results: Iterable[dict], plan: Optional[SamplingPlan] = None,
                 method: str = "wald") -> AccuracyEstimate:
    """Accuracy from review outcomes ``{"item_id", "correct"}``; restricted to the plan's sample."""
    outcomes = {}
    for r in results:
        outcomes[r["item_id"]] = bool(r["correct"])
    if plan is not None:
        unknown = set(outcomes) - set(plan.sample_ids)
        if unknown:
            raise InvalidParameter(f"review covers items outside the sample: {sorted(unknown)[:5]}")
    confidence = plan.confidence if plan is not None else 0.95
    return accuracy_estimate(sum(outcomes.values()), len(outcomes), confidence, method)
