"""Normal-distribution fitting and symmetric Gaussian KL scoring."""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass

from .errors import DataError


class TooFewValues(DataError):
    """A distribution fit needs at least two observations."""


class DegenerateDistribution(DataError):
    """All observations identical; a zero-sigma normal is unrepresentable."""


@dataclass(frozen=True)
class NormalDist:
    """A fitted normal: mean and standard deviation in $/MMBtu."""

    mu: float
    sigma: float

    def __post_init__(self) -> None:
        if not self.sigma > 0:
            raise DegenerateDistribution(f"sigma must be positive, got {self.sigma}")

    def as_dict(self) -> dict[str, float]:
        return {"mu": self.mu, "sigma": self.sigma}

    @classmethod
    def from_dict(cls, d: dict[str, float]) -> "NormalDist":
        return cls(float(d["mu"]), float(d["sigma"]))


def fit_normal(values: Sequence[float]) -> NormalDist:
    """Maximum-likelihood normal fit: sample mean and 1/n standard deviation.

    The 1/n (not 1/(n-1)) estimator is deliberate; at cross-plant sample
    sizes the difference is visible in downstream KL scores.
    """
    n = len(values)
    if n < 2:
        raise TooFewValues(f"need at least 2 values, got {n}")
    mu = sum(values) / n
    var = sum((v - mu) ** 2 for v in values) / n
    if var == 0.0:
        raise DegenerateDistribution("all values identical")
    return NormalDist(mu, math.sqrt(var))


def kl_gaussian(p: NormalDist, q: NormalDist) -> float:
    """KL(p||q) for normals, closed form, in nats.

    ln(s2/s1) + (s1^2 + (m1-m2)^2) / (2 s2^2) - 1/2.
    """
    return (
        math.log(q.sigma / p.sigma)
        + (p.sigma**2 + (p.mu - q.mu) ** 2) / (2.0 * q.sigma**2)
        - 0.5
    )


def symmetric_kl(p: NormalDist, q: NormalDist) -> float:
    """KL(p||q) + KL(q||p); symmetric in its arguments by construction."""
    return kl_gaussian(p, q) + kl_gaussian(q, p)
