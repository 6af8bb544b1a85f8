"""Month-indexed series algebra.

Holds the ``MonthSeries`` container plus the value-level operations the
forecasting pipeline is built from: hub-differential construction, the
log-with-offset transform pair, integer-order differencing and its
inverse, and the additive forecast reconstruction.
"""

from __future__ import annotations

import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .months import Month


class EmptyOverlap(DataError):
    """Two series were combined but their spans do not intersect."""


class NonPositiveArgument(DataError):
    """A log transform was applied to a value with v + offset <= 0."""

    def __init__(self, month: Month, value: float, offset: float):
        self.month = month
        super().__init__(
            f"log transform undefined at {month}: {value} + {offset} <= 0"
        )


class TooShort(DataError):
    """A sequence is too short for the requested differencing order."""


class HeadMismatch(DataError):
    """Integration heads do not match the declared differencing order."""


@dataclass(frozen=True)
class MonthSeries:
    """A contiguous calendar-month-indexed sequence; None marks a gap.

    Slot i holds the value for month ``start + i``; December wraps into
    January of the next year through Month arithmetic.
    """

    start: Month
    values: tuple[float | None, ...]

    def __post_init__(self) -> None:
        if not self.values:
            raise ValueError("a MonthSeries needs at least one slot")

    @classmethod
    def from_map(cls, mapping: Mapping[Month, float], first: Month, last: Month) -> "MonthSeries":
        """Lay mapping values onto the span first..last; absent months are gaps."""
        if last < first:
            raise ValueError(f"backwards span {first}..{last}")
        vals = tuple(mapping.get(first + i) for i in range(last - first + 1))
        return cls(first, vals)

    @property
    def end(self) -> Month:
        return self.start + (len(self.values) - 1)

    def __len__(self) -> int:
        return len(self.values)

    def months(self) -> list[Month]:
        return [self.start + i for i in range(len(self.values))]

    def index(self, m: Month) -> int:
        i = m - self.start
        if not 0 <= i < len(self.values):
            raise KeyError(f"{m} outside series span {self.start}..{self.end}")
        return i

    def get(self, m: Month) -> float | None:
        return self.values[self.index(m)]

    @property
    def is_complete(self) -> bool:
        return all(v is not None for v in self.values)

    def complete_values(self) -> list[float]:
        if not self.is_complete:
            raise ValueError("series has gaps")
        return [float(v) for v in self.values]  # type: ignore[arg-type]

    def window(self, first: Month, last: Month) -> "MonthSeries":
        """Sub-series over first..last; both bounds must lie inside the span."""
        i, j = self.index(first), self.index(last)
        if j < i:
            raise ValueError(f"backwards window {first}..{last}")
        return MonthSeries(first, self.values[i : j + 1])

    def through(self, last: Month) -> "MonthSeries":
        return self.window(self.start, last)

    def covers(self, first: Month, last: Month) -> bool:
        return self.start <= first and last <= self.end

    def gap_runs(self) -> list[int]:
        """Lengths of the maximal runs of missing months, left to right."""
        runs, run = [], 0
        for v in self.values:
            if v is None:
                run += 1
            elif run:
                runs.append(run)
                run = 0
        if run:
            runs.append(run)
        return runs


@dataclass(frozen=True)
class Transform:
    """Natural-log transform with a fixed nonnegative offset.

    The offset is chosen once from training data and must be reused
    verbatim at inversion; re-deriving it per refit would silently change
    the definition of the transformed variable.
    """

    kind: str = "log_with_offset"
    offset_c: float = 0.0

    def __post_init__(self) -> None:
        if self.kind != "log_with_offset":
            raise ValueError(f"unknown transform kind {self.kind!r}")
        if not self.offset_c >= 0.0:
            raise ValueError(f"offset must be nonnegative, got {self.offset_c}")


def differential_series(plant: MonthSeries, hub: MonthSeries) -> MonthSeries:
    """Plant fuel cost minus hub price, month by month, over the overlap.

    Negative values are legal: a plant can pay below the hub price.
    """
    first = max(plant.start, hub.start)
    last = min(plant.end, hub.end)
    if last < first:
        raise EmptyOverlap(
            f"spans {plant.start}..{plant.end} and {hub.start}..{hub.end} do not overlap"
        )
    out = []
    for m in month_iter(first, last):
        p, h = plant.get(m), hub.get(m)
        if p is None or h is None:
            raise ValueError(f"gap at {m} inside the overlap")
        out.append(p - h)
    return MonthSeries(first, tuple(out))


def month_iter(first: Month, last: Month):
    for i in range(last - first + 1):
        yield first + i


def choose_offset(train: MonthSeries, margin: float) -> Transform:
    """Fix the log offset from training data: c = max(0, -min) + margin."""
    if not margin > 0:
        raise ValueError(f"margin must be positive, got {margin}")
    vals = train.complete_values()
    c = max(0.0, -min(vals)) + margin
    return Transform("log_with_offset", c)


def apply_transform(t: Transform, s: MonthSeries) -> MonthSeries:
    """Value-wise ln(v + c); gaps pass through untouched."""
    out: list[float | None] = []
    for m, v in zip(s.months(), s.values):
        if v is None:
            out.append(None)
            continue
        shifted = v + t.offset_c
        if not shifted > 0.0:
            raise NonPositiveArgument(m, v, t.offset_c)
        out.append(math.log(shifted))
    return MonthSeries(s.start, tuple(out))


def invert_transform(t: Transform, s: MonthSeries) -> MonthSeries:
    """Value-wise exp(v) - c; inverse of apply_transform."""
    out = tuple(None if v is None else math.exp(v) - t.offset_c for v in s.values)
    return MonthSeries(s.start, out)


def difference(s: Sequence[float] | np.ndarray, d: int) -> np.ndarray:
    """Apply the first-difference operator d times; output shrinks by d."""
    if d < 0:
        raise ValueError("differencing order must be nonnegative")
    x = np.asarray(s, dtype=float)
    if x.size <= d:
        raise TooShort(f"need more than {d} points to difference {d} times, got {x.size}")
    return np.diff(x, n=d) if d else x.copy()


def integrate(diffs: Sequence[float] | np.ndarray, heads: Sequence[float] | np.ndarray,
              d: int | None = None) -> np.ndarray:
    """Invert d-fold differencing; heads are the first d values of the original.

    integrate(difference(s, d), s[:d]) reproduces s up to floating addition.
    """
    heads = np.asarray(heads, dtype=float)
    cur = np.asarray(diffs, dtype=float)
    if d is not None and heads.size != d:
        raise HeadMismatch(f"expected {d} head values, got {heads.size}")
    for j in range(heads.size - 1, -1, -1):
        anchor = heads[0] if j == 0 else np.diff(heads, n=j)[0]
        cur = anchor + np.concatenate([[0.0], np.cumsum(cur)])
    return cur


def reconstruct_forecast(delta_fc_forecast: float, hub_forecast: float) -> float:
    """Recombine a differential forecast with the hub forecast.

    Both arguments must already be back in price space, not log space.
    """
    return delta_fc_forecast + hub_forecast
