"""Calendar-month arithmetic used by every series-bearing module."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True, order=True)
class Month:
    """A calendar month. Ordered, hashable, and closed under +int."""

    year: int
    month: int

    def __post_init__(self) -> None:
        if not 1 <= self.month <= 12:
            raise ValueError(f"month out of range 1..12: {self.month}")

    @classmethod
    def parse(cls, text: str) -> "Month":
        """Parse 'YYYYMM' or 'YYYY-MM' into a Month."""
        t = text.strip()
        if len(t) == 6 and t.isdigit():
            return cls(int(t[:4]), int(t[4:]))
        if len(t) == 7 and t[4] in "-/" and t[:4].isdigit() and t[5:].isdigit():
            return cls(int(t[:4]), int(t[5:]))
        raise ValueError(f"not a YYYYMM month: {text!r}")

    @classmethod
    def from_code(cls, code: int) -> "Month":
        return cls(code // 100, code % 100)

    def code(self) -> int:
        return self.year * 100 + self.month

    def __str__(self) -> str:
        return f"{self.year:04d}{self.month:02d}"

    def __add__(self, n: int) -> "Month":
        if not isinstance(n, int):
            return NotImplemented
        k = self.year * 12 + (self.month - 1) + n
        return Month(k // 12, k % 12 + 1)

    def __sub__(self, other):
        """Month - Month gives a month count; Month - int steps back."""
        if isinstance(other, Month):
            return (self.year - other.year) * 12 + (self.month - other.month)
        if isinstance(other, int):
            return self + (-other)
        return NotImplemented


def month_range(first: Month, last: Month) -> list[Month]:
    """All months from first to last inclusive."""
    if last < first:
        raise ValueError(f"backwards span {first}..{last}")
    return [first + i for i in range(last - first + 1)]
