"""Plant fuel-record ingestion.

Parses CSV extracts of plant-level fuel receipts, aggregates them to a
quantity-and-heat-weighted monthly $/MMBtu per plant, repairs isolated
single-month gaps by midpoint interpolation, applies the plant-inclusion
policy, and loads the hub spot-price series.

Expected schemas
----------------
plant records : ``Date,PlantID,State,Source,Quantity,AvgHeatContent,FuelCost``
                with Date as YYYYMM
hub prices    : ``Date,Price`` with Date as YYYYMM or YYYY-MM-DD
"""

from __future__ import annotations

import csv
import io
import logging
from collections.abc import Iterable
from dataclasses import dataclass

from .errors import DataError
from .months import Month
from .series import MonthSeries

log = logging.getLogger(__name__)

RECORD_COLUMNS = ("Date", "PlantID", "State", "Source", "Quantity", "AvgHeatContent", "FuelCost")
HUB_COLUMNS = ("Date", "Price")


class MalformedRow(DataError):
    """A CSV data row failed to parse or violated a field invariant."""

    def __init__(self, line: int, detail: str):
        self.line = line
        super().__init__(f"line {line}: {detail}")


class MissingColumn(DataError):
    """The CSV header lacks a required column."""

    def __init__(self, name: str):
        self.name = name
        super().__init__(f"missing required column {name!r}")


class IncompleteHub(DataError):
    """The hub price series has a hole inside its covered span."""

    def __init__(self, month: Month):
        self.month = month
        super().__init__(f"no hub price for {month}")


@dataclass(frozen=True)
class FuelRecord:
    """One raw fuel-receipt row: what was burned, how hot, at what cost."""

    date: Month
    plant_id: int
    state: str
    source: str
    quantity: float
    avg_heat_content: float
    fuel_cost: float

    def __post_init__(self) -> None:
        if self.plant_id <= 0:
            raise ValueError(f"plant id must be positive: {self.plant_id}")
        if len(self.state) != 2 or not self.state.isalpha():
            raise ValueError(f"state must be a 2-letter code: {self.state!r}")
        if not self.source:
            raise ValueError("empty energy-source code")
        if not self.quantity >= 0:
            raise ValueError(f"quantity must be nonnegative: {self.quantity}")
        if not self.avg_heat_content > 0:
            raise ValueError(f"heat content must be positive: {self.avg_heat_content}")

    @property
    def key(self) -> "PlantKey":
        return PlantKey(self.plant_id, self.state, self.source)


@dataclass(frozen=True, order=True)
class PlantKey:
    """Grouping key: one plant burning one energy source in one state."""

    plant_id: int
    state: str
    source: str

    def __str__(self) -> str:
        return f"{self.plant_id}/{self.state}/{self.source}"


@dataclass(frozen=True)
class InclusionPolicy:
    """Which plants survive filtering, expressed on pre-interpolation gaps."""

    max_total_missing: int = 2
    max_gap_run: int = 1

    def __post_init__(self) -> None:
        if self.max_total_missing < 0 or self.max_gap_run < 0:
            raise ValueError("policy thresholds must be nonnegative")


@dataclass(frozen=True)
class PlantDrop:
    key: PlantKey
    reason: str


def _reader(csv_text: str | Iterable[str]) -> csv.reader:
    if isinstance(csv_text, str):
        return csv.reader(io.StringIO(csv_text))
    return csv.reader(csv_text)


def _header_indices(row: list[str], required: tuple[str, ...]) -> dict[str, int]:
    names = [c.strip() for c in row]
    idx = {}
    for name in required:
        if name not in names:
            raise MissingColumn(name)
        idx[name] = names.index(name)
    return idx


def parse_records(csv_text: str | Iterable[str]) -> list[FuelRecord]:
    """Parse a plant-records CSV into FuelRecords, preserving row order."""
    rd = _reader(csv_text)
    try:
        header = next(rd)
    except StopIteration:
        raise MissingColumn(RECORD_COLUMNS[0])
    idx = _header_indices(header, RECORD_COLUMNS)
    out: list[FuelRecord] = []
    for row in rd:
        if not row:
            continue
        line = rd.line_num
        try:
            out.append(
                FuelRecord(
                    date=Month.parse(row[idx["Date"]]),
                    plant_id=int(row[idx["PlantID"]]),
                    state=row[idx["State"]].strip(),
                    source=row[idx["Source"]].strip(),
                    quantity=float(row[idx["Quantity"]]),
                    avg_heat_content=float(row[idx["AvgHeatContent"]]),
                    fuel_cost=float(row[idx["FuelCost"]]),
                )
            )
        except (ValueError, IndexError) as exc:
            raise MalformedRow(line, str(exc)) from exc
    return out


def aggregate_fuel_cost(records: list[FuelRecord]) -> dict[tuple[PlantKey, Month], float]:
    """Weighted monthly fuel cost per plant-source group.

    Every record contributes quantity * heat_content worth of MMBtu at its
    stated $/MMBtu; the group value is total dollars over total heat.
    Groups with zero total heat carry no information and are skipped.
    """
    cost: dict[tuple[PlantKey, Month], float] = {}
    heat: dict[tuple[PlantKey, Month], float] = {}
    for r in records:
        k = (r.key, r.date)
        w = r.quantity * r.avg_heat_content
        cost[k] = cost.get(k, 0.0) + w * r.fuel_cost
        heat[k] = heat.get(k, 0.0) + w
    out: dict[tuple[PlantKey, Month], float] = {}
    for k in cost:
        if heat[k] == 0.0:
            log.warning("skipping %s %s: zero total heat", k[0], k[1])
            continue
        out[k] = cost[k] / heat[k]
    return out


def build_plant_series(agg: dict[tuple[PlantKey, Month], float], key: PlantKey,
                       span: tuple[Month, Month]) -> MonthSeries:
    """Lay one plant's aggregates onto the span; absent months become gaps."""
    first, last = span
    if last < first:
        raise ValueError(f"backwards span {first}..{last}")
    vals = tuple(agg.get((key, first + i)) for i in range(last - first + 1))
    return MonthSeries(first, vals)


def interpolate_single_gaps(series: MonthSeries) -> MonthSeries:
    """Fill interior gaps of length exactly one with the neighbor midpoint.

    Longer runs and boundary gaps are left alone; the input is not
    mutated. Applying this twice changes nothing.
    """
    vals = list(series.values)
    n = len(vals)
    for i in range(1, n - 1):
        if vals[i] is None and series.values[i - 1] is not None and series.values[i + 1] is not None:
            vals[i] = (series.values[i - 1] + series.values[i + 1]) / 2.0
    return MonthSeries(series.start, tuple(vals))


def filter_plants(series_map: dict[PlantKey, MonthSeries], policy: InclusionPolicy,
                  ) -> tuple[dict[PlantKey, MonthSeries], list[PlantDrop]]:
    """Split plants into retained (interpolated, complete) and dropped.

    A plant is dropped when its raw series misses more than
    ``max_total_missing`` months in total, contains a gap run longer than
    ``max_gap_run``, or still has holes after single-gap interpolation
    (boundary gaps cannot be repaired). Every input key lands in exactly
    one of the two outputs.
    """
    retained: dict[PlantKey, MonthSeries] = {}
    drops: list[PlantDrop] = []
    for key in sorted(series_map):
        s = series_map[key]
        missing = sum(1 for v in s.values if v is None)
        runs = s.gap_runs()
        if missing > policy.max_total_missing:
            drops.append(PlantDrop(key, f"missing {missing} months (max {policy.max_total_missing})"))
            continue
        if runs and max(runs) > policy.max_gap_run:
            drops.append(PlantDrop(key, f"gap run of {max(runs)} months (max {policy.max_gap_run})"))
            continue
        repaired = interpolate_single_gaps(s)
        if not repaired.is_complete:
            drops.append(PlantDrop(key, "boundary gap cannot be interpolated"))
            continue
        retained[key] = repaired
    return retained, drops


def load_hub_prices(csv_text: str | Iterable[str], aggregate_daily: bool = False) -> MonthSeries:
    """Load the hub spot-price series; optionally average daily rows per month.

    The result must be complete over its own span: a month with no price
    anywhere between the first and last observed months is an error.
    """
    rd = _reader(csv_text)
    try:
        header = next(rd)
    except StopIteration:
        raise MissingColumn(HUB_COLUMNS[0])
    idx = _header_indices(header, HUB_COLUMNS)
    by_month: dict[Month, list[float]] = {}
    for row in rd:
        if not row:
            continue
        line = rd.line_num
        try:
            raw_date = row[idx["Date"]].strip()
            if len(raw_date) == 10 and raw_date[4] == "-" and raw_date[7] == "-":
                m = Month(int(raw_date[:4]), int(raw_date[5:7]))
                daily = True
            else:
                m = Month.parse(raw_date)
                daily = False
            price = float(row[idx["Price"]])
        except ValueError as exc:
            raise MalformedRow(line, str(exc)) from exc
        if not aggregate_daily:
            if daily:
                raise MalformedRow(line, f"daily date {raw_date!r}; pass aggregate_daily to average by month")
            if m in by_month:
                raise MalformedRow(line, f"duplicate month {m}; pass aggregate_daily to average by month")
        by_month.setdefault(m, []).append(price)
    if not by_month:
        raise MalformedRow(1, "hub file has no data rows")
    first, last = min(by_month), max(by_month)
    vals = []
    for i in range(last - first + 1):
        m = first + i
        if m not in by_month:
            raise IncompleteHub(m)
        prices = by_month[m]
        vals.append(sum(prices) / len(prices))
    return MonthSeries(first, tuple(vals))
