"""Synthetic data generators for tests, demos, and calibration studies.

Everything here is seeded and deterministic. The forecasting pipeline
itself never draws random numbers; these generators are the only
consumers of a seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ingest import PlantKey
from .months import Month
from .series import MonthSeries


def simulate_arma(n: int, phi: tuple[float, ...] = (), theta: tuple[float, ...] = (),
                  mean: float = 0.0, sigma: float = 1.0, seed: int = 0,
                  burn: int = 200) -> np.ndarray:
    """Simulate an ARMA path under the package's minus-sign MA convention:

    y_t = mean + sum phi_i (y_{t-i} - mean) + eps_t - sum theta_j eps_{t-j}
    """
    p, q = len(phi), len(theta)
    rng = np.random.default_rng(seed)
    total = n + burn
    eps = rng.normal(0.0, sigma, total + q)
    x = np.zeros(total + p)
    for t in range(total):
        i = t + p
        val = eps[t + q]
        for j in range(p):
            val += phi[j] * x[i - 1 - j]
        for j in range(q):
            val -= theta[j] * eps[t + q - 1 - j]
        x[i] = val
    return mean + x[p + burn :]


@dataclass(frozen=True)
class SyntheticWorld:
    """A self-consistent plant/hub dataset with known ground truth."""

    plants: dict[PlantKey, MonthSeries]
    hub: MonthSeries


def ramp_world(n_plants: int = 29, n_months: int = 48, start: Month = Month(2013, 1),
               hub_base: float = 2.5, hub_step: float = 1.0 / 64.0,
               offset_step: float = 1.0 / 16.0, state: str = "TX",
               source: str = "NG") -> SyntheticWorld:
    """Plants = hub + plant-specific constant; hub is a deterministic ramp.

    All values are dyadic rationals so float arithmetic on them is exact:
    the plant-minus-hub differential is bit-for-bit constant in time and
    the hub/differential recombination reproduces plant values exactly.
    """
    months = [start + i for i in range(n_months)]
    hub_vals = tuple(hub_base + hub_step * i for i in range(n_months))
    hub = MonthSeries(start, hub_vals)
    plants: dict[PlantKey, MonthSeries] = {}
    mid = (n_plants - 1) / 2.0
    for i in range(n_plants):
        k = offset_step * (i - mid)
        key = PlantKey(100 + i, state, source)
        plants[key] = MonthSeries(start, tuple(hub_vals[t] + k for t in range(len(months))))
    return SyntheticWorld(plants, hub)


def noisy_world(n_plants: int = 6, n_months: int = 24, start: Month = Month(2013, 1),
                hub_base: float = 2.5, hub_step: float = 1.0 / 64.0,
                offset_step: float = 1.0 / 8.0, noise_scale: float = 1.0 / 32.0,
                seed: int = 0, state: str = "TX", source: str = "NG") -> SyntheticWorld:
    """Ramp world plus seeded dyadic noise on every plant and the hub.

    Noise values are integer multiples of 2^-10, so sums and differences
    stay exact in binary floating point (useful for bit-identity tests).
    """
    rng = np.random.default_rng(seed)
    quantum = 2.0**-10
    levels = max(1, round(noise_scale / quantum))

    def dyadic_noise(n: int) -> np.ndarray:
        return rng.integers(-levels, levels + 1, size=n) * quantum

    hub_vals = hub_base + hub_step * np.arange(n_months) + dyadic_noise(n_months)
    hub = MonthSeries(start, tuple(float(v) for v in hub_vals))
    plants: dict[PlantKey, MonthSeries] = {}
    mid = (n_plants - 1) / 2.0
    for i in range(n_plants):
        k = offset_step * (i - mid)
        vals = hub_vals + k + dyadic_noise(n_months)
        plants[PlantKey(100 + i, state, source)] = MonthSeries(start, tuple(float(v) for v in vals))
    return SyntheticWorld(plants, hub)


def world_records_csv(world: SyntheticWorld) -> str:
    """Render a world as a plant-records CSV (one receipt per plant-month).

    Quantity and heat content are 1, so the aggregated $/MMBtu equals the
    written fuel cost exactly.
    """
    lines = ["Date,PlantID,State,Source,Quantity,AvgHeatContent,FuelCost"]
    for key in sorted(world.plants):
        s = world.plants[key]
        for m, v in zip(s.months(), s.values):
            lines.append(f"{m},{key.plant_id},{key.state},{key.source},1,1.0,{v!r}")
    return "\n".join(lines) + "\n"


def world_hub_csv(world: SyntheticWorld) -> str:
    """Render a world's hub series as a monthly Date,Price CSV."""
    lines = ["Date,Price"]
    for m, v in zip(world.hub.months(), world.hub.values):
        lines.append(f"{m},{v!r}")
    return "\n".join(lines) + "\n"
