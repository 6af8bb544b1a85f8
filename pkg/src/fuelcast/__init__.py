"""Fuel-cost distribution forecasting toolkit.

Aggregates plant-level fuel receipts into monthly $/MMBtu series,
forecasts next-month costs with a hub-anchored differential ARIMA
scheme, fits cross-plant forecasts to a normal distribution, and scores
the result against a delayed baseline with symmetric Gaussian KL
divergence.
"""

from .arima import ArimaFit, ArimaSpec
from .backtest import BacktestConfig, BacktestReport, MonthResult, run_backtest
from .distfit import NormalDist, fit_normal, kl_gaussian, symmetric_kl
from .ingest import FuelRecord, InclusionPolicy, PlantKey
from .months import Month
from .series import MonthSeries, Transform

__version__ = "0.1.0"

__all__ = [
    "ArimaFit",
    "ArimaSpec",
    "BacktestConfig",
    "BacktestReport",
    "FuelRecord",
    "InclusionPolicy",
    "Month",
    "MonthResult",
    "MonthSeries",
    "NormalDist",
    "PlantKey",
    "Transform",
    "fit_normal",
    "kl_gaussian",
    "run_backtest",
    "symmetric_kl",
    "__version__",
]
