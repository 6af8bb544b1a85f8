"""Expanding-window backtest of the differential forecasting scheme.

For every evaluation month m the plant-side information horizon is
m - delay_months (the publication lag) while the hub price is visible
through m - 1. Each plant's differential series (plant cost minus hub
price) is log-transformed with a per-plant offset frozen on the initial
training window, forecast delay_months steps ahead, recombined with a
one-step hub forecast, and the cross-plant forecasts are fitted to a
normal distribution. The competing baseline simply reuses the actual
cross-plant values from month m - delay_months.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .arima import ArimaFit, ArimaSpec, AllFitsFailed, fit, forecast, forecast_variance, select_order
from .distfit import NormalDist, fit_normal, symmetric_kl
from .errors import DataError, FuelcastError, NumericalError
from .ingest import PlantKey
from .months import Month
from .series import MonthSeries, Transform, apply_transform, choose_offset, differential_series, reconstruct_forecast

log = logging.getLogger(__name__)

DEFAULT_PLANT_GRID = (ArimaSpec(2, 0, 1, True), ArimaSpec(2, 1, 1, True))
DEFAULT_HUB_SPEC = ArimaSpec(2, 1, 1, True)


class ConfigError(DataError):
    """The backtest configuration is inconsistent or infeasible."""


@dataclass(frozen=True)
class BacktestConfig:
    """Spans, model grid, and policy switches for one backtest run."""

    train_start: Month
    train_end: Month
    eval_start: Month
    eval_end: Month
    plant_spec_grid: tuple[ArimaSpec, ...] = DEFAULT_PLANT_GRID
    hub_spec: ArimaSpec = DEFAULT_HUB_SPEC
    offset_margin: float = 1.0
    refit_each_step: bool = True
    delay_months: int = 3
    lognormal_correction: bool = False
    oracle_injection: bool = False

    def __post_init__(self) -> None:
        if not self.train_start <= self.train_end:
            raise ConfigError(f"backwards training span {self.train_start}..{self.train_end}")
        if not self.eval_start <= self.eval_end:
            raise ConfigError(f"backwards evaluation span {self.eval_start}..{self.eval_end}")
        if self.eval_start - self.train_end != 1:
            raise ConfigError(
                f"spans must be contiguous: training ends {self.train_end}, "
                f"evaluation starts {self.eval_start}"
            )
        if self.delay_months < 1:
            raise ConfigError(f"delay_months must be >= 1, got {self.delay_months}")
        if not self.offset_margin > 0:
            raise ConfigError(f"offset_margin must be positive, got {self.offset_margin}")
        if not self.plant_spec_grid:
            raise ConfigError("plant_spec_grid must not be empty")

    @property
    def initial_plant_horizon(self) -> Month:
        """Last plant month visible when forecasting the first eval month."""
        return self.eval_start - self.delay_months

    def eval_months(self) -> list[Month]:
        return [self.eval_start + i for i in range(self.eval_end - self.eval_start + 1)]


@dataclass(frozen=True)
class MonthResult:
    """One evaluation month: the three distributions and their scores."""

    month: Month
    real_dist: NormalDist
    delayed_dist: NormalDist
    forecast_dist: NormalDist
    mean_error_delay: float
    mean_error_forecast: float
    d_real_delay: float
    d_real_forecast: float
    improvement_abs: float
    improvement_pct: float | None
    real_values: tuple[float, ...]
    delayed_values: tuple[float, ...]
    forecast_values: tuple[float, ...]


@dataclass(frozen=True)
class ForecastRecord:
    month: Month
    plant: PlantKey
    delta_forecast: float
    hub_forecast: float
    fc_forecast: float
    actual: float


@dataclass(frozen=True)
class DropRecord:
    month: Month
    plant: PlantKey
    reason: str


@dataclass(frozen=True)
class BacktestReport:
    config: BacktestConfig
    months: tuple[MonthResult, ...]
    forecasts: tuple[ForecastRecord, ...]
    drops: tuple[DropRecord, ...]
    plant_count: int
    orders: dict[PlantKey, ArimaSpec | None] = field(default_factory=dict)


def _require_complete(s: MonthSeries, first: Month, last: Month, what: str) -> None:
    if not s.covers(first, last):
        raise ConfigError(f"{what} covers {s.start}..{s.end}, need {first}..{last}")
    if not s.window(first, last).is_complete:
        raise ConfigError(f"{what} has gaps inside {first}..{last}")


def _is_constant(values: list[float]) -> bool:
    return max(values) == min(values)


class _PlantModel:
    """Per-plant frozen choices plus whatever cached fit is in force."""

    def __init__(self, key: PlantKey, diff: MonthSeries, transform: Transform):
        self.key = key
        self.diff = diff
        self.transform = transform
        self.spec: ArimaSpec | None = None
        self.spec_failure: str | None = None
        self.frozen_fit: ArimaFit | None = None


def run_backtest(plants: dict[PlantKey, MonthSeries], hub: MonthSeries,
                 cfg: BacktestConfig) -> BacktestReport:
    """Run the full rolling evaluation and assemble the report.

    A single plant's fit failure in one month drops that plant from that
    month's forecast distribution (with a drop record) instead of
    aborting; a month with no surviving forecasts at all is fatal.
    """
    keys = sorted(plants)
    if not keys:
        raise ConfigError("no plant series supplied")
    for k in keys:
        _require_complete(plants[k], cfg.train_start, cfg.eval_end, f"plant {k}")
    _require_complete(hub, cfg.train_start, cfg.eval_end, "hub series")
    if any(v is not None and v <= 0 for v in hub.values):
        raise ConfigError("hub prices must be strictly positive for the log transform")

    init_horizon = cfg.initial_plant_horizon
    if init_horizon < cfg.train_start:
        raise ConfigError(
            f"delay {cfg.delay_months} leaves no visible plant data before {cfg.eval_start}"
        )
    hub_transform = Transform("log_with_offset", 0.0)

    # full differential once; monthly loops slice it (value at t depends
    # only on month t, so slicing after construction is hygiene-safe)
    models: dict[PlantKey, _PlantModel] = {}
    for k in keys:
        diff = differential_series(
            plants[k].window(cfg.train_start, cfg.eval_end),
            hub.window(cfg.train_start, cfg.eval_end),
        )
        init_window = diff.window(cfg.train_start, init_horizon)
        transform = choose_offset(init_window, cfg.offset_margin)
        models[k] = _PlantModel(k, diff, transform)

    if not cfg.oracle_injection:
        for k in keys:
            mdl = models[k]
            init_vals = apply_transform(
                mdl.transform, mdl.diff.window(cfg.train_start, init_horizon)
            ).complete_values()
            if _is_constant(init_vals):
                continue  # constant mode; order chosen lazily if that changes
            try:
                mdl.spec = select_order(init_vals, cfg.plant_spec_grid)
            except (DataError, NumericalError) as exc:
                mdl.spec_failure = f"order selection failed: {exc}"
                log.warning("plant %s: %s", k, mdl.spec_failure)
                continue
            if not cfg.refit_each_step:
                mdl.frozen_fit = fit(init_vals, mdl.spec)

    hub_frozen_fit: ArimaFit | None = None
    if not cfg.oracle_injection and not cfg.refit_each_step:
        init_hub_vals = apply_transform(
            hub_transform, hub.window(cfg.train_start, cfg.eval_start - 1)
        ).complete_values()
        if not _is_constant(init_hub_vals):
            hub_frozen_fit = fit(init_hub_vals, cfg.hub_spec)

    month_results: list[MonthResult] = []
    forecast_log: list[ForecastRecord] = []
    drops: list[DropRecord] = []

    for m in cfg.eval_months():
        hub_fc = _hub_forecast(hub, hub_transform, hub_frozen_fit, cfg, m)
        samples: list[float] = []
        for k in keys:
            mdl = models[k]
            try:
                delta_fc = _plant_delta_forecast(mdl, cfg, m)
            except FuelcastError as exc:
                reason = f"{type(exc).__name__}: {exc}"
                drops.append(DropRecord(m, k, reason))
                log.warning("plant %s dropped for %s (%s)", k, m, reason)
                continue
            fc = reconstruct_forecast(delta_fc, hub.get(m) if cfg.oracle_injection else hub_fc)
            samples.append(fc)
            forecast_log.append(
                ForecastRecord(
                    month=m,
                    plant=k,
                    delta_forecast=delta_fc,
                    hub_forecast=hub.get(m) if cfg.oracle_injection else hub_fc,
                    fc_forecast=fc,
                    actual=plants[k].get(m),
                )
            )
        if not samples:
            raise AllFitsFailed(f"no plant forecast survived for {m}")
        real_vals = [plants[k].get(m) for k in keys]
        delayed_vals = [plants[k].get(m - cfg.delay_months) for k in keys]
        try:
            real_dist = fit_normal(real_vals)
            delayed_dist = fit_normal(delayed_vals)
            forecast_dist = fit_normal(samples)
        except DataError as exc:
            raise type(exc)(f"month {m}: {exc}") from exc
        month_results.append(
            _score_month(m, real_dist, delayed_dist, forecast_dist,
                         real_vals, delayed_vals, samples)
        )

    return BacktestReport(
        config=cfg,
        months=tuple(month_results),
        forecasts=tuple(forecast_log),
        drops=tuple(drops),
        plant_count=len(keys),
        orders={k: models[k].spec for k in keys},
    )


def _hub_forecast(hub: MonthSeries, transform: Transform, frozen: ArimaFit | None,
                  cfg: BacktestConfig, m: Month) -> float:
    """One-step hub forecast for month m from data through m - 1."""
    if cfg.oracle_injection:
        return float(hub.get(m))
    vis = apply_transform(transform, hub.window(cfg.train_start, m - 1)).complete_values()
    if _is_constant(vis):
        log_fc, var = vis[-1], 0.0
    else:
        hub_fit = frozen if frozen is not None else fit(vis, cfg.hub_spec)
        log_fc = float(forecast(hub_fit, vis, 1)[-1])
        var = float(forecast_variance(hub_fit, 1)[-1]) if cfg.lognormal_correction else 0.0
    return math.exp(log_fc + 0.5 * var) - transform.offset_c


def _plant_delta_forecast(mdl: _PlantModel, cfg: BacktestConfig, m: Month) -> float:
    """delay_months-step differential forecast for month m, in price space."""
    if cfg.oracle_injection:
        return float(mdl.diff.get(m))
    if mdl.spec_failure is not None:
        raise AllFitsFailed(mdl.spec_failure)
    horizon = m - cfg.delay_months
    vis = apply_transform(
        mdl.transform, mdl.diff.window(cfg.train_start, horizon)
    ).complete_values()
    if _is_constant(vis):
        # a constant differential forecasts itself; the MLE machinery
        # would reject the zero-variance series outright
        log_fc, var = vis[-1], 0.0
    else:
        if mdl.spec is None:
            mdl.spec = select_order(vis, cfg.plant_spec_grid)
        if cfg.refit_each_step or mdl.frozen_fit is None:
            plant_fit = fit(vis, mdl.spec)
            if not cfg.refit_each_step:
                mdl.frozen_fit = plant_fit
        else:
            plant_fit = mdl.frozen_fit
        log_fc = float(forecast(plant_fit, vis, cfg.delay_months)[-1])
        var = (
            float(forecast_variance(plant_fit, cfg.delay_months)[-1])
            if cfg.lognormal_correction
            else 0.0
        )
    return math.exp(log_fc + 0.5 * var) - mdl.transform.offset_c


def _score_month(m: Month, real: NormalDist, delayed: NormalDist, fc: NormalDist,
                 real_vals: list[float], delayed_vals: list[float],
                 samples: list[float]) -> MonthResult:
    d_rd = symmetric_kl(real, delayed)
    d_rf = symmetric_kl(real, fc)
    improvement = d_rd - d_rf
    return MonthResult(
        month=m,
        real_dist=real,
        delayed_dist=delayed,
        forecast_dist=fc,
        mean_error_delay=abs(delayed.mu - real.mu) / real.mu,
        mean_error_forecast=abs(fc.mu - real.mu) / real.mu,
        d_real_delay=d_rd,
        d_real_forecast=d_rf,
        improvement_abs=improvement,
        improvement_pct=(improvement / d_rd) if d_rd > 0 else None,
        real_values=tuple(real_vals),
        delayed_values=tuple(delayed_vals),
        forecast_values=tuple(samples),
    )


# ---------------------------------------------------------------------------
# report rendering


def _five_number(values: tuple[float, ...]) -> tuple[float, float, float, float, float]:
    arr = np.asarray(values)
    q1, med, q3 = (float(np.percentile(arr, p)) for p in (25, 50, 75))
    return float(arr.min()), q1, med, q3, float(arr.max())


def emit_tables(report: BacktestReport) -> dict[str, str]:
    """Render the report as CSV documents keyed by file name.

    All numeric cells carry full double precision; display rounding is
    applied only by render_display_tables so it never contaminates
    downstream computation.
    """
    if not report.months:
        raise ValueError("cannot emit tables from an empty report")
    t3 = ["Month,Mean_real,Mean_delay,Error_delay,Mean_forecast,Error_forecast"]
    t4 = ["Month,D_real_delay,D_real_forecast,Improve_abs,Improve_pct"]
    dist = ["Month,Which,Mu,Sigma"]
    box = ["Month,Which,Min,Q1,Median,Q3,Max"]
    for r in report.months:
        t3.append(
            f"{r.month},{r.real_dist.mu!r},{r.delayed_dist.mu!r},{r.mean_error_delay!r},"
            f"{r.forecast_dist.mu!r},{r.mean_error_forecast!r}"
        )
        pct = "" if r.improvement_pct is None else repr(r.improvement_pct)
        t4.append(f"{r.month},{r.d_real_delay!r},{r.d_real_forecast!r},{r.improvement_abs!r},{pct}")
        for which, d in (("real", r.real_dist), ("delay", r.delayed_dist), ("forecast", r.forecast_dist)):
            dist.append(f"{r.month},{which},{d.mu!r},{d.sigma!r}")
        for which, vals in (("real", r.real_values), ("delay", r.delayed_values), ("forecast", r.forecast_values)):
            stats = _five_number(vals)
            box.append(f"{r.month},{which}," + ",".join(repr(v) for v in stats))
    flog = ["Month,PlantID,DeltaForecast,HubForecast,FCForecast,Actual"]
    for f in report.forecasts:
        flog.append(
            f"{f.month},{f.plant.plant_id},{f.delta_forecast!r},{f.hub_forecast!r},"
            f"{f.fc_forecast!r},{f.actual!r}"
        )
    dlog = ["Month,PlantID,State,Source,Reason"]
    for drop in report.drops:
        reason = drop.reason.replace('"', "'")
        dlog.append(f'{drop.month},{drop.plant.plant_id},{drop.plant.state},{drop.plant.source},"{reason}"')
    return {
        "table3.csv": "\n".join(t3) + "\n",
        "table4.csv": "\n".join(t4) + "\n",
        "distributions.csv": "\n".join(dist) + "\n",
        "boxstats.csv": "\n".join(box) + "\n",
        "forecast_log.csv": "\n".join(flog) + "\n",
        "drops.csv": "\n".join(dlog) + "\n",
    }


def format_mean(value: float) -> str:
    return f"${value:.2f}"


def format_pct(fraction: float) -> str:
    return f"{100.0 * fraction:.1f}%"


def format_improvement(abs_value: float, pct: float | None) -> str:
    if pct is None:
        return f"{abs_value:.2f}"
    return f"{abs_value:.2f} ({format_pct(pct)})"


def render_display_tables(report: BacktestReport) -> str:
    """Paper-style rounded tables: cents for means, one decimal for percents."""
    lines = ["Mean and corresponding error of fitted distributions", ""]
    header = f"{'Month':<8}{'Mean_real':>12}{'Mean_delay':>12}{'Error':>9}{'Mean_fcst':>12}{'Error':>9}"
    lines.append(header)
    for r in report.months:
        lines.append(
            f"{str(r.month):<8}{format_mean(r.real_dist.mu):>12}"
            f"{format_mean(r.delayed_dist.mu):>12}{format_pct(r.mean_error_delay):>9}"
            f"{format_mean(r.forecast_dist.mu):>12}{format_pct(r.mean_error_forecast):>9}"
        )
    lines += ["", "Symmetric KL divergence of estimated distributions", ""]
    lines.append(f"{'Month':<8}{'D_real_delay':>14}{'D_real_fcst':>14}  Improve")
    for r in report.months:
        lines.append(
            f"{str(r.month):<8}{r.d_real_delay:>14.2f}{r.d_real_forecast:>14.2f}"
            f"  {format_improvement(r.improvement_abs, r.improvement_pct)}"
        )
    return "\n".join(lines) + "\n"
