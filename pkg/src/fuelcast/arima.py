"""ARIMA(p,d,q) estimation and forecasting on the exact Gaussian likelihood.

Sign conventions follow the Box-Jenkins regression form

    phi(B) (1-B)^d y_t = mu + theta(B) eps_t
    phi(B)   = 1 - phi_1 B - ... - phi_p B^p
    theta(B) = 1 - theta_1 B - ... - theta_q B^q

The moving-average polynomial carries MINUS signs, so an MA(1) with
theta_1 = 0.5 has lag-1 autocorrelation -0.5/(1+0.25) = -0.4. Both
polynomials must keep their roots strictly outside the unit circle
(stationarity for phi, invertibility for theta).

Estimation maximizes the exact likelihood computed by the innovations
(Kalman) recursion on the ARMA state-space form, with the innovation
variance concentrated out analytically. The optimizer is an
unconstrained Nelder-Mead simplex over partial autocorrelations mapped
through tanh (a bijection onto the stationary/invertible region),
started from conditional-sum-of-squares estimates which are in turn
started from Yule-Walker for the AR part and zeros for the MA part.

For the constant: with d = 0 the model is fit in deviation-from-mean
form and mu is reported as the regression intercept mean * (1 - sum
phi); with d >= 1 the constant is a drift on the differenced series.
"""

from __future__ import annotations

import json
import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from scipy import optimize, signal
from scipy.linalg import solve_discrete_lyapunov

from .errors import DataError, NumericalError
from .series import difference

log = logging.getLogger(__name__)

MAX_ORDER = 5
# optimizer budget per the artifact contract: 200 evaluations per free
# parameter (phi, theta, constant, innovation variance)
EVALS_PER_PARAM = 200
LIKELIHOOD_SPREAD_TOL = 1e-8
# partial autocorrelations are clamped this far inside (-1, 1) so that
# polynomial root checks on returned fits never sit on the boundary
PACF_CLAMP = 0.9999


class ZeroVariance(NumericalError):
    """The series is constant; correlation diagnostics are undefined."""


class NonStationaryParams(NumericalError):
    """AR or MA polynomial has a root on or inside the unit circle."""


class SeriesTooShort(DataError):
    """Not enough observations for the requested model."""


class OptimizerFailed(NumericalError):
    """The simplex search did not converge within its evaluation budget."""

    def __init__(self, diagnostic: str):
        self.diagnostic = diagnostic
        super().__init__(diagnostic)


class AllFitsFailed(NumericalError):
    """Every candidate specification in an order-selection grid failed."""


@dataclass(frozen=True, order=True)
class ArimaSpec:
    """Model orders: p AR lags, d differencing passes, q MA lags."""

    p: int
    d: int
    q: int
    with_constant: bool = True

    def __post_init__(self) -> None:
        for name, v in (("p", self.p), ("d", self.d), ("q", self.q)):
            if not 0 <= v <= MAX_ORDER:
                raise ValueError(f"{name} must be in 0..{MAX_ORDER}, got {v}")
        if self.p + self.q == 0 and not self.with_constant:
            raise ValueError("no fittable parameters: need p + q >= 1 or a constant")

    @property
    def n_params(self) -> int:
        """Free parameters counted for BIC and optimizer budgets."""
        return self.p + self.q + (1 if self.with_constant else 0) + 1

    def label(self) -> str:
        suffix = "+c" if self.with_constant else ""
        return f"ARIMA({self.p},{self.d},{self.q}){suffix}"

    @classmethod
    def parse(cls, text: str) -> "ArimaSpec":
        """Parse 'p,d,q' or 'p,d,q,c' / 'p,d,q,nc' (constant on by default)."""
        parts = [t.strip() for t in text.split(",")]
        if len(parts) not in (3, 4):
            raise ValueError(f"expected 'p,d,q[,c|nc]', got {text!r}")
        with_constant = True
        if len(parts) == 4:
            if parts[3] not in ("c", "nc"):
                raise ValueError(f"constant flag must be 'c' or 'nc', got {parts[3]!r}")
            with_constant = parts[3] == "c"
        return cls(int(parts[0]), int(parts[1]), int(parts[2]), with_constant)


@dataclass(frozen=True)
class ArimaFit:
    """Fitted coefficients plus the likelihood bookkeeping.

    mu is the regression-form intercept of the constant term; the implied
    process mean of the differenced series is mu / (1 - sum(phi)).
    """

    spec: ArimaSpec
    phi: tuple[float, ...]
    theta: tuple[float, ...]
    mu: float
    sigma2: float
    loglik: float
    n_eff: int
    bic: float

    def __post_init__(self) -> None:
        if len(self.phi) != self.spec.p or len(self.theta) != self.spec.q:
            raise ValueError("coefficient lengths do not match the spec orders")
        if not self.sigma2 > 0:
            raise ValueError(f"innovation variance must be positive: {self.sigma2}")
        if not _roots_outside_unit_circle(self.phi):
            raise NonStationaryParams(f"AR roots inside unit circle: phi={self.phi}")
        if not _roots_outside_unit_circle(self.theta):
            raise NonStationaryParams(f"MA roots inside unit circle: theta={self.theta}")

    @property
    def implied_mean(self) -> float:
        """Mean of the differenced process; mu rescaled by phi(1)."""
        return self.mu / (1.0 - sum(self.phi))

    def as_dict(self) -> dict:
        return {
            "spec": {"p": self.spec.p, "d": self.spec.d, "q": self.spec.q,
                     "with_constant": self.spec.with_constant},
            "phi": list(self.phi),
            "theta": list(self.theta),
            "mu": self.mu,
            "sigma2": self.sigma2,
            "loglik": self.loglik,
            "n_eff": self.n_eff,
            "bic": self.bic,
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "ArimaFit":
        s = d["spec"]
        return cls(
            spec=ArimaSpec(int(s["p"]), int(s["d"]), int(s["q"]), bool(s["with_constant"])),
            phi=tuple(float(v) for v in d["phi"]),
            theta=tuple(float(v) for v in d["theta"]),
            mu=float(d["mu"]),
            sigma2=float(d["sigma2"]),
            loglik=float(d["loglik"]),
            n_eff=int(d["n_eff"]),
            bic=float(d["bic"]),
        )

    @classmethod
    def from_json(cls, text: str) -> "ArimaFit":
        return cls.from_dict(json.loads(text))


# ---------------------------------------------------------------------------
# diagnostics


def acf(s: Sequence[float] | np.ndarray, max_lag: int) -> np.ndarray:
    """Sample autocorrelations for lags 0..max_lag (1/n normalization)."""
    x = np.asarray(s, dtype=float)
    if max_lag < 1:
        raise ValueError("max_lag must be >= 1")
    n = x.size
    if n <= max_lag:
        raise SeriesTooShort(f"need more than {max_lag} points, got {n}")
    xc = x - x.mean()
    c0 = float(xc @ xc) / n
    if c0 <= 0.0:
        raise ZeroVariance("constant series has no autocorrelation structure")
    out = np.empty(max_lag + 1)
    out[0] = 1.0
    for k in range(1, max_lag + 1):
        out[k] = float(xc[:-k] @ xc[k:]) / n / c0
    return out


def pacf(s: Sequence[float] | np.ndarray, max_lag: int) -> np.ndarray:
    """Partial autocorrelations for lags 1..max_lag via Durbin-Levinson."""
    rho = acf(s, max_lag)
    _, partials = _durbin_levinson(rho[1:])
    return partials


def _durbin_levinson(rho: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Run Durbin-Levinson on autocorrelations rho[0]=lag1, rho[1]=lag2, ...

    Returns (AR coefficients at the final order, partials at every order).
    """
    m = rho.size
    a = np.empty(0)
    partials = np.empty(m)
    for k in range(1, m + 1):
        if k == 1:
            rk = rho[0]
        else:
            denom = 1.0 - float(a @ rho[:k - 1])
            if denom <= 1e-12:
                raise ZeroVariance("degenerate autocorrelation sequence")
            rk = (rho[k - 1] - float(a @ rho[k - 2::-1])) / denom
        partials[k - 1] = rk
        nxt = np.empty(k)
        nxt[k - 1] = rk
        if k > 1:
            nxt[:k - 1] = a - rk * a[::-1]
        a = nxt
    return a, partials


# ---------------------------------------------------------------------------
# stationarity bijection


def _pacf_to_coeffs(r: np.ndarray) -> np.ndarray:
    """Map partials in (-1,1) to minus-convention lag coefficients.

    The resulting polynomial 1 - sum(c_i B^i) has all roots strictly
    outside the unit circle whenever every |r_k| < 1.
    """
    a = np.empty(0)
    for k in range(1, r.size + 1):
        nxt = np.empty(k)
        nxt[k - 1] = r[k - 1]
        if k > 1:
            nxt[:k - 1] = a - r[k - 1] * a[::-1]
        a = nxt
    return a


def _coeffs_to_pacf(a: np.ndarray) -> np.ndarray:
    """Inverse of _pacf_to_coeffs; inputs should be stationary-side."""
    a = np.array(a, dtype=float)
    out = np.empty(a.size)
    for k in range(a.size, 0, -1):
        rk = a[k - 1]
        out[k - 1] = rk
        if k > 1:
            denom = 1.0 - rk * rk
            if denom <= 1e-12:
                denom = 1e-12
            a = (a[:k - 1] + rk * a[k - 2::-1]) / denom
    return out


def _roots_outside_unit_circle(coeffs: Sequence[float]) -> bool:
    c = np.asarray(coeffs, dtype=float)
    c = np.trim_zeros(c, "b")
    if c.size == 0:
        return True
    poly = np.concatenate([[1.0], -c])
    roots = np.polynomial.polynomial.polyroots(poly)
    return bool(np.all(np.abs(roots) > 1.0))


# ---------------------------------------------------------------------------
# exact likelihood


def _state_space(phi: np.ndarray, theta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Transition matrix and innovation loading of the ARMA state form.

    State dimension r = max(p, q+1); the observation is the first state
    component. theta is minus-convention, so the loading uses -theta.
    """
    p, q = phi.size, theta.size
    r = max(p, q + 1)
    T = np.zeros((r, r))
    T[:p, 0] = phi
    for i in range(r - 1):
        T[i, i + 1] = 1.0
    R = np.zeros(r)
    R[0] = 1.0
    R[1 : q + 1] = -theta
    return T, R


def _stationary_cov(T: np.ndarray, R: np.ndarray) -> np.ndarray:
    Q = np.outer(R, R)
    try:
        P = solve_discrete_lyapunov(T, Q)
    except Exception as exc:  # singular for parameters on the boundary
        raise NonStationaryParams(f"stationary covariance solve failed: {exc}") from exc
    if not np.all(np.isfinite(P)):
        raise NonStationaryParams("stationary covariance is not finite")
    return P


def _innovation_terms(z: np.ndarray, phi: np.ndarray, theta: np.ndarray,
                      ) -> tuple[float, float]:
    """Sum of log prediction variances and of squared scaled innovations.

    Runs the exact covariance filter until the prediction covariance
    stops changing (< 1e-13), then switches to the steady-state
    innovation recursion, which is the filter's limit and is evaluated
    at C speed. The switch changes the result only below 1e-12.
    """
    T, R = _state_space(phi, theta)
    Q = np.outer(R, R)
    P = _stationary_cov(T, R)
    r = T.shape[0]
    n = z.size
    a = np.zeros(r)
    p_, q_ = phi.size, theta.size
    min_history = max(p_, q_)

    sum_log_f = 0.0
    sum_v2f = 0.0
    vs = np.empty(n)
    t = 0
    while t < n:
        f = P[0, 0]
        if not f > 1e-300 or not np.isfinite(f):
            raise NonStationaryParams("non-positive prediction variance")
        v = z[t] - a[0]
        vs[t] = v
        sum_log_f += math.log(f)
        sum_v2f += v * v / f
        Pz = P[:, 0]
        a_upd = a + Pz * (v / f)
        P_upd = P - np.outer(Pz, Pz) / f
        a = T @ a_upd
        P_new = T @ P_upd @ T.T + Q
        t += 1
        converged = t >= min_history and np.max(np.abs(P_new - P)) < 1e-13
        P = P_new
        if converged:
            break
    if t < n:
        # steady state: innovations follow the ARMA one-step recursion
        f_ss = P[0, 0]
        b = np.concatenate([[1.0], -phi])
        a_poly = np.concatenate([[1.0], -theta])
        zi = signal.lfiltic(b, a_poly, y=vs[t - 1 :: -1], x=z[t - 1 :: -1])
        rest, _ = signal.lfilter(b, a_poly, z[t:], zi=zi)
        sum_log_f += (n - t) * math.log(f_ss)
        sum_v2f += float(rest @ rest) / f_ss
    return sum_log_f, sum_v2f


def log_likelihood(s: Sequence[float] | np.ndarray, phi: Sequence[float] = (),
                   theta: Sequence[float] = (), mu: float = 0.0,
                   sigma2: float = 1.0) -> float:
    """Exact Gaussian log-likelihood of an ARMA(p,q)-plus-constant model.

    ``s`` must already be differenced d times. mu is the regression-form
    intercept; the process mean subtracted from s is mu / (1 - sum(phi)).
    """
    phi = np.asarray(phi, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if not sigma2 > 0:
        raise ValueError(f"sigma2 must be positive, got {sigma2}")
    if not _roots_outside_unit_circle(phi):
        raise NonStationaryParams(f"AR roots inside unit circle: {phi.tolist()}")
    if not _roots_outside_unit_circle(theta):
        raise NonStationaryParams(f"MA roots inside unit circle: {theta.tolist()}")
    x = np.asarray(s, dtype=float)
    if x.size < phi.size + theta.size + 1:
        raise SeriesTooShort(
            f"need at least p+q+1 = {phi.size + theta.size + 1} points, got {x.size}"
        )
    mean = mu / (1.0 - float(phi.sum()))
    z = x - mean
    sum_log_f, sum_v2f = _innovation_terms(z, phi, theta)
    n = x.size
    return -0.5 * n * math.log(2.0 * math.pi * sigma2) - 0.5 * sum_log_f - sum_v2f / (2.0 * sigma2)


# ---------------------------------------------------------------------------
# estimation


def _css_residuals(z: np.ndarray, phi: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Conditional residuals: condition on the first p values, zero pre-sample errors."""
    p, q = phi.size, theta.size
    b = np.concatenate([[1.0], -phi])
    a_poly = np.concatenate([[1.0], -theta])
    if p == 0:
        res, _ = signal.lfilter(b, a_poly, z, zi=np.zeros(max(p, q)))
        return res
    zi = signal.lfiltic(b, a_poly, y=np.zeros(q), x=z[p - 1 :: -1])
    res, _ = signal.lfilter(b, a_poly, z[p:], zi=zi)
    return res


def _yule_walker_partials(z: np.ndarray, p: int) -> np.ndarray:
    try:
        rho = acf(z, p)
        _, partials = _durbin_levinson(rho[1:])
    except (ZeroVariance, SeriesTooShort):
        return np.zeros(p)
    return np.clip(partials, -PACF_CLAMP, PACF_CLAMP)


def _decode(x: np.ndarray, spec: ArimaSpec) -> tuple[np.ndarray, np.ndarray, float]:
    p, q = spec.p, spec.q
    r_ar = np.clip(np.tanh(x[:p]), -PACF_CLAMP, PACF_CLAMP)
    r_ma = np.clip(np.tanh(x[p : p + q]), -PACF_CLAMP, PACF_CLAMP)
    phi = _pacf_to_coeffs(r_ar)
    theta = _pacf_to_coeffs(r_ma)
    delta = float(x[p + q]) if spec.with_constant else 0.0
    return phi, theta, delta


def _nelder_mead(objective, x0: np.ndarray, maxfev: int, simplex_scale: float | None = None):
    options = {"maxfev": maxfev, "fatol": LIKELIHOOD_SPREAD_TOL, "xatol": 1e-6}
    if simplex_scale is not None:
        n = x0.size
        simplex = np.tile(x0, (n + 1, 1))
        for i in range(n):
            simplex[i + 1, i] += simplex_scale
        options["initial_simplex"] = simplex
    return optimize.minimize(objective, x0, method="Nelder-Mead", options=options)


def fit(s: Sequence[float] | np.ndarray, spec: ArimaSpec) -> ArimaFit:
    """Exact maximum-likelihood fit of the given specification.

    Differences the series d times, then maximizes the concentrated
    exact likelihood over (phi, theta, constant) with the innovation
    variance profiled out. Raises OptimizerFailed when the simplex does
    not converge within 200 evaluations per parameter, after one restart
    from the best point found.
    """
    x = np.asarray(s, dtype=float)
    min_len = spec.d + spec.p + spec.q + 10
    if x.size < min_len:
        raise SeriesTooShort(f"{spec.label()} needs at least {min_len} points, got {x.size}")
    w = difference(x, spec.d)
    if np.ptp(w) == 0.0:
        raise OptimizerFailed("constant series after differencing; variance is zero")
    n_eff = int(w.size)
    wbar = float(w.mean()) if spec.with_constant else 0.0
    z0 = w - wbar

    p, q = spec.p, spec.q
    n_free = p + q + (1 if spec.with_constant else 0)
    budget = EVALS_PER_PARAM * spec.n_params

    def unpack(xvec: np.ndarray):
        phi, theta, delta = _decode(xvec, spec)
        return phi, theta, z0 - delta

    def css_objective(xvec: np.ndarray) -> float:
        phi, theta, z = unpack(xvec)
        res = _css_residuals(z, phi, theta)
        val = float(res @ res)
        return val if np.isfinite(val) else np.inf

    def neg_profile_loglik(xvec: np.ndarray) -> float:
        phi, theta, z = unpack(xvec)
        try:
            sum_log_f, sum_v2f = _innovation_terms(z, phi, theta)
        except NumericalError:
            return np.inf
        sig2 = sum_v2f / n_eff
        if not sig2 > 0 or not np.isfinite(sig2):
            return np.inf
        val = 0.5 * n_eff * (math.log(2.0 * math.pi * sig2) + 1.0) + 0.5 * sum_log_f
        return val if np.isfinite(val) else np.inf

    # start: Yule-Walker partials for the AR side, zeros for the MA side
    x0 = np.zeros(n_free)
    if p:
        x0[:p] = np.arctanh(_yule_walker_partials(z0, p))
    res_css = _nelder_mead(css_objective, x0, maxfev=budget)
    x_css = res_css.x if np.isfinite(res_css.fun) else x0

    res = _nelder_mead(neg_profile_loglik, x_css, maxfev=budget)
    best = res
    if not res.success:
        # one restart: fresh simplex around the best point found so far
        res2 = _nelder_mead(neg_profile_loglik, res.x, maxfev=budget, simplex_scale=0.1)
        if res2.fun <= res.fun:
            best = res2
        if not res2.success:
            raise OptimizerFailed(
                f"{spec.label()}: simplex did not converge within {budget} evaluations "
                f"(best objective {best.fun:.6g})"
            )
    if not np.isfinite(best.fun):
        raise OptimizerFailed(f"{spec.label()}: likelihood not finite at optimum")

    phi, theta, delta = _decode(best.x, spec)
    z_hat = z0 - delta
    sum_log_f, sum_v2f = _innovation_terms(z_hat, phi, theta)
    sigma2 = sum_v2f / n_eff
    if not sigma2 > 0:
        raise OptimizerFailed(f"{spec.label()}: zero innovation variance at optimum")
    loglik = -0.5 * n_eff * (math.log(2.0 * math.pi * sigma2) + 1.0) - 0.5 * sum_log_f
    mean = wbar + delta
    mu = mean * (1.0 - float(phi.sum())) if spec.with_constant else 0.0
    k = spec.n_params
    bic = k * math.log(n_eff) - 2.0 * loglik
    return ArimaFit(
        spec=spec,
        phi=tuple(float(v) for v in phi),
        theta=tuple(float(v) for v in theta),
        mu=mu,
        sigma2=float(sigma2),
        loglik=float(loglik),
        n_eff=n_eff,
        bic=float(bic),
    )


# ---------------------------------------------------------------------------
# forecasting


def forecast(fit_: ArimaFit, s: Sequence[float] | np.ndarray, h: int) -> np.ndarray:
    """Minimum-MSE point forecasts for horizons 1..h, in level space.

    ``s`` must be the undifferenced series the fit was produced on (or an
    extension of it). The filter is run to the end of s, the state is
    propagated h steps, and the differenced-scale forecasts are
    integrated back to levels.
    """
    if h < 1:
        raise ValueError("forecast horizon must be >= 1")
    x = np.asarray(s, dtype=float)
    d = fit_.spec.d
    if x.size <= d or x.size - d < 1:
        raise SeriesTooShort(f"need more than {d} points to forecast, got {x.size}")
    w = difference(x, d)
    mean = fit_.implied_mean if fit_.spec.with_constant else 0.0
    z = w - mean
    phi = np.asarray(fit_.phi)
    theta = np.asarray(fit_.theta)
    T, R = _state_space(phi, theta)
    Q = np.outer(R, R)
    P = _stationary_cov(T, R)
    a = np.zeros(T.shape[0])
    for t in range(z.size):
        f = P[0, 0]
        if not f > 1e-300:
            raise NonStationaryParams("non-positive prediction variance")
        v = z[t] - a[0]
        Pz = P[:, 0]
        a = T @ (a + Pz * (v / f))
        P = T @ (P - np.outer(Pz, Pz) / f) @ T.T + Q
    zf = np.empty(h)
    for j in range(h):
        zf[j] = a[0]
        a = T @ a
    wf = zf + mean
    fc = wf
    for j in range(d - 1, -1, -1):
        anchor = float(difference(x, j)[-1]) if j else float(x[-1])
        fc = anchor + np.cumsum(fc)
    return fc


def psi_weights(fit_: ArimaFit, h: int) -> np.ndarray:
    """First h moving-average-infinity weights of the integrated model."""
    phi_full = np.asarray(fit_.phi, dtype=float)
    for _ in range(fit_.spec.d):
        # multiply (1 - sum phi_i B^i) by (1 - B), staying in minus convention
        merged = np.convolve(np.concatenate([[1.0], -phi_full]), [1.0, -1.0])
        phi_full = -merged[1:]
    q = fit_.spec.q
    psi = np.empty(h)
    psi[0] = 1.0
    for j in range(1, h):
        acc = -fit_.theta[j - 1] if j <= q else 0.0
        for i in range(1, min(j, phi_full.size) + 1):
            acc += phi_full[i - 1] * psi[j - i]
        psi[j] = acc
    return psi


def forecast_variance(fit_: ArimaFit, h: int) -> np.ndarray:
    """Forecast-error variances for horizons 1..h (level space).

    sigma2 * cumulative sum of squared psi weights; not consumed by the
    headline pipeline, exposed for interval construction and the
    optional log-normal back-transform correction.
    """
    psi = psi_weights(fit_, h)
    return fit_.sigma2 * np.cumsum(psi**2)


# ---------------------------------------------------------------------------
# order selection


def select_order(s: Sequence[float] | np.ndarray, grid: Sequence[ArimaSpec]) -> ArimaSpec:
    """Fit every candidate and return the BIC-minimal specification.

    Ties break toward fewer parameters: smaller p+q+d, then smaller d,
    then smaller q. Candidates whose fit fails are skipped with a log
    line; if every candidate fails the selection itself fails.
    """
    if not grid:
        raise ValueError("empty specification grid")
    ranked: list[tuple] = []
    for spec in sorted(set(grid)):
        try:
            f = fit(s, spec)
        except (DataError, NumericalError) as exc:
            log.info("order selection: %s skipped (%s)", spec.label(), exc)
            continue
        ranked.append((f.bic, spec.p + spec.q + spec.d, spec.d, spec.q, spec))
    if not ranked:
        raise AllFitsFailed(f"all {len(grid)} candidate specifications failed to fit")
    ranked.sort(key=lambda t: (t[0], t[1], t[2], t[3], t[4]))
    return ranked[0][4]
