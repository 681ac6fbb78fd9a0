"""Synthetic multi-metric rebalance backtest with feature toggles.

A desk-scale daily rebalance against a buy-and-hold benchmark, small enough
that all 2^n configurations backtest in seconds yet rich enough to show the
classic attribution pathologies:

* each signal alone earns return but, uncapped, carries too much risk, so
  one-at-a-time over-attributes risk;
* with everything on the risk cap binds, so removing it matters enormously
  and leave-one-out under-attributes risk to everything else;
* trade smoothing alone trades (it lags the drifting benchmark) while
  smoothing on top of live signals damps their churn, flipping the sign of
  its turnover attribution between one-at-a-time and Shapley.

Features: n_signals alpha-signal toggles, then the risk-limit toggle, then
the trade-smoothing toggle (n = n_signals + 2).

Market model, all drawn once from the seed in a frozen order: one-factor
covariance Sigma = diag(idio_sd^2) + v v', AR(1) signals (stationary daily
vol SIGNAL_VOL per unit information coefficient), asset returns = sum of
signal forecasts + factor shock + idiosyncratic shock.  Per period the
strategy trades toward benchmark + Sigma^{-1} alpha / risk_aversion, capped
so predicted active risk stays under the (annualized, percent) risk limit
when that toggle is on, optionally smoothed toward the previous post-trade
target.  Metrics: mean active return, std of active returns, mean one-way
turnover, each annualized by TRADING_DAYS (x100 for percent).
"""

from __future__ import annotations

import math

import numpy as np

from . import kernels
from .model import (
    AttributionError,
    Configuration,
    EvaluationError,
    MetricVector,
    PerformanceEvaluator,
)

__all__ = ["SyntheticRebalanceEvaluator", "SingularCovarianceError", "TRADING_DAYS"]

TRADING_DAYS = 252

# Signal persistence and scale: slow-moving forecasts with realistic churn.
SIGNAL_AR1 = 0.92
SIGNAL_VOL = 0.002


class SingularCovarianceError(AttributionError):
    """The constructed covariance matrix is not positive definite."""


class SyntheticRebalanceEvaluator(PerformanceEvaluator):
    """See module docstring.  Deterministic given the constructor arguments;
    all randomness is drawn at construction, so concurrent evaluation is safe.
    """

    supports_concurrent_evaluate = True

    def __init__(
        self,
        *,
        seed: int = 0,
        n_signals: int = 5,
        n_assets: int = 20,
        n_periods: int = TRADING_DAYS,
        risk_aversion: float = 150.0,
        risk_limit_pct: float = 4.0,
        smoothing_weight: float = 0.25,
    ) -> None:
        if n_signals < 1:
            raise ValueError("need at least one signal")
        if n_assets < 2 or n_periods < 2:
            raise ValueError("need at least 2 assets and 2 periods")
        if risk_aversion <= 0 or risk_limit_pct <= 0:
            raise ValueError("risk_aversion and risk_limit_pct must be positive")
        if not 0.0 < smoothing_weight <= 1.0:
            raise ValueError("smoothing_weight must be in (0, 1]")
        self.seed = seed
        self.n_signals = n_signals
        self.n_assets = n_assets
        self.n_periods = n_periods
        self.risk_aversion = float(risk_aversion)
        self.risk_limit_pct = float(risk_limit_pct)
        self.smoothing_weight = float(smoothing_weight)

        # Frozen draw order; reordering would silently change every fixture.
        rng = np.random.default_rng(seed)
        idio_sd = rng.uniform(0.005, 0.02, n_assets)
        factor = 0.01 * rng.normal(1.0, 0.2, n_assets)
        info_coef = rng.uniform(0.3, 1.0, n_signals)
        innovations = rng.standard_normal((n_signals, n_periods, n_assets))
        market_shock = rng.standard_normal(n_periods)
        idio_shock = rng.standard_normal((n_periods, n_assets))
        raw_weights = rng.uniform(0.5, 1.5, n_assets)

        signals = np.empty_like(innovations)
        signals[:, 0] = SIGNAL_VOL * innovations[:, 0]
        scale = math.sqrt(1.0 - SIGNAL_AR1**2) * SIGNAL_VOL
        for t in range(1, n_periods):
            signals[:, t] = SIGNAL_AR1 * signals[:, t - 1] + scale * innovations[:, t]

        # One return forecast per signal; their sum is the predictable part
        # of next-period returns, so forecasts are honest by construction.
        self._forecasts = info_coef[:, None, None] * signals  # (S, T, A)
        self._rets = (
            self._forecasts.sum(axis=0)
            + np.outer(market_shock, factor)
            + idio_sd * idio_shock
        )
        self._sigma = np.diag(idio_sd**2) + np.outer(factor, factor)
        try:
            np.linalg.cholesky(self._sigma)
        except np.linalg.LinAlgError:
            raise SingularCovarianceError(
                "covariance matrix is not positive definite"
            ) from None
        self._inv_sigma = np.linalg.inv(self._sigma)
        self._bench0 = raw_weights / raw_weights.sum()

    @property
    def n_features(self) -> int:
        return self.n_signals + 2

    @property
    def metric_names(self) -> tuple[str, ...]:
        return ("active_return", "active_risk", "turnover")

    @property
    def feature_names(self) -> tuple[str, ...]:
        return tuple(f"signal_{i + 1}" for i in range(self.n_signals)) + (
            "risk_limit",
            "smoothing",
        )

    @property
    def risk_limit_daily(self) -> float:
        """The cap applied to predicted per-period active vol (weight units)."""
        return self.risk_limit_pct / 100.0 / math.sqrt(TRADING_DAYS)

    def evaluate(self, config: Configuration) -> MetricVector:
        self._check_config(config)
        T = self.n_periods
        forecast = np.zeros((T, self.n_assets))
        for i in range(self.n_signals):
            if config.is_active(i):
                forecast += self._forecasts[i]
        delta = (forecast @ self._inv_sigma) / self.risk_aversion
        if config.is_active(self.n_signals):  # risk-limit toggle
            quad = np.einsum("ta,ab,tb->t", delta, self._sigma, delta)
            predicted = np.sqrt(np.maximum(quad, 0.0))
            scale = np.ones(T)
            live = predicted > 0.0
            scale[live] = np.minimum(1.0, self.risk_limit_daily / predicted[live])
            delta = delta * scale[:, None]
        smooth = config.is_active(self.n_signals + 1)
        active, turnover = kernels.rebalance_path(
            self._bench0, self._rets, delta, self.smoothing_weight, smooth
        )
        values = (
            float(active.mean() * TRADING_DAYS * 100.0),
            float(active.std(ddof=1) * math.sqrt(TRADING_DAYS) * 100.0),
            float(turnover.mean() * TRADING_DAYS * 100.0),
        )
        if not all(math.isfinite(v) for v in values):
            raise EvaluationError(
                f"non-finite metrics for configuration {config.bits}"
            )
        return MetricVector(values, self.metric_names)
