"""Day-ahead forecasters and the backtest that scores them."""
from .backtest import ForecastReport, backtest_day_ahead, forecast_origins, relative_mae
from .gbm import GBMRegressor, RegressionTree, fit_gbm, predict_gbm
from .linear import LinearRegression, fit_linreg, predict_linreg
from .naive import forecast_daily_naive, forecast_weekly_naive
from .windowing import SupervisedSet, WindowConfig, build_supervised

__all__ = [
    "ForecastReport", "backtest_day_ahead", "forecast_origins", "relative_mae",
    "GBMRegressor", "RegressionTree", "fit_gbm", "predict_gbm",
    "LinearRegression", "fit_linreg", "predict_linreg",
    "forecast_daily_naive", "forecast_weekly_naive",
    "SupervisedSet", "WindowConfig", "build_supervised",
]
