"""Chronological day-ahead backtest of the four forecasters."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from ..errors import InsufficientHistory
from ..ingest import STEPS_PER_WEEK, CovariateFrame, LoadSeries
from ..kinds import ALL_KINDS, ModelKind
from ..metrics import mae, rmse
from .gbm import GBMRegressor
from .linear import LinearRegression
from .naive import forecast_daily_naive, forecast_weekly_naive
from .windowing import WindowConfig, build_supervised


def _json_num(v):
    """Non-finite scores (an infinite rMAE) become ``null`` in JSON."""
    v = float(v)
    return v if np.isfinite(v) else None


def _from_json_num(v):
    return float("inf") if v is None else float(v)


@dataclass
class ForecastReport:
    """Day-ahead forecasts and pooled scores of one building.

    ``forecasts[kind]`` and ``actuals`` are ``(n_origins, horizon)`` arrays;
    ``scores[kind]`` maps ``rmse``, ``mae`` and ``rmae`` to floats.
    """

    building_id: str
    split_index: int
    split_timestamp: str
    origins: list
    origin_timestamps: list
    actuals: np.ndarray
    forecasts: dict = field(default_factory=dict)
    scores: dict = field(default_factory=dict)

    @property
    def kinds(self):
        return sorted(self.scores, key=lambda k: ModelKind.parse(k))

    def rmse_by_kind(self) -> dict:
        return {ModelKind.parse(k): v["rmse"] for k, v in self.scores.items()}

    def score_rows(self) -> list[dict]:
        return [{"building_id": self.building_id, "model": str(ModelKind.parse(k)),
                 **self.scores[k]} for k in self.kinds]

    def to_dict(self) -> dict:
        return {
            "building_id": self.building_id,
            "split": {"index": self.split_index, "timestamp": self.split_timestamp},
            "origins": list(map(int, self.origins)),
            "origin_timestamps": list(self.origin_timestamps),
            "actuals": np.asarray(self.actuals).tolist(),
            "models": {
                str(ModelKind.parse(k)): {**{m: _json_num(v) for m, v in self.scores[k].items()},
                                          "forecasts": np.asarray(self.forecasts[k]).tolist()}
                for k in self.kinds
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, allow_nan=False)

    @classmethod
    def from_dict(cls, d) -> "ForecastReport":
        models = d["models"]
        return cls(
            building_id=d["building_id"],
            split_index=d["split"]["index"],
            split_timestamp=d["split"]["timestamp"],
            origins=d["origins"],
            origin_timestamps=d["origin_timestamps"],
            actuals=np.asarray(d["actuals"], dtype=float),
            forecasts={ModelKind[k]: np.asarray(v["forecasts"], dtype=float) for k, v in models.items()},
            scores={ModelKind[k]: {m: _from_json_num(v[m]) for m in ("rmse", "mae", "rmae")} for k, v in models.items()},
        )


def forecast_origins(series: LoadSeries, cfg: WindowConfig, split_index: int) -> np.ndarray:
    """Midnight indices at or after the split with a full horizon ahead."""
    ts = series.timestamps
    idx = np.arange(len(series))
    midnight = (ts.hour == 0) & (ts.minute == 0)
    first = max(split_index, cfg.min_history, STEPS_PER_WEEK)
    ok = midnight & (idx >= first) & (idx + cfg.horizon <= len(series))
    return idx[ok]


def relative_mae(model_mae: float, benchmark_mae: float) -> float:
    """``model_mae / benchmark_mae``; a zero benchmark gives 1.0 for a zero
    model error and ``inf`` otherwise."""
    if benchmark_mae > 0:
        return model_mae / benchmark_mae
    return 1.0 if model_mae == 0 else float("inf")


def backtest_day_ahead(series: LoadSeries, frame: CovariateFrame, cfg: WindowConfig | None = None,
                       split_frac: float = 0.8, kinds=ALL_KINDS, gbm_params: dict | None = None,
                       ridge_eps: float = 1e-8) -> ForecastReport:
    """Fit on the first ``split_frac`` of the series, forecast every test day.

    LinReg and GBM are fitted once on target indices
    ``[cfg.min_history, split)``; every midnight origin of the test region
    then receives a 48-step forecast from each requested model.  RMSE and
    MAE are pooled over all test forecasts; ``rmae`` divides by the daily
    naive MAE on the same forecasts.
    """
    cfg = cfg or WindowConfig()
    kinds = sorted({ModelKind.parse(k) for k in kinds})
    if not 0 < split_frac < 1:
        raise ValueError("split_frac must be in (0, 1)")
    values = np.asarray(series.values, dtype=float)
    n = len(values)
    split = int(np.floor(split_frac * n))
    origins = forecast_origins(series, cfg, split)
    if len(origins) == 0:
        raise InsufficientHistory(
            f"building {series.building_id!r}: no full test day after index {split}")
    h = cfg.horizon
    actuals = np.stack([values[o:o + h] for o in origins])
    forecasts = {}
    # always computed: the daily naive forecast is the rMAE benchmark
    forecasts[ModelKind.DailyNaive] = np.stack([forecast_daily_naive(values, o, h) for o in origins])
    if ModelKind.WeeklyNaive in kinds:
        forecasts[ModelKind.WeeklyNaive] = np.stack([forecast_weekly_naive(values, o, h) for o in origins])

    learned = [k for k in kinds if k in (ModelKind.LinReg, ModelKind.GBM)]
    if learned:
        design = build_supervised(series, frame, cfg)
        train = design.rows(cfg.min_history, split)
        if len(train) < design.X.shape[1] + 1:
            raise InsufficientHistory(
                f"building {series.building_id!r}: {len(train)} training rows for "
                f"{design.X.shape[1]} features")
        test_pos = (origins[:, None] + np.arange(h)[None, :]).ravel()
        X_test = design.X.loc[test_pos]
        for kind in learned:
            if kind is ModelKind.LinReg:
                model = LinearRegression(ridge_eps=ridge_eps)
            else:
                model = GBMRegressor(**(gbm_params or {}))
            model.fit(train.X, train.y)
            forecasts[kind] = model.predict(X_test).reshape(len(origins), h)

    bench = mae(actuals, forecasts[ModelKind.DailyNaive])
    scores = {}
    for kind in kinds:
        f = forecasts[kind]
        m = mae(actuals, f)
        scores[kind] = {"rmse": rmse(actuals, f), "mae": m, "rmae": relative_mae(m, bench)}
    forecasts = {k: v for k, v in forecasts.items() if k in scores}

    ts = series.timestamps
    fmt = "%Y-%m-%dT%H:%M:%SZ"
    split_ts = ts[split].strftime(fmt) if split < n else ""
    return ForecastReport(
        building_id=series.building_id,
        split_index=split,
        split_timestamp=split_ts,
        origins=[int(o) for o in origins],
        origin_timestamps=[ts[o].strftime(fmt) for o in origins],
        actuals=actuals,
        forecasts=forecasts,
        scores=scores,
    )
