"""Log returns, average volatility and per-window standardisation."""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import date
from typing import Dict, Tuple

import numpy as np

from .errors import InsufficientData
from .ingest import PricePanel


@dataclass(frozen=True)
class ReturnPanel:
    dates: Tuple[date, ...]
    instruments: Tuple[str, ...]
    values: np.ndarray
    window_label: str = ""

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        if values.shape != (len(self.dates), len(self.instruments)):
            raise ValueError("return matrix shape does not match dates x instruments")
        if not np.all(np.isfinite(values)):
            raise ValueError("returns must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)


@dataclass(frozen=True)
class VolatilityReport:
    per_index: Dict[str, float]
    cross_sectional_mean: float
    window_label: str = ""


@dataclass(frozen=True)
class NormalizedReturnPanel(ReturnPanel):
    excluded: Tuple[str, ...] = field(default=())


def log_returns(prices: PricePanel, window_label: str = "") -> ReturnPanel:
    """R_i(t) = ln I_i(t) - ln I_i(t-1) for each consecutive pair of rows."""
    if len(prices.dates) < 2:
        raise InsufficientData(f"need at least 2 price rows, got {len(prices.dates)}")
    logs = np.log(prices.closes)
    return ReturnPanel(prices.dates[1:], prices.instruments, np.diff(logs, axis=0), window_label)


def volatility(returns: ReturnPanel) -> VolatilityReport:
    """Mean absolute log return per instrument, plus the cross-sectional mean."""
    n_rows = returns.values.shape[0]
    if n_rows < 1:
        raise InsufficientData("need at least 1 return row")
    v = np.abs(returns.values).sum(axis=0) / n_rows
    per_index = {label: float(x) for label, x in zip(returns.instruments, v)}
    return VolatilityReport(per_index, float(np.mean(v)), returns.window_label)


def normalize(returns: ReturnPanel, sigma_floor: float = 1e-12) -> NormalizedReturnPanel:
    """Standardise every column to zero mean and unit variance.

    The standard deviation divides by the number of returns, so the
    average of r_i * r_i over the window is exactly one. Columns whose
    deviation falls below ``sigma_floor`` are dropped and listed in
    ``excluded``.
    """
    values = returns.values
    n_rows = values.shape[0]
    if n_rows < 3:
        raise InsufficientData(f"need at least 3 return rows to normalise, got {n_rows}")
    centred = values - values.mean(axis=0)
    sigma = np.sqrt((centred * centred).sum(axis=0) / n_rows)
    keep = sigma >= sigma_floor
    if not keep.any():
        raise InsufficientData("every instrument has zero variance in this window")
    kept = tuple(label for label, k in zip(returns.instruments, keep) if k)
    excluded = tuple(label for label, k in zip(returns.instruments, keep) if not k)
    normed = centred[:, keep] / sigma[keep]
    # second pass removes the residual mean left by rounding
    normed = normed - normed.mean(axis=0)
    return NormalizedReturnPanel(returns.dates, kept, normed, returns.window_label, excluded)
