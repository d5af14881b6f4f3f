"""Price-file parsing, calendar alignment and window slicing."""

from __future__ import annotations

import csv
import io
import logging
import math
import re
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path
from typing import Dict, List, Mapping, Sequence, Tuple

import numpy as np

from .errors import (
    ConfigError,
    DuplicateObservation,
    EmptyInput,
    EmptyIntersection,
    InsufficientData,
    MalformedRow,
    NonPositivePrice,
    NoWindow,
)

logger = logging.getLogger(__name__)

LAYOUTS = ("long", "wide")
FILL_POLICIES = ("intersect", "ffill")
WINDOW_MODES = ("year", "fixed")

_ISO_DATE = re.compile(r"^\d{4}-\d{2}-\d{2}$")

# instrument -> {date: close}
SparseSeries = Dict[str, Dict[date, float]]


@dataclass(frozen=True)
class PricePanel:
    """Rectangular date x instrument matrix of closing prices.

    ``filled[t, i]`` is True where the close was carried forward rather
    than observed.
    """

    dates: Tuple[date, ...]
    instruments: Tuple[str, ...]
    closes: np.ndarray
    filled: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        closes = np.asarray(self.closes, dtype=float)
        if closes.ndim != 2 or closes.shape != (len(self.dates), len(self.instruments)):
            raise ValueError(
                f"closes shape {closes.shape} does not match "
                f"{len(self.dates)} dates x {len(self.instruments)} instruments"
            )
        if len(set(self.instruments)) != len(self.instruments):
            raise ValueError("instrument labels must be unique")
        if any(not label for label in self.instruments):
            raise ValueError("instrument labels must be non-empty")
        if any(b <= a for a, b in zip(self.dates, self.dates[1:])):
            raise ValueError("dates must be strictly increasing")
        if not np.all(np.isfinite(closes)) or np.any(closes <= 0):
            raise ValueError("all closes must be finite and positive")
        filled = self.filled
        if filled is None:
            filled = np.zeros(closes.shape, dtype=bool)
        filled = np.asarray(filled, dtype=bool)
        if filled.shape != closes.shape:
            raise ValueError("provenance mask shape mismatch")
        closes.setflags(write=False)
        filled.setflags(write=False)
        object.__setattr__(self, "closes", closes)
        object.__setattr__(self, "filled", filled)
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "instruments", tuple(self.instruments))

    @property
    def shape(self) -> Tuple[int, int]:
        return self.closes.shape

    def rows(self, start: int, stop: int) -> "PricePanel":
        return PricePanel(
            self.dates[start:stop],
            self.instruments,
            self.closes[start:stop],
            self.filled[start:stop],
        )

    def select(self, instruments: Sequence[str]) -> "PricePanel":
        index = [self.instruments.index(label) for label in instruments]
        return PricePanel(
            self.dates, tuple(instruments), self.closes[:, index], self.filled[:, index]
        )


@dataclass(frozen=True)
class WindowSpec:
    mode: str = "year"
    length: int = 260
    step: int = 260
    min_days: int = 50

    def __post_init__(self) -> None:
        if self.mode not in WINDOW_MODES:
            raise ConfigError(f"window mode must be one of {WINDOW_MODES}, got {self.mode!r}")
        if self.step < 1:
            raise ConfigError("window step must be >= 1")
        if self.mode == "fixed" and self.length < 3:
            raise ConfigError("fixed-length windows need length >= 3")
        if self.min_days < 1:
            raise ConfigError("min_days must be >= 1")


def _parse_date(text: str, line: int) -> date:
    text = text.strip()
    if not _ISO_DATE.match(text):
        raise MalformedRow(line, f"date {text!r} is not YYYY-MM-DD")
    try:
        return date.fromisoformat(text)
    except ValueError as exc:
        raise MalformedRow(line, f"invalid date {text!r}") from exc


def _parse_close(text: str, line: int) -> float:
    try:
        value = float(text)
    except ValueError as exc:
        raise MalformedRow(line, f"close {text!r} is not a number") from exc
    if not math.isfinite(value):
        raise MalformedRow(line, f"close {text!r} is not finite")
    if value <= 0:
        raise NonPositivePrice(line, value)
    return value


def parse_prices(content: str, layout: str = "long") -> SparseSeries:
    """Parse CSV text into per-instrument sparse series keyed by date.

    Line numbers in errors are 1-based and count the header. Wide-layout
    cells may be left empty for days an instrument did not trade.
    """
    if layout not in LAYOUTS:
        raise ConfigError(f"layout must be one of {LAYOUTS}, got {layout!r}")
    rows = [
        (lineno, row)
        for lineno, row in enumerate(csv.reader(io.StringIO(content)), start=1)
        if row and any(cell.strip() for cell in row)
    ]
    if not rows:
        raise EmptyInput("price file is empty")
    header_line, header = rows[0]
    header = [cell.strip() for cell in header]
    body = rows[1:]
    if not body:
        raise EmptyInput("price file has a header but no observations")

    series: SparseSeries = {}
    if layout == "long":
        if header != ["date", "instrument", "close"]:
            raise MalformedRow(header_line, "long layout header must be 'date,instrument,close'")
        for lineno, row in body:
            if len(row) != 3:
                raise MalformedRow(lineno, f"expected 3 fields, got {len(row)}")
            day = _parse_date(row[0], lineno)
            label = row[1].strip()
            if not label:
                raise MalformedRow(lineno, "empty instrument label")
            close = _parse_close(row[2], lineno)
            obs = series.setdefault(label, {})
            if day in obs:
                raise DuplicateObservation(lineno, day.isoformat(), label)
            obs[day] = close
    else:
        if len(header) < 2 or header[0] != "date":
            raise MalformedRow(header_line, "wide layout header must be 'date,<id1>,<id2>,...'")
        labels = header[1:]
        if any(not label for label in labels):
            raise MalformedRow(header_line, "empty instrument label in header")
        if len(set(labels)) != len(labels):
            raise MalformedRow(header_line, "duplicate instrument label in header")
        for label in labels:
            series[label] = {}
        for lineno, row in body:
            if len(row) != len(header):
                raise MalformedRow(lineno, f"expected {len(header)} fields, got {len(row)}")
            day = _parse_date(row[0], lineno)
            for label, cell in zip(labels, row[1:]):
                if not cell.strip():
                    continue
                obs = series[label]
                if day in obs:
                    raise DuplicateObservation(lineno, day.isoformat(), label)
                obs[day] = _parse_close(cell, lineno)
        series = {label: obs for label, obs in series.items() if obs}
        if not series:
            raise EmptyInput("price file has no observations")
    return series


def read_prices(path: str | Path, layout: str = "long") -> SparseSeries:
    with open(path, encoding="utf-8", newline="") as fh:
        return parse_prices(fh.read(), layout)


def align_calendars(
    series: Mapping[str, Mapping[date, float]],
    policy: str = "ffill",
    leading_grace: int = 5,
) -> PricePanel:
    """Align per-instrument series onto one date axis.

    ``intersect`` keeps only dates observed for every instrument.
    ``ffill`` uses the union of dates and carries each instrument's last
    close forward. An instrument first observed more than ``leading_grace``
    axis rows after the start of the union is dropped with a warning; the
    axis then starts at the latest first observation among the survivors,
    so no cell is ever filled from nothing.
    """
    if policy not in FILL_POLICIES:
        raise ConfigError(f"fill policy must be one of {FILL_POLICIES}, got {policy!r}")
    if leading_grace < 0:
        raise ConfigError("leading_grace must be >= 0")
    if len(series) < 2:
        raise InsufficientData(f"need at least 2 instruments, got {len(series)}")
    for label, obs in series.items():
        if not obs:
            raise InsufficientData(f"instrument {label!r} has no observations")

    labels = list(series)
    if policy == "intersect":
        common = set.intersection(*(set(obs) for obs in series.values()))
        if not common:
            raise EmptyIntersection("no date is observed for every instrument")
        axis = sorted(common)
        closes = np.array([[series[label][d] for label in labels] for d in axis])
        return PricePanel(tuple(axis), tuple(labels), closes)

    union = sorted(set().union(*(set(obs) for obs in series.values())))
    position = {d: k for k, d in enumerate(union)}
    kept = []
    for label in labels:
        first = position[min(series[label])]
        if first > leading_grace:
            logger.warning(
                "dropping %s: first observation %s is %d rows after the panel start",
                label, min(series[label]).isoformat(), first,
            )
            continue
        kept.append(label)
    if len(kept) < 2:
        raise InsufficientData(f"only {len(kept)} instrument(s) left after forward-fill alignment")

    start = max(position[min(series[label])] for label in kept)
    axis = union[start:]
    closes = np.empty((len(axis), len(kept)))
    filled = np.zeros((len(axis), len(kept)), dtype=bool)
    for j, label in enumerate(kept):
        obs = series[label]
        # seed with the last observation at or before the axis start
        last = obs[max(d for d in obs if d <= axis[0])]
        for t, d in enumerate(axis):
            if d in obs:
                last = obs[d]
            else:
                filled[t, j] = True
            closes[t, j] = last
    return PricePanel(tuple(axis), tuple(kept), closes, filled)


def slice_windows(panel: PricePanel, spec: WindowSpec) -> List[Tuple[str, PricePanel]]:
    """Cut the panel into labelled analysis windows.

    Each slice includes the row preceding the window when one exists, so
    a window of ``n`` rows yields ``n`` returns (``n - 1`` for the first).
    Calendar-year windows are labelled by year, fixed-length windows by
    the ISO date of their first row.
    """
    n_rows = len(panel.dates)
    windows: List[Tuple[str, PricePanel]] = []
    if spec.mode == "year":
        years = [d.year for d in panel.dates]
        start = 0
        while start < n_rows:
            stop = start
            while stop < n_rows and years[stop] == years[start]:
                stop += 1
            count = stop - start
            if count < spec.min_days:
                logger.warning(
                    "dropping window %d: %d rows < minimum %d", years[start], count, spec.min_days
                )
            else:
                windows.append((str(years[start]), panel.rows(max(start - 1, 0), stop)))
            start = stop
    else:
        for start in range(0, n_rows - spec.length + 1, spec.step):
            label = panel.dates[start].isoformat()
            windows.append((label, panel.rows(max(start - 1, 0), start + spec.length)))
    if not windows:
        raise NoWindow(f"no {spec.mode} window satisfies the minimum size ({n_rows} rows available)")
    return windows


def filter_instruments(series: SparseSeries, subset: Sequence[str]) -> SparseSeries:
    missing = [label for label in subset if label not in series]
    if missing:
        logger.warning("subset instruments not present in input: %s", ", ".join(missing))
    wanted = set(subset)
    return {label: obs for label, obs in series.items() if label in wanted}


def read_subset(path: str | Path) -> List[str]:
    """One instrument label per line; blank lines and ``#`` comments ignored."""
    labels = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if line:
                labels.append(line)
    return labels
