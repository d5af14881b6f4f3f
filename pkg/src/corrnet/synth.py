"""Synthetic price panels with planted block-correlation structure.

Daily log returns are ``daily_vol * L z`` where ``L`` is the Cholesky
factor of the block correlation matrix and ``z`` is a vector of standard
normals. Uniforms come from numpy's PCG64 bit generator (``random()``
yields 53-bit doubles); normals are produced from consecutive uniform
pairs by the Box-Muller transform, filling each day's vector in order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import date, timedelta
from pathlib import Path
from typing import Any, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .errors import ConfigError, NotPositiveSemidefinite
from .ingest import PricePanel

PIVOT_TOLERANCE = 1e-10


@dataclass(frozen=True)
class Block:
    """Instruments sharing an intra-block correlation ``rho``.

    Either ``size`` (members assigned contiguously, in block order) or an
    explicit tuple of instrument indices in ``members``.
    """

    rho: float
    size: Optional[int] = None
    members: Optional[Tuple[int, ...]] = None


@dataclass(frozen=True)
class RegimeSwitch:
    window: int
    blocks: Tuple[Block, ...]
    cross_correlation: Optional[float] = None


@dataclass(frozen=True)
class SynthSpec:
    seed: int
    n_instruments: int
    n_days: int
    blocks: Tuple[Block, ...]
    cross_correlation: float = 0.0
    daily_vol: float = 0.01
    start_price: float = 100.0
    start_date: date = date(2000, 1, 3)
    labels: Optional[Tuple[str, ...]] = None
    window_length: int = 260
    regime_switch: Optional[RegimeSwitch] = None

    def __post_init__(self) -> None:
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if self.n_instruments < 2:
            raise ConfigError("need at least 2 instruments")
        if self.n_days < 2:
            raise ConfigError("need at least 2 days")
        if not self.daily_vol > 0:
            raise ConfigError("daily_vol must be positive")
        if not self.start_price > 0:
            raise ConfigError("start_price must be positive")
        if self.window_length < 1:
            raise ConfigError("window_length must be >= 1")
        if self.labels is not None:
            if len(self.labels) != self.n_instruments or len(set(self.labels)) != len(self.labels):
                raise ConfigError("labels must be n_instruments unique strings")
        block_membership(self.blocks, self.n_instruments)
        if self.regime_switch is not None:
            if self.regime_switch.window < 0:
                raise ConfigError("regime switch window must be >= 0")
            block_membership(self.regime_switch.blocks, self.n_instruments)

    @property
    def instrument_labels(self) -> Tuple[str, ...]:
        if self.labels is not None:
            return tuple(self.labels)
        width = len(str(self.n_instruments - 1))
        return tuple(f"S{k:0{width}d}" for k in range(self.n_instruments))


def block_membership(blocks: Sequence[Block], n_instruments: int) -> List[int]:
    """Block index of each instrument; every instrument must belong to exactly one block."""
    owner = [-1] * n_instruments
    cursor = 0
    for b, block in enumerate(blocks):
        if not -1.0 <= block.rho <= 1.0:
            raise ConfigError(f"block {b}: rho must lie in [-1, 1]")
        if block.members is not None:
            members = list(block.members)
        elif block.size is not None and block.size > 0:
            members = list(range(cursor, cursor + block.size))
            cursor += block.size
        else:
            raise ConfigError(f"block {b}: give a positive size or a member list")
        for k in members:
            if not 0 <= k < n_instruments:
                raise ConfigError(f"block {b}: member {k} out of range")
            if owner[k] != -1:
                raise ConfigError(f"instrument {k} belongs to more than one block")
            owner[k] = b
    if -1 in owner:
        raise ConfigError("block member counts must cover every instrument exactly once")
    return owner


def block_correlation(
    blocks: Sequence[Block], cross_correlation: float, n_instruments: int
) -> np.ndarray:
    if not -1.0 <= cross_correlation <= 1.0:
        raise ConfigError("cross_correlation must lie in [-1, 1]")
    owner = np.array(block_membership(blocks, n_instruments))
    rho_in = np.array([blocks[b].rho for b in owner])
    same = owner[:, None] == owner[None, :]
    corr = np.where(same, rho_in[:, None], cross_correlation)
    np.fill_diagonal(corr, 1.0)
    return corr


def cholesky_psd(matrix: np.ndarray, tol: float = PIVOT_TOLERANCE) -> np.ndarray:
    """Lower-triangular L with L L^T = matrix, tolerating zero pivots.

    A pivot below ``-tol`` means the matrix is not PSD. Pivots within
    ``tol`` of zero (e.g. perfectly correlated pairs) zero the column.
    """
    a = np.array(matrix, dtype=float)
    n = a.shape[0]
    lower = np.zeros_like(a)
    for j in range(n):
        pivot = a[j, j] - lower[j, :j] @ lower[j, :j]
        if pivot < -tol:
            raise NotPositiveSemidefinite(float(np.linalg.eigvalsh(a)[0]))
        if pivot <= tol:
            continue
        lower[j, j] = np.sqrt(pivot)
        lower[j + 1:, j] = (a[j + 1:, j] - lower[j + 1:, :j] @ lower[j, :j]) / lower[j, j]
    # a zeroed column can hide an inconsistency further down
    if not np.allclose(lower @ lower.T, a, atol=1e-8):
        raise NotPositiveSemidefinite(float(np.linalg.eigvalsh(a)[0]))
    return lower


def box_muller(rng: np.random.Generator, count: int) -> np.ndarray:
    pairs = (count + 1) // 2
    u = rng.random(2 * pairs)
    u1 = 1.0 - u[0::2]  # (0, 1], keeps log finite
    u2 = u[1::2]
    radius = np.sqrt(-2.0 * np.log(u1))
    angle = 2.0 * np.pi * u2
    z = np.empty(2 * pairs)
    z[0::2] = radius * np.cos(angle)
    z[1::2] = radius * np.sin(angle)
    return z[:count]


def business_days(start: date, count: int) -> List[date]:
    days = []
    d = start
    while len(days) < count:
        if d.weekday() < 5:
            days.append(d)
        d += timedelta(days=1)
    return days


def generate(spec: SynthSpec) -> PricePanel:
    """Deterministic price panel for ``spec`` on a Monday-Friday calendar.

    Return row t (t >= 1, the move from price t-1 to price t) belongs to
    window ``t // window_length``; rows in the regime-switch window and
    later use the alternate blocks.
    """
    n = spec.n_instruments
    factor = cholesky_psd(block_correlation(spec.blocks, spec.cross_correlation, n))
    n_returns = spec.n_days - 1
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    z = box_muller(rng, n_returns * n).reshape(n_returns, n)
    returns = z @ factor.T
    switch = spec.regime_switch
    if switch is not None:
        alt_cross = (
            spec.cross_correlation if switch.cross_correlation is None else switch.cross_correlation
        )
        alt = cholesky_psd(block_correlation(switch.blocks, alt_cross, n))
        first = max(switch.window * spec.window_length - 1, 0)
        returns[first:] = z[first:] @ alt.T
    returns *= spec.daily_vol
    logs = np.vstack([np.zeros((1, n)), np.cumsum(returns, axis=0)])
    closes = spec.start_price * np.exp(logs)
    dates = business_days(spec.start_date, spec.n_days)
    return PricePanel(tuple(dates), spec.instrument_labels, closes)


def _block_from_json(obj: Mapping[str, Any]) -> Block:
    members = obj.get("members")
    return Block(
        rho=float(obj["rho"]),
        size=None if obj.get("size") is None else int(obj["size"]),
        members=None if members is None else tuple(int(k) for k in members),
    )


def spec_from_dict(obj: Mapping[str, Any]) -> SynthSpec:
    try:
        switch = obj.get("regime_switch")
        return SynthSpec(
            seed=int(obj["seed"]),
            n_instruments=int(obj["n_instruments"]),
            n_days=int(obj["n_days"]),
            blocks=tuple(_block_from_json(b) for b in obj["blocks"]),
            cross_correlation=float(obj.get("cross_correlation", 0.0)),
            daily_vol=float(obj.get("daily_vol", 0.01)),
            start_price=float(obj.get("start_price", 100.0)),
            start_date=date.fromisoformat(obj.get("start_date", "2000-01-03")),
            labels=None if obj.get("labels") is None else tuple(obj["labels"]),
            window_length=int(obj.get("window_length", 260)),
            regime_switch=None if switch is None else RegimeSwitch(
                window=int(switch["window"]),
                blocks=tuple(_block_from_json(b) for b in switch["blocks"]),
                cross_correlation=(
                    None if switch.get("cross_correlation") is None
                    else float(switch["cross_correlation"])
                ),
            ),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid synth spec: {exc}") from exc


def load_spec(path: str | Path) -> SynthSpec:
    try:
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from exc
    return spec_from_dict(obj)


def bundled_spec(name: str = "global_synth") -> SynthSpec:
    return load_spec(Path(__file__).parent / "data" / f"{name}.json")
