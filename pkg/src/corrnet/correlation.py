"""Equal-time Pearson correlation matrices and their summaries."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .errors import InsufficientData
from .returns import NormalizedReturnPanel

DIAGONAL_TOLERANCE = 1e-9


@dataclass(frozen=True)
class CorrelationMatrix:
    instruments: Tuple[str, ...]
    values: np.ndarray
    window_label: str = ""

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        n = len(self.instruments)
        if values.shape != (n, n):
            raise ValueError(f"matrix shape {values.shape} does not match {n} instruments")
        if not np.array_equal(values, values.T):
            raise ValueError("correlation matrix must be exactly symmetric")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "instruments", tuple(self.instruments))

    def __getitem__(self, pair: Tuple[str, str]) -> float:
        i, j = (self.instruments.index(label) for label in pair)
        return float(self.values[i, j])


def correlation_matrix(normalized: NormalizedReturnPanel) -> CorrelationMatrix:
    """C_ij = (1/T') sum_t r_i(t) r_j(t) over standardised returns.

    Each entry is a pairwise-summed reduction over one contiguous product
    vector, so no accumulator is shared between entries and the result
    does not depend on evaluation order. Values are clamped to [-1, 1]
    and the lower triangle mirrors the upper bit for bit.
    """
    r = np.asarray(normalized.values, dtype=float)
    n_rows, n = r.shape
    if n < 2:
        raise InsufficientData(f"need at least 2 instruments with non-zero variance, got {n}")
    if n_rows < 3:
        raise InsufficientData(f"need at least 3 return rows, got {n_rows}")
    cols = np.ascontiguousarray(r.T)
    out = np.empty((n, n))
    for i in range(n):
        products = cols[i] * cols[i:]  # (n - i, T'), rows contiguous
        out[i, i:] = np.add.reduce(products, axis=1) / n_rows
    diag = np.diag(out)
    worst = float(np.max(np.abs(diag - 1.0)))
    if worst > DIAGONAL_TOLERANCE:
        raise ValueError(f"input is not standardised: diagonal deviates from 1 by {worst:.3g}")
    np.clip(out, -1.0, 1.0, out=out)
    upper = np.triu_indices(n, 1)
    out[(upper[1], upper[0])] = out[upper]
    np.fill_diagonal(out, 1.0)
    return CorrelationMatrix(normalized.instruments, out, normalized.window_label)


def mean_correlation(corr: CorrelationMatrix) -> float:
    """Arithmetic mean of the strictly upper-triangular entries."""
    n = len(corr.instruments)
    if n < 2:
        raise InsufficientData("mean correlation needs at least 2 instruments")
    return float(np.mean(corr.values[np.triu_indices(n, 1)]))
