"""Correlation threshold networks for panels of daily closing prices.

Typical flow::

    series = read_prices("prices.csv", layout="wide")
    panel = align_calendars(series, "ffill")
    for label, prices in slice_windows(panel, WindowSpec("year")):
        corr = correlation_matrix(normalize(log_returns(prices, label)))
        report = window_report(corr, theta=0.3)
"""

from .correlation import CorrelationMatrix, correlation_matrix, mean_correlation
from .errors import ConfigError, CorrnetError, DataError
from .ingest import (
    PricePanel,
    WindowSpec,
    align_calendars,
    parse_prices,
    read_prices,
    slice_windows,
)
from .netgraph import (
    Cluster,
    Graph,
    ThresholdNetwork,
    WindowReport,
    average_clustering,
    build_threshold_network,
    characteristic_path_length,
    density,
    largest_cluster,
    window_report,
)
from .returns import NormalizedReturnPanel, ReturnPanel, log_returns, normalize, volatility
from .similarity import SimilarityMatrix, jaccard, regime_flags, similarity_matrix
from .synth import Block, RegimeSwitch, SynthSpec, generate

__version__ = "0.1.0"
