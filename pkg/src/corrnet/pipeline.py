"""End-to-end run: prices -> windows -> correlations -> networks -> similarity."""

from __future__ import annotations

import hashlib
import json
import logging
import os
import shutil
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, TextIO, Tuple

from . import export
from .correlation import CorrelationMatrix, correlation_matrix, mean_correlation
from .errors import ConfigError, DataError
from .ingest import (
    FILL_POLICIES,
    LAYOUTS,
    PricePanel,
    WindowSpec,
    align_calendars,
    filter_instruments,
    read_prices,
    read_subset,
    slice_windows,
)
from .netgraph import (
    CLUSTERING_RULES,
    DENSITY_CONVENTIONS,
    Cluster,
    WindowReport,
    build_threshold_network,
    largest_cluster,
    window_report,
)
from .returns import VolatilityReport, log_returns, normalize, volatility
from .similarity import SimilarityMatrix, jaccard, regime_flags, similarity_matrix

logger = logging.getLogger(__name__)

ARTIFACT_CLASSES = ("volatility", "correlation", "network", "metrics", "similarity")
THREADS_ENV = "CORRNET_THREADS"


@dataclass(frozen=True)
class RunConfig:
    input: Path
    output: Path
    layout: str = "long"
    fill: str = "ffill"
    window: WindowSpec = field(default_factory=WindowSpec)
    theta: float = 0.3
    theta_sweep: Tuple[float, ...] = ()
    density_convention: str = "prose"
    clustering_rule: str = "paper"
    subset: Optional[Path] = None
    all_components: bool = False
    regime_drop: float = 0.5
    sigma_floor: float = 1e-12
    workers: Optional[int] = None
    emit: Tuple[str, ...] = ARTIFACT_CLASSES

    def __post_init__(self) -> None:
        if self.layout not in LAYOUTS:
            raise ConfigError(f"layout must be one of {LAYOUTS}")
        if self.fill not in FILL_POLICIES:
            raise ConfigError(f"fill must be one of {FILL_POLICIES}")
        if self.density_convention not in DENSITY_CONVENTIONS:
            raise ConfigError(f"density convention must be one of {DENSITY_CONVENTIONS}")
        if self.clustering_rule not in CLUSTERING_RULES:
            raise ConfigError(f"clustering rule must be one of {CLUSTERING_RULES}")
        for t in (self.theta, *self.theta_sweep):
            if not -1.0 <= t <= 1.0:
                raise ConfigError(f"theta {t} outside [-1, 1]")
        if not 0.0 < self.regime_drop < 1.0:
            raise ConfigError("regime drop must lie in (0, 1)")
        if not self.sigma_floor > 0:
            raise ConfigError("sigma floor must be positive")
        if self.workers is not None and self.workers < 1:
            raise ConfigError("workers must be >= 1")
        unknown = set(self.emit) - set(ARTIFACT_CLASSES)
        if unknown:
            raise ConfigError(f"unknown artifact classes: {sorted(unknown)}")

    @property
    def thetas(self) -> Tuple[float, ...]:
        return self.theta_sweep or (self.theta,)

    def fingerprint(self) -> Dict[str, object]:
        """Result-affecting settings; paths and worker count are left out."""
        return {
            "layout": self.layout,
            "fill": self.fill,
            "window_mode": self.window.mode,
            "window_length": self.window.length,
            "window_step": self.window.step,
            "min_days": self.window.min_days,
            "theta": self.theta,
            "theta_sweep": list(self.thetas),
            "density_convention": self.density_convention,
            "clustering_rule": self.clustering_rule,
            "all_components": self.all_components,
            "regime_drop": self.regime_drop,
            "sigma_floor": self.sigma_floor,
            "emit": sorted(self.emit),
        }


@dataclass
class WindowResult:
    label: str
    volatility: VolatilityReport
    corr: CorrelationMatrix
    mean_corr: float
    reports: List[WindowReport]
    cluster: Cluster
    excluded: Tuple[str, ...]


@dataclass
class RunResult:
    output: Path
    manifest: Dict[str, object]
    windows: List[WindowResult]
    similarity: SimilarityMatrix
    flags: List[Tuple[str, float]]


def resolve_workers(requested: Optional[int] = None) -> int:
    """Explicit request, else ``CORRNET_THREADS``, else the CPU count."""
    if requested is not None:
        return requested
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            value = int(env)
        except ValueError as exc:
            raise ConfigError(f"{THREADS_ENV} must be an integer, got {env!r}") from exc
        if value < 1:
            raise ConfigError(f"{THREADS_ENV} must be >= 1")
        return value
    return os.cpu_count() or 1


def analyse_window(label: str, prices: PricePanel, config: RunConfig) -> WindowResult:
    returns = log_returns(prices, label)
    normed = normalize(returns, config.sigma_floor)
    if normed.excluded:
        logger.warning("window %s: excluded zero-variance instruments %s",
                       label, ", ".join(normed.excluded))
    corr = correlation_matrix(normed)
    reports = [
        window_report(corr, t, config.density_convention, config.clustering_rule)
        for t in config.thetas
    ]
    cluster = largest_cluster(build_threshold_network(corr, config.theta))
    return WindowResult(
        label, volatility(returns), corr, mean_correlation(corr), reports, cluster, normed.excluded
    )


def load_panel(config: RunConfig) -> PricePanel:
    try:
        series = read_prices(config.input, config.layout)
    except OSError as exc:
        raise DataError(f"cannot read {config.input}: {exc.strerror or exc}") from exc
    except UnicodeDecodeError as exc:
        raise DataError(f"{config.input} is not UTF-8 text") from exc
    if config.subset is not None:
        try:
            subset = read_subset(config.subset)
        except OSError as exc:
            raise ConfigError(f"cannot read subset file {config.subset}: {exc}") from exc
        series = filter_instruments(series, subset)
    return align_calendars(series, config.fill)


def _build_similarity(clusters: Sequence[Cluster], labels: Sequence[str],
                      theta: float) -> SimilarityMatrix:
    if len(clusters) == 1:
        return SimilarityMatrix(tuple(labels), ((jaccard(clusters[0], clusters[0]),),), theta)
    return similarity_matrix(clusters, labels, theta)


def render_artifacts(
    results: Sequence[WindowResult],
    sim: SimilarityMatrix,
    flags: Sequence[Tuple[str, float]],
    config: RunConfig,
) -> List[Tuple[str, str, str]]:
    """(relative path, artifact class, text) for every output file, in write order."""
    files: List[Tuple[str, str, str]] = []
    emit = set(config.emit)
    if "volatility" in emit:
        files.append(("volatility.csv", "volatility",
                      export.volatility_csv([r.volatility for r in results])))
    if "correlation" in emit:
        for r in results:
            files.append((f"corr_{r.label}.csv", "correlation", export.correlation_csv(r.corr)))
        files.append(("mean_correlation.csv", "correlation",
                      export.mean_correlation_csv([(r.label, r.mean_corr) for r in results])))
    if "network" in emit:
        for r in results:
            files.append((f"network_{r.label}.dot", "network", export.to_dot(r.cluster, r.label)))
            files.append((f"network_{r.label}.graphml", "network",
                          export.to_graphml(r.cluster, r.label)))
    if "metrics" in emit:
        reports = [rep for r in results for rep in r.reports]
        files.append(("metrics.csv", "metrics", export.metrics_csv(reports, config.all_components)))
    if "similarity" in emit:
        files.append(("jaccard.csv", "similarity", export.jaccard_csv(sim)))
        files.append(("regime_flags.txt", "similarity", export.regime_flags_text(flags)))
    return files


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _prepare_destination(output: Path) -> None:
    if output.exists():
        if not output.is_dir():
            raise ConfigError(f"output path {output} exists and is not a directory")
        if any(output.iterdir()) and not (output / "manifest.json").exists():
            raise ConfigError(
                f"output directory {output} is not empty and holds no previous run; refusing to replace it"
            )


def _commit(staging: Path, output: Path) -> None:
    if output.exists():
        retired = Path(tempfile.mkdtemp(dir=output.parent, prefix=f".{output.name}.old-"))
        os.replace(output, retired / output.name)
        os.replace(staging, output)
        shutil.rmtree(retired)
    else:
        os.replace(staging, output)


def run_pipeline(config: RunConfig) -> RunResult:
    """Run every stage and write all artifacts atomically into ``config.output``.

    Files are staged in a sibling temporary directory and renamed into place
    only after everything succeeded, so a failure leaves no partial output.
    """
    output = Path(config.output)
    _prepare_destination(output)
    input_bytes = _read_input_bytes(config.input)
    panel = load_panel(config)
    windows = slice_windows(panel, config.window)

    workers = resolve_workers(config.workers)
    if workers == 1:
        results = [analyse_window(label, prices, config) for label, prices in windows]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda w: analyse_window(w[0], w[1], config), windows))

    labels = [r.label for r in results]
    sim = _build_similarity([r.cluster for r in results], labels, config.theta)
    flags = regime_flags(sim, config.regime_drop) if len(results) >= 2 else []
    files = render_artifacts(results, sim, flags, config)

    manifest: Dict[str, object] = {
        "format": 1,
        "input_sha256": _sha256(input_bytes),
        "config": config.fingerprint(),
        "windows": labels,
        "instruments": list(panel.instruments),
        "artifacts": [],
    }
    try:
        output.parent.mkdir(parents=True, exist_ok=True)
        staging = Path(tempfile.mkdtemp(dir=output.parent, prefix=f".{output.name}.tmp-"))
    except OSError as exc:
        raise ConfigError(f"cannot create output directory next to {output}: {exc}") from exc
    try:
        artifacts = []
        for rel, kind, text in files:
            data = text.encode("utf-8")
            (staging / rel).write_bytes(data)
            artifacts.append({"path": rel, "class": kind, "sha256": _sha256(data),
                              "bytes": len(data)})
        manifest["artifacts"] = artifacts
        (staging / "manifest.json").write_text(
            json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        _commit(staging, output)
    except BaseException:
        shutil.rmtree(staging, ignore_errors=True)
        raise
    return RunResult(output, manifest, results, sim, flags)


def _read_input_bytes(path: Path) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror or exc}") from exc


def load_manifest(path: str | Path) -> Dict[str, object]:
    path = Path(path)
    if path.is_dir():
        path = path / "manifest.json"
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def print_summary(manifest_path: str | Path, out: Optional[TextIO] = None) -> str:
    """Render one row per window: N, M, density, path length, clustering,
    mean correlation and J against the previous window (omitted when the
    run has a single window)."""
    root = Path(manifest_path)
    root = root if root.is_dir() else root.parent
    manifest = load_manifest(root)
    windows = list(manifest["windows"])
    theta = manifest["config"]["theta"]

    reports = export.parse_metrics_csv((root / "metrics.csv").read_text(encoding="utf-8"))
    thetas = [r.theta for r in reports]
    chosen = theta if theta in thetas else (thetas[0] if thetas else theta)
    by_window = {r.window_label: r for r in reports if r.theta == chosen}
    means = export.parse_mean_correlation_csv(
        (root / "mean_correlation.csv").read_text(encoding="utf-8")
    )
    adjacent: List[Optional[float]] = [None] * len(windows)
    show_j = len(windows) > 1
    if show_j:
        sim = export.parse_jaccard_csv((root / "jaccard.csv").read_text(encoding="utf-8"))
        adjacent = [None, *sim.adjacent()]

    header = ["window", "N", "M", "density", "path", "clust", "meanC"] + (["J_prev"] if show_j else [])
    rows = [header]

    def f(x: Optional[float]) -> str:
        return "-" if x is None else f"{x:.3f}"

    for k, label in enumerate(windows):
        rep = by_window.get(label)
        row = [
            label,
            "-" if rep is None else str(rep.n_nodes),
            "-" if rep is None else str(rep.n_edges),
            f(rep.density if rep else None),
            f(rep.path_length if rep else None),
            f(rep.clustering if rep else None),
            f(means.get(label)),
        ]
        if show_j:
            row.append(f(adjacent[k]))
        rows.append(row)
    widths = [max(len(r[c]) for r in rows) for c in range(len(header))]
    text = "\n".join(
        "  ".join(cell.rjust(w) if c else cell.ljust(w) for c, (cell, w) in enumerate(zip(r, widths)))
        for r in rows
    ) + "\n"
    if out is not None:
        out.write(text)
    return text


def _ordered_files(directory: Path, prefix: str, suffix: str) -> List[Tuple[str, Path]]:
    found = {
        p.name[len(prefix):-len(suffix)]: p
        for p in directory.glob(f"{prefix}*{suffix}")
    }
    manifest = directory / "manifest.json"
    if manifest.exists():
        order = [w for w in load_manifest(manifest)["windows"] if w in found]
    else:
        order = sorted(found)
    return [(w, found[w]) for w in order]


def recompute_metrics(
    corr_dir: str | Path,
    thetas: Sequence[float] = (0.3,),
    convention: str = "prose",
    rule: str = "paper",
) -> List[WindowReport]:
    """Window reports from saved ``corr_<window>.csv`` files."""
    directory = Path(corr_dir)
    files = _ordered_files(directory, "corr_", ".csv")
    if not files:
        raise DataError(f"no corr_<window>.csv files in {directory}")
    reports = []
    for label, path in files:
        corr = export.parse_correlation_csv(path.read_text(encoding="utf-8"), label)
        reports.extend(window_report(corr, t, convention, rule) for t in thetas)
    return reports


def recompute_similarity(network_dir: str | Path, drop: float = 0.5
                         ) -> Tuple[SimilarityMatrix, List[Tuple[str, float]]]:
    """Jaccard matrix and regime flags from saved ``network_<window>`` files
    (GraphML preferred, DOT as fallback)."""
    directory = Path(network_dir)
    files = _ordered_files(directory, "network_", ".graphml") or \
        _ordered_files(directory, "network_", ".dot")
    if not files:
        raise DataError(f"no network_<window>.graphml or .dot files in {directory}")
    labels = [label for label, _ in files]
    graphs = [export.read_graph(path) for _, path in files]
    if len(graphs) == 1:
        sim = SimilarityMatrix(tuple(labels), ((jaccard(graphs[0], graphs[0]),),))
        return sim, []
    sim = similarity_matrix(graphs, labels)
    return sim, regime_flags(sim, drop)
