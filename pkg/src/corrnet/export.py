"""Reading and writing the on-disk artifacts.

Number formatting is fixed so repeated runs hash identically: 9
significant digits for correlations and metrics, 6 decimals for Jaccard
values. Absent values are written as empty cells.
"""

from __future__ import annotations

import csv
import io
import re
import xml.etree.ElementTree as ET
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple
from xml.sax.saxutils import quoteattr

import numpy as np

from .correlation import CorrelationMatrix
from .errors import DataError
from .netgraph import Graph, WindowReport, edge_key
from .returns import VolatilityReport
from .similarity import SimilarityMatrix

MEAN_ROW = "__MEAN__"
METRICS_HEADER = ["window", "theta", "N", "M", "density", "path_length", "clustering", "convention"]
COMPONENT_COLUMNS = ["total_nodes", "total_edges", "components"]


def fmt_sig(x: Optional[float], digits: int = 9) -> str:
    if x is None:
        return ""
    text = format(float(x), f".{digits}g")
    return "0" if text == "-0" else text


def fmt_fixed(x: Optional[float], decimals: int = 6) -> str:
    if x is None:
        return ""
    text = format(float(x), f".{decimals}f")
    return text[1:] if text.startswith("-") and float(text) == 0 else text


def _parse_optional(cell: str) -> Optional[float]:
    cell = cell.strip()
    return None if cell == "" else float(cell)


def csv_text(rows: Iterable[Sequence[str]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerows(rows)
    return buf.getvalue()


def _read_rows(text: str) -> List[List[str]]:
    return [row for row in csv.reader(io.StringIO(text)) if row]


# correlation matrices

def correlation_csv(corr: CorrelationMatrix) -> str:
    rows = [["instrument", *corr.instruments]]
    for label, row in zip(corr.instruments, corr.values):
        rows.append([label, *(fmt_sig(x) for x in row)])
    return csv_text(rows)


def parse_correlation_csv(text: str, window_label: str = "") -> CorrelationMatrix:
    rows = _read_rows(text)
    if not rows or len(rows) != len(rows[0]):
        raise DataError("correlation CSV must be square with a header row and column")
    labels = tuple(rows[0][1:])
    if tuple(r[0] for r in rows[1:]) != labels:
        raise DataError("correlation CSV row labels do not match the header")
    try:
        values = np.array([[float(x) for x in r[1:]] for r in rows[1:]])
    except ValueError as exc:
        raise DataError(f"correlation CSV: {exc}") from exc
    # formatting is symmetric, but guard against hand-edited files
    values = np.triu(values) + np.triu(values, 1).T
    return CorrelationMatrix(labels, values, window_label)


def mean_correlation_csv(rows: Sequence[Tuple[str, float]]) -> str:
    return csv_text([["window", "mean"], *([w, fmt_sig(m)] for w, m in rows)])


def parse_mean_correlation_csv(text: str) -> Dict[str, float]:
    return {row[0]: float(row[1]) for row in _read_rows(text)[1:]}


# volatility

def volatility_csv(reports: Sequence[VolatilityReport]) -> str:
    rows = [["window", "instrument", "v"]]
    for rep in reports:
        rows.extend([rep.window_label, label, fmt_sig(v)] for label, v in rep.per_index.items())
        rows.append([rep.window_label, MEAN_ROW, fmt_sig(rep.cross_sectional_mean)])
    return csv_text(rows)


def parse_volatility_csv(text: str) -> Dict[str, Dict[str, float]]:
    out: Dict[str, Dict[str, float]] = {}
    for window, label, v in _read_rows(text)[1:]:
        out.setdefault(window, {})[label] = float(v)
    return out


# metrics

def metrics_csv(reports: Sequence[WindowReport], all_components: bool = False) -> str:
    header = METRICS_HEADER + (COMPONENT_COLUMNS if all_components else [])
    rows = [header]
    for rep in reports:
        row = [
            rep.window_label,
            fmt_sig(rep.theta),
            str(rep.n_nodes),
            str(rep.n_edges),
            fmt_sig(rep.density),
            fmt_sig(rep.path_length),
            fmt_sig(rep.clustering),
            rep.density_convention,
        ]
        if all_components:
            row += [str(rep.total_nodes), str(rep.total_edges), str(rep.n_components)]
        rows.append(row)
    return csv_text(rows)


def parse_metrics_csv(text: str) -> List[WindowReport]:
    rows = _read_rows(text)
    header = rows[0]
    out = []
    for row in rows[1:]:
        rec = dict(zip(header, row))
        out.append(WindowReport(
            window_label=rec["window"],
            theta=float(rec["theta"]),
            n_nodes=int(rec["N"]),
            n_edges=int(rec["M"]),
            density=_parse_optional(rec["density"]),
            path_length=_parse_optional(rec["path_length"]),
            clustering=float(rec["clustering"]),
            density_convention=rec["convention"],
            total_nodes=int(rec.get("total_nodes", 0)),
            total_edges=int(rec.get("total_edges", 0)),
            n_components=int(rec.get("components", 0)),
        ))
    return out


# similarity

def jaccard_csv(sim: SimilarityMatrix) -> str:
    rows = [["window", *sim.window_labels]]
    for label, row in zip(sim.window_labels, sim.values):
        rows.append([label, *(fmt_fixed(x) for x in row)])
    return csv_text(rows)


def parse_jaccard_csv(text: str) -> SimilarityMatrix:
    rows = _read_rows(text)
    labels = tuple(rows[0][1:])
    values = tuple(tuple(_parse_optional(x) for x in r[1:]) for r in rows[1:])
    return SimilarityMatrix(labels, values)


def regime_flags_text(flags: Sequence[Tuple[str, float]]) -> str:
    return "".join(f"{label},{fmt_fixed(j)}\n" for label, j in flags)


# networks

def _weight_text(w: float) -> str:
    return format(float(w), ".17g")


def to_dot(graph: Graph, name: str = "") -> str:
    def q(s: str) -> str:
        return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'

    lines = [f"graph {q(name)} {{"]
    lines += [f"  {q(label)};" for label in graph.nodes]
    for a, b in sorted(graph.edges):
        weight = graph.weights.get((a, b))
        attr = "" if weight is None else f" [weight={_weight_text(weight)}]"
        lines.append(f"  {q(a)} -- {q(b)}{attr};")
    lines.append("}")
    return "\n".join(lines) + "\n"


_DOT_ID = r'"((?:[^"\\]|\\.)*)"'
_DOT_NODE = re.compile(rf"^\s*{_DOT_ID}\s*;\s*$")
_DOT_EDGE = re.compile(rf"^\s*{_DOT_ID}\s*--\s*{_DOT_ID}\s*(?:\[weight=([^\]]+)\])?\s*;\s*$")


def _dot_unquote(s: str) -> str:
    return re.sub(r"\\(.)", r"\1", s)


def parse_dot(text: str) -> Graph:
    """Read back a graph written by :func:`to_dot` (not a general DOT parser)."""
    nodes: List[str] = []
    weights: Dict[Tuple[str, str], float] = {}
    edges = set()
    for line in text.splitlines()[1:]:
        if m := _DOT_EDGE.match(line):
            key = edge_key(_dot_unquote(m[1]), _dot_unquote(m[2]))
            edges.add(key)
            if m[3] is not None:
                weights[key] = float(m[3])
        elif m := _DOT_NODE.match(line):
            nodes.append(_dot_unquote(m[1]))
    return Graph(tuple(nodes), frozenset(edges), weights)


GRAPHML_NS = "http://graphml.graphdrawing.org/xmlns"


def to_graphml(graph: Graph, name: str = "") -> str:
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<graphml xmlns="{GRAPHML_NS}">',
        '  <key id="label" for="node" attr.name="label" attr.type="string"/>',
        '  <key id="weight" for="edge" attr.name="weight" attr.type="double"/>',
        f"  <graph id={quoteattr(name or 'G')} edgedefault=\"undirected\">",
    ]
    for label in graph.nodes:
        lines.append(
            f'    <node id={quoteattr(label)}><data key="label">'
            f"{_xml_text(label)}</data></node>"
        )
    for a, b in sorted(graph.edges):
        weight = graph.weights.get((a, b))
        data = "" if weight is None else f'<data key="weight">{_weight_text(weight)}</data>'
        lines.append(f"    <edge source={quoteattr(a)} target={quoteattr(b)}>{data}</edge>")
    lines += ["  </graph>", "</graphml>"]
    return "\n".join(lines) + "\n"


def _xml_text(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def parse_graphml(text: str) -> Graph:
    ns = {"g": GRAPHML_NS}
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        raise DataError(f"invalid GraphML: {exc}") from exc
    graph = root.find("g:graph", ns)
    if graph is None:
        raise DataError("GraphML file has no <graph> element")
    weight_key = "weight"
    for key in root.findall("g:key", ns):
        if key.get("attr.name") == "weight" and key.get("for") == "edge":
            weight_key = key.get("id", weight_key)
    nodes = tuple(n.get("id") for n in graph.findall("g:node", ns))
    edges = set()
    weights = {}
    for e in graph.findall("g:edge", ns):
        key = edge_key(e.get("source"), e.get("target"))
        edges.add(key)
        for d in e.findall("g:data", ns):
            if d.get("key") == weight_key and d.text:
                weights[key] = float(d.text)
    return Graph(nodes, frozenset(edges), weights)


def read_graph(path: str | Path) -> Graph:
    text = Path(path).read_text(encoding="utf-8")
    if str(path).endswith(".dot"):
        return parse_dot(text)
    return parse_graphml(text)
