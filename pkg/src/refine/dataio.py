"""Dataset bundle parsing and report emission.

Bundle layout (TSV, 0-based integer node ids):
    edges.tsv      one "u<TAB>v" line per edge (required)
    features.tsv   one row of tab-separated floats per node (optional)
    labels.tsv     "node<TAB>label" lines (optional)
    splits.tsv     "node<TAB>{train|val|test}" lines (optional)

Directed edges are symmetrized, duplicates merged, and self-loops dropped
(all counted in the load report). Outputs are byte-deterministic: the
rewired edge list is sorted (u < v, then lexicographic) and report.json
is serialized with sorted keys.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import InconsistentNodeCount, ParseError
from .graph import EdgeSet, LabeledGraph

EDGES_FILE = "edges.tsv"
FEATURES_FILE = "features.tsv"
LABELS_FILE = "labels.tsv"
SPLITS_FILE = "splits.tsv"
REWIRED_EDGES_FILE = "rewired_edges.tsv"
REPORT_FILE = "report.json"


@dataclass(frozen=True)
class DatasetBundle:
    """Paths of one dataset directory."""

    directory: Path
    edges: Path
    features: Optional[Path]
    labels: Optional[Path]
    splits: Optional[Path]

    @classmethod
    def at(cls, directory) -> "DatasetBundle":
        d = Path(directory)
        edges = d / EDGES_FILE
        if not edges.is_file():
            raise InconsistentNodeCount(f"missing required {edges}")

        def opt(name: str) -> Optional[Path]:
            p = d / name
            return p if p.is_file() else None

        return cls(d, edges, opt(FEATURES_FILE), opt(LABELS_FILE), opt(SPLITS_FILE))


@dataclass(frozen=True)
class LoadReport:
    nodes: int
    edges: int
    self_loops_dropped: int
    duplicates_merged: int


@dataclass(frozen=True, eq=False)
class LoadedDataset:
    graph: LabeledGraph
    report: LoadReport


def _parse_int(token: str, path, line_no: int, what: str) -> int:
    try:
        value = int(token)
    except ValueError:
        raise ParseError(path, line_no, f"{what} {token!r} is not an integer") from None
    if value < 0:
        raise ParseError(path, line_no, f"{what} {value} is negative")
    return value


def _read_pairs(path) -> tuple[list[tuple[int, int]], int, int, int]:
    raw: list[tuple[int, int]] = []
    self_loops = 0
    max_id = -1
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            fields = line.split()
            if len(fields) != 2:
                raise ParseError(path, line_no, f"expected 2 fields, got {len(fields)}")
            u = _parse_int(fields[0], path, line_no, "node id")
            v = _parse_int(fields[1], path, line_no, "node id")
            max_id = max(max_id, u, v)
            if u == v:
                self_loops += 1
                continue
            raw.append((u, v) if u < v else (v, u))
    dedup = set(raw)
    return sorted(dedup), max_id, self_loops, len(raw) - len(dedup)


def _read_keyed(path, what: str) -> dict[int, str]:
    out: dict[int, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            fields = line.split()
            if len(fields) != 2:
                raise ParseError(path, line_no, f"expected 2 fields, got {len(fields)}")
            node = _parse_int(fields[0], path, line_no, "node id")
            if node in out and out[node] != fields[1]:
                raise ParseError(path, line_no, f"conflicting {what} for node {node}")
            out[node] = fields[1]
    return out


def _read_features(path) -> np.ndarray:
    rows: list[list[float]] = []
    width = None
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            fields = line.split()
            if width is None:
                width = len(fields)
            elif len(fields) != width:
                raise ParseError(path, line_no, f"expected {width} columns, got {len(fields)}")
            try:
                rows.append([float(tok) for tok in fields])
            except ValueError:
                raise ParseError(path, line_no, "non-numeric feature value") from None
    if not rows:
        raise ParseError(path, 1, "features file is empty")
    return np.asarray(rows, dtype=np.float64)


def load_dataset(directory) -> LoadedDataset:
    """Parse a bundle directory into an immutable LabeledGraph."""
    bundle = DatasetBundle.at(directory)
    pairs, max_id, self_loops, duplicates = _read_pairs(bundle.edges)
    label_rows = _read_keyed(bundle.labels, "label") if bundle.labels else {}
    split_rows = _read_keyed(bundle.splits, "split") if bundle.splits else {}
    for node, tag in split_rows.items():
        if tag not in ("train", "val", "test", "none"):
            raise ParseError(bundle.splits, 1, f"unknown split tag {tag!r} for node {node}")
    n = max([max_id] + list(label_rows) + list(split_rows)) + 1
    if n < 1:
        raise InconsistentNodeCount("bundle defines no nodes")
    features = None
    if bundle.features:
        features = _read_features(bundle.features)
        if features.shape[0] != n:
            raise InconsistentNodeCount(
                f"features has {features.shape[0]} rows but max node id implies {n} nodes"
            )
    # Labels are kept as ints when every token parses as one, so that a
    # bundle written by this package round-trips to identical labels.
    labels: list[Optional[object]] = [None] * n
    if label_rows:
        tokens = list(label_rows.values())
        try:
            coerced = {node: int(tok) for node, tok in label_rows.items()}
            use: dict[int, object] = coerced
        except ValueError:
            use = dict(label_rows)
        for node, lab in use.items():
            labels[node] = lab
    split = ["none"] * n
    for node, tag in split_rows.items():
        split[node] = tag
    graph = LabeledGraph(
        n=n,
        edges=EdgeSet(n, frozenset(pairs)),
        labels=tuple(labels),
        features=features,
        split=tuple(split),
    )
    return LoadedDataset(
        graph,
        LoadReport(
            nodes=n,
            edges=len(pairs),
            self_loops_dropped=self_loops,
            duplicates_merged=duplicates,
        ),
    )


def write_edges_tsv(path, edges: EdgeSet) -> None:
    """Sorted (u < v, lexicographic) edge list for reproducible diffs."""
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        for u, v in sorted(edges.pairs):
            fh.write(f"{u}\t{v}\n")


def write_dataset_bundle(directory, g: LabeledGraph) -> None:
    """Emit a graph as a loadable bundle (edges, features, labels, splits)."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    write_edges_tsv(d / EDGES_FILE, g.edges)
    if g.features is not None:
        with open(d / FEATURES_FILE, "w", encoding="ascii", newline="\n") as fh:
            for row in g.features:
                fh.write("\t".join(repr(float(x)) for x in row) + "\n")
    if any(l is not None for l in g.labels):
        with open(d / LABELS_FILE, "w", encoding="ascii", newline="\n") as fh:
            for node, label in enumerate(g.labels):
                if label is not None:
                    fh.write(f"{node}\t{label}\n")
    if any(tag != "none" for tag in g.split):
        with open(d / SPLITS_FILE, "w", encoding="ascii", newline="\n") as fh:
            for node, tag in enumerate(g.split):
                if tag != "none":
                    fh.write(f"{node}\t{tag}\n")


def fraction_payload(value: Optional[Fraction]) -> Optional[dict]:
    """Serialize a rational both ways: exact "num/den" string and float."""
    if value is None:
        return None
    return {
        "fraction": f"{value.numerator}/{value.denominator}",
        "float": float(value),
    }


def emit_report(directory, report: dict, rewired_edges: EdgeSet) -> tuple[Path, Path]:
    """Write report.json and rewired_edges.tsv; byte-identical per input."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    report_path = d / REPORT_FILE
    edges_path = d / REWIRED_EDGES_FILE
    with open(report_path, "w", encoding="ascii", newline="\n") as fh:
        json.dump(report, fh, indent=2, sort_keys=True, ensure_ascii=True)
        fh.write("\n")
    write_edges_tsv(edges_path, rewired_edges)
    return report_path, edges_path
