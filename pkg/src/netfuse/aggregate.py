"""Aggregation of node similarities into community-level summaries.

``shrink`` collapses a similarity matrix onto the groups of a
partition by averaging: between groups over all cross pairs, within a
group over its off-diagonal pairs.  A singleton group has no pairs, so
its within value defaults to 1 and the group is flagged.  ``top_edges``
keeps the strongest share of between-group pairs for display, and
``export_graph`` writes GraphML, GEXF, or a CSV edge list.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
import networkx as nx

from .community import Partition
from .core import SimilarityMatrix
from .errors import ValidationError
from .validation import check_finite, check_symmetric, readonly

EXPORT_FORMATS = ("graphml", "gexf", "csv")


@dataclass(frozen=True)
class GroupMatrix:
    """Group-by-group mean similarity with group sizes.

    The diagonal holds within-group means (1.0 for flagged singletons),
    not self-similarities, so this is deliberately not a
    SimilarityMatrix.
    """

    groups: tuple[int, ...]
    sizes: tuple[int, ...]
    values: np.ndarray = field(repr=False)
    singletons: tuple[int, ...] = ()

    def __post_init__(self):
        g = len(self.groups)
        if len(set(self.groups)) != g:
            raise ValidationError("duplicate group labels")
        if len(self.sizes) != g or self.values.shape != (g, g):
            raise ValidationError(
                f"sizes/values shapes do not match {g} groups: "
                f"{len(self.sizes)}, {self.values.shape}"
            )
        check_finite(self.values, "group matrix")
        check_symmetric(self.values, "group matrix")
        object.__setattr__(self, "values", readonly(self.values))

    def __len__(self) -> int:
        return len(self.groups)


def _group_indicator(sim: SimilarityMatrix, partition) -> tuple[list[int], np.ndarray]:
    if isinstance(partition, Partition):
        mapping = partition.as_dict()
    elif isinstance(partition, Mapping):
        mapping = dict(partition)
    else:
        raise ValidationError("partition must be a Partition or a node -> group mapping")
    missing = [node for node in sim.roster.ids if node not in mapping]
    if missing:
        raise ValidationError(f"partition is missing node {missing[0]!r}")
    groups = sorted({int(mapping[node]) for node in sim.roster.ids})
    group_pos = {g: i for i, g in enumerate(groups)}
    member_of = np.array(
        [group_pos[int(mapping[node])] for node in sim.roster.ids], dtype=np.int64
    )
    z = np.zeros((len(sim), len(groups)), dtype=np.float64)
    z[np.arange(len(sim)), member_of] = 1.0
    return groups, z


def shrink(sim: SimilarityMatrix, partition) -> GroupMatrix:
    """Average a similarity matrix over the groups of a partition."""
    groups, z = _group_indicator(sim, partition)
    sizes = z.sum(axis=0)
    pair_sums = z.T @ sim.values @ z
    counts = np.outer(sizes, sizes)
    # within groups: drop the diagonal (self-similarity) pairs
    np.fill_diagonal(pair_sums, np.diagonal(pair_sums) - sizes)
    np.fill_diagonal(counts, sizes * (sizes - 1.0))
    values = np.zeros_like(pair_sums)
    np.divide(pair_sums, counts, out=values, where=counts > 0)
    singleton_mask = sizes == 1.0
    values[np.diag_indices_from(values)] = np.where(
        singleton_mask, 1.0, np.diagonal(values)
    )
    values = (values + values.T) / 2.0
    singletons = tuple(int(groups[i]) for i in np.flatnonzero(singleton_mask))
    return GroupMatrix(
        tuple(groups), tuple(int(s) for s in sizes), values, singletons
    )


def top_edges(gm: GroupMatrix, fraction: float) -> list[tuple[int, int, float]]:
    """The ceil(fraction * E) heaviest between-group pairs.

    E counts all off-diagonal pairs.  Ties are broken deterministically
    by the pair's group labels, ascending.
    """
    if not 0.0 < fraction <= 1.0:
        raise ValidationError(f"fraction must be in (0, 1], got {fraction}")
    g = len(gm)
    iu, iv = np.triu_indices(g, k=1)
    if iu.size == 0:
        return []
    keep = int(np.ceil(fraction * iu.size))
    weights = gm.values[iu, iv]
    order = sorted(
        range(iu.size), key=lambda t: (-weights[t], gm.groups[iu[t]], gm.groups[iv[t]])
    )
    return [
        (gm.groups[iu[t]], gm.groups[iv[t]], float(weights[t])) for t in order[:keep]
    ]


def community_graph(gm: GroupMatrix, edges: Sequence[tuple[int, int, float]] | None = None) -> nx.Graph:
    """Build the display graph: nodes carry size, edges carry weight."""
    if edges is None:
        iu, iv = np.triu_indices(len(gm), k=1)
        edges = [
            (gm.groups[a], gm.groups[b], float(gm.values[a, b])) for a, b in zip(iu, iv)
        ]
    graph = nx.Graph()
    for g, size in zip(gm.groups, gm.sizes):
        graph.add_node(g, size=int(size))
    for a, b, w in edges:
        graph.add_edge(a, b, weight=float(w))
    return graph


def export_graph(graph: nx.Graph, path, fmt: str = "graphml") -> None:
    """Serialize a display graph; weights survive a round trip exactly.

    GraphML and GEXF keep node attributes; the CSV format is a plain
    source,target,weight edge list with full-precision floats.
    """
    if fmt == "graphml":
        nx.write_graphml(graph, path)
    elif fmt == "gexf":
        nx.write_gexf(graph, path)
    elif fmt == "csv":
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["source", "target", "weight"])
            for a, b, data in sorted(graph.edges(data=True)):
                writer.writerow([a, b, repr(float(data.get("weight", 1.0)))])
    else:
        raise ValidationError(f"unknown export format {fmt!r}, expected {EXPORT_FORMATS}")
