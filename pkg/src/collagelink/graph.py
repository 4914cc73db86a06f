"""Co-participation graph over identity clusters."""
from __future__ import annotations

import csv
import io
import os
from collections import defaultdict, deque
from dataclasses import dataclass, field
from itertools import combinations
from typing import Dict, FrozenSet, Iterable, List, Mapping, Set, Tuple

from .errors import EmptyGraphError, WriteError

EDGE_HEADER = ("source", "target", "weight")

Edge = Tuple[str, str]


@dataclass
class SocialGraphData:
    nodes: Set[str] = field(default_factory=set)
    edges: Dict[Edge, int] = field(default_factory=dict)
    meeting_index: Dict[str, FrozenSet[str]] = field(default_factory=dict)

    def adjacency(self) -> Dict[str, Set[str]]:
        adj: Dict[str, Set[str]] = {n: set() for n in self.nodes}
        for a, b in self.edges:
            adj[a].add(b)
            adj[b].add(a)
        return adj

    def to_dict(self) -> dict:
        return {
            "nodes": sorted(self.nodes),
            "meetings": {m: sorted(ids) for m, ids in sorted(self.meeting_index.items())},
        }


@dataclass(frozen=True)
class ComponentStats:
    component_count: int = 0
    mean_nodes: float = 0.0
    mean_edges: float = 0.0
    largest_nodes: int = 0
    largest_edges: int = 0


def _edge(a: str, b: str) -> Edge:
    return (a, b) if a < b else (b, a)


def build_social_graph(meetings: Mapping[str, Iterable[str]]) -> SocialGraphData:
    g = SocialGraphData()
    for meeting_id in sorted(meetings):
        ids = frozenset(meetings[meeting_id])
        g.meeting_index[meeting_id] = ids
        g.nodes.update(ids)
        for a, b in combinations(sorted(ids), 2):
            g.edges[(a, b)] = g.edges.get((a, b), 0) + 1
    return g


def connected_components(g: SocialGraphData) -> List[Set[str]]:
    """Maximal connected node sets, ordered by their smallest member."""
    adj = g.adjacency()
    seen: Set[str] = set()
    components = []
    for start in sorted(g.nodes):
        if start in seen:
            continue
        seen.add(start)
        comp = {start}
        queue = deque([start])
        while queue:
            node = queue.popleft()
            for nxt in adj[node]:
                if nxt not in seen:
                    seen.add(nxt)
                    comp.add(nxt)
                    queue.append(nxt)
        components.append(comp)
    return components


def component_edge_counts(g: SocialGraphData, components: List[Set[str]]) -> List[int]:
    owner = {n: i for i, comp in enumerate(components) for n in comp}
    counts = [0] * len(components)
    for a, _ in g.edges:
        counts[owner[a]] += 1
    return counts


def component_stats(g: SocialGraphData) -> ComponentStats:
    if not g.nodes:
        raise EmptyGraphError("graph has no nodes")
    comps = connected_components(g)
    edges = component_edge_counts(g, comps)
    sizes = [len(c) for c in comps]
    # largest by nodes, then edges, then smallest member id (components are already in that id order)
    best = min(range(len(comps)), key=lambda i: (-sizes[i], -edges[i], i))
    return ComponentStats(
        component_count=len(comps),
        mean_nodes=sum(sizes) / len(comps),
        mean_edges=sum(edges) / len(comps),
        largest_nodes=sizes[best],
        largest_edges=edges[best],
    )


def edge_list_text(g: SocialGraphData) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(EDGE_HEADER)
    for (a, b), w in sorted(g.edges.items()):
        writer.writerow((a, b, w))
    return buf.getvalue()


def export_edge_list(g: SocialGraphData, path) -> None:
    """Write ``source,target,weight`` rows sorted by (source, target)."""
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(edge_list_text(g))
    except OSError as exc:
        raise WriteError(f"cannot write edge list to {os.fspath(path)}: {exc}") from exc


def read_edge_list(path) -> SocialGraphData:
    """Load an exported edge list back into a graph (edges and their endpoints only)."""
    g = SocialGraphData()
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if tuple(header or ()) != EDGE_HEADER:
            raise ValueError(f"unexpected edge list header {header!r}")
        for row in reader:
            a, b, w = row
            g.nodes.update((a, b))
            g.edges[_edge(a, b)] = int(w)
    return g
