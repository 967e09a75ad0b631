"""Directed feedback graphs and the greedy structures the learners rely on.

Playing arm ``i`` reveals the loss of every arm ``j`` with ``(i, j)`` in the
edge set, i.e. every ``j`` whose in-neighbourhood contains ``i``.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np


class GraphFormatError(ValueError):
    """Raised for malformed graph files or invalid edge lists."""


class NodeClass(str, enum.Enum):
    UNOBSERVABLE = "unobservable"
    STRONG = "strong"
    WEAK = "weak"


class GraphClass(str, enum.Enum):
    UNOBSERVABLE = "unobservable"
    STRONGLY_OBSERVABLE = "strongly_observable"
    WEAKLY_OBSERVABLE = "weakly_observable"


@dataclass(frozen=True)
class FeedbackGraph:
    """Directed graph over ``num_arms`` arms, 0-indexed.

    Parameters
    ----------
    num_arms : int
        Number of arms ``K`` (at least 2).
    edges : iterable of (int, int)
        Directed edges ``(i, j)``: playing ``i`` reveals the loss of ``j``.
        ``(i, i)`` is a self-loop.
    """

    num_arms: int
    edges: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        k = int(self.num_arms)
        if k < 2:
            raise GraphFormatError(f"need at least 2 arms, got K={k}")
        edges = frozenset((int(i), int(j)) for i, j in self.edges)
        for i, j in edges:
            if not (0 <= i < k and 0 <= j < k):
                raise GraphFormatError(f"edge ({i}, {j}) out of range for K={k}")
        object.__setattr__(self, "num_arms", k)
        object.__setattr__(self, "edges", edges)

    @cached_property
    def adjacency(self) -> np.ndarray:
        """Boolean matrix ``A`` with ``A[i, j]`` true iff ``(i, j)`` is an edge."""
        a = np.zeros((self.num_arms, self.num_arms), dtype=bool)
        for i, j in self.edges:
            a[i, j] = True
        a.setflags(write=False)
        return a

    @cached_property
    def in_neighbors(self) -> tuple[frozenset, ...]:
        nin = [set() for _ in range(self.num_arms)]
        for i, j in self.edges:
            nin[j].add(i)
        return tuple(frozenset(s) for s in nin)

    @cached_property
    def out_neighbors(self) -> tuple[tuple[int, ...], ...]:
        """Arms revealed by playing each arm, sorted."""
        out = [[] for _ in range(self.num_arms)]
        for i, j in self.edges:
            out[i].append(j)
        return tuple(tuple(sorted(o)) for o in out)

    @cached_property
    def out_neighbor_arrays(self) -> tuple[np.ndarray, ...]:
        out = []
        for o in self.out_neighbors:
            a = np.array(o, dtype=np.intp)
            a.setflags(write=False)
            out.append(a)
        return tuple(out)

    @cached_property
    def self_loop_set(self) -> tuple[int, ...]:
        return tuple(i for i in range(self.num_arms) if (i, i) in self.edges)

    @cached_property
    def no_loop_set(self) -> tuple[int, ...]:
        loops = set(self.self_loop_set)
        return tuple(i for i in range(self.num_arms) if i not in loops)

    @property
    def s(self) -> int:
        return len(self.self_loop_set)

    @property
    def s_bar(self) -> int:
        return len(self.no_loop_set)

    def observation_mass(self, p: np.ndarray) -> np.ndarray:
        """Probability ``W_i = sum_{j in N_in(i)} p_j`` of observing each arm."""
        return np.asarray(p, dtype=float) @ self.adjacency

    def has_edge(self, i: int, j: int) -> bool:
        return (i, j) in self.edges

    def bidirectional(self, i: int, j: int) -> bool:
        return (i, j) in self.edges and (j, i) in self.edges

    def to_text(self) -> str:
        lines = [str(self.num_arms)]
        lines += [f"{i} {j}" for i, j in sorted(self.edges)]
        return "\n".join(lines) + "\n"


def parse_graph(text: str) -> FeedbackGraph:
    """Parse the text graph format.

    The first non-comment line holds ``K``; every following non-empty line is
    a 0-indexed directed edge ``"i j"``. Lines starting with ``#`` are ignored.
    Duplicate edges are dropped with a warning.
    """
    header = None
    edges: list[tuple[int, int]] = []
    seen: set[tuple[int, int]] = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if header is None:
            if len(parts) != 1:
                raise GraphFormatError(f"line {lineno}: expected arm count, got {raw!r}")
            try:
                header = int(parts[0])
            except ValueError:
                raise GraphFormatError(f"line {lineno}: arm count is not an integer") from None
            if header < 2:
                raise GraphFormatError(f"line {lineno}: need K >= 2, got {header}")
            continue
        if len(parts) != 2:
            raise GraphFormatError(f"line {lineno}: expected 'i j', got {raw!r}")
        try:
            i, j = int(parts[0]), int(parts[1])
        except ValueError:
            raise GraphFormatError(f"line {lineno}: non-integer node index") from None
        if not (0 <= i < header and 0 <= j < header):
            raise GraphFormatError(f"line {lineno}: node index out of range for K={header}")
        if (i, j) in seen:
            warnings.warn(f"line {lineno}: duplicate edge ({i}, {j}) ignored", stacklevel=2)
            continue
        seen.add((i, j))
        edges.append((i, j))
    if header is None:
        raise GraphFormatError("empty graph file")
    return FeedbackGraph(header, frozenset(edges))


def load_graph(path) -> FeedbackGraph:
    with open(path, encoding="utf-8") as fh:
        return parse_graph(fh.read())


@dataclass(frozen=True)
class ObservabilityReport:
    per_node_class: tuple[NodeClass, ...]
    graph_class: GraphClass
    is_self_aware: bool
    is_directed_complete_bipartite: bool

    @property
    def weak_nodes(self) -> tuple[int, ...]:
        return tuple(i for i, c in enumerate(self.per_node_class) if c is NodeClass.WEAK)


def classify(g: FeedbackGraph) -> ObservabilityReport:
    k = g.num_arms
    classes = []
    for i in range(k):
        nin = g.in_neighbors[i]
        if not nin:
            classes.append(NodeClass.UNOBSERVABLE)
        elif i in nin or nin == frozenset(range(k)) - {i}:
            classes.append(NodeClass.STRONG)
        else:
            classes.append(NodeClass.WEAK)
    if any(c is NodeClass.UNOBSERVABLE for c in classes):
        gclass = GraphClass.UNOBSERVABLE
    elif all(c is NodeClass.STRONG for c in classes):
        gclass = GraphClass.STRONGLY_OBSERVABLE
    else:
        gclass = GraphClass.WEAKLY_OBSERVABLE
    bipartite = g.s_bar > 0 and all(
        (i, j) in g.edges for i in g.self_loop_set for j in g.no_loop_set
    )
    return ObservabilityReport(
        per_node_class=tuple(classes),
        graph_class=gclass,
        is_self_aware=g.s_bar == 0,
        is_directed_complete_bipartite=bipartite,
    )


@dataclass(frozen=True)
class CliquePartition:
    """Clique partition of the self-loop subgraph plus the meta-node indexing.

    Meta-nodes ``0..kappa-1`` are the cliques; meta-node ``kappa + r`` is the
    ``r``-th arm (in increasing order) without a self-loop.
    """

    cliques: tuple[tuple[int, ...], ...]
    no_loop: tuple[int, ...]
    num_arms: int

    @property
    def kappa(self) -> int:
        return len(self.cliques)

    @property
    def beta(self) -> int:
        return len(self.cliques) + len(self.no_loop)

    @cached_property
    def meta_index(self) -> dict[int, int]:
        idx = {}
        for j, clique in enumerate(self.cliques):
            for i in clique:
                idx[i] = j
        for r, i in enumerate(self.no_loop):
            idx[i] = self.kappa + r
        return idx

    @cached_property
    def arm_meta(self) -> np.ndarray:
        """``arm_meta[i]`` is the meta-node containing arm ``i``."""
        out = np.empty(self.num_arms, dtype=np.intp)
        for i, j in self.meta_index.items():
            out[i] = j
        return out

    def validate(self, g: FeedbackGraph) -> None:
        covered = [i for c in self.cliques for i in c]
        if sorted(covered) != sorted(g.self_loop_set) or len(set(covered)) != len(covered):
            raise GraphFormatError("cliques must partition the self-loop set exactly")
        if tuple(self.no_loop) != g.no_loop_set:
            raise GraphFormatError("no-loop arms do not match the graph")
        for c in self.cliques:
            if not c:
                raise GraphFormatError("empty clique")
            for a in c:
                for b in c:
                    if a != b and not g.bidirectional(a, b):
                        raise GraphFormatError(f"arms {a} and {b} are not mutually connected")


def greedy_clique_partition(g: FeedbackGraph) -> CliquePartition:
    """Lowest-index-first greedy partition of the self-loop arms into cliques.

    Clique membership needs edges in both directions.
    """
    unassigned = list(g.self_loop_set)
    cliques = []
    while unassigned:
        members = [unassigned.pop(0)]
        grown = True
        while grown:
            grown = False
            for cand in unassigned:
                if all(g.bidirectional(cand, m) for m in members):
                    members.append(cand)
                    unassigned.remove(cand)
                    grown = True
                    break
        cliques.append(tuple(sorted(members)))
    return CliquePartition(tuple(cliques), g.no_loop_set, g.num_arms)


@dataclass(frozen=True)
class DominatingSet:
    members: tuple[int, ...]

    @property
    def d(self) -> int:
        return len(self.members)


def greedy_weak_dominating_set(g: FeedbackGraph) -> DominatingSet:
    """Greedy set cover of the weakly observable nodes.

    Each step adds the node revealing the most still-uncovered weak nodes
    (ties to the lowest index). If the graph has self-loop arms and none was
    picked, the lowest-index self-loop arm is appended.
    """
    report = classify(g)
    if report.graph_class is GraphClass.UNOBSERVABLE:
        bad = [i for i, c in enumerate(report.per_node_class) if c is NodeClass.UNOBSERVABLE]
        raise GraphFormatError(f"unobservable nodes {bad}: no dominating set exists")
    uncovered = set(report.weak_nodes)
    chosen: list[int] = []
    while uncovered:
        best, best_cover = -1, 0
        for v in range(g.num_arms):
            cover = sum(1 for w in g.out_neighbors[v] if w in uncovered)
            if cover > best_cover:
                best, best_cover = v, cover
        chosen.append(best)
        uncovered.difference_update(g.out_neighbors[best])
    loops = g.self_loop_set
    if loops and not set(chosen) & set(loops):
        chosen.append(loops[0])
    return DominatingSet(tuple(sorted(chosen)))


def greedy_independent_set(g: FeedbackGraph) -> tuple[int, ...]:
    """Maximal independent set, scanning arms in increasing index order."""
    chosen: list[int] = []
    for i in range(g.num_arms):
        if all(not g.has_edge(i, j) and not g.has_edge(j, i) for j in chosen):
            chosen.append(i)
    return tuple(chosen)


def self_aware_graph(k: int, extra_edges=()) -> FeedbackGraph:
    return FeedbackGraph(k, frozenset([(i, i) for i in range(k)] + list(extra_edges)))


def clique_union_graph(sizes, self_loops: bool = True) -> FeedbackGraph:
    """Disjoint union of complete bidirectional cliques with the given sizes."""
    edges = []
    start = 0
    for size in sizes:
        block = range(start, start + size)
        edges += [(i, j) for i in block for j in block if i != j or self_loops]
        start += size
    return FeedbackGraph(start, frozenset(edges))
