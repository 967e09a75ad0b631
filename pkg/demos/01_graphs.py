"""Tour of feedback graphs: observability classes and the greedy structures
that the policies are tuned from.

Run with ``python demos/01_graphs.py``.
"""

from graphbandit.graph import (
    FeedbackGraph,
    classify,
    clique_union_graph,
    greedy_clique_partition,
    greedy_independent_set,
    greedy_weak_dominating_set,
    parse_graph,
)


def describe(name: str, g: FeedbackGraph) -> None:
    r = classify(g)
    print(f"{name}: K={g.num_arms}, class={r.graph_class.value}, self-aware={r.is_self_aware}")
    print("  node classes:", " ".join(c.value for c in r.per_node_class))
    if r.graph_class.value == "unobservable":
        print()
        return
    part = greedy_clique_partition(g)
    print(f"  cliques {[list(c) for c in part.cliques]}, no-loop arms {list(part.no_loop)} (kappa={part.kappa})")
    print(f"  greedy independent set {list(greedy_independent_set(g))}")
    if r.weak_nodes:
        ds = greedy_weak_dominating_set(g)
        print(f"  weakly dominating set {list(ds.members)} (d={ds.d})")
    print()


# Plain bandit feedback: every arm only reveals itself.
describe("bandit", clique_union_graph([1, 1, 1, 1]))

# Full information is a single clique.
describe("full information", clique_union_graph([4]))

# Arms 3 and 4 have no self-loop but every other arm watches them, so they
# are still strongly observable.
strong = FeedbackGraph(
    5, [(0, 0), (1, 1), (0, 1), (1, 0), (2, 2)] + [(j, i) for i in (3, 4) for j in range(5) if j != i]
)
describe("strong, not self-aware", strong)

# Graphs can also come from the text format used by the CLI.
weak = parse_graph("""
# arms 3 and 4 are only seen from a single neighbour
5
0 0
1 1
2 2
0 1
1 0
2 0
0 3
1 4
""")
describe("weakly observable", weak)

# Self-loop arms seeing every no-self-loop arm: the bipartite special case.
bipartite = FeedbackGraph(6, [(i, i) for i in range(3)] + [(i, j) for i in range(3) for j in range(3, 6)])
print("bipartite complete:", classify(bipartite).is_directed_complete_bipartite)
describe("directed complete bipartite", bipartite)

# Arm 1 is never observed by anything.
describe("unobservable", FeedbackGraph(2, [(0, 0)]))
