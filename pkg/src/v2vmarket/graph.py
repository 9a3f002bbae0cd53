"""Weighted bipartite market graph with virtual-vertex padding.

Consumers form the left partition and providers the right one.  The matrix is
padded square with virtual vertices whose incident edges carry the scenario's
large negative penalty, so a perfect matching always exists and the max-weight
solver needs no feasibility special-casing.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .money import Money
from .scenario import ConsumerEV, ProviderEV, Scenario
from .utility import TradeEvaluation, evaluate_all_pairs


@dataclass(frozen=True)
class Vertex:
    """Graph vertex: a real EV id or a virtual padding vertex."""

    real: bool
    ev_id: int | None = None


@dataclass(frozen=True)
class Matching:
    """A set of (left, right) pairs with at most one edge per vertex.

    Pairs hold padded matrix indices when produced by the max-weight solver
    and EV ids when produced by the deferred-acceptance algorithms.
    """

    edges: frozenset[tuple[int, int]]

    def __post_init__(self) -> None:
        lefts = [a for a, _ in self.edges]
        rights = [b for _, b in self.edges]
        if len(lefts) != len(set(lefts)) or len(rights) != len(set(rights)):
            raise ValueError("matching touches a vertex more than once")

    @classmethod
    def of(cls, pairs) -> "Matching":
        return cls(edges=frozenset(pairs))

    def pairs(self) -> list[tuple[int, int]]:
        return sorted(self.edges)

    def left_to_right(self) -> dict[int, int]:
        return {a: b for a, b in self.edges}

    def right_to_left(self) -> dict[int, int]:
        return {b: a for a, b in self.edges}

    def __len__(self) -> int:
        return len(self.edges)


@dataclass(frozen=True)
class MarketGraph:
    """Square weighted bipartite graph over (padded) consumers and providers."""

    left: tuple[Vertex, ...]
    right: tuple[Vertex, ...]
    weights: tuple[tuple[Money, ...], ...]
    ne: Money
    evals: dict[tuple[int, int], TradeEvaluation] = field(compare=False)

    @property
    def n(self) -> int:
        return len(self.left)


def build_market_graph(
    scenario: Scenario,
    evals: dict[tuple[int, int], TradeEvaluation] | None = None,
    consumers: tuple[ConsumerEV, ...] | None = None,
    providers: tuple[ProviderEV, ...] | None = None,
    excluded: frozenset[tuple[int, int]] = frozenset(),
) -> MarketGraph:
    """Build the padded market graph.

    `evals` may carry precomputed pair evaluations (keyed by EV ids) so
    protocol rounds over subsets reuse them; `excluded` pairs are demoted to
    the virtual-edge penalty.
    """
    if consumers is None:
        consumers = scenario.consumers
    if providers is None:
        providers = scenario.providers
    if evals is None:
        evals = evaluate_all_pairs(scenario)

    n = max(len(consumers), len(providers))
    left = tuple(
        Vertex(real=True, ev_id=c.id) for c in consumers
    ) + tuple(Vertex(real=False) for _ in range(n - len(consumers)))
    right = tuple(
        Vertex(real=True, ev_id=p.id) for p in providers
    ) + tuple(Vertex(real=False) for _ in range(n - len(providers)))

    ne = scenario.ne
    rows = []
    cell_evals: dict[tuple[int, int], TradeEvaluation] = {}
    for i in range(n):
        row = []
        for j in range(n):
            if i < len(consumers) and j < len(providers):
                ev = evals[(consumers[i].id, providers[j].id)]
                if ev.feasible and (ev.consumer_id, ev.provider_id) not in excluded:
                    row.append(ev.edge_weight)
                    cell_evals[(i, j)] = ev
                else:
                    row.append(ne)
            else:
                row.append(ne)
        rows.append(tuple(row))

    return MarketGraph(left=left, right=right, weights=tuple(rows), ne=ne, evals=cell_evals)


def matching_weight(g: MarketGraph, m: Matching) -> Money:
    """Total weight of a matching given by padded matrix indices."""
    total = 0
    for i, j in m.edges:
        if not (0 <= i < g.n and 0 <= j < g.n):
            raise ValueError(f"edge ({i}, {j}) outside the {g.n}x{g.n} graph")
        total += g.weights[i][j]
    return total


def matrix_text(g: MarketGraph) -> str:
    """Tab-separated integer dump of the weight matrix, one row per line."""
    return "\n".join("\t".join(str(w) for w in row) for row in g.weights) + "\n"
