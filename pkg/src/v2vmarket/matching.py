"""Matching algorithms for the market graph.

Three solvers, plus their verification oracles:

* `max_weight_matching`: Kuhn-Munkres labeling method on the padded weight
  matrix.  Exact integer arithmetic throughout; an optional validate mode
  re-checks labeling feasibility after every dual update and tightness of
  every matched edge after every augmentation.
* `consumer_oriented_matching` / `provider_oriented_matching`: deferred
  acceptance over acceptability-filtered preference lists, run in synchronous
  rounds (all free proposers act, then all holders filter).
* `brute_force_max_weight` and `enumerate_stable_matchings`: exhaustive
  oracles used by tests and the `verify` command.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

from .errors import CapacityError, InvariantViolation
from .graph import MarketGraph, Matching
from .money import Money
from .scenario import Scenario
from .utility import TradeEvaluation, station_utilities


# --- max-weight matching -------------------------------------------------------

def km_solve(weights, validate: bool = False) -> Matching:
    """Maximum-weight perfect matching of a square integer matrix.

    Labels start at row maxima on the left and zero on the right, the first
    matched edge is the globally heaviest one (tight by construction), free
    left vertices are processed in ascending index order, and the dual update
    subtracts the minimum slack between the alternating tree and the
    unreached right vertices.
    """
    n = len(weights)
    if any(len(row) != n for row in weights):
        raise ValueError("weight matrix must be square")
    if n == 0:
        return Matching.of([])

    lx = [max(row) for row in weights]
    ly = [0] * n
    match_l = [-1] * n
    match_r = [-1] * n

    def check_feasible() -> None:
        for i in range(n):
            li, row = lx[i], weights[i]
            for j in range(n):
                if li + ly[j] < row[j]:
                    raise InvariantViolation(
                        f"labeling infeasible at ({i}, {j}): "
                        f"{li} + {ly[j]} < {row[j]}"
                    )

    def check_matched_tight() -> None:
        for i in range(n):
            j = match_l[i]
            if j != -1 and lx[i] + ly[j] != weights[i][j]:
                raise InvariantViolation(
                    f"matched edge ({i}, {j}) left the equality graph"
                )

    # Seed with the heaviest edge; the global maximum is also its row's
    # maximum, so the edge is tight under the initial labeling.
    bi = bj = 0
    best = weights[0][0]
    for i in range(n):
        row = weights[i]
        for j in range(n):
            if row[j] > best:
                best, bi, bj = row[j], i, j
    match_l[bi] = bj
    match_r[bj] = bi

    if validate:
        check_feasible()
        check_matched_tight()

    for u in range(n):
        if match_l[u] != -1:
            continue
        in_s = [False] * n
        in_t = [False] * n
        in_s[u] = True
        row_u = weights[u]
        slack = [lx[u] + ly[j] - row_u[j] for j in range(n)]
        way = [u] * n  # tree parent: left vertex realizing slack[j]

        while True:
            j0 = -1
            for j in range(n):
                if not in_t[j] and slack[j] == 0:
                    j0 = j
                    break
            if j0 == -1:
                xi = min(slack[j] for j in range(n) if not in_t[j])
                for i in range(n):
                    if in_s[i]:
                        lx[i] -= xi
                for j in range(n):
                    if in_t[j]:
                        ly[j] += xi
                    else:
                        slack[j] -= xi
                if validate:
                    check_feasible()
                for j in range(n):
                    if not in_t[j] and slack[j] == 0:
                        j0 = j
                        break
            if match_r[j0] == -1:
                # augment along tree parents, flipping matched edges
                j = j0
                while True:
                    i = way[j]
                    nxt = match_l[i]
                    match_l[i] = j
                    match_r[j] = i
                    if i == u:
                        break
                    j = nxt
                if validate:
                    check_matched_tight()
                break
            z = match_r[j0]
            in_t[j0] = True
            in_s[z] = True
            lz, row_z = lx[z], weights[z]
            for j in range(n):
                if not in_t[j]:
                    s = lz + ly[j] - row_z[j]
                    if s < slack[j]:
                        slack[j] = s
                        way[j] = z

    return Matching.of((i, match_l[i]) for i in range(n))


def max_weight_matching(g: MarketGraph, validate: bool = False) -> Matching:
    """Maximum-weight perfect matching of the padded market graph; pairs are
    matrix indices."""
    return km_solve(g.weights, validate=validate)


def brute_force_max_weight(weights) -> tuple[Money, Matching]:
    """Exhaustive permutation oracle for the maximum matching weight."""
    n = len(weights)
    if n > 9:
        raise CapacityError(f"permutation oracle capped at 9x9, got {n}x{n}")
    if n == 0:
        return 0, Matching.of([])
    best = None
    best_perm = None
    for perm in itertools.permutations(range(n)):
        total = 0
        for i in range(n):
            total += weights[i][perm[i]]
        if best is None or total > best:
            best, best_perm = total, perm
    return best, Matching.of((i, best_perm[i]) for i in range(n))


# --- preference lists and deferred acceptance -----------------------------------

@dataclass(frozen=True)
class PreferenceLists:
    """Acceptability-filtered rank lists, best partner first.

    A provider is acceptable to a consumer when the pair is feasible and the
    trade beats the consumer's nearest-station baseline; a consumer is
    acceptable to a provider when the pair is feasible and yields positive
    profit.  Equal utilities order by ascending counterpart id.  Rank maps
    are derived at construction so the proposal loops stay list-setup free.
    """

    consumers: dict[int, tuple[int, ...]]
    providers: dict[int, tuple[int, ...]]
    consumer_ranks: dict[int, dict[int, int]] | None = None
    provider_ranks: dict[int, dict[int, int]] | None = None

    def __post_init__(self) -> None:
        if self.consumer_ranks is None:
            object.__setattr__(self, "consumer_ranks", _ranks(self.consumers))
        if self.provider_ranks is None:
            object.__setattr__(self, "provider_ranks", _ranks(self.providers))


def build_preferences(
    scenario: Scenario, evals: dict[tuple[int, int], TradeEvaluation]
) -> PreferenceLists:
    """Rank acceptable partners for both sides.

    Pairs absent from `evals` are not candidates, which lets callers filter
    the market (e.g. pairings already rejected by the protocol).
    """
    baselines = station_utilities(scenario)
    consumer_lists: dict[int, tuple[int, ...]] = {}
    for c in scenario.consumers:
        base, _ = baselines[c.id]
        ranked = []
        for p in scenario.providers:
            ev = evals.get((c.id, p.id))
            if ev is not None and ev.feasible and ev.u_consumer > base:
                ranked.append((-ev.u_consumer, p.id))
        ranked.sort()
        consumer_lists[c.id] = tuple(pid for _, pid in ranked)
    provider_lists: dict[int, tuple[int, ...]] = {}
    for p in scenario.providers:
        ranked = []
        for c in scenario.consumers:
            ev = evals.get((c.id, p.id))
            if ev is not None and ev.feasible and ev.u_provider > 0:
                ranked.append((-ev.u_provider, c.id))
        ranked.sort()
        provider_lists[p.id] = tuple(cid for _, cid in ranked)
    return PreferenceLists(consumers=consumer_lists, providers=provider_lists)


def _ranks(lists: dict[int, tuple[int, ...]]) -> dict[int, dict[int, int]]:
    return {k: {v: r for r, v in enumerate(lst)} for k, lst in lists.items()}


def _deferred_acceptance(
    proposer_lists: dict[int, tuple[int, ...]],
    receiver_ranks: dict[int, dict[int, int]],
) -> dict[int, int]:
    """Synchronous-round deferred acceptance; returns receiver -> proposer holds.

    Each round every free proposer with options left proposes to the head of
    its remaining list; each receiver keeps the best acceptable offer seen so
    far.  Rejected and displaced proposers strike that receiver off and retry
    in the next round.
    """
    pointer = {p: 0 for p in proposer_lists}
    held_by: dict[int, int] = {}
    frontier = sorted(proposer_lists)

    while frontier:
        proposals: dict[int, list[int]] = {}
        for p in frontier:
            lst = proposer_lists[p]
            if pointer[p] < len(lst):
                proposals.setdefault(lst[pointer[p]], []).append(p)
        if not proposals:
            break
        bumped: list[int] = []
        for r in sorted(proposals):
            r_rank = receiver_ranks.get(r, {})
            best = None
            for p in proposals[r]:
                if p in r_rank and (best is None or r_rank[p] < r_rank[best]):
                    best = p
            current = held_by.get(r)
            if best is not None and (current is None or r_rank[best] < r_rank[current]):
                if current is not None:
                    pointer[current] += 1
                    bumped.append(current)
                held_by[r] = best
                rejected = [p for p in proposals[r] if p != best]
            else:
                rejected = proposals[r]
            for p in rejected:
                pointer[p] += 1
                bumped.append(p)
        frontier = sorted(set(bumped))

    return held_by


def consumer_oriented_matching(prefs: PreferenceLists) -> Matching:
    """Stable matching with consumers proposing; consumer-optimal among all
    stable matchings."""
    held = _deferred_acceptance(prefs.consumers, prefs.provider_ranks)
    return Matching.of((c, p) for p, c in held.items())


def provider_oriented_matching(prefs: PreferenceLists) -> Matching:
    """Stable matching with providers proposing; provider-optimal among all
    stable matchings."""
    held = _deferred_acceptance(prefs.providers, prefs.consumer_ranks)
    return Matching.of((c, p) for c, p in held.items())


# --- stability verification -----------------------------------------------------

@dataclass(frozen=True)
class StabilityResult:
    stable: bool
    violation: tuple[int, int] | None = None


def is_stable(m: Matching, prefs: PreferenceLists) -> StabilityResult:
    """Check individual rationality and the absence of blocking pairs.

    Unmatched counts as worse than any listed partner and better than any
    unlisted one.  On failure the lexicographically first violating
    (consumer, provider) pair is reported.
    """
    partner_c = m.left_to_right()
    partner_p = m.right_to_left()
    rank_c = prefs.consumer_ranks
    rank_p = prefs.provider_ranks
    inf = math.inf

    consumer_ids = sorted(set(prefs.consumers) | set(partner_c))
    provider_ids = sorted(set(prefs.providers) | set(partner_p))

    for i in consumer_ids:
        ranks_i = rank_c.get(i, {})
        cur = partner_c.get(i)
        cur_rank = ranks_i.get(cur, inf) if cur is not None else inf
        for j in provider_ids:
            ranks_j = rank_p.get(j, {})
            if cur == j:
                if j not in ranks_i or i not in ranks_j:
                    return StabilityResult(False, (i, j))
                continue
            if ranks_i.get(j, inf) < cur_rank:
                other = partner_p.get(j)
                other_rank = ranks_j.get(other, inf) if other is not None else inf
                if ranks_j.get(i, inf) < other_rank:
                    return StabilityResult(False, (i, j))
    return StabilityResult(True)


def enumerate_stable_matchings(prefs: PreferenceLists) -> list[Matching]:
    """All stable matchings, by exhaustive enumeration of partial matchings.

    Only mutually acceptable pairs are enumerated: a matching using any other
    pair fails individual rationality and can never be stable.  Guarded to
    min(N, K) <= 7.
    """
    if min(len(prefs.consumers), len(prefs.providers)) > 7:
        raise CapacityError("stable-matching enumeration capped at min(N, K) <= 7")
    rank_p = prefs.provider_ranks
    consumers = sorted(prefs.consumers)
    acceptable = {
        i: [j for j in prefs.consumers[i] if i in rank_p.get(j, {})] for i in consumers
    }
    out: list[Matching] = []

    def rec(idx: int, used: set[int], edges: list[tuple[int, int]]) -> None:
        if idx == len(consumers):
            m = Matching.of(edges)
            if is_stable(m, prefs).stable:
                out.append(m)
            return
        rec(idx + 1, used, edges)
        i = consumers[idx]
        for j in acceptable[i]:
            if j not in used:
                used.add(j)
                edges.append((i, j))
                rec(idx + 1, used, edges)
                edges.pop()
                used.remove(j)

    rec(0, set(), [])
    return out
