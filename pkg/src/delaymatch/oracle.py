"""Exact offline optima for small instances, plus a matching cost evaluator.

Any perfect matching decomposes into independent pairs, and a pair is always
cheapest when matched the moment its later request arrives: waiting longer
only increases both delay terms.  So every pair costs
``dist(p, q) + delay(|arrival gap|)`` and the offline problem collapses to
min-cost perfect matching on those pair costs.

The mono optimum enumerates matchings recursively with branch-and-bound and
is limited to small request counts; the bichromatic optimum is a min-cost
assignment solved by shortest augmenting paths, exact under rational inputs.
Distances are pluggable so the same oracles can cost a matching under the
original metric or under a tree approximation of it.
"""

from __future__ import annotations

import json
import math
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from .errors import (
    IncompatiblePolarity,
    NotPerfectMatching,
    TooLarge,
    Unbalanced,
)
from .instances import Instance, Request
from .numeric import Number, format_number

DistFn = Callable[[int, int], Number]
DelayFn = Callable[[Number], Number]


class OfflineSolution:
    """A perfect matching with its cost split into connection and delay."""

    def __init__(self, pairs: List[Tuple[int, int, Number, Number, Number]]):
        # each pair is (a, b, match_time, rho, kappa) with a the earlier arrival
        self.pairs = pairs
        self.sol_c: Number = sum(p[4] for p in pairs) if pairs else 0
        self.sol_d: Number = sum(p[3] for p in pairs) if pairs else 0
        self.total: Number = self.sol_c + self.sol_d

    def to_json_dict(self) -> dict:
        return {
            "pairs": [
                {
                    "a": a,
                    "b": b,
                    "t": format_number(t),
                    "rho": format_number(rho),
                    "kappa": format_number(kappa),
                }
                for (a, b, t, rho, kappa) in self.pairs
            ],
            "sol_c": format_number(self.sol_c),
            "sol_d": format_number(self.sol_d),
            "total": format_number(self.total),
        }

    def to_canonical_bytes(self) -> bytes:
        return (json.dumps(self.to_json_dict(), separators=(",", ":")) + "\n").encode()


def pair_cost(
    r: Request, r2: Request, dist_fn: DistFn, delay_fn: DelayFn
) -> Tuple[Number, Number, Number, Number]:
    """Cost of matching two requests at the best possible instant.

    Returns (cost, match_time, rho, kappa) where rho is the delay paid by
    the earlier request and kappa the connection cost.
    """
    if r.sign is not None and r2.sign is not None and r.sign == r2.sign:
        raise IncompatiblePolarity(
            f"requests {r.id} and {r2.id} carry the same sign"
        )
    gap = r2.t - r.t
    if gap < 0:
        gap = -gap
    t = r.t if r.t >= r2.t else r2.t
    rho = delay_fn(gap)
    kappa = dist_fn(r.p, r2.p)
    return rho + kappa, t, rho, kappa


def _pair_entry(
    r: Request, r2: Request, dist_fn: DistFn, delay_fn: DelayFn
) -> Tuple[int, int, Number, Number, Number]:
    cost, t, rho, kappa = pair_cost(r, r2, dist_fn, delay_fn)
    a, b = (r, r2) if (r.t, r.id) <= (r2.t, r2.id) else (r2, r)
    return (a.id, b.id, t, rho, kappa)


def eval_solution(
    inst: Instance,
    pairs: Sequence[Tuple[int, int]],
    dist_fn: Optional[DistFn] = None,
    delay_fn: Optional[DelayFn] = None,
) -> OfflineSolution:
    """Cost an explicit matching, timing each pair at its later arrival."""
    if delay_fn is None:
        raise ValueError("delay_fn is required")
    dist_fn = dist_fn or inst.metric.d
    n = len(inst.requests)
    seen = [0] * n
    for a, b in pairs:
        for r in (a, b):
            if not (0 <= r < n):
                raise NotPerfectMatching(f"unknown request id {r}")
            seen[r] += 1
        if a == b:
            raise NotPerfectMatching(f"request {a} paired with itself")
    if any(c != 1 for c in seen):
        missing = [i for i, c in enumerate(seen) if c != 1]
        raise NotPerfectMatching(f"requests covered other than once: {missing}")
    entries = [
        _pair_entry(inst.requests[a], inst.requests[b], dist_fn, delay_fn)
        for a, b in pairs
    ]
    entries.sort(key=lambda e: (e[0], e[1]))
    return OfflineSolution(entries)


def opt_mono(
    inst: Instance,
    dist_fn: Optional[DistFn] = None,
    delay_fn: Optional[DelayFn] = None,
    limit: int = 14,
) -> OfflineSolution:
    """Exact minimum-cost perfect matching over unsigned requests.

    Recursive enumeration: the lowest unmatched request is paired with each
    remaining candidate in ascending cost order; partial sums at or above the
    incumbent are pruned.  Refuses instances larger than `limit` requests.
    """
    if delay_fn is None:
        raise ValueError("delay_fn is required")
    dist_fn = dist_fn or inst.metric.d
    reqs = inst.requests
    n = len(reqs)
    if n % 2 != 0:
        raise Unbalanced(f"odd request count {n}")
    if n > limit:
        raise TooLarge(f"{n} requests exceeds the enumeration limit {limit}")
    if n == 0:
        return OfflineSolution([])
    cost: Dict[Tuple[int, int], Number] = {}
    for i in range(n):
        for j in range(i + 1, n):
            cost[(i, j)] = pair_cost(reqs[i], reqs[j], dist_fn, delay_fn)[0]

    # warm incumbent: repeatedly pair the lowest free request with its
    # cheapest partner, so pruning bites immediately
    free = list(range(n))
    greedy_pairs = []
    greedy_total: Number = 0
    while free:
        a = free.pop(0)
        b = min(free, key=lambda x: (cost[(a, x)], x))
        free.remove(b)
        greedy_pairs.append((a, b))
        greedy_total = greedy_total + cost[(a, b)]

    best_total: Number = greedy_total
    best_pairs: List[Tuple[int, int]] = greedy_pairs
    chosen: List[Tuple[int, int]] = []
    unmatched = set(range(n))

    def descend(acc: Number) -> None:
        nonlocal best_total, best_pairs
        if not unmatched:
            if acc < best_total:
                best_total = acc
                best_pairs = list(chosen)
            return
        a = min(unmatched)
        unmatched.discard(a)
        candidates = sorted(
            (b for b in unmatched), key=lambda b: (cost[(a, b)], b)
        )
        for b in candidates:
            nxt = acc + cost[(a, b)]
            if nxt >= best_total:
                # candidates are cost-sorted and pair costs are nonnegative,
                # so no later candidate can beat the incumbent either
                break
            unmatched.discard(b)
            chosen.append((a, b))
            descend(nxt)
            chosen.pop()
            unmatched.add(b)
        unmatched.add(a)

    descend(0)
    return eval_solution(inst, best_pairs, dist_fn, delay_fn)


def _assignment(cost: List[List[Number]]) -> List[int]:
    """Min-cost assignment by shortest augmenting paths with potentials.

    Returns row_to_col.  Exact when the matrix entries are exact.
    """
    n = len(cost)
    inf = math.inf
    u: List[Number] = [0] * (n + 1)
    v: List[Number] = [0] * (n + 1)
    p = [0] * (n + 1)
    way = [0] * (n + 1)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv: List[Number] = [inf] * (n + 1)
        used = [False] * (n + 1)
        while True:
            used[j0] = True
            i0 = p[j0]
            delta: Number = inf
            j1 = -1
            for j in range(1, n + 1):
                if not used[j]:
                    cur = cost[i0 - 1][j - 1] - u[i0] - v[j]
                    if cur < minv[j]:
                        minv[j] = cur
                        way[j] = j0
                    if minv[j] < delta:
                        delta = minv[j]
                        j1 = j
            for j in range(n + 1):
                if used[j]:
                    u[p[j]] = u[p[j]] + delta
                    v[j] = v[j] - delta
                else:
                    if minv[j] is not inf:
                        minv[j] = minv[j] - delta
            j0 = j1
            if p[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
    row_to_col = [0] * n
    for j in range(1, n + 1):
        if p[j]:
            row_to_col[p[j] - 1] = j - 1
    return row_to_col


def opt_bichromatic(
    inst: Instance,
    dist_fn: Optional[DistFn] = None,
    delay_fn: Optional[DelayFn] = None,
) -> OfflineSolution:
    """Exact minimum-cost polarity-respecting perfect matching."""
    if delay_fn is None:
        raise ValueError("delay_fn is required")
    dist_fn = dist_fn or inst.metric.d
    pos = [r for r in inst.requests if r.sign == "+"]
    neg = [r for r in inst.requests if r.sign == "-"]
    if len(pos) != len(neg):
        raise Unbalanced(f"{len(pos)} positive vs {len(neg)} negative requests")
    if not pos:
        return OfflineSolution([])
    cost = [
        [pair_cost(a, b, dist_fn, delay_fn)[0] for b in neg] for a in pos
    ]
    row_to_col = _assignment(cost)
    pairs = [(pos[i].id, neg[row_to_col[i]].id) for i in range(len(pos))]
    return eval_solution(inst, pairs, dist_fn, delay_fn)
