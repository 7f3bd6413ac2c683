"""Counter forest: the tree of counters driving the metric algorithms.

Given a 2-separated tree and the piecewise-linear approximation f (slopes
alpha_k, per-piece rises y_k, prefix sums S_k with S_d = infinity), every
tree edge gets an edge counter with capacity equal to its weight, and delay
counter level k is spliced into each leaf-to-root path at the unique gap
where the lower edge weight is <= S_k and the upper edge weight is > S_k
(virtual weight-0 edge below each leaf, virtual infinite edge above the
root).  Insertions are keyed by (tree node, k) and deduplicated across the
paths sharing that node; counters stacked in one gap are ordered bottom-up by
increasing k, and the topmost level d (unbounded capacity) always lands in
the root gap.  An edge counter's slope is the slope of the first delay
counter on its path to the top, which places its capacity in
[S_{k-1}, S_k) for that slope alpha_k.

On a single-point metric the construction degenerates to the plain counter
ladder z_1 -> ... -> z_d, which is exactly how the single-location
algorithms are run.
"""

from __future__ import annotations

import json
import math
from typing import Dict, List, Optional, Tuple

from .delay import PiecewiseLinearDelay
from .embedding import Hst
from .errors import BadParams, MalformedHst, ParseError
from .numeric import Number, format_number, parse_number


class CounterNode:
    __slots__ = ("id", "kind", "level", "hst_node", "slope", "capacity", "parent")

    def __init__(self, id, kind, level, hst_node, slope, capacity, parent):
        self.id = id
        self.kind = kind  # "delay" | "edge"
        self.level = level  # 1-based piece level for delay counters, None for edges
        self.hst_node = hst_node  # gap node for delay counters, child endpoint for edges
        self.slope = slope
        self.capacity = capacity  # None means unbounded
        self.parent = parent  # counter id or None for the top

    def to_json_dict(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind,
            "level": self.level,
            "hst_node": self.hst_node,
            "slope": format_number(self.slope),
            "capacity": None if self.capacity is None else format_number(self.capacity),
            "parent": self.parent,
        }


class CounterForest:
    def __init__(
        self,
        nodes: List[CounterNode],
        entry_for_point: List[int],
        f: PiecewiseLinearDelay,
        hst: Hst,
    ):
        self.nodes = nodes
        self.entry_for_point = entry_for_point
        self.f = f
        self.hst = hst
        self.n = len(nodes)
        self.children: List[List[int]] = [[] for _ in range(self.n)]
        tops = []
        for node in nodes:
            if node.parent is None:
                tops.append(node.id)
            else:
                self.children[node.parent].append(node.id)
        if len(tops) != 1:
            raise BadParams(f"forest must have exactly one top counter, got {tops}")
        self.top = tops[0]
        self.depth = [0] * self.n
        order = [self.top]
        i = 0
        while i < len(order):
            v = order[i]
            for c in self.children[v]:
                self.depth[c] = self.depth[v] + 1
                order.append(c)
            i += 1
        if len(order) != self.n:
            raise BadParams("forest is not connected")
        self.topo_top_down = order
        self.single_location = hst.n_points == 1

    @property
    def d(self) -> int:
        return self.f.d

    def ancestor_chain(self, cid: int) -> List[int]:
        """Counter ids from cid up to and including the top."""
        out = []
        cur: Optional[int] = cid
        while cur is not None:
            out.append(cur)
            cur = self.nodes[cur].parent
        return out

    def to_json_dict(self) -> dict:
        return {
            "d": self.d,
            "top": self.top,
            "entry": self.entry_for_point,
            "nodes": [node.to_json_dict() for node in self.nodes],
        }

    def to_canonical_bytes(self) -> bytes:
        return (json.dumps(self.to_json_dict(), separators=(",", ":")) + "\n").encode()


def _cumulative_placement_weights(hst: Hst) -> List[Optional[Number]]:
    """Experimental alternative reading: leaf-to-edge cumulative distances.

    Each edge's placement weight is the distance from its subtree's
    representative leaf (smallest point index) through the edge.  On the
    random embeddings built here all leaves of a subtree share one weight
    profile, so the value is path-independent; for hand-built trees the
    representative's path wins.
    """
    out: List[Optional[Number]] = [None] * hst.n_nodes
    for v in range(hst.n_nodes):
        if hst.parent[v] is None:
            continue
        rep = hst.leaf_for_point[hst.min_point_below[v]]
        out[v] = hst.weighted_depth[rep] - hst.weighted_depth[hst.parent[v]]
    return out


def build_forest(
    hst: Hst,
    f: PiecewiseLinearDelay,
    edge_weight_mode: str = "single",
) -> CounterForest:
    """Build the counter forest for an embedded tree and approximation f."""
    if edge_weight_mode not in ("single", "cumulative"):
        raise BadParams(f"unknown edge weight mode {edge_weight_mode!r}")
    d = f.d
    S: List[Number] = [f.cumulative_rise(k) for k in range(1, d + 1)]  # S[-1] is inf
    if edge_weight_mode == "single":
        placement = hst.weight
    else:
        placement = _cumulative_placement_weights(hst)

    # Gap contents per tree node: levels k whose prefix S_k fits between some
    # incoming lower edge and the outgoing upper edge at that node.
    gap: Dict[int, List[int]] = {}
    for v in range(hst.n_nodes):
        upper = math.inf if hst.parent[v] is None else placement[v]
        kids = hst.children[v]
        lower = 0 if not kids else min(placement[c] for c in kids)
        levels = [k for k in range(1, d) if lower <= S[k - 1] < upper]
        if hst.parent[v] is None:
            levels.append(d)
        gap[v] = levels

    # Temporary nodes: delay counters keyed (v, k), edge counters keyed by the
    # child endpoint of their tree edge.
    delay_key: Dict[Tuple[int, int], int] = {}
    edge_key: Dict[int, int] = {}
    temp: List[CounterNode] = []

    def add(kind, level, hst_node, slope, capacity):
        node = CounterNode(len(temp), kind, level, hst_node, slope, capacity, None)
        temp.append(node)
        return node.id

    for v in range(hst.n_nodes):
        for k in gap[v]:
            cap = None if k == d else f.rises[k - 1]
            delay_key[(v, k)] = add("delay", k, v, f.alphas[k - 1], cap)
    for v in range(hst.n_nodes):
        if hst.parent[v] is not None:
            edge_key[v] = add("edge", None, v, None, hst.weight[v])

    def above_gap(v: int) -> Optional[int]:
        """Counter directly above node v's gap: v's own edge counter, or None at the top."""
        if hst.parent[v] is None:
            return None
        return edge_key[v]

    for v in range(hst.n_nodes):
        levels = gap[v]
        for lo, hi in zip(levels, levels[1:]):
            temp[delay_key[(v, lo)]].parent = delay_key[(v, hi)]
        if levels:
            temp[delay_key[(v, levels[-1])]].parent = above_gap(v)
        for c in hst.children[v]:
            w = placement[c]
            target = None
            for k in levels:
                if S[k - 1] >= w:
                    target = delay_key[(v, k)]
                    break
            if target is None:
                target = above_gap(v)
            temp[edge_key[c]].parent = target

    # Edge counter slope: slope of the first delay counter on the way up.
    for node in temp:
        if node.kind != "edge":
            continue
        cur = node.parent
        while cur is not None and temp[cur].kind != "delay":
            cur = temp[cur].parent
        if cur is None:
            raise BadParams("edge counter with no delay counter above it")
        node.slope = temp[cur].slope

    entry_temp: List[int] = []
    for p in range(hst.n_points):
        leaf = hst.leaf_for_point[p]
        levels = gap[leaf]
        if levels:
            entry_temp.append(delay_key[(leaf, levels[0])])
        else:
            entry_temp.append(edge_key[leaf])

    # Canonical ids: depth-first preorder from the top; at each counter the
    # delay child (its gap neighbour) comes first, then edge children ordered
    # by the smallest point index under their tree edge.
    kids: List[List[int]] = [[] for _ in temp]
    top_temp = None
    for node in temp:
        if node.parent is None:
            top_temp = node.id
        else:
            kids[node.parent].append(node.id)
    if top_temp is None:
        raise BadParams("forest has no top counter")

    def child_sort_key(cid: int):
        node = temp[cid]
        if node.kind == "delay":
            return (0, node.level)
        return (1, hst.min_point_below[node.hst_node])

    relabel: Dict[int, int] = {}
    stack = [top_temp]
    while stack:
        cur = stack.pop()
        relabel[cur] = len(relabel)
        for c in sorted(kids[cur], key=child_sort_key, reverse=True):
            stack.append(c)

    nodes: List[CounterNode] = [None] * len(temp)  # type: ignore[list-item]
    for node in temp:
        nid = relabel[node.id]
        nodes[nid] = CounterNode(
            nid,
            node.kind,
            node.level,
            node.hst_node,
            node.slope,
            node.capacity,
            None if node.parent is None else relabel[node.parent],
        )
    entry = [relabel[e] for e in entry_temp]
    return CounterForest(nodes, entry, f, hst)


def entry_counter(forest: CounterForest, p: int) -> int:
    """Counter into which requests at point p arrive."""
    if not 0 <= p < len(forest.entry_for_point):
        raise BadParams(f"unknown point {p}")
    return forest.entry_for_point[p]


def verify_forest(forest: CounterForest) -> List[str]:
    """Structural invariant check; returns a list of violations."""
    out: List[str] = []
    f = forest.f
    hst = forest.hst
    d = f.d
    S = [f.cumulative_rise(k) for k in range(0, d + 1)]  # S[0] = 0

    top = forest.nodes[forest.top]
    if top.kind != "delay" or top.level != d or top.capacity is not None:
        out.append("top counter is not the unbounded level-d delay counter")

    for node in forest.nodes:
        if node.kind == "delay":
            if node.slope != f.alphas[node.level - 1]:
                out.append(f"delay counter {node.id} has wrong slope")
            want = None if node.level == d else f.rises[node.level - 1]
            if node.capacity != want:
                out.append(f"delay counter {node.id} has wrong capacity")
        else:
            if node.capacity is None or node.capacity <= 0:
                out.append(f"edge counter {node.id} lacks a positive capacity")
            if node.capacity != hst.weight[node.hst_node]:
                out.append(f"edge counter {node.id} capacity differs from its edge weight")
            cur = node.parent
            while cur is not None and forest.nodes[cur].kind != "delay":
                cur = forest.nodes[cur].parent
            if cur is None:
                out.append(f"edge counter {node.id} has no delay counter above it")
                continue
            k = forest.nodes[cur].level
            if node.slope != f.alphas[k - 1]:
                out.append(f"edge counter {node.id} slope differs from level {k}")
            if not (S[k - 1] <= node.capacity < S[k]):
                out.append(
                    f"edge counter {node.id} capacity {node.capacity} outside "
                    f"[S_{k-1}, S_{k}) for slope level {k}"
                )

    seen_edges = sorted(
        node.hst_node for node in forest.nodes if node.kind == "edge"
    )
    want_edges = sorted(v for v in range(hst.n_nodes) if hst.parent[v] is not None)
    if seen_edges != want_edges:
        out.append("edge counters do not cover the tree edges exactly once")

    for p in range(hst.n_points):
        chain = forest.ancestor_chain(forest.entry_for_point[p])
        levels = [forest.nodes[c].level for c in chain if forest.nodes[c].kind == "delay"]
        if levels != list(range(1, d + 1)):
            out.append(f"path from point {p} sees delay levels {levels}, want 1..{d}")

    for node in forest.nodes:
        if node.parent is not None:
            pn = forest.nodes[node.parent]
            if node.kind == "delay" and pn.kind == "delay" and pn.level <= node.level:
                out.append(f"delay counter {node.id} has non-increasing level above it")
    return out


def forest_from_json_dict(obj: dict, f: PiecewiseLinearDelay, hst: Hst) -> CounterForest:
    try:
        nodes = []
        for rec in obj["nodes"]:
            cap = rec["capacity"]
            nodes.append(
                CounterNode(
                    int(rec["id"]),
                    rec["kind"],
                    rec["level"],
                    rec["hst_node"],
                    parse_number(rec["slope"]),
                    None if cap is None else parse_number(cap),
                    rec["parent"],
                )
            )
        entry = [int(x) for x in obj["entry"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed forest payload: {exc}") from exc
    return CounterForest(nodes, entry, f, hst)
