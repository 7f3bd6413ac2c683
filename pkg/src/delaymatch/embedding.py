"""Randomized embedding of a finite metric into a 2-separated rooted tree.

The classic random-shift construction: draw a uniform permutation of the
points and a radius multiplier beta in [1,2); a cluster at scale i collects
points within beta * 2^i (times the minimum-distance scale) of the first
permutation point that covers them.  Subdividing a scale-i cluster hangs each
child by an edge of weight 2^{i+1} (times scale); singletons sit at scale -1.
That weight choice gives exact guarantees checked by verify_embedding:

  - non-contraction: a pair separated when subdividing scale j has tree
    distance 2*(2^{j+2} - 2)*scale >= 2^{j+2}*scale > their metric distance;
  - 2-separation: every child edge is exactly half its parent edge.

Single-cluster scales above the first branching are collapsed (no leaf pair
routes through them); single-child chains below it are kept, since removing
their edges could contract distances.
"""

from __future__ import annotations

import json
import random
from fractions import Fraction
from typing import Dict, List, Optional

from .errors import BadParams, MalformedHst, ParseError
from .instances import MetricSpace
from .numeric import Number, format_number, is_exact, parse_number


class Hst:
    """Rooted weighted tree with points at the leaves; node 0 is the root."""

    def __init__(
        self,
        parent: List[Optional[int]],
        weight: List[Optional[Number]],
        leaf_for_point: List[int],
    ):
        self.parent = list(parent)
        self.weight = list(weight)
        self.leaf_for_point = list(leaf_for_point)
        self.n_nodes = len(parent)
        self.n_points = len(leaf_for_point)
        self.children: List[List[int]] = [[] for _ in range(self.n_nodes)]
        for v, p in enumerate(self.parent):
            if p is not None:
                self.children[p].append(v)
        self.point_at: Dict[int, int] = {}
        for pt, v in enumerate(self.leaf_for_point):
            self.point_at[v] = pt
        self._validate()
        self.hop_depth = [0] * self.n_nodes
        self.weighted_depth: List[Number] = [0] * self.n_nodes
        for v in self._topo_root_down():
            p = self.parent[v]
            if p is not None:
                self.hop_depth[v] = self.hop_depth[p] + 1
                self.weighted_depth[v] = self.weighted_depth[p] + self.weight[v]
        leaves = self.leaf_for_point
        self.hop_height = max((self.hop_depth[v] for v in leaves), default=0)
        self.weighted_height = max((self.weighted_depth[v] for v in leaves), default=0)
        # Smallest point index under each node, used for deterministic orderings.
        self.min_point_below = [self.n_points] * self.n_nodes
        for v in reversed(self._topo_root_down()):
            if v in self.point_at:
                self.min_point_below[v] = min(self.min_point_below[v], self.point_at[v])
            p = self.parent[v]
            if p is not None:
                self.min_point_below[p] = min(
                    self.min_point_below[p], self.min_point_below[v]
                )

    def _validate(self) -> None:
        roots = [v for v, p in enumerate(self.parent) if p is None]
        if roots != [0]:
            raise MalformedHst(f"expected node 0 as the unique root, got roots {roots}")
        seen = [False] * self.n_nodes
        order = [0]
        seen[0] = True
        i = 0
        while i < len(order):
            for c in self.children[order[i]]:
                if seen[c]:
                    raise MalformedHst("cycle in parent array")
                seen[c] = True
                order.append(c)
            i += 1
        if not all(seen):
            raise MalformedHst("disconnected nodes in parent array")
        self._order_cache = order
        for v, p in enumerate(self.parent):
            if p is None:
                if self.weight[v] is not None:
                    raise MalformedHst("root must not carry an edge weight")
            elif self.weight[v] is None or self.weight[v] <= 0:
                raise MalformedHst(f"edge into node {v} needs a positive weight")
        for pt, v in enumerate(self.leaf_for_point):
            if not 0 <= v < self.n_nodes:
                raise MalformedHst(f"point {pt} mapped to unknown node {v}")
            if self.children[v]:
                raise MalformedHst(f"point {pt} mapped to internal node {v}")
        if len(set(self.leaf_for_point)) != self.n_points:
            raise MalformedHst("two points share a leaf")

    def _topo_root_down(self) -> List[int]:
        return self._order_cache

    def tree_distance(self, p: int, q: int) -> Number:
        """Distance between the leaves of points p and q along the tree."""
        if p == q:
            return 0
        a, b = self.leaf_for_point[p], self.leaf_for_point[q]
        total: Number = 0
        while self.hop_depth[a] > self.hop_depth[b]:
            total += self.weight[a]
            a = self.parent[a]
        while self.hop_depth[b] > self.hop_depth[a]:
            total += self.weight[b]
            b = self.parent[b]
        while a != b:
            total += self.weight[a] + self.weight[b]
            a = self.parent[a]
            b = self.parent[b]
        return total

    def to_json_dict(self) -> dict:
        return {
            "n_nodes": self.n_nodes,
            "n_points": self.n_points,
            "parent": [(-1 if p is None else p) for p in self.parent],
            "weight": [("" if w is None else format_number(w)) for w in self.weight],
            "leaf": self.leaf_for_point,
            "hop_height": self.hop_height,
            "height": format_number(self.weighted_height),
        }

    def to_canonical_bytes(self) -> bytes:
        return (json.dumps(self.to_json_dict(), separators=(",", ":")) + "\n").encode()

    @classmethod
    def from_json_dict(cls, obj: dict, *, want_float: bool = False) -> "Hst":
        try:
            parent = [(None if p == -1 else int(p)) for p in obj["parent"]]
            weight = [
                (None if w == "" else parse_number(w, want_float=want_float))
                for w in obj["weight"]
            ]
            leaf = [int(v) for v in obj["leaf"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"malformed tree payload: {exc}") from exc
        return cls(parent, weight, leaf)


class _BuildNode:
    __slots__ = ("children", "weight", "point")

    def __init__(self, weight, point=None):
        self.children: List["_BuildNode"] = []
        self.weight = weight
        self.point = point


def frt_embed(metric: MetricSpace, seed: int) -> Hst:
    """Random-shift embedding of metric; deterministic for a given seed."""
    n = metric.n
    if n < 1:
        raise BadParams("metric must have at least one point")
    if n == 1:
        return Hst([None], [None], [0])
    exact = all(
        is_exact(metric.dist[i][j]) for i in range(n) for j in range(n) if i != j
    )
    dmin = min(metric.dist[i][j] for i in range(n) for j in range(n) if i != j)
    diam = max(metric.dist[i][j] for i in range(n) for j in range(n))
    if dmin <= 0:
        raise BadParams("metric has a non-positive off-diagonal distance")
    top = 0
    reach = dmin
    while reach < diam:
        reach *= 2
        top += 1
    rng = random.Random(seed)
    pi = list(range(n))
    rng.shuffle(pi)
    beta: Number = 1 + Fraction(rng.getrandbits(30), 1 << 30)
    if not exact:
        beta = float(beta)
        dmin_s = float(dmin)
    else:
        dmin_s = dmin

    def center_key(u: int, scale: int) -> int:
        radius = beta * (1 << scale) * dmin_s
        for c in pi:
            if metric.dist[u][c] <= radius:
                return c
        raise AssertionError("every point covers itself")

    def build(points: List[int], scale: int) -> _BuildNode:
        if scale == -1:
            return _BuildNode(None, point=points[0])
        child_scale = scale - 1
        if child_scale == -1:
            parts = [[u] for u in points]
        else:
            groups: Dict[int, List[int]] = {}
            order = []
            for u in points:
                key = center_key(u, child_scale)
                if key not in groups:
                    groups[key] = []
                    order.append(key)
                groups[key].append(u)
            parts = [groups[k] for k in order]
        node = _BuildNode(None)
        edge_w = (1 << (scale + 1)) * dmin_s
        for part in parts:
            child = build(part, child_scale)
            child.weight = edge_w
            node.children.append(child)
        return node

    root = build(sorted(range(n)), top)
    while len(root.children) == 1:
        root = root.children[0]
    root.weight = None
    # Flatten to canonical ids in depth-first preorder.
    parent: List[Optional[int]] = []
    weight: List[Optional[Number]] = []
    leaf_for_point = [0] * n
    stack = [(root, None)]
    while stack:
        node, par = stack.pop()
        vid = len(parent)
        parent.append(par)
        weight.append(node.weight)
        if node.point is not None:
            leaf_for_point[node.point] = vid
        for child in reversed(node.children):
            stack.append((child, vid))
    return Hst(parent, weight, leaf_for_point)


def tree_distance(hst: Hst, p: int, q: int) -> Number:
    return hst.tree_distance(p, q)


def verify_embedding(hst: Hst, metric: MetricSpace) -> dict:
    """Exact non-contraction and 2-separation checks plus stretch statistics."""
    non_contraction = []
    max_stretch = 0.0
    for p in range(metric.n):
        for q in range(p + 1, metric.n):
            d = metric.dist[p][q]
            dt = hst.tree_distance(p, q)
            if dt < d:
                non_contraction.append((p, q, float(d), float(dt)))
            if d > 0:
                max_stretch = max(max_stretch, float(dt) / float(d))
    separation = []
    for v in range(hst.n_nodes):
        if hst.parent[v] is None:
            continue
        for c in hst.children[v]:
            if 2 * hst.weight[c] > hst.weight[v]:
                separation.append((v, c))
    return {
        "non_contraction_violations": non_contraction,
        "separation_violations": separation,
        "max_stretch": max_stretch,
        "ok": not non_contraction and not separation,
    }


def estimate_distortion(metric: MetricSpace, n_seeds: int) -> float:
    """Max over pairs of the mean tree/metric stretch across seeds 0..n_seeds-1."""
    if n_seeds < 1:
        raise BadParams("need at least one seed")
    n = metric.n
    if n < 2:
        return 1.0
    sums = [[0.0] * n for _ in range(n)]
    for seed in range(n_seeds):
        hst = frt_embed(metric, seed)
        for p in range(n):
            for q in range(p + 1, n):
                sums[p][q] += float(hst.tree_distance(p, q)) / float(metric.dist[p][q])
    worst = 0.0
    for p in range(n):
        for q in range(p + 1, n):
            worst = max(worst, sums[p][q] / n_seeds)
    return worst
