"""Problem instances: finite metrics plus timestamped (optionally signed) requests.

Canonical form: requests sorted by (arrival, id) with dense ids; numbers are
exact rationals by default.  Euclidean metrics force float arithmetic, which
the file format records via the "arithmetic" discriminator so reloads are
bit-exact in either mode.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence

from .errors import BadParams, ParseError
from .numeric import Number, format_number, is_exact, parse_number

_ARRIVAL_GRID = 10**6  # exact arrivals are drawn on a 1e-6 grid


@dataclass(frozen=True)
class Request:
    id: int
    t: Number
    p: int
    sign: Optional[str] = None  # '+', '-', or None for mono


@dataclass(frozen=True)
class MetricSpace:
    n: int
    dist: tuple  # tuple of tuples, dist[i][j]

    def d(self, i: int, j: int) -> Number:
        return self.dist[i][j]

    @staticmethod
    def from_rows(rows: Sequence[Sequence[Number]]) -> "MetricSpace":
        return MetricSpace(len(rows), tuple(tuple(r) for r in rows))


@dataclass(frozen=True)
class Instance:
    mode: str  # "mono" | "bichromatic"
    metric: MetricSpace
    requests: tuple
    arithmetic: str = "exact"  # "exact" | "float"

    @property
    def n_requests(self) -> int:
        return len(self.requests)

    @property
    def span(self) -> Number:
        if not self.requests:
            return 0
        return max(r.t for r in self.requests)

    def validate(self) -> List[str]:
        return validate(self)

    def to_json_dict(self) -> dict:
        reqs = []
        for r in self.requests:
            rec = {"id": r.id, "t": format_number(r.t), "p": r.p}
            if r.sign is not None:
                rec["sign"] = r.sign
            reqs.append(rec)
        return {
            "mode": self.mode,
            "arithmetic": self.arithmetic,
            "metric": {
                "n": self.metric.n,
                "dist": [[format_number(x) for x in row] for row in self.metric.dist],
            },
            "requests": reqs,
        }

    def to_canonical_bytes(self) -> bytes:
        return (json.dumps(self.to_json_dict(), separators=(",", ":")) + "\n").encode()


def validate(inst: Instance) -> List[str]:
    """Return a list of invariant violations (empty when the instance is valid)."""
    out: List[str] = []
    if inst.mode not in ("mono", "bichromatic"):
        out.append(f"unknown mode {inst.mode!r}")
    if inst.arithmetic not in ("exact", "float"):
        out.append(f"unknown arithmetic {inst.arithmetic!r}")
    m = inst.metric
    if len(m.dist) != m.n or any(len(row) != m.n for row in m.dist):
        out.append("metric matrix is not n x n")
        return out
    want_exact = inst.arithmetic == "exact"
    for i in range(m.n):
        if m.dist[i][i] != 0:
            out.append(f"nonzero diagonal at {i}")
        for j in range(m.n):
            x = m.dist[i][j]
            if is_exact(x) != want_exact and x != 0:
                out.append(f"distance ({i},{j}) has wrong arithmetic class")
            if j < i and m.dist[i][j] != m.dist[j][i]:
                out.append(f"asymmetric distance at ({i},{j})")
            if i != j and x <= 0:
                out.append(f"non-positive distance at ({i},{j})")
    for i in range(m.n):
        for j in range(m.n):
            for k in range(m.n):
                if float(m.dist[i][k]) > float(m.dist[i][j]) + float(m.dist[j][k]) + 1e-9:
                    out.append(f"triangle violation at ({i},{j},{k})")
    n_req = len(inst.requests)
    prev_t = None
    pos = neg = 0
    for idx, r in enumerate(inst.requests):
        if r.id != idx:
            out.append(f"ids not dense/sorted at position {idx}")
        if r.t < 0:
            out.append(f"negative arrival for request {r.id}")
        if is_exact(r.t) != want_exact and r.t != 0:
            out.append(f"arrival of request {r.id} has wrong arithmetic class")
        if prev_t is not None and r.t < prev_t:
            out.append(f"arrivals out of order at request {r.id}")
        prev_t = r.t
        if not (0 <= r.p < m.n):
            out.append(f"request {r.id} at unknown point {r.p}")
        if inst.mode == "mono":
            if r.sign is not None:
                out.append(f"mono instance has signed request {r.id}")
        else:
            if r.sign == "+":
                pos += 1
            elif r.sign == "-":
                neg += 1
            else:
                out.append(f"bichromatic request {r.id} lacks a sign")
    if n_req % 2 != 0:
        out.append("odd number of requests")
    if inst.mode == "bichromatic" and pos != neg:
        out.append(f"unbalanced polarities: {pos} positive vs {neg} negative")
    return out


def gen_greedy_bad(m: int, eps: Number, bichromatic: bool = False) -> Instance:
    """Single-point stream on which instant matching pays ~2m times optimum.

    Arrivals are {0} union {i, i+eps : i = 1..2m-1} union {2m}: 4m requests.
    The bichromatic variant alternates signs in arrival order, first positive.
    """
    if m < 1:
        raise BadParams("m must be at least 1")
    eps = eps if isinstance(eps, Fraction) else Fraction(eps)
    if not 0 < eps < 1:
        raise BadParams("eps must lie strictly between 0 and 1")
    times: List[Fraction] = [Fraction(0)]
    for i in range(1, 2 * m):
        times.append(Fraction(i))
        times.append(Fraction(i) + eps)
    times.append(Fraction(2 * m))
    times.sort()
    reqs = []
    for idx, t in enumerate(times):
        sign = ("+" if idx % 2 == 0 else "-") if bichromatic else None
        reqs.append(Request(idx, t, 0, sign))
    metric = MetricSpace.from_rows([[Fraction(0)]])
    return Instance("bichromatic" if bichromatic else "mono", metric, tuple(reqs))


def _tree_metric(rng: random.Random, n: int) -> MetricSpace:
    parent = [0] * n
    weight = [Fraction(0)] * n
    for i in range(1, n):
        parent[i] = rng.randrange(i)
        weight[i] = Fraction(rng.randint(1, 1000), 1000)
    depth_w = [Fraction(0)] * n
    for i in range(1, n):
        depth_w[i] = depth_w[parent[i]] + weight[i]

    def anc_chain(i):
        chain = {}
        d = 0
        while True:
            chain[i] = d
            if i == 0:
                return chain
            d += 1
            i = parent[i]

    rows = [[Fraction(0)] * n for _ in range(n)]
    for i in range(n):
        ci = anc_chain(i)
        for j in range(i + 1, n):
            a = j
            while a not in ci:
                a = parent[a]
            dist = depth_w[i] + depth_w[j] - 2 * depth_w[a]
            rows[i][j] = rows[j][i] = dist
    return MetricSpace.from_rows(rows)


def gen_random(
    n_points: int,
    n_requests: int,
    seed: int,
    mode: str = "mono",
    time_span: Number = 10,
    metric_kind: str = "uniform",
) -> Instance:
    """Seed-deterministic random instance; same seed gives identical bytes."""
    if n_points < 1:
        raise BadParams("need at least one point")
    if n_requests < 2 or n_requests % 2 != 0:
        raise BadParams("request count must be even and at least 2")
    if mode not in ("mono", "bichromatic"):
        raise BadParams(f"unknown mode {mode!r}")
    if time_span <= 0:
        raise BadParams("time span must be positive")
    rng = random.Random(seed)
    arithmetic = "exact"
    if metric_kind == "uniform":
        rows = [
            [Fraction(0) if i == j else Fraction(1) for j in range(n_points)]
            for i in range(n_points)
        ]
        metric = MetricSpace.from_rows(rows)
    elif metric_kind == "random_tree":
        metric = _tree_metric(rng, n_points)
    elif metric_kind == "euclidean_plane":
        arithmetic = "float"
        while True:
            pts = [(rng.random(), rng.random()) for _ in range(n_points)]
            rows = [
                [math.hypot(a[0] - b[0], a[1] - b[1]) for b in pts] for a in pts
            ]
            ok = all(
                rows[i][j] > 0 for i in range(n_points) for j in range(n_points) if i != j
            )
            if ok:
                break
        metric = MetricSpace.from_rows(rows)
    else:
        raise BadParams(f"unknown metric kind {metric_kind!r}")
    span = time_span if isinstance(time_span, Fraction) else Fraction(time_span)
    if arithmetic == "exact":
        times: List[Number] = [
            Fraction(rng.randrange(_ARRIVAL_GRID + 1), _ARRIVAL_GRID) * span
            for _ in range(n_requests)
        ]
    else:
        times = [rng.random() * float(span) for _ in range(n_requests)]
    points = [rng.randrange(n_points) for _ in range(n_requests)]
    signs: List[Optional[str]]
    if mode == "bichromatic":
        signs = ["+"] * (n_requests // 2) + ["-"] * (n_requests // 2)
        rng.shuffle(signs)
    else:
        signs = [None] * n_requests
    order = sorted(range(n_requests), key=lambda i: (times[i], i))
    reqs = tuple(
        Request(idx, times[i], points[i], signs[i]) for idx, i in enumerate(order)
    )
    return Instance(mode, metric, reqs, arithmetic)


def save(inst: Instance, path: str) -> None:
    with open(path, "wb") as fh:
        fh.write(inst.to_canonical_bytes())


def load(path: str) -> Instance:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read instance {path}: {exc}") from exc
    return from_json_dict(obj)


def from_json_dict(obj: dict) -> Instance:
    try:
        mode = obj["mode"]
        arithmetic = obj.get("arithmetic", "exact")
        want_float = arithmetic == "float"
        mrec = obj["metric"]
        rows = [
            [parse_number(x, want_float=want_float) for x in row] for row in mrec["dist"]
        ]
        metric = MetricSpace(int(mrec["n"]), tuple(tuple(r) for r in rows))
        reqs = []
        for rec in obj["requests"]:
            reqs.append(
                Request(
                    int(rec["id"]),
                    parse_number(rec["t"], want_float=want_float),
                    int(rec["p"]),
                    rec.get("sign"),
                )
            )
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed instance: {exc}") from exc
    inst = Instance(mode, metric, tuple(reqs), arithmetic)
    problems = validate(inst)
    if problems:
        raise ParseError("invalid instance: " + "; ".join(problems))
    return inst
