"""Event-driven simulation of the counter algorithms and the greedy baseline.

All four counter algorithms run on one engine over a counter forest; the
single-location variants use the degenerate single-point forest (a plain
ladder), which makes their equivalence with the metric variants on one-point
metrics literal rather than approximate.

Mechanics shared by every run:
  - counters grow linearly between events, so the next fill time is exact;
  - a counter is active only while it holds a request and its parity/surplus
    condition holds (mono: an odd number of requests in its subtree;
    signed: the subtree surplus points its way, with rate scaled by the
    surplus magnitude);
  - two requests on one counter (opposite signs when signed) match instantly
    with connection cost equal to the tree distance of their points;
  - a counter reaching capacity moves its earliest-arrived request to its
    parent and resets (both twins reset in signed runs); counters keep their
    level when requests match away, so a counter left exactly at capacity
    passes its next occupant through immediately.

Determinism at shared instants: arrivals in id order, then matches (earliest
arrivals first), then fills deepest-in-forest first breaking ties by counter
id then positive twin first, re-running the match sweep after each fill.

Arithmetic is exact rational when the instance and approximation are; float
otherwise, with fills detected at capacity minus 1e-12.  Identical inputs
produce byte-identical serialized results.
"""

from __future__ import annotations

import json
from typing import Callable, Dict, List, Optional

from .delay import ConcaveDelaySpec, PiecewiseLinearDelay
from .embedding import Hst, frt_embed
from .errors import AuditFailure, BadParams, Unterminated
from .forest import CounterForest, build_forest
from .instances import Instance
from .numeric import FILL_EPS, Number, format_number


class MatchedPair:
    __slots__ = ("a", "b", "t", "connection")

    def __init__(self, a: int, b: int, t: Number, connection: Number):
        self.a = a
        self.b = b
        self.t = t
        self.connection = connection


class RunResult:
    """Full account of one run: pairing, cost ledger, counters, assertions."""

    def __init__(
        self,
        exact: bool,
        n_requests: int,
        pairs: List[MatchedPair],
        match_time: List[Number],
        delay_f: Optional[Number],
        delay_D: Optional[Number],
        connection: Number,
        counter_increase: Number,
        event_count: int,
        intervals: Dict[int, List[int]],
        violations: List[str],
        trace: Optional[List[dict]] = None,
    ):
        self.exact = exact
        self.n_requests = n_requests
        self.pairs = pairs
        self.match_time = match_time
        self.delay_f = delay_f
        self.delay_D = delay_D
        self.connection = connection
        self.counter_increase = counter_increase
        self.event_count = event_count
        self.intervals = intervals
        self.violations = violations
        self.trace = trace

    def to_json_dict(self) -> dict:
        out = {
            "exact": self.exact,
            "n_requests": self.n_requests,
            "pairs": [
                {
                    "a": p.a,
                    "b": p.b,
                    "t": format_number(p.t),
                    "conn": format_number(p.connection),
                }
                for p in self.pairs
            ],
            "match_time": [format_number(t) for t in self.match_time],
            "totals": {
                "delay_f": None if self.delay_f is None else format_number(self.delay_f),
                "delay_D": None if self.delay_D is None else format_number(self.delay_D),
                "connection": format_number(self.connection),
                "counter_increase": format_number(self.counter_increase),
            },
            "event_count": self.event_count,
            "intervals": {str(k): v for k, v in sorted(self.intervals.items())},
            "violations": self.violations,
        }
        if self.trace is not None:
            out["trace"] = self.trace
        return out

    def to_canonical_bytes(self) -> bytes:
        return (json.dumps(self.to_json_dict(), separators=(",", ":")) + "\n").encode()


def _validated(inst: Instance, mode: str, single_point: Optional[bool] = None) -> None:
    problems = inst.validate()
    if problems:
        raise BadParams("invalid instance: " + "; ".join(problems))
    if inst.mode != mode:
        raise BadParams(f"this algorithm needs a {mode} instance, got {inst.mode}")
    if single_point and inst.metric.n != 1:
        raise BadParams("single-location algorithm on a multi-point metric")


class _CounterSim:
    def __init__(
        self,
        forest: CounterForest,
        inst: Instance,
        delay_spec: Optional[ConcaveDelaySpec],
        bi: bool,
        pair_dist: Callable[[int, int], Number],
        trace: bool,
        strict: bool,
    ):
        f = forest.f
        self.exact = inst.arithmetic == "exact" and f.exact
        conv = (lambda x: x) if self.exact else float
        self.conv = conv
        self.f = f if self.exact else f.to_float()
        self.delay_spec = delay_spec
        self.bi = bi
        self.strict = strict
        self.forest = forest
        self.n_signs = 2 if bi else 1
        nc = forest.n
        self.slope = [conv(node.slope) for node in forest.nodes]
        self.cap = [
            None if node.capacity is None else conv(node.capacity)
            for node in forest.nodes
        ]
        self.parent = [node.parent for node in forest.nodes]
        self.children = forest.children
        self.depth = forest.depth
        self.topo = forest.topo_top_down
        self.entry = forest.entry_for_point
        self.chain = {e: forest.ancestor_chain(e) for e in set(self.entry)}
        self.reqs = inst.requests
        self.arr = [conv(r.t) for r in inst.requests]
        self.point = [r.p for r in inst.requests]
        self.sidx = [0 if (r.sign is None or r.sign == "+") else 1 for r in inst.requests]
        if self.exact:
            self.pair_dist = pair_dist
        else:
            self.pair_dist = lambda p, q: float(pair_dist(p, q))
        zero = conv(0)
        self.zero = zero
        self.level = [[zero] * self.n_signs for _ in range(nc)]
        self.occ: List[List[List[int]]] = [
            [[] for _ in range(self.n_signs)] for _ in range(nc)
        ]
        self.closed: List[List[int]] = [[] for _ in range(nc)]
        self.cur_count = [0] * nc
        self.matched_in = [0] * nc
        self.pairs: List[MatchedPair] = []
        self.match_time: List[Optional[Number]] = [None] * len(inst.requests)
        self.delay_f = zero
        self.connection = zero
        self.counter_increase = zero
        self.events = 0
        self.violations: List[str] = []
        self.trace: Optional[List[dict]] = [] if trace else None
        self.budget = 10 * (len(inst.requests) * max(nc, 1) + len(inst.requests) + 10)

    # -- state inspection -------------------------------------------------

    def _counts(self) -> List[List[int]]:
        cnt = [[len(self.occ[i][s]) for s in range(self.n_signs)] for i in range(len(self.slope))]
        for i in reversed(self.topo):
            p = self.parent[i]
            if p is not None:
                for s in range(self.n_signs):
                    cnt[p][s] += cnt[i][s]
        return cnt

    def _rates(self) -> List[List[Number]]:
        cnt = self._counts()
        rates = []
        for i in range(len(self.slope)):
            if self.bi:
                sur = cnt[i][0] - cnt[i][1]
                rp = self.slope[i] * sur if (self.occ[i][0] and sur > 0) else self.zero
                rn = self.slope[i] * (-sur) if (self.occ[i][1] and sur < 0) else self.zero
                rates.append([rp, rn])
            else:
                active = bool(self.occ[i][0]) and cnt[i][0] % 2 == 1
                rates.append([self.slope[i] if active else self.zero])
        return rates

    def _fill_ready(self, i: int, s: int) -> bool:
        cap = self.cap[i]
        if cap is None or not self.occ[i][s]:
            return False
        threshold = cap if self.exact else cap - FILL_EPS
        return self.level[i][s] >= threshold

    # -- event processing -------------------------------------------------

    def _note(self, t, kind, counter, requests, levels_before=None):
        if self.trace is None:
            return
        after = None
        if counter is not None:
            after = [format_number(v) for v in self.level[counter]]
        if levels_before is None:
            levels_before = after
        self.trace.append(
            {
                "t": format_number(t),
                "kind": kind,
                "counter": counter,
                "requests": list(requests),
                "level_before": levels_before,
                "level_after": after,
            }
        )

    def _match(self, a: int, b: int, counter: int, t) -> None:
        if (self.arr[b], b) < (self.arr[a], a):
            a, b = b, a
        conn = self.pair_dist(self.point[a], self.point[b])
        self.pairs.append(MatchedPair(a, b, t, conn))
        self.match_time[a] = t
        self.match_time[b] = t
        self.delay_f = self.delay_f + self.f.value(t - self.arr[a]) + self.f.value(
            t - self.arr[b]
        )
        self.connection = self.connection + conn
        for z in self.chain_of(counter):
            self.matched_in[z] += 2
        self.events += 1
        self._note(t, "match", counter, [a, b])

    def chain_of(self, counter: int) -> List[int]:
        chain = []
        cur: Optional[int] = counter
        while cur is not None:
            chain.append(cur)
            cur = self.parent[cur]
        return chain

    def _cascade(self, t) -> None:
        for i in range(len(self.slope)):
            if self.bi:
                pos = sorted(self.occ[i][0], key=lambda r: (self.arr[r], r))
                neg = sorted(self.occ[i][1], key=lambda r: (self.arr[r], r))
                while pos and neg:
                    self._match(pos.pop(0), neg.pop(0), i, t)
                self.occ[i][0] = pos
                self.occ[i][1] = neg
            else:
                lst = sorted(self.occ[i][0], key=lambda r: (self.arr[r], r))
                while len(lst) >= 2:
                    self._match(lst.pop(0), lst.pop(0), i, t)
                self.occ[i][0] = lst

    def _fills(self, t) -> None:
        while True:
            best = None
            best_key = None
            for i in range(len(self.slope)):
                for s in range(self.n_signs):
                    if self._fill_ready(i, s):
                        key = (-self.depth[i], i, s)
                        if best_key is None or key < best_key:
                            best_key = key
                            best = (i, s)
            if best is None:
                return
            i, s = best
            before = [format_number(v) for v in self.level[i]] if self.trace is not None else None
            mover = min(self.occ[i][s], key=lambda r: (self.arr[r], r))
            self.occ[i][s].remove(mover)
            self.closed[i].append(self.cur_count[i])
            self.cur_count[i] = 0
            for sg in range(self.n_signs):
                self.level[i][sg] = self.zero
            p = self.parent[i]
            self.occ[p][s].append(mover)
            self.events += 1
            self._note(t, "fill", i, [mover], levels_before=before)
            self._cascade(t)

    def _quiescence(self, t) -> None:
        for i in range(len(self.slope)):
            if self.bi:
                if self.occ[i][0] and self.occ[i][1]:
                    self.violations.append(
                        f"t={format_number(t)}: opposite requests coexist on counter {i}"
                    )
            else:
                if len(self.occ[i][0]) > 1:
                    self.violations.append(
                        f"t={format_number(t)}: counter {i} holds multiple requests"
                    )
            cap = self.cap[i]
            if cap is None:
                continue
            slack = 0 if self.exact else FILL_EPS
            for s in range(self.n_signs):
                if self.level[i][s] > cap + slack:
                    self.violations.append(
                        f"t={format_number(t)}: counter {i} level above capacity"
                    )
                if self.occ[i][s] and self._fill_ready(i, s):
                    self.violations.append(
                        f"t={format_number(t)}: unprocessed fill on counter {i}"
                    )

    def run(self) -> RunResult:
        idx = 0
        n = len(self.reqs)
        t = self.zero
        while True:
            rates = self._rates()
            t_fill = None
            for i in range(len(self.slope)):
                cap = self.cap[i]
                if cap is None:
                    continue
                for s in range(self.n_signs):
                    r = rates[i][s]
                    if r > 0:
                        rem = cap - self.level[i][s]
                        if rem < 0:
                            rem = self.zero
                        tf = t + rem / r
                        if t_fill is None or tf < t_fill:
                            t_fill = tf
            t_arr = self.arr[idx] if idx < n else None
            pending = any(
                self.occ[i][s] for i in range(len(self.slope)) for s in range(self.n_signs)
            )
            if t_arr is None and not pending:
                break
            if t_arr is None and t_fill is None:
                raise Unterminated("requests pending but no counter can make progress")
            if t_fill is None or (t_arr is not None and t_arr <= t_fill):
                t_next = t_arr
            else:
                t_next = t_fill
            dt = t_next - t
            if dt > 0:
                for i in range(len(self.slope)):
                    for s in range(self.n_signs):
                        r = rates[i][s]
                        if r > 0:
                            if not self.occ[i][s]:
                                self.violations.append(
                                    f"t={format_number(t)}: counter {i} grows while empty"
                                )
                            self.level[i][s] = self.level[i][s] + r * dt
                            self.counter_increase = self.counter_increase + r * dt
            t = t_next
            while idx < n and self.arr[idx] == t:
                r = idx
                e = self.entry[self.point[r]]
                self.occ[e][self.sidx[r]].append(r)
                for z in self.chain[e]:
                    self.cur_count[z] += 1
                self.events += 1
                self._note(t, "arrival", e, [r])
                idx += 1
            self._cascade(t)
            self._fills(t)
            self._quiescence(t)
            if self.events > self.budget:
                raise Unterminated("event budget exceeded; simulation is not converging")
        return self._finish()

    # -- wrap-up ----------------------------------------------------------

    def _parity_checks(self, intervals: Dict[int, List[int]]) -> None:
        single = self.forest.single_location
        for i, counts in intervals.items():
            total = sum(counts)
            boundaries = len(counts) - 1
            if total != self.matched_in[i] + boundaries:
                self.violations.append(
                    f"counter {i}: arrivals {total} != matched-inside {self.matched_in[i]}"
                    f" + move-ups {boundaries}"
                )
            if not self.bi:
                for j, c in enumerate(counts[:-1]):
                    if c % 2 == 0:
                        self.violations.append(
                            f"counter {i}: completed interval {j} saw {c} arrivals (even)"
                        )
                if counts[-1] % 2 == 1:
                    self.violations.append(
                        f"counter {i}: final interval saw {counts[-1]} arrivals (odd)"
                    )
                if single and len(counts) % 2 == 0:
                    self.violations.append(
                        f"counter {i}: even interval count {len(counts)}"
                    )
            elif single:
                if len(counts) % 2 == 0:
                    self.violations.append(
                        f"counter {i}: even interval count {len(counts)}"
                    )

    def _finish(self) -> RunResult:
        intervals: Dict[int, List[int]] = {}
        for i in range(len(self.slope)):
            intervals[i] = self.closed[i] + [self.cur_count[i]]
        self._parity_checks(intervals)
        delay_D = None
        if self.delay_spec is not None:
            delay_D = 0
            for r in range(len(self.reqs)):
                delay_D = delay_D + self.delay_spec.value(self.match_time[r] - self.arr[r])
        result = RunResult(
            exact=self.exact,
            n_requests=len(self.reqs),
            pairs=self.pairs,
            match_time=self.match_time,  # type: ignore[arg-type]
            delay_f=self.delay_f,
            delay_D=delay_D,
            connection=self.connection,
            counter_increase=self.counter_increase,
            event_count=self.events,
            intervals=intervals,
            violations=self.violations,
            trace=self.trace,
        )
        if self.strict and self.violations:
            raise AuditFailure("; ".join(self.violations))
        return result


def _single_point_forest(inst: Instance, f: PiecewiseLinearDelay) -> CounterForest:
    return build_forest(frt_embed(inst.metric, 0), f)


def run_sla(
    inst: Instance,
    f: PiecewiseLinearDelay,
    delay_spec: Optional[ConcaveDelaySpec] = None,
    *,
    strict: bool = False,
    trace: bool = False,
) -> RunResult:
    """Single-location mono counter ladder."""
    _validated(inst, "mono", single_point=True)
    forest = _single_point_forest(inst, f)
    sim = _CounterSim(
        forest, inst, delay_spec, False, forest.hst.tree_distance, trace, strict
    )
    return sim.run()


def run_ma(
    inst: Instance,
    hst: Hst,
    forest: CounterForest,
    delay_spec: Optional[ConcaveDelaySpec] = None,
    *,
    strict: bool = False,
    trace: bool = False,
) -> RunResult:
    """Metric mono algorithm on a prebuilt embedding and counter forest."""
    _validated(inst, "mono")
    if hst.n_points != inst.metric.n:
        raise BadParams("embedding does not cover the instance's points")
    sim = _CounterSim(forest, inst, delay_spec, False, hst.tree_distance, trace, strict)
    return sim.run()


def run_bpsla(
    inst: Instance,
    f: PiecewiseLinearDelay,
    delay_spec: Optional[ConcaveDelaySpec] = None,
    *,
    strict: bool = False,
    trace: bool = False,
) -> RunResult:
    """Single-location signed twin-counter ladder."""
    _validated(inst, "bichromatic", single_point=True)
    forest = _single_point_forest(inst, f)
    sim = _CounterSim(
        forest, inst, delay_spec, True, forest.hst.tree_distance, trace, strict
    )
    return sim.run()


def run_bpma(
    inst: Instance,
    hst: Hst,
    forest: CounterForest,
    delay_spec: Optional[ConcaveDelaySpec] = None,
    *,
    strict: bool = False,
    trace: bool = False,
) -> RunResult:
    """Metric signed algorithm on a prebuilt embedding and counter forest."""
    _validated(inst, "bichromatic")
    if hst.n_points != inst.metric.n:
        raise BadParams("embedding does not cover the instance's points")
    sim = _CounterSim(forest, inst, delay_spec, True, hst.tree_distance, trace, strict)
    return sim.run()


def run_greedy(
    inst: Instance,
    f: Optional[PiecewiseLinearDelay] = None,
    delay_spec: Optional[ConcaveDelaySpec] = None,
    *,
    strict: bool = False,
    trace: bool = False,
) -> RunResult:
    """Match each arrival immediately with the nearest pending compatible request.

    Ties go to the earliest arrival, then the smallest id.  Works on both
    modes and any metric; the counter ledger is identically zero.
    """
    problems = inst.validate()
    if problems:
        raise BadParams("invalid instance: " + "; ".join(problems))
    exact = inst.arithmetic == "exact" and (f is None or f.exact)
    conv = (lambda x: x) if exact else float
    fe = None if f is None else (f if exact else f.to_float())
    bi = inst.mode == "bichromatic"
    dist = inst.metric.d if exact else (lambda p, q: float(inst.metric.d(p, q)))
    pending: List[List[int]] = [[], []]
    arr = [conv(r.t) for r in inst.requests]
    pairs: List[MatchedPair] = []
    match_time: List[Optional[Number]] = [None] * len(inst.requests)
    delay_f = conv(0) if fe is not None else None
    delay_D = conv(0) if delay_spec is not None else None
    connection = conv(0)
    events = 0
    tr: Optional[List[dict]] = [] if trace else None
    for r in inst.requests:
        events += 1
        s = 0 if (r.sign is None or r.sign == "+") else 1
        bucket = pending[1 - s] if bi else pending[0]
        if bucket:
            c = min(bucket, key=lambda q: (dist(r.p, inst.requests[q].p), arr[q], q))
            bucket.remove(c)
            conn = dist(r.p, inst.requests[c].p)
            pairs.append(MatchedPair(c, r.id, conv(r.t), conn))
            match_time[c] = conv(r.t)
            match_time[r.id] = conv(r.t)
            connection = connection + conn
            if fe is not None:
                delay_f = delay_f + fe.value(conv(r.t) - arr[c]) + fe.value(conv(0))
            if delay_spec is not None:
                delay_D = delay_D + delay_spec.value(conv(r.t) - arr[c]) + delay_spec.value(
                    conv(0)
                )
            events += 1
            if tr is not None:
                tr.append(
                    {
                        "t": format_number(r.t),
                        "kind": "match",
                        "counter": None,
                        "requests": [c, r.id],
                        "level_before": None,
                        "level_after": None,
                    }
                )
        else:
            pending[s].append(r.id)
    violations: List[str] = []
    if pending[0] or pending[1]:
        raise Unterminated("greedy left requests unmatched on a balanced instance")
    result = RunResult(
        exact=exact,
        n_requests=len(inst.requests),
        pairs=pairs,
        match_time=match_time,  # type: ignore[arg-type]
        delay_f=delay_f,
        delay_D=delay_D,
        connection=connection,
        counter_increase=conv(0),
        event_count=events,
        intervals={},
        violations=violations,
        trace=tr,
    )
    if strict and violations:
        raise AuditFailure("; ".join(violations))
    return result
