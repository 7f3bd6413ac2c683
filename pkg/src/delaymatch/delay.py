"""Concave delay specifications and their piecewise-linear lower approximations.

A delay spec D is concave, continuous, increasing, with D(0)=0 and a positive
bounded initial slope.  The approximation f is built greedily: the first piece
leaves the origin at half of D's initial slope; each piece runs until it
re-intersects D, and the next piece restarts there at half of D's current
slope.  Consequently f <= D everywhere up to the build horizon, D <= 2f
everywhere, and consecutive slopes at least halve, which is what the counter
constructions downstream rely on.

Piecewise-linear specs (linear, capped linear, custom PWL) are intersected in
closed form so rational inputs stay rational end to end; smooth specs (log1p,
sqrt1p) use bracketed bisection (bracket grown geometrically from x+1, 200
iterations, absolute tolerance 1e-12).
"""

from __future__ import annotations

import bisect
import json
import math
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

from .errors import BadParams, NegativeTime, NonConcaveSpec, ParseError, ZeroDerivative
from .numeric import Number, all_exact, format_number, parse_number

_BISECT_ITERS = 200
_BISECT_TOL = 1e-12


class ConcaveDelaySpec:
    """Base class for delay specifications."""

    kind = "abstract"

    def value(self, t: Number) -> Number:
        raise NotImplementedError

    def dslope(self, t: Number) -> Number:
        """Right derivative of the delay at time t."""
        raise NotImplementedError

    @property
    def is_pwl(self) -> bool:
        return False

    def segments(self) -> List[Tuple[Number, Number, Number]]:
        """(start, value_at_start, slope) triples for PWL specs, last one open-ended."""
        raise NotImplementedError(f"{self.kind} is not piecewise linear")

    def validate(self) -> None:
        """Raise if the spec is not a valid concave delay function."""

    def spec_string(self) -> str:
        raise NotImplementedError

    def _check_time(self, t: Number) -> None:
        if t < 0:
            raise NegativeTime(f"delay evaluated at negative time {t}")


class LinearDelay(ConcaveDelaySpec):
    """D(t) = c * t."""

    kind = "linear"

    def __init__(self, c: Number):
        self.c = c
        self.validate()

    def validate(self) -> None:
        if self.c <= 0:
            raise ZeroDerivative("linear delay needs a positive slope")

    def value(self, t):
        self._check_time(t)
        return self.c * t

    def dslope(self, t):
        return self.c

    @property
    def is_pwl(self):
        return True

    def segments(self):
        return [(0, 0, self.c)]

    def spec_string(self):
        return f"linear:{format_number(self.c)}"


class Log1pDelay(ConcaveDelaySpec):
    """D(t) = c * ln(1 + t)."""

    kind = "log1p"

    def __init__(self, c: Number):
        self.c = c
        self.validate()

    def validate(self) -> None:
        if self.c <= 0:
            raise ZeroDerivative("log1p delay needs a positive scale")

    def value(self, t):
        self._check_time(t)
        return float(self.c) * math.log1p(float(t))

    def dslope(self, t):
        return float(self.c) / (1.0 + float(t))

    def spec_string(self):
        return f"log1p:{format_number(self.c)}"


class Sqrt1pDelay(ConcaveDelaySpec):
    """D(t) = sqrt(1 + t) - 1."""

    kind = "sqrt1p"

    def value(self, t):
        self._check_time(t)
        return math.sqrt(1.0 + float(t)) - 1.0

    def dslope(self, t):
        return 0.5 / math.sqrt(1.0 + float(t))

    def spec_string(self):
        return "sqrt1p"


class CappedLinearDelay(ConcaveDelaySpec):
    """D(t) = min(t, cap) + tail * t.

    tail = 0 gives a bounded delay; that variant is accepted here because the
    offline oracle only needs values, but linearize refuses it (the
    approximation's final slope would be zero and the counter algorithms
    could stall).
    """

    kind = "cap"

    def __init__(self, cap: Number, tail: Number):
        self.cap = cap
        self.tail = tail
        self.validate()

    def validate(self) -> None:
        if self.cap <= 0:
            raise BadParams("cap must be positive")
        if self.tail < 0:
            raise NonConcaveSpec("negative tail slope makes the delay decrease")

    def value(self, t):
        self._check_time(t)
        return min(t, self.cap) + self.tail * t

    def dslope(self, t):
        if t < self.cap:
            return 1 + self.tail
        return self.tail

    @property
    def is_pwl(self):
        return True

    def segments(self):
        return [(0, 0, 1 + self.tail), (self.cap, self.cap + self.tail * self.cap, self.tail)]

    def spec_string(self):
        return f"cap:{format_number(self.cap)},{format_number(self.tail)}"


class CustomPWLDelay(ConcaveDelaySpec):
    """Concave piecewise-linear delay given by interior breakpoints and slopes.

    breaks has one fewer entry than slopes; the last piece is unbounded.  The
    same JSON shape {"x": [...], "alpha": [...]} that linearize emits can be
    fed back in as a spec.
    """

    kind = "pwl"

    def __init__(self, breaks: Sequence[Number], slopes: Sequence[Number]):
        self.breaks = list(breaks)
        self.slopes = list(slopes)
        self.validate()
        self._values = [0]
        for i, x in enumerate(self.breaks):
            prev = self.breaks[i - 1] if i else 0
            self._values.append(self._values[-1] + self.slopes[i] * (x - prev))

    def validate(self) -> None:
        if len(self.slopes) != len(self.breaks) + 1:
            raise BadParams("need exactly one more slope than breakpoints")
        if not self.slopes:
            raise BadParams("need at least one slope")
        prev = 0
        for x in self.breaks:
            if x <= prev:
                raise BadParams("breakpoints must be positive and strictly increasing")
            prev = x
        if self.slopes[0] <= 0:
            raise ZeroDerivative("initial slope must be positive")
        for a, b in zip(self.slopes, self.slopes[1:]):
            if b > a:
                raise NonConcaveSpec("slopes increase; spec is not concave")
            if b < 0:
                raise NonConcaveSpec("negative slope; spec is not increasing")

    def _piece(self, t) -> int:
        return bisect.bisect_right(self.breaks, t)

    def value(self, t):
        self._check_time(t)
        i = self._piece(t)
        start = self.breaks[i - 1] if i else 0
        return self._values[i] + self.slopes[i] * (t - start)

    def dslope(self, t):
        return self.slopes[self._piece(t)]

    @property
    def is_pwl(self):
        return True

    def segments(self):
        segs = [(0, 0, self.slopes[0])]
        for i, x in enumerate(self.breaks):
            segs.append((x, self._values[i + 1], self.slopes[i + 1]))
        return segs

    def spec_string(self):
        return "pwl:<inline>"


class PiecewiseLinearDelay:
    """The halved approximation f: interior breakpoints x and piece slopes alpha.

    Invariants enforced on construction: slopes positive, consecutive slopes
    at least halving (exact comparison), breakpoints strictly increasing.
    Piece k (1-based) covers [x_{k-1}, x_k); the last piece is unbounded.
    """

    def __init__(self, breaks: Sequence[Number], alphas: Sequence[Number]):
        self.breaks: List[Number] = list(breaks)
        self.alphas: List[Number] = list(alphas)
        if len(self.alphas) != len(self.breaks) + 1:
            raise BadParams("need exactly one more slope than breakpoints")
        prev = 0
        for x in self.breaks:
            if x <= prev:
                raise BadParams("breakpoints must be positive and strictly increasing")
            prev = x
        for a in self.alphas:
            if a <= 0:
                raise ZeroDerivative("approximation slopes must be positive")
        for a, b in zip(self.alphas, self.alphas[1:]):
            if 2 * b > a:
                raise NonConcaveSpec("slopes must at least halve piece to piece")
        # rises[k] is how much f climbs over piece k+1; the last piece is open.
        self.rises: List[Number] = []
        for i, x in enumerate(self.breaks):
            prev = self.breaks[i - 1] if i else 0
            self.rises.append(self.alphas[i] * (x - prev))
        self._cum = [0]
        for r in self.rises:
            self._cum.append(self._cum[-1] + r)
        self.exact = all_exact(self.breaks) and all_exact(self.alphas)

    @property
    def d(self) -> int:
        return len(self.alphas)

    def piece_index(self, t: Number) -> int:
        """1-based index of the piece containing t (t == x_k starts piece k+1)."""
        if t < 0:
            raise NegativeTime(f"piece index at negative time {t}")
        return bisect.bisect_right(self.breaks, t) + 1

    def value(self, t: Number) -> Number:
        if t < 0:
            raise NegativeTime(f"approximation evaluated at negative time {t}")
        k = self.piece_index(t)
        start = self.breaks[k - 2] if k > 1 else 0
        return self._cum[k - 1] + self.alphas[k - 1] * (t - start)

    def cumulative_rise(self, k: int) -> Number:
        """Total climb through pieces 1..k (S_k); infinite for k = d."""
        if k >= self.d:
            return math.inf
        return self._cum[k]

    def to_float(self) -> "PiecewiseLinearDelay":
        return PiecewiseLinearDelay(
            [float(x) for x in self.breaks], [float(a) for a in self.alphas]
        )

    def to_json_dict(self) -> dict:
        return {
            "x": [format_number(x) for x in self.breaks],
            "alpha": [format_number(a) for a in self.alphas],
        }

    @classmethod
    def from_json_dict(cls, obj: dict, *, want_float: bool = False) -> "PiecewiseLinearDelay":
        try:
            breaks = [parse_number(s, want_float=want_float) for s in obj["x"]]
            alphas = [parse_number(s, want_float=want_float) for s in obj["alpha"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"bad piecewise-linear delay payload: {exc}") from exc
        return cls(breaks, alphas)


def _intersect_exact(spec, x_prev, f_prev, slope):
    """First crossing of the current approximation piece with a PWL spec, > x_prev."""
    segs = spec.segments()
    for i, (u, du, s) in enumerate(segs):
        hi = segs[i + 1][0] if i + 1 < len(segs) else None
        if hi is not None and hi <= x_prev:
            continue
        if s == slope:
            continue
        # Solve du + s*(x-u) == f_prev + slope*(x-x_prev).
        x = (f_prev - slope * x_prev - du + s * u) / (s - slope)
        lo = max(u, x_prev)
        if x > x_prev and x >= lo and (hi is None or x <= hi):
            return x
    return None


def _intersect_numeric(spec, x_prev, f_prev, slope, horizon):
    """Bracketed bisection for the first crossing beyond x_prev, or None."""
    x_prev = float(x_prev)
    f_prev = float(f_prev)
    slope = float(slope)

    def gap(x):
        return float(spec.value(x)) - (f_prev + slope * (x - x_prev))

    lo = x_prev
    offset = 1.0
    hi = x_prev + offset
    while gap(hi) > 0:
        lo = hi
        offset *= 2
        hi = x_prev + offset
        if hi >= float(horizon) and gap(hi) > 0:
            return None
    for _ in range(_BISECT_ITERS):
        if hi - lo <= _BISECT_TOL:
            break
        mid = 0.5 * (lo + hi)
        if gap(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def linearize(spec: ConcaveDelaySpec, horizon: Number) -> PiecewiseLinearDelay:
    """Build the halved piecewise-linear approximation of spec up to horizon.

    The construction stops (declaring the current piece unbounded) when the
    piece no longer re-intersects the spec, or when the intersection lands at
    or beyond the horizon.
    """
    spec.validate()
    if horizon <= 0:
        raise BadParams("horizon must be positive")
    first = spec.dslope(0)
    if first <= 0:
        raise ZeroDerivative("delay spec has no positive initial slope")
    half = Fraction(1, 2) if not isinstance(first, float) else 0.5
    alpha = first * half
    breaks: List[Number] = []
    alphas: List[Number] = [alpha]
    x_prev: Number = 0
    f_prev: Number = 0
    while True:
        if spec.is_pwl:
            x_next = _intersect_exact(spec, x_prev, f_prev, alpha)
        else:
            x_next = _intersect_numeric(spec, x_prev, f_prev, alpha, horizon)
        if x_next is None or x_next >= horizon:
            break
        f_prev = f_prev + alpha * (x_next - x_prev)
        x_prev = x_next
        nxt = spec.dslope(x_next)
        half_next = Fraction(1, 2) if not isinstance(nxt, float) else 0.5
        # The true value never exceeds alpha/2; min() only absorbs float rounding.
        alpha = min(nxt * half_next, alpha * half_next)
        if alpha <= 0:
            raise ZeroDerivative(
                "delay spec flattens to slope zero; refusing an approximation "
                "the counter algorithms cannot terminate under"
            )
        breaks.append(x_prev)
        alphas.append(alpha)
    return PiecewiseLinearDelay(breaks, alphas)


def verify_sandwich(
    spec: ConcaveDelaySpec,
    f: PiecewiseLinearDelay,
    grid_size: int,
    horizon: Number,
) -> dict:
    """Check f <= D <= 2f on a uniform grid over [0, horizon].

    Returns a report with the worst signed violations; max_violation <= 0
    means the sandwich holds on the grid.
    """
    if grid_size < 2:
        raise BadParams("grid needs at least two points")
    h = float(horizon)
    worst_low = -math.inf  # max of f - D (should be <= 0)
    worst_high = -math.inf  # max of D - 2f (should be <= 0)
    for i in range(grid_size):
        t = h * i / (grid_size - 1)
        dv = float(spec.value(t))
        fv = float(f.value(t))
        worst_low = max(worst_low, fv - dv)
        worst_high = max(worst_high, dv - 2 * fv)
    return {
        "grid_size": grid_size,
        "horizon": h,
        "max_f_minus_D": worst_low,
        "max_D_minus_2f": worst_high,
        "max_violation": max(worst_low, worst_high, 0.0),
    }


def parse_delay_spec(text: str) -> ConcaveDelaySpec:
    """Parse a delay spec string: linear:c, log1p:c, sqrt1p, cap:<cap>,<tail>, pwl:<path>."""
    try:
        if text == "sqrt1p":
            return Sqrt1pDelay()
        if text.startswith("linear:"):
            return LinearDelay(parse_number(text.split(":", 1)[1]))
        if text.startswith("log1p:"):
            return Log1pDelay(parse_number(text.split(":", 1)[1]))
        if text.startswith("cap:"):
            body = text.split(":", 1)[1]
            cap_s, _, tail_s = body.partition(",")
            if not tail_s:
                raise ParseError("cap spec needs cap and tail, e.g. cap:1,0.001")
            return CappedLinearDelay(parse_number(cap_s), parse_number(tail_s))
        if text.startswith("pwl:"):
            path = text.split(":", 1)[1]
            try:
                with open(path, "r", encoding="utf-8") as fh:
                    obj = json.load(fh)
            except (OSError, json.JSONDecodeError) as exc:
                raise ParseError(f"cannot read pwl file {path}: {exc}") from exc
            f = PiecewiseLinearDelay.from_json_dict(obj)
            return CustomPWLDelay(f.breaks, f.alphas)
    except ValueError as exc:
        raise ParseError(f"bad number in delay spec {text!r}: {exc}") from exc
    raise ParseError(f"unrecognized delay spec {text!r}")
