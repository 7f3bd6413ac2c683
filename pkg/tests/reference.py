"""Independent reference implementations used as test oracles.

These are deliberately naive: full enumeration and textbook bisection,
written before the package code they check and kept separate from it.
"""

import math
from fractions import Fraction
from itertools import permutations


def perfect_matchings(ids):
    """Yield every perfect matching of ids as a list of (a, b) pairs."""
    ids = list(ids)
    if not ids:
        yield []
        return
    a = ids[0]
    for i in range(1, len(ids)):
        b = ids[i]
        rest = ids[1:i] + ids[i + 1:]
        for tail in perfect_matchings(rest):
            yield [(a, b)] + tail


def naive_pair_cost(inst, a, b, dist_fn, delay_fn):
    ra, rb = inst.requests[a], inst.requests[b]
    gap = ra.t - rb.t
    if gap < 0:
        gap = -gap
    return dist_fn(ra.p, rb.p) + delay_fn(gap)


def naive_opt_mono_total(inst, dist_fn, delay_fn):
    """Minimum total cost over all perfect matchings, by full enumeration."""
    ids = [r.id for r in inst.requests]
    cost = {}
    for i in ids:
        for j in ids:
            if i < j:
                cost[(i, j)] = naive_pair_cost(inst, i, j, dist_fn, delay_fn)
    best = None
    for matching in perfect_matchings(ids):
        total = 0
        for a, b in matching:
            total = total + cost[(min(a, b), max(a, b))]
        if best is None or total < best:
            best = total
    return best


def naive_opt_bichromatic_total(inst, dist_fn, delay_fn):
    """Minimum polarity-respecting cost over all sign bijections."""
    pos = [r.id for r in inst.requests if r.sign == "+"]
    neg = [r.id for r in inst.requests if r.sign == "-"]
    assert len(pos) == len(neg)
    best = None
    for perm in permutations(neg):
        total = 0
        for a, b in zip(pos, perm):
            total = total + naive_pair_cost(inst, a, b, dist_fn, delay_fn)
        if best is None or total < best:
            best = total
    return best


def bisect_root(g, lo, hi, iters=200):
    """Root of g on [lo, hi] with g(lo) and g(hi) of opposite signs."""
    glo = g(lo)
    assert glo * g(hi) <= 0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if glo * g(mid) <= 0:
            hi = mid
        else:
            lo = mid
            glo = g(lo)
    return 0.5 * (lo + hi)


def log_halving_crossing(c=1.0):
    """First re-intersection of c*ln(1+t) with its half-slope chord from 0.

    Solves c*ln(1+x) = (c/2)*x for the positive root; independent oracle for
    the first breakpoint of the log delay's linearization.
    """
    return bisect_root(lambda x: math.log1p(x) - 0.5 * x, 1.0, 4.0)


def sqrt_halving_breakpoints(count=3):
    """Exact breakpoints of the square-root delay's linearization: 9^i - 1.

    Derivation: with D(t) = sqrt(1+t) - 1, a piece starting at x0 = 9^i - 1
    (where sqrt(1+x0) = 3^i) with slope D'(x0)/2 = 1/(4*3^i) next meets D
    where, substituting u = sqrt(1+x), u^2 - 4*3^i*u + 3^(2i+1) = 0, whose
    larger root is u = 3^(i+1), i.e. x = 9^(i+1) - 1.
    """
    return [9 ** (i + 1) - 1 for i in range(count)]


def greedy_bad_opt_total(m, eps, tail):
    """Closed-form offline optimum for the adversarial stream.

    Pairs the first and last requests (gap 2m) and each of the 2m-1 adjacent
    (i, i+eps) pairs (gap eps), under D(t) = min(t, 1) + tail*t.  Verified
    against full enumeration for small m in the oracle tests.
    """
    eps = Fraction(eps)
    tail = Fraction(tail)
    big = 1 + tail * 2 * m
    small = (2 * m - 1) * (eps + tail * eps)
    return big + small


def greedy_bad_greedy_total(m, eps, tail):
    """Closed-form cost of instant nearest matching on the same stream.

    Greedy pairs (0,1) with gap 1 and then each (i+eps, i+1) with gap 1-eps.
    """
    eps = Fraction(eps)
    tail = Fraction(tail)
    first = 1 + tail * 1
    rest = (2 * m - 1) * ((1 - eps) + tail * (1 - eps))
    return first + rest
