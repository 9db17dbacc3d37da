"""Exact interval and region arithmetic over the rationals.

Sets are compared up to Lebesgue-null differences, so intervals are kept
as half-open-agnostic pairs (lo, hi) with lo < hi; touching intervals
merge.  Two-dimensional regions are unions of "strips": an x-interval
together with polynomial lower/upper boundary graphs.  Boxes are strips
with constant boundaries, so product systems and the skew examples share
one representation.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction


# ---------------------------------------------------------------------------
# univariate polynomials (tuple of coefficients, low degree first)


def poly_const(c):
    return (Fraction(c),)


def poly_x():
    return (Fraction(0), Fraction(1))


def poly_trim(p):
    p = list(p)
    while len(p) > 1 and p[-1] == 0:
        p.pop()
    return tuple(p)


def poly_add(p, q):
    n = max(len(p), len(q))
    return poly_trim(
        tuple(
            (p[i] if i < len(p) else 0) + (q[i] if i < len(q) else 0) for i in range(n)
        )
    )


def poly_neg(p):
    return tuple(-c for c in p)


def poly_sub(p, q):
    return poly_add(p, poly_neg(q))


def poly_mul(p, q):
    out = [Fraction(0)] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        for j, b in enumerate(q):
            out[i + j] += a * b
    return poly_trim(tuple(out))


def poly_eval(p, x):
    acc = Fraction(0) if isinstance(x, (int, Fraction)) else 0.0
    for c in reversed(p):
        acc = acc * x + c
    return acc


def poly_compose(p, q):
    """p(q(x))."""
    acc = (Fraction(0),)
    for c in reversed(p):
        acc = poly_add(poly_mul(acc, q), (Fraction(c),))
    return acc


def poly_integrate(p, lo, hi):
    total = Fraction(0)
    for i, c in enumerate(p):
        total += Fraction(c) * (hi ** (i + 1) - lo ** (i + 1)) / (i + 1)
    return total


def poly_range_on(p, lo, hi):
    """Exact (min, max) of p over [lo, hi]; needs degree <= 2."""
    p = poly_trim(p)
    vals = [poly_eval(p, lo), poly_eval(p, hi)]
    if len(p) == 3 and p[2] != 0:
        crit = -p[1] / (2 * p[2])
        if lo < crit < hi:
            vals.append(poly_eval(p, crit))
    elif len(p) > 3:
        raise NotImplementedError("exact range bounds implemented for degree <= 2")
    return min(vals), max(vals)


# ---------------------------------------------------------------------------
# one-dimensional interval unions


class IntervalUnion:
    """Finite union of rational intervals, canonicalized up to null sets."""

    __slots__ = ("parts",)

    def __init__(self, parts=()):
        merged = []
        for lo, hi in sorted((Fraction(a), Fraction(b)) for a, b in parts):
            if hi <= lo:
                continue
            if merged and lo <= merged[-1][1]:
                merged[-1] = (merged[-1][0], max(merged[-1][1], hi))
            else:
                merged.append((lo, hi))
        self.parts = tuple(merged)

    @classmethod
    def interval(cls, lo, hi):
        return cls([(lo, hi)])

    def __eq__(self, other):
        return isinstance(other, IntervalUnion) and self.parts == other.parts

    def __hash__(self):
        return hash(self.parts)

    def __bool__(self):
        return bool(self.parts)

    def __repr__(self):
        return "u".join(f"({lo},{hi})" for lo, hi in self.parts) or "(empty)"

    @property
    def measure(self):
        return sum((hi - lo for lo, hi in self.parts), Fraction(0))

    def contains_point(self, x, strict=True):
        for lo, hi in self.parts:
            if (lo < x < hi) or (not strict and lo <= x <= hi):
                return True
        return False

    def union(self, other):
        return IntervalUnion(self.parts + other.parts)

    def intersect(self, other):
        out = []
        for a, b in self.parts:
            for c, d in other.parts:
                lo, hi = max(a, c), min(b, d)
                if lo < hi:
                    out.append((lo, hi))
        return IntervalUnion(out)

    def subtract(self, other):
        out = []
        for a, b in self.parts:
            pieces = [(a, b)]
            for c, d in other.parts:
                nxt = []
                for lo, hi in pieces:
                    if d <= lo or hi <= c:
                        nxt.append((lo, hi))
                        continue
                    if lo < c:
                        nxt.append((lo, c))
                    if d < hi:
                        nxt.append((d, hi))
                pieces = nxt
            out.extend(pieces)
        return IntervalUnion(out)

    def is_subset_of(self, other):
        return self.subtract(other).measure == 0

    def breakpoints(self):
        out = set()
        for lo, hi in self.parts:
            out.add(lo)
            out.add(hi)
        return out

    def scaled(self, a, b):
        """Image under x -> a*x + b."""
        out = []
        for lo, hi in self.parts:
            x, y = a * lo + b, a * hi + b
            out.append((min(x, y), max(x, y)))
        return IntervalUnion(out)


def partition_atoms(domain, sets):
    """Atoms of the partition of `domain` generated by the interval unions."""
    points = set(domain.breakpoints())
    for s in sets:
        points |= s.breakpoints()
    points = sorted(points)
    atoms = []
    for lo, hi in zip(points, points[1:]):
        piece = IntervalUnion.interval(lo, hi).intersect(domain)
        if piece.measure > 0:
            atoms.append((lo, hi))
    return atoms


# ---------------------------------------------------------------------------
# two-dimensional regions as strip unions


@dataclass(frozen=True)
class Strip:
    """{(x, y): lo < x < hi, lower(x) < y < upper(x)} with polynomial bounds."""

    lo: Fraction
    hi: Fraction
    lower: tuple
    upper: tuple

    @property
    def measure(self):
        return poly_integrate(poly_sub(self.upper, self.lower), self.lo, self.hi)

    def contains_point(self, x, y):
        return self.lo < x < self.hi and poly_eval(self.lower, x) < y < poly_eval(
            self.upper, x
        )


class Region2:
    """Union of strips. Operations stay exact while bounds have degree <= 2."""

    __slots__ = ("strips",)

    def __init__(self, strips=()):
        self.strips = tuple(s for s in strips if s.hi > s.lo)

    @classmethod
    def box(cls, xlo, xhi, ylo, yhi):
        return cls(
            [Strip(Fraction(xlo), Fraction(xhi), poly_const(ylo), poly_const(yhi))]
        )

    @classmethod
    def from_box_product(cls, xint, yint):
        strips = []
        for xlo, xhi in xint.parts:
            for ylo, yhi in yint.parts:
                strips.append(Strip(xlo, xhi, poly_const(ylo), poly_const(yhi)))
        return cls(strips)

    def __repr__(self):
        return f"Region2({len(self.strips)} strips)"

    @property
    def measure(self):
        return sum((s.measure for s in self.strips), Fraction(0))

    def contains_point(self, x, y):
        return any(s.contains_point(x, y) for s in self.strips)

    def pairwise_overlap_is_null(self):
        """True if all strips are pairwise disjoint up to null sets.

        Decided by exact boundary dominance (degree <= 2); returns None
        when dominance cannot be decided exactly.
        """
        strips = self.strips
        for i in range(len(strips)):
            for j in range(i + 1, len(strips)):
                a, b = strips[i], strips[j]
                lo, hi = max(a.lo, b.lo), min(a.hi, b.hi)
                if hi <= lo:
                    continue
                gap1 = poly_sub(b.lower, a.upper)  # b above a
                gap2 = poly_sub(a.lower, b.upper)  # a above b
                ok = False
                for gap in (gap1, gap2):
                    try:
                        gmin, _ = poly_range_on(gap, lo, hi)
                    except NotImplementedError:
                        return None
                    if gmin >= 0:
                        ok = True
                        break
                if not ok:
                    return False
        return True

    def is_subset_of_box(self, xint, yint):
        """Containment in a box-product region, up to null sets."""
        for s in self.strips:
            if not IntervalUnion.interval(s.lo, s.hi).is_subset_of(xint):
                return False
            try:
                lo_min, lo_max = poly_range_on(s.lower, s.lo, s.hi)
                up_min, up_max = poly_range_on(s.upper, s.lo, s.hi)
            except NotImplementedError:
                return None
            # boundaries must sit inside one y-interval of the box
            placed = False
            for ylo, yhi in yint.parts:
                if ylo <= lo_min and up_max <= yhi:
                    placed = True
                    break
            if not placed:
                return False
        return True
