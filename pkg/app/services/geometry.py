"""Exact geometry of rational directions, arcs and arc sets on the circle.

Directions never become floating point angles. Ordering uses a half-plane
index plus the sign of a cross product; arc sets are rebuilt from the atoms
(endpoints and the open gaps between consecutive endpoints) of their inputs,
which makes union, intersection and complement one routine.
"""

import logging
from collections.abc import Callable, Iterable
from functools import cmp_to_key

from app.core.arithmetic import checked, cross, dot
from app.core.exceptions import InvalidRuleError
from schemas.family import Rule
from schemas.geometry import Arc, ArcKind, ArcSet, Direction, LatticePoint, Side

logger = logging.getLogger(__name__)

Vec = tuple[int, int]

EMPTY_ARC = Arc(kind=ArcKind.EMPTY)
FULL_CIRCLE = Arc(kind=ArcKind.FULL)


def _half(v: Vec) -> int:
    # 0 for angles in [0, pi), 1 for [pi, 2pi)
    x, y = v
    return 0 if y > 0 or (y == 0 and x > 0) else 1


def compare_vectors(a: Vec, b: Vec) -> int:
    """Counterclockwise order of two nonzero vectors anchored at (1, 0).

    Returns -1, 0 or 1; vectors on the same ray compare equal.
    """
    ha, hb = _half(a), _half(b)
    if ha != hb:
        return -1 if ha < hb else 1
    c = cross(a[0], a[1], b[0], b[1])
    if c > 0:
        return -1
    if c < 0:
        return 1
    return 0


def ccw_compare(a: Direction, b: Direction) -> int:
    """Order two directions counterclockwise starting at (1, 0)."""
    return compare_vectors(a.as_tuple(), b.as_tuple())


ccw_key = cmp_to_key(ccw_compare)
vector_key = cmp_to_key(compare_vectors)


def sort_directions(directions: Iterable[Direction]) -> list[Direction]:
    """Sort directions counterclockwise from (1, 0), dropping duplicates."""
    return sorted(set(directions), key=ccw_key)


def same_ray(a: Vec, b: Vec) -> bool:
    return cross(a[0], a[1], b[0], b[1]) == 0 and dot(a[0], a[1], b[0], b[1]) > 0


def relative_compare(anchor: Vec, a: Vec, b: Vec) -> int:
    """Counterclockwise order of a and b measured from anchor."""
    ra = (dot(*anchor, *a), cross(*anchor, *a))
    rb = (dot(*anchor, *b), cross(*anchor, *b))
    return compare_vectors(ra, rb)


def strictly_between(lo: Vec, v: Vec, hi: Vec) -> bool:
    """Whether v lies strictly inside the counterclockwise sweep lo -> hi."""
    if same_ray(v, lo):
        return False
    if same_ray(lo, hi):
        return True
    return relative_compare(lo, v, hi) < 0


def antipode(d: Direction) -> Direction:
    """The opposite direction."""
    return Direction(px=-d.px, py=-d.py)


def rotate_quarter(d: Direction, turns: int = 1) -> Direction:
    """Rotate by turns * 90 degrees counterclockwise."""
    x, y = d.px, d.py
    for _ in range(turns % 4):
        x, y = -y, x
    return Direction(px=x, py=y)


def apply_symmetry(v: Vec, matrix: tuple[Vec, Vec]) -> Vec:
    """Apply an integer 2x2 matrix given as rows."""
    (a, b), (c, d) = matrix
    return (checked(a * v[0] + b * v[1]), checked(c * v[0] + d * v[1]))


LATTICE_SYMMETRIES: tuple[tuple[Vec, Vec], ...] = (
    ((1, 0), (0, 1)),
    ((0, -1), (1, 0)),
    ((-1, 0), (0, -1)),
    ((0, 1), (-1, 0)),
    ((1, 0), (0, -1)),
    ((-1, 0), (0, 1)),
    ((0, 1), (1, 0)),
    ((0, -1), (-1, 0)),
)


def point_arc(d: Direction) -> Arc:
    return Arc(kind=ArcKind.SPAN, lo=d, hi=d, lo_open=False, hi_open=False)


def punctured_circle(d: Direction) -> Arc:
    return Arc(kind=ArcKind.PUNCTURED, lo=d, hi=d, lo_open=True, hi_open=True)


def make_arc(
    lo: Direction, hi: Direction, lo_open: bool = True, hi_open: bool = True
) -> Arc:
    """Counterclockwise arc lo -> hi; a degenerate open arc is empty."""
    if lo == hi:
        if lo_open or hi_open:
            return EMPTY_ARC
        return point_arc(lo)
    return Arc(kind=ArcKind.SPAN, lo=lo, hi=hi, lo_open=lo_open, hi_open=hi_open)


def _arc_contains_vec(arc: Arc, v: Vec) -> bool:
    if arc.kind == ArcKind.EMPTY:
        return False
    if arc.kind == ArcKind.FULL:
        return True
    assert arc.lo is not None and arc.hi is not None
    lo, hi = arc.lo.as_tuple(), arc.hi.as_tuple()
    if arc.kind == ArcKind.PUNCTURED:
        return not same_ray(v, lo)
    if lo == hi:
        return same_ray(v, lo)
    if same_ray(v, lo):
        return not arc.lo_open
    if same_ray(v, hi):
        return not arc.hi_open
    return strictly_between(lo, v, hi)


def arc_contains(arc: Arc, d: Direction) -> bool:
    """Membership of a direction in an arc."""
    return _arc_contains_vec(arc, d.as_tuple())


def arcset_contains(s: ArcSet, d: Direction) -> bool:
    """Membership of a direction in an arc set."""
    v = d.as_tuple()
    return any(_arc_contains_vec(a, v) for a in s.arcs)


def semicircle(endpoint: Direction, side: Side = Side.COUNTERCLOCKWISE) -> Arc:
    """Open semicircle starting (ccw) or ending (cw) at endpoint."""
    other = antipode(endpoint)
    if side == Side.COUNTERCLOCKWISE:
        return make_arc(endpoint, other)
    return make_arc(other, endpoint)


def _gap_representative(a: Vec, b: Vec) -> Vec:
    # a direction strictly inside the open ccw sweep a -> b
    if same_ray(a, b):
        return (-a[0], -a[1])
    c = cross(*a, *b)
    if c > 0:
        return (checked(a[0] + b[0]), checked(a[1] + b[1]))
    if c < 0:
        return (checked(-a[0] - b[0]), checked(-a[1] - b[1]))
    return (-a[1], a[0])


def _endpoints(arcs: Iterable[Arc]) -> list[Vec]:
    pts: list[Vec] = []
    for arc in arcs:
        if arc.lo is not None and arc.hi is not None:
            pts.append(arc.lo.as_tuple())
            pts.append(arc.hi.as_tuple())
    unique: list[Vec] = []
    for v in sorted(set(pts), key=vector_key):
        if not unique or compare_vectors(unique[-1], v) != 0:
            unique.append(v)
    return unique


def _rebuild(points: list[Vec], member: Callable[[Vec], bool]) -> ArcSet:
    """Canonical arc set whose membership agrees with member on every atom."""
    if not points:
        return ArcSet(arcs=(FULL_CIRCLE,)) if member((1, 0)) else ArcSet()

    m = len(points)
    atoms: list[bool] = []
    for i, p in enumerate(points):
        atoms.append(member(p))
        atoms.append(member(_gap_representative(p, points[(i + 1) % m])))

    if all(atoms):
        return ArcSet(arcs=(FULL_CIRCLE,))
    if not any(atoms):
        return ArcSet()

    def endpoint(i: int) -> Direction:
        return Direction(px=points[i % m][0], py=points[i % m][1])

    n = 2 * m
    start = atoms.index(False)
    arcs: list[Arc] = []
    j = start + 1
    while j <= start + n:
        if not atoms[j % n]:
            j += 1
            continue
        first = j
        while j + 1 <= start + n and atoms[(j + 1) % n]:
            j += 1
        a, b = first % n, j % n
        if a == b and a % 2 == 0:
            arcs.append(point_arc(endpoint(a // 2)))
        else:
            lo = endpoint(a // 2)
            lo_open = a % 2 == 1
            hi = endpoint(b // 2) if b % 2 == 0 else endpoint(b // 2 + 1)
            hi_open = b % 2 == 1
            if lo == hi:
                arcs.append(punctured_circle(lo))
            else:
                arcs.append(make_arc(lo, hi, lo_open, hi_open))
        j += 1

    arcs.sort(key=lambda arc: vector_key(arc.lo.as_tuple()))  # type: ignore[union-attr]
    return ArcSet(arcs=tuple(arcs))


def _flatten(items: Iterable[Arc | ArcSet]) -> list[Arc]:
    out: list[Arc] = []
    for item in items:
        if isinstance(item, ArcSet):
            out.extend(item.arcs)
        else:
            out.append(item)
    return out


def arcset_union(items: Iterable[Arc | ArcSet]) -> ArcSet:
    """Canonical union of arcs and arc sets."""
    arcs = _flatten(items)
    return _rebuild(
        _endpoints(arcs), lambda v: any(_arc_contains_vec(a, v) for a in arcs)
    )


def arcset_complement(s: ArcSet) -> ArcSet:
    """Canonical complement in the circle."""
    return _rebuild(
        _endpoints(s.arcs), lambda v: not any(_arc_contains_vec(a, v) for a in s.arcs)
    )


def arcset_intersection(*sets: ArcSet | Arc) -> ArcSet:
    """Canonical intersection of arc sets."""
    groups = [
        item.arcs if isinstance(item, ArcSet) else (item,) for item in sets
    ]
    every = [a for g in groups for a in g]
    return _rebuild(
        _endpoints(every),
        lambda v: all(any(_arc_contains_vec(a, v) for a in g) for g in groups),
    )


def _rule_sites(rule: Rule | Iterable[LatticePoint]) -> list[Vec]:
    sites = rule.sites if isinstance(rule, Rule) else tuple(rule)
    vecs = [s.as_tuple() for s in sites]
    if not vecs:
        raise InvalidRuleError("rule is empty")
    if (0, 0) in vecs:
        raise InvalidRuleError("rule contains the origin")
    return vecs


def unstable_arc_of_rule(rule: Rule | Iterable[LatticePoint]) -> Arc:
    """Open arc of directions u with <x, u> < 0 for every site x of the rule.

    Offsets of all sites are measured from an anchor site; the extreme
    counterclockwise and clockwise sites bound the arc, whose endpoints are
    those sites turned by a quarter. A spread of pi or more leaves nothing.
    """
    vecs = _rule_sites(rule)
    anchor = vecs[0]
    plus = minus = anchor
    for x in vecs[1:]:
        c = cross(*anchor, *x)
        if c == 0:
            if dot(*anchor, *x) < 0:
                return EMPTY_ARC
            continue
        if c > 0:
            if relative_compare(anchor, x, plus) > 0:
                plus = x
        elif minus == anchor or relative_compare(anchor, x, minus) < 0:
            minus = x

    spread = cross(*minus, *plus)
    if spread < 0 or (spread == 0 and dot(*minus, *plus) < 0):
        return EMPTY_ARC

    lo = Direction(px=-plus[1], py=plus[0])
    hi = Direction(px=minus[1], py=-minus[0])
    return make_arc(lo, hi)
