"""Set Cover to difficulty reduction, a brute-force Set Cover solver and checks.

Write s = |S| and L = N * s^2. The family has two spreading rules

    U_0 = {(-k, 0), (0, -k) : 1 <= k <= L}
    U_1 = {(+k, 0), (0, -k) : 1 <= k <= L}

and, for every set S_i, element j of S_i and 1 <= k <= s^2, the rule
T + ((W + (i*s, 2)) - (k + (N + j) * s^2, 0)) with T = {(0, -y) : y <= L} and
W = {(x, 0) : 1 <= x <= s^2} + {(l*s, 1) : 1 <= l <= s}. W together with the
marks (i*s, 2) of a cover infects a run of L sites of l_u, after which U_0 and
U_1 infect the whole line.
"""

import logging
from itertools import combinations
from pathlib import Path

import pydantic

from app.core.exceptions import ParseError, ValidationError
from app.services.dynamics import half_plane_closure
from schemas.difficulty import SearchBudget
from schemas.family import Rule, UpdateFamily
from schemas.geometry import Direction, LatticePoint
from schemas.reduction import ReductionReport, ReductionVerification, SetCoverInstance

logger = logging.getLogger(__name__)

NORTH = Direction(px=0, py=1)


def make_instance(universe: int, sets: list[list[int]]) -> SetCoverInstance:
    """Validated instance.

    Raises:
        ValidationError: if there are fewer than 4 sets, N < 4, a set is empty
            or leaves the universe, or the sets do not cover it
    """
    try:
        return SetCoverInstance(universe=universe, sets=tuple(tuple(s) for s in sets))
    except pydantic.ValidationError as e:
        reasons = [err["msg"] for err in e.errors()]
        raise ValidationError(
            f"Invalid Set Cover instance: {'; '.join(reasons)}",
            field="instance",
            details={"reasons": reasons},
        ) from None


def _w_sites(s: int) -> list[tuple[int, int]]:
    return [(x, 0) for x in range(1, s * s + 1)] + [(l * s, 1) for l in range(1, s + 1)]


def reduce(inst: SetCoverInstance) -> UpdateFamily:
    """The update family whose difficulty encodes the optimal cover size."""
    n, s = inst.universe, inst.set_count
    run = n * s * s
    tail = [(0, -y) for y in range(1, run + 1)]
    rules = [
        Rule.of(*[(-k, 0) for k in range(1, run + 1)], *tail),
        Rule.of(*[(k, 0) for k in range(1, run + 1)], *tail),
    ]
    w = _w_sites(s)
    for i, members in enumerate(inst.sets, start=1):
        marked = w + [(i * s, 2)]
        for j in members:
            for k in range(1, s * s + 1):
                shift = k + (n + j) * s * s
                rules.append(Rule.of(*tail, *[(x - shift, y) for x, y in marked]))
    family = UpdateFamily(rules=tuple(rules))
    logger.info(
        f"Reduced instance with N={n}, |S|={s} to {family.rule_count} rules, "
        f"{family.site_count} sites, D={family.diameter}"
    )
    return family


def expected_site_count(inst: SetCoverInstance) -> int:
    n, s = inst.universe, inst.set_count
    return 4 * n * s * s + s * s * inst.total_size * (n * s * s + s * s + s + 1)


def _masks(inst: SetCoverInstance) -> list[int]:
    return [sum(1 << (e - 1) for e in members) for members in inst.sets]


def optimal_cover(inst: SetCoverInstance) -> tuple[int, ...]:
    """Lexicographically first minimum cover, as 1-based set indices."""
    full = (1 << inst.universe) - 1
    masks = _masks(inst)
    for size in range(1, inst.set_count + 1):
        for chosen in combinations(range(inst.set_count), size):
            covered = 0
            for index in chosen:
                covered |= masks[index]
            if covered == full:
                return tuple(i + 1 for i in chosen)
    # unreachable for a validated instance
    raise ValidationError("the sets do not cover the universe")


def solve_set_cover_bruteforce(inst: SetCoverInstance) -> int:
    """Minimum number of sets covering the universe."""
    return len(optimal_cover(inst))


def predicted_alpha(inst: SetCoverInstance) -> int:
    s = inst.set_count
    return s * s + s + solve_set_cover_bruteforce(inst)


def is_cover(inst: SetCoverInstance, chosen: tuple[int, ...]) -> bool:
    covered = {e for i in chosen for e in inst.sets[i - 1]}
    return len(covered) == inst.universe


def reduction_witness(inst: SetCoverInstance, chosen: tuple[int, ...]) -> list[LatticePoint]:
    """Z_0 = W plus the marks (i*|S|, 2) of the chosen sets."""
    s = inst.set_count
    for i in chosen:
        if not 1 <= i <= s:
            raise ValidationError(f"set index {i} out of range 1..{s}", field="cover")
    sites = _w_sites(s) + [(i * s, 2) for i in sorted(set(chosen))]
    return [LatticePoint.of(x, y) for x, y in sites]


def reduction_report(
    inst: SetCoverInstance, family: UpdateFamily | None = None
) -> ReductionReport:
    family = family or reduce(inst)
    cover = optimal_cover(inst)
    s = inst.set_count
    return ReductionReport(
        universe=inst.universe,
        set_count=s,
        rule_count=family.rule_count,
        prose_rule_count=s**3 * inst.total_size,
        site_count=family.site_count,
        expected_site_count=expected_site_count(inst),
        diameter=family.diameter,
        optimal_cover=cover,
        optimal_cover_size=len(cover),
        predicted_alpha=s * s + s + len(cover),
    )


def verify_cover_witness(
    inst: SetCoverInstance,
    chosen: tuple[int, ...],
    budget: SearchBudget | None = None,
    family: UpdateFamily | None = None,
) -> ReductionVerification:
    """Simulate H_u plus the witness of the chosen sets at u = (0, 1)."""
    family = family or reduce(inst)
    witness = reduction_witness(inst, chosen)
    outcome = half_plane_closure(family, NORTH, witness, budget)
    s = inst.set_count
    result = ReductionVerification(
        verified=outcome.is_infinite,
        status=outcome.status,
        cover=tuple(sorted(set(chosen))),
        is_cover=is_cover(inst, chosen),
        witness=tuple(witness),
        witness_size=len(witness),
        predicted_alpha=s * s + s + solve_set_cover_bruteforce(inst),
        generation=outcome.state.generation,
        infected_count=len(outcome.state.infected),
        certificate=outcome.certificate,
    )
    logger.info(
        f"Witness of {len(witness)} sites from sets {result.cover}: {outcome.status.value}"
    )
    return result


def verify_reduction_upper_bound(
    inst: SetCoverInstance, budget: SearchBudget | None = None
) -> ReductionVerification:
    """Check by simulation that the optimal-cover witness grows without bound."""
    return verify_cover_witness(inst, optimal_cover(inst), budget)


def check_w_rigidity(inst: SetCoverInstance) -> bool:
    """|(q + W) minus W| > |S| for every nonzero shift q.

    Shifts beyond the extent of W leave it disjoint from itself.
    """
    s = inst.set_count
    w = set(_w_sites(s))
    reach = s * s
    for qx in range(-reach, reach + 1):
        for qy in range(-2, 3):
            if (qx, qy) == (0, 0):
                continue
            moved = {(x + qx, y + qy) for x, y in w}
            if len(moved - w) <= s:
                logger.debug(f"W overlaps its shift by ({qx}, {qy}) too much")
                return False
    return True


def parse_set_cover(text: str) -> SetCoverInstance:
    """First line N, then one set per line as space-separated integers.

    Raises:
        ParseError: for a malformed line
        ValidationError: for a well-formed but invalid instance
    """
    lines = [
        (lineno, line.split("#", 1)[0].strip())
        for lineno, line in enumerate(text.splitlines(), start=1)
    ]
    lines = [(lineno, line) for lineno, line in lines if line]
    if not lines:
        raise ParseError("empty instance", line=1)

    def ints(lineno: int, line: str) -> list[int]:
        try:
            return [int(token) for token in line.split()]
        except ValueError:
            bad = next(t for t in line.split() if not t.lstrip("+-").isdigit())
            raise ParseError(
                f"not an integer: {bad!r}", line=lineno, position=line.index(bad) + 1
            ) from None

    header = ints(*lines[0])
    if len(header) != 1:
        raise ParseError("first line must hold the universe size N", line=lines[0][0])
    return make_instance(header[0], [ints(lineno, line) for lineno, line in lines[1:]])


def serialize_set_cover(inst: SetCoverInstance) -> str:
    body = [str(inst.universe)] + [" ".join(str(e) for e in s) for s in inst.sets]
    return "\n".join(body) + "\n"


def load_set_cover(path: str | Path) -> SetCoverInstance:
    return parse_set_cover(Path(path).read_text(encoding="utf-8"))
