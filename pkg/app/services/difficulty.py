"""Certified difficulty search for directions and whole families.

A candidate seed set is enumerated as a shape in sheared coordinates: its
lowest site (by height, then position) sits at the origin and every further
site lies within the current gap bounds of an earlier one. Translations along
l_u are free in the sheared frame. Height is not: a raised set can grow where
the same set on l_0 stays finite, so each shape is run at every height until
its closure no longer reaches the rows the rules read below l_u, and a growing
raised placement is a witness.

A size-k set that is not gap-connected splits into smaller components. If
every smaller shape is finite at every height and its closure stays within
(growth_perp, growth_u) of its seeds, components more than span + 2 * growth
apart cannot interact, so exhausting the connected shapes of size < k proves
alpha(u) >= k. Gaps double until that envelope holds or gap_cap is reached.
"""

import functools
import json
import logging
import multiprocessing
import os
from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pydantic

from app.config import toolkit
from app.core.exceptions import StateError, ValidationError
from app.services.dynamics import HalfPlaneDynamics, StripRun, replay_certificate
from app.services.geometry import ccw_key
from app.services.stability import (
    critical_semicircle_candidates,
    directions_in,
    is_isolated_stable,
    is_stable,
    stability_profile,
)
from schemas.difficulty import (
    DifficultyCertificate,
    DifficultyResult,
    DifficultyStatus,
    ExhaustionRecord,
    SearchBudget,
)
from schemas.dynamics import ClosureOutcome, ClosureStatus, TranslateRepetition
from schemas.family import UpdateFamily
from schemas.geometry import Direction, LatticePoint
from schemas.stability import Classification, StabilityProfile

logger = logging.getLogger(__name__)

Cell = tuple[int, int]
Shape = tuple[Cell, ...]


@dataclass(frozen=True)
class ShapeOutcome:
    """Closure of one shape over its height sweep.

    status is CERTIFIED_INFINITE or BUDGET_EXHAUSTED at the first placement
    (raised by lift) where that happened, else CERTIFIED_FINITE.
    """

    shape: Shape
    status: ClosureStatus
    growth: Cell = (0, 0)
    height_clear: bool = False
    run: StripRun | None = None
    lift: int = 0

    def placed(self) -> list[Cell]:
        """(p, h) seeds of the placement the status refers to."""
        return [(p, h + self.lift) for h, p in self.shape]


def _growth(seeds: np.ndarray, cells: np.ndarray) -> Cell:
    """Largest (|dp|, |dh|) from a closure site to its nearest seed."""
    if not len(cells):
        return (0, 0)
    diff = np.abs(cells[:, None, :] - seeds[None, :, :])
    nearest = diff.max(axis=2).argmin(axis=1)
    picked = diff[np.arange(len(cells)), nearest]
    return (int(picked[:, 0].max()), int(picked[:, 1].max()))


def evaluate_shape(
    dynamics: HalfPlaneDynamics, shape: Shape, depth: int, height_cap: int
) -> ShapeOutcome:
    """Run a shape at heights 0, 1, ... until the half-plane is out of reach.

    A placement may grow where a lower one stays finite, so every height is
    run with repetition detection. Once the closure of a placement at height
    >= depth never enters rows below depth, every higher placement is a plain
    translate of it and the shape is finite at all heights.
    """
    growth = (0, 0)
    for lift in range(0, height_cap + 1):
        placed = [(p, h + lift) for h, p in shape]
        run = dynamics.run(placed)
        if run.status != ClosureStatus.CERTIFIED_FINITE:
            return ShapeOutcome(shape, run.status, growth, run=run, lift=lift)
        g = _growth(np.array(placed, dtype=np.int64), run.cells)
        growth = (max(growth[0], g[0]), max(growth[1], g[1]))
        if lift >= depth and int(run.cells[:, 1].min()) >= depth:
            return ShapeOutcome(shape, ClosureStatus.CERTIFIED_FINITE, growth, True)
    return ShapeOutcome(shape, ClosureStatus.CERTIFIED_FINITE, growth, False)


def _evaluate_batch(
    family: UpdateFamily,
    u: Direction,
    budget: SearchBudget,
    depth: int,
    height_cap: int,
    shapes: Sequence[Shape],
) -> list[ShapeOutcome]:
    dynamics = HalfPlaneDynamics(family, u, budget)
    return [evaluate_shape(dynamics, s, depth, height_cap) for s in shapes]


def _normalize(cells: set[Cell]) -> Shape:
    h0, p0 = min(cells)
    return tuple(sorted((h - h0, p - p0) for h, p in cells))


def extend_shapes(shapes: Sequence[Shape], gap_perp: int, gap_u: int) -> list[Shape]:
    """Gap-connected shapes one site larger, deduplicated, in sorted order.

    Shapes hold (h, p) cells with the least cell at the origin.
    """
    steps = [
        (dh, dp)
        for dh in range(-gap_u, gap_u + 1)
        for dp in range(-gap_perp, gap_perp + 1)
        if (dh, dp) != (0, 0)
    ]
    found: set[Shape] = set()
    for shape in shapes:
        present = set(shape)
        for h, p in shape:
            for dh, dp in steps:
                cell = (h + dh, p + dp)
                if cell in present:
                    continue
                found.add(_normalize(present | {cell}))
    return sorted(found)


class DirectionSearch:
    """Level-by-level search for alpha(u) at an isolated stable direction."""

    def __init__(
        self,
        family: UpdateFamily,
        u: Direction,
        budget: SearchBudget,
        threads: int = 1,
    ):
        self.family = family
        self.u = u
        self.dynamics = HalfPlaneDynamics(family, u, budget)
        self.budget = self.dynamics.budget
        self.threads = threads if threads > 0 else (os.cpu_count() or 1)

        rules = self.dynamics.rules
        self.span_perp = max(max(p for p, _ in r) - min(p for p, _ in r) for r in rules)
        self.span_u = max(max(h for _, h in r) - min(h for _, h in r) for r in rules)
        self.depth = max(max(-h for _, h in r) for r in rules)
        self.max_k = self.budget.levels(family.diameter)

    def _evaluate(self, shapes: list[Shape], pool) -> list[ShapeOutcome]:
        if pool is None or len(shapes) < 2 * self.threads:
            return [
                evaluate_shape(self.dynamics, s, self.depth, self.budget.height_bound)
                for s in shapes
            ]
        size = -(-len(shapes) // (4 * self.threads))
        chunks = [shapes[i : i + size] for i in range(0, len(shapes), size)]
        work = functools.partial(
            _evaluate_batch,
            self.family,
            self.u,
            self.budget,
            self.depth,
            self.budget.height_bound,
        )
        return [o for batch in pool.map(work, chunks) for o in batch]

    def _widen(self, gap: int, need: int) -> int | None:
        if gap >= need:
            return gap
        while gap < need:
            gap *= 2
        gap = min(gap, self.budget.gap_cap)
        return gap if gap >= need else None

    def run(self) -> DifficultyResult:
        if self.threads > 1:
            with multiprocessing.Pool(processes=self.threads) as pool:
                return self._search(pool)
        return self._search(None)

    def _search(self, pool) -> DifficultyResult:
        gap_perp = self.budget.gap_perp or max(self.span_perp, 1)
        gap_u = self.budget.gap_u or max(self.span_u, 1)

        while True:
            certified = 0
            envelope_holds = True
            height_clear = True
            checked = exhausted = 0
            growth = (0, 0)
            shapes: list[Shape] = [((0, 0),)]
            widened = False

            for level in range(1, self.max_k + 1):
                if level > 1:
                    shapes = extend_shapes(shapes, gap_perp, gap_u)
                outcomes = self._evaluate(shapes, pool)
                checked += len(outcomes)
                level_exhausted = sum(
                    o.status == ClosureStatus.BUDGET_EXHAUSTED for o in outcomes
                )
                exhausted += level_exhausted

                record = ExhaustionRecord(
                    gap_u=gap_u,
                    gap_perp=gap_perp,
                    height_swept=self.budget.height_bound,
                    certified_levels=certified,
                    candidates_checked=checked,
                    exhausted_candidates=exhausted,
                    growth_perp=growth[0],
                    growth_u=growth[1],
                    envelope_holds=envelope_holds,
                    height_condition_holds=height_clear,
                    step_budget=self.budget.step_budget,
                    window_half_width=self.budget.window_half_width,
                )
                hit = next(
                    (o for o in outcomes if o.status == ClosureStatus.CERTIFIED_INFINITE),
                    None,
                )
                if hit is not None:
                    return self._witness_result(level, hit, certified, record)

                finite = [o for o in outcomes if o.status == ClosureStatus.CERTIFIED_FINITE]
                height_clear = height_clear and all(o.height_clear for o in finite)
                # growth of levels below this one decides whether it is certified
                if certified == level - 1 and not level_exhausted and height_clear:
                    need_perp = self.span_perp + 2 * growth[0]
                    need_u = self.span_u + 2 * growth[1]
                    if gap_perp < need_perp or gap_u < need_u:
                        new_perp = self._widen(gap_perp, need_perp)
                        new_u = self._widen(gap_u, need_u)
                        if new_perp is not None and new_u is not None:
                            logger.info(
                                f"u={self.u}: widening gaps to ({new_perp}, {new_u}) "
                                f"after level {level}"
                            )
                            gap_perp, gap_u = new_perp, new_u
                            widened = True
                            break
                        envelope_holds = False
                    else:
                        certified = level
                logger.info(
                    f"u={self.u}: level {level} finite over {len(outcomes)} shapes "
                    f"(certified through {certified})"
                )

                for o in finite:
                    growth = (max(growth[0], o.growth[0]), max(growth[1], o.growth[1]))

            if widened:
                continue
            logger.info(f"u={self.u}: no witness up to size {self.max_k}")
            return DifficultyResult(
                value=None,
                lower_bound=certified + 1,
                status=DifficultyStatus.INDETERMINATE,
                direction=self.u,
                exhaustion=record,
            )

    def _witness_result(
        self, level: int, hit: ShapeOutcome, certified: int, record: ExhaustionRecord
    ) -> DifficultyResult:
        frame = self.dynamics.frame
        witness = tuple(
            sorted(
                (LatticePoint.of(*frame.to_lattice(p, h)) for p, h in hit.placed()),
                key=lambda z: (z.x, z.y),
            )
        )
        outcome = self.dynamics.outcome(hit.run) if hit.run is not None else None
        exact = certified == level - 1
        logger.info(
            f"u={self.u}: witness of size {level} "
            f"({'exact' if exact else 'upper bound only'})"
        )
        return DifficultyResult(
            value=level,
            lower_bound=level if exact else certified + 1,
            status=DifficultyStatus.EXACT if exact else DifficultyStatus.UPPER_BOUND_ONLY,
            direction=self.u,
            witness=witness,
            certificate=outcome.certificate if outcome else None,
            exhaustion=record,
        )


def _require_critical(profile: StabilityProfile) -> None:
    if profile.classification != Classification.CRITICAL:
        raise StateError(
            "difficulty is defined for critical families",
            details={"classification": profile.classification.value},
        )


def direction_difficulty(
    family: UpdateFamily,
    u: Direction,
    budget: SearchBudget | None = None,
    profile: StabilityProfile | None = None,
    threads: int | None = None,
) -> DifficultyResult:
    """alpha(u): 0 if unstable, infinite if stable but not isolated, else searched.

    Raises:
        StateError: if the family is not critical
    """
    profile = profile or stability_profile(family)
    _require_critical(profile)
    if not is_stable(profile, u):
        return DifficultyResult(value=0, status=DifficultyStatus.EXACT, direction=u)
    if not is_isolated_stable(profile, u):
        return DifficultyResult(
            infinite=True, lower_bound=1, status=DifficultyStatus.EXACT, direction=u
        )

    budget = budget or SearchBudget.from_settings()
    threads = threads if threads is not None else toolkit.settings.THREADS
    return DirectionSearch(family, u, budget, threads).run()


def family_difficulty(
    family: UpdateFamily,
    budget: SearchBudget | None = None,
    threads: int | None = None,
    profile: StabilityProfile | None = None,
) -> DifficultyResult:
    """alpha as the least, over candidate semicircles, of the largest alpha(u) inside.

    Exact only when the best certified upper bound meets the best lower bound.

    Raises:
        StateError: if the family is not critical
    """
    profile = profile or stability_profile(family)
    _require_critical(profile)
    candidates = critical_semicircle_candidates(profile)

    directions = sorted(
        {d for arc in candidates for d in directions_in(arc, profile)}, key=ccw_key
    )
    results = {
        d: direction_difficulty(family, d, budget, profile, threads) for d in directions
    }

    best_upper: int | None = None
    best_lower: int | None = None
    best_witness: DifficultyResult | None = None
    for arc in candidates:
        inside = [results[d] for d in directions_in(arc, profile)]
        uppers = [r.value for r in inside]
        upper = None if None in uppers else max(uppers, default=0)
        lower = max((r.lower_bound for r in inside), default=0)
        if upper is not None and (best_upper is None or upper < best_upper):
            best_upper = upper
            best_witness = max(inside, key=lambda r: r.value or 0, default=None)
        if best_lower is None or lower < best_lower:
            best_lower = lower
        logger.debug(f"Semicircle {arc}: upper {upper}, lower {lower}")

    lower_bound = best_lower or 0
    if best_upper is not None and best_upper == lower_bound:
        status = DifficultyStatus.EXACT
    elif best_upper is not None:
        status = DifficultyStatus.UPPER_BOUND_ONLY
    else:
        status = DifficultyStatus.INDETERMINATE
    logger.info(
        f"Family difficulty {best_upper} (lower bound {lower_bound}, {status.value}) "
        f"over {len(candidates)} semicircles"
    )
    return DifficultyResult(
        value=best_upper,
        lower_bound=lower_bound,
        status=status,
        direction=best_witness.direction if best_witness else None,
        witness=best_witness.witness if best_witness else None,
        certificate=best_witness.certificate if best_witness else None,
        components=tuple(results[d] for d in directions),
    )


def verify_witness(
    family: UpdateFamily,
    u: Direction,
    seeds: Sequence[LatticePoint],
    budget: SearchBudget | None = None,
    profile: StabilityProfile | None = None,
) -> tuple[bool, ClosureOutcome]:
    """Whether [H_u and seeds] minus H_u is certified infinite, with the outcome.

    Raises:
        StateError: if u is not an isolated stable direction
    """
    dynamics_budget = budget or SearchBudget.from_settings()
    profile = profile or stability_profile(family)
    if not is_isolated_stable(profile, u):
        raise StateError(
            "witness verification needs an isolated stable direction",
            details={"u": str(u)},
        )
    outcome = HalfPlaneDynamics(family, u, dynamics_budget).closure(seeds)
    logger.info(f"Witness of {len(seeds)} sites at u={u}: {outcome.status.value}")
    return outcome.is_infinite, outcome


def certificate_for(family: UpdateFamily, result: DifficultyResult) -> DifficultyCertificate:
    """Certificate of a direction result carrying a witness."""
    if result.direction is None or result.witness is None:
        raise StateError("only results with a witness produce certificates")
    return DifficultyCertificate(
        family=family,
        direction=result.direction,
        witness=result.witness,
        certificate=result.certificate,
        value=result.value,
        status=result.status,
        exhaustion=result.exhaustion,
    )


def save_certificate(
    family: UpdateFamily, result: DifficultyResult, path: str | Path
) -> DifficultyCertificate:
    """Write the witness certificate of a result as JSON."""
    cert = certificate_for(family, result)
    Path(path).write_text(cert.model_dump_json(indent=2), encoding="utf-8")
    return cert


def load_certificate(path: str | Path) -> DifficultyCertificate:
    """Read a certificate file.

    Raises:
        ValidationError: if the file is not a valid certificate
    """
    text = Path(path).read_text(encoding="utf-8")
    try:
        return DifficultyCertificate.model_validate_json(text)
    except pydantic.ValidationError as e:
        raise ValidationError(
            "malformed certificate file",
            details={"errors": json.loads(e.json(include_url=False))},
        ) from None


def verify_certificate(
    cert: DifficultyCertificate, budget: SearchBudget | None = None
) -> tuple[bool, ClosureOutcome]:
    """Re-run the witness closure and replay the stored certificate, if any."""
    ok, outcome = verify_witness(cert.family, cert.direction, cert.witness, budget)
    if ok and isinstance(cert.certificate, TranslateRepetition):
        ok = replay_certificate(cert.family, cert.certificate, cert.direction)
    return ok, outcome


class DifficultyService:
    """Difficulty queries on one family under one search budget."""

    def __init__(
        self,
        family: UpdateFamily,
        budget: SearchBudget | None = None,
        threads: int | None = None,
    ):
        self.family = family
        self.budget = budget or SearchBudget.from_settings()
        self.threads = threads
        self._profile: StabilityProfile | None = None

    @property
    def profile(self) -> StabilityProfile:
        if self._profile is None:
            self._profile = stability_profile(self.family)
        return self._profile

    def direction(self, u: Direction) -> DifficultyResult:
        """alpha(u); see direction_difficulty."""
        return direction_difficulty(self.family, u, self.budget, self.profile, self.threads)

    def overall(self) -> DifficultyResult:
        """alpha of the family; see family_difficulty."""
        return family_difficulty(self.family, self.budget, self.threads, self.profile)

    def verify_witness(
        self, u: Direction, seeds: Sequence[LatticePoint]
    ) -> tuple[bool, ClosureOutcome]:
        return verify_witness(self.family, u, seeds, self.budget, self.profile)

    def certify(
        self, result: DifficultyResult, path: str | Path
    ) -> DifficultyCertificate:
        """Save the witness certificate of a result of this family.

        Raises:
            ValidationError: if the result has no witness
        """
        if result.witness is None:
            raise ValidationError("no witness to certify", field="certificate")
        return save_certificate(self.family, result, path)

    def check_certificate(
        self, cert: DifficultyCertificate
    ) -> tuple[bool, ClosureOutcome]:
        """Re-check a certificate issued for this family.

        Raises:
            ValidationError: if the certificate names another family
        """
        if cert.family != self.family:
            raise ValidationError(
                "certificate belongs to a different family", field="family"
            )
        return verify_certificate(cert, self.budget)
