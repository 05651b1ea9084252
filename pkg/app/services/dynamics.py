"""Closure engines for finite regions, half-plane strips and 1D processes."""

import logging
from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass

import numpy as np

from app.core.arithmetic import checked, dot
from app.core.exceptions import PreconditionError, StateError
from app.services.stability import is_isolated_stable, is_stable, stability_profile
from schemas.difficulty import SearchBudget
from schemas.dynamics import (
    BoundMode,
    ClosureOutcome,
    ClosureStatus,
    EscapeCertificate,
    HalfPlaneStrip,
    InfectionState,
    Line,
    OneDFamily,
    Rectangle,
    Torus,
    TranslateRepetition,
)
from schemas.family import UpdateFamily
from schemas.geometry import Direction, LatticePoint
from schemas.stability import StabilityProfile

logger = logging.getLogger(__name__)

Cell = tuple[int, int]
EscapeCheck = Callable[[np.ndarray], Cell | None]


def _bezout(a: int, b: int) -> tuple[int, int]:
    old_r, r = a, b
    old_s, s = 1, 0
    old_t, t = 0, 1
    while r != 0:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_s, s = s, old_s - q * s
        old_t, t = t, old_t - q * t
    if old_r < 0:
        old_s, old_t = -old_s, -old_t
    return old_s, old_t


class ShearFrame:
    """Coordinates of the lattice relative to a direction u = (a, b).

    A site is written z = p * v + h * w with v = (-b, a) spanning l_u and
    <w, u> = 1, so h = <z, u> is the row above l_u and p the position along
    l_u in steps of v. The map is a bijection of Z^2 onto Z^2.
    """

    def __init__(self, u: Direction):
        a, b = u.as_tuple()
        self.u = (a, b)
        self.v = (-b, a)
        self.norm = checked(a * a + b * b, "norm")
        s, t = _bezout(a, b)
        wv = dot(s, t, *self.v)
        c = (2 * wv + self.norm) // (2 * self.norm)
        self.w = (s - c * self.v[0], t - c * self.v[1])
        self._wv = dot(*self.w, *self.v)

    def to_sheared(self, x: int, y: int) -> Cell:
        h = dot(x, y, *self.u)
        p, rem = divmod(checked(dot(x, y, *self.v) - h * self._wv), self.norm)
        assert rem == 0
        return p, h

    def to_lattice(self, p: int, h: int) -> Cell:
        return (
            checked(p * self.v[0] + h * self.w[0]),
            checked(p * self.v[1] + h * self.w[1]),
        )

    def cells_to_lattice(self, cells: np.ndarray) -> np.ndarray:
        """Vectorized to_lattice over an (n, 2) array of (p, h)."""
        basis = np.array([self.v, self.w], dtype=np.int64)
        return cells.astype(np.int64) @ basis


@dataclass(frozen=True)
class Repetition:
    """A window of (p, h) cells that regenerates itself shifted by shift."""

    shift: int
    window: tuple[Cell, ...]
    rounds: int


@dataclass(frozen=True)
class StripRun:
    """Raw result of a strip engine run in sheared coordinates."""

    status: ClosureStatus
    cells: np.ndarray
    generation: int
    repetition: Repetition | None = None
    escape: Cell | None = None
    reason: str | None = None


class _Evolution:
    """Mutable state of one run: a (rows, width) boolean grid at offset left."""

    def __init__(self, engine: "StripEngine", seeds: Iterable[Cell]):
        self.engine = engine
        cells = np.array(sorted(set(seeds)), dtype=np.int64).reshape(-1, 2)
        rows = engine.top + 1
        margin = 2 * engine.margin
        if len(cells):
            lo, hi = int(cells[:, 0].min()), int(cells[:, 0].max())
        else:
            lo, hi = 0, 0
        self.left = lo - margin
        self.grid = np.zeros((rows, hi - lo + 1 + 2 * margin), dtype=bool)
        if len(cells):
            self.grid[cells[:, 1], cells[:, 0] - self.left] = True
        self.generation = 0

    def occupied(self) -> np.ndarray:
        return np.flatnonzero(self.grid.any(axis=0))

    def extent(self) -> int:
        cols = self.occupied()
        if not len(cols):
            return 0
        return max(abs(self.left + int(cols[0])), abs(self.left + int(cols[-1])))

    def keep_margin(self) -> None:
        cols = self.occupied()
        if not len(cols):
            return
        margin = self.engine.margin
        width = self.grid.shape[1]
        if cols[0] >= margin and cols[-1] < width - margin:
            return
        extra = max(width, 2 * margin)
        grown = np.zeros((self.grid.shape[0], width + 2 * extra), dtype=bool)
        grown[:, extra : extra + width] = self.grid
        self.grid = grown
        self.left -= extra

    def advance(self) -> bool:
        self.keep_margin()
        fresh = self.engine.infect(self.grid)
        if not fresh.any():
            return False
        self.grid |= fresh
        self.generation += 1
        return True

    def cells(self) -> np.ndarray:
        hs, cols = np.nonzero(self.grid)
        return np.stack([cols + self.left, hs], axis=1).astype(np.int64)

    def contains(self, cells: Sequence[Cell]) -> bool:
        width = self.grid.shape[1]
        for p, h in cells:
            col = p - self.left
            if not 0 <= col < width or not self.grid[h, col]:
                return False
        return True

    def block(self, start: int, width: int) -> np.ndarray:
        """Columns [start, start + width) of the grid, zero outside it."""
        out = np.zeros((self.grid.shape[0], width), dtype=bool)
        lo, hi = max(start, 0), min(start + width, self.grid.shape[1])
        if lo < hi:
            out[:, lo - start : hi - start] = self.grid[:, lo:hi]
        return out


class StripEngine:
    """Synchronous dynamics on rows 0..top of a sheared strip.

    Rows below 0 are permanently infected and rows above top stay healthy, so
    a rule needing a site above top never fires. Each row is a numpy boolean
    array; one round evaluates every rule as an AND of shifted rows.
    """

    def __init__(
        self, rules: Sequence[Sequence[Cell]], top: int, margin: int | None = None
    ):
        self.top = top
        self.reach = max((abs(dp) for rule in rules for dp, _ in rule), default=0) or 1
        self.margin = max(self.reach, margin or 0)
        self.span = max(
            (max(dp for dp, _ in r) - min(dp for dp, _ in r) for r in rules if r),
            default=0,
        )
        self.pattern_widths = tuple(m * (self.span + 1) for m in (1, 2, 4))
        self.row_terms: list[list[tuple[Cell, ...]]] = []
        for h in range(top + 1):
            terms: list[tuple[Cell, ...]] = []
            for rule in rules:
                if any(h + dh > top for _, dh in rule):
                    continue
                live = tuple((h + dh, dp) for dp, dh in rule if h + dh >= 0)
                if not live:
                    raise StateError("a rule lies inside the half-plane below l_u")
                terms.append(live)
            self.row_terms.append(terms)

    def infect(self, grid: np.ndarray) -> np.ndarray:
        """Sites newly infected by one synchronous round."""
        pad = self.reach
        width = grid.shape[1]
        padded = np.zeros((grid.shape[0], width + 2 * pad), dtype=bool)
        padded[:, pad : pad + width] = grid
        fresh = np.zeros_like(grid)
        for h, terms in enumerate(self.row_terms):
            for rule in terms:
                hit = np.ones(width, dtype=bool)
                for src, dp in rule:
                    hit &= padded[src, pad + dp : pad + dp + width]
                fresh[h] |= hit
        fresh &= ~grid
        return fresh

    def run(
        self,
        seeds: Iterable[Cell],
        max_rounds: int,
        half_width: int,
        replay_rounds: int = 256,
        detect: bool = True,
        escape: EscapeCheck | None = None,
    ) -> StripRun:
        """Evolve until stable, certified infinite or out of budget."""
        state = _Evolution(self, seeds)
        seen: dict[tuple[str, int, bytes], tuple[int, int]] = {}
        failed: set[tuple[str, int, bytes]] = set()

        while state.generation < max_rounds:
            if not state.advance():
                return StripRun(
                    ClosureStatus.CERTIFIED_FINITE, state.cells(), state.generation
                )
            if escape is not None:
                site = escape(state.cells())
                if site is not None:
                    return StripRun(
                        ClosureStatus.CERTIFIED_INFINITE,
                        state.cells(),
                        state.generation,
                        escape=site,
                    )
            if detect:
                rep = self._frontier_repetition(state, seen, failed, replay_rounds)
                if rep is not None:
                    return StripRun(
                        ClosureStatus.CERTIFIED_INFINITE,
                        state.cells(),
                        state.generation,
                        repetition=rep,
                    )
            if state.extent() > half_width:
                return StripRun(
                    ClosureStatus.BUDGET_EXHAUSTED,
                    state.cells(),
                    state.generation,
                    reason="window",
                )

        # the final round may still have been the last one
        state.keep_margin()
        if not self.infect(state.grid).any():
            return StripRun(
                ClosureStatus.CERTIFIED_FINITE, state.cells(), state.generation
            )
        return StripRun(
            ClosureStatus.BUDGET_EXHAUSTED, state.cells(), state.generation, reason="steps"
        )

    def _frontier_repetition(
        self,
        state: _Evolution,
        seen: dict[tuple[str, int, bytes], tuple[int, int]],
        failed: set[tuple[str, int, bytes]],
        replay_rounds: int,
    ) -> Repetition | None:
        cols = state.occupied()
        for side in ("right", "left"):
            for width in self.pattern_widths:
                start = int(cols[-1]) - width + 1 if side == "right" else int(cols[0])
                block = state.block(start, width)
                key = (side, width, block.tobytes())
                if key in failed:
                    continue
                position = state.left + start
                prior = seen.get(key)
                if prior is None:
                    seen[key] = (position, state.generation)
                    continue
                shift = position - prior[0]
                if (side == "right" and shift <= 0) or (side == "left" and shift >= 0):
                    continue
                hs, ps = np.nonzero(block)
                window = tuple((int(p) + position, int(h)) for h, p in zip(hs, ps))
                limit = min(replay_rounds, 4 * (state.generation - prior[1]) + 16)
                rounds = self.replay(window, shift, limit)
                if rounds is not None:
                    logger.debug(
                        f"Translate repetition at generation {state.generation}: "
                        f"shift {shift}, window {len(window)} cells, {rounds} rounds"
                    )
                    return Repetition(shift, window, rounds)
                failed.add(key)
        return None

    def replay(self, window: Sequence[Cell], shift: int, max_rounds: int) -> int | None:
        """Rounds after which window alone infects window + shift, or None."""
        target = [(p + shift, h) for p, h in window]
        state = _Evolution(self, window)
        while state.generation < max_rounds:
            if not state.advance():
                return None
            if state.contains(target):
                return state.generation
        return None


def _sheared_rules(frame: ShearFrame, family: UpdateFamily) -> list[list[Cell]]:
    return [[frame.to_sheared(x, y) for x, y in rule] for rule in family.offsets()]


def _strip_escape(frame: ShearFrame, radius: int) -> EscapeCheck:
    def check(cells: np.ndarray) -> Cell | None:
        if not len(cells):
            return None
        lattice = frame.cells_to_lattice(cells)
        far = np.flatnonzero(np.abs(lattice).max(axis=1) >= radius)
        if not len(far):
            return None
        p, h = cells[far[0]]
        return frame.to_lattice(int(p), int(h))

    return check


def _line_escape(seeds: Sequence[int], radius: int) -> EscapeCheck:
    anchors = np.array(sorted(seeds), dtype=np.int64)

    def check(cells: np.ndarray) -> Cell | None:
        if not len(cells) or not len(anchors):
            return None
        ps = cells[:, 0]
        idx = np.searchsorted(anchors, ps)
        right = np.abs(anchors[np.minimum(idx, len(anchors) - 1)] - ps)
        left = np.abs(ps - anchors[np.maximum(idx - 1, 0)])
        far = np.flatnonzero(np.minimum(left, right) > radius)
        if not len(far):
            return None
        return (int(ps[far[0]]), 0)

    return check


class HalfPlaneDynamics:
    """Dynamics of H_u plus a finite seed set for one family and direction.

    Engines are cached per strip height, so the difficulty search can run
    many seeds against the same rules.
    """

    def __init__(
        self,
        family: UpdateFamily,
        u: Direction,
        budget: SearchBudget | None = None,
    ):
        self.family = family
        self.u = u
        self.frame = ShearFrame(u)
        self.rules = _sheared_rules(self.frame, family)
        self.budget = (budget or SearchBudget.from_settings()).resolve(family.diameter)
        self._engines: dict[int, StripEngine] = {}
        self._escape = (
            _strip_escape(self.frame, self.budget.escape_radius)
            if self.budget.use_paper_bounds and self.budget.escape_radius
            else None
        )

    def engine(self, top: int) -> StripEngine:
        if top not in self._engines:
            self._engines[top] = StripEngine(self.rules, top, margin=self.family.diameter)
        return self._engines[top]

    def run(self, seeds: Sequence[Cell], detect: bool = True) -> StripRun:
        """Run from sheared seeds (all with h >= 0)."""
        if not seeds:
            return StripRun(ClosureStatus.CERTIFIED_FINITE, np.zeros((0, 2), np.int64), 0)
        top = max(h for _, h in seeds)
        return self.engine(top).run(
            seeds,
            max_rounds=self.budget.step_budget,
            half_width=self.budget.window_half_width,
            replay_rounds=self.budget.replay_rounds,
            detect=detect,
            escape=self._escape,
        )

    def closure(self, seeds: Iterable[LatticePoint]) -> ClosureOutcome:
        sheared = [self.frame.to_sheared(*z.as_tuple()) for z in seeds]
        below = [c for c in sheared if c[1] < 0]
        if below:
            p, h = below[0]
            raise PreconditionError(
                "seed set meets the half-plane below l_u",
                details={"site": str(LatticePoint.of(*self.frame.to_lattice(p, h)))},
            )
        return self.outcome(self.run(sorted(set(sheared))))

    def outcome(self, run: StripRun) -> ClosureOutcome:
        lattice = self.frame.cells_to_lattice(run.cells) if len(run.cells) else run.cells
        top = int(run.cells[:, 1].max()) if len(run.cells) else 0
        half = int(np.abs(run.cells[:, 0]).max()) if len(run.cells) else 0
        state = InfectionState(
            region=HalfPlaneStrip(u=self.u, height=top, half_width=half),
            infected=tuple(
                LatticePoint.of(x, y) for x, y in sorted(map(tuple, lattice.tolist()))
            ),
            generation=run.generation,
        )
        certificate = None
        if run.repetition is not None:
            rep = run.repetition
            certificate = TranslateRepetition(
                offset=LatticePoint.of(*self.frame.to_lattice(rep.shift, 0)),
                window=tuple(
                    LatticePoint.of(*self.frame.to_lattice(p, h)) for p, h in rep.window
                ),
                rounds=rep.rounds,
            )
        elif run.escape is not None:
            certificate = EscapeCertificate(
                site=LatticePoint.of(*run.escape),
                radius=self.budget.escape_radius or 0,
                generation=run.generation,
            )
        return ClosureOutcome(
            status=run.status, state=state, certificate=certificate, reason=run.reason
        )


def _region_grid(
    region: Rectangle | Torus, seeds: Iterable[LatticePoint]
) -> tuple[np.ndarray, Cell]:
    grid = np.zeros(region.shape, dtype=bool)
    if isinstance(region, Torus):
        for z in seeds:
            grid[z.x % region.n, z.y % region.n] = True
        return grid, (0, 0)
    for z in seeds:
        if not (region.x0 <= z.x <= region.x1 and region.y0 <= z.y <= region.y1):
            raise PreconditionError(
                "initial set leaves the rectangle", details={"site": str(z)}
            )
        grid[z.x - region.x0, z.y - region.y0] = True
    return grid, (region.x0, region.y0)


def _shift(grid: np.ndarray, dx: int, dy: int, wrap: bool) -> np.ndarray:
    """out[i, j] = grid[i + dx, j + dy], wrapping or healthy outside."""
    if wrap:
        return np.roll(grid, (-dx, -dy), axis=(0, 1))
    out = np.zeros_like(grid)
    w, h = grid.shape
    if abs(dx) >= w or abs(dy) >= h:
        return out
    out[max(0, -dx) : min(w, w - dx), max(0, -dy) : min(h, h - dy)] = grid[
        max(0, dx) : min(w, w + dx), max(0, dy) : min(h, h + dy)
    ]
    return out


def fixpoint_grid(
    rules: Sequence[Sequence[Cell]], grid: np.ndarray, wrap: bool = False
) -> int:
    """Close a dense grid in place; returns the number of rounds that changed it."""
    offsets = sorted({o for rule in rules for o in rule})
    generation = 0
    while not grid.all():
        shifted = {o: _shift(grid, o[0], o[1], wrap) for o in offsets}
        fresh = np.zeros_like(grid)
        for rule in rules:
            hit = shifted[rule[0]].copy()
            for o in rule[1:]:
                hit &= shifted[o]
            fresh |= hit
        fresh &= ~grid
        if not fresh.any():
            break
        grid |= fresh
        generation += 1
    return generation


def closure_finite(
    family: UpdateFamily,
    region: Rectangle | Torus,
    seeds: Iterable[LatticePoint],
) -> InfectionState:
    """Least fixpoint on a rectangle (healthy outside) or a torus.

    Raises:
        PreconditionError: if a seed lies outside the rectangle
    """
    grid, (x0, y0) = _region_grid(region, seeds)
    generation = fixpoint_grid(family.offsets(), grid, wrap=isinstance(region, Torus))
    infected = tuple(LatticePoint.of(int(i) + x0, int(j) + y0) for i, j in np.argwhere(grid))
    return InfectionState(region=region, infected=infected, generation=generation)


def induced_1d(
    family: UpdateFamily, u: Direction, profile: StabilityProfile | None = None
) -> OneDFamily:
    """The process on l_u: rules inside H_u and l_u, restricted to l_u.

    Positions are in steps of the primitive vector (-u_y, u_x) spanning l_u.

    Raises:
        StateError: if u is unstable
    """
    profile = profile or stability_profile(family)
    if not is_stable(profile, u):
        raise StateError("induced process needs a stable direction", details={"u": str(u)})
    frame = ShearFrame(u)
    rules: list[tuple[int, ...]] = []
    for rule in _sheared_rules(frame, family):
        if all(dh <= 0 for _, dh in rule):
            rules.append(tuple(sorted(dp for dp, dh in rule if dh == 0)))
    logger.debug(f"Induced process on l_{u}: {len(rules)} rules")
    return OneDFamily(rules=tuple(rules), step_norm_sq=frame.norm)


def closure_1d(
    family: OneDFamily,
    seeds: Iterable[int],
    bound_mode: BoundMode = BoundMode.ADAPTIVE,
    budget: SearchBudget | None = None,
) -> ClosureOutcome:
    """Closure of a finite subset of the line.

    PAPER_BOUND also certifies growth once a site lies farther from the seeds
    than D1^2 * 2^D1, and then always terminates with a certificate: every
    non-final round adds a site within that distance.
    """
    budget = budget or SearchBudget.from_settings()
    points = sorted(set(seeds))
    engine = StripEngine(
        [[(s, 0) for s in r] for r in family.rules], 0, margin=family.diameter
    )
    max_rounds = budget.step_budget
    half_width = budget.window_half_width
    escape = None
    radius = None
    if bound_mode == BoundMode.PAPER_BOUND and points:
        d1 = max(family.diameter, 1)
        radius = d1 * d1 * 2**d1
        escape = _line_escape(points, radius)
        max_rounds = max(max_rounds, len(points) * (2 * radius + 1) + 1)
        half_width = max(half_width, max(abs(p) for p in points) + radius + 1)

    run = engine.run(
        [(p, 0) for p in points],
        max_rounds=max_rounds,
        half_width=half_width,
        replay_rounds=budget.replay_rounds,
        escape=escape,
    )
    state = InfectionState(
        region=Line(),
        infected=tuple(LatticePoint.of(int(p), 0) for p in sorted(run.cells[:, 0])),
        generation=run.generation,
    )
    certificate = None
    if run.repetition is not None:
        certificate = TranslateRepetition(
            offset=LatticePoint.of(run.repetition.shift, 0),
            window=tuple(LatticePoint.of(p, 0) for p, _ in run.repetition.window),
            rounds=run.repetition.rounds,
        )
    elif run.escape is not None:
        certificate = EscapeCertificate(
            site=LatticePoint.of(*run.escape), radius=radius or 0, generation=run.generation
        )
    logger.debug(f"1D closure of {len(points)} sites: {run.status.value}")
    return ClosureOutcome(
        status=run.status, state=state, certificate=certificate, reason=run.reason
    )


def half_plane_closure(
    family: UpdateFamily,
    u: Direction,
    seeds: Iterable[LatticePoint],
    budget: SearchBudget | None = None,
    profile: StabilityProfile | None = None,
) -> ClosureOutcome:
    """Closure of H_u and a finite set above it, restricted to the upper side.

    Raises:
        StateError: if u is not an isolated stable direction
        PreconditionError: if a seed lies in H_u
    """
    profile = profile or stability_profile(family)
    if not is_isolated_stable(profile, u):
        raise StateError(
            "half-plane closure needs an isolated stable direction",
            details={"u": str(u)},
        )
    return HalfPlaneDynamics(family, u, budget).closure(seeds)


def replay_certificate(
    family: UpdateFamily | OneDFamily,
    certificate: TranslateRepetition,
    u: Direction | None = None,
) -> bool:
    """Re-check that the window alone regenerates its translate."""
    if isinstance(family, OneDFamily):
        engine = StripEngine([[(s, 0) for s in r] for r in family.rules], 0)
        window = [(z.x, 0) for z in certificate.window]
        shift = certificate.offset.x
    else:
        if u is None:
            raise PreconditionError("replaying a half-plane certificate needs u")
        frame = ShearFrame(u)
        window = [frame.to_sheared(*z.as_tuple()) for z in certificate.window]
        shift, dh = frame.to_sheared(*certificate.offset.as_tuple())
        if dh != 0 or any(h < 0 for _, h in window):
            return False
        if not window:
            return False
        engine = StripEngine(
            _sheared_rules(frame, family), max(h for _, h in window), margin=family.diameter
        )
    if shift == 0 or not window:
        return False
    rounds = engine.replay(window, shift, certificate.rounds)
    ok = rounds is not None
    logger.info(f"Certificate replay {'succeeded' if ok else 'failed'}")
    return ok


def render_bitmap(state: InfectionState) -> str:
    """Portable bitmap text: '#' infected, '.' healthy, top row first."""
    region = state.region
    cells = state.cells
    if isinstance(region, (Rectangle, Torus)):
        if isinstance(region, Rectangle):
            xs = range(region.x0, region.x1 + 1)
            ys = range(region.y1, region.y0 - 1, -1)
        else:
            xs = range(region.n)
            ys = range(region.n - 1, -1, -1)
        return "\n".join("".join("#" if (x, y) in cells else "." for x in xs) for y in ys)

    if not cells:
        return ""
    if isinstance(region, Line):
        xs = [x for x, _ in cells]
        span = range(min(xs) - 1, max(xs) + 2)
        return "".join("#" if (x, 0) in cells else "." for x in span)

    frame = ShearFrame(region.u)
    sheared = {frame.to_sheared(x, y) for x, y in cells}
    ps = [p for p, _ in sheared]
    return "\n".join(
        "".join("#" if (p, h) in sheared else "." for p in range(min(ps) - 1, max(ps) + 2))
        for h in range(region.height, -1, -1)
    )
