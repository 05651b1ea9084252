"""Bernoulli initial sets on the torus and bisection estimates of p_c(n).

Trial i of a seed draws its uniform field from Philox keyed by the i-th child
of SeedSequence(seed), one float64 per site in row-major (x, y) order, and
infects the sites whose draw is below p. Every probe reuses the same fields,
so for each trial the percolation indicator is nondecreasing in p.
"""

import csv
import io
import logging

import numpy as np

from app.config import toolkit
from app.core.exceptions import ValidationError
from app.services.dynamics import fixpoint_grid
from schemas.family import UpdateFamily
from schemas.montecarlo import CurvePoint, PcEstimate

logger = logging.getLogger(__name__)


def _check(n: int, p: float | None = None) -> None:
    if n < 2:
        raise ValidationError("torus side must be at least 2", field="n")
    if p is not None and not 0.0 <= p <= 1.0:
        raise ValidationError("probability must lie in [0, 1]", field="p")


def _trial_generators(seed: int, trials: int) -> list[np.random.Generator]:
    children = np.random.SeedSequence(seed).spawn(trials)
    return [np.random.Generator(np.random.Philox(child)) for child in children]


def _fills(family: UpdateFamily, infected: np.ndarray) -> bool:
    fixpoint_grid(family.offsets(), infected, wrap=True)
    return bool(infected.all())


def sample_percolation(family: UpdateFamily, n: int, p: float, seed: int) -> bool:
    """Whether the closure of trial 0 of the seed fills Torus(n)."""
    _check(n, p)
    (rng,) = _trial_generators(seed, 1)
    field = rng.random((n, n))
    return _fills(family, field < p)


class TrialFields:
    """Uniform fields of a fixed set of trials, shared by every probe."""

    def __init__(self, n: int, trials: int, seed: int):
        _check(n)
        if trials < 1:
            raise ValidationError("trials must be positive", field="trials")
        self.n = n
        self.seed = seed
        self.fields = [rng.random((n, n)) for rng in _trial_generators(seed, trials)]

    def frequency(self, family: UpdateFamily, p: float) -> float:
        _check(self.n, p)
        hits = sum(_fills(family, field < p) for field in self.fields)
        return hits / len(self.fields)


def percolation_frequency(
    family: UpdateFamily, n: int, p: float, trials: int, seed: int
) -> float:
    """Fraction of trials whose closure fills the torus."""
    return TrialFields(n, trials, seed).frequency(family, p)


def estimate_pc(
    family: UpdateFamily,
    n: int,
    trials: int | None = None,
    tolerance: float | None = None,
    seed: int | None = None,
) -> PcEstimate:
    """Bisect the empirical fill probability against 1/2.

    The bracket keeps frequency(p_lo) < 1/2 <= frequency(p_hi) as measured.
    """
    cfg = toolkit.settings
    trials = cfg.MONTE_CARLO_TRIALS if trials is None else trials
    tolerance = cfg.MONTE_CARLO_TOLERANCE if tolerance is None else tolerance
    seed = cfg.MONTE_CARLO_SEED if seed is None else seed
    if not 0.0 < tolerance < 0.5:
        raise ValidationError("tolerance must lie in (0, 0.5)", field="tolerance")

    fields = TrialFields(n, trials, seed)
    curve = [CurvePoint(p=0.0, frequency=0.0, trials=trials)]
    curve.append(CurvePoint(p=1.0, frequency=1.0, trials=trials))
    lo, hi = 0.0, 1.0
    while hi - lo > tolerance:
        mid = (lo + hi) / 2
        freq = fields.frequency(family, mid)
        curve.append(CurvePoint(p=mid, frequency=freq, trials=trials))
        logger.debug(f"n={n}: p={mid:.6g} fills in {freq:.3f} of trials")
        if freq >= 0.5:
            hi = mid
        else:
            lo = mid

    logger.info(f"p_c({n}) in [{lo:.6g}, {hi:.6g}] from {trials} trials per probe")
    return PcEstimate(
        n=n,
        p_lo=lo,
        p_hi=hi,
        trials_per_probe=trials,
        seed=seed,
        curve=tuple(sorted(curve, key=lambda c: c.p)),
    )


def curve_to_csv(estimate: PcEstimate) -> str:
    """The probe curve as CSV with a p,frequency header."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["p", "frequency"])
    for point in estimate.curve:
        writer.writerow([repr(point.p), repr(point.frequency)])
    return out.getvalue()
