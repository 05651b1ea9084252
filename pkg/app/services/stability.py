"""Stable directions, isolated stable directions and classification."""

import logging

from app.core.exceptions import StateError
from app.services.geometry import (
    arc_contains,
    arcset_complement,
    arcset_contains,
    arcset_intersection,
    arcset_union,
    ccw_key,
    semicircle,
    unstable_arc_of_rule,
)
from schemas.family import UpdateFamily
from schemas.geometry import Arc, ArcKind, ArcSet, Direction, Side
from schemas.stability import Classification, StabilityProfile

logger = logging.getLogger(__name__)


def _non_isolated(stable: ArcSet) -> ArcSet:
    return ArcSet(arcs=tuple(a for a in stable.arcs if not a.is_point))


def _anchors(s: ArcSet) -> list[Direction]:
    found: set[Direction] = set()
    for arc in s.arcs:
        if arc.lo is not None:
            found.add(arc.lo)
        if arc.hi is not None:
            found.add(arc.hi)
    return sorted(found, key=ccw_key)


def _free_semicircle_exists(obstacle: ArcSet) -> bool:
    # an open semicircle avoiding a closed set can be rotated until one of its
    # ends touches the set, so endpoint-anchored semicircles suffice
    if obstacle.is_empty:
        return True
    for anchor in _anchors(obstacle):
        for side in Side:
            if arcset_intersection(obstacle, semicircle(anchor, side)).is_empty:
                return True
    return False


def _classify(stable: ArcSet) -> Classification:
    if _free_semicircle_exists(stable):
        return Classification.SUPERCRITICAL
    if _free_semicircle_exists(_non_isolated(stable)):
        return Classification.CRITICAL
    return Classification.SUBCRITICAL


def stability_profile(family: UpdateFamily) -> StabilityProfile:
    """Exact unstable/stable sets, isolated stable directions and class."""
    rule_arcs = tuple(unstable_arc_of_rule(rule) for rule in family.rules)
    unstable = arcset_union(rule_arcs)
    stable = arcset_complement(unstable)
    isolated = tuple(
        sorted((a.lo for a in stable.arcs if a.is_point and a.lo), key=ccw_key)
    )
    classification = _classify(stable)
    logger.debug(
        f"Stability profile: {len(family.rules)} rules, stable {stable}, "
        f"{len(isolated)} isolated, {classification.value}"
    )
    return StabilityProfile(
        unstable=unstable,
        stable=stable,
        isolated=isolated,
        classification=classification,
        rule_arcs=rule_arcs,
    )


def classify(family: UpdateFamily) -> Classification:
    """Supercritical, critical or subcritical."""
    return stability_profile(family).classification


def is_stable(profile: StabilityProfile, u: Direction) -> bool:
    return arcset_contains(profile.stable, u)


def is_isolated_stable(profile: StabilityProfile, u: Direction) -> bool:
    return u in profile.isolated


def directions_in(arc: Arc, profile: StabilityProfile) -> list[Direction]:
    """Isolated stable directions inside an arc, in counterclockwise order."""
    return [d for d in profile.isolated if arc_contains(arc, d)]


def critical_semicircle_candidates(profile: StabilityProfile) -> list[Arc]:
    """Open semicircles sufficient for the inf-sup family difficulty.

    Anchored at every isolated direction and every endpoint of a stable arc,
    on both sides, keeping those that meet no non-isolated stable direction.

    Raises:
        StateError: if the family is not critical
    """
    if profile.classification != Classification.CRITICAL:
        raise StateError(
            "semicircle candidates need a critical family",
            details={"classification": profile.classification.value},
        )

    blocking = _non_isolated(profile.stable)
    anchors = _anchors(profile.stable)
    candidates: list[Arc] = []
    for anchor in anchors:
        for side in Side:
            arc = semicircle(anchor, side)
            if arc.kind == ArcKind.EMPTY or arc in candidates:
                continue
            if arcset_intersection(blocking, arc).is_empty:
                candidates.append(arc)

    logger.debug(f"{len(candidates)} candidate semicircles from {len(anchors)} anchors")
    return candidates
