"""Update family validation, metrics, named generators and file formats."""

import json
import logging
import re
from itertools import combinations
from pathlib import Path
from typing import Any

from app.core.arithmetic import in_range
from app.core.exceptions import (
    InvalidFamilyError,
    NotFoundError,
    ParseError,
    ValidationError,
)
from schemas.family import FamilyMetrics, FamilyName, Rule, UpdateFamily
from schemas.geometry import LatticePoint

logger = logging.getLogger(__name__)

_SITE = re.compile(r"^\(?\s*([+-]?\d+)\s*,\s*([+-]?\d+)\s*\)?$")

NEAREST_NEIGHBOURS = ((1, 0), (0, 1), (-1, 0), (0, -1))


def _coerce_site(raw: Any) -> tuple[int, int]:
    if isinstance(raw, LatticePoint):
        return raw.as_tuple()
    if isinstance(raw, dict):
        raw = (raw.get("x"), raw.get("y"))
    if not isinstance(raw, (tuple, list)) or len(raw) != 2:
        raise TypeError(f"site must be a pair, got {raw!r}")
    x, y = raw
    if isinstance(x, bool) or isinstance(y, bool):
        raise TypeError(f"site coordinates must be integers, got {raw!r}")
    if not isinstance(x, int) or not isinstance(y, int):
        raise TypeError(f"site coordinates must be integers, got {raw!r}")
    return (x, y)


def validate_with_warnings(raw: Any) -> tuple[UpdateFamily, list[str]]:
    """Validate a candidate family description.

    Accepts an UpdateFamily, a {"rules": [...]} mapping or a list of rules,
    each a list of (x, y) pairs. Every violation is collected with the index
    of the offending rule before anything is raised.

    Returns:
        The canonical family and the list of canonicalization warnings

    Raises:
        InvalidFamilyError: if any rule is empty, contains the origin, has a
            malformed or out-of-range coordinate, or the family is empty
    """
    if isinstance(raw, UpdateFamily):
        return raw, []
    if isinstance(raw, dict):
        raw = raw.get("rules", [])

    errors: list[dict[str, Any]] = []
    warnings: list[str] = []
    rules: list[Rule] = []
    seen: set[tuple[tuple[int, int], ...]] = set()

    raw_rules = list(raw) if raw is not None else []
    if not raw_rules:
        errors.append({"rule_index": None, "reason": "family has no rules"})

    for index, raw_rule in enumerate(raw_rules):
        if isinstance(raw_rule, Rule):
            raw_rule = raw_rule.sites
        try:
            sites = [_coerce_site(s) for s in raw_rule]
        except TypeError as e:
            errors.append({"rule_index": index, "reason": str(e)})
            continue
        if not sites:
            errors.append({"rule_index": index, "reason": "rule is empty"})
            continue
        if (0, 0) in sites:
            errors.append({"rule_index": index, "reason": "rule contains the origin"})
            continue
        if not all(in_range(c) for s in sites for c in s):
            errors.append(
                {"rule_index": index, "reason": "coordinate outside integer range"}
            )
            continue
        if len(set(sites)) != len(sites):
            warnings.append(f"rule {index}: duplicate sites removed")
        rule = Rule.of(*sites)
        if rule.sort_key() in seen:
            warnings.append(f"rule {index}: duplicate rule removed")
            continue
        seen.add(rule.sort_key())
        rules.append(rule)

    if errors:
        raise InvalidFamilyError(errors)

    for w in warnings:
        logger.warning(w)
    return UpdateFamily(rules=tuple(rules)), warnings


def validate(raw: Any) -> UpdateFamily:
    """Validate a candidate family description; see validate_with_warnings."""
    family, _ = validate_with_warnings(raw)
    return family


def metrics(family: UpdateFamily) -> FamilyMetrics:
    """Diameter D and input size ln(D) * sum |U|."""
    return FamilyMetrics(
        diameter=family.diameter,
        input_size=family.input_size,
        rule_count=family.rule_count,
        site_count=family.site_count,
    )


def _r_neighbour(r: int) -> list[list[tuple[int, int]]]:
    if not 1 <= r <= 4:
        raise ValidationError("r must be between 1 and 4", field="r")
    return [list(c) for c in combinations(NEAREST_NEIGHBOURS, r)]


def _appendix_uk(k: int) -> list[list[tuple[int, int]]]:
    if k < 2:
        raise ValidationError("appendix_uk needs k >= 2", field="k")
    return [
        [(0, -1), (k, 0), (k - 1, 0)],
        [(0, -1), (-k, 0), (-k + 1, 0)],
    ]


_FIXED_FAMILIES: dict[FamilyName, list[list[tuple[int, int]]]] = {
    FamilyName.EAST: [[(-1, 0)], [(0, -1)]],
    FamilyName.NORTH_EAST: [[(-1, 0), (0, -1)]],
    FamilyName.MODIFIED_TWO_NEIGHBOUR: [
        [(-1, 0), (0, 1)],
        [(0, -1), (-1, 0)],
        [(1, 0), (0, -1)],
        [(0, 1), (1, 0)],
    ],
    FamilyName.TOY: [
        [(-1, 0), (-2, 0), (0, -1), (0, -2)],
        [(-1, 0), (-2, 0), (0, 1)],
        [(1, 0), (2, 0), (0, -1), (0, -2)],
    ],
}


def named_family(name: str | FamilyName, *params: int) -> UpdateFamily:
    """Generate one of the built-in families.

    Args:
        name: Family identifier; "appendix_uk" takes k >= 2 and
            "r_neighbour" takes 1 <= r <= 4 as the single parameter
        *params: Integer parameters of parameterized families

    Raises:
        NotFoundError: if the name is unknown
        ValidationError: if a parameter is missing or out of range
    """
    try:
        key = FamilyName(name)
    except ValueError:
        raise NotFoundError("Family", str(name)) from None

    if key in _FIXED_FAMILIES:
        return validate(_FIXED_FAMILIES[key])
    if key == FamilyName.TWO_NEIGHBOUR:
        return validate(_r_neighbour(2))

    if len(params) != 1:
        raise ValidationError(f"{key.value} takes exactly one integer parameter")
    if key == FamilyName.APPENDIX_UK:
        return validate(_appendix_uk(params[0]))
    return validate(_r_neighbour(params[0]))


def parse_family_spec(spec: str) -> UpdateFamily:
    """Generate a family from a "name[:param]" string such as "appendix_uk:3"."""
    name, _, param = spec.partition(":")
    if not param:
        return named_family(name)
    try:
        value = int(param)
    except ValueError:
        raise ValidationError(f"bad family parameter: {param!r}") from None
    return named_family(name, value)


def serialize(family: UpdateFamily) -> str:
    """Line-oriented text: one rule per line, sites as x,y separated by spaces."""
    lines = [
        f"# bootdiff update family: {family.rule_count} rules, "
        f"D = {family.diameter}"
    ]
    for rule in family.rules:
        lines.append(" ".join(str(s) for s in rule.sites))
    return "\n".join(lines) + "\n"


def to_json(family: UpdateFamily) -> str:
    """Structured-object form of the family."""
    return json.dumps(
        {"rules": [[list(s) for s in r.offsets()] for r in family.rules]}, indent=2
    )


def parse_with_warnings(text: str) -> tuple[UpdateFamily, list[str]]:
    """Parse the text or JSON family format.

    Raises:
        ParseError: with line and position for malformed input
        InvalidFamilyError: for well-formed but invalid rules
    """
    if text.lstrip().startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise ParseError(e.msg, line=e.lineno, position=e.colno) from None
        return validate_with_warnings(data)

    rules: list[list[tuple[int, int]]] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        content = line.split("#", 1)[0]
        if not content.strip():
            continue
        sites: list[tuple[int, int]] = []
        for token in re.finditer(r"\S+", content):
            match = _SITE.match(token.group())
            if match is None:
                raise ParseError(
                    f"malformed site {token.group()!r}",
                    line=lineno,
                    position=token.start() + 1,
                )
            sites.append((int(match.group(1)), int(match.group(2))))
        rules.append(sites)
    return validate_with_warnings(rules)


def parse(text: str) -> UpdateFamily:
    """Parse a family; see parse_with_warnings."""
    family, _ = parse_with_warnings(text)
    return family


def load_family(path: str | Path) -> UpdateFamily:
    """Read a family file."""
    return parse(Path(path).read_text(encoding="utf-8"))


def save_family(family: UpdateFamily, path: str | Path) -> None:
    """Write a family file in the text format."""
    Path(path).write_text(serialize(family), encoding="utf-8")
