"""Tests for the certified difficulty search."""

import json
from itertools import combinations
from unittest.mock import patch

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from app.core.exceptions import StateError, ValidationError
from app.services.difficulty import (
    DifficultyService,
    direction_difficulty,
    evaluate_shape,
    extend_shapes,
    family_difficulty,
    load_certificate,
    save_certificate,
    verify_certificate,
    verify_witness,
)
from app.services.dynamics import HalfPlaneDynamics
from app.services.family import named_family, validate
from app.services.geometry import LATTICE_SYMMETRIES, apply_symmetry
from app.services.stability import stability_profile
from schemas.difficulty import DifficultyStatus, SearchBudget
from schemas.dynamics import ClosureStatus
from schemas.geometry import Direction, LatticePoint

E, N, W = Direction.of(1, 0), Direction.of(0, 1), Direction.of(-1, 0)
sites = st.tuples(st.integers(-2, 2), st.integers(-2, 2)).filter(lambda v: v != (0, 0))

# singletons on l_0 stay put, one raised to height 1 spreads along l_0
RAISED_GROWTH = [
    [(0, 1), (0, -1)],
    [(-1, 1), (1, -1)],
    [(-1, 0), (-2, 0), (0, -1)],
    [(1, 0), (2, 0), (0, -1)],
]


def points(*cells):
    return [LatticePoint.of(x, y) for x, y in cells]


def smallest_growing_subset(family, u, box, max_size, budget):
    """Size of the smallest subset of box whose closure grows, by exhaustion."""
    for size in range(1, max_size + 1):
        for cells in combinations(box, size):
            grows, _ = verify_witness(family, u, points(*cells), budget)
            if grows:
                return size
    return None


class TestShapes:
    """Test candidate shape enumeration."""

    def test_extend_singleton(self):
        """Test pairs within the gap bounds, least cell at the origin."""
        pairs = extend_shapes([((0, 0),)], gap_perp=1, gap_u=1)
        assert pairs == [
            ((0, 0), (0, 1)),
            ((0, 0), (1, -1)),
            ((0, 0), (1, 0)),
            ((0, 0), (1, 1)),
        ]

    def test_extend_deduplicates(self):
        """Test translates of the same shape appear once."""
        triples = extend_shapes(extend_shapes([((0, 0),)], 1, 0), 1, 0)
        assert triples == [((0, 0), (0, 1), (0, 2))]

    def test_evaluate_shape_height_sweep(self, toy, budget):
        """Test a finite singleton clears the half-plane once raised."""
        dynamics = HalfPlaneDynamics(toy, N, budget)
        outcome = evaluate_shape(dynamics, ((0, 0),), depth=2, height_cap=8)
        assert outcome.status == ClosureStatus.CERTIFIED_FINITE
        assert outcome.height_clear
        assert outcome.growth == (0, 0)

    def test_evaluate_shape_infinite(self, toy, budget):
        """Test a growing shape stops at height 0."""
        dynamics = HalfPlaneDynamics(toy, E, budget)
        outcome = evaluate_shape(dynamics, ((0, 0),), depth=2, height_cap=8)
        assert outcome.status == ClosureStatus.CERTIFIED_INFINITE
        assert outcome.run is not None

    def test_evaluate_shape_raised_placement_grows(self, budget):
        """Test growth at height 1 is reported with the raised placement."""
        dynamics = HalfPlaneDynamics(validate(RAISED_GROWTH), N, budget)
        outcome = evaluate_shape(dynamics, ((0, 0),), depth=1, height_cap=8)
        assert outcome.status == ClosureStatus.CERTIFIED_INFINITE
        assert outcome.lift == 1
        assert outcome.placed() == [(0, 1)]


class TestDirectionDifficulty:
    """Test alpha(u) for single directions."""

    def test_toy_east(self, toy, budget):
        """Test alpha((1, 0)) = 1 with a singleton witness."""
        result = direction_difficulty(toy, E, budget)
        assert result.value == 1
        assert result.status == DifficultyStatus.EXACT
        assert len(result.witness) == 1
        assert result.certificate is not None

    def test_toy_north(self, toy, budget):
        """Test alpha((0, 1)) = 2 with a horizontal pair."""
        result = direction_difficulty(toy, N, budget)
        assert result.value == 2
        assert result.is_exact
        assert result.lower_bound == 2
        assert result.exhaustion.certified_levels == 1
        xs = sorted(z.x for z in result.witness)
        assert xs[1] - xs[0] == 1
        assert all(z.y == 0 for z in result.witness)

    def test_raised_singleton_witness(self, budget):
        """Test a singleton that only grows off l_0 gives alpha = 1."""
        family = validate(RAISED_GROWTH)
        assert not verify_witness(family, N, points((0, 0)), budget)[0]
        assert verify_witness(family, N, points((0, 1)), budget)[0]

        result = direction_difficulty(family, N, budget)
        assert result.value == 1
        assert result.is_exact
        assert [(z.x, z.y) for z in result.witness] == [(0, 1)]
        assert verify_witness(family, N, list(result.witness), budget)[0]

    @pytest.mark.slow
    def test_appendix_three(self, budget):
        """Test alpha_{(0,1)}(U_3) = 3 with three consecutive sites."""
        family = named_family("appendix_uk", 3)
        result = direction_difficulty(family, N, budget)
        assert result.value == 3
        assert result.is_exact
        xs = sorted(z.x for z in result.witness)
        assert xs == list(range(xs[0], xs[0] + 3))
        assert verify_witness(family, N, list(result.witness), budget)[0]

    @pytest.mark.slow
    def test_worst_case_bounds_appendix_two(self):
        """Test the worst-case radii still give alpha_{(0,1)}(U_2) = 2."""
        family = named_family("appendix_uk", 2)
        budget = SearchBudget.paper_bounds(family.diameter)
        assert budget.escape_radius is not None
        result = direction_difficulty(family, N, budget)
        assert result.value == 2
        assert result.is_exact

    def test_unstable_direction_is_zero(self, toy, budget):
        """Test unstable directions have difficulty 0."""
        result = direction_difficulty(toy, Direction.of(1, 1), budget)
        assert result.value == 0
        assert result.is_exact

    def test_non_isolated_stable_is_infinite(self, toy, budget):
        """Test directions inside a stable arc have infinite difficulty."""
        result = direction_difficulty(toy, W, budget)
        assert result.infinite
        assert result.value is None
        assert result.display_value() == "inf"

    def test_requires_critical(self, east, budget):
        """Test non-critical families raise."""
        with pytest.raises(StateError):
            direction_difficulty(east, Direction.of(-1, -1), budget)

    def test_level_cap_leaves_lower_bound(self, toy):
        """Test a search capped below alpha reports a lower bound only."""
        result = direction_difficulty(toy, N, SearchBudget(max_k=1))
        assert result.value is None
        assert result.status == DifficultyStatus.INDETERMINATE
        assert result.lower_bound == 2
        assert result.display_value() == "?"

    def test_agrees_with_subset_oracle(self, budget):
        """Test against exhaustion over every subset of a small box."""
        family = named_family("appendix_uk", 2)
        box = [(x, y) for x in range(4) for y in range(2)]
        expected = smallest_growing_subset(family, N, box, 2, budget)
        assert expected == 2
        assert direction_difficulty(family, N, budget).value == expected

    @settings(max_examples=25, deadline=None)
    @given(sites, st.lists(sites, max_size=2))
    def test_more_rules_never_harder(self, v, rest):
        """Test a rule that leaves the stable set alone cannot raise alpha.

        A rule holding v and -v lies in no open half-plane.
        """
        toy = named_family("toy")
        extra = [v, (-v[0], -v[1]), *rest]
        richer = validate([r.offsets() for r in toy.rules] + [extra])
        before, after = stability_profile(toy), stability_profile(richer)
        assert after.stable == before.stable
        assert after.isolated == before.isolated

        result = direction_difficulty(richer, N, SearchBudget.from_settings())
        assert result.value is not None
        assert result.value <= 2

    @pytest.mark.slow
    def test_worker_pool(self, toy, budget):
        """Test the multiprocess search matches the sequential one."""
        sequential = direction_difficulty(toy, N, budget, threads=1)
        parallel = direction_difficulty(toy, N, budget, threads=2)
        assert parallel.value == sequential.value
        assert parallel.witness == sequential.witness


class TestFamilyDifficulty:
    """Test alpha of whole families."""

    def test_toy(self, toy, budget):
        """Test the right half-plane semicircle gives alpha = 1."""
        result = family_difficulty(toy, budget)
        assert result.value == 1
        assert result.is_exact
        assert result.direction == E
        assert {c.direction for c in result.components} == {E, N}

    def test_modified_two_neighbour(self, modified_two_neighbour, budget):
        """Test difficulty 1."""
        result = family_difficulty(modified_two_neighbour, budget)
        assert result.value == 1
        assert result.is_exact
        assert len(result.components) == 4

    def test_appendix_two(self, budget):
        """Test alpha(U_2) = 2."""
        result = family_difficulty(named_family("appendix_uk", 2), budget)
        assert result.value == 2
        assert result.is_exact

    def test_raised_singleton_witness(self, budget):
        """Test the family minimum sees growth from a raised singleton."""
        family = validate(RAISED_GROWTH)
        assert stability_profile(family).isolated == (N,)
        result = family_difficulty(family, budget)
        assert result.value == 1
        assert result.is_exact
        assert result.direction == N

    @pytest.mark.slow
    def test_appendix_four(self, budget, tmp_path):
        """Test alpha(U_4) = 4 with a replayable certificate."""
        family = named_family("appendix_uk", 4)
        result = family_difficulty(family, budget)
        assert result.value == 4
        assert result.is_exact
        assert result.direction == N

        (component,) = result.components
        xs = sorted(z.x for z in component.witness)
        assert xs == list(range(xs[0], xs[0] + 4))
        assert verify_witness(family, N, list(component.witness), budget)[0]

        path = tmp_path / "u4.cert.json"
        save_certificate(family, component, path)
        ok, outcome = verify_certificate(load_certificate(path), budget)
        assert ok
        assert outcome.is_infinite

    @pytest.mark.parametrize("matrix", LATTICE_SYMMETRIES)
    @pytest.mark.parametrize(
        ("rules", "alpha"),
        [
            (named_family("toy").offsets(), 1),
            (named_family("appendix_uk", 2).offsets(), 2),
            (RAISED_GROWTH, 1),
        ],
        ids=["toy", "appendix_two", "raised_growth"],
    )
    def test_invariant_under_lattice_symmetries(self, rules, alpha, matrix, budget):
        """Test alpha and the minimizing direction follow a lattice symmetry."""
        base = family_difficulty(validate(rules), budget)
        image = [[apply_symmetry(v, matrix) for v in rule] for rule in rules]
        result = family_difficulty(validate(image), budget)
        assert result.value == base.value == alpha
        assert result.is_exact
        expected = {
            Direction.of(*apply_symmetry(c.direction.as_tuple(), matrix))
            for c in base.components
            if c.value == alpha
        }
        assert result.direction in expected

    def test_requires_critical(self, north_east, budget):
        """Test subcritical families raise."""
        with pytest.raises(StateError):
            family_difficulty(north_east, budget)


class TestWitnesses:
    """Test witness verification and certificate files."""

    def test_verify_witness(self, toy, budget):
        """Test the pair grows and the singleton and empty set do not."""
        assert verify_witness(toy, N, points((0, 0), (1, 0)), budget)[0]
        assert not verify_witness(toy, N, points((0, 0)), budget)[0]
        assert not verify_witness(toy, N, [], budget)[0]

    def test_verify_witness_requires_isolated(self, toy, budget):
        """Test non-isolated directions raise."""
        with pytest.raises(StateError):
            verify_witness(toy, W, points((0, 0)), budget)

    def test_certificate_round_trip(self, toy, budget, tmp_path):
        """Test a saved certificate loads and verifies."""
        result = direction_difficulty(toy, N, budget)
        path = tmp_path / "toy.cert.json"
        saved = save_certificate(toy, result, path)

        loaded = load_certificate(path)
        assert loaded == saved
        ok, outcome = verify_certificate(loaded, budget)
        assert ok
        assert outcome.is_infinite

    def test_tampered_certificate_rejected(self, toy, budget, tmp_path):
        """Test a shrunken witness fails verification."""
        result = direction_difficulty(toy, N, budget)
        path = tmp_path / "toy.cert.json"
        save_certificate(toy, result, path)

        data = json.loads(path.read_text())
        data["witness"] = data["witness"][:1]
        path.write_text(json.dumps(data))
        ok, _ = verify_certificate(load_certificate(path), budget)
        assert not ok

    def test_malformed_certificate(self, tmp_path):
        """Test invalid files raise ValidationError."""
        path = tmp_path / "bad.json"
        path.write_text('{"direction": {"px": 0, "py": 1}}')
        with pytest.raises(ValidationError):
            load_certificate(path)

    def test_no_witness_no_certificate(self, toy, budget, tmp_path):
        """Test results without a witness cannot be certified."""
        result = direction_difficulty(toy, W, budget)
        with pytest.raises(StateError):
            save_certificate(toy, result, tmp_path / "x.json")


class TestDifficultyService:
    """Test the per-family service used by the command line."""

    @pytest.fixture
    def service(self, toy, budget):
        return DifficultyService(toy, budget, threads=1)

    def test_profile_computed_once(self, service):
        """Test every query shares one stability profile."""
        with patch(
            "app.services.difficulty.stability_profile", wraps=stability_profile
        ) as computed:
            assert service.direction(N).value == 2
            assert service.overall().value == 1
            assert service.verify_witness(N, points((0, 0), (1, 0)))[0]
        assert computed.call_count == 1

    def test_certify_and_check(self, service, tmp_path):
        """Test a certificate written by the service checks back."""
        path = tmp_path / "toy.cert.json"
        service.certify(service.direction(N), path)
        ok, outcome = service.check_certificate(load_certificate(path))
        assert ok
        assert outcome.is_infinite

    def test_certify_without_witness(self, service, tmp_path):
        """Test results without a witness are rejected."""
        with pytest.raises(ValidationError):
            service.certify(service.direction(Direction.of(1, 1)), tmp_path / "x.json")

    def test_certificate_of_other_family(self, service, budget, tmp_path):
        """Test a certificate for another family is rejected."""
        other = DifficultyService(named_family("appendix_uk", 2), budget)
        path = tmp_path / "u2.cert.json"
        other.certify(other.direction(N), path)
        with pytest.raises(ValidationError):
            service.check_certificate(load_certificate(path))
