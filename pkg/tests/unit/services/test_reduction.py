"""Tests for the Set Cover reduction."""

import pytest
from hypothesis import given
from hypothesis import strategies as st

from app.core.exceptions import ParseError, ValidationError
from app.services.difficulty import verify_witness
from app.services.geometry import make_arc
from app.services.reduction import (
    NORTH,
    check_w_rigidity,
    expected_site_count,
    is_cover,
    load_set_cover,
    make_instance,
    optimal_cover,
    parse_set_cover,
    predicted_alpha,
    reduce,
    reduction_report,
    reduction_witness,
    serialize_set_cover,
    solve_set_cover_bruteforce,
    verify_cover_witness,
    verify_reduction_upper_bound,
)
from app.services.stability import stability_profile
from schemas.difficulty import SearchBudget
from schemas.geometry import Direction
from schemas.stability import Classification

PAIRS = [[1, 2], [3, 4], [1, 3], [2, 4]]
SINGLETONS = [[1], [2], [3], [4]]
FIVE = [[1, 2], [3, 4], [5], [1, 3, 5], [2, 4]]
SIX = [[1, 2], [3, 4], [5, 6], [1, 3, 5], [2, 4, 6], [1, 6]]

# (N, sets, |S|^2 + |S| + optimal cover size, optimal cover minus one set)
REDUCED_INSTANCES = [
    (4, PAIRS, 22, (1,)),
    (4, SINGLETONS, 24, (1, 2, 3)),
    (5, FIVE, 32, (4,)),
    (6, SIX, 44, (4,)),
]

subsets = st.sets(st.integers(1, 4), min_size=1).map(sorted)
covering = st.lists(subsets, min_size=4, max_size=6).filter(
    lambda sets: {e for s in sets for e in s} == {1, 2, 3, 4}
)


@pytest.fixture(scope="module")
def pairs_instance():
    return make_instance(4, PAIRS)


@pytest.fixture(scope="module")
def pairs_family(pairs_instance):
    return reduce(pairs_instance)


@pytest.fixture
def reduction_budget():
    return SearchBudget(step_budget=4096, window_half_width=1 << 14)


class TestInstances:
    """Test instance validation and the text format."""

    def test_make_instance(self, pairs_instance):
        """Test a valid instance."""
        assert pairs_instance.set_count == 4
        assert pairs_instance.total_size == 8

    def test_invalid_instances(self):
        """Test size, coverage and range violations."""
        with pytest.raises(ValidationError):
            make_instance(3, [[1], [2], [3], [1, 2]])
        with pytest.raises(ValidationError):
            make_instance(4, [[1, 2], [3, 4], [1]])
        with pytest.raises(ValidationError) as exc_info:
            make_instance(5, SINGLETONS)
        assert exc_info.value.details["reasons"]

    def test_parse_and_serialize(self, pairs_instance):
        """Test the line format with comments."""
        text = "# universe\n4\n1 2\n3 4  # second\n1 3\n2 4\n"
        assert parse_set_cover(text) == pairs_instance
        assert parse_set_cover(serialize_set_cover(pairs_instance)) == pairs_instance

    def test_parse_errors(self):
        """Test malformed lines report their location."""
        with pytest.raises(ParseError) as exc_info:
            parse_set_cover("4\n1 2\n3 x\n")
        assert exc_info.value.line == 3
        assert exc_info.value.position == 3
        with pytest.raises(ParseError):
            parse_set_cover("4 5\n1\n")
        with pytest.raises(ParseError):
            parse_set_cover("# nothing\n")

    def test_load(self, tmp_path, pairs_instance):
        """Test reading an instance file."""
        path = tmp_path / "pairs.sc"
        path.write_text(serialize_set_cover(pairs_instance))
        assert load_set_cover(path) == pairs_instance


class TestSetCover:
    """Test the brute-force solver."""

    def test_pairs(self, pairs_instance):
        """Test {1,2} u {3,4} is optimal."""
        assert solve_set_cover_bruteforce(pairs_instance) == 2
        assert optimal_cover(pairs_instance) == (1, 2)

    def test_universe_set(self):
        """Test one set equal to the universe."""
        inst = make_instance(4, [[1, 2, 3, 4], [1], [2], [3]])
        assert solve_set_cover_bruteforce(inst) == 1

    def test_singletons(self):
        """Test disjoint singletons need every set."""
        assert solve_set_cover_bruteforce(make_instance(4, SINGLETONS)) == 4

    def test_predicted_alpha(self, pairs_instance):
        """Test |S|^2 + |S| + m."""
        assert predicted_alpha(pairs_instance) == 22
        assert predicted_alpha(make_instance(4, SINGLETONS)) == 24

    def test_is_cover(self, pairs_instance):
        """Test cover membership."""
        assert is_cover(pairs_instance, (3, 4))
        assert not is_cover(pairs_instance, (1, 3))

    @given(covering, subsets)
    def test_extra_set_never_hurts(self, sets, extra):
        """Test adding a set cannot enlarge the optimal cover."""
        base = make_instance(4, sets)
        grown = make_instance(4, sets + [extra])
        assert solve_set_cover_bruteforce(grown) <= solve_set_cover_bruteforce(base)

    @given(covering, st.data())
    def test_covers_closed_upwards(self, sets, data):
        """Test supersets of a cover are covers with larger witnesses."""
        inst = make_instance(4, sets)
        cover = optimal_cover(inst)
        extra = data.draw(st.sets(st.integers(1, len(sets)), max_size=2))
        wider = tuple(sorted(set(cover) | extra))
        assert is_cover(inst, wider)
        small = set(reduction_witness(inst, cover))
        assert small <= set(reduction_witness(inst, wider))


class TestReduce:
    """Test the generated family."""

    def test_sizes(self, pairs_instance, pairs_family):
        """Test 130 rules and the site count formula."""
        assert pairs_family.rule_count == 130
        assert pairs_family.site_count == expected_site_count(pairs_instance) == 11136

    def test_stability(self, pairs_family):
        """Test (0, 1) is the only isolated stable direction."""
        profile = stability_profile(pairs_family)
        assert profile.classification == Classification.CRITICAL
        assert profile.isolated == (NORTH,)

    def test_spreading_rule_arcs(self, pairs_instance):
        """Test U_0 and U_1 are unstable on (0, pi/2) and (pi/2, pi)."""
        profile = stability_profile(reduce(pairs_instance))
        east, north, west = Direction.of(1, 0), Direction.of(0, 1), Direction.of(-1, 0)
        assert make_arc(east, north) in profile.rule_arcs
        assert make_arc(north, west) in profile.rule_arcs

    def test_report(self, pairs_instance, pairs_family):
        """Test the report figures."""
        report = reduction_report(pairs_instance, pairs_family)
        assert report.rule_count == 130
        assert report.prose_rule_count == 4**3 * 8
        assert report.site_count == report.expected_site_count
        assert report.optimal_cover_size == 2
        assert report.predicted_alpha == 22

    def test_w_rigidity(self, pairs_instance):
        """Test W overlaps every nonzero translate in few sites."""
        assert check_w_rigidity(pairs_instance)


class TestWitness:
    """Test simulation of the cover witness."""

    def test_witness_size(self, pairs_instance):
        """Test |Z_0| = |S|^2 + |S| + |cover|."""
        assert len(reduction_witness(pairs_instance, (1, 2))) == 22
        with pytest.raises(ValidationError):
            reduction_witness(pairs_instance, (5,))

    @pytest.mark.slow
    @pytest.mark.parametrize(("universe", "sets", "alpha", "short"), REDUCED_INSTANCES)
    def test_cover_grows(self, universe, sets, alpha, short, reduction_budget):
        """Test the optimal cover witness infects l_u without bound."""
        inst = make_instance(universe, sets)
        family = reduce(inst)
        result = verify_reduction_upper_bound(inst, reduction_budget)
        assert result.verified
        assert result.is_cover
        assert result.witness_size == result.predicted_alpha == alpha

        grows, outcome = verify_witness(
            family, NORTH, list(result.witness), reduction_budget
        )
        assert grows
        assert outcome.is_infinite

    @pytest.mark.slow
    @pytest.mark.parametrize(("universe", "sets", "alpha", "short"), REDUCED_INSTANCES)
    def test_non_cover_stays_finite(
        self, universe, sets, alpha, short, reduction_budget
    ):
        """Test dropping a set from the optimal cover leaves a finite closure."""
        inst = make_instance(universe, sets)
        assert set(short) < set(optimal_cover(inst))
        result = verify_cover_witness(inst, short, reduction_budget)
        assert not result.is_cover
        assert not result.verified
        assert result.status.value == "certified_finite"
