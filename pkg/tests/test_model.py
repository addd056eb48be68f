"""Core model: scoring math, band membership, validation."""

import random
from decimal import Decimal

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import helpers
from psytest import generator as gen
from psytest.model import (
    AnswerError,
    AnswerSet,
    Band,
    BandPartitionError,
    Category,
    DegenerateScaleError,
    InexactNumberError,
    Item,
    ScaleBinding,
    ScoreTuple,
    ScoreOutOfRangeError,
    TestDefinition,
    UnboundCategoryError,
    UnknownCategoryError,
    as_decimal,
    band_of,
    compute_max_score,
    compute_min_score,
    errors_of,
    raw_score,
    validate,
)


def make_test(tuples, options=("Yes", "No"), bands=()):
    """Hand-build a one-category test with the given per-item tuples."""
    items = tuple(Item(f"q{i}", i, f"Statement {i}") for i in range(1, len(tuples) + 1))
    bindings = tuple(
        ScaleBinding("c1", f"q{i}", ScoreTuple(tuple(values)))
        for i, values in enumerate(tuples, start=1)
    )
    band_objs = tuple(
        Band("c1", i, lower, upper, text)
        for i, (lower, upper, text) in enumerate(bands, start=1)
    )
    return TestDefinition(
        test_id="t1",
        title="Hand-built",
        instruction="",
        answer_set=AnswerSet(tuple(options)),
        items=items,
        categories=(Category("c1", "Trait"),),
        bindings=bindings,
        bands=band_objs,
    )


MIXED_TUPLES = [(2, -1), (0, 3), (-2, -2), ("1.5", "0.5")]


class TestDecimalCoercion:
    def test_accepts_int_str_decimal(self):
        assert as_decimal(3) == Decimal(3)
        assert as_decimal("2.5") == Decimal("2.5")
        assert as_decimal(Decimal("-0.125")) == Decimal("-0.125")

    def test_rejects_float(self):
        with pytest.raises(InexactNumberError):
            as_decimal(0.1)

    def test_rejects_bool_and_junk(self):
        with pytest.raises(InexactNumberError):
            as_decimal(True)
        with pytest.raises(InexactNumberError):
            as_decimal("not a number")
        with pytest.raises(InexactNumberError):
            as_decimal("NaN")


class TestScoreBounds:
    def test_counting_scale_min_is_zero(self):
        test = make_test([(1, 0)] * 3)
        assert compute_min_score(test, "c1") == 0

    def test_constant_tuple_forces_min(self):
        test = make_test([(5, 5)])
        assert compute_min_score(test, "c1") == 5

    def test_min_of_mixed_tuples_matches_oracle(self):
        test = make_test(MIXED_TUPLES)
        expected_min, _ = helpers.brute_force_bounds(test, "c1")
        assert expected_min == Decimal("-2.5")
        assert compute_min_score(test, "c1") == expected_min

    def test_counting_scale_max_counts_items(self):
        test = make_test([(1, 0)] * 3)
        assert compute_max_score(test, "c1") == 3

    def test_all_constant_tuples_are_degenerate(self):
        test = make_test([(2, 2)])
        with pytest.raises(DegenerateScaleError):
            compute_max_score(test, "c1")

    def test_max_of_mixed_tuples_matches_oracle(self):
        test = make_test(MIXED_TUPLES)
        _, expected_max = helpers.brute_force_bounds(test, "c1")
        assert expected_max == Decimal("4.5")
        assert compute_max_score(test, "c1") == expected_max

    def test_unknown_category(self):
        test = make_test([(1, 0)])
        with pytest.raises(UnknownCategoryError):
            compute_min_score(test, "nope")

    def test_category_without_bindings(self):
        test = helpers.counting_test(3)
        test = gen.add_category(test, "Unbound")
        unbound = test.category_by_name("Unbound").category_id
        with pytest.raises(UnboundCategoryError):
            compute_min_score(test, unbound)


class TestRawScore:
    def test_counts_first_option_answers(self):
        test = make_test([(1, 0)] * 3)
        answers = {"q1": 0, "q2": 1, "q3": 0}
        assert raw_score(test, "c1", answers) == 2

    def test_all_min_answers_hit_the_minimum(self):
        test = make_test(MIXED_TUPLES)
        answers = {}
        for item_id, scores in test.scale_for("c1").items():
            answers[item_id] = scores.values.index(scores.minimum)
        assert raw_score(test, "c1", answers) == compute_min_score(test, "c1")

    def test_matches_direct_resummation(self):
        test = make_test(MIXED_TUPLES)
        answers = {"q1": 0, "q2": 1, "q3": 0, "q4": 1}
        direct = sum(
            (test.scale_for("c1")[item_id].values[index] for item_id, index in answers.items()),
            Decimal(0),
        )
        assert direct == Decimal("3.5")
        assert raw_score(test, "c1", answers) == direct

    def test_unbound_items_in_map_are_ignored(self):
        test = helpers.counting_test(3, with_bands=False)
        test = gen.insert_item(test, 4, "Inert statement", item_id="q4")
        category_id = test.categories[0].category_id
        answers = {"q1": 0, "q2": 0, "q3": 0, "q4": 1}
        assert raw_score(test, category_id, answers) == 3

    def test_missing_answer_for_bound_item(self):
        test = make_test([(1, 0)] * 2)
        with pytest.raises(AnswerError):
            raw_score(test, "c1", {"q1": 0})

    def test_answer_index_out_of_range(self):
        test = make_test([(1, 0)] * 2)
        with pytest.raises(AnswerError):
            raw_score(test, "c1", {"q1": 0, "q2": 2})


class TestBandMembership:
    BANDS = [(0, 1, "low"), (1, 3, "high")]

    def test_shared_boundary_belongs_to_lower_band(self):
        test = make_test([(1, 0)] * 3, bands=self.BANDS)
        assert band_of(test, "c1", 1).index == 1

    def test_first_band_includes_its_lower_end(self):
        test = make_test([(1, 0)] * 3, bands=self.BANDS)
        assert band_of(test, "c1", 0).index == 1

    def test_interior_point_of_second_band(self):
        test = make_test([(1, 0)] * 3, bands=self.BANDS)
        assert band_of(test, "c1", 2).index == 2

    def test_score_outside_range(self):
        test = make_test([(1, 0)] * 3, bands=self.BANDS)
        with pytest.raises(ScoreOutOfRangeError):
            band_of(test, "c1", 4)
        with pytest.raises(ScoreOutOfRangeError):
            band_of(test, "c1", "-0.5")

    def test_missing_partition(self):
        test = make_test([(1, 0)] * 3)
        with pytest.raises(BandPartitionError):
            band_of(test, "c1", 1)

    def test_only_first_band_is_closed_below(self):
        test = make_test([(1, 0)] * 3, bands=self.BANDS)
        first, second = test.bands_for("c1")
        assert first.closed_lower and not second.closed_lower


class TestValidate:
    def test_well_formed_test_is_clean(self):
        assert validate(helpers.counting_test(3)) == []

    def test_ordinal_gap(self):
        test = make_test([(1, 0)] * 2, bands=[(0, 2, "all")])
        broken = TestDefinition(
            **{
                **test.__dict__,
                "items": (Item("q1", 1, "Statement 1"), Item("q2", 3, "Statement 2")),
            }
        )
        codes = [v.code for v in validate(broken)]
        assert "ORDINAL_GAP" in codes

    def test_band_bounds_mismatch(self):
        test = make_test([(1, 0)] * 3, bands=[(0, 1, "low"), (1, 2, "high")])
        codes = [v.code for v in errors_of(validate(test))]
        assert codes == ["BAND_BOUNDS_MISMATCH"]

    def test_band_gap(self):
        test = make_test([(1, 0)] * 3, bands=[(0, 1, "low"), (2, 3, "high")])
        codes = [v.code for v in errors_of(validate(test))]
        assert "BAND_GAP" in codes

    def test_tuple_length_mismatch(self):
        test = make_test([(1, 0, 2)])
        codes = [v.code for v in validate(test)]
        assert "TUPLE_LENGTH_MISMATCH" in codes

    def test_inert_item_is_a_warning_not_an_error(self):
        test = helpers.counting_test(2)
        test = gen.insert_item(test, 3, "Inert statement")
        violations = validate(test)
        assert [v.code for v in violations] == ["INERT_ITEM"]
        assert errors_of(violations) == []

    def test_duplicate_binding(self):
        test = make_test([(1, 0)])
        doubled = TestDefinition(
            **{**test.__dict__, "bindings": test.bindings + test.bindings}
        )
        assert "DUPLICATE_BINDING" in [v.code for v in validate(doubled)]

    def test_missing_bands(self):
        test = make_test([(1, 0)] * 2)
        assert "MISSING_BANDS" in [v.code for v in validate(test)]

    def test_degenerate_scale(self):
        test = make_test([(2, 2)])
        assert "DEGENERATE_SCALE" in [v.code for v in validate(test)]

    def test_unknown_refs(self):
        test = make_test([(1, 0)])
        dangling = TestDefinition(
            **{
                **test.__dict__,
                "bindings": test.bindings
                + (ScaleBinding("ghost", "q9", ScoreTuple((1, 0))),),
            }
        )
        codes = [v.code for v in validate(dangling)]
        assert "UNKNOWN_CATEGORY_REF" in codes and "UNKNOWN_ITEM_REF" in codes


# ---------------------------------------------------------------------------
# Properties
# ---------------------------------------------------------------------------


@given(st.integers(0, 10**9))
def test_raw_score_always_within_bounds(seed):
    rng = random.Random(seed)
    test = helpers.random_test(rng)
    answers = helpers.random_answer_map(rng, test)
    for category in test.categories:
        raw = raw_score(test, category.category_id, answers)
        assert compute_min_score(test, category.category_id) <= raw
        assert raw <= compute_max_score(test, category.category_id)


@given(st.integers(0, 10**9))
def test_bounds_equal_brute_force(seed):
    rng = random.Random(seed)
    test = helpers.random_test(rng)
    for category in test.categories:
        expected_min, expected_max = helpers.brute_force_bounds(test, category.category_id)
        assert compute_min_score(test, category.category_id) == expected_min
        assert compute_max_score(test, category.category_id) == expected_max


@given(st.integers(0, 10**9))
def test_changing_one_answer_shifts_score_by_tuple_delta(seed):
    rng = random.Random(seed)
    test = helpers.random_test(rng)
    category = rng.choice(test.categories)
    scale = test.scale_for(category.category_id)
    answers = helpers.random_answer_map(rng, test)
    item_id = rng.choice(sorted(scale))
    new_index = rng.randrange(test.answer_count)
    before = raw_score(test, category.category_id, answers)
    changed = {**answers, item_id: new_index}
    after = raw_score(test, category.category_id, changed)
    values = scale[item_id].values
    assert after - before == values[new_index] - values[answers[item_id]]


@settings(deadline=None)
@given(st.integers(0, 10**9))
def test_band_partition_is_exhaustive_and_exclusive(seed):
    rng = random.Random(seed)
    test = helpers.random_test(rng, with_bands=True)
    for category in test.categories:
        bands = test.bands_for(category.category_id)
        probes = set()
        for band in bands:
            probes.add(band.upper)
            probes.add((band.lower + band.upper) / 2)
        probes.add(bands[0].lower)
        probes.update(total for _, total in helpers.assignment_totals(test, category.category_id))
        for score in probes:
            holders = [band for band in bands if band.contains(score)]
            assert len(holders) == 1, f"score {score} sits in {len(holders)} bands"
            assert band_of(test, category.category_id, score) == holders[0]
        # each shared boundary resolves to the band it closes
        for band in bands:
            assert band_of(test, category.category_id, band.upper).index == band.index


@given(st.integers(0, 10**9))
def test_inert_item_changes_no_score(seed):
    rng = random.Random(seed)
    base = helpers.random_test(rng)
    position = rng.randint(1, len(base.items) + 1)
    padded = gen.insert_item(base, position, "Inert statement")
    base_ids = {item.item_id for item in base.items}
    inert_id = next(it.item_id for it in padded.items if it.item_id not in base_ids)
    answers = helpers.random_answer_map(rng, base)
    padded_answers = {**answers, inert_id: rng.randrange(padded.answer_count)}
    for category in base.categories:
        cid = category.category_id
        assert compute_min_score(base, cid) == compute_min_score(padded, cid)
        assert compute_max_score(base, cid) == compute_max_score(padded, cid)
        assert raw_score(base, cid, answers) == raw_score(padded, cid, padded_answers)
