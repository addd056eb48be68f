"""Domain model and scoring mathematics for personality questionnaires.

A test is an ordered list of items (questions or statements) that all share a
single answer set.  Each psychological category carries a scale: a mapping
from items to score tuples, where the i-th tuple value is the number of
points earned for picking answer i.  A respondent's raw score for a category
is the sum of the selected tuple values over the category's bound items, and
it always lands inside [min_score, max_score].  That range is partitioned
into norm bands, each carrying the interpretation text reported when a raw
score falls in it.

All score arithmetic uses decimal.Decimal.  Band membership is decided by
comparing a score against band boundaries, so boundary values must compare
exactly; binary floats are rejected everywhere a score value enters the
model.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from typing import Iterable, Mapping, Sequence

DEMOGRAPHIC_KINDS = ("text", "integer", "choice")


class EngineError(Exception):
    """Base class for all errors raised by this package."""


class InexactNumberError(EngineError, TypeError):
    """A value that cannot be represented as an exact decimal was supplied."""


class UnknownCategoryError(EngineError):
    pass


class UnknownItemError(EngineError):
    pass


class UnboundCategoryError(EngineError):
    """The category has no scale bindings, so no score is defined for it."""


class DegenerateScaleError(EngineError):
    """Every tuple of the category's scale is constant: the minimum and
    maximum scores coincide and no band partition can exist."""


class ScoreOutOfRangeError(EngineError):
    """A score outside [min_score, max_score] was handed to a band lookup."""


class BandPartitionError(EngineError):
    """The category has no band partition, or its bands fail to cover the
    score being looked up (stale or missing norms)."""


class AnswerError(EngineError):
    """An answer map is missing a bound item or carries a bad answer index."""


class InvalidTestError(EngineError):
    """A test definition failed validation where a clean one is required."""

    def __init__(self, violations: Sequence["Violation"]):
        self.violations = list(violations)
        codes = ", ".join(v.code for v in self.violations)
        super().__init__(f"test definition is invalid: {codes}")


def as_decimal(value: Decimal | int | str) -> Decimal:
    """Coerce a score value to Decimal, refusing anything inexact.

    Accepts Decimal, int and decimal string literals.  Floats are rejected
    because their binary representation would make band-boundary comparisons
    unreliable.
    """
    if isinstance(value, bool):
        raise InexactNumberError(f"boolean {value!r} is not a score value")
    if isinstance(value, Decimal):
        result = value
    elif isinstance(value, int):
        result = Decimal(value)
    elif isinstance(value, float):
        raise InexactNumberError(
            f"refusing float {value!r}: pass a str or Decimal to keep scores exact"
        )
    elif isinstance(value, str):
        try:
            result = Decimal(value)
        except InvalidOperation as exc:
            raise InexactNumberError(f"not a decimal literal: {value!r}") from exc
    else:
        raise InexactNumberError(f"cannot use {type(value).__name__} as a score value")
    if not result.is_finite():
        raise InexactNumberError(f"score values must be finite, got {value!r}")
    return result


@dataclass(frozen=True)
class AnswerSet:
    """The ordered answer options shared by every item of a test.

    Order is significant: score tuples index into it, so it must never be
    reordered once scales exist.
    """

    options: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "options", tuple(self.options))

    @property
    def size(self) -> int:
        return len(self.options)


@dataclass(frozen=True)
class Item:
    """One question or statement.

    ``item_id`` is the stable identity that scales reference; ``ordinal`` is
    the presentation number in 1..m and changes when the author reorders,
    inserts or deletes items.
    """

    item_id: str
    ordinal: int
    text: str


@dataclass(frozen=True)
class Category:
    """A personality characteristic evaluated by the test (e.g. anxiety)."""

    category_id: str
    name: str


@dataclass(frozen=True)
class ScoreTuple:
    """Per-answer point values for one (category, item) pair.

    values[i] is awarded when the respondent picks answer option i.
    """

    values: tuple[Decimal, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", tuple(as_decimal(v) for v in self.values))

    @property
    def minimum(self) -> Decimal:
        return min(self.values)

    @property
    def maximum(self) -> Decimal:
        return max(self.values)

    @property
    def is_constant(self) -> bool:
        return all(v == self.values[0] for v in self.values)


@dataclass(frozen=True)
class ScaleBinding:
    """One record of the scale table: category, item and its score tuple."""

    category_id: str
    item_id: str
    scores: ScoreTuple


@dataclass(frozen=True)
class Band:
    """One norm interval of a category plus its interpretation text.

    Band 1 is closed on both ends, [lower, upper]; every later band is
    half-open, (lower, upper].  Consecutive bands share boundaries, so the
    partition covers [min_score, max_score] with no gaps or overlaps.
    """

    category_id: str
    index: int
    lower: Decimal
    upper: Decimal
    interpretation: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "lower", as_decimal(self.lower))
        object.__setattr__(self, "upper", as_decimal(self.upper))

    @property
    def closed_lower(self) -> bool:
        """Only the first band includes its lower boundary."""
        return self.index == 1

    def contains(self, score: Decimal) -> bool:
        if self.closed_lower:
            return self.lower <= score <= self.upper
        return self.lower < score <= self.upper


@dataclass(frozen=True)
class DemographicField:
    """One respondent attribute collected before administration."""

    name: str
    kind: str  # one of DEMOGRAPHIC_KINDS
    choices: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "choices", tuple(self.choices))


@dataclass(frozen=True)
class TestDefinition:
    """A fully authored test: items, answer set, categories, scales, bands.

    Immutable; authoring edits produce new values (see the generator module).
    """

    __test__ = False  # keep pytest from trying to collect this

    test_id: str
    title: str
    instruction: str
    answer_set: AnswerSet
    items: tuple[Item, ...]
    categories: tuple[Category, ...]
    bindings: tuple[ScaleBinding, ...]
    bands: tuple[Band, ...]
    demographics: tuple[DemographicField, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "items", tuple(self.items))
        object.__setattr__(self, "categories", tuple(self.categories))
        object.__setattr__(self, "bindings", tuple(self.bindings))
        object.__setattr__(self, "bands", tuple(self.bands))
        object.__setattr__(self, "demographics", tuple(self.demographics))

    @property
    def answer_count(self) -> int:
        return self.answer_set.size

    def items_in_order(self) -> tuple[Item, ...]:
        return tuple(sorted(self.items, key=lambda it: it.ordinal))

    def item_by_id(self, item_id: str) -> Item:
        for item in self.items:
            if item.item_id == item_id:
                return item
        raise UnknownItemError(f"no item with id {item_id!r}")

    def item_by_ordinal(self, ordinal: int) -> Item:
        for item in self.items:
            if item.ordinal == ordinal:
                return item
        raise UnknownItemError(f"no item with ordinal {ordinal}")

    def category_by_id(self, category_id: str) -> Category:
        for cat in self.categories:
            if cat.category_id == category_id:
                return cat
        raise UnknownCategoryError(f"no category with id {category_id!r}")

    def category_by_name(self, name: str) -> Category:
        for cat in self.categories:
            if cat.name == name:
                return cat
        raise UnknownCategoryError(f"no category named {name!r}")

    def scale_for(self, category_id: str) -> dict[str, ScoreTuple]:
        """Scale of a category: item_id -> score tuple, in binding order."""
        self.category_by_id(category_id)
        return {
            b.item_id: b.scores for b in self.bindings if b.category_id == category_id
        }

    def bound_item_ids(self, category_id: str) -> set[str]:
        return set(self.scale_for(category_id))

    def bands_for(self, category_id: str) -> tuple[Band, ...]:
        return tuple(
            sorted(
                (b for b in self.bands if b.category_id == category_id),
                key=lambda b: b.index,
            )
        )

    def inert_items(self) -> tuple[Item, ...]:
        """Items bound to no category; presented but never scored."""
        bound = {b.item_id for b in self.bindings}
        return tuple(it for it in self.items_in_order() if it.item_id not in bound)


@dataclass(frozen=True)
class CategoryResult:
    """Scored outcome for one category of one session."""

    category_id: str
    raw_score: Decimal
    band_index: int
    interpretation: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "raw_score", as_decimal(self.raw_score))


# ---------------------------------------------------------------------------
# Scoring operations
# ---------------------------------------------------------------------------


def _scale_or_raise(test: TestDefinition, category_id: str) -> dict[str, ScoreTuple]:
    scale = test.scale_for(category_id)
    if not scale:
        raise UnboundCategoryError(
            f"category {category_id!r} has no scale bindings; the test is incomplete"
        )
    return scale


def compute_min_score(test: TestDefinition, category_id: str) -> Decimal:
    """Lowest raw score achievable for the category.

    Equals the sum of each bound item's smallest tuple value, which is also
    the minimum of the total over every possible answer assignment.
    """
    scale = _scale_or_raise(test, category_id)
    return sum((t.minimum for t in scale.values()), Decimal(0))


def compute_max_score(test: TestDefinition, category_id: str) -> Decimal:
    """Highest raw score achievable for the category.

    Raises DegenerateScaleError when it would equal the minimum score (every
    tuple constant): such a scale admits no band partition.
    """
    scale = _scale_or_raise(test, category_id)
    highest = sum((t.maximum for t in scale.values()), Decimal(0))
    lowest = sum((t.minimum for t in scale.values()), Decimal(0))
    if lowest == highest:
        raise DegenerateScaleError(
            f"category {category_id!r}: minimum and maximum scores are both "
            f"{lowest}; every score tuple is constant"
        )
    return highest


def raw_score(
    test: TestDefinition, category_id: str, answers: Mapping[str, int]
) -> Decimal:
    """Sum the selected tuple values over the category's bound items.

    ``answers`` maps item_id to a 0-based answer index.  Entries for unbound
    items are ignored; a missing entry for a bound item is an error.
    """
    scale = _scale_or_raise(test, category_id)
    size = test.answer_count
    total = Decimal(0)
    for item_id, scores in scale.items():
        if item_id not in answers:
            raise AnswerError(
                f"no answer for item {item_id!r}, which is bound to "
                f"category {category_id!r}"
            )
        index = answers[item_id]
        if isinstance(index, bool) or not isinstance(index, int):
            raise AnswerError(f"answer index for item {item_id!r} must be an int")
        if not 0 <= index < size:
            raise AnswerError(
                f"answer index {index} for item {item_id!r} out of range 0..{size - 1}"
            )
        total += scores.values[index]
    return total


def band_of(test: TestDefinition, category_id: str, score: Decimal | int | str) -> Band:
    """Return the unique band whose interval contains the score."""
    score = as_decimal(score)
    lowest = compute_min_score(test, category_id)
    highest = compute_max_score(test, category_id)
    if not lowest <= score <= highest:
        raise ScoreOutOfRangeError(
            f"score {score} outside [{lowest}, {highest}] for category "
            f"{category_id!r} (corrupted session or stale norms)"
        )
    bands = test.bands_for(category_id)
    if not bands:
        raise BandPartitionError(f"category {category_id!r} has no bands")
    for band in bands:
        if band.contains(score):
            return band
    raise BandPartitionError(
        f"no band of category {category_id!r} contains score {score}; "
        f"the band partition is stale or broken"
    )


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    """One validation finding: a machine-readable code plus a human message."""

    code: str
    message: str
    severity: str = "error"  # "error" | "warning"


def _check_answer_set(test: TestDefinition, out: list[Violation]) -> None:
    options = test.answer_set.options
    if len(options) < 2:
        out.append(
            Violation(
                "ANSWER_SET_TOO_SMALL",
                f"answer set has {len(options)} option(s); at least 2 required",
            )
        )
    if any(not opt for opt in options):
        out.append(Violation("ANSWER_SET_EMPTY_LABEL", "answer labels must be non-empty"))
    if len(set(options)) != len(options):
        out.append(
            Violation("ANSWER_SET_DUPLICATE_LABEL", "answer labels must be pairwise distinct")
        )


def _check_items(test: TestDefinition, out: list[Violation]) -> None:
    seen_ids: set[str] = set()
    for item in test.items:
        if item.item_id in seen_ids:
            out.append(
                Violation("DUPLICATE_ITEM_ID", f"item id {item.item_id!r} used twice")
            )
        seen_ids.add(item.item_id)
        if not item.text:
            out.append(
                Violation("ITEM_EMPTY_TEXT", f"item {item.item_id!r} has empty text")
            )
    ordinals = [item.ordinal for item in test.items]
    if len(set(ordinals)) != len(ordinals):
        out.append(
            Violation("ORDINAL_DUPLICATE", f"duplicate ordinals in {sorted(ordinals)}")
        )
    elif set(ordinals) != set(range(1, len(ordinals) + 1)):
        out.append(
            Violation(
                "ORDINAL_GAP",
                f"ordinals {sorted(ordinals)} are not exactly 1..{len(ordinals)}",
            )
        )


def _check_categories(test: TestDefinition, out: list[Violation]) -> None:
    seen_ids: set[str] = set()
    seen_names: set[str] = set()
    for cat in test.categories:
        if cat.category_id in seen_ids:
            out.append(
                Violation(
                    "DUPLICATE_CATEGORY_ID", f"category id {cat.category_id!r} used twice"
                )
            )
        seen_ids.add(cat.category_id)
        if not cat.name:
            out.append(
                Violation("CATEGORY_EMPTY_NAME", f"category {cat.category_id!r} has empty name")
            )
        elif cat.name in seen_names:
            out.append(
                Violation("DUPLICATE_CATEGORY_NAME", f"category name {cat.name!r} used twice")
            )
        seen_names.add(cat.name)


def _check_demographics(test: TestDefinition, out: list[Violation]) -> None:
    seen: set[str] = set()
    for field in test.demographics:
        if not field.name:
            out.append(Violation("DEMOGRAPHIC_EMPTY_NAME", "demographic field with empty name"))
        if field.name in seen:
            out.append(
                Violation(
                    "DEMOGRAPHIC_DUPLICATE_FIELD",
                    f"demographic field {field.name!r} declared twice",
                )
            )
        seen.add(field.name)
        if field.kind not in DEMOGRAPHIC_KINDS:
            out.append(
                Violation(
                    "DEMOGRAPHIC_BAD_KIND",
                    f"demographic field {field.name!r} has kind {field.kind!r}; "
                    f"expected one of {DEMOGRAPHIC_KINDS}",
                )
            )
        if field.kind == "choice" and not field.choices:
            out.append(
                Violation(
                    "DEMOGRAPHIC_NO_CHOICES",
                    f"choice field {field.name!r} declares no choices",
                )
            )


def _check_bindings(test: TestDefinition, out: list[Violation]) -> None:
    item_ids = {item.item_id for item in test.items}
    category_ids = {cat.category_id for cat in test.categories}
    seen_pairs: set[tuple[str, str]] = set()
    size = test.answer_count
    for binding in test.bindings:
        if binding.category_id not in category_ids:
            out.append(
                Violation(
                    "UNKNOWN_CATEGORY_REF",
                    f"binding references unknown category {binding.category_id!r}",
                )
            )
        if binding.item_id not in item_ids:
            out.append(
                Violation(
                    "UNKNOWN_ITEM_REF",
                    f"binding references unknown item {binding.item_id!r}",
                )
            )
        pair = (binding.category_id, binding.item_id)
        if pair in seen_pairs:
            out.append(
                Violation(
                    "DUPLICATE_BINDING",
                    f"more than one binding for category {pair[0]!r}, item {pair[1]!r}",
                )
            )
        seen_pairs.add(pair)
        if len(binding.scores.values) != size:
            out.append(
                Violation(
                    "TUPLE_LENGTH_MISMATCH",
                    f"binding ({pair[0]!r}, {pair[1]!r}) has {len(binding.scores.values)} "
                    f"values for {size} answer options",
                )
            )


def _check_category_scales_and_bands(test: TestDefinition, out: list[Violation]) -> None:
    size = test.answer_count
    known_categories = {cat.category_id for cat in test.categories}
    for band in test.bands:
        if band.category_id not in known_categories:
            out.append(
                Violation(
                    "UNKNOWN_CATEGORY_REF",
                    f"band {band.index} references unknown category {band.category_id!r}",
                )
            )

    for cat in test.categories:
        scale = test.scale_for(cat.category_id)
        if not scale:
            out.append(
                Violation(
                    "CATEGORY_NO_BINDINGS",
                    f"category {cat.name!r} has no scale bindings",
                )
            )
            continue
        if any(len(t.values) != size or not t.values for t in scale.values()):
            continue  # already reported as TUPLE_LENGTH_MISMATCH
        lowest = sum((t.minimum for t in scale.values()), Decimal(0))
        highest = sum((t.maximum for t in scale.values()), Decimal(0))
        if lowest == highest:
            out.append(
                Violation(
                    "DEGENERATE_SCALE",
                    f"category {cat.name!r}: minimum and maximum scores are both {lowest}",
                )
            )
            continue
        bands = test.bands_for(cat.category_id)
        if not bands:
            out.append(
                Violation("MISSING_BANDS", f"category {cat.name!r} has no band partition")
            )
            continue
        indices = [band.index for band in bands]
        if indices != list(range(1, len(bands) + 1)):
            out.append(
                Violation(
                    "BAND_INDEX_GAP",
                    f"category {cat.name!r}: band indices {indices} are not 1..{len(bands)}",
                )
            )
            continue
        ok = True
        for band in bands:
            if not band.lower < band.upper:
                out.append(
                    Violation(
                        "BAND_INVALID_INTERVAL",
                        f"category {cat.name!r} band {band.index}: lower {band.lower} "
                        f"not below upper {band.upper}",
                    )
                )
                ok = False
            if not band.interpretation:
                out.append(
                    Violation(
                        "BAND_EMPTY_INTERPRETATION",
                        f"category {cat.name!r} band {band.index} has no interpretation text",
                    )
                )
        for prev, nxt in zip(bands, bands[1:]):
            if prev.upper != nxt.lower:
                out.append(
                    Violation(
                        "BAND_GAP",
                        f"category {cat.name!r}: band {prev.index} ends at {prev.upper} "
                        f"but band {nxt.index} starts at {nxt.lower}",
                    )
                )
                ok = False
        if ok and (bands[0].lower != lowest or bands[-1].upper != highest):
            out.append(
                Violation(
                    "BAND_BOUNDS_MISMATCH",
                    f"category {cat.name!r}: bands cover [{bands[0].lower}, "
                    f"{bands[-1].upper}] but the score range is [{lowest}, {highest}]",
                )
            )


def validate(test: TestDefinition) -> list[Violation]:
    """Check every structural invariant of a test definition.

    Returns an empty list for a fully well-formed test.  Findings with
    severity "error" make the test unusable; "warning" findings (inert
    items) are informational only.
    """
    out: list[Violation] = []
    if not test.test_id:
        out.append(Violation("EMPTY_TEST_ID", "test_id must be non-empty"))
    _check_answer_set(test, out)
    _check_items(test, out)
    _check_categories(test, out)
    _check_demographics(test, out)
    _check_bindings(test, out)
    _check_category_scales_and_bands(test, out)
    for item in test.inert_items():
        out.append(
            Violation(
                "INERT_ITEM",
                f"item {item.ordinal} ({item.item_id!r}) is bound to no category "
                f"and will not affect any score",
                severity="warning",
            )
        )
    return out


def errors_of(violations: Iterable[Violation]) -> list[Violation]:
    """Filter out warnings, keeping only findings that invalidate the test."""
    return [v for v in violations if v.severity == "error"]


def ensure_valid(test: TestDefinition) -> None:
    """Raise InvalidTestError when the test has any error-severity violation."""
    problems = errors_of(validate(test))
    if problems:
        raise InvalidTestError(problems)
