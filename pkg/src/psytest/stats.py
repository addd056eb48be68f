"""Cross-session descriptive statistics and CSV export.

Aggregation revalidates every persisted record against a fresh recomputation
from the stored answers; any disagreement means the test was edited after
the sessions were collected and is surfaced as the hard error STALE_NORMS
rather than silently mixing incompatible norms.

Standard deviation is the population form (divide by n, not n-1); CSV
headers say so explicitly.  The raw-matrix CSV is meant for external tools:
one row per session with demographic columns, one answer-index column per
item and raw-score plus band-index columns per category.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from decimal import Decimal

from psytest.model import EngineError, TestDefinition, band_of, raw_score
from psytest.executor import STATE_COMPLETED, SessionRecord, SessionMismatchError

STALE_NORMS = "STALE_NORMS"


class StaleNormsError(EngineError):
    """Persisted scores disagree with recomputation from answers."""

    code = STALE_NORMS


@dataclass(frozen=True)
class CategoryStats:
    """Descriptive statistics of one category's raw scores."""

    category_id: str
    n: int
    mean: Decimal
    std_dev: Decimal  # population standard deviation
    min: Decimal
    max: Decimal
    band_histogram: dict[int, int]


@dataclass(frozen=True)
class ItemStats:
    """How often each answer option was chosen for one item."""

    item_id: str
    answer_frequencies: tuple[int, ...]


def _revalidate(record: SessionRecord, test: TestDefinition) -> None:
    session, result = record
    if session.test_id != test.test_id:
        raise SessionMismatchError(
            f"session {session.session_id} belongs to test {session.test_id!r}, "
            f"not {test.test_id!r}"
        )
    if session.state != STATE_COMPLETED:
        raise SessionMismatchError(f"session {session.session_id} is not completed")
    item_ids = {item.item_id for item in test.items}
    answered = {a.item_id for a in session.answers}
    if answered != item_ids:
        raise StaleNormsError(
            f"{STALE_NORMS}: session {session.session_id} answered "
            f"{sorted(answered)} but the test now has items {sorted(item_ids)}"
        )
    size = test.answer_count
    for answer in session.answers:
        if not 0 <= answer.answer_index < size:
            raise StaleNormsError(
                f"{STALE_NORMS}: session {session.session_id} stores answer index "
                f"{answer.answer_index} for item {answer.item_id!r} but the test "
                f"has {size} options"
            )
    stored = {r.category_id: r for r in result.results}
    declared = {cat.category_id for cat in test.categories}
    if set(stored) != declared:
        raise StaleNormsError(
            f"{STALE_NORMS}: session {session.session_id} carries results for "
            f"{sorted(stored)} but the test declares categories {sorted(declared)}"
        )
    answers = session.answer_map()
    for category in test.categories:
        fresh_raw = raw_score(test, category.category_id, answers)
        fresh_band = band_of(test, category.category_id, fresh_raw)
        persisted = stored[category.category_id]
        if persisted.raw_score != fresh_raw or persisted.band_index != fresh_band.index:
            raise StaleNormsError(
                f"{STALE_NORMS}: session {session.session_id}, category "
                f"{category.category_id!r}: stored score {persisted.raw_score} / band "
                f"{persisted.band_index}, recomputed {fresh_raw} / band {fresh_band.index}"
            )


def aggregate(
    records: list[SessionRecord], test: TestDefinition
) -> tuple[list[CategoryStats], list[ItemStats]]:
    """Compute per-category and per-item statistics over completed sessions.

    An empty record list returns the explicit empty marker ([], []), never
    zero-valued statistics rows.
    """
    if not records:
        return [], []
    for record in records:
        _revalidate(record, test)
    n = len(records)

    category_stats = []
    for category in test.categories:
        raws = [
            next(r.raw_score for r in rec.result.results if r.category_id == category.category_id)
            for rec in records
        ]
        bands = [
            next(r.band_index for r in rec.result.results if r.category_id == category.category_id)
            for rec in records
        ]
        mean = sum(raws, Decimal(0)) / Decimal(n)
        variance = sum(((raw - mean) ** 2 for raw in raws), Decimal(0)) / Decimal(n)
        histogram: dict[int, int] = {}
        for band_index in bands:
            histogram[band_index] = histogram.get(band_index, 0) + 1
        category_stats.append(
            CategoryStats(
                category_id=category.category_id,
                n=n,
                mean=mean,
                std_dev=variance.sqrt(),
                min=min(raws),
                max=max(raws),
                band_histogram=histogram,
            )
        )

    item_stats = []
    size = test.answer_count
    for item in test.items_in_order():
        counts = [0] * size
        for record in records:
            counts[record.session.answer_map()[item.item_id]] += 1
        item_stats.append(ItemStats(item.item_id, tuple(counts)))
    return category_stats, item_stats


def export_matrix_csv(records: list[SessionRecord], test: TestDefinition) -> bytes:
    """RFC-4180 CSV: one row per session, loadable by external stats tools.

    Column order: session_id, demographic fields in schema order, one
    answer-index column per item (header = the item ordinal), one raw-score
    column per category (header = category name) and one band-index column
    per category (header = category name + "_band").
    """
    for record in records:
        _revalidate(record, test)
    buffer = io.StringIO()
    writer = csv.writer(buffer)
    items = test.items_in_order()
    header = (
        ["session_id"]
        + [f.name for f in test.demographics]
        + [str(item.ordinal) for item in items]
        + [cat.name for cat in test.categories]
        + [f"{cat.name}_band" for cat in test.categories]
    )
    writer.writerow(header)
    for session, result in records:
        by_category = {r.category_id: r for r in result.results}
        answers = session.answer_map()
        row = (
            [session.session_id]
            + [session.demographics.get(f.name, "") for f in test.demographics]
            + [answers[item.item_id] for item in items]
            + [str(by_category[cat.category_id].raw_score) for cat in test.categories]
            + [by_category[cat.category_id].band_index for cat in test.categories]
        )
        writer.writerow(row)
    return buffer.getvalue().encode("utf-8")


def export_stats_csv(category_stats: list[CategoryStats]) -> bytes:
    """CSV rendering of CategoryStats, one row per category.

    The histogram column packs "index:count" pairs separated by semicolons.
    """
    buffer = io.StringIO()
    writer = csv.writer(buffer)
    writer.writerow(
        ["category_id", "n", "mean", "std_dev_population", "min", "max", "band_histogram"]
    )
    for stats in category_stats:
        histogram = ";".join(
            f"{index}:{count}" for index, count in sorted(stats.band_histogram.items())
        )
        writer.writerow(
            [
                stats.category_id,
                stats.n,
                str(stats.mean),
                str(stats.std_dev),
                str(stats.min),
                str(stats.max),
                histogram,
            ]
        )
    return buffer.getvalue().encode("utf-8")
