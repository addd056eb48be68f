"""Shared test helpers.

- a brute-force scoring oracle that enumerates every complete answer
  assignment and sums tuple values directly, independent of the library's
  scoring path
- seeded random builders for tests, band partitions and sessions
- structural comparison that ignores how fresh ids were allocated
"""

from __future__ import annotations

import itertools
import random
from decimal import Decimal

from psytest import generator as gen
from psytest.model import DemographicField, TestDefinition, compute_max_score, compute_min_score

ANSWER_POOLS = {
    2: [("Yes", "No"), ("True", "False"), ("I like it", "I don't like it")],
    3: [("Often", "Sometimes", "Never"), ("Agree", "I'm not sure", "Disagree")],
}


def assignment_totals(test: TestDefinition, category_id: str):
    """Yield (answer_map, total) for every assignment over bound items.

    Sums tuple values by direct lookup; never calls the scoring functions.
    """
    scale = test.scale_for(category_id)
    item_ids = sorted(scale)
    size = test.answer_count
    for combo in itertools.product(range(size), repeat=len(item_ids)):
        total = Decimal(0)
        for item_id, index in zip(item_ids, combo):
            total += scale[item_id].values[index]
        yield dict(zip(item_ids, combo)), total


def brute_force_bounds(test: TestDefinition, category_id: str) -> tuple[Decimal, Decimal]:
    totals = [total for _, total in assignment_totals(test, category_id)]
    return min(totals), max(totals)


def counting_test(m: int = 3, with_bands: bool = True) -> TestDefinition:
    """The yes/no fixture: m items, one category, every tuple <1, 0>.

    The raw score counts first-option answers; bands split [0, m] at 1.
    """
    test = gen.new_test(
        f"yesno-{m}",
        "Yes/no counting fixture",
        ("Yes", "No"),
        instruction="Answer honestly.",
        category_names=["Positivity"],
    )
    category_id = test.categories[0].category_id
    for i in range(1, m + 1):
        test = gen.insert_item(test, i, f"Statement {i}", item_id=f"q{i}")
        test = gen.bind_scale(test, category_id, f"q{i}", (1, 0))
    if with_bands:
        test = gen.set_bands(test, category_id, (0, 1, m), ("low", "high"))
    return test


def random_test(
    rng: random.Random,
    min_items: int = 2,
    max_items: int = 4,
    option_counts: tuple[int, ...] = (2, 3),
    value_pool: tuple[int, ...] = (-2, -1, 0, 1, 2, 3),
    max_categories: int = 2,
    with_bands: bool = False,
    with_demographics: bool = False,
) -> TestDefinition:
    """Build a small random but structurally sound test."""
    size = rng.choice(option_counts)
    options = rng.choice(ANSWER_POOLS[size])
    m = rng.randint(min_items, max_items)
    n_categories = rng.randint(1, max_categories)
    demographics = ()
    if with_demographics:
        demographics = (
            DemographicField("sex", "choice", ("F", "M", "X")),
            DemographicField("age", "integer"),
            DemographicField("settlement", "text"),
        )
    test = gen.new_test(
        f"random-{rng.randrange(10**9)}",
        "Randomly generated test",
        options,
        instruction="Pick the answer that fits best.",
        category_names=[f"Trait {chr(ord('A') + i)}" for i in range(n_categories)],
        demographics=demographics,
    )
    for i in range(1, m + 1):
        test = gen.insert_item(test, i, f"Statement {i}")
    items = test.items_in_order()
    for category in test.categories:
        bound = rng.sample(items, rng.randint(1, m))
        non_constant_seen = False
        for item in bound:
            values = [rng.choice(value_pool) for _ in range(size)]
            if len(set(values)) > 1:
                non_constant_seen = True
            test = gen.bind_scale(test, category.category_id, item.item_id, values)
        if not non_constant_seen:
            # force a usable score range so the scale is never degenerate
            pool = sorted(set(value_pool))
            values = [pool[0] if i % 2 == 0 else pool[-1] for i in range(size)]
            test = gen.bind_scale(test, category.category_id, bound[0].item_id, values)
    if with_bands:
        for category in test.categories:
            test = random_bands(rng, test, category.category_id)
    return test


def random_bands(rng: random.Random, test: TestDefinition, category_id: str) -> TestDefinition:
    """Author a random 1..3-band partition for the category."""
    lowest = compute_min_score(test, category_id)
    highest = compute_max_score(test, category_id)
    bands = rng.randint(1, 3)
    quarters = [
        lowest + (highest - lowest) * Decimal(i) / Decimal(4) for i in range(1, 4)
    ]
    reachable = sorted(
        {total for _, total in assignment_totals(test, category_id)} - {lowest, highest}
    )
    interior_pool = sorted(set(quarters) | set(reachable))
    interior = sorted(rng.sample(interior_pool, min(bands - 1, len(interior_pool))))
    cuts = [lowest] + interior + [highest]
    texts = [f"Reading {i}" for i in range(1, len(cuts))]
    return gen.set_bands(test, category_id, cuts, texts)


def random_answer_map(rng: random.Random, test: TestDefinition) -> dict[str, int]:
    size = test.answer_count
    return {item.item_id: rng.randrange(size) for item in test.items}


def canonical_form(test: TestDefinition):
    """Structure of a test with generated ids replaced by stable keys.

    Two tests compare equal here exactly when they differ only in how fresh
    item/category ids were allocated.
    """
    item_key = {item.item_id: f"item@{item.ordinal}" for item in test.items}
    category_key = {cat.category_id: f"cat@{cat.name}" for cat in test.categories}
    return {
        "test_id": test.test_id,
        "title": test.title,
        "instruction": test.instruction,
        "answers": test.answer_set.options,
        "items": tuple((item.ordinal, item.text) for item in test.items_in_order()),
        "categories": tuple(sorted(category_key.values())),
        "bindings": frozenset(
            (category_key[b.category_id], item_key[b.item_id], b.scores.values)
            for b in test.bindings
        ),
        "bands": frozenset(
            (category_key[b.category_id], b.index, b.lower, b.upper, b.interpretation)
            for b in test.bands
        ),
        "demographics": test.demographics,
    }


def normalized_log(path) -> bytes:
    """Session log bytes with per-run noise (ids, timestamps) pinned."""
    import json

    records = []
    for line in path.read_bytes().splitlines():
        tree = json.loads(line)
        tree["session_id"] = "SID"
        tree["started_at"] = tree["completed_at"] = "TS"
        for answer in tree["answers"]:
            answer["ts"] = "TS"
        records.append(json.dumps(tree, sort_keys=True))
    return "\n".join(records).encode()


def random_demographics(rng: random.Random, test: TestDefinition) -> dict:
    values = {}
    for field in test.demographics:
        if field.kind == "integer":
            values[field.name] = rng.randint(18, 80)
        elif field.kind == "choice":
            values[field.name] = rng.choice(field.choices)
        else:
            values[field.name] = rng.choice(["river town", "hill village", "big, big city"])
    return values
