"""Authoring operations and the .ptest.json file format.

Every edit is a pure transformation: it takes a TestDefinition and returns a
new one.  Items are addressed by ordinal at the editing surface, but scales
keep referencing stable item ids, so renumbering never silently re-targets a
binding.  Band partitions must agree exactly with the score range computed
from the current bindings; editing bindings afterwards leaves the bands in
place and validation reports the mismatch instead of rescaling expert norms.

File layout (extension ``.ptest.json``): a single JSON document with keys
format_version, test_id, title, instruction, answer_set, items, categories,
bindings, bands, demographics.  All decimal values are serialized as strings
so they survive the round trip exactly.
"""

from __future__ import annotations

import json
import uuid
from dataclasses import dataclass, replace
from decimal import Decimal
from pathlib import Path
from typing import Any, Sequence

from psytest.model import (
    AnswerSet,
    Band,
    Category,
    DemographicField,
    EngineError,
    InvalidTestError,
    Item,
    ScaleBinding,
    ScoreTuple,
    TestDefinition,
    as_decimal,
    compute_max_score,
    compute_min_score,
    errors_of,
    validate,
)

FORMAT_VERSION = 1
FILE_EXTENSION = ".ptest.json"


class AuthoringError(EngineError):
    """An editing operation received arguments it cannot apply."""


class DocumentFormatError(EngineError):
    """The byte stream is not a well-formed test document."""


@dataclass(frozen=True)
class TestDocument:
    """A test definition together with its file format version."""

    __test__ = False  # keep pytest from trying to collect this

    format_version: int
    test: TestDefinition


def _fresh_id(prefix: str, taken: set[str]) -> str:
    while True:
        candidate = f"{prefix}-{uuid.uuid4().hex[:8]}"
        if candidate not in taken:
            return candidate


# ---------------------------------------------------------------------------
# Building and editing
# ---------------------------------------------------------------------------


def new_test(
    test_id: str,
    title: str,
    answer_options: Sequence[str],
    instruction: str = "",
    category_names: Sequence[str] = (),
    demographics: Sequence[DemographicField] = (),
) -> TestDefinition:
    """Start an empty test: no items, bindings or bands yet."""
    if not test_id:
        raise AuthoringError("test_id must be non-empty")
    taken: set[str] = set()
    categories = []
    for name in category_names:
        cid = _fresh_id("cat", taken)
        taken.add(cid)
        categories.append(Category(cid, name))
    return TestDefinition(
        test_id=test_id,
        title=title,
        instruction=instruction,
        answer_set=AnswerSet(tuple(answer_options)),
        items=(),
        categories=tuple(categories),
        bindings=(),
        bands=(),
        demographics=tuple(demographics),
    )


def add_category(
    test: TestDefinition, name: str, category_id: str | None = None
) -> TestDefinition:
    if not name:
        raise AuthoringError("category name must be non-empty")
    if any(cat.name == name for cat in test.categories):
        raise AuthoringError(f"category named {name!r} already exists")
    taken = {cat.category_id for cat in test.categories}
    if category_id is None:
        category_id = _fresh_id("cat", taken)
    elif category_id in taken:
        raise AuthoringError(f"category id {category_id!r} already in use")
    return replace(test, categories=test.categories + (Category(category_id, name),))


def insert_item(
    test: TestDefinition, position: int, text: str, item_id: str | None = None
) -> TestDefinition:
    """Place a new item at the given ordinal, shifting later items down.

    Ordinals of items at or after ``position`` increase by one; item ids and
    bindings are untouched.
    """
    count = len(test.items)
    if not 1 <= position <= count + 1:
        raise AuthoringError(f"position {position} out of range 1..{count + 1}")
    if not text:
        raise AuthoringError("item text must be non-empty")
    taken = {item.item_id for item in test.items}
    if item_id is None:
        item_id = _fresh_id("itm", taken)
    elif item_id in taken:
        raise AuthoringError(f"item id {item_id!r} already in use")
    shifted = [
        replace(item, ordinal=item.ordinal + 1) if item.ordinal >= position else item
        for item in test.items
    ]
    shifted.append(Item(item_id, position, text))
    shifted.sort(key=lambda item: item.ordinal)
    return replace(test, items=tuple(shifted))


def delete_item(test: TestDefinition, ordinal: int) -> TestDefinition:
    """Remove the item at the ordinal along with all of its bindings.

    Later items slide up by one, restoring the 1..m-1 numbering.
    """
    victim = test.item_by_ordinal(ordinal)
    remaining = [
        replace(item, ordinal=item.ordinal - 1) if item.ordinal > ordinal else item
        for item in test.items
        if item.item_id != victim.item_id
    ]
    remaining.sort(key=lambda item: item.ordinal)
    bindings = tuple(b for b in test.bindings if b.item_id != victim.item_id)
    return replace(test, items=tuple(remaining), bindings=bindings)


def move_item(test: TestDefinition, from_ordinal: int, to_ordinal: int) -> TestDefinition:
    """Reposition an item, keeping its identity and bindings."""
    count = len(test.items)
    for ordinal in (from_ordinal, to_ordinal):
        if not 1 <= ordinal <= count:
            raise AuthoringError(f"ordinal {ordinal} out of range 1..{count}")
    ordered = list(test.items_in_order())
    moved = ordered.pop(from_ordinal - 1)
    ordered.insert(to_ordinal - 1, moved)
    renumbered = tuple(
        replace(item, ordinal=i) for i, item in enumerate(ordered, start=1)
    )
    return replace(test, items=renumbered)


def bind_scale(
    test: TestDefinition,
    category_id: str,
    item_id: str,
    values: Sequence[Decimal | int | str] | ScoreTuple,
) -> TestDefinition:
    """Set the score tuple an item contributes to a category (upsert)."""
    test.category_by_id(category_id)
    test.item_by_id(item_id)
    scores = values if isinstance(values, ScoreTuple) else ScoreTuple(tuple(values))
    if len(scores.values) != test.answer_count:
        raise AuthoringError(
            f"score tuple has {len(scores.values)} values for "
            f"{test.answer_count} answer options"
        )
    binding = ScaleBinding(category_id, item_id, scores)
    bindings = list(test.bindings)
    for i, existing in enumerate(bindings):
        if existing.category_id == category_id and existing.item_id == item_id:
            bindings[i] = binding
            break
    else:
        bindings.append(binding)
    return replace(test, bindings=tuple(bindings))


def set_bands(
    test: TestDefinition,
    category_id: str,
    boundaries: Sequence[Decimal | int | str],
    texts: Sequence[str],
) -> TestDefinition:
    """Replace a category's band partition.

    ``boundaries`` are the ascending cut points, the first of which must
    equal the category's computed minimum score and the last its maximum.
    ``texts`` carries one interpretation per resulting interval.
    """
    test.category_by_id(category_id)
    cuts = [as_decimal(b) for b in boundaries]
    if len(cuts) < 2:
        raise AuthoringError("need at least two boundaries (one band)")
    for prev, nxt in zip(cuts, cuts[1:]):
        if not prev < nxt:
            raise AuthoringError(f"boundaries must strictly increase: {prev} !< {nxt}")
    if len(texts) != len(cuts) - 1:
        raise AuthoringError(
            f"{len(cuts) - 1} band(s) from {len(cuts)} boundaries, "
            f"but {len(texts)} interpretation text(s)"
        )
    if any(not text for text in texts):
        raise AuthoringError("interpretation texts must be non-empty")
    lowest = compute_min_score(test, category_id)
    highest = compute_max_score(test, category_id)
    if cuts[0] != lowest or cuts[-1] != highest:
        raise AuthoringError(
            f"boundaries [{cuts[0]}, {cuts[-1]}] must match the computed "
            f"score range [{lowest}, {highest}]"
        )
    fresh = [
        Band(category_id, i, lower, upper, text)
        for i, (lower, upper, text) in enumerate(zip(cuts, cuts[1:], texts), start=1)
    ]
    kept = [b for b in test.bands if b.category_id != category_id]
    # canonical order: category declaration order, then band index
    order = {cat.category_id: i for i, cat in enumerate(test.categories)}
    combined = sorted(kept + fresh, key=lambda b: (order.get(b.category_id, -1), b.index))
    return replace(test, bands=tuple(combined))


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def _test_to_tree(doc: TestDocument) -> dict[str, Any]:
    test = doc.test
    tree: dict[str, Any] = {
        "format_version": doc.format_version,
        "test_id": test.test_id,
        "title": test.title,
        "instruction": test.instruction,
        "answer_set": list(test.answer_set.options),
        "items": [
            {"id": item.item_id, "ordinal": item.ordinal, "text": item.text}
            for item in test.items_in_order()
        ],
        "categories": [
            {"id": cat.category_id, "name": cat.name} for cat in test.categories
        ],
        "bindings": [
            {
                "category_id": b.category_id,
                "item_id": b.item_id,
                "values": [str(v) for v in b.scores.values],
            }
            for b in test.bindings
        ],
        "bands": [
            {
                "category_id": b.category_id,
                "index": b.index,
                "lower": str(b.lower),
                "upper": str(b.upper),
                "interpretation": b.interpretation,
            }
            for b in test.bands
        ],
        "demographics": [
            {"name": f.name, "kind": f.kind}
            | ({"choices": list(f.choices)} if f.kind == "choice" else {})
            for f in test.demographics
        ],
    }
    return tree


def serialize_test(doc: TestDocument, check: bool = True) -> bytes:
    """Encode a document as UTF-8 JSON bytes.

    With ``check`` (the default) the test must validate with no errors;
    pass ``check=False`` to write a work-in-progress draft.
    """
    if check:
        problems = errors_of(validate(doc.test))
        if problems:
            raise InvalidTestError(problems)
    text = json.dumps(_test_to_tree(doc), indent=2, ensure_ascii=False)
    return (text + "\n").encode("utf-8")


def _require(tree: dict[str, Any], key: str, kind: type) -> Any:
    if key not in tree:
        raise DocumentFormatError(f"missing key {key!r}")
    value = tree[key]
    if not isinstance(value, kind):
        raise DocumentFormatError(
            f"key {key!r} must be {kind.__name__}, got {type(value).__name__}"
        )
    return value


def _decimal_field(record: dict[str, Any], key: str, where: str) -> Decimal:
    if key not in record:
        raise DocumentFormatError(f"{where}: missing key {key!r}")
    value = record[key]
    if isinstance(value, float):
        raise DocumentFormatError(
            f"{where}: {key!r} parsed as binary float; decimals must be strings"
        )
    try:
        return as_decimal(value)
    except EngineError as exc:
        raise DocumentFormatError(f"{where}: {exc}") from exc


def _tree_to_test(tree: dict[str, Any]) -> TestDocument:
    version = _require(tree, "format_version", int)
    if version != FORMAT_VERSION:
        raise DocumentFormatError(
            f"unsupported format_version {version}; this build reads {FORMAT_VERSION}"
        )
    items = []
    for i, rec in enumerate(_require(tree, "items", list)):
        if not isinstance(rec, dict):
            raise DocumentFormatError(f"items[{i}] must be an object")
        try:
            items.append(Item(str(rec["id"]), int(rec["ordinal"]), str(rec["text"])))
        except KeyError as exc:
            raise DocumentFormatError(f"items[{i}]: missing key {exc}") from exc
    categories = []
    for i, rec in enumerate(_require(tree, "categories", list)):
        if not isinstance(rec, dict):
            raise DocumentFormatError(f"categories[{i}] must be an object")
        try:
            categories.append(Category(str(rec["id"]), str(rec["name"])))
        except KeyError as exc:
            raise DocumentFormatError(f"categories[{i}]: missing key {exc}") from exc
    bindings = []
    for i, rec in enumerate(_require(tree, "bindings", list)):
        if not isinstance(rec, dict):
            raise DocumentFormatError(f"bindings[{i}] must be an object")
        where = f"bindings[{i}]"
        try:
            raw_values = rec["values"]
            if not isinstance(raw_values, list):
                raise DocumentFormatError(f"{where}: values must be an array")
            values = tuple(
                _decimal_field({"v": v}, "v", f"{where}.values[{j}]")
                for j, v in enumerate(raw_values)
            )
            bindings.append(
                ScaleBinding(str(rec["category_id"]), str(rec["item_id"]), ScoreTuple(values))
            )
        except KeyError as exc:
            raise DocumentFormatError(f"{where}: missing key {exc}") from exc
    bands = []
    for i, rec in enumerate(_require(tree, "bands", list)):
        if not isinstance(rec, dict):
            raise DocumentFormatError(f"bands[{i}] must be an object")
        where = f"bands[{i}]"
        try:
            bands.append(
                Band(
                    str(rec["category_id"]),
                    int(rec["index"]),
                    _decimal_field(rec, "lower", where),
                    _decimal_field(rec, "upper", where),
                    str(rec["interpretation"]),
                )
            )
        except KeyError as exc:
            raise DocumentFormatError(f"{where}: missing key {exc}") from exc
    demographics = []
    for i, rec in enumerate(tree.get("demographics", [])):
        if not isinstance(rec, dict):
            raise DocumentFormatError(f"demographics[{i}] must be an object")
        try:
            demographics.append(
                DemographicField(
                    str(rec["name"]),
                    str(rec["kind"]),
                    tuple(str(c) for c in rec.get("choices", [])),
                )
            )
        except KeyError as exc:
            raise DocumentFormatError(f"demographics[{i}]: missing key {exc}") from exc
    answer_set = _require(tree, "answer_set", list)
    test = TestDefinition(
        test_id=str(_require(tree, "test_id", str)),
        title=str(_require(tree, "title", str)),
        instruction=str(tree.get("instruction", "")),
        answer_set=AnswerSet(tuple(str(o) for o in answer_set)),
        items=tuple(items),
        categories=tuple(categories),
        bindings=tuple(bindings),
        bands=tuple(bands),
        demographics=tuple(demographics),
    )
    return TestDocument(format_version=version, test=test)


def parse_test(data: bytes | str, check: bool = True) -> TestDocument:
    """Decode a test document, rejecting malformed or invalid input.

    With ``check`` (the default) documents whose test fails validation are
    rejected with InvalidTestError carrying the violation list.
    """
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise DocumentFormatError(f"not UTF-8: {exc}") from exc
    try:
        tree = json.loads(data)
    except json.JSONDecodeError as exc:
        raise DocumentFormatError(f"malformed JSON: {exc}") from exc
    if not isinstance(tree, dict):
        raise DocumentFormatError("top level must be a JSON object")
    doc = _tree_to_test(tree)
    if check:
        problems = errors_of(validate(doc.test))
        if problems:
            raise InvalidTestError(problems)
    return doc


def save_test(path: str | Path, test: TestDefinition, check: bool = True) -> None:
    Path(path).write_bytes(serialize_test(TestDocument(FORMAT_VERSION, test), check=check))


def load_test(path: str | Path, check: bool = True) -> TestDocument:
    return parse_test(Path(path).read_bytes(), check=check)
