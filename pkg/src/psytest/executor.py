"""Session state machine: administering a test to one respondent.

Items are presented strictly in ordinal order, one at a time, with no
back-navigation and no skipping.  A session is an immutable value; recording
an answer returns a new session, and the state flips to completed exactly
when every item has an answer.  Only completed sessions can be scored or
persisted.

Completed sessions are appended to a newline-delimited log (extension
``.sessions.ndjson``), one JSON object per line, written as a single atomic
record so concurrent administrations can share a log file.
"""

from __future__ import annotations

import json
import uuid
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable, Mapping, NamedTuple

from psytest.model import (
    AnswerError,
    CategoryResult,
    EngineError,
    Item,
    TestDefinition,
    as_decimal,
    band_of,
    ensure_valid,
    raw_score,
)

STATE_COLLECTING_DEMOGRAPHICS = "collecting_demographics"
STATE_IN_PROGRESS = "in_progress"
STATE_COMPLETED = "completed"

Clock = Callable[[], datetime]


class DemographicsError(EngineError):
    """Supplied demographics do not conform to the test's schema."""


class SessionStateError(EngineError):
    """An operation was applied in the wrong session state."""


class SessionMismatchError(EngineError):
    """A session was paired with a test it does not belong to."""


class SessionLogError(EngineError):
    """A session log record could not be decoded."""


def _now_iso(clock: Clock | None) -> str:
    moment = clock() if clock is not None else datetime.now(timezone.utc)
    if moment.tzinfo is None:
        moment = moment.replace(tzinfo=timezone.utc)
    return moment.isoformat()


@dataclass(frozen=True)
class Answer:
    """One recorded answer: which item, which option, when."""

    item_id: str
    answer_index: int
    ts: str


@dataclass(frozen=True)
class Session:
    """One administration of a test to one respondent."""

    session_id: str
    test_id: str
    demographics: dict[str, Any]
    answers: tuple[Answer, ...]
    state: str
    started_at: str
    completed_at: str | None = None

    def answer_map(self) -> dict[str, int]:
        return {a.item_id: a.answer_index for a in self.answers}


@dataclass(frozen=True)
class SessionResult:
    """Scored outcome of a completed session, one entry per category."""

    session_id: str
    results: tuple[CategoryResult, ...]


class SessionRecord(NamedTuple):
    session: Session
    result: SessionResult


def check_demographics(test: TestDefinition, demographics: Mapping[str, Any]) -> None:
    """Verify the demographics dict matches the test's declared schema."""
    declared = {f.name for f in test.demographics}
    extra = set(demographics) - declared
    if extra:
        raise DemographicsError(f"undeclared demographic field(s): {sorted(extra)}")
    for field in test.demographics:
        if field.name not in demographics:
            raise DemographicsError(f"missing demographic field {field.name!r}")
        value = demographics[field.name]
        if field.kind == "integer":
            if isinstance(value, bool) or not isinstance(value, int):
                raise DemographicsError(
                    f"field {field.name!r} must be an integer, got {value!r}"
                )
        elif field.kind == "text":
            if not isinstance(value, str):
                raise DemographicsError(
                    f"field {field.name!r} must be text, got {value!r}"
                )
        elif field.kind == "choice":
            if value not in field.choices:
                raise DemographicsError(
                    f"field {field.name!r} must be one of {list(field.choices)}, "
                    f"got {value!r}"
                )
        else:
            raise DemographicsError(
                f"field {field.name!r} has unsupported kind {field.kind!r}"
            )


def start_session(
    test: TestDefinition,
    demographics: Mapping[str, Any],
    session_id: str | None = None,
    clock: Clock | None = None,
) -> Session:
    """Open a new in-progress session with no answers recorded yet.

    The test must validate cleanly and the demographics must conform to its
    schema; both are checked here so a session can never be born broken.
    """
    ensure_valid(test)
    check_demographics(test, demographics)
    return Session(
        session_id=session_id or uuid.uuid4().hex,
        test_id=test.test_id,
        demographics=dict(demographics),
        answers=(),
        state=STATE_IN_PROGRESS,
        started_at=_now_iso(clock),
    )


def current_item(session: Session, test: TestDefinition) -> Item | None:
    """The unanswered item with the smallest ordinal, or None when done."""
    if session.state not in (STATE_IN_PROGRESS, STATE_COMPLETED):
        raise SessionStateError(f"session is in state {session.state!r}")
    _check_pairing(session, test)
    answered = {a.item_id for a in session.answers}
    for item in test.items_in_order():
        if item.item_id not in answered:
            return item
    return None


def submit_answer(
    session: Session,
    test: TestDefinition,
    answer_index: int,
    clock: Clock | None = None,
) -> Session:
    """Record an answer for the current item and advance the session."""
    if session.state == STATE_COMPLETED:
        raise SessionStateError("session already completed")
    if session.state != STATE_IN_PROGRESS:
        raise SessionStateError(f"session is in state {session.state!r}")
    _check_pairing(session, test)
    size = test.answer_count
    if isinstance(answer_index, bool) or not isinstance(answer_index, int):
        raise AnswerError("answer index must be an int")
    if not 0 <= answer_index < size:
        raise AnswerError(f"answer index {answer_index} out of range 0..{size - 1}")
    item = current_item(session, test)
    if item is None:
        raise SessionStateError("no item left to answer")
    stamp = _now_iso(clock)
    answers = session.answers + (Answer(item.item_id, answer_index, stamp),)
    if len(answers) == len(test.items):
        return replace(
            session, answers=answers, state=STATE_COMPLETED, completed_at=stamp
        )
    return replace(session, answers=answers)


def score_session(session: Session, test: TestDefinition) -> SessionResult:
    """Score every category of a completed session.

    Pure in (test, answers): repeated calls give identical results.
    """
    if session.state != STATE_COMPLETED:
        raise SessionStateError("only completed sessions can be scored")
    _check_pairing(session, test)
    answers = session.answer_map()
    results = []
    for category in test.categories:
        raw = raw_score(test, category.category_id, answers)
        band = band_of(test, category.category_id, raw)
        results.append(
            CategoryResult(category.category_id, raw, band.index, band.interpretation)
        )
    return SessionResult(session.session_id, tuple(results))


def _check_pairing(session: Session, test: TestDefinition) -> None:
    if session.test_id != test.test_id:
        raise SessionMismatchError(
            f"session {session.session_id} belongs to test {session.test_id!r}, "
            f"not {test.test_id!r}"
        )


# ---------------------------------------------------------------------------
# Session log persistence
# ---------------------------------------------------------------------------


def _record_tree(session: Session, result: SessionResult) -> dict[str, Any]:
    return {
        "session_id": session.session_id,
        "test_id": session.test_id,
        "demographics": session.demographics,
        "answers": [
            {"item_id": a.item_id, "answer_index": a.answer_index, "ts": a.ts}
            for a in session.answers
        ],
        "results": [
            {
                "category_id": r.category_id,
                "raw_score": str(r.raw_score),
                "band_index": r.band_index,
                "interpretation": r.interpretation,
            }
            for r in result.results
        ],
        "started_at": session.started_at,
        "completed_at": session.completed_at,
    }


def persist_session(session: Session, result: SessionResult) -> bytes:
    """Encode one completed session as a single log line (with newline)."""
    if session.state != STATE_COMPLETED:
        raise SessionStateError("only completed sessions are persisted")
    if result.session_id != session.session_id:
        raise SessionMismatchError(
            f"result belongs to session {result.session_id}, not {session.session_id}"
        )
    line = json.dumps(_record_tree(session, result), ensure_ascii=False)
    return (line + "\n").encode("utf-8")


def append_session(path: str | Path, session: Session, result: SessionResult) -> None:
    """Append one record to the log with a single atomic write."""
    data = persist_session(session, result)
    with open(path, "ab") as fh:
        fh.write(data)


def _record_from_tree(tree: dict[str, Any]) -> SessionRecord:
    answers = tuple(
        Answer(str(a["item_id"]), int(a["answer_index"]), str(a["ts"]))
        for a in tree["answers"]
    )
    results = tuple(
        CategoryResult(
            str(r["category_id"]),
            as_decimal(r["raw_score"]),
            int(r["band_index"]),
            str(r["interpretation"]),
        )
        for r in tree["results"]
    )
    session = Session(
        session_id=str(tree["session_id"]),
        test_id=str(tree["test_id"]),
        demographics=dict(tree["demographics"]),
        answers=answers,
        state=STATE_COMPLETED,
        started_at=str(tree["started_at"]),
        completed_at=str(tree["completed_at"]),
    )
    return SessionRecord(session, SessionResult(session.session_id, results))


def load_sessions(
    data: bytes | str, strict: bool = False
) -> tuple[list[SessionRecord], list[str]]:
    """Decode a session log.

    Returns the list of (session, result) records plus a list of problem
    descriptions for records that could not be decoded.  With ``strict`` the
    first problem raises SessionLogError instead.
    """
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    records: list[SessionRecord] = []
    problems: list[str] = []
    for lineno, line in enumerate(data.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            tree = json.loads(line)
            if not isinstance(tree, dict):
                raise SessionLogError("record is not a JSON object")
            records.append(_record_from_tree(tree))
        except (json.JSONDecodeError, KeyError, ValueError, TypeError, EngineError) as exc:
            message = f"record {lineno}: {exc}"
            if strict:
                raise SessionLogError(message) from exc
            problems.append(message)
    return records, problems


def read_session_log(
    path: str | Path, strict: bool = False
) -> tuple[list[SessionRecord], list[str]]:
    """Load a log file; a missing file reads as an empty log."""
    path = Path(path)
    if not path.exists():
        return [], []
    return load_sessions(path.read_bytes(), strict=strict)
