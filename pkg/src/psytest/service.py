"""HTTP surface for live test administration.

Respondent-facing payloads are deliberately stripped: item texts, answer
labels, the instruction and the demographic schema go out, but score tuples,
band boundaries and interpretation texts never do.  Interpretations are
reachable only through the result endpoint, only after completion, and only
when the service is configured to reveal them.

Sessions live in memory while in progress; each one is mutated under its own
lock, so concurrent submissions are serialized and exactly one answer can be
recorded against any given current item.  On completion the record is
written through to the session log.  Idle sessions expire.
"""

from __future__ import annotations

import logging
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from psytest import executor as ex
from psytest.generator import DocumentFormatError, load_test
from psytest.model import AnswerError, InvalidTestError, TestDefinition

log = logging.getLogger(__name__)

DEFAULT_LISTEN = "127.0.0.1:8420"
DEFAULT_IDLE_TIMEOUT = 1800.0  # seconds before an untouched session is dropped


@dataclass
class ServiceConfig:
    """Operational knobs for one service process."""

    tests_dir: Path
    session_log: Path
    listen: str = DEFAULT_LISTEN
    reveal_results: bool = False
    idle_timeout: float = DEFAULT_IDLE_TIMEOUT

    def host_port(self) -> tuple[str, int]:
        host, _, port = self.listen.rpartition(":")
        if not host or not port.isdigit():
            raise ValueError(f"listen address must be HOST:PORT, got {self.listen!r}")
        return host, int(port)


class ApiError(Exception):
    """Error surfaced to clients as {code, message} with an HTTP status."""

    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


@dataclass
class _LiveSession:
    session: ex.Session
    result: ex.SessionResult | None = None
    last_seen: float = 0.0
    lock: threading.Lock = field(default_factory=threading.Lock)


class SessionStore:
    """In-memory sessions with per-session locks and idle expiry."""

    def __init__(self, idle_timeout: float, clock: Callable[[], float] | None = None):
        self._idle_timeout = idle_timeout
        self._clock = clock or time.monotonic
        self._sessions: dict[str, _LiveSession] = {}
        self._registry_lock = threading.Lock()

    def add(self, session: ex.Session) -> None:
        entry = _LiveSession(session=session, last_seen=self._clock())
        with self._registry_lock:
            self._sweep()
            self._sessions[session.session_id] = entry

    def entry(self, session_id: str) -> _LiveSession:
        with self._registry_lock:
            self._sweep()
            entry = self._sessions.get(session_id)
            if entry is None:
                raise ApiError(404, "UNKNOWN_SESSION", f"no session {session_id!r}")
            entry.last_seen = self._clock()
            return entry

    def _sweep(self) -> None:
        now = self._clock()
        stale = [
            sid
            for sid, entry in self._sessions.items()
            if now - entry.last_seen > self._idle_timeout
        ]
        for sid in stale:
            del self._sessions[sid]


class CreateSessionBody(BaseModel):
    test_id: str
    demographics: dict[str, Any] = {}


class AnswerBody(BaseModel):
    answer_index: int
    # optional echo of the ordinal being answered; lets the server reject
    # out-of-order or duplicated submissions instead of mis-filing them
    ordinal: int | None = None


def load_test_directory(tests_dir: Path) -> dict[str, TestDefinition]:
    """Read every .ptest.json under the directory, skipping broken files."""
    tests: dict[str, TestDefinition] = {}
    for path in sorted(tests_dir.glob("*.ptest.json")):
        try:
            test = load_test(path).test
        except (DocumentFormatError, InvalidTestError, OSError) as exc:
            log.warning("skipping %s: %s", path.name, exc)
            continue
        if test.test_id in tests:
            log.warning("skipping %s: duplicate test_id %r", path.name, test.test_id)
            continue
        tests[test.test_id] = test
    return tests


def create_app(
    config: ServiceConfig,
    tests: dict[str, TestDefinition] | None = None,
    clock: Callable[[], float] | None = None,
) -> FastAPI:
    """Build the service; pass ``tests`` to skip the directory scan."""
    if tests is None:
        if not config.tests_dir.is_dir():
            raise ValueError(f"tests directory {config.tests_dir} does not exist")
        tests = load_test_directory(config.tests_dir)
    if not config.session_log.parent.is_dir():
        raise ValueError(f"session log directory {config.session_log.parent} does not exist")

    app = FastAPI(title="psytest gateway")
    # the browser client may be served from another origin; the API carries
    # no credentials and respondent payloads hold no scoring data
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    store = SessionStore(config.idle_timeout, clock=clock)

    @app.exception_handler(ApiError)
    async def on_api_error(request: Request, exc: ApiError) -> JSONResponse:
        return JSONResponse(
            status_code=exc.status, content={"code": exc.code, "message": exc.message}
        )

    @app.exception_handler(RequestValidationError)
    async def on_bad_request(request: Request, exc: RequestValidationError) -> JSONResponse:
        return JSONResponse(
            status_code=422, content={"code": "BAD_REQUEST", "message": str(exc)}
        )

    def test_or_404(test_id: str) -> TestDefinition:
        test = tests.get(test_id)
        if test is None:
            raise ApiError(404, "UNKNOWN_TEST", f"no test {test_id!r}")
        return test

    def current_payload(entry: _LiveSession, test: TestDefinition) -> dict[str, Any]:
        item = ex.current_item(entry.session, test)
        if item is None:
            return {"done": True}
        return {
            "ordinal": item.ordinal,
            "total": len(test.items),
            "text": item.text,
            "options": list(test.answer_set.options),
        }

    @app.get("/tests")
    def list_tests() -> list[dict[str, str]]:
        return [
            {"test_id": test.test_id, "title": test.title}
            for test in sorted(tests.values(), key=lambda t: t.test_id)
        ]

    @app.get("/tests/{test_id}")
    def respondent_view(test_id: str) -> dict[str, Any]:
        test = test_or_404(test_id)
        return {
            "test_id": test.test_id,
            "title": test.title,
            "instruction": test.instruction,
            "answer_options": list(test.answer_set.options),
            "demographics": [
                {"name": f.name, "kind": f.kind}
                | ({"choices": list(f.choices)} if f.kind == "choice" else {})
                for f in test.demographics
            ],
            "items": [
                {"ordinal": item.ordinal, "text": item.text}
                for item in test.items_in_order()
            ],
            "total": len(test.items),
        }

    @app.post("/sessions", status_code=201)
    def create_session(body: CreateSessionBody) -> dict[str, str]:
        test = test_or_404(body.test_id)
        try:
            session = ex.start_session(test, body.demographics)
        except ex.DemographicsError as exc:
            raise ApiError(422, "INVALID_DEMOGRAPHICS", str(exc)) from exc
        store.add(session)
        return {"session_id": session.session_id}

    @app.get("/sessions/{session_id}/current")
    def current(session_id: str) -> dict[str, Any]:
        entry = store.entry(session_id)
        with entry.lock:
            test = test_or_404(entry.session.test_id)
            return current_payload(entry, test)

    @app.post("/sessions/{session_id}/answer")
    def answer(session_id: str, body: AnswerBody) -> dict[str, Any]:
        entry = store.entry(session_id)
        with entry.lock:
            test = test_or_404(entry.session.test_id)
            if entry.session.state == ex.STATE_COMPLETED:
                raise ApiError(409, "SESSION_COMPLETED", "session already completed")
            item = ex.current_item(entry.session, test)
            if body.ordinal is not None and item is not None and body.ordinal != item.ordinal:
                raise ApiError(
                    409,
                    "ORDINAL_MISMATCH",
                    f"current item is {item.ordinal}, not {body.ordinal}",
                )
            try:
                entry.session = ex.submit_answer(entry.session, test, body.answer_index)
            except AnswerError as exc:
                raise ApiError(422, "ANSWER_INDEX_OUT_OF_RANGE", str(exc)) from exc
            if entry.session.state == ex.STATE_COMPLETED:
                entry.result = ex.score_session(entry.session, test)
                ex.append_session(config.session_log, entry.session, entry.result)
            return current_payload(entry, test)

    @app.get("/sessions/{session_id}/result")
    def result(session_id: str) -> dict[str, Any]:
        entry = store.entry(session_id)
        with entry.lock:
            withheld = not config.reveal_results
            if withheld or entry.session.state != ex.STATE_COMPLETED or entry.result is None:
                raise ApiError(
                    404,
                    "RESULTS_UNAVAILABLE",
                    "results are withheld or the session is not completed",
                )
            test = test_or_404(entry.session.test_id)
            return {
                "session_id": entry.session.session_id,
                "results": [
                    {
                        "category_id": r.category_id,
                        "category_name": test.category_by_id(r.category_id).name,
                        "raw_score": str(r.raw_score),
                        "band_index": r.band_index,
                        "interpretation": r.interpretation,
                    }
                    for r in entry.result.results
                ],
            }

    return app
