"""The psytest command line: generate / run / stats / serve.

Authoring subcommands read and rewrite .ptest.json files as drafts, so a
test can be built up step by step; `generate validate` (and every consumer
of a finished test) is where incompleteness becomes an error.  PSYTEST_DATA_DIR
sets the default location of test files and the session log.
"""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click

from psytest import executor as ex
from psytest import generator as gen
from psytest import stats as st
from psytest.model import DemographicField, EngineError, errors_of, validate
from psytest.service import ServiceConfig, create_app


def data_dir() -> Path:
    return Path(os.environ.get("PSYTEST_DATA_DIR", "."))


def default_log_path() -> Path:
    return data_dir() / "default.sessions.ndjson"


def parse_demographic(spec: str) -> DemographicField:
    """NAME:KIND or NAME:choice:A|B|C."""
    parts = spec.split(":", 2)
    if len(parts) < 2:
        raise click.BadParameter(f"expected NAME:KIND[:choices], got {spec!r}")
    name, kind = parts[0], parts[1]
    choices: tuple[str, ...] = ()
    if kind == "choice":
        if len(parts) < 3 or not parts[2]:
            raise click.BadParameter(f"choice field {name!r} needs :A|B|C choices")
        choices = tuple(parts[2].split("|"))
    return DemographicField(name, kind, choices)


def parse_decimals(text: str) -> list[str]:
    return [piece.strip() for piece in text.split(",")]


def edit_file(path: Path, operation) -> None:
    doc = gen.load_test(path, check=False)
    edited = operation(doc.test)
    gen.save_test(path, edited, check=False)


def resolve_category(test, name_or_id: str) -> str:
    for cat in test.categories:
        if cat.name == name_or_id or cat.category_id == name_or_id:
            return cat.category_id
    raise click.ClickException(f"no category named {name_or_id!r}")


@click.group()
def main() -> None:
    """Author, administer and analyze personality questionnaires."""


# ---------------------------------------------------------------------------
# generate
# ---------------------------------------------------------------------------


@main.group()
def generate() -> None:
    """Authoring: build and edit .ptest.json files."""


@generate.command("new")
@click.argument("path", type=click.Path(dir_okay=False, path_type=Path))
@click.option("--id", "test_id", required=True, help="stable test id")
@click.option("--title", required=True)
@click.option("--instruction", default="")
@click.option("--answer", "answers", multiple=True, required=True,
              help="one per option, in presentation order; repeat")
@click.option("--category", "categories", multiple=True, help="category name; repeat")
@click.option("--demographic", "demographics", multiple=True,
              help="NAME:KIND[:A|B|C], KIND one of text/integer/choice; repeat")
def cmd_new(path: Path, test_id: str, title: str, instruction: str,
            answers: tuple[str, ...], categories: tuple[str, ...],
            demographics: tuple[str, ...]) -> None:
    """Start a new draft test file."""
    fields = [parse_demographic(spec) for spec in demographics]
    try:
        test = gen.new_test(test_id, title, answers, instruction, categories, fields)
        gen.save_test(path, test, check=False)
    except EngineError as exc:
        raise click.ClickException(str(exc)) from exc
    click.echo(f"wrote {path}")


@generate.command("add-item")
@click.argument("path", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--pos", type=int, default=None, help="ordinal to insert at (default: append)")
@click.option("--text", required=True)
def cmd_add_item(path: Path, pos: int | None, text: str) -> None:
    """Insert an item, renumbering the ones after it."""
    try:
        edit_file(path, lambda t: gen.insert_item(t, pos if pos is not None else len(t.items) + 1, text))
    except EngineError as exc:
        raise click.ClickException(str(exc)) from exc
    click.echo(f"updated {path}")


@generate.command("del-item")
@click.argument("path", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--ordinal", type=int, required=True)
def cmd_del_item(path: Path, ordinal: int) -> None:
    """Delete the item at an ordinal (and its scale bindings)."""
    try:
        edit_file(path, lambda t: gen.delete_item(t, ordinal))
    except EngineError as exc:
        raise click.ClickException(str(exc)) from exc
    click.echo(f"updated {path}")


@generate.command("move-item")
@click.argument("path", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--from", "from_ordinal", type=int, required=True)
@click.option("--to", "to_ordinal", type=int, required=True)
def cmd_move_item(path: Path, from_ordinal: int, to_ordinal: int) -> None:
    """Move an item to a new ordinal, keeping its bindings."""
    try:
        edit_file(path, lambda t: gen.move_item(t, from_ordinal, to_ordinal))
    except EngineError as exc:
        raise click.ClickException(str(exc)) from exc
    click.echo(f"updated {path}")


@generate.command("add-category")
@click.argument("path", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--name", required=True)
def cmd_add_category(path: Path, name: str) -> None:
    """Declare a new psychological category."""
    try:
        edit_file(path, lambda t: gen.add_category(t, name))
    except EngineError as exc:
        raise click.ClickException(str(exc)) from exc
    click.echo(f"updated {path}")


@generate.command("bind")
@click.argument("path", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--category", required=True, help="category name or id")
@click.option("--item", "ordinal", type=int, required=True, help="item ordinal")
@click.option("--values", required=True, help="comma-separated decimals, one per answer option")
def cmd_bind(path: Path, category: str, ordinal: int, values: str) -> None:
    """Set the score tuple an item contributes to a category."""
    def operation(test):
        category_id = resolve_category(test, category)
        item = test.item_by_ordinal(ordinal)
        return gen.bind_scale(test, category_id, item.item_id, parse_decimals(values))

    try:
        edit_file(path, operation)
    except EngineError as exc:
        raise click.ClickException(str(exc)) from exc
    click.echo(f"updated {path}")


@generate.command("set-bands")
@click.argument("path", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--category", required=True, help="category name or id")
@click.option("--boundaries", required=True,
              help="comma-separated ascending cut points, first=min score, last=max score")
@click.option("--text", "texts", multiple=True, required=True,
              help="interpretation per band, lowest first; repeat")
def cmd_set_bands(path: Path, category: str, boundaries: str, texts: tuple[str, ...]) -> None:
    """Replace a category's norm bands."""
    def operation(test):
        category_id = resolve_category(test, category)
        return gen.set_bands(test, category_id, parse_decimals(boundaries), texts)

    try:
        edit_file(path, operation)
    except EngineError as exc:
        raise click.ClickException(str(exc)) from exc
    click.echo(f"updated {path}")


@generate.command("validate")
@click.argument("path", type=click.Path(exists=True, dir_okay=False, path_type=Path))
def cmd_validate(path: Path) -> None:
    """Check a test file; nonzero exit when it has errors."""
    try:
        doc = gen.load_test(path, check=False)
    except gen.DocumentFormatError as exc:
        raise click.ClickException(str(exc)) from exc
    violations = validate(doc.test)
    for violation in violations:
        stream = sys.stderr if violation.severity == "error" else sys.stdout
        print(f"{violation.severity.upper()} {violation.code}: {violation.message}", file=stream)
    if errors_of(violations):
        sys.exit(1)
    click.echo(f"{path}: ok")


# ---------------------------------------------------------------------------
# run
# ---------------------------------------------------------------------------


@main.command("run")
@click.argument("path", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--log", "log_path", type=click.Path(dir_okay=False, path_type=Path),
              default=None, help="session log (default: $PSYTEST_DATA_DIR/default.sessions.ndjson)")
@click.option("--show-interpretation", is_flag=True,
              help="print the per-category interpretations after completion")
def cmd_run(path: Path, log_path: Path | None, show_interpretation: bool) -> None:
    """Administer a test interactively in the terminal."""
    log_path = log_path or default_log_path()
    try:
        test = gen.load_test(path).test
    except EngineError as exc:
        raise click.ClickException(str(exc)) from exc

    click.echo(test.title)
    click.echo("=" * max(len(test.title), 1))
    if test.instruction:
        click.echo(test.instruction)

    demographics = {}
    for field in test.demographics:
        if field.kind == "integer":
            demographics[field.name] = click.prompt(field.name, type=int)
        elif field.kind == "choice":
            demographics[field.name] = click.prompt(
                field.name, type=click.Choice(field.choices)
            )
        else:
            demographics[field.name] = click.prompt(field.name)

    session = ex.start_session(test, demographics)
    total = len(test.items)
    while (item := ex.current_item(session, test)) is not None:
        click.echo(f"\n[{item.ordinal}/{total}] {item.text}")
        for number, option in enumerate(test.answer_set.options, start=1):
            click.echo(f"  {number}. {option}")
        picked = click.prompt("answer", type=click.IntRange(1, test.answer_count))
        session = ex.submit_answer(session, test, picked - 1)

    result = ex.score_session(session, test)
    ex.append_session(log_path, session, result)
    click.echo(f"\nsaved session {session.session_id} to {log_path}")

    if show_interpretation:
        click.echo("\nInterpretation")
        for outcome in result.results:
            name = test.category_by_id(outcome.category_id).name
            click.echo(f"  {name}: score {outcome.raw_score} -> {outcome.interpretation}")


# ---------------------------------------------------------------------------
# stats
# ---------------------------------------------------------------------------


def _load_records(test_path: Path, log_path: Path):
    test = gen.load_test(test_path).test
    records, problems = ex.read_session_log(log_path)
    for problem in problems:
        click.echo(f"warning: {problem}", err=True)
    return test, [r for r in records if r.session.test_id == test.test_id]


@main.group("stats")
def stats_group() -> None:
    """Cross-session statistics over a session log."""


@stats_group.command("summary")
@click.option("--test", "test_path", required=True,
              type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--log", "log_path", type=click.Path(dir_okay=False, path_type=Path), default=None)
def cmd_summary(test_path: Path, log_path: Path | None) -> None:
    """Print per-category and per-item descriptive statistics."""
    try:
        test, records = _load_records(test_path, log_path or default_log_path())
        if not records:
            click.echo("no sessions")
            return
        category_stats, item_stats = st.aggregate(records, test)
    except EngineError as exc:
        raise click.ClickException(str(exc)) from exc
    for cs in category_stats:
        name = test.category_by_id(cs.category_id).name
        click.echo(
            f"{name}: n={cs.n} mean={cs.mean} std_dev(population)={cs.std_dev} "
            f"min={cs.min} max={cs.max}"
        )
        histogram = "  ".join(
            f"band {index}: {count}" for index, count in sorted(cs.band_histogram.items())
        )
        click.echo(f"  {histogram}")
    click.echo("answer frequencies:")
    for item_stat in item_stats:
        item = test.item_by_id(item_stat.item_id)
        counts = "  ".join(
            f"{option}: {count}"
            for option, count in zip(test.answer_set.options, item_stat.answer_frequencies)
        )
        click.echo(f"  [{item.ordinal}] {counts}")


@stats_group.command("export")
@click.option("--test", "test_path", required=True,
              type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--log", "log_path", type=click.Path(dir_okay=False, path_type=Path), default=None)
@click.option("--format", "fmt", type=click.Choice(["csv"]), default="csv")
@click.option("--mode", type=click.Choice(["matrix", "summary"]), default="matrix",
              help="matrix: one row per session; summary: one row per category")
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), default=None,
              help="output file (default: stdout)")
def cmd_export(test_path: Path, log_path: Path | None, fmt: str, mode: str,
               out: Path | None) -> None:
    """Write CSV for external statistics packages."""
    try:
        test, records = _load_records(test_path, log_path or default_log_path())
        if not records:
            click.echo("no sessions", err=True)
        if mode == "matrix":
            data = st.export_matrix_csv(records, test)
        else:
            category_stats, _ = st.aggregate(records, test)
            data = st.export_stats_csv(category_stats)
    except EngineError as exc:
        raise click.ClickException(str(exc)) from exc
    if out is None:
        sys.stdout.write(data.decode("utf-8"))
    else:
        out.write_bytes(data)
        click.echo(f"wrote {out}")


# ---------------------------------------------------------------------------
# serve
# ---------------------------------------------------------------------------


@main.command("serve")
@click.option("--tests-dir", type=click.Path(file_okay=False, path_type=Path), default=None)
@click.option("--log", "log_path", type=click.Path(dir_okay=False, path_type=Path), default=None)
@click.option("--listen", default=None, help="HOST:PORT (default 127.0.0.1:8420)")
@click.option("--reveal-results", is_flag=True, default=False,
              help="let respondents fetch their interpretations")
@click.option("--idle-timeout", type=float, default=None,
              help="seconds before an abandoned session is dropped")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False, path_type=Path),
              default=None, help="JSON config; flags override it")
def cmd_serve(tests_dir: Path | None, log_path: Path | None, listen: str | None,
              reveal_results: bool, idle_timeout: float | None,
              config_path: Path | None) -> None:
    """Serve the respondent HTTP API over the tests directory."""
    import uvicorn

    tree = {}
    if config_path is not None:
        tree = json.loads(config_path.read_text(encoding="utf-8"))
    config = ServiceConfig(
        tests_dir=tests_dir or Path(tree.get("tests_dir", data_dir())),
        session_log=log_path or Path(tree.get("session_log", default_log_path())),
        listen=listen or tree.get("listen", ServiceConfig.listen),
        reveal_results=reveal_results or bool(tree.get("reveal_results", False)),
        idle_timeout=idle_timeout if idle_timeout is not None
        else float(tree.get("idle_timeout", ServiceConfig.idle_timeout)),
    )
    try:
        app = create_app(config)
        host, port = config.host_port()
    except (ValueError, EngineError) as exc:
        raise click.ClickException(str(exc)) from exc
    uvicorn.run(app, host=host, port=port, log_level="warning")


if __name__ == "__main__":
    main()
