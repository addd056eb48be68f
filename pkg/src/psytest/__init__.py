"""psytest: authoring, administration, scoring and statistics for
personality questionnaires.

The package splits into:

- ``model``: immutable domain types and the pure scoring mathematics
- ``generator``: authoring operations and the ``.ptest.json`` file format
- ``executor``: the per-respondent session state machine and session log
- ``stats``: cross-session descriptive statistics and CSV export
- ``service`` / ``cli``: the HTTP API and the ``psytest`` command line
"""

from psytest.model import (
    AnswerSet,
    Band,
    Category,
    CategoryResult,
    DemographicField,
    EngineError,
    Item,
    ScaleBinding,
    ScoreTuple,
    TestDefinition,
    Violation,
    as_decimal,
    band_of,
    compute_max_score,
    compute_min_score,
    ensure_valid,
    raw_score,
    validate,
)

__all__ = [
    "AnswerSet",
    "Band",
    "Category",
    "CategoryResult",
    "DemographicField",
    "EngineError",
    "Item",
    "ScaleBinding",
    "ScoreTuple",
    "TestDefinition",
    "Violation",
    "as_decimal",
    "band_of",
    "compute_max_score",
    "compute_min_score",
    "ensure_valid",
    "raw_score",
    "validate",
]

__version__ = "0.1.0"
