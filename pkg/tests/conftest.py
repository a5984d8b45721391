"""Shared fixtures plus per-criterion pass/fail reporting for the acceptance suite."""

from __future__ import annotations

import json
import re
from pathlib import Path

import pytest

from sumgate.dimensions import DIMENSIONS
from sumgate.judge import ScoreReport, render_score_report

_ACCEPTANCE_RESULTS: dict[str, str] = {}
_CRITERION_RE = re.compile(r"test_criterion_\d+[^\[]*")


def make_report(**overrides) -> ScoreReport:
    scores = {d: 9.0 for d in DIMENSIONS}
    for key, value in overrides.items():
        if key not in scores:
            raise KeyError(key)
        scores[key] = value
    return ScoreReport(scores=scores)


def make_report_json(**overrides) -> str:
    return render_score_report(make_report(**overrides))


@pytest.fixture
def report_json():
    return make_report_json


def pytest_runtest_logreport(report):
    name = report.nodeid.rsplit("::", 1)[-1]
    if "test_acceptance" not in report.nodeid or not name.startswith("test_criterion"):
        return
    if report.when == "setup" and report.skipped:
        _ACCEPTANCE_RESULTS[name] = f"SKIP ({report.longrepr[2] if report.longrepr else 'skipped'})"
    elif report.when == "call":
        _ACCEPTANCE_RESULTS[name] = "PASS" if report.passed else "FAIL"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_ACCEPTANCE_RESULTS):
        terminalreporter.write_line(f"{name}: {_ACCEPTANCE_RESULTS[name]}")


# ---------------------------------------------------------------------------
# deterministic end-to-end fixture: a small corpus plus a per-document mock
# script whose judge scores rise round over round

FIXTURE_WORDS = (
    "alpha beta gamma delta epsilon zeta eta theta iota kappa "
    "lambda omicron sigma upsilon omega"
).split()


def _doc_words(i: int) -> list[str]:
    return [FIXTURE_WORDS[(i + j) % len(FIXTURE_WORDS)] for j in range(12)]


def _judge_scores(i: int, round_index: int) -> dict[str, float]:
    base = min(10.0, 7.9 + 0.25 * round_index + 0.1 * (i % 4))
    if i % 5 == 0:  # a fifth of the corpus stalls below the top threshold
        base = min(base, 8.7)
    scores = {d: base for d in DIMENSIONS}
    scores["Fluency"] = max(1.0, base - 0.1)  # binding dimension
    return scores


def build_mock_fixture(root: Path, n_docs: int = 20, max_rounds: int = 5) -> dict[str, Path]:
    """Write corpus.jsonl, script.jsonl, and config.toml under ``root``."""
    root.mkdir(parents=True, exist_ok=True)
    corpus_path = root / "corpus.jsonl"
    script_path = root / "script.jsonl"
    config_path = root / "config.toml"

    with open(corpus_path, "w", encoding="utf-8") as handle:
        for i in range(n_docs):
            words = _doc_words(i)
            record = {
                "id": f"doc{i:03d}",
                "article": (
                    "The report covers " + " ".join(words[:8]) + ". "
                    "It then discusses " + " ".join(words[8:]) + " in detail."
                ),
                "highlights": "Report on " + " ".join(words[:6]) + ".",
            }
            handle.write(json.dumps(record) + "\n")

    with open(script_path, "w", encoding="utf-8") as handle:
        for i in range(n_docs):
            words = _doc_words(i)
            generator = [
                f"Round {r} report on " + " ".join(words[: 4 + (r + i) % 3])
                for r in range(1, max_rounds + 1)
            ]
            evaluator = [
                json.dumps(_judge_scores(i, r)) for r in range(1, max_rounds + 1)
            ]
            handle.write(
                json.dumps(
                    {"id": f"doc{i:03d}", "generator": generator, "evaluator": evaluator}
                )
                + "\n"
            )

    config_path.write_text(
        "\n".join(
            [
                "[corpus]",
                f'path = "{corpus_path}"',
                'format = "jsonl"',
                "[corpus.field_map]",
                'source = "article"',
                'reference = "highlights"',
                'id = "id"',
                "",
                "[loop]",
                "threshold = 8.8",
                f"max_rounds = {max_rounds}",
                "",
                "[prompts]",
                "max_summary_words = 50",
                "",
                "[run]",
                "seed = 7",
                "parallel = 2",
            ]
        )
        + "\n",
        encoding="utf-8",
    )
    return {"corpus": corpus_path, "script": script_path, "config": config_path}


@pytest.fixture
def mock_fixture(tmp_path):
    return build_mock_fixture(tmp_path / "fixture")
