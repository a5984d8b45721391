import csv
import json

import pytest

from conftest import make_report_json
from sumgate.cli import main
from sumgate.config import (
    ConfigError,
    apply_overrides,
    load_experiment_config,
)
from sumgate.corpus import Document
from sumgate.harness import MockScript, threshold_label
from sumgate.loop import read_traces_jsonl


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as handle:
        return list(csv.reader(handle))


class TestConfig:
    def test_toml_round_trip(self, mock_fixture):
        config = load_experiment_config(mock_fixture["config"])
        assert config.loop.threshold == 8.8
        assert config.loop.max_rounds == 5
        assert config.loop.prompt_config.max_summary_words == 50
        assert config.corpus.field_map["source"] == "article"
        assert config.seed == 7

    def test_json_config_accepted(self, tmp_path, mock_fixture):
        payload = {
            "corpus": {
                "path": str(mock_fixture["corpus"]),
                "field_map": {"source": "article"},
            },
            "loop": {"threshold": 7.5},
        }
        path = tmp_path / "config.json"
        path.write_text(json.dumps(payload), encoding="utf-8")
        config = load_experiment_config(path)
        assert config.loop.threshold == 7.5

    def test_dataset_preset_field_map(self, tmp_path, mock_fixture):
        path = tmp_path / "config.toml"
        path.write_text(
            f'[corpus]\npath = "{mock_fixture["corpus"]}"\ndataset = "cnn_dailymail"\n',
            encoding="utf-8",
        )
        config = load_experiment_config(path)
        assert config.corpus.field_map == {"source": "article", "reference": "highlights"}

    def test_missing_corpus_section(self, tmp_path):
        path = tmp_path / "config.toml"
        path.write_text('[loop]\nthreshold = 8.0\n', encoding="utf-8")
        with pytest.raises(ConfigError):
            load_experiment_config(path)

    def test_unknown_backend_key_rejected(self, tmp_path, mock_fixture):
        path = tmp_path / "config.toml"
        path.write_text(
            "\n".join(
                [
                    "[corpus]",
                    f'path = "{mock_fixture["corpus"]}"',
                    "[corpus.field_map]",
                    'source = "article"',
                    "[generator]",
                    'kind = "http_chat"',
                    'endpoint_url = "http://x"',
                    'model_name = "m"',
                    "tempratures = 1.0",
                ]
            ),
            encoding="utf-8",
        )
        with pytest.raises(ConfigError):
            load_experiment_config(path)

    def test_overrides(self, mock_fixture):
        config = load_experiment_config(mock_fixture["config"])
        updated = apply_overrides(config, threshold=8.0, sample=5, seed=99, output="elsewhere")
        assert updated.loop.threshold == 8.0
        assert updated.sample_cap == 5
        assert updated.seed == 99
        assert updated.output_dir == "elsewhere"
        # untouched values survive
        assert updated.loop.max_rounds == config.loop.max_rounds


class TestMockScript:
    def test_per_document_entries(self, tmp_path):
        path = tmp_path / "script.jsonl"
        path.write_text(
            json.dumps({"id": "a", "generator": ["g"], "evaluator": [make_report_json()]})
            + "\n",
            encoding="utf-8",
        )
        script = MockScript.load(path)
        gen, ev = script.backends_for(Document(id="a", source="s"))
        assert gen.mock.remaining() == 1
        # fresh queues per call
        gen2, _ = script.backends_for(Document(id="a", source="s"))
        assert gen2.mock is not gen.mock

    def test_default_entry(self, tmp_path):
        path = tmp_path / "script.jsonl"
        path.write_text(
            json.dumps({"default": {"generator": ["g"], "evaluator": ["e"]}}) + "\n",
            encoding="utf-8",
        )
        script = MockScript.load(path)
        gen, _ = script.backends_for(Document(id="anything", source="s"))
        assert gen.mock.remaining() == 1

    def test_unknown_document_without_default(self, tmp_path):
        path = tmp_path / "script.jsonl"
        path.write_text(json.dumps({"id": "a"}) + "\n", encoding="utf-8")
        script = MockScript.load(path)
        with pytest.raises(ConfigError):
            script.backends_for(Document(id="b", source="s"))

    def test_bad_line_rejected(self, tmp_path):
        path = tmp_path / "script.jsonl"
        path.write_text('{"neither": true}\n', encoding="utf-8")
        with pytest.raises(ConfigError):
            MockScript.load(path)


class TestRunCommand:
    def test_outputs_and_exit_code(self, mock_fixture, tmp_path):
        out = tmp_path / "out"
        code = main(
            [
                "run",
                "--config", str(mock_fixture["config"]),
                "--mock", str(mock_fixture["script"]),
                "--output", str(out),
            ]
        )
        assert code == 0
        for name in ("traces.jsonl", "metrics.csv", "summary.csv", "summary.txt", "summary.png"):
            assert (out / name).exists(), name
        traces = read_traces_jsonl(out / "traces.jsonl")
        assert len(traces) == 20
        rows = read_csv(out / "metrics.csv")
        assert rows[0][:10] == [
            "document_id", "Rouge1", "Rouge2", "Rouge3", "Rouge4",
            "Rouge5", "RougeL", "Bleu", "Meteor", "Bertscore",
        ]
        assert len(rows) == 21

    def test_summary_means_match_per_document_csv(self, mock_fixture, tmp_path):
        out = tmp_path / "out"
        main(
            [
                "run",
                "--config", str(mock_fixture["config"]),
                "--mock", str(mock_fixture["script"]),
                "--output", str(out),
            ]
        )
        rows = read_csv(out / "metrics.csv")
        data = [[float(x) for x in row[1:10]] for row in rows[1:]]
        means = [sum(col) / len(col) for col in zip(*data)]
        summary = read_csv(out / "summary.csv")
        assert summary[0][1:] == [
            "Rouge1", "Rouge2", "Rouge3", "Rouge4", "Rouge5",
            "RougeL", "Bleu", "Meteor", "Bertscore",
        ]
        written = [float(x) for x in summary[1][1:]]
        assert all(abs(a - b) <= 1e-9 for a, b in zip(means, written))

    def test_sample_and_seed_reproducible(self, mock_fixture, tmp_path):
        outputs = []
        for name in ("s1", "s2"):
            out = tmp_path / name
            code = main(
                [
                    "run",
                    "--config", str(mock_fixture["config"]),
                    "--mock", str(mock_fixture["script"]),
                    "--sample", "5",
                    "--seed", "7",
                    "--output", str(out),
                ]
            )
            assert code == 0
            outputs.append((out / "traces.jsonl").read_bytes())
        assert outputs[0] == outputs[1]
        assert len(read_traces_jsonl(tmp_path / "s1" / "traces.jsonl")) == 5

    def test_missing_config_exits_2(self, tmp_path):
        assert main(["run", "--config", str(tmp_path / "nope.toml")]) == 2

    def test_no_backends_and_no_mock_exits_2(self, mock_fixture):
        assert main(["run", "--config", str(mock_fixture["config"])]) == 2

    def test_unreachable_endpoint_exits_3_with_error_traces(self, mock_fixture, tmp_path):
        config_path = tmp_path / "config.toml"
        backend_lines = [
            'kind = "http_chat"',
            'endpoint_url = "http://127.0.0.1:9/unreachable"',
            'model_name = "m"',
            "timeout = 0.2",
            "max_retries = 0",
        ]
        config_path.write_text(
            "\n".join(
                [
                    "[corpus]",
                    f'path = "{mock_fixture["corpus"]}"',
                    "[corpus.field_map]",
                    'source = "article"',
                    'reference = "highlights"',
                    'id = "id"',
                    "[generator]",
                    *backend_lines,
                    "[evaluator]",
                    *backend_lines,
                ]
            ),
            encoding="utf-8",
        )
        out = tmp_path / "out"
        code = main(
            ["run", "--config", str(config_path), "--sample", "2", "--output", str(out)]
        )
        assert code == 3
        traces = read_traces_jsonl(out / "traces.jsonl")
        assert len(traces) == 2
        assert all(t.error is not None for t in traces)


class TestSweepCommand:
    def test_default_sweep_shape(self, mock_fixture, tmp_path):
        out = tmp_path / "sweep"
        code = main(
            [
                "sweep",
                "--config", str(mock_fixture["config"]),
                "--mock", str(mock_fixture["script"]),
                "--output", str(out),
            ]
        )
        assert code == 0
        rows = read_csv(out / "ablation.csv")
        assert rows[0] == [
            "label", "Rouge1", "Rouge2", "Rouge3", "Rouge4", "Rouge5",
            "RougeL", "Bleu", "Meteor", "Bertscore", "acceptance_rate", "mean_rounds",
        ]
        assert [r[0] for r in rows[1:]] == ["TS=8.0", "TS=8.2", "TS=8.4", "TS=8.6", "TS=8.8"]
        assert (out / "ablation.txt").exists()
        assert (out / "ablation.png").exists()

    def test_single_threshold_matches_plain_run(self, mock_fixture, tmp_path):
        sweep_out = tmp_path / "sweep"
        run_out = tmp_path / "run"
        main(
            [
                "sweep",
                "--config", str(mock_fixture["config"]),
                "--mock", str(mock_fixture["script"]),
                "--thresholds", "8.8",
                "--output", str(sweep_out),
            ]
        )
        main(
            [
                "run",
                "--config", str(mock_fixture["config"]),
                "--mock", str(mock_fixture["script"]),
                "--threshold", "8.8",
                "--output", str(run_out),
            ]
        )
        sweep_rows = read_csv(sweep_out / "ablation.csv")
        run_summary = read_csv(run_out / "summary.csv")
        assert len(sweep_rows) == 2
        assert sweep_rows[1][1:10] == run_summary[1][1:10]

    def test_mean_rounds_monotone_under_rising_scores(self, mock_fixture, tmp_path):
        out = tmp_path / "sweep"
        main(
            [
                "sweep",
                "--config", str(mock_fixture["config"]),
                "--mock", str(mock_fixture["script"]),
                "--output", str(out),
            ]
        )
        rows = read_csv(out / "ablation.csv")
        mean_rounds = [float(r[-1]) for r in rows[1:]]
        assert mean_rounds == sorted(mean_rounds)

    def test_bad_threshold_exits_2(self, mock_fixture, tmp_path):
        code = main(
            [
                "sweep",
                "--config", str(mock_fixture["config"]),
                "--mock", str(mock_fixture["script"]),
                "--thresholds", "with,love",
                "--output", str(tmp_path / "x"),
            ]
        )
        assert code == 2

    def test_threshold_labels(self):
        assert threshold_label(8.0) == "TS=8.0"
        assert threshold_label(8.2) == "TS=8.2"
        assert threshold_label(8.25) == "TS=8.25"


class TestScoreCommand:
    def test_identical_files_score_one(self, tmp_path):
        cands = tmp_path / "cands.txt"
        refs = tmp_path / "refs.txt"
        lines = ["the quick brown fox jumps high", "every good boy deserves fudge today"]
        cands.write_text("\n".join(lines) + "\n", encoding="utf-8")
        refs.write_text("\n".join(lines) + "\n", encoding="utf-8")
        out = tmp_path / "out"
        code = main(
            ["score", "--candidates", str(cands), "--references", str(refs), "--output", str(out)]
        )
        assert code == 0
        rows = read_csv(out / "scores.csv")
        assert len(rows) == 4  # header + 2 pairs + mean
        for row in rows[1:]:
            for value in row[1:8]:  # all ROUGE + BLEU columns
                assert float(value) == pytest.approx(1.0, abs=1e-9)

    def test_length_mismatch_exits_2(self, tmp_path):
        cands = tmp_path / "cands.txt"
        refs = tmp_path / "refs.txt"
        cands.write_text("a\nb\n", encoding="utf-8")
        refs.write_text("a\n", encoding="utf-8")
        assert main(
            ["score", "--candidates", str(cands), "--references", str(refs),
             "--output", str(tmp_path / "out")]
        ) == 2

    def test_empty_files_produce_empty_table(self, tmp_path):
        cands = tmp_path / "cands.txt"
        refs = tmp_path / "refs.txt"
        cands.write_text("", encoding="utf-8")
        refs.write_text("", encoding="utf-8")
        out = tmp_path / "out"
        code = main(
            ["score", "--candidates", str(cands), "--references", str(refs), "--output", str(out)]
        )
        assert code == 0
        rows = read_csv(out / "scores.csv")
        assert len(rows) == 1  # header only
