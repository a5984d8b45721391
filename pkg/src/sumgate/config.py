"""Experiment configuration: TOML (or JSON) file plus CLI flag overrides."""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .backends import BackendSpec
from .corpus import DATASET_FIELD_MAPS, DATASET_TAGS
from .embedders import FileEmbedder, HttpEmbedder, OneHotEmbedder, TokenEmbedder
from .loop import LoopConfig
from .prompts import PromptConfig


class ConfigError(Exception):
    """Bad or missing configuration."""


@dataclass
class CorpusConfig:
    path: str
    format: str = "jsonl"
    field_map: dict[str, str] = field(default_factory=dict)
    dataset: str = "custom"
    max_errors: int = 0

    def __post_init__(self) -> None:
        if self.format not in ("jsonl", "csv"):
            raise ConfigError(f"unsupported corpus format {self.format!r}")
        if self.dataset not in DATASET_TAGS:
            raise ConfigError(f"unknown dataset tag {self.dataset!r}")
        if not self.field_map:
            preset = DATASET_FIELD_MAPS.get(self.dataset)
            if preset is None:
                raise ConfigError(
                    "corpus.field_map is required for custom datasets"
                )
            self.field_map = dict(preset)
        if "source" not in self.field_map:
            raise ConfigError("corpus.field_map must name a 'source' field")


@dataclass
class EmbedderConfig:
    kind: str = "one_hot"  # one_hot | http | vectors_file
    endpoint_url: str = ""
    path: str = ""
    timeout: float = 30.0

    def build(self) -> TokenEmbedder:
        if self.kind == "one_hot":
            return OneHotEmbedder()
        if self.kind == "http":
            if not self.endpoint_url:
                raise ConfigError("embedder.endpoint_url is required for kind=http")
            return HttpEmbedder(self.endpoint_url, timeout=self.timeout)
        if self.kind == "vectors_file":
            if not self.path:
                raise ConfigError("embedder.path is required for kind=vectors_file")
            return FileEmbedder(self.path)
        raise ConfigError(f"unknown embedder kind {self.kind!r}")


@dataclass
class ExperimentConfig:
    corpus: CorpusConfig
    loop: LoopConfig
    embedder: EmbedderConfig = field(default_factory=EmbedderConfig)
    sample_cap: int | None = None
    seed: int = 0
    output_dir: str = "out"
    parallel: int | None = None  # None -> logical cores


def _read_config_file(path: str | Path) -> dict:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    if path.suffix == ".json":
        try:
            return json.loads(raw.decode("utf-8"))
        except ValueError as exc:
            raise ConfigError(f"invalid JSON config: {exc}") from exc
    try:
        return tomllib.loads(raw.decode("utf-8"))
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML config: {exc}") from exc


def _backend_from_dict(data: dict, label: str) -> BackendSpec:
    known = {
        "kind", "endpoint_url", "model_name", "timeout", "max_retries",
        "temperature", "max_output_tokens", "api_key_env", "backoff_base",
        "max_concurrency",
    }
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown {label} backend keys: {sorted(unknown)}")
    try:
        return BackendSpec(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid {label} backend: {exc}") from exc


def _prompt_config_from_dict(data: dict) -> PromptConfig:
    kwargs = {}
    if "max_summary_words" in data:
        kwargs["max_summary_words"] = int(data["max_summary_words"])
    if "style" in data:
        kwargs["style_literal"] = str(data["style"])
    if "target" in data:
        kwargs["target_literal"] = str(data["target"])
    if "length_template" in data:
        kwargs["length_template"] = str(data["length_template"])
    if "feedback" in data:
        kwargs["feedback_overrides"] = {
            str(k): str(v) for k, v in data["feedback"].items()
        }
    try:
        return PromptConfig(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"invalid prompts section: {exc}") from exc


def load_experiment_config(path: str | Path) -> ExperimentConfig:
    """Parse an experiment config file into a validated ExperimentConfig."""
    data = _read_config_file(path)

    corpus_data = data.get("corpus")
    if not isinstance(corpus_data, dict) or "path" not in corpus_data:
        raise ConfigError("config needs a [corpus] section with a path")
    try:
        corpus = CorpusConfig(
            path=str(corpus_data["path"]),
            format=str(corpus_data.get("format", "jsonl")),
            field_map={
                str(k): str(v)
                for k, v in (corpus_data.get("field_map") or {}).items()
            },
            dataset=str(corpus_data.get("dataset", "custom")),
            max_errors=int(corpus_data.get("max_errors", 0)),
        )
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid corpus section: {exc}") from exc

    prompt_config = _prompt_config_from_dict(data.get("prompts", {}))

    # backends may be omitted when the run is driven by --mock
    placeholder = BackendSpec(kind="scripted_mock")
    generator = placeholder
    evaluator = placeholder
    if "generator" in data:
        generator = _backend_from_dict(data["generator"], "generator")
    if "evaluator" in data:
        evaluator = _backend_from_dict(data["evaluator"], "evaluator")

    loop_data = data.get("loop", {})
    try:
        loop = LoopConfig(
            generator=generator,
            evaluator=evaluator,
            prompt_config=prompt_config,
            threshold=float(loop_data.get("threshold", 8.8)),
            max_rounds=int(loop_data.get("max_rounds", 5)),
            accumulate_feedback=bool(loop_data.get("accumulate_feedback", False)),
        )
    except ValueError as exc:
        raise ConfigError(f"invalid loop section: {exc}") from exc

    embedder_data = data.get("embedder", {})
    embedder = EmbedderConfig(
        kind=str(embedder_data.get("kind", "one_hot")),
        endpoint_url=str(embedder_data.get("endpoint_url", "")),
        path=str(embedder_data.get("path", "")),
        timeout=float(embedder_data.get("timeout", 30.0)),
    )

    run_data = data.get("run", {})
    sample_cap = run_data.get("sample_cap")
    return ExperimentConfig(
        corpus=corpus,
        loop=loop,
        embedder=embedder,
        sample_cap=int(sample_cap) if sample_cap is not None else None,
        seed=int(run_data.get("seed", 0)),
        output_dir=str(run_data.get("output_dir", "out")),
        parallel=int(run_data["parallel"]) if "parallel" in run_data else None,
    )


def apply_overrides(
    config: ExperimentConfig,
    threshold: float | None = None,
    sample: int | None = None,
    seed: int | None = None,
    parallel: int | None = None,
    output: str | None = None,
) -> ExperimentConfig:
    """Apply CLI flag overrides on top of the config file values."""
    loop = config.loop
    if threshold is not None:
        try:
            loop = replace(loop, threshold=threshold)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    return replace(
        config,
        loop=loop,
        sample_cap=sample if sample is not None else config.sample_cap,
        seed=seed if seed is not None else config.seed,
        parallel=parallel if parallel is not None else config.parallel,
        output_dir=output if output is not None else config.output_dir,
    )
