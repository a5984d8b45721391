"""Command-line entry point: run experiments, threshold sweeps, file scoring.

Exit codes: 0 success, 2 configuration/usage error, 3 backend failures
(partial outputs are preserved).
"""

from __future__ import annotations

import argparse
import logging
import sys

from .config import ConfigError, apply_overrides, load_experiment_config
from .corpus import IngestionError
from .embedders import OneHotEmbedder
from .harness import (
    DEFAULT_SWEEP_THRESHOLDS,
    MockScript,
    run_experiment,
    run_sweep,
    score_files,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BACKEND = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sumgate",
        description="Adversarial generate/judge summarization loop and metric harness",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the refinement loop over a corpus")
    run.add_argument("--config", required=True, help="TOML or JSON experiment config")
    run.add_argument("--threshold", type=float, help="override the gate threshold")
    run.add_argument("--sample", type=int, help="cap the number of documents")
    run.add_argument("--seed", type=int, help="subsampling seed")
    run.add_argument("--parallel", type=int, help="worker pool size")
    run.add_argument("--mock", help="JSONL script of per-document mock responses")
    run.add_argument("--output", help="override the output directory")

    sweep = sub.add_parser("sweep", help="threshold ablation sweep")
    sweep.add_argument("--config", required=True)
    sweep.add_argument(
        "--thresholds",
        help="comma-separated thresholds (default 8.0,8.2,8.4,8.6,8.8)",
    )
    sweep.add_argument("--sample", type=int)
    sweep.add_argument("--seed", type=int)
    sweep.add_argument("--parallel", type=int)
    sweep.add_argument("--mock")
    sweep.add_argument("--output")

    score = sub.add_parser("score", help="score paired candidate/reference files")
    score.add_argument("--candidates", required=True)
    score.add_argument("--references", required=True)
    score.add_argument("--output", default="out")
    return parser


def _load(args) -> tuple:
    config = load_experiment_config(args.config)
    config = apply_overrides(
        config,
        threshold=getattr(args, "threshold", None),
        sample=args.sample,
        seed=args.seed,
        parallel=args.parallel,
        output=args.output,
    )
    mock_script = MockScript.load(args.mock) if args.mock else None
    return config, mock_script


def _cmd_run(args) -> int:
    config, mock_script = _load(args)
    result = run_experiment(config, mock_script=mock_script)
    print(
        f"{len(result.traces)} document(s): "
        f"acceptance_rate={result.acceptance_rate:.4f} "
        f"mean_rounds={result.mean_rounds:.4f} -> {config.output_dir}"
    )
    if result.errored:
        logger.error("%d trace(s) carry backend errors", result.errored)
        return EXIT_BACKEND
    return EXIT_OK


def _parse_thresholds(raw: str | None) -> list[float]:
    if raw is None:
        return list(DEFAULT_SWEEP_THRESHOLDS)
    try:
        return [float(part) for part in raw.split(",") if part.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad --thresholds value: {exc}") from exc


def _cmd_sweep(args) -> int:
    config, mock_script = _load(args)
    thresholds = _parse_thresholds(args.thresholds)
    rows = run_sweep(config, thresholds, mock_script=mock_script)
    for row in rows:
        print(
            f"{row.label}: acceptance_rate={row.acceptance_rate:.4f} "
            f"mean_rounds={row.mean_rounds:.4f}"
        )
    if any(row.errored for row in rows):
        logger.error("some sweep runs carry backend errors")
        return EXIT_BACKEND
    return EXIT_OK


def _cmd_score(args) -> int:
    rows = score_files(args.candidates, args.references, OneHotEmbedder(), args.output)
    print(f"scored {len(rows)} pair(s) -> {args.output}/scores.csv")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    handlers = {"run": _cmd_run, "sweep": _cmd_sweep, "score": _cmd_score}
    try:
        return handlers[args.command](args)
    except (ConfigError, IngestionError) as exc:
        logger.error("%s", exc)
        return EXIT_CONFIG


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
