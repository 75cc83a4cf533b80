"""Command-line interface: ``train``, ``eval``, ``predict``, ``sweep``,
``stats``.

All subcommands accept ``--config PATH`` (key=value file) and ``--seed N``;
any configuration key can be overridden inline, e.g. ``--vat.gamma 0.6``.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .config import load_config
from .train import corpus_stats, evaluate, predict_file, sweep_epsilon, train


def _collect_overrides(extra: list[str]) -> dict[str, str]:
    overrides: dict[str, str] = {}
    i = 0
    while i < len(extra):
        arg = extra[i]
        if not arg.startswith("--"):
            raise SystemExit(f"unrecognized argument: {arg}")
        key, eq, value = arg[2:].partition("=")
        if not eq:
            if i + 1 >= len(extra):
                raise SystemExit(f"missing value for --{key}")
            value = extra[i + 1]
            i += 1
        overrides[key] = value
        i += 1
    return overrides


def _build_config(args: argparse.Namespace, extra: list[str]):
    overrides = _collect_overrides(extra)
    if args.seed is not None:
        overrides.setdefault("train.seed", str(args.seed))
    try:
        return load_config(args.config, overrides)
    except ValueError as exc:
        raise SystemExit(str(exc)) from exc


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="key=value configuration file")
    parser.add_argument("--seed", type=int, help="override train.seed")


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    parser = argparse.ArgumentParser(
        prog="toxspan",
        description="Toxic span detection: BiGRU-CRF tagger with virtual "
        "adversarial training",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train a tagger and save a checkpoint")
    _add_common(p_train)

    p_eval = sub.add_parser("eval", help="score a checkpoint on a labeled CSV")
    p_eval.add_argument("checkpoint")
    p_eval.add_argument("file")

    p_pred = sub.add_parser("predict", help="export span predictions for a CSV")
    p_pred.add_argument("checkpoint")
    p_pred.add_argument("file")
    p_pred.add_argument("--out", default="predictions.tsv")

    p_sweep = sub.add_parser("sweep", help="train once per epsilon, emit a TSV")
    _add_common(p_sweep)
    p_sweep.add_argument(
        "--epsilons", default="0,0.5,1,2,4", help="comma-separated magnitudes"
    )
    p_sweep.add_argument("--out", default="sweep.tsv")

    p_stats = sub.add_parser("stats", help="corpus summary and toxicity KDE")
    p_stats.add_argument("file")
    p_stats.add_argument("--bandwidth", type=float, default=0.05)
    p_stats.add_argument("--grid-size", type=int, default=100)
    p_stats.add_argument("--out", help="write the KDE TSV here instead of stdout")

    args, extra = parser.parse_known_args(argv)

    if args.command == "train":
        cfg = _build_config(args, extra)
        _, report = train(cfg)
        sys.stdout.write(report.to_tsv())
        return 0

    if args.command == "eval":
        if extra:
            raise SystemExit(f"unrecognized arguments: {' '.join(extra)}")
        score = evaluate(args.checkpoint, args.file)
        print(f"f1\t{score.f1!r}")
        print(f"precision\t{score.precision!r}")
        print(f"recall\t{score.recall!r}")
        return 0

    if args.command == "predict":
        if extra:
            raise SystemExit(f"unrecognized arguments: {' '.join(extra)}")
        predict_file(args.checkpoint, args.file, args.out)
        print(f"wrote {args.out}")
        return 0

    if args.command == "sweep":
        epsilons = [float(x) for x in args.epsilons.split(",") if x.strip() != ""]
        cfg = _build_config(args, extra)
        sweep_epsilon(cfg, epsilons, args.out)
        print(f"wrote {args.out}")
        return 0

    if args.command == "stats":
        if extra:
            raise SystemExit(f"unrecognized arguments: {' '.join(extra)}")
        result = corpus_stats(args.file, args.bandwidth, args.grid_size)
        for line in result.summary_lines():
            print(line)
        if result.kde is not None:
            kde_lines = [f"{x!r}\t{y!r}" for x, y in result.kde]
            if args.out:
                with open(args.out, "w", encoding="utf-8") as fh:
                    fh.write("grid_x\tdensity\n")
                    fh.write("\n".join(kde_lines) + "\n")
                print(f"wrote {args.out}")
            else:
                print("grid_x\tdensity")
                print("\n".join(kde_lines))
        return 0

    raise SystemExit(f"unknown command {args.command!r}")


if __name__ == "__main__":
    raise SystemExit(main())
