"""Command-line entry point: run, compare, validate, casestudy."""
from __future__ import annotations

import argparse
import sys

from .errors import (
    ConfigError,
    EmptyData,
    InsufficientData,
    NonConvergence,
    NonPositiveDefiniteSample,
    OutOfRangeValue,
    SembnError,
    SingularImpliedCov,
    SingularSystem,
    UnknownColumn,
    UnparseableCell,
    UnreadableData,
    ZeroProbabilityEvidence,
)
from .pipeline import compare_estimators, load_config, run_pipeline, validate_config

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4

_DATA_ERRORS = (UnknownColumn, OutOfRangeValue, UnparseableCell, EmptyData,
                InsufficientData, UnreadableData)
_NUMERICAL_ERRORS = (NonConvergence, NonPositiveDefiniteSample, SingularSystem,
                     SingularImpliedCov, ZeroProbabilityEvidence)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sembn",
        description="SEM-to-Bayesian-network causal analysis pipeline")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_text in (
        ("run", "run the full pipeline from a config file"),
        ("compare", "fit EM and BDeu side by side and emit comparison.json"),
        ("validate", "dry-run checks on a config file"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("config", help="TOML pipeline config")
        p.add_argument("--out", help="override the output directory")
        p.add_argument("--seed", type=int, help="override the split seed")

    p = sub.add_parser("casestudy",
                       help="write the bundled synthetic study data + config")
    p.add_argument("--out", default="casestudy", help="target directory")
    p.add_argument("--seed", type=int, default=None, help="generation seed")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "casestudy":
            return _casestudy(args)
        config = load_config(args.config, out_dir=args.out, seed=args.seed)
        if args.command == "validate":
            problems = validate_config(config)
            for p in problems:
                print(f"problem: {p}", file=sys.stderr)
            if problems:
                return EXIT_CONFIG
            print("config ok")
            return EXIT_OK
        if args.command == "compare":
            comparison = compare_estimators(config)
            for method, parts in comparison["metrics"].items():
                v = parts["validation"]
                print(f"{method}: validation accuracy={v['accuracy']:.4f} "
                      f"recall={v['recall_macro']:.4f} f1={v['f1_macro']:.4f}")
            return EXIT_OK
        manifest = run_pipeline(config)
        counts = manifest["counts"]
        print(f"ok: {counts['n_ingested']} cases ingested, "
              f"{counts['n_complete']} complete, "
              f"{counts['n_train']}/{counts['n_validation']} split; "
              f"artifacts in {config.out_dir}")
        return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _DATA_ERRORS as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except _NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except SembnError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


def _casestudy(args) -> int:
    import os

    from .casestudy import (
        DEFAULT_SEED,
        case_study_config_text,
        generate_case_study,
    )
    from .dataset import to_csv

    os.makedirs(args.out, exist_ok=True)
    seed = DEFAULT_SEED if args.seed is None else args.seed
    data = generate_case_study(seed)
    data_path = os.path.join(args.out, "data.csv")
    to_csv(data, data_path)
    config_path = os.path.join(args.out, "config.toml")
    with open(config_path, "w", encoding="utf-8") as fh:
        fh.write(case_study_config_text(data_path,
                                        os.path.join(args.out, "out")))
    print(f"wrote {data_path} ({data.n_cases} cases) and {config_path}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
