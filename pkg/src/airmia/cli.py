"""Command-line frontend.

Subcommands: gen (datasets only), train (classifiers), attack (inference
model + evaluation), run (one scenario end to end), run-all (all scenarios
across seeds plus the ordering summary), report (pretty-print a stored
report). Exit codes: 0 success, 2 configuration or usage error, 1 runtime
failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

from . import classify, harness, mia, scenarios, tinynn
from .errors import ArtifactError, InvalidConfigError, InvalidInputError, PipelineStageError
from .scenarios import Scenario

OUT_DIR_ENV = "AIRMIA_OUT"

_CLI_ONLY_KEYS = {"out_dir", "seeds"}


def _load_config_document(path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ArtifactError(f"cannot read config file {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise InvalidConfigError(f"{path}: config must be a JSON object")
    return doc


def _resolve(args, *, need_scenario: bool, need_seed: bool):
    """Merge config file, environment, and flags into (config, out_dir, seeds)."""
    doc = dict(_load_config_document(args.config)) if args.config else {}
    config_out = doc.pop("out_dir", None)
    out_dir = args.out or config_out or os.environ.get(OUT_DIR_ENV) or "out"
    seeds = doc.pop("seeds", None)
    if getattr(args, "seeds", None):
        seeds = args.seeds
    if args.scenario:
        doc["scenario"] = args.scenario
    if args.seed is not None:
        doc["seed"] = args.seed
    if need_scenario and "scenario" not in doc:
        raise InvalidConfigError("no scenario given (use --scenario or a config file)")
    if need_seed and "seed" not in doc:
        raise InvalidConfigError("no seed given (use --seed or a config file)")
    doc.setdefault("scenario", Scenario.FULL_STRONG.value)
    doc.setdefault("seed", 0)
    config = scenarios.config_from_document(doc)
    return config, Path(out_dir), seeds


def _parse_seeds(seeds) -> list[int]:
    if seeds is None:
        raise InvalidConfigError("no seeds given (use --seeds or a config file)")
    if isinstance(seeds, str):
        seeds = [s for s in seeds.replace(",", " ").split() if s]
    try:
        return [int(s) for s in seeds]
    except (TypeError, ValueError) as exc:
        raise InvalidConfigError(f"seeds must be integers: {exc}") from exc


def format_confusion(confusion: mia.ConfusionMatrix) -> str:
    corner = "Real \\ Predicted"
    rows = [f"{corner:<18}{'non-member':>12}{'member':>10}"]
    for name, row in zip(("non-member", "member"), confusion.rates):
        rows.append(f"{name:<18}{row[0]:>12.4f}{row[1]:>10.4f}")
    rows.append(f"MIA accuracy: {confusion.accuracy:.4f}")
    return "\n".join(rows)


def _print_report_summary(report: harness.ScenarioReport) -> None:
    cfg = report.config
    print(f"scenario={cfg.scenario.value} seed={cfg.seed}")
    print(f"  target accuracy:    train {report.target_report.train_accuracy:.4f}  "
          f"test {report.target_report.test_accuracy:.4f}")
    print(f"  surrogate accuracy: train {report.surrogate_report.train_accuracy:.4f}  "
          f"test {report.surrogate_report.test_accuracy:.4f}")
    print(f"  paired agreement:   {report.paired_agreement:.4f}")
    print(format_confusion(report.confusion))


def _cmd_gen(args) -> int:
    config, out_dir, _ = _resolve(args, need_scenario=True, need_seed=True)
    cell = harness.cell_dir(out_dir, config)
    bundle = scenarios.generate_scenario_data(config)
    harness.save_datasets(bundle, cell / "datasets")
    harness.write_json(cell / "config.json", scenarios.config_to_document(config))
    print(f"wrote datasets for {config.scenario.value} seed {config.seed} "
          f"to {cell / 'datasets'}")
    return 0


def _cmd_train(args) -> int:
    config, out_dir, _ = _resolve(args, need_scenario=True, need_seed=True)
    cell = harness.cell_dir(out_dir, config)
    data = harness.load_datasets(cell / "datasets")
    hyper = harness.PipelineHyper.for_config(config)
    provider_test = [p.provider_view for p in data["test_pairs"]]
    adversary_test = [p.adversary_view for p in data["test_pairs"]]
    target, target_report = classify.train_target(
        data["provider_train"], provider_test, hyper.target)
    surrogate, surrogate_report = classify.train_surrogate(
        data["surrogate_pairs"], target, adversary_test, hyper.surrogate)
    models = cell / "models"
    models.mkdir(parents=True, exist_ok=True)
    tinynn.save_model(target, models / "target.json")
    tinynn.save_model(surrogate, models / "surrogate.json")
    classify.save_report(target_report, models / "target_report.json")
    classify.save_report(surrogate_report, models / "surrogate_report.json")
    print(f"target test accuracy    {target_report.test_accuracy:.4f}")
    print(f"surrogate test accuracy {surrogate_report.test_accuracy:.4f}")
    return 0


def _cmd_attack(args) -> int:
    config, out_dir, _ = _resolve(args, need_scenario=True, need_seed=True)
    cell = harness.cell_dir(out_dir, config)
    data = harness.load_datasets(cell / "datasets")
    target = tinynn.load_model(cell / "models" / "target.json")
    surrogate = tinynn.load_model(cell / "models" / "surrogate.json")
    target_report = classify.load_report(cell / "models" / "target_report.json")
    surrogate_report = classify.load_report(cell / "models" / "surrogate_report.json")
    hyper = harness.PipelineHyper.for_config(config)
    dataset = mia.split_membership(data["member_eval"], data["nonmember_eval"],
                                   hyper.split_seed)
    model, gain_history = mia.train_mia(surrogate, dataset, hyper.mia)
    members_test = [dataset.members[i] for i in dataset.member_test_idx]
    nonmembers_test = [dataset.nonmembers[i] for i in dataset.nonmember_test_idx]
    confusion = mia.evaluate_mia(model, surrogate, members_test, nonmembers_test)
    report = harness.ScenarioReport(
        config=config,
        seeds=hyper.seed_record(config),
        target_report=target_report,
        surrogate_report=surrogate_report,
        confusion=confusion,
        gain_history=gain_history,
        paired_agreement=classify.paired_agreement(target, surrogate, data["test_pairs"]),
        unauthorized_grant_rate=classify.grant_rate(
            target, data["unauthorized_provider_views"]),
    )
    mia.save_mia_model(model, cell / "models" / "mia.json")
    harness.write_json(cell / "report.json", report.to_document())
    harness.write_json(cell / "confusion.json", confusion.to_document(
        scenario=config.scenario.value, seed=config.seed))
    harness.atomic_write_text(cell / "confusion.csv", confusion.to_csv_text())
    _print_report_summary(report)
    return 0


def _cmd_run(args) -> int:
    config, out_dir, _ = _resolve(args, need_scenario=True, need_seed=True)
    report = harness.run_scenario(config, out_dir=out_dir)
    _print_report_summary(report)
    print(f"report written to {harness.cell_dir(out_dir, config) / 'report.json'}")
    return 0


def _cmd_run_all(args) -> int:
    config, out_dir, seeds = _resolve(args, need_scenario=False, need_seed=False)
    seeds = _parse_seeds(seeds)
    started = time.perf_counter()
    reports, summary = harness.run_all(seeds, base_config=config, out_dir=out_dir)
    for report in reports:
        print(f"{report.config.scenario.value:<16} seed {report.config.seed:>3}  "
              f"MIA accuracy {report.mia_accuracy:.4f}")
    print("\nmedian MIA accuracy over seeds", summary["seeds"])
    for name, value in summary["median_accuracy"].items():
        print(f"  {name:<16} {value:.4f}")
    print("ordering checks:")
    for name, ok in summary["orderings"].items():
        print(f"  {name:<28} {'ok' if ok else 'VIOLATED'}")
    print(f"total wall time {time.perf_counter() - started:.1f} s")
    return 0


def _cmd_report(args) -> int:
    report = harness.load_report_file(args.path)
    if args.json:
        print(json.dumps(report.to_document(), sort_keys=True, indent=2))
    else:
        _print_report_summary(report)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="airmia",
        description="Signal authentication simulator with an over-the-air "
                    "membership inference attack pipeline.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, seeds_flag=False):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--scenario", choices=[s.value for s in Scenario])
        p.add_argument("--seed", type=int)
        if seeds_flag:
            p.add_argument("--seeds", help="comma-separated seed list")
        p.add_argument("--out", help=f"output directory (default ${OUT_DIR_ENV} or ./out)")

    add_common(sub.add_parser("gen", help="generate and persist the datasets"))
    add_common(sub.add_parser("train", help="train target and surrogate classifiers"))
    add_common(sub.add_parser("attack", help="train and evaluate the inference model"))
    add_common(sub.add_parser("run", help="run one scenario end to end"))
    add_common(sub.add_parser("run-all", help="run every scenario for each seed"),
               seeds_flag=True)
    rep = sub.add_parser("report", help="pretty-print a stored report")
    rep.add_argument("path", help="path to a report.json")
    rep.add_argument("--json", action="store_true", help="machine-readable output")
    return parser


_COMMANDS = {
    "gen": _cmd_gen,
    "train": _cmd_train,
    "attack": _cmd_attack,
    "run": _cmd_run,
    "run-all": _cmd_run_all,
    "report": _cmd_report,
}


def dispatch(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on usage errors, 0 on --help
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except InvalidConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ArtifactError, PipelineStageError, InvalidInputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
