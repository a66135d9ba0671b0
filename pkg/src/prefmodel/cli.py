"""Command-line front end: ``prefmodel <subcommand> [flags]``.

Settings come from built-in defaults, then an optional ``--config`` JSON
file, then flags.  The seed falls back to ``$PREFMODEL_SEED`` when neither
the file nor the flags set it.

Exit status: 0 when every stage succeeded, 1 when a stage failed, 2 for
usage errors, 3 when results were written but some folds or cells failed.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from . import __version__
from .characterize import CONFIDENCE_LEVELS, compare_agents
from .errors import PrefModelError
from .evaluation import cross_validate, holdout_evaluate, make_trainer, rollup_csv
from .featurize import MODES, FeatureMatrix, build_feature_matrix
from .learners import KINDS, canonical_kind, train, tunable_params
from .sampling import make_test_split, sample_matches, stratified_kfold
from .simulator import default_roster, generate_dataset, load_roster, write_dataset
from .telemetry import PREFERENCES, load_logs
from .tuning import GridSpec, tune_fold

logger = logging.getLogger("prefmodel")

EXIT_OK, EXIT_FAILED, EXIT_USAGE, EXIT_PARTIAL = 0, 1, 2, 3
DEFAULT_LEARNERS = ("naive_bayes", "adaboost", "ripper")


@dataclass
class ExperimentConfig:
    mode: str = "online"
    preferences: list[str] = field(default_factory=lambda: list(PREFERENCES))
    learners: list[str] = field(default_factory=lambda: list(DEFAULT_LEARNERS))
    k: int = 10
    seed: int = 0
    perc: float = 0.25
    cutoff: int = 100
    stride: int = 1
    jobs: int = field(default_factory=lambda: os.cpu_count() or 1)
    games_per_pair: int = 8
    params: dict = field(default_factory=dict)

    def validate(self) -> None:
        if self.mode not in MODES:
            raise UsageError(f"--mode must be one of {MODES}")
        for p in self.preferences:
            if p not in PREFERENCES:
                raise UsageError(f"unknown preference {p!r}; choose from {PREFERENCES}")
        try:
            self.learners = [canonical_kind(name) for name in self.learners]
        except PrefModelError as exc:
            raise UsageError(str(exc)) from exc
        if self.k < 2:
            raise UsageError("--k must be at least 2")
        if not 0.0 < self.perc <= 1.0:
            raise UsageError("--perc must lie in (0, 1]")
        if self.cutoff < 0 or self.stride < 1 or self.jobs < 1 or self.games_per_pair < 1:
            raise UsageError("--cutoff must be >= 0; --stride, --jobs and --games-per-pair >= 1")


class UsageError(Exception):
    pass


# flag dest -> config field
_FLAG_FIELDS = {
    "mode": "mode",
    "preference": "preferences",
    "learner": "learners",
    "k": "k",
    "seed": "seed",
    "perc": "perc",
    "cutoff": "cutoff",
    "stride": "stride",
    "jobs": "jobs",
    "games_per_pair": "games_per_pair",
}


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    cfg = ExperimentConfig()
    known = {f.name for f in fields(ExperimentConfig)}
    if getattr(args, "config", None):
        try:
            with open(args.config, encoding="utf-8") as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
        unknown = set(data) - known
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        for key, value in data.items():
            setattr(cfg, key, value)
        seed_from_file = "seed" in data
    else:
        seed_from_file = False
    for dest, name in _FLAG_FIELDS.items():
        value = getattr(args, dest, None)
        if value is not None:
            setattr(cfg, name, value)
    if getattr(args, "seed", None) is None and not seed_from_file and "PREFMODEL_SEED" in os.environ:
        try:
            cfg.seed = int(os.environ["PREFMODEL_SEED"])
        except ValueError as exc:
            raise UsageError("PREFMODEL_SEED must be an integer") from exc
    for key, value in getattr(args, "param", None) or []:
        cfg.params[key] = value
    cfg.validate()
    return cfg


def _parse_param(text: str):
    key, sep, raw = text.partition("=")
    if not sep or not key:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key, value


def _existing_dir(text: str) -> Path:
    path = Path(text)
    if not path.is_dir():
        raise argparse.ArgumentTypeError(f"no such directory: {text}")
    return path


def _existing_file(text: str) -> Path:
    path = Path(text)
    if not path.is_file():
        raise argparse.ArgumentTypeError(f"no such file: {text}")
    return path


def _add_common(p: argparse.ArgumentParser, *, learner=False, k=False, perc=False, jobs=False) -> None:
    p.add_argument("--config", type=_existing_file, help="JSON file of defaults; flags win")
    p.add_argument("--seed", type=int, help="master seed (fallback: $PREFMODEL_SEED, then 0)")
    p.add_argument("--mode", choices=MODES, help="online (128 features) or offline (130)")
    p.add_argument("--cutoff", type=int, help="drop turns <= cutoff (default 100)")
    p.add_argument("--stride", type=int, help="keep every n-th turn after the cutoff (default 1)")
    p.add_argument("--preference", action="append", choices=PREFERENCES, help="target preference; repeatable")
    if learner:
        p.add_argument("--learner", action="append", help=f"one of {KINDS} or nb/jrip/smo; repeatable")
        p.add_argument("--param", action="append", type=_parse_param, metavar="KEY=VALUE", help="learner parameter")
    if k:
        p.add_argument("--k", type=int, help="cross-validation folds (default 10)")
    if perc:
        p.add_argument("--perc", type=float, help="fraction of matches kept per class (default 0.25)")
    if jobs:
        p.add_argument("--jobs", type=int, help="concurrent fold or grid jobs")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="prefmodel", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate match logs from a roster")
    p.add_argument("--config", type=_existing_file)
    p.add_argument("--seed", type=int)
    p.add_argument("--roster", type=_existing_file, help="roster JSON (default: built-in roster)")
    p.add_argument("--alternative", action="store_true", help="use the built-in unknown-agent roster")
    p.add_argument("--games-per-pair", type=int)
    p.add_argument("--prefix", default=None, help="match id prefix (default m, or x with --alternative)")
    p.add_argument("--out", type=Path, required=True, help="output directory")

    p = sub.add_parser("featurize", help="logs -> one feature CSV per preference")
    _add_common(p)
    p.add_argument("--data", type=_existing_dir, required=True)
    p.add_argument("--out", type=Path, required=True, help="output directory")

    p = sub.add_parser("sample", help="test split plus per-class match sampling")
    _add_common(p, perc=True)
    p.add_argument("--data", type=_existing_dir, required=True)
    p.add_argument("--test-fraction", type=float, default=0.1)
    p.add_argument("--out", type=Path, help="JSON file (default: stdout)")

    p = sub.add_parser("train", help="fit one model")
    _add_common(p, learner=True, perc=True)
    p.add_argument("--data", type=_existing_dir, required=True)
    p.add_argument("--out", type=Path, required=True, help="model JSON")

    p = sub.add_parser("tune", help="grid search over SVM cost and gamma")
    _add_common(p, k=True, perc=True, jobs=True)
    p.add_argument("--data", type=_existing_dir, required=True)
    p.add_argument("--learner", action="append", help="only svm is tunable")
    p.add_argument("--fold", type=int, action="append", help="fold index; repeatable (default: all)")
    p.add_argument("--out", type=Path, required=True, help="output directory")

    p = sub.add_parser("evaluate", help="cross-validated or held-out accuracy")
    _add_common(p, learner=True, k=True, perc=True, jobs=True)
    p.add_argument("--data", type=_existing_dir, required=True)
    p.add_argument("--test-data", type=_existing_dir, help="score on these logs instead of cross-validating")
    p.add_argument("--out", type=Path, required=True, help="output directory")

    p = sub.add_parser("characterize", help="compare two agents' regression fits")
    p.add_argument("--data", type=_existing_dir, required=True)
    p.add_argument("--indicator", required=True)
    p.add_argument("--agents", nargs=2, required=True, metavar=("A", "B"))
    p.add_argument("--transform", help="rootK, e.g. root5")
    p.add_argument("--breakpoint", type=int)
    p.add_argument("--subset", choices=("general", "victory", "defeat"), default="general")
    p.add_argument("--confidence", type=float, choices=CONFIDENCE_LEVELS, default=0.99)
    p.add_argument("--out", type=Path, help="CSV file (default: stdout)")

    p = sub.add_parser("repro", help="simulate, featurize, cross-validate every preference, roll up")
    _add_common(p, learner=True, k=True, perc=True, jobs=True)
    p.add_argument("--games-per-pair", type=int)
    p.add_argument("--out", type=Path, required=True, help="output directory")
    return parser


def _features(logs, cfg: ExperimentConfig) -> FeatureMatrix:
    fm = build_feature_matrix(logs, cfg.mode, cfg.cutoff)
    if cfg.stride > 1:
        fm = fm.subset((fm.turns - cfg.cutoff - 1) % cfg.stride == 0)
    return fm


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def cmd_simulate(args) -> int:
    cfg = resolve_config(args)
    if args.roster and args.alternative:
        raise UsageError("--roster and --alternative are exclusive")
    roster = load_roster(args.roster) if args.roster else default_roster(args.alternative, seed=cfg.seed)
    prefix = args.prefix or ("x" if args.alternative else "m")
    logs = generate_dataset(roster, cfg.games_per_pair, cfg.seed, prefix=prefix)
    write_dataset(logs, args.out)
    print(f"wrote {len(logs)} logs ({len(logs) // 2} matches) to {args.out}")
    return EXIT_OK


def cmd_featurize(args) -> int:
    cfg = resolve_config(args)
    fm = _features(load_logs(args.data), cfg)
    args.out.mkdir(parents=True, exist_ok=True)
    for pref in cfg.preferences:
        fm.write_csv(args.out / f"features_{pref}.csv", pref)
    print(f"{len(fm)} instances x {len(fm.feature_names)} features ({cfg.mode}, fingerprint {fm.fingerprint})")
    return EXIT_OK


def cmd_sample(args) -> int:
    cfg = resolve_config(args)
    refs = _features(load_logs(args.data), cfg).match_refs()
    out = {}
    for pref in cfg.preferences:
        test, rest = make_test_split(refs, pref, args.test_fraction, cfg.seed)
        picked = sample_matches(rest, pref, cfg.perc, cfg.seed)
        out[pref] = {
            "test": sorted(r.match_id for r in test),
            "remainder": sorted(r.match_id for r in rest),
            "sampled": sorted(r.match_id for r in picked),
        }
        print(f"{pref}: matches={len(refs)} test={len(test)} remainder={len(rest)} sampled={len(picked)}")
    text = json.dumps(out, indent=2, sort_keys=True) + "\n"
    if args.out:
        _write(args.out, text)
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = resolve_config(args)
    if len(cfg.preferences) != 1 or len(cfg.learners) != 1:
        raise UsageError("train needs exactly one --preference and one --learner")
    pref, kind = cfg.preferences[0], cfg.learners[0]
    _normalize_params(cfg)
    fm = _features(load_logs(args.data), cfg)
    if cfg.perc < 1.0:
        fm = fm.select_matches(r.match_id for r in sample_matches(fm.match_refs(), pref, cfg.perc, cfg.seed))
    model = train(kind, fm.X, fm.labels(pref), fm.feature_names, **cfg.params.get(kind, {}))
    _write(args.out, model.to_json() + "\n")
    print(f"trained {kind} for {pref} on {len(fm)} instances")
    return EXIT_OK


def cmd_tune(args) -> int:
    cfg = resolve_config(args)
    if args.learner and [canonical_kind(x) for x in args.learner] != ["svm"]:
        raise UsageError("only the svm learner has a tuning grid")
    logs = load_logs(args.data)
    fm = _features(logs, cfg)
    grid = GridSpec()
    status = EXIT_OK
    total = 0
    for pref in cfg.preferences:
        folds = stratified_kfold(fm.match_refs(), pref, cfg.k, cfg.seed)
        for fold in args.fold if args.fold is not None else range(cfg.k):
            if not 0 <= fold < cfg.k:
                raise UsageError(f"--fold {fold} outside 0..{cfg.k - 1}")
            result = tune_fold(fm, folds, fold, pref, grid=grid, sample_perc=cfg.perc, seed=cfg.seed, jobs=cfg.jobs)
            path = args.out / f"grid_{pref}_fold{fold}.csv"
            path.parent.mkdir(parents=True, exist_ok=True)
            with open(path, "w", encoding="utf-8", newline="") as fh:
                result.write_csv(fh)
            total += len(result.cells)
            if any(c.failed for c in result.cells):
                status = EXIT_PARTIAL
            print(f"{pref} fold {fold}: best c=2^{result.best_c} g=2^{result.best_g} acc={result.best_accuracy:.4f}")
    print(f"{total} grid evaluations")
    return status


def _report_status(reports) -> int:
    return EXIT_PARTIAL if any(r.failed_folds for r in reports) else EXIT_OK


def _evaluate(fm, cfg, test_fm=None):
    reports = []
    for pref in cfg.preferences:
        folds = None if test_fm is not None else stratified_kfold(fm.match_refs(), pref, cfg.k, cfg.seed)
        for kind in cfg.learners:
            trainer = make_trainer(kind, **cfg.params.get(kind, {}))
            if test_fm is not None:
                train_fm = fm
                if cfg.perc < 1.0:
                    picked = sample_matches(fm.match_refs(), pref, cfg.perc, cfg.seed)
                    train_fm = fm.select_matches(r.match_id for r in picked)
                report = holdout_evaluate(trainer, train_fm, test_fm, pref)
            else:
                perc = cfg.perc if cfg.perc < 1.0 else None
                report = cross_validate(trainer, fm, folds, pref, sample_perc=perc, seed=cfg.seed, jobs=cfg.jobs)
            logger.info("%s %s: %.4f", pref, kind, report.mean_accuracy)
            reports.append(report)
    return reports


def _write_reports(reports, cfg, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    payload = {"config": _config_record(cfg), "reports": [r.to_dict() for r in reports]}
    _write(out / "reports.json", json.dumps(payload, indent=2, sort_keys=True) + "\n")
    _write(out / "rollup.csv", rollup_csv(reports, cfg.preferences, cfg.learners))


def _config_record(cfg: ExperimentConfig) -> dict:
    # jobs is left out: results must not depend on it
    record = asdict(cfg)
    record.pop("jobs")
    return record


def _normalize_params(cfg: ExperimentConfig) -> None:
    """Route flat ``--param`` values to the learners that take them.

    A dict keyed by learner name is taken as is.
    """
    if not cfg.params or all(k in KINDS for k in cfg.params):
        return
    shared = dict(cfg.params)
    routed = {kind: {} for kind in cfg.learners}
    for key, value in shared.items():
        takers = [kind for kind in cfg.learners if key in tunable_params(kind)]
        if not takers:
            raise UsageError(f"no selected learner takes parameter {key!r}")
        for kind in takers:
            routed[kind][key] = value
    cfg.params = routed


def cmd_evaluate(args) -> int:
    cfg = resolve_config(args)
    _normalize_params(cfg)
    fm = _features(load_logs(args.data), cfg)
    test_fm = _features(load_logs(args.test_data), cfg) if args.test_data else None
    reports = _evaluate(fm, cfg, test_fm)
    _write_reports(reports, cfg, args.out)
    sys.stdout.write(rollup_csv(reports, cfg.preferences, cfg.learners))
    return _report_status(reports)


def cmd_characterize(args) -> int:
    logs = load_logs(args.data)
    report = compare_agents(
        logs,
        args.agents[0],
        args.agents[1],
        args.indicator,
        transform=args.transform,
        breakpoint=args.breakpoint,
        subset=args.subset,
        confidence=args.confidence,
    )
    if args.out:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            report.write_csv(fh)
    else:
        report.write_csv(sys.stdout)
    for (lo, hi), verdicts in zip(report.intervals[args.agents[0]], report.verdicts):
        summary = ", ".join(f"{c} {v.verdict}" for c, v in verdicts.items())
        print(f"[{lo}:{hi}] {summary}", file=sys.stderr)
    return EXIT_OK


def cmd_repro(args) -> int:
    cfg = resolve_config(args)
    _normalize_params(cfg)
    stages = {}
    try:
        logs = generate_dataset(default_roster(seed=cfg.seed), cfg.games_per_pair, cfg.seed)
        stages["simulate"] = "ok"
        fm = _features(logs, cfg)
        stages["featurize"] = "ok"
        reports = _evaluate(fm, cfg)
        stages["evaluate"] = "ok" if not any(r.failed_folds for r in reports) else "partial"
        _write_reports(reports, cfg, args.out)
        stages["rollup"] = "ok"
    except PrefModelError as exc:
        failed = next((s for s in ("simulate", "featurize", "evaluate", "rollup") if s not in stages), "?")
        stages[failed] = f"failed: {exc}"
        _print_stages(stages)
        return EXIT_FAILED
    _print_stages(stages)
    sys.stdout.write(rollup_csv(reports, cfg.preferences, cfg.learners))
    return _report_status(reports)


def _print_stages(stages) -> None:
    for stage, status in stages.items():
        print(f"[{stage}] {status}", file=sys.stderr)


COMMANDS = {
    "simulate": cmd_simulate,
    "featurize": cmd_featurize,
    "sample": cmd_sample,
    "train": cmd_train,
    "tune": cmd_tune,
    "evaluate": cmd_evaluate,
    "characterize": cmd_characterize,
    "repro": cmd_repro,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"prefmodel {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (PrefModelError, OSError) as exc:
        print(f"prefmodel {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
