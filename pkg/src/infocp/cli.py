"""Command-line front end: ``run``, ``simulate`` and ``validate``.

Exit codes: 0 success, 2 invalid input or configuration, 1 internal error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .data import (
    ClassificationScores,
    DataError,
    RegressionScores,
    read_features_csv,
    read_labeled_csv,
    read_matrix_csv,
)
from .harness import (
    ConfigError,
    bundled_config_path,
    bundled_configs,
    config_from_dict,
    default_threads,
    load_config,
    run_experiment,
    stderr_progress,
)
from .informative import SpecError, spec_from_dict
from .metrics import reports_to_csv
from .pvalues import ClassPValues, build_family
from .rational import as_fraction, format_fraction, parse_alpha
from .scores import (
    Curve,
    LinearFunction,
    LocallyWeighted,
    MonotoneSigned,
    QuantileBased,
    TieBreaker,
    fit_gaussian_classifier,
)
from .selection import BhOnNullClass, BhOnQ, KeepAll, run_procedure

EXIT_OK, EXIT_INTERNAL, EXIT_INVALID = 0, 1, 2

PROCEDURE_CHOICES = ("naive", "infosp", "infoscop", "adapt-infosp", "directional", "jc")
REGRESSION_SCORES = ("locally_weighted", "quantile", "monotone")


class CliError(ValueError):
    """Invalid command-line input."""


INVALID = (CliError, ConfigError, DataError, SpecError)


def _read_json(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise CliError(f"{path}: line {exc.lineno}: {exc.msg}") from None
    except OSError as exc:
        raise CliError(f"{path}: {exc.strerror}") from None


def _alpha(text: str):
    try:
        return parse_alpha(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise CliError(f"bad --alpha {text!r}: {exc}") from None


# --- score configuration ------------------------------------------------------------------


def function_from_dict(d: dict, where: str):
    """``{"kind": "affine", "coef": [...], "intercept": c}`` or a first-feature curve."""
    if not isinstance(d, dict):
        raise CliError(f"{where}: expected an object")
    if d.get("kind") == "affine":
        try:
            return LinearFunction(tuple(float(c) for c in d["coef"]), float(d.get("intercept", 0.0)))
        except (KeyError, TypeError, ValueError) as exc:
            raise CliError(f"{where}: bad affine function: {exc}") from None
    try:
        return Curve.from_dict(d)
    except (TypeError, ValueError) as exc:
        raise CliError(f"{where}: {exc}") from None


def _relative(base: Path, p: str) -> Path:
    q = Path(p)
    return q if q.is_absolute() else base.parent / q


def regression_model(cfg: dict, where: str):
    kind = cfg.get("kind")
    get = lambda k: function_from_dict(cfg.get(k), f"{where}.{k}")  # noqa: E731
    if kind == "locally_weighted":
        return LocallyWeighted(get("mu"), get("sigma"))
    if kind == "monotone":
        return MonotoneSigned(get("mu"), get("sigma"))
    if kind == "quantile":
        return QuantileBased(get("q_lo"), get("q_hi"))
    raise CliError(f"{where}: unknown regression score kind {kind!r}")


def load_scored(args, score_path: Path):
    """Read the CSVs and score them according to the score config."""
    cfg = _read_json(score_path)
    kind = cfg.get("kind")
    where = str(score_path)
    if kind in REGRESSION_SCORES:
        cal_x, cal_y = read_labeled_csv(args.calibration, "regression")
        test_x = read_features_csv(args.test)
        if cal_x.shape[1] != test_x.shape[1]:
            raise DataError(f"calibration has {cal_x.shape[1]} features but test has {test_x.shape[1]}")
        model = regression_model(cfg, where)
        try:
            scored = RegressionScores(model, cal_x, cal_y, test_x)
            scored.true_cal_scores()
            model.score(test_x[:1], 0.0)
        except ValueError as exc:
            raise CliError(f"{where}: score model cannot be evaluated on the data: {exc}") from None
        return scored
    cal_x, cal_y = read_labeled_csv(args.calibration, "classification")
    test_x = read_features_csv(args.test)
    if cal_x.shape[1] != test_x.shape[1]:
        raise DataError(f"calibration has {cal_x.shape[1]} features but test has {test_x.shape[1]}")
    try:
        K = int(cfg["K"])
    except (KeyError, TypeError, ValueError):
        raise CliError(f"{where}: classification score config needs an integer 'K'") from None
    if cal_y.max() > K:
        raise DataError(f"calibration labels exceed K={K}")
    if kind == "probability_table":
        try:
            cal_p = read_matrix_csv(_relative(score_path, cfg["calibration"]), K)
            test_p = read_matrix_csv(_relative(score_path, cfg["test"]), K)
        except KeyError as exc:
            raise CliError(f"{where}: probability_table needs {exc.args[0]!r}") from None
        if cal_p.shape[0] != cal_x.shape[0] or test_p.shape[0] != test_x.shape[0]:
            raise DataError("probability tables must have one row per calibration / test example")
        cal_s, test_s = 1.0 - cal_p, 1.0 - test_p
    elif kind == "gaussian_classifier":
        if not args.fit_classifier:
            raise CliError("gaussian_classifier scores need --fit-classifier TRAIN_CSV")
        tr_x, tr_y = read_labeled_csv(args.fit_classifier, "classification")
        try:
            model = fit_gaussian_classifier(tr_x, tr_y, K)
        except ValueError as exc:
            raise DataError(f"{args.fit_classifier}: {exc}") from None
        cal_s, test_s = model.score_matrix(cal_x), model.score_matrix(test_x)
    else:
        raise CliError(f"{where}: unknown score kind {kind!r}")
    tb = TieBreaker(args.seed)
    return ClassificationScores(tb.apply(cal_s, 0), cal_y, tb.apply(test_s, cal_x.shape[0]))


def _initial_selection(args):
    level = None if args.init_level is None else as_fraction(args.init_level)
    if args.init == "bhq":
        return BhOnQ(level)
    if args.init == "nullclass":
        if args.null_class is None:
            raise CliError("--init nullclass needs --null-class")
        return BhOnNullClass(args.null_class, level)
    return KeepAll()


def dump_pvalues(family, path: Path) -> None:
    """Write ``i,y,p`` rows (classification families only)."""
    if not isinstance(family, ClassPValues):
        raise CliError("--dump-pvalues supports classification data only")
    with open(path, "w") as fh:
        fh.write("i,y,p\n")
        for i in range(family.m):
            for y in range(1, family.K + 1):
                fh.write(f"{i},{y},{format_fraction(family.pvalue(i, y))}\n")


# --- subcommands ----------------------------------------------------------------------------


def cmd_run(args) -> int:
    alpha = _alpha(args.alpha)
    scored = load_scored(args, Path(args.score))
    task = "classification" if isinstance(scored, ClassificationScores) else "regression"
    spec = spec_from_dict(_read_json(args.spec)) if args.spec else None
    tag = args.procedure.replace("-", "_")
    if spec is None and tag not in ("directional", "jc"):
        raise CliError("--spec is required for this procedure")
    if spec is not None:
        spec.check(task, scored.K if task == "classification" else None)
    params = {"pvalues": args.pvalues}
    if tag == "infoscop":
        params.update(r=args.split_r, init=_initial_selection(args), seed=None)
    if tag == "adapt_infosp":
        params.update(estimator=args.estimator)
    if tag == "jc" and args.y0 is not None:
        params["y0"] = args.y0
    if tag in ("adapt_infosp", "directional") and task != "classification":
        raise CliError(f"{args.procedure} needs classification data")
    if tag == "jc" and not isinstance(getattr(scored, "model", None), MonotoneSigned):
        raise CliError("jc needs a 'monotone' score config")
    if tag == "directional" and scored.K != 3:
        raise CliError(f"directional needs K=3, data has K={scored.K}")
    if tag == "infoscop" and args.split_r is not None and not 1 <= args.split_r <= scored.n - 1:
        raise CliError(f"--split-r must lie in 1..{scored.n - 1}")
    if args.dump_pvalues:
        dump_pvalues(build_family(scored, args.pvalues), Path(args.dump_pvalues))
    outcome = run_procedure(tag, scored, spec, alpha, **params)
    result = outcome.to_dict()
    text = json.dumps(result, indent=2) + "\n"
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "result.json").write_text(text)
        print(f"selected {outcome.n_selected} of {outcome.m}; wrote {out / 'result.json'}", file=sys.stderr)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _resolve_config_path(name: str):
    p = Path(name)
    if p.exists():
        return p
    return bundled_config_path(name)


def cmd_simulate(args) -> int:
    if args.list:
        print("\n".join(bundled_configs()))
        return EXIT_OK
    if not args.config:
        raise CliError("simulate needs a config path or bundled config name")
    cfg = load_config(_resolve_config_path(args.config))
    if args.seed is not None or args.alpha is not None or args.replications is not None:
        d = cfg.to_dict()
        if args.seed is not None:
            d["master_seed"] = args.seed
        if args.alpha is not None:
            d["alpha"] = format_fraction(_alpha(args.alpha))
        if args.replications is not None:
            d["replications"] = args.replications
        cfg = config_from_dict(d)
    if args.dry_run:
        print(f"config {cfg.name!r} is valid: {len(cfg.scenarios)} scenarios, "
              f"{len(cfg.procedures)} procedures, B={cfg.replications}", file=sys.stderr)
        return EXIT_OK
    if not args.out:
        raise CliError("simulate needs --out DIR")
    threads = default_threads() if args.threads is None else args.threads
    if threads < 1:
        raise CliError("--threads must be positive")
    reports = run_experiment(cfg, threads=threads, progress=None if args.quiet else stderr_progress)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / f"{cfg.name}.csv").write_text(reports_to_csv(reports))
    (out / f"{cfg.name}.config.json").write_text(json.dumps(cfg.to_dict(), indent=2) + "\n")
    if not args.quiet:
        print(f"wrote {out / (cfg.name + '.csv')}", file=sys.stderr)
    return EXIT_OK


def cmd_validate(args) -> int:
    d = _read_json(args.file)
    kind = args.kind
    if kind == "auto":
        if isinstance(d, dict) and "schema_version" in d:
            kind = "config"
        elif isinstance(d, dict) and d.get("kind") in REGRESSION_SCORES + ("probability_table", "gaussian_classifier"):
            kind = "score"
        else:
            kind = "spec"
    if kind == "config":
        cfg = config_from_dict(d)
        msg = f"config {cfg.name!r}: {len(cfg.scenarios)} scenarios, {len(cfg.procedures)} procedures"
    elif kind == "spec":
        spec = spec_from_dict(d)
        msg = f"spec {spec.to_dict()}"
    else:
        if d.get("kind") in REGRESSION_SCORES:
            regression_model(d, str(args.file))
        elif d.get("kind") not in ("probability_table", "gaussian_classifier"):
            raise CliError(f"{args.file}: unknown score kind {d.get('kind')!r}")
        msg = f"score config {d.get('kind')}"
    print(f"ok: {msg}")
    return EXIT_OK


# --- parser -------------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="infocp", description="Informative selective conformal prediction.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="apply a selection procedure to CSV data")
    r.add_argument("--calibration", required=True, help="calibration CSV with columns f1..fd,label")
    r.add_argument("--test", required=True, help="test CSV with columns f1..fd")
    r.add_argument("--score", required=True, help="score model JSON")
    r.add_argument("--spec", help="informative collection JSON")
    r.add_argument("--procedure", choices=PROCEDURE_CHOICES, default="infosp")
    r.add_argument("--alpha", default="1/10", help="target level as p/q or decimal")
    r.add_argument("--seed", type=int, default=0, help="tie-breaking seed")
    r.add_argument("--pvalues", choices=("full", "class"), default="full")
    r.add_argument("--split-r", type=int, help="InfoSCOP split size (default n/2)")
    r.add_argument("--init", choices=("bhq", "nullclass", "keepall"), default="bhq")
    r.add_argument("--init-level", help="initial-selection BH level (default 2*alpha for bhq)")
    r.add_argument("--null-class", type=int, help="null class for --init nullclass")
    r.add_argument("--estimator", choices=("calibration", "storey"), default="calibration")
    r.add_argument("--y0", type=float, help="threshold for the one-sided jc procedure")
    r.add_argument("--fit-classifier", metavar="TRAIN_CSV", help="fit the Gaussian classifier on this CSV")
    r.add_argument("--dump-pvalues", metavar="CSV", help="write the p-value family as i,y,p")
    r.add_argument("--out", help="output directory (default: print JSON)")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("simulate", help="run a Monte-Carlo experiment config")
    s.add_argument("config", nargs="?", help="config path or bundled config name")
    s.add_argument("--out", help="output directory")
    s.add_argument("--threads", type=int, help="worker processes (default: logical cores)")
    s.add_argument("--seed", type=int, help="override the master seed")
    s.add_argument("--alpha", help="override alpha")
    s.add_argument("--replications", type=int, help="override the replication count")
    s.add_argument("--dry-run", action="store_true", help="validate only")
    s.add_argument("--list", action="store_true", help="list bundled configs")
    s.add_argument("--quiet", action="store_true")
    s.set_defaults(func=cmd_simulate)

    v = sub.add_parser("validate", help="validate a config, spec or score JSON file")
    v.add_argument("file")
    v.add_argument("--kind", choices=("auto", "config", "spec", "score"), default="auto")
    v.set_defaults(func=cmd_validate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    try:
        return args.func(args)
    except INVALID as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
