"""Command-line interface.

Every run writes a JSON manifest next to its main output.  The manifest
holds the fully resolved configuration, so ``rqmcfold replay`` reproduces
the outputs byte for byte.

Exit codes: 0 success, 1 a check failed, 2 usage error, 3 I/O or parse error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

from rqmcfold import __version__
from rqmcfold.analysis import anova_sigmas, check_net, gain_table, star_discrepancy
from rqmcfold.digitspace import (
    PointSetFormatError,
    default_precision,
    format_point_set,
    read_point_set,
)
from rqmcfold.fold import FoldScheme, make_fold_plan
from rqmcfold.netgen import NetSpec, UnsupportedError, generate_net
from rqmcfold.quadrature import (
    ExperimentConfig,
    fit_rate,
    resolve_integrand,
    rmse_experiment,
    rows_to_csv,
)
from rqmcfold.scramble import ScrambleKind, apply_scramble, make_scramble

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3


class UsageError(Exception):
    pass


def manifest_path(out: str | Path) -> Path:
    return Path(str(out) + ".manifest.json")


def write_manifest(command: str, config: dict, outputs: list[str]) -> None:
    manifest = {
        "tool": "rqmcfold",
        "version": __version__,
        "command": command,
        "seed": config.get("seed"),
        "config": config,
        "outputs": outputs,
    }
    manifest_path(outputs[0]).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _write_csv(path: str | Path, rows: list[dict], header: list[str]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=header, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)


def _parse_rho(text: str | None, d: int):
    if text in (None, "auto"):
        return "auto"
    try:
        rho = [int(t) for t in text.split(",")]
    except ValueError:
        raise UsageError(f"--rho must be 'auto' or comma-separated integers, got {text!r}") from None
    if len(rho) != d or any(r < 0 for r in rho):
        raise UsageError(f"--rho needs {d} nonnegative entries, got {text!r}")
    return rho


# -- generate ---------------------------------------------------------------


def run_generate(cfg: dict) -> list[str]:
    b, d, m = cfg["base"], cfg["dim"], cfg["m"]
    try:
        spec = NetSpec(b, d, m, lam=cfg["lam"], relaxed=cfg["lam"] >= b)
        points = generate_net(spec, K=cfg["precision"])
        if cfg["scramble"] != "none":
            points = apply_scramble(make_scramble(cfg["scramble"], b, cfg["precision"], d, cfg["seed"]), points)
        plan = make_fold_plan(cfg["fold"], d, m, rho=cfg["rho"])
    except (ValueError, UnsupportedError) as exc:
        raise UsageError(str(exc)) from None
    points = plan.apply(points)
    Path(cfg["out"]).write_text(format_point_set(points))
    return [cfg["out"]]


def resolve_generate(args) -> dict:
    if args.rho is not None and args.fold != "box":
        raise UsageError("--rho only applies to --fold box")
    if args.scramble != "none":
        try:
            scramble = ScrambleKind.parse(args.scramble).value
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    else:
        scramble = "none"
    return {
        "base": args.base,
        "dim": args.dim,
        "m": args.m,
        "lam": args.lam,
        "precision": args.precision or default_precision(args.base),
        "scramble": scramble,
        "seed": args.seed,
        "fold": args.fold,
        "rho": _parse_rho(args.rho, args.dim) if args.fold == "box" else None,
        "out": args.out,
    }


# -- check ------------------------------------------------------------------


def run_check(cfg: dict) -> tuple[list[str], bool]:
    points = read_point_set(cfg["input"])
    ok = True
    rows = []
    lam, m, q = cfg["lam"], cfg["m"], cfg["q"]
    relaxed = cfg["relaxed"] or lam >= points.base
    try:
        spec = NetSpec(points.base, points.dim, m, q, lam, relaxed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if points.n != spec.n:
        ok = False
        rows.append({"kappa": "", "tau": "", "observed": points.n, "expected": spec.n, "check": "n"})
    else:
        report = check_net(points, spec)
        ok = report.passed
        rows.extend(report.rows())
    outputs = []
    if cfg["report"]:
        _write_csv(cfg["report"], rows, ["kappa", "tau", "observed", "expected", "check"])
        outputs.append(cfg["report"])
    else:
        w = csv.DictWriter(sys.stdout, fieldnames=["kappa", "tau", "observed", "expected", "check"], lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    if cfg["discrepancy"]:
        if points.dim > 2:
            raise UsageError("--discrepancy needs d <= 2")
        print(f"# star_discrepancy={star_discrepancy(points):.17g}", file=sys.stderr)
    if cfg["gains"] is not None:
        _warn_if_scrambled(cfg["input"])
        table = gain_table(points, cfg["gains"])
        gains_out = cfg["gains_out"] or str(cfg["input"]) + ".gains.csv"
        _write_csv(gains_out, table.rows(), ["u", "kappa", "gamma"])
        outputs.append(gains_out)
    return outputs, ok


def _warn_if_scrambled(path) -> None:
    mpath = manifest_path(path)
    if mpath.exists():
        try:
            scramble = json.loads(mpath.read_text())["config"].get("scramble", "none")
        except (ValueError, KeyError):
            return
        if scramble != "none":
            print(
                "warning: gain coefficients are defined for unscrambled points; "
                f"{path} was scrambled ({scramble})",
                file=sys.stderr,
            )


# -- experiment -------------------------------------------------------------


def run_experiment(cfg: dict) -> list[str]:
    conf = ExperimentConfig(**cfg)
    rows = rmse_experiment(conf)
    try:
        fit = fit_rate(rows, conf.window)
    except ValueError:
        fit = None
    text = rows_to_csv(rows, fit, timing=conf.timing)
    if conf.out:
        Path(conf.out).write_text(text)
        return [conf.out]
    sys.stdout.write(text)
    return []


def resolve_experiment(args) -> dict:
    try:
        f = resolve_integrand(args.integrand)
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from None
    try:
        conf = ExperimentConfig(
            integrand=args.integrand, base=args.base, m_min=args.m_min, m_max=args.m_max, lam=args.lam,
            scramble=args.scramble, seed=args.seed, fold=args.fold,
            rho=_parse_rho(args.rho, f.dim) if args.fold == "box" else "auto",
            reps=args.reps, precision=args.precision, window=args.window, timing=args.timing, out=args.out,
        )
        make_fold_plan(conf.fold, f.dim, conf.m_min, rho=conf.rho)
    except (ValueError, UnsupportedError) as exc:
        raise UsageError(str(exc)) from None
    return conf.to_dict()


# -- anova / gains ----------------------------------------------------------


def run_anova(cfg: dict) -> list[str]:
    f = resolve_integrand(cfg["integrand"])
    table = anova_sigmas(f, f.dim, cfg["resolution"], extrapolate=cfg["extrapolate"])
    buf = io.StringIO()
    buf.write(f"# mean={table.mean:.17g} variance={table.variance:.17g}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["u", "sigma2", "index"])
    for row in table.rows():
        w.writerow([row["u"], f"{row['sigma2']:.17g}", f"{row['index']:.17g}"])
    text = buf.getvalue()
    if cfg["out"]:
        Path(cfg["out"]).write_text(text)
        return [cfg["out"]]
    sys.stdout.write(text)
    return []


def run_gains(cfg: dict) -> list[str]:
    _warn_if_scrambled(cfg["input"])
    points = read_point_set(cfg["input"])
    table = gain_table(points, cfg["max_order"])
    if cfg["out"]:
        _write_csv(cfg["out"], table.rows(), ["u", "kappa", "gamma"])
        return [cfg["out"]]
    w = csv.DictWriter(sys.stdout, fieldnames=["u", "kappa", "gamma"], lineterminator="\n")
    w.writeheader()
    w.writerows(table.rows())
    return []


# -- dispatch ---------------------------------------------------------------


def _run(command: str, cfg: dict) -> int:
    if command == "generate":
        outputs, ok = run_generate(cfg), True
    elif command == "check":
        outputs, ok = run_check(cfg)
    elif command == "experiment":
        outputs, ok = run_experiment(cfg), True
    elif command == "anova":
        outputs, ok = run_anova(cfg), True
    elif command == "gains":
        outputs, ok = run_gains(cfg), True
    else:
        raise UsageError(f"unknown command {command!r}")
    if outputs:
        write_manifest(command, cfg, outputs)
    return EXIT_OK if ok else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rqmcfold", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"rqmcfold {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a (scrambled, folded) Faure net")
    g.add_argument("--base", type=int, required=True)
    g.add_argument("--dim", type=int, required=True)
    g.add_argument("--m", type=int, required=True)
    g.add_argument("--lambda", dest="lam", type=int, default=1)
    g.add_argument("--precision", type=int, default=None)
    g.add_argument("--scramble", default="none", help="none, nested_uniform, random_linear, ibinomial or asm")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--fold", default="none", choices=[s.value for s in FoldScheme])
    g.add_argument("--rho", default=None, help="box-fold orders: 'auto' or e.g. 3,2")
    g.add_argument("--out", required=True)

    c = sub.add_parser("check", help="verify a claimed net property")
    c.add_argument("--input", required=True)
    c.add_argument("--m", type=int, required=True)
    c.add_argument("--q", type=int, default=0)
    c.add_argument("--lambda", dest="lam", type=int, default=1)
    c.add_argument("--relaxed", action="store_true")
    c.add_argument("--discrepancy", action="store_true", help="also print the star discrepancy (d <= 2)")
    c.add_argument("--gains", type=int, default=None, metavar="MAX_ORDER", help="also write gain coefficients")
    c.add_argument("--gains-out", default=None)
    c.add_argument("--report", default=None, help="violation CSV (default: stdout)")

    e = sub.add_parser("experiment", help="replicated RMSE study")
    e.add_argument("--integrand", default="sloan_joe_f")
    e.add_argument("--base", type=int, default=2)
    e.add_argument("--m-min", type=int, default=6)
    e.add_argument("--m-max", type=int, default=14)
    e.add_argument("--lambda", dest="lam", type=int, default=1)
    e.add_argument("--scramble", default="random_linear", help="a scramble kind, none, or iid")
    e.add_argument("--seed", type=int, default=20080101)
    e.add_argument("--fold", default="none", choices=[s.value for s in FoldScheme])
    e.add_argument("--rho", default=None)
    e.add_argument("--reps", type=int, default=300)
    e.add_argument("--precision", type=int, default=None)
    e.add_argument("--window", type=int, default=6)
    e.add_argument("--timing", action="store_true", help="record wall time (output no longer reproducible)")
    e.add_argument("--out", default=None)

    a = sub.add_parser("anova", help="numeric ANOVA of a catalog integrand")
    a.add_argument("--integrand", required=True)
    a.add_argument("--resolution", type=int, default=None)
    a.add_argument("--no-extrapolate", dest="extrapolate", action="store_false")
    a.add_argument("--out", default=None)

    gn = sub.add_parser("gains", help="gain coefficients of a point-set file")
    gn.add_argument("--input", required=True)
    gn.add_argument("--max-order", type=int, required=True)
    gn.add_argument("--out", default=None)

    r = sub.add_parser("replay", help="re-run the command recorded in a manifest")
    r.add_argument("manifest")
    r.add_argument("--out", default=None, help="write the main output here instead")
    return p


def _resolve(args) -> dict:
    if args.command == "generate":
        return resolve_generate(args)
    if args.command == "experiment":
        return resolve_experiment(args)
    cfg = {k: v for k, v in vars(args).items() if k != "command"}
    if args.command == "anova":
        try:
            f = resolve_integrand(args.integrand)
        except KeyError as exc:
            raise UsageError(str(exc.args[0])) from None
        cfg["resolution"] = args.resolution or {1: 2**16, 2: 2048, 3: 128}.get(f.dim, 0)
    return cfg


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        if args.command == "replay":
            manifest = json.loads(Path(args.manifest).read_text())
            cfg = manifest["config"]
            if args.out:
                cfg["out"] = args.out
            return _run(manifest["command"], cfg)
        return _run(args.command, _resolve(args))
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PointSetFormatError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
