"""Command-line interface: ``obliquebart {fit,predict,simulate,bench}``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import bench, serialize
from .data import DataError, RawTable, load_csv, standardize
from .model import FitSpec, fit, predict
from .sampler import ChainDiagnostics, Task
from .synthetic import FUNCTIONS, SyntheticSpec, generate
from .tree import Mode

log = logging.getLogger("obliquebart")


def _names(text: str | None) -> list[str]:
    return [s.strip() for s in text.split(",") if s.strip()] if text else []


def _roles(args) -> dict[str, str]:
    roles = {args.outcome: "outcome"}
    roles.update({c: "categorical" for c in _names(args.categorical)})
    roles.update({c: "ignore" for c in _names(args.ignore)})
    return roles


def _spec_kwargs(args) -> dict:
    kw = {}
    if args.fast:
        kw.update(M=50, burn=500, kept=500)
    for name, attr in (("trees", "M"), ("burn", "burn"), ("iters", "kept")):
        value = getattr(args, name)
        if value is not None:
            kw[attr] = value
    for name in ("alpha", "beta", "nu", "a_theta", "b_theta", "prob_categorical"):
        value = getattr(args, name)
        if value is not None:
            kw[name] = value
    return kw


def _add_schema_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", required=True, help="CSV file with a header row")
    p.add_argument("--outcome", default="y", help="outcome column (default: y)")
    p.add_argument("--categorical", help="comma-separated categorical columns")
    p.add_argument("--ignore", help="comma-separated columns to skip")
    p.add_argument("--task", choices=[t.value for t in Task], default="regression")


def _add_budget_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--trees", type=int, help="number of trees M (default 200)")
    p.add_argument("--burn", type=int, help="burn-in sweeps (default 1000)")
    p.add_argument("--iters", type=int, help="kept sweeps (default 1000)")
    p.add_argument("--fast", action="store_true", help="M=50, 500 burn-in + 500 kept")
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--nu", type=float)
    p.add_argument("--a-theta", dest="a_theta", type=float)
    p.add_argument("--b-theta", dest="b_theta", type=float)
    p.add_argument("--prob-categorical", dest="prob_categorical", type=float)


def write_diagnostics(diags: list[ChainDiagnostics], path: str | Path, start: int = 0) -> None:
    """One row per chain and iteration from `start` on (the kept sweeps)."""
    lines = ["chain," + ",".join(ChainDiagnostics.FIELDS)]
    for k, d in enumerate(diags):
        body = d.to_text(start=start).splitlines()[1:]
        lines.extend(f"{k},{row}" for row in body)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def cmd_fit(args) -> int:
    table = load_csv(args.data, _roles(args))
    data = standardize(table, args.task)
    spec = FitSpec(
        task=Task(args.task), mode=Mode(args.mode), seed=args.seed, chains=args.chains,
        **_spec_kwargs(args),
    )
    samples = fit(data, spec)
    serialize.save_model(samples, args.out)
    diag_path = args.diagnostics or f"{args.out}.diag.csv"
    write_diagnostics(samples.diagnostics, diag_path, start=samples.burn)
    log.info("wrote %s and %s", args.out, diag_path)
    return 0


def cmd_predict(args) -> int:
    samples = serialize.load_model(args.model)
    scaler = samples.standardizer
    if scaler is None:
        raise DataError("model file has no schema line; cannot read raw CSV")
    roles = {c: "continuous" for c in scaler.cont_names}
    roles.update({c: "categorical" for c in scaler.cat_names})
    table = load_csv(args.data, roles, default_role="ignore", require_outcome=False)
    data = scaler.transform(
        RawTable(table.cont_names, table.x_cont, table.cat_names, table.x_cat)
    )
    pred = predict(samples, data)
    header = ["row", "mean", "lo2.5", "hi97.5"]
    cols = [pred.mean, pred.lower, pred.upper]
    if pred.prob is not None:
        header += ["prob", "label"]
    out = [",".join(header)]
    for i in range(data.n):
        cells = [str(i)] + [format(c[i], ".17g") for c in cols]
        if pred.prob is not None:
            cells += [format(pred.prob[i], ".17g"), str(int(pred.label[i]))]
        out.append(",".join(cells))
    text = "\n".join(out) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def cmd_simulate(args) -> int:
    spec = SyntheticSpec(args.fn, args.theta, args.delta, args.n, args.seed)
    table, _ = generate(spec)
    table.to_csv(args.out or sys.stdout)
    return 0


def cmd_bench(args) -> int:
    table = load_csv(args.data, _roles(args))
    modes = _names(args.modes)
    rows = bench.run_bench(
        table, args.task, modes, args.splits, args.fraction, args.seed, args.jobs,
        **_spec_kwargs(args),
    )
    if args.out:
        with open(args.out, "w", newline="", encoding="utf-8") as fh:
            bench.write_rows(rows, fh)
    else:
        bench.write_rows(rows)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="obliquebart", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit a model to a CSV file")
    _add_schema_args(p)
    _add_budget_args(p)
    p.add_argument("--mode", choices=[m.value for m in Mode], default="oblique")
    p.add_argument("--chains", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="model file to write")
    p.add_argument("--diagnostics", help="diagnostics CSV (default: <out>.diag.csv)")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="posterior predictions for a CSV file")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", help="predictions CSV (default: stdout)")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("simulate", help="write a synthetic dataset")
    p.add_argument("--fn", choices=FUNCTIONS, required=True)
    p.add_argument("--theta", type=float, default=0.0, help="rotation angle or amplitude")
    p.add_argument("--delta", type=float, default=4.0)
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="CSV to write (default: stdout)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("bench", help="repeated train/test comparison across modes")
    _add_schema_args(p)
    _add_budget_args(p)
    p.add_argument("--modes", default="oblique,axis", help="e.g. oblique,axis,rotation:5")
    p.add_argument("--splits", type=int, default=20)
    p.add_argument("--fraction", type=float, default=0.75)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", help="results CSV (default: stdout)")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (DataError, ValueError, OSError) as exc:
        print(f"obliquebart: error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # computational failure
        print(f"obliquebart: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
