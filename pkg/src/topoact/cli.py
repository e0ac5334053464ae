"""Command-line entry point: ``topoact <subcommand> ...``.

Exit status is 0 on success, 1 for invalid input (bad flags, unreadable
config, malformed files) and 2 for failures while running (I/O errors,
failed grid cells, gradient checks that do not pass).
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import data as data_mod
from . import experiments as exp
from . import gradcheck
from .activations import ActivationKind, make_state
from .nn import NetworkSpec, train

OUT_DIR_ENV = "TOPOACT_OUT_DIR"

log = logging.getLogger("topoact")


class UsageError(Exception):
    """Bad flags or input files; maps to exit status 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _parse_params(items: Sequence[str]) -> dict[str, float]:
    params = {}
    for item in items:
        key, sep, value = item.partition("=")
        if not sep:
            raise UsageError(f"parameter {item!r} is not of the form name=value")
        try:
            params[key.strip()] = float(value)
        except ValueError:
            raise UsageError(f"parameter {key!r} has non-numeric value {value!r}") from None
    return params


def _default_out_dir() -> Path:
    return Path(os.environ.get(OUT_DIR_ENV, "results"))


def _write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


# -- subcommands -------------------------------------------------------------------


def cmd_generate(args) -> int:
    rng = np.random.default_rng(args.seed)
    try:
        if args.dataset == "circles":
            d = data_mod.gen_circles(args.n, args.noise, args.radius_ratio, rng)
        else:
            d = data_mod.gen_curves_on_torus(args.n, args.major_R, args.minor_r, args.phase, args.noise, rng)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    data_mod.write_csv(d, args.out)
    print(f"wrote {len(d)} points to {args.out}")
    return 0


def _load_dataset(args, rng) -> data_mod.Dataset:
    if args.dataset == "circles":
        d = data_mod.gen_circles(args.n or 1000, args.noise, rng=rng)
    elif args.dataset == "torus":
        d = data_mod.gen_curves_on_torus(args.n or 4000, noise_sigma=args.noise, rng=rng)
    else:
        try:
            d = data_mod.load_wdbc(args.wdbc_path)
        except FileNotFoundError as exc:
            raise UsageError(str(exc)) from None
    if args.standardize:
        d = data_mod.standardize(d)[0]
    return d


def cmd_train(args) -> int:
    kind = ActivationKind.parse(args.activation)
    rng = np.random.default_rng(args.seed)
    d = _load_dataset(args, rng)
    splitted = data_mod.split(d, args.ratio, rng)
    spec = NetworkSpec(d.dim, args.width, args.depth, kind, args.seed)
    _, report = train(spec, splitted, args.epochs, args.lr, args.batch_size, rng, args.clip)
    lines = ["epoch,train_loss,val_loss"]
    for i, (tr, va) in enumerate(zip(report.train_loss, report.val_loss), start=1):
        lines.append(f"{i},{tr!r},{va!r}")
    csv_text = "\n".join(lines) + "\n"
    if args.out:
        _write_text(Path(args.out), csv_text)
    for i, (tr, va) in enumerate(zip(report.train_loss, report.val_loss), start=1):
        print(f"epoch {i:4d}  train {tr:.6f}  val {va:.6f}")
    print(f"final test loss {report.final_val_loss:.6f}  accuracy {report.val_accuracy:.4f}")
    return 0


def cmd_grid(args) -> int:
    if args.config is None:
        cfg = exp.GridConfig.standard()
    else:
        if not Path(args.config).is_file():
            raise UsageError(f"config file not found: {args.config}")
        try:
            cfg = exp.GridConfig.load(args.config)
        except (ValueError, TypeError) as exc:
            raise UsageError(f"invalid config {args.config}: {exc}") from None
    out_dir = Path(args.out_dir) if args.out_dir else _default_out_dir()
    result = exp.run_grid(cfg, args.parallelism)
    aggregates = exp.aggregate(result.records)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_text(out_dir / "records.csv", exp.records_to_csv(result.records))
    _write_text(out_dir / "aggregate.csv", exp.aggregates_to_csv(aggregates))
    table = exp.markdown_table(aggregates) if aggregates else ""
    _write_text(out_dir / "table.md", table)
    exp.write_timings(result.records, out_dir / "timings.csv")
    print(table, end="")
    if result.failures:
        print(f"{len(result.failures)} run(s) failed:", file=sys.stderr)
        for spec, message in result.failures:
            ds, act, depth, width = spec.cell
            print(f"  {ds} {act} depth={depth} width={width} run={spec.run}: {message}", file=sys.stderr)
        return 2
    return 0


def cmd_gradcheck(args) -> int:
    if args.trials < 1 or args.points < 1:
        raise UsageError("--trials and --points must be >= 1")
    results = gradcheck.run_all(args.trials, args.points, args.seed)
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"{status}  {r.name:28s} max rel err {r.max_error:.3e}  (tol {r.tolerance:.0e}, {r.cases} cases)")
    return 0 if all(r.passed for r in results) else 2


def cmd_transform(args) -> int:
    try:
        state = make_state(args.activation, **_parse_params(args.params))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    try:
        d = data_mod.read_csv(args.input)
    except FileNotFoundError:
        raise UsageError(f"input file not found: {args.input}") from None
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    out = data_mod.transform_pointcloud(d, state)
    data_mod.write_csv(out, args.out)
    print(f"wrote {len(out)} transformed points to {args.out}")
    return 0


def cmd_report(args) -> int:
    if not Path(args.records).is_file():
        raise UsageError(f"records file not found: {args.records}")
    try:
        records = exp.read_records_csv(args.records)
    except (ValueError, KeyError) as exc:
        raise UsageError(f"malformed records file: {exc}") from None
    if not records:
        raise UsageError(f"{args.records} contains no records")
    aggregates = exp.aggregate(records)
    if args.format == "csv":
        text = exp.aggregates_to_csv(aggregates)
    else:
        text = exp.markdown_table(aggregates)
    if args.out:
        _write_text(Path(args.out), text)
    print(text, end="")
    return 0


# -- parser -----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="topoact", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log per-run progress")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    kinds = [k.value for k in ActivationKind]

    p = sub.add_parser("generate", help="write a synthetic dataset as CSV")
    p.add_argument("--dataset", required=True, choices=["circles", "torus"])
    p.add_argument("--n", type=_positive_int, default=1000)
    p.add_argument("--noise", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--radius-ratio", type=float, default=0.8)
    p.add_argument("--major-R", dest="major_R", type=float, default=2.0)
    p.add_argument("--minor-r", type=float, default=1.0)
    p.add_argument("--phase", type=float, default=math.pi)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("train", help="train one network and print its losses")
    p.add_argument("--dataset", required=True, choices=["circles", "torus", "wdbc"])
    p.add_argument("--activation", required=True, choices=kinds)
    p.add_argument("--depth", type=_positive_int, default=1)
    p.add_argument("--width", type=_positive_int, default=4)
    p.add_argument("--epochs", type=_positive_int, default=100)
    p.add_argument("--lr", type=float, default=0.05)
    p.add_argument("--batch-size", type=_positive_int, default=32)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--ratio", type=float, default=0.7)
    p.add_argument("--n", type=_positive_int, default=None, help="synthetic sample size")
    p.add_argument("--noise", type=float, default=0.05)
    p.add_argument("--wdbc-path", default=None)
    p.add_argument("--standardize", action="store_true")
    p.add_argument("--clip", type=float, default=None)
    p.add_argument("--out", default=None, help="optional CSV of per-epoch losses")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("grid", help="run an experiment grid and tabulate it")
    p.add_argument("--config", default=None, help="JSON grid config (default: full standard grid)")
    p.add_argument("--parallelism", type=_positive_int, default=1)
    p.add_argument("--out-dir", default=None, help=f"output directory (default ${OUT_DIR_ENV} or ./results)")
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("gradcheck", help="finite-difference check of all analytic gradients")
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--points", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("transform", help="apply an activation to every coordinate of a point cloud")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--activation", required=True, choices=kinds)
    p.add_argument("--params", nargs="*", default=[], metavar="NAME=VALUE")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("report", help="re-aggregate a records CSV")
    p.add_argument("--records", required=True)
    p.add_argument("--format", choices=["markdown", "csv"], default="markdown")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(
            level=logging.INFO if args.verbose else logging.WARNING,
            format="%(levelname)s %(name)s: %(message)s",
        )
        return args.func(args)
    except (UsageError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, FloatingPointError, RuntimeError) as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
