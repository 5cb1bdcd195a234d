"""``wavesplit`` command line.

Exit codes: 0 success, 2 configuration/input error, 3 numeric guard tripped
(strip violation, singular block, overflow, non-convergence).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .config import GridSpec, RunConfig, load_medium, parse_complex
from .errors import NumericGuardError, WavesplitError
from .fields import read_grid, write_grid, write_grid_csv
from .pipeline import (
    SPLIT_COLUMNS,
    _csv_text,
    analyze_strip,
    propagate_field,
    run_pipeline,
    run_validate_isotropic,
    split_rows,
    symbol_dump_text,
)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
log = logging.getLogger("wavesplit")


def _out_path(args, default: str) -> Path:
    p = Path(args.out) if args.out else Path(default)
    if p.suffix == "" and not p.name.endswith(".dump"):
        p.mkdir(parents=True, exist_ok=True)
        p = p / default
    else:
        p.parent.mkdir(parents=True, exist_ok=True)
    return p


def _s_list(values):
    return [parse_complex(v) for v in values]


def cmd_analyze_strip(args):
    m = load_medium(args.medium)
    rep = analyze_strip(m, args.sr, args.samples, args.seed)
    out = _out_path(args, "strip_report.json")
    out.write_text(json.dumps(rep, indent=2, sort_keys=True))
    print(f"tau={rep['tau']:.6g} Ce={rep['Ce']:.6g} C0={rep['C0']:.6g} -> {out}")


def cmd_symbol_dump(args):
    m = load_medium(args.medium)
    grid = GridSpec.parse(args.xi)
    lams = _s_list(args.lam)
    out = _out_path(args, "symbols.csv")
    out.write_text(symbol_dump_text(m, grid, parse_complex(args.s), lams))
    print(f"wrote {out}")


def cmd_split(args):
    m = load_medium(args.medium)
    grid = GridSpec.parse(args.xi)
    rows, _ = split_rows(m, grid, parse_complex(args.s), args.method, args.norm, args.sr)
    out = _out_path(args, "split.csv")
    out.write_text(_csv_text(SPLIT_COLUMNS, rows))
    print(f"{len(rows)} rows -> {out}")


def cmd_propagate(args):
    m = load_medium(args.medium)
    F = read_grid(args.field)
    Fo, _, info = propagate_field(F, m, args.depth, None, args.allow_growing, args.norm, args.method)
    out = _out_path(args, "field_out.dump")
    write_grid(out, Fo)
    if args.csv:
        write_grid_csv(args.csv, Fo)
    print(json.dumps(info))


def cmd_validate_isotropic(args):
    m = load_medium(args.medium)
    grid = GridSpec.parse(args.xi)
    rep = run_validate_isotropic(m, grid, _s_list(args.s), args.sr)
    out = _out_path(args, "isotropic_report.json")
    out.write_text(json.dumps(rep, indent=2, sort_keys=True))
    print(f"max relative error {rep['max_rel_error']} -> {out}")


def cmd_run(args):
    cfg = RunConfig.load(args.config)
    summary = run_pipeline(cfg, args.out, args.threads)
    for stage, status in summary.items():
        print(f"{stage}: {status}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", type=int, default=1, help="worker threads for per-s work")
    common.add_argument("--seed", type=int, default=0, help="seed for sampled estimators")
    common.add_argument("--out", default=None, help="output file or directory")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="wavesplit", description=__doc__.splitlines()[0], parents=[common])
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze-strip", parents=[common], help="strip and ellipticity constants")
    a.add_argument("--medium", required=True)
    a.add_argument("--sr", type=float, required=True, help="floor S_R on Re s")
    a.add_argument("--samples", type=int, default=4096)
    a.set_defaults(func=cmd_analyze_strip)

    d = sub.add_parser("symbol-dump", parents=[common], help="principal symbol over a wave-vector grid")
    d.add_argument("--medium", required=True)
    d.add_argument("--xi", required=True, help="grid spec nx1,nx2,L1,L2")
    d.add_argument("--s", required=True)
    d.add_argument("--lam", nargs="+", default=["0"])
    d.set_defaults(func=cmd_symbol_dump)

    s = sub.add_parser("split", parents=[common], help="splitting symbol per mode")
    s.add_argument("--medium", required=True)
    s.add_argument("--xi", required=True, help="grid spec nx1,nx2,L1,L2")
    s.add_argument("--s", required=True)
    s.add_argument("--sr", type=float, default=None)
    s.add_argument("--method", choices=("sign", "residue"), default="sign")
    s.add_argument("--norm", choices=("identity", "impedance"), default="identity")
    s.set_defaults(func=cmd_split)

    g = sub.add_parser("propagate", parents=[common], help="one-way propagation of a field dump")
    g.add_argument("--medium", required=True)
    g.add_argument("--field", required=True)
    g.add_argument("--depth", type=float, required=True)
    g.add_argument("--allow-growing", action="store_true", help="also carry the growing family")
    g.add_argument("--method", choices=("sign", "residue"), default="sign")
    g.add_argument("--norm", choices=("identity", "impedance"), default="identity")
    g.add_argument("--csv", default=None, help="optional CSV export of the result")
    g.set_defaults(func=cmd_propagate)

    v = sub.add_parser("validate-isotropic", parents=[common], help="compare with isotropic closed forms")
    v.add_argument("--medium", required=True)
    v.add_argument("--xi", required=True, help="grid spec nx1,nx2,L1,L2")
    v.add_argument("--s", nargs="+", required=True)
    v.add_argument("--sr", type=float, default=None)
    v.set_defaults(func=cmd_validate_isotropic)

    r = sub.add_parser("run", parents=[common], help="run a configured pipeline with caching")
    r.add_argument("--config", required=True)
    r.set_defaults(func=cmd_run)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        args.func(args)
    except NumericGuardError as exc:
        print(f"numeric guard: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (WavesplitError, OSError, ValueError) as exc:
        stage = getattr(exc, "stage", None)
        print(f"error{f' in stage {stage}' if stage else ''}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
