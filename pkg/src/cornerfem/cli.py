"""Command line interface: ``cornerfem run|predict|reproduce|list``.

The thread count of the BLAS and sparse kernels is taken from the
CORNERFEM_THREADS environment variable when it is set.
"""
from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys
from contextlib import nullcontext
from pathlib import Path

from .study import (
    APPENDIX_IDS,
    TABLE_IDS,
    StudyError,
    bundled_configs,
    emit_table,
    load_config,
    paper_comparison,
    predictions,
    run_study,
    table_configs,
)

THREADS_ENV = "CORNERFEM_THREADS"


def _thread_limit():
    n = os.environ.get(THREADS_ENV)
    if not n:
        return nullcontext()
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:
        logging.getLogger(__name__).warning("threadpoolctl not installed; ignoring %s", THREADS_ENV)
        return nullcontext()
    return threadpool_limits(limits=int(n))


def _resolve(ref: str):
    """A config file path, or the name of a bundled config."""
    if Path(ref).is_file():
        return load_config(ref)
    bundled = bundled_configs()
    if ref in bundled:
        return bundled[ref]
    raise SystemExit(f"error: {ref!r} is neither a config file nor a bundled config name")


def _override(cfg, args):
    changes = {}
    if getattr(args, "levels", None) is not None:
        changes["levels"] = args.levels
    if getattr(args, "format", None):
        changes["format"] = args.format
    return dataclasses.replace(cfg, **changes) if changes else cfg


def _write(text: str, path):
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def _comparison(cfg, table) -> str:
    rows = paper_comparison(cfg, table)
    if not rows:
        return ""
    lines = ["", f"observed vs paper rates ({cfg.name}):", "level  observed  paper"]
    for level, obs, paper in rows:
        o = "degenerate" if obs is None else f"{obs:.2f}"
        lines.append(f"{level:5d}  {o:>8}  {paper:5.2f}")
    return "\n".join(lines) + "\n"


def cmd_run(args) -> int:
    cfg = _override(_resolve(args.config), args)
    with _thread_limit():
        table = run_study(cfg)
    text = emit_table(table, cfg.format)
    _write(text, args.output or cfg.output)
    return 0 if all(v.passed for v in table.verdicts.values()) else 1


def cmd_predict(args) -> int:
    cfg = _resolve(args.config)
    for metric, p in predictions(cfg).items():
        line = f"{cfg.name}: {metric} tau = {p} (active: {p.active}, cap {p.cap:g})"
        if p.caveat:
            line += f"; {p.caveat}"
        print(line)
    return 0


def cmd_reproduce(args) -> int:
    try:
        configs = table_configs(args.table)
    except KeyError as exc:
        raise SystemExit(f"error: {exc.args[0]}; known: {', '.join(TABLE_IDS + APPENDIX_IDS)}")
    out_dir = Path(args.output_dir) if args.output_dir else None
    if out_dir:
        out_dir.mkdir(parents=True, exist_ok=True)
    status = 0
    with _thread_limit():
        for cfg in configs:
            cfg = _override(cfg, args)
            table = run_study(cfg)
            text = emit_table(table, cfg.format) + _comparison(cfg, table)
            ext = "csv" if cfg.format == "csv" else "md"
            _write(text, out_dir / f"{cfg.name}.{ext}" if out_dir else None)
            if not out_dir:
                sys.stdout.write("\n")
            status |= not all(v.passed for v in table.verdicts.values())
    return status


def cmd_list(args) -> int:
    for name, cfg in bundled_configs().items():
        print(f"{cfg.table:15s} {name:24s} {cfg.description}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cornerfem", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log per-level progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one study config and print its convergence table")
    r.add_argument("config", help="config file or bundled config name")
    r.add_argument("--levels", type=int, help="override the finest level L")
    r.add_argument("--format", choices=("csv", "markdown"))
    r.add_argument("-o", "--output", help="write the table here instead of stdout")
    r.set_defaults(func=cmd_run)

    q = sub.add_parser("predict", help="print predicted rates without solving")
    q.add_argument("config")
    q.set_defaults(func=cmd_predict)

    t = sub.add_parser("reproduce", help="run every column of a bundled paper table")
    t.add_argument("table", help=f"one of {', '.join(TABLE_IDS)} (or an app-* appendix table)")
    t.add_argument("--levels", type=int)
    t.add_argument("--format", choices=("csv", "markdown"))
    t.add_argument("--output-dir")
    t.set_defaults(func=cmd_reproduce)

    ls = sub.add_parser("list", help="list bundled configs")
    ls.set_defaults(func=cmd_list)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(asctime)s %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except StudyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
