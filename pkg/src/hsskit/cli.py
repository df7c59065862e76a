"""Command-line front end: single compression runs with JSON-lines output,
verification campaigns, and benchmark sweeps with CSV output."""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import os
import sys
import time

from . import plots, sketching
from .cluster_tree import build_uniform
from .hss_compress import CompressOptions, MaxSketchReached, compress
from .hss_ops import relative_error, stats
from .matgen import MatrixSpec
from .verify import CampaignConfig, run_campaign

EXIT_MAX_SKETCH = 3

CSV_COLUMNS = ["matrix", "n", "eps_rel", "sketch", "alpha", "seed",
               "sketch_ms", "total_ms", "final_d", "max_rank", "comp_pct",
               "rel_err"]

_thread_limiter = None


def _limit_threads(count: int | None) -> None:
    """Best-effort kernel thread cap; BLAS pools read their environment at
    import time, so without threadpoolctl this only affects subprocesses."""
    global _thread_limiter
    if count is None:
        return
    names = ["OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"]
    for name in names:
        os.environ[name] = str(count)
    try:
        import threadpoolctl
        _thread_limiter = threadpoolctl.threadpool_limits(limits=count)
    except ImportError:
        print("note: threadpoolctl not installed; thread cap applies to "
              "subprocesses only", file=sys.stderr)


def _add_matrix_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--matrix", required=True,
                     choices=["covariance", "qchem", "synthetic", "file"])
    sub.add_argument("--n", type=int, help="matrix dimension (qchem, "
                     "synthetic)")
    sub.add_argument("--k", type=int, help="grid side; n = k^3 (covariance)")
    sub.add_argument("--lam", type=float, default=0.2,
                     help="correlation length (covariance)")
    sub.add_argument("--spacing", type=float, default=0.1,
                     help="grid spacing (qchem)")
    sub.add_argument("--rank", type=int, default=8,
                     help="per-block rank (synthetic)")
    sub.add_argument("--path", help="input file (file)")
    sub.add_argument("--leaf-size", type=int, default=256)


def _add_compress_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--d0", type=int, default=128)
    sub.add_argument("--dd", type=int, default=64,
                     help="sketch growth step")
    sub.add_argument("--d-max", type=int, default=None)
    sub.add_argument("--eps-abs", type=float, default=1e-8)
    sub.add_argument("--alpha", type=int, default=4,
                     help="nonzeros per sketch column (sjlt)")
    sub.add_argument("--construction", choices=[sketching.BLOCK,
                                                sketching.GRAPH],
                     default=sketching.BLOCK)
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--repeats", type=int, default=1)
    sub.add_argument("--recon-cap", type=int, default=4096,
                     help="max n for dense reconstruction of rel_err")
    sub.add_argument("--threads", type=int, default=None)
    sub.add_argument("--out", help="also write rows as CSV to this path")


def _parse_sketch_token(token: str, default_alpha: int):
    token = token.strip()
    if token.startswith("sjlt-"):
        return sketching.SJLT, int(token[len("sjlt-"):])
    if token == sketching.SJLT:
        return token, default_alpha
    if token in sketching.KINDS:
        return token, None
    raise ValueError(f"unknown sketch {token!r}")


def _check_block_divisibility(parser, kind, alpha, construction, d0, dd):
    if kind != sketching.SJLT or construction != sketching.BLOCK:
        return
    if alpha < 1 or (d0 + dd) % alpha or dd % alpha:
        parser.error(
            f"block construction requires alpha | d for every sketch block: "
            f"alpha={alpha} must divide d0+dd={d0 + dd} and dd={dd}")


def _build_matrix(args, parser):
    spec = MatrixSpec(kind=args.matrix, n=args.n, k=args.k, lam=args.lam,
                      spacing=args.spacing, rank=args.rank, seed=args.seed,
                      path=args.path, leaf_size=args.leaf_size)
    try:
        accessor, tree, _ = spec.build()
    except (ValueError, OSError) as exc:
        parser.error(str(exc))
    n = accessor.shape[0]
    if tree is None:
        tree = build_uniform(n, args.leaf_size)
    return accessor, tree


def _run_once(accessor, tree, args, kind, alpha, eps_rel, seed) -> dict:
    opts = CompressOptions(
        d0=args.d0, dd=args.dd, d_max=args.d_max, eps_rel=eps_rel,
        eps_abs=args.eps_abs, leaf_size=args.leaf_size, kind=kind,
        alpha=alpha if kind == sketching.SJLT else None,
        construction=args.construction, seed=seed)
    n = accessor.shape[0]
    record = {
        "matrix": args.matrix, "n": n, "eps_rel": eps_rel,
        "eps_abs": args.eps_abs, "sketch": kind,
        "alpha": alpha if kind == sketching.SJLT else None,
        "construction": args.construction if kind == sketching.SJLT else None,
        "d0": args.d0, "dd": args.dd, "leaf_size": args.leaf_size,
        "seed": seed, "status": "ok", "blocking_nid": None,
        "final_d": None, "max_rank": None, "comp_pct": None,
        "rel_err": None, "adaptation_rounds": None,
        "sketch_ms": None, "total_ms": None,
    }
    start = time.perf_counter()
    try:
        H = compress(accessor, tree, opts)
    except MaxSketchReached as exc:
        record.update(status="max_sketch_reached", blocking_nid=exc.blocking_nid,
                      final_d=exc.d, sketch_ms=exc.sketch_seconds * 1e3,
                      total_ms=(time.perf_counter() - start) * 1e3)
        return record
    total_ms = (time.perf_counter() - start) * 1e3
    st = stats(H)
    rel = relative_error(accessor, H, cap=args.recon_cap) \
        if n <= args.recon_cap else None
    record.update(final_d=st.final_d, max_rank=st.max_rank,
                  comp_pct=st.memory_fraction, rel_err=rel,
                  adaptation_rounds=st.adaptation_rounds,
                  sketch_ms=H.sketch_seconds * 1e3, total_ms=total_ms)
    return record


def _csv_row(record: dict) -> list:
    def cell(value):
        return "" if value is None else value
    return [cell(record[col]) for col in CSV_COLUMNS]


def _write_csv(rows: list[dict], stream) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for record in rows:
        writer.writerow(_csv_row(record))


def cmd_compress(args, parser) -> int:
    _limit_threads(args.threads)
    kind = args.sketch
    alpha = args.alpha if kind == sketching.SJLT else None
    _check_block_divisibility(parser, kind, args.alpha, args.construction,
                              args.d0, args.dd)
    accessor, tree = _build_matrix(args, parser)
    records = []
    for i in range(args.repeats):
        record = _run_once(accessor, tree, args, kind, alpha, args.eps_rel,
                           args.seed + i)
        print(json.dumps(record))
        records.append(record)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            _write_csv(records, fh)
    failed = any(r["status"] != "ok" for r in records)
    return EXIT_MAX_SKETCH if failed else 0


def cmd_verify(args, parser) -> int:
    kinds = tuple(k.strip() for k in args.kind.split(",") if k.strip())
    if not kinds:
        parser.error("empty --kind selection")
    cfg = CampaignConfig(
        suite=args.suite, kinds=kinds, eps=args.eps, delta=args.delta,
        trials=args.trials, seed=args.seed, sjlt_c=args.sjlt_c,
        keep_records=args.records)
    try:
        cfg.validate()
    except ValueError as exc:
        parser.error(str(exc))
    reports = [r.to_dict() for r in run_campaign(cfg)]
    payload = {"config": dataclasses.asdict(cfg), "reports": reports}
    text = json.dumps(payload)
    print(text)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    if args.plot_dir:
        plots.campaign_figures(reports, args.plot_dir)
    return 0


def cmd_sweep(args, parser) -> int:
    _limit_threads(args.threads)
    try:
        eps_values = [float(tok) for tok in args.eps_rel.split(",") if tok]
        sketches = [_parse_sketch_token(tok, args.alpha)
                    for tok in args.sketch.split(",") if tok]
    except ValueError as exc:
        parser.error(str(exc))
    if not eps_values or not sketches:
        parser.error("empty --eps-rel or --sketch grid")
    for kind, alpha in sketches:
        _check_block_divisibility(parser, kind, alpha, args.construction,
                                  args.d0, args.dd)
    accessor, tree = _build_matrix(args, parser)

    if args.warmup:
        kind, alpha = sketches[0]
        _run_once(accessor, tree, args, kind, alpha, eps_values[0], args.seed)

    rows = []
    for eps_rel in eps_values:
        for kind, alpha in sketches:
            for i in range(args.repeats):
                rows.append(_run_once(accessor, tree, args, kind, alpha,
                                      eps_rel, args.seed + i))
    if args.out:
        with open(args.out, "w", newline="") as fh:
            _write_csv(rows, fh)
    else:
        _write_csv(rows, sys.stdout)
    if args.plot_dir:
        plots.sweep_figures(rows, args.plot_dir)
    failed = any(r["status"] != "ok" for r in rows)
    return EXIT_MAX_SKETCH if failed else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hsskit",
        description="Adaptive randomized HSS compression toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p_compress = sub.add_parser(
        "compress", help="compress one matrix, print JSON-lines records")
    _add_matrix_flags(p_compress)
    _add_compress_flags(p_compress)
    p_compress.add_argument("--eps-rel", type=float, default=1e-2)
    p_compress.add_argument("--sketch", choices=list(sketching.KINDS),
                            default=sketching.SJLT)
    p_compress.set_defaults(func=cmd_compress)

    p_verify = sub.add_parser(
        "verify", help="run bound-verification campaigns, print JSON")
    p_verify.add_argument("--suite", default="all",
                          choices=["frobenius", "rangefinder", "all"])
    p_verify.add_argument("--kind", default="gaussian,srht,sjlt",
                          help="comma-separated operator kinds")
    p_verify.add_argument("--eps", type=float, default=0.5)
    p_verify.add_argument("--delta", type=float, default=0.01)
    p_verify.add_argument("--trials", type=int, default=1000)
    p_verify.add_argument("--seed", type=int, default=0)
    p_verify.add_argument("--sjlt-c", type=float, default=20.0,
                          help="constant in the SJLT dimension bound")
    p_verify.add_argument("--records", action="store_true",
                          help="include per-trial records in the JSON")
    p_verify.add_argument("--out", help="also write the JSON to this path")
    p_verify.add_argument("--plot-dir",
                          help="render campaign figures into this directory")
    p_verify.set_defaults(func=cmd_verify)

    p_sweep = sub.add_parser(
        "sweep", help="grid of compression runs, CSV output")
    _add_matrix_flags(p_sweep)
    _add_compress_flags(p_sweep)
    p_sweep.add_argument("--eps-rel", default="1e-2",
                         help="comma-separated relative tolerances")
    p_sweep.add_argument("--sketch", default="sjlt",
                         help="comma-separated kinds; sjlt-<alpha> selects "
                              "the nonzero count per column")
    p_sweep.add_argument("--warmup", action="store_true",
                         help="one untimed run before the grid")
    p_sweep.add_argument("--plot-dir",
                         help="render sweep figures into this directory")
    p_sweep.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if "HSS_SEED" in os.environ and hasattr(args, "seed"):
        try:
            args.seed = int(os.environ["HSS_SEED"])
        except ValueError:
            parser.error("HSS_SEED must be an integer")
    return args.func(args, parser)


if __name__ == "__main__":
    sys.exit(main())
