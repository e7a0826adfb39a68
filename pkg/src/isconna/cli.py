"""Command-line interface: ``isconna {score,eval,sweep,synth}``.

Exit codes: 0 success, 2 usage error, 3 data or I/O error.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import ingest
from .detector import DEFAULT_COLS, DEFAULT_ROWS, Detector, Params
from .en import EnDetector
from .evaluation import UndefinedMetricError, auroc, roc_points
from .guarantee import GuaranteeConfig, adjusted_statistic, flag, size_from_eps_delta

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3

DEFAULT_ZETA = 0.7
SWEEP_ZETAS = (0.0, 0.3, 0.5, 0.7)
SWEEP_WEIGHTS = ((0.0, 0.0), (1.0, 0.5), (1.0, 1.0))
SWEEP_HEADER = ("variant", "alpha", "beta", "gamma", "zeta", "r", "c", "auroc")


class DataError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    variant: str = "eo"
    params: Params = Params(1.0, 0.0, 0.0, DEFAULT_ZETA)
    rows: int = DEFAULT_ROWS
    cols: int = DEFAULT_COLS
    seed: int = 0
    guarantee: GuaranteeConfig | None = None
    sweep_every_step: bool = False

    def describe(self) -> str:
        p = self.params
        parts = [
            f"variant={self.variant}",
            f"alpha={p.alpha:g}",
            f"beta={p.beta:g}",
            f"gamma={p.gamma:g}",
            f"zeta={p.zeta:g}",
            f"rows={self.rows}",
            f"cols={self.cols}",
            f"seed={self.seed}",
        ]
        if self.guarantee is not None:
            parts += [f"epsilon={self.guarantee.epsilon:g}", f"delta={self.guarantee.delta:g}"]
        if self.sweep_every_step:
            parts.append("sweep-every-step")
        return " ".join(parts)

    def build(self) -> Detector | EnDetector:
        cls = EnDetector if self.variant == "en" else Detector
        return cls(self.params, self.rows, self.cols, self.seed, sweep_every_step=self.sweep_every_step)


def score_stream(cfg: RunConfig, stream: ingest.StreamSource) -> tuple[np.ndarray, np.ndarray | None]:
    """Scores for every record, plus threshold flags when ``cfg.guarantee`` is set."""
    det = cfg.build()
    want_stats = cfg.guarantee is not None
    batch = det.score(stream.src, stream.dst, stream.ts, burst_stats=want_stats)
    flags = None
    if want_stats:
        st = batch.burst_stats
        g = adjusted_statistic(st[:, 0], st[:, 2], st[:, 1], stream.ts, cfg.guarantee.epsilon)
        flags = flag(g, cfg.guarantee.delta)
    return batch.scores, flags


def _resolve_seed(value: int | None) -> int:
    if value is not None:
        return value
    env = os.environ.get("ISCONNA_SEED")
    if env:
        try:
            return int(env, 0)
        except ValueError:
            raise SystemExit(f"isconna: ISCONNA_SEED is not an integer: {env!r}") from None
    return 0


def _config_from_args(args: argparse.Namespace, parser: argparse.ArgumentParser) -> RunConfig:
    try:
        params = Params(args.alpha, args.beta, args.gamma, args.zeta)
        guarantee = None
        if args.epsilon is not None or args.delta is not None:
            if args.epsilon is None or args.delta is None:
                parser.error("--epsilon and --delta must be given together")
            guarantee = GuaranteeConfig(args.epsilon, args.delta)
        rows, cols = args.rows, args.cols
        if guarantee is not None:
            g_rows, g_cols = size_from_eps_delta(guarantee)
            rows = g_rows if rows is None else rows
            cols = g_cols if cols is None else cols
        rows = DEFAULT_ROWS if rows is None else rows
        cols = DEFAULT_COLS if cols is None else cols
        if rows < 1 or cols < 1:
            parser.error("--rows and --cols must be positive")
    except ValueError as exc:
        parser.error(str(exc))
    return RunConfig(
        args.variant, params, rows, cols, _resolve_seed(args.seed), guarantee, args.sweep_every_step
    )


def _load_stream(path: str, labels_path: str | None = None) -> ingest.StreamSource:
    try:
        stream = ingest.parse_edge_csv(path)
        if labels_path is not None:
            stream.labels = ingest.load_labels(labels_path, len(stream))
    except (OSError, ValueError) as exc:
        raise DataError(str(exc)) from exc
    return stream


def _open_out(path: str | None):
    if path is None or path == "-":
        return sys.stdout
    return open(path, "w", newline="\n")


def cmd_score(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    cfg = _config_from_args(args, parser)
    print(f"config: {cfg.describe()}", file=sys.stderr)
    stream = _load_stream(args.input)
    start = time.perf_counter()
    scores, flags = score_stream(cfg, stream)
    elapsed = time.perf_counter() - start
    try:
        out = _open_out(args.output)
        try:
            out.write(ingest.format_scores(scores, flags))
        finally:
            if out is not sys.stdout:
                out.close()
    except OSError as exc:
        raise DataError(str(exc)) from exc
    rate = len(stream) / elapsed if elapsed > 0 else float("inf")
    print(f"scored {len(stream)} records in {elapsed:.3f} s ({rate:,.0f} records/s)", file=sys.stderr)
    if flags is not None:
        print(f"flagged {int(flags.sum())} records (threshold {cfg.guarantee.threshold:.6f})", file=sys.stderr)
    return EXIT_OK


def cmd_eval(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    try:
        scores = ingest.read_scores(args.scores)
        labels = ingest.load_labels(args.labels, len(scores))
        value = auroc(scores, labels)
    except (OSError, ValueError, UndefinedMetricError) as exc:
        raise DataError(str(exc)) from exc
    print(f"{value:.4f}")
    if args.roc is not None:
        pts = roc_points(scores, labels)
        try:
            with open(args.roc, "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["threshold", "fpr", "tpr"])
                for thr, fpr, tpr in pts.tolist():
                    w.writerow([repr(thr), repr(fpr), repr(tpr)])
        except OSError as exc:
            raise DataError(str(exc)) from exc
    return EXIT_OK


def sweep_grid(rows: int, cols: int, seed: int, variants=("eo", "en")) -> list[RunConfig]:
    grid = []
    for variant, (beta, gamma), zeta in itertools.product(variants, SWEEP_WEIGHTS, SWEEP_ZETAS):
        grid.append(RunConfig(variant, Params(1.0, beta, gamma, zeta), rows, cols, seed))
    return grid


def run_sweep(stream: ingest.StreamSource, grid: list[RunConfig], jobs: int = 1) -> list[tuple]:
    if stream.labels is None:
        raise DataError("sweep needs labels")

    def one(cfg: RunConfig) -> tuple:
        scores, _ = score_stream(cfg, stream)
        p = cfg.params
        return (cfg.variant, p.alpha, p.beta, p.gamma, p.zeta, cfg.rows, cfg.cols, auroc(scores, stream.labels))

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(one, grid))
    else:
        rows = [one(cfg) for cfg in grid]
    return sorted(rows, key=lambda r: r[:7])


def format_sweep(rows: list[tuple]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_HEADER)
    for variant, a, b, g, z, r, c, auc in rows:
        w.writerow([variant, f"{a:g}", f"{b:g}", f"{g:g}", f"{z:g}", r, c, f"{auc:.6f}"])
    return buf.getvalue()


def cmd_sweep(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    seed = _resolve_seed(args.seed)
    variants = ("eo", "en") if args.variant == "both" else (args.variant,)
    print(f"config: sweep variants={','.join(variants)} rows={args.rows} cols={args.cols} seed={seed}", file=sys.stderr)
    stream = _load_stream(args.input, args.labels)
    try:
        rows = run_sweep(stream, sweep_grid(args.rows, args.cols, seed, variants), args.jobs)
    except UndefinedMetricError as exc:
        raise DataError(str(exc)) from exc
    try:
        out = _open_out(args.output)
        try:
            out.write(format_sweep(rows))
        finally:
            if out is not sys.stdout:
                out.close()
    except OSError as exc:
        raise DataError(str(exc)) from exc
    return EXIT_OK


def _parse_injection(text: str) -> ingest.Injection:
    parts = text.split(":")
    if len(parts) not in (4, 5):
        raise argparse.ArgumentTypeError("expected kind:type:start:magnitude[:duration]")
    try:
        dur = int(parts[4]) if len(parts) == 5 else None
        return ingest.Injection(parts[0], int(parts[1]), int(parts[2]), float(parts[3]), dur)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _parse_pattern(text: str) -> tuple[int, int]:
    try:
        w, g = (int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("expected WIDTH,GAP") from None
    return w, g


def cmd_synth(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    seed = _resolve_seed(args.seed)
    try:
        if args.preset == "burst":
            spec = ingest.burst_corpus(seed=seed)
        elif args.preset == "pattern":
            spec = ingest.pattern_corpus(seed=seed)
        elif args.preset == "stationary":
            spec = ingest.stationary_corpus(seed=seed)
        else:
            if args.types is None or args.horizon is None:
                parser.error("--types and --horizon are required without --preset")
            pattern = args.pattern
            if pattern is not None and args.background:
                pattern = (None,) * args.background + (pattern,) * (args.types - args.background)
            spec = ingest.SynthSpec(
                args.types, args.horizon, args.rate, pattern, tuple(args.inject or ()), seed
            )
    except ValueError as exc:
        parser.error(str(exc))
    stream = ingest.generate(spec)
    try:
        ingest.write_edge_csv(args.output, stream)
        if args.labels is not None:
            ingest.write_labels(args.labels, stream.labels)
    except OSError as exc:
        raise DataError(str(exc)) from exc
    n_anom = int(stream.labels.sum())
    print(f"wrote {len(stream)} records ({n_anom} anomalous), seed={seed}", file=sys.stderr)
    return EXIT_OK


def _add_detector_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--variant", choices=("eo", "en"), default="eo")
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=0.0)
    p.add_argument("--gamma", type=float, default=0.0)
    p.add_argument("--zeta", type=float, default=DEFAULT_ZETA)
    p.add_argument("--rows", type=int, default=None, help=f"sketch rows (default {DEFAULT_ROWS})")
    p.add_argument("--cols", type=int, default=None, help=f"sketch columns (default {DEFAULT_COLS})")
    p.add_argument("--seed", type=int, default=None, help="hash seed (default $ISCONNA_SEED or 0)")
    p.add_argument("--epsilon", type=float, default=None, help="enable threshold mode")
    p.add_argument("--delta", type=float, default=None, help="enable threshold mode")
    p.add_argument(
        "--sweep-every-step",
        action="store_true",
        help="run one absence sweep per elapsed timestamp instead of one per change",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="isconna", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("score", help="score an s,d,t edge stream")
    p.add_argument("--input", "-i", required=True)
    p.add_argument("--output", "-o", default=None, help="score file (default stdout)")
    _add_detector_args(p)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("eval", help="AUROC of a score file against labels")
    p.add_argument("--scores", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--roc", default=None, help="write ROC points as CSV")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="AUROC over the zeta x (beta, gamma) parameter grid")
    p.add_argument("--input", "-i", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--output", "-o", default=None)
    p.add_argument("--variant", choices=("eo", "en", "both"), default="both")
    p.add_argument("--rows", type=int, default=DEFAULT_ROWS)
    p.add_argument("--cols", type=int, default=DEFAULT_COLS)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("synth", help="write a labeled synthetic stream")
    p.add_argument("--output", "-o", required=True)
    p.add_argument("--labels", default=None)
    p.add_argument("--preset", choices=("burst", "pattern", "stationary"), default=None)
    p.add_argument("--types", type=int, default=None)
    p.add_argument("--horizon", type=int, default=None)
    p.add_argument("--rate", type=int, default=1)
    p.add_argument("--pattern", type=_parse_pattern, default=None, metavar="WIDTH,GAP")
    p.add_argument("--background", type=int, default=0, help="always-active types (with --pattern)")
    p.add_argument("--inject", type=_parse_injection, action="append", metavar="KIND:TYPE:START:MAG[:DUR]")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, parser)
    except DataError as exc:
        print(f"isconna: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
