"""Edge-stream input/output and labeled synthetic streams.

The canonical input is an integer CSV with one ``s,d,t`` record per line.
Timestamps are shifted so the earliest one becomes 1. Label files hold one
``0`` or ``1`` per line; score files one decimal per line.
"""

from __future__ import annotations

import math
import os
import warnings
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .detector import EdgeRecord


class StreamFormatError(ValueError):
    """Malformed input file; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None, path: str | None = None) -> None:
        where = ""
        if path is not None:
            where += f"{path}"
        if line is not None:
            where += f":{line}" if where else f"line {line}"
        super().__init__(f"{where}: {message}" if where else message)
        self.line = line
        self.path = path


@dataclass
class StreamSource:
    src: np.ndarray
    dst: np.ndarray
    ts: np.ndarray
    labels: np.ndarray | None = None

    def __post_init__(self) -> None:
        self.src = np.asarray(self.src, dtype=np.int64)
        self.dst = np.asarray(self.dst, dtype=np.int64)
        self.ts = np.asarray(self.ts, dtype=np.int64)
        if not self.src.shape == self.dst.shape == self.ts.shape:
            raise ValueError("src, dst and ts must have equal length")
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.int8)
            if self.labels.shape != self.ts.shape:
                raise ValueError("labels do not match the record count")

    def __len__(self) -> int:
        return int(self.ts.shape[0])

    def records(self) -> Iterator[EdgeRecord]:
        for s, d, t in zip(self.src.tolist(), self.dst.tolist(), self.ts.tolist()):
            yield EdgeRecord(s, d, t)


def _locate_bad_line(path: str, ncols: int, allow_negative: bool = False) -> tuple[int, str]:
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line:
                return lineno, "empty line"
            parts = line.split(",")
            if len(parts) != ncols:
                return lineno, f"expected {ncols} comma-separated fields, got {len(parts)}"
            for p in parts:
                try:
                    v = int(p)
                except ValueError:
                    return lineno, f"not an integer: {p.strip()!r}"
                if v < 0 and not allow_negative:
                    return lineno, f"negative value: {v}"
    return 0, "unreadable input"


def parse_edge_csv(path: str | os.PathLike) -> StreamSource:
    """Read ``s,d,t`` lines and shift timestamps to start at 1."""
    path = os.fspath(path)
    if os.path.getsize(path) == 0:
        return StreamSource(np.empty(0), np.empty(0), np.empty(0))
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            data = np.loadtxt(path, delimiter=",", dtype=np.int64, ndmin=2)
    except ValueError:
        line, msg = _locate_bad_line(path, 3)
        raise StreamFormatError(msg, line or None, path) from None
    if data.shape[0] == 0:
        return StreamSource(np.empty(0), np.empty(0), np.empty(0))
    if data.shape[1] != 3:
        raise StreamFormatError(f"expected 3 comma-separated fields, got {data.shape[1]}", 1, path)
    if (data < 0).any():
        row = int(np.flatnonzero((data < 0).any(axis=1))[0])
        raise StreamFormatError("negative value", row + 1, path)
    ts = data[:, 2] - (data[:, 2].min() - 1)
    bad = np.flatnonzero(ts[1:] < ts[:-1])
    if bad.size:
        raise StreamFormatError("timestamp decreases", int(bad[0]) + 2, path)
    return StreamSource(data[:, 0].copy(), data[:, 1].copy(), ts)


def write_edge_csv(path: str | os.PathLike, stream: StreamSource) -> None:
    arr = np.column_stack([stream.src, stream.dst, stream.ts])
    with open(path, "w", newline="\n") as fh:
        if arr.size:
            np.savetxt(fh, arr, fmt="%d", delimiter=",")


def load_labels(path: str | os.PathLike, n: int | None = None) -> np.ndarray:
    path = os.fspath(path)
    out = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            tok = raw.strip()
            if tok not in ("0", "1"):
                raise StreamFormatError(f"label must be 0 or 1, got {tok!r}", lineno, path)
            out.append(tok == "1")
    labels = np.asarray(out, dtype=np.int8)
    if n is not None and labels.size != n:
        raise StreamFormatError(f"{labels.size} labels for {n} records", path=path)
    return labels


def write_labels(path: str | os.PathLike, labels: np.ndarray) -> None:
    with open(path, "w", newline="\n") as fh:
        if len(labels):
            fh.write("\n".join("1" if x else "0" for x in np.asarray(labels).tolist()))
            fh.write("\n")


def format_scores(scores: np.ndarray, flags: np.ndarray | None = None) -> str:
    """One ``repr`` decimal per line (shortest round-trip, locale-free)."""
    vals = map(repr, np.asarray(scores, dtype=np.float64).tolist())
    if flags is None:
        lines = vals
    else:
        lines = (f"{v},{int(f)}" for v, f in zip(vals, np.asarray(flags).tolist()))
    text = "\n".join(lines)
    return text + "\n" if text else ""


def write_scores(path: str | os.PathLike, scores: np.ndarray, flags: np.ndarray | None = None) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(format_scores(scores, flags))


def read_scores(path: str | os.PathLike) -> np.ndarray:
    """Read a score file; a trailing flag column, if present, is ignored."""
    path = os.fspath(path)
    out = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            tok = raw.strip().split(",")[0]
            try:
                v = float(tok)
            except ValueError:
                raise StreamFormatError(f"not a number: {tok!r}", lineno, path) from None
            if not math.isfinite(v):
                raise StreamFormatError(f"non-finite score: {tok!r}", lineno, path)
            out.append(v)
    return np.asarray(out, dtype=np.float64)


# --- synthetic streams -------------------------------------------------------

INJECTION_KINDS = ("burst", "width_change", "gap_change")


@dataclass(frozen=True)
class Injection:
    """An anomaly planted in one edge type from timestamp ``start``.

    ``burst`` multiplies the type's per-timestamp count by ``magnitude`` for
    ``duration`` timestamps (default 1); the extra records are anomalous.
    ``width_change`` / ``gap_change`` multiply the on-run / off-run length of
    every run that starts inside ``[start, start + duration)`` (default: to
    the horizon). Records of a widened on-run, and of the on-run right after
    a changed gap, are anomalous.
    """

    kind: str
    type_id: int
    start: int
    magnitude: float
    duration: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in INJECTION_KINDS:
            raise ValueError(f"unknown injection kind {self.kind!r}")
        if self.magnitude <= 0:
            raise ValueError("magnitude must be positive")
        if self.duration is not None and self.duration < 1:
            raise ValueError("duration must be at least 1")

    def window(self, horizon: int) -> tuple[int, int]:
        """Half-open timestamp range covered."""
        if self.duration is None:
            end = self.start + 1 if self.kind == "burst" else horizon + 1
        else:
            end = self.start + self.duration
        return self.start, min(end, horizon + 1)


@dataclass(frozen=True)
class SynthSpec:
    """Recipe for a labeled synthetic stream.

    ``pattern`` is ``None`` (every type active at every timestamp), one
    ``(on_width, off_gap)`` pair shared by all types, or one entry per type
    where an entry of ``None`` keeps that type always active.
    Each type starts at a random phase of its cycle; with ``start_active``
    (the default) the phase falls inside the first on-run, so every type is
    already active at timestamp 1.
    """

    n_edge_types: int
    horizon: int
    base_rate: int = 1
    pattern: tuple[int, int] | Sequence[tuple[int, int]] | None = None
    injections: tuple[Injection, ...] = ()
    seed: int = 0
    n_nodes: int | None = None
    start_active: bool = True
    patterns: tuple[tuple[int, int], ...] | None = field(init=False, default=None, repr=False)

    def __post_init__(self) -> None:
        if self.n_edge_types < 1 or self.horizon < 1 or self.base_rate < 1:
            raise ValueError("n_edge_types, horizon and base_rate must be positive")
        pats = None
        if self.pattern is not None:
            pat = tuple(self.pattern)
            if len(pat) == 2 and all(isinstance(x, (int, np.integer)) for x in pat):
                pats = (tuple(int(x) for x in pat),) * self.n_edge_types
            else:
                pats = tuple(None if p is None else (int(p[0]), int(p[1])) for p in pat)
                if len(pats) != self.n_edge_types:
                    raise ValueError("need one (on_width, off_gap) pair per edge type")
            if any(p is not None and (p[0] < 1 or p[1] < 1) for p in pats):
                raise ValueError("widths and gaps must be at least 1")
        object.__setattr__(self, "patterns", pats)
        object.__setattr__(self, "injections", tuple(self.injections))
        for inj in self.injections:
            if not 0 <= inj.type_id < self.n_edge_types:
                raise ValueError(f"injection targets unknown type {inj.type_id}")
            if not 1 <= inj.start <= self.horizon:
                raise ValueError(f"injection start {inj.start} outside the horizon")
        nodes = self.n_nodes if self.n_nodes is not None else _default_nodes(self.n_edge_types)
        if nodes * nodes < self.n_edge_types:
            raise ValueError("too few nodes for the requested number of edge types")


def _default_nodes(n_types: int) -> int:
    return max(8, 2 * math.ceil(math.sqrt(n_types)))


def _activity(
    width: int,
    gap: int,
    phase: int,
    horizon: int,
    width_mult: np.ndarray,
    gap_mult: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """On/off schedule over timestamps 1..horizon (index 0 unused).

    Returns ``(active, altered)``; ``altered`` marks on-runs whose own width
    was changed or whose preceding gap was changed.
    """
    active = np.zeros(horizon + 1, dtype=bool)
    altered = np.zeros(horizon + 1, dtype=bool)
    t = 1 - phase
    gap_changed = False
    while t <= horizon:
        wm = width_mult[max(t, 1)]
        w = max(1, round(width * wm))
        lo, hi = max(t, 1), max(t + w, 1)
        active[lo:hi] = True
        if wm != 1.0 or gap_changed:
            altered[lo:hi] = True
        t += w
        if t > horizon:
            break
        gap_changed = gap_mult[t] != 1.0
        t += max(1, round(gap * gap_mult[t]))
    active[0] = altered[0] = False
    return active, altered


def generate(spec: SynthSpec) -> StreamSource:
    """Build the stream; deterministic for a fixed ``spec.seed``."""
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    n_types, horizon = spec.n_edge_types, spec.horizon
    n_nodes = spec.n_nodes if spec.n_nodes is not None else _default_nodes(n_types)
    pair = rng.choice(n_nodes * n_nodes, size=n_types, replace=False)
    type_src = pair // n_nodes
    type_dst = pair % n_nodes

    # per-(timestamp, type) normal and anomalous record counts; row 0 unused
    normal = np.zeros((horizon + 1, n_types), dtype=np.int64)
    anomalous = np.zeros_like(normal)

    by_type: dict[int, list[Injection]] = {}
    for inj in spec.injections:
        by_type.setdefault(inj.type_id, []).append(inj)

    pats = spec.patterns if spec.patterns is not None else (None,) * n_types
    cycle = [(1, 1) if p is None else (p[0], p[0] + p[1]) for p in pats]
    phases = rng.integers(0, [c[0] if spec.start_active else c[1] for c in cycle])
    for k in range(n_types):
        injs = by_type.get(k, [])
        if pats[k] is None:
            active = np.ones(horizon + 1, dtype=bool)
            active[0] = False
            altered = np.zeros_like(active)
        else:
            wm = np.ones(horizon + 1)
            gm = np.ones(horizon + 1)
            for inj in injs:
                lo, hi = inj.window(horizon)
                if inj.kind == "width_change":
                    wm[lo:hi] *= inj.magnitude
                elif inj.kind == "gap_change":
                    gm[lo:hi] *= inj.magnitude
            w, g = pats[k]
            active, altered = _activity(w, g, int(phases[k]), horizon, wm, gm)
        normal[:, k] = np.where(active, spec.base_rate, 0)
        for inj in injs:
            lo, hi = inj.window(horizon)
            if inj.kind == "burst":
                total = round(spec.base_rate * inj.magnitude)
                extra = np.maximum(total - normal[lo:hi, k], 0)
                anomalous[lo:hi, k] += extra
        moved = altered & (normal[:, k] > 0)
        anomalous[moved, k] += normal[moved, k]
        normal[moved, k] = 0

    counts = (normal + anomalous)[1:].ravel()
    n_normal = normal[1:].ravel()
    cell = np.repeat(np.arange(counts.size), counts)
    first = np.repeat(np.cumsum(counts) - counts, counts)
    offset = np.arange(cell.size) - first
    labels = (offset >= n_normal[cell]).astype(np.int8)
    type_of = cell % n_types
    ts = cell // n_types + 1
    return StreamSource(type_src[type_of], type_dst[type_of], ts, labels)


def burst_corpus(
    n_edge_types: int = 40,
    horizon: int = 60,
    base_rate: int = 10,
    magnitude: float = 100.0,
    n_bursts: int = 4,
    seed: int = 0,
) -> SynthSpec:
    """Steady traffic with a few types surging ``magnitude``-fold and staying high."""
    rng = np.random.Generator(np.random.PCG64(seed + 1))
    types = rng.choice(n_edge_types, size=n_bursts, replace=False)
    starts = rng.integers(horizon // 3, horizon - 5, size=n_bursts)
    injs = tuple(
        Injection("burst", int(k), int(s), magnitude, duration=5) for k, s in zip(types, starts)
    )
    return SynthSpec(n_edge_types, horizon, base_rate, None, injs, seed)


def pattern_corpus(
    n_edge_types: int = 40,
    horizon: int = 600,
    base_rate: int = 3,
    width: int = 5,
    gap: int = 5,
    n_changes: int = 4,
    change_span: int | None = None,
    n_background: int = 5,
    seed: int = 0,
) -> SynthSpec:
    """Periodic types, a few of which double both width and gap mid-stream.

    The change lasts ``change_span`` timestamps, or to the end when ``None``.
    The first ``n_background`` types are always active, so every timestamp
    carries traffic.
    """
    rng = np.random.Generator(np.random.PCG64(seed + 1))
    types = n_background + rng.choice(n_edge_types - n_background, size=n_changes, replace=False)
    last = horizon - (change_span or horizon // 4)
    starts = rng.integers(horizon // 2, last, size=n_changes)
    injs = []
    for k, s in zip(types, starts):
        injs.append(Injection("width_change", int(k), int(s), 2.0, duration=change_span))
        injs.append(Injection("gap_change", int(k), int(s), 2.0, duration=change_span))
    pattern = (None,) * n_background + ((width, gap),) * (n_edge_types - n_background)
    return SynthSpec(n_edge_types, horizon, base_rate, pattern, tuple(injs), seed)


def stationary_corpus(
    n_edge_types: int = 100, horizon: int = 200, base_rate: int = 5, seed: int = 0
) -> SynthSpec:
    return SynthSpec(n_edge_types, horizon, base_rate, None, (), seed)
