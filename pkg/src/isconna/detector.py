"""Edge-only streaming detector: burst, occurrence-width and absence-gap scores.

Each record is hashed once; the same columns address all eight count
sketches and both busy-indicator sketches. When the stream's timestamp
advances, one absence sweep runs over every cell and the current burst
counts decay by ``zeta``.

The per-record loop lives in a numba kernel (:func:`_run`) so scoring a
whole stream stays in compiled code. The single-step methods on
:class:`Detector` (``tick``, ``occurrence_update``, ``absence_sweep``,
``process_edge``) drive the same compiled helpers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from numba import njit

from .sketch import CountSketch, FlagSketch, IndexVector, SketchLayout, edge_key, hash_into

DEFAULT_ROWS = 2
DEFAULT_COLS = 3000

# slots of the stacked count-sketch array
B_CUR, B_ACC, OCC_CUR, OCC_ACC, OCC_IDX, ABS_CUR, ABS_ACC, ABS_IDX = range(8)
# slots of the stacked flag array
BI_CUR, BI_LAST = 0, 1


class StreamOrderError(ValueError):
    """A record's timestamp is earlier than the detector clock."""

    def __init__(self, position: int, t: int, clock: int) -> None:
        super().__init__(f"record {position}: timestamp {t} precedes current time {clock}")
        self.position = position
        self.t = t
        self.clock = clock


class EdgeRecord(NamedTuple):
    s: int
    d: int
    t: int


class ComponentScores(NamedTuple):
    burst: float
    occ: float
    abs: float


@dataclass(frozen=True)
class Params:
    """Component weights and the scale factor."""

    alpha: float = 1.0
    beta: float = 0.0
    gamma: float = 0.0
    zeta: float = 0.7

    def __post_init__(self) -> None:
        for name in ("alpha", "beta", "gamma"):
            w = getattr(self, name)
            if not math.isfinite(w) or w < 0:
                raise ValueError(f"{name} must be finite and non-negative, got {w}")
        if not 0.0 <= self.zeta <= 1.0:
            raise ValueError(f"zeta must lie in [0, 1], got {self.zeta}")


@njit(cache=True)
def _gtest(cur, acc, n):
    if cur <= 0.0 or acc <= 0.0 or n <= 1.0:
        return 0.0
    return abs(2.0 * cur * math.log(cur * (n - 1.0) / acc))


@njit(cache=True)
def _weighted(x, w):
    if w == 0.0:
        return 1.0
    return x**w


@njit(cache=True)
def _combine(burst, occ, absn, alpha, beta, gamma):
    return _weighted(burst, alpha) * _weighted(occ, beta) * _weighted(absn, gamma)


def gtest_score(cur: float, acc: float, n: float) -> float:
    """``|2 cur ln(cur (n - 1) / acc)|``, or 0 when there is no history to compare."""
    return float(_gtest(float(cur), float(acc), float(n)))


def combine(scores: ComponentScores, params: Params) -> float:
    """Weighted product of the three components; a zero weight contributes 1."""
    return float(
        _combine(
            float(scores.burst),
            float(scores.occ),
            float(scores.abs),
            params.alpha,
            params.beta,
            params.gamma,
        )
    )


@njit(cache=True)
def _absence_sweep(counts, flags, zeta):
    rows = counts.shape[1]
    cols = counts.shape[2]
    for r in range(rows):
        for c in range(cols):
            if not flags[BI_CUR, r, c]:
                if flags[BI_LAST, r, c]:
                    counts[ABS_ACC, r, c] += counts[ABS_CUR, r, c]
                    counts[ABS_CUR, r, c] *= zeta
                    counts[ABS_IDX, r, c] += 1.0
                counts[ABS_CUR, r, c] += 1.0
            flags[BI_LAST, r, c] = flags[BI_CUR, r, c]
            flags[BI_CUR, r, c] = False


@njit(cache=True)
def _advance(counts, flags, zeta):
    """Absence sweep plus burst decay; returns the new burst-current total."""
    _absence_sweep(counts, flags, zeta)
    total = 0.0
    rows = counts.shape[1]
    cols = counts.shape[2]
    for r in range(rows):
        for c in range(cols):
            counts[B_CUR, r, c] *= zeta
            total += counts[B_CUR, r, c]
    return total


@njit(cache=True)
def _occurrence(counts, flags, idx, zeta):
    for r in range(idx.shape[0]):
        j = idx[r]
        if not flags[BI_CUR, r, j]:
            flags[BI_CUR, r, j] = True
            if not flags[BI_LAST, r, j]:
                counts[OCC_ACC, r, j] += counts[OCC_CUR, r, j]
                counts[OCC_CUR, r, j] *= zeta
                counts[OCC_IDX, r, j] += 1.0
            counts[OCC_CUR, r, j] += 1.0


@njit(cache=True)
def _segment_score(counts, idx, cur_slot, acc_slot, seg_slot):
    best = 0
    for r in range(1, idx.shape[0]):
        if counts[seg_slot, r, idx[r]] < counts[seg_slot, best, idx[best]]:
            best = r
    j = idx[best]
    return _gtest(counts[cur_slot, best, j], counts[acc_slot, best, j], counts[seg_slot, best, j])


@njit(cache=True, nogil=True)
def _run(
    keys,
    ts,
    counts,
    flags,
    clock,
    btotal,
    a,
    b,
    identity,
    zeta,
    alpha,
    beta,
    gamma,
    sweep_every_step,
    out_score,
    out_comp,
    out_stats,
):
    rows = counts.shape[1]
    cols = counts.shape[2]
    idx = np.empty(rows, np.int64)
    want_comp = out_comp.shape[0] > 0
    want_stats = out_stats.shape[0] > 0
    for k in range(keys.shape[0]):
        t = ts[k]
        if clock[0] < t:
            steps = t - clock[0] if sweep_every_step else 1
            for _ in range(steps):
                btotal[0] = _advance(counts, flags, zeta)
            clock[0] = t
        hash_into(keys[k], a, b, cols, identity, idx)

        c_hat = np.inf
        a_hat = np.inf
        for r in range(rows):
            j = idx[r]
            counts[B_CUR, r, j] += 1.0
            counts[B_ACC, r, j] += 1.0
            c_hat = min(c_hat, counts[B_CUR, r, j])
            a_hat = min(a_hat, counts[B_ACC, r, j])
        btotal[0] += rows
        burst = _gtest(c_hat, a_hat, float(t))

        _occurrence(counts, flags, idx, zeta)
        occ = _segment_score(counts, idx, OCC_CUR, OCC_ACC, OCC_IDX)
        absn = _segment_score(counts, idx, ABS_CUR, ABS_ACC, ABS_IDX)

        out_score[k] = _combine(burst, occ, absn, alpha, beta, gamma)
        if want_comp:
            out_comp[k, 0] = burst
            out_comp[k, 1] = occ
            out_comp[k, 2] = absn
        if want_stats:
            out_stats[k, 0] = c_hat
            out_stats[k, 1] = a_hat
            out_stats[k, 2] = btotal[0]


@dataclass
class ScoreBatch:
    """Per-record output of :meth:`Detector.score`.

    ``components`` has columns (burst, occ, abs). ``burst_stats`` has columns
    (c_hat, a_hat, total of the burst-current sketch), the inputs of the
    adjusted statistic.
    """

    scores: np.ndarray
    components: np.ndarray | None = None
    burst_stats: np.ndarray | None = None


_EMPTY2 = np.empty((0, 3), dtype=np.float64)


def check_order(ts: np.ndarray, clock: int) -> None:
    if ts.size == 0:
        return
    if ts[0] < clock:
        raise StreamOrderError(0, int(ts[0]), clock)
    bad = np.flatnonzero(ts[1:] < ts[:-1])
    if bad.size:
        k = int(bad[0]) + 1
        raise StreamOrderError(k, int(ts[k]), int(ts[k - 1]))


class Detector:
    """One edge-only detector instance and its sketch state.

    Parameters
    ----------
    params:
        Component weights and scale factor.
    rows, cols:
        Sketch geometry shared by all ten sketches.
    seed:
        Seed of the row hashers.
    layout:
        Use this layout instead of building one from ``rows``, ``cols`` and
        ``seed`` (e.g. :meth:`SketchLayout.identity_layout`).
    sweep_every_step:
        Run one absence sweep per elapsed timestamp instead of one per
        timestamp change. Off by default.
    """

    def __init__(
        self,
        params: Params | None = None,
        rows: int = DEFAULT_ROWS,
        cols: int = DEFAULT_COLS,
        seed: int = 0,
        *,
        layout: SketchLayout | None = None,
        sweep_every_step: bool = False,
    ) -> None:
        self.params = params if params is not None else Params()
        self.layout = layout if layout is not None else SketchLayout(rows, cols, seed)
        self.sweep_every_step = bool(sweep_every_step)
        shape = (self.layout.rows, self.layout.cols)
        self._counts = np.zeros((8,) + shape, dtype=np.float64)
        self._flags = np.zeros((2,) + shape, dtype=np.bool_)
        self._clock = np.ones(1, dtype=np.int64)
        self._btotal = np.zeros(1, dtype=np.float64)

        def count_view(slot: int) -> CountSketch:
            sk = CountSketch.__new__(CountSketch)
            sk.layout = self.layout
            sk.cells = self._counts[slot]
            return sk

        def flag_view(slot: int) -> FlagSketch:
            sk = FlagSketch.__new__(FlagSketch)
            sk.layout = self.layout
            sk.cells = self._flags[slot]
            return sk

        self.burst_cur = count_view(B_CUR)
        self.burst_acc = count_view(B_ACC)
        self.occ_cur = count_view(OCC_CUR)
        self.occ_acc = count_view(OCC_ACC)
        self.occ_index = count_view(OCC_IDX)
        self.abs_cur = count_view(ABS_CUR)
        self.abs_acc = count_view(ABS_ACC)
        self.abs_index = count_view(ABS_IDX)
        self.busy_cur = flag_view(BI_CUR)
        self.busy_last = flag_view(BI_LAST)

    @property
    def clock(self) -> int:
        return int(self._clock[0])

    @property
    def burst_total(self) -> float:
        """Running sum of every burst-current cell."""
        return float(self._btotal[0])

    def tick(self, t_new: int) -> None:
        if t_new <= self.clock:
            raise StreamOrderError(0, t_new, self.clock)
        steps = t_new - self.clock if self.sweep_every_step else 1
        for _ in range(steps):
            self._btotal[0] = _advance(self._counts, self._flags, self.params.zeta)
        self._clock[0] = t_new

    def absence_sweep(self) -> None:
        """Sweep every cell once without touching the clock or burst counts."""
        _absence_sweep(self._counts, self._flags, self.params.zeta)

    def occurrence_update(self, index: IndexVector) -> None:
        _occurrence(self._counts, self._flags, np.asarray(index, dtype=np.int64), self.params.zeta)

    def _score_keys(
        self,
        keys: np.ndarray,
        ts: np.ndarray,
        *,
        components: bool = False,
        burst_stats: bool = False,
    ) -> ScoreBatch:
        keys = np.ascontiguousarray(keys, dtype=np.uint64)
        ts = np.ascontiguousarray(ts, dtype=np.int64)
        if keys.shape != ts.shape:
            raise ValueError("keys and timestamps differ in length")
        check_order(ts, self.clock)
        n = keys.shape[0]
        scores = np.empty(n, dtype=np.float64)
        comp = np.empty((n, 3), dtype=np.float64) if components else _EMPTY2
        stats = np.empty((n, 3), dtype=np.float64) if burst_stats else _EMPTY2
        p = self.params
        _run(
            keys,
            ts,
            self._counts,
            self._flags,
            self._clock,
            self._btotal,
            self.layout.a,
            self.layout.b,
            self.layout.identity,
            p.zeta,
            p.alpha,
            p.beta,
            p.gamma,
            self.sweep_every_step,
            scores,
            comp,
            stats,
        )
        return ScoreBatch(
            scores,
            comp if components else None,
            stats if burst_stats else None,
        )

    def score(self, src, dst, ts, *, components: bool = False, burst_stats: bool = False) -> ScoreBatch:
        """Score a batch of edge records in stream order."""
        src = _node_ids(src)
        dst = _node_ids(dst)
        return self._score_keys(edge_key(src, dst), ts, components=components, burst_stats=burst_stats)

    def score_nodes(self, nodes, ts, *, components: bool = False, burst_stats: bool = False) -> ScoreBatch:
        """Score a batch of single-node keys (used by the edge-node variant)."""
        return self._score_keys(_node_ids(nodes), ts, components=components, burst_stats=burst_stats)

    def process_edge(self, e: EdgeRecord) -> tuple[float, ComponentScores]:
        out = self.score([e.s], [e.d], [e.t], components=True)
        return float(out.scores[0]), ComponentScores(*map(float, out.components[0]))

    def process_node(self, n: int, t: int) -> tuple[float, ComponentScores]:
        out = self.score_nodes([n], [t], components=True)
        return float(out.scores[0]), ComponentScores(*map(float, out.components[0]))


def _node_ids(x) -> np.ndarray:
    arr = np.asarray(x)
    if arr.size and arr.dtype.kind == "i" and arr.min() < 0:
        raise ValueError("node ids must be non-negative")
    return arr.astype(np.uint64)


def new_detector(params: Params, rows: int = DEFAULT_ROWS, cols: int = DEFAULT_COLS, seed: int = 0) -> Detector:
    return Detector(params, rows, cols, seed)
