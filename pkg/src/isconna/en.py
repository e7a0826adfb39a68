"""Edge-node variant: one detector per edge, source node and destination node.

The three sub-detectors see the same timestamps and share geometry, seed
and weights. Their component triples are merged by element-wise maximum
before the weighted product is taken.
"""

from __future__ import annotations

import numpy as np

from .detector import (
    DEFAULT_COLS,
    DEFAULT_ROWS,
    ComponentScores,
    Detector,
    EdgeRecord,
    Params,
    ScoreBatch,
    combine,
)
from .sketch import SketchLayout


class EnDetector:
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
        layout = layout if layout is not None else SketchLayout(rows, cols, seed)
        kw = dict(layout=layout, sweep_every_step=sweep_every_step)
        self.edge_instance = Detector(self.params, **kw)
        self.src_instance = Detector(self.params, **kw)
        self.dst_instance = Detector(self.params, **kw)

    @property
    def layout(self) -> SketchLayout:
        return self.edge_instance.layout

    @property
    def clock(self) -> int:
        return self.edge_instance.clock

    def score(
        self,
        src,
        dst,
        ts,
        *,
        components: bool = False,
        burst_stats: bool = False,
        sub_components: bool = False,
    ) -> ScoreBatch | tuple[ScoreBatch, tuple[np.ndarray, np.ndarray, np.ndarray]]:
        """Score a batch; ``burst_stats`` come from the edge instance.

        With ``sub_components`` the three per-instance component arrays are
        returned alongside the merged batch.
        """
        ts = np.asarray(ts, dtype=np.int64)
        edge = self.edge_instance.score(src, dst, ts, components=True, burst_stats=burst_stats)
        s = self.src_instance.score_nodes(src, ts, components=True)
        d = self.dst_instance.score_nodes(dst, ts, components=True)
        merged = np.maximum(np.maximum(edge.components, s.components), d.components)
        p = self.params
        scores = _weighted(merged[:, 0], p.alpha) * _weighted(merged[:, 1], p.beta) * _weighted(merged[:, 2], p.gamma)
        batch = ScoreBatch(scores, merged if components else None, edge.burst_stats)
        if sub_components:
            return batch, (edge.components, s.components, d.components)
        return batch

    def process_edge(self, e: EdgeRecord) -> tuple[float, ComponentScores]:
        _, a = self.edge_instance.process_edge(e)
        _, b = self.src_instance.process_node(e.s, e.t)
        _, c = self.dst_instance.process_node(e.d, e.t)
        merged = ComponentScores(*(max(x, y, z) for x, y, z in zip(a, b, c)))
        return combine(merged, self.params), merged


def process_edge_en(det: EnDetector, e: EdgeRecord) -> tuple[float, ComponentScores]:
    return det.process_edge(e)


def _weighted(x: np.ndarray, w: float) -> np.ndarray:
    if w == 0.0:
        return np.ones_like(x)
    return np.power(x, w)
