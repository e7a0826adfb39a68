"""Streaming edge anomaly scores from burst, occurrence and absence statistics."""

from .detector import ComponentScores, Detector, EdgeRecord, Params, ScoreBatch, StreamOrderError, combine, gtest_score
from .en import EnDetector
from .evaluation import UndefinedMetricError, auroc, pattern_contribution, roc_points
from .guarantee import GuaranteeConfig, adjusted_count, adjusted_statistic, chi2_quantile_1dof, flag, size_from_eps_delta
from .ingest import Injection, StreamFormatError, StreamSource, SynthSpec, generate, parse_edge_csv
from .sketch import CountSketch, FlagSketch, SketchLayout, edge_key

__all__ = [
    "ComponentScores",
    "CountSketch",
    "Detector",
    "EdgeRecord",
    "EnDetector",
    "FlagSketch",
    "GuaranteeConfig",
    "Injection",
    "Params",
    "ScoreBatch",
    "SketchLayout",
    "StreamFormatError",
    "StreamOrderError",
    "StreamSource",
    "SynthSpec",
    "UndefinedMetricError",
    "adjusted_count",
    "adjusted_statistic",
    "auroc",
    "chi2_quantile_1dof",
    "combine",
    "edge_key",
    "flag",
    "generate",
    "gtest_score",
    "parse_edge_csv",
    "pattern_contribution",
    "roc_points",
    "size_from_eps_delta",
]
