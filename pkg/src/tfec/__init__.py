"""Temporal-frequency enhanced contrastive clustering for multivariate time series."""

from .dataset import MTSDataset, load_corpus, parse_ts, stats, znormalize
from .metrics import acc, f1, nmi
from .trainer import RunConfig, RunReport, ablate, raw_kmeans_baseline, train

__all__ = [
    "MTSDataset",
    "RunConfig",
    "RunReport",
    "ablate",
    "acc",
    "f1",
    "load_corpus",
    "nmi",
    "parse_ts",
    "raw_kmeans_baseline",
    "stats",
    "train",
    "znormalize",
]

__version__ = "0.1.0"
