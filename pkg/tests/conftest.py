import numpy as np
import pytest

from tfec.dataset import MTSDataset


@pytest.fixture
def small_corpus() -> MTSDataset:
    """Deterministic 10x20x3 labeled corpus with mild class structure."""
    rng = np.random.default_rng(7)
    n, t, f = 10, 20, 3
    labels = np.arange(n) % 2
    grid = np.arange(t)
    samples = np.empty((n, t, f))
    for i in range(n):
        for c in range(f):
            freq = 2 + labels[i] + c
            samples[i, :, c] = np.sin(2 * np.pi * freq * grid / t) + 0.2 * rng.normal(size=t)
    return MTSDataset(
        name="small",
        samples=samples,
        labels=labels.astype(np.int64),
        class_count=2,
        label_names=("a", "b"),
    )


TWO_SERIES_TS = """@problemName toy
@univariate true
@dimensions 1
@equalLength true
@seriesLength 3
@classLabel true a b
@data
1.0,2.0,3.0:a
4.0,5.0,6.0:b
"""
