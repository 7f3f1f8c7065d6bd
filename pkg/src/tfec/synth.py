"""Synthetic labeled corpora for demos, tests, and offline fixtures.

Each class carries a distinct per-channel frequency signature (tones with
random phase plus noise), which makes the clustering task learnable while
keeping raw time-domain distances uninformative because of the phase
scatter. ``write_profile_fixture`` renders a corpus with the exact
(N, T, F, classes) shape of a known UEA benchmark into a ``.ts`` file, for
use where the archive itself is unavailable.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .dataset import MTSDataset, UEA_PROFILES, format_ts


def two_tone_corpus(
    n: int = 20,
    t: int = 64,
    channels: int = 1,
    bins: tuple[int, int] = (3, 11),
    noise: float = 0.1,
    seed: int = 0,
) -> MTSDataset:
    """Two balanced classes of single-tone sinusoids with additive noise.

    Class c is a sine at frequency bin ``bins[c]`` with a phase drawn
    uniformly per sample, plus N(0, noise^2) noise.
    """
    rng = np.random.default_rng(seed)
    labels = np.arange(n) % 2
    grid = np.arange(t)
    samples = np.empty((n, t, channels))
    for i in range(n):
        phase = rng.uniform(0.0, 2.0 * np.pi)
        tone = np.sin(2.0 * np.pi * bins[labels[i]] * grid / t + phase)
        for f in range(channels):
            samples[i, :, f] = tone + rng.normal(0.0, noise, size=t)
    return MTSDataset(
        name="two_tone",
        samples=samples,
        labels=labels.astype(np.int64),
        class_count=2,
        label_names=("0", "1"),
    )


def class_tone_corpus(
    name: str,
    n: int,
    t: int,
    channels: int,
    classes: int,
    noise: float = 0.3,
    seed: int = 0,
) -> MTSDataset:
    """Labeled corpus whose classes differ by per-channel tone frequencies.

    Channel f of a class-c sample is a sine at bin ``2 + (c + f*classes) mod B``
    (B chosen below Nyquist) with per-sample random phase, plus noise. Class
    sizes are as balanced as N allows; samples are interleaved so that
    contiguous slices stay mixed.
    """
    rng = np.random.default_rng(seed)
    max_bin = max(1, t // 2 - 3)  # distinct class signatures whenever classes <= max_bin
    labels = np.arange(n) % classes
    grid = np.arange(t)
    samples = np.empty((n, t, channels))
    for i in range(n):
        c = labels[i]
        for f in range(channels):
            freq_bin = 2 + (c + f * classes) % max_bin
            phase = rng.uniform(0.0, 2.0 * np.pi)
            samples[i, :, f] = np.sin(
                2.0 * np.pi * freq_bin * grid / t + phase
            ) + rng.normal(0.0, noise, size=t)
    return MTSDataset(
        name=name,
        samples=samples,
        labels=labels.astype(np.int64),
        class_count=classes,
        label_names=tuple(str(c + 1) for c in range(classes)),
    )


def profile_corpus(name: str, seed: int = 0, noise: float = 0.3) -> MTSDataset:
    """Synthetic corpus with the (N, T, F, classes) shape of a known benchmark."""
    if name not in UEA_PROFILES:
        raise KeyError(f"unknown benchmark profile '{name}'")
    n, t, f, classes = UEA_PROFILES[name]
    return class_tone_corpus(name, n, t, f, classes, noise=noise, seed=seed)


def write_profile_fixture(directory: str | Path, name: str, seed: int = 0) -> Path:
    """Render one profile-shaped corpus to ``<directory>/<name>.ts``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    ds = profile_corpus(name, seed=seed)
    path = directory / f"{name}.ts"
    path.write_text(format_ts(ds), encoding="utf-8")
    return path


def write_all_profile_fixtures(directory: str | Path, seed: int = 0) -> list[Path]:
    """Render every known benchmark profile into ``directory``."""
    return [write_profile_fixture(directory, name, seed=seed) for name in UEA_PROFILES]
