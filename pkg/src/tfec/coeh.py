"""Temporal-frequency co-enhancement of time-series samples.

A sample is augmented in two coordinated steps: one time window is drawn
and applied identically to the sample and its selected neighbors (aligned
cropping, which keeps phase coherence between the segments), then the
neighbors' spectra are blended into the sample's spectrum with small
distance-derived weights and the result is synthesized back into the time
domain. The blend is a perturbation, not an average: the weights sum to at
most the mixing budget.

Classical augmenters (jitter, scaling, permutation, crop, mask) live here
too, as drop-in alternatives for the enhanced view in comparison runs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import MTSDataset
from .errors import ConfigError, ShapeError
from .numkernel import dft_forward, dft_inverse

BASELINE_KINDS = ("jitter", "scaling", "permutation", "crop", "mask")

# Incremented on every spectral blend; lets tests assert that ablated runs
# never touch the frequency path.
mix_call_count = 0


@dataclass(frozen=True)
class CoehConfig:
    """Knobs of the enhancement: crop length L, neighbor count P, budget gamma."""

    crop_len: int
    neighbors: int = 3
    mix_budget: float = 0.2


@dataclass(frozen=True)
class NeighborSet:
    """Neighbors of one anchor sample with their mixing weights.

    Weights are strictly positive and sum to at most the mixing budget.
    The anchor never appears among its own neighbors.
    """

    anchor: int
    neighbors: tuple[tuple[int, float], ...] = ()

    def indices(self) -> list[int]:
        return [p for p, _ in self.neighbors]

    def weights(self) -> list[float]:
        return [w for _, w in self.neighbors]


@dataclass(frozen=True)
class EnhancedSample:
    """A (possibly spectrally enriched) crop of one source series."""

    values: np.ndarray  # (L, F)
    window_start: int
    source: int


def aligned_crop(
    x_i: np.ndarray,
    neighbors: list[np.ndarray],
    crop_len: int,
    rng: np.random.Generator,
) -> tuple[np.ndarray, list[np.ndarray], int]:
    """Crop the anchor and every neighbor with one shared window.

    The window start is uniform over [0, T - L]; using the same indices for
    all segments is what keeps their relative phase intact.
    """
    t = x_i.shape[0]
    if not 1 <= crop_len <= t:
        raise ConfigError(f"crop length {crop_len} outside [1, {t}]")
    start = int(rng.integers(0, t - crop_len + 1))
    seg = x_i[start : start + crop_len]
    neigh_segs = [nb[start : start + crop_len] for nb in neighbors]
    return seg, neigh_segs, start


def neighbor_graph(
    flat: np.ndarray, p: int, mix_budget: float
) -> list[NeighborSet]:
    """Density-gated nearest-neighbor sets for every sample at once.

    ``flat`` is (N, T*F), one row per flattened series. For each anchor the
    P nearest candidates are kept only when their distance does not exceed
    the corpus median P-NN radius, which rejects pairings that reach across
    sparse regions. Weights are a softmin of kept distances scaled to the
    mixing budget.
    """
    n = flat.shape[0]
    if p >= n:
        raise ConfigError(f"neighbor count {p} must be < corpus size {n}")
    if not 0.0 <= mix_budget <= 1.0:
        raise ConfigError(f"mixing budget {mix_budget} outside [0, 1]")

    sq = np.sum(flat**2, axis=1)
    d2 = np.maximum(sq[:, None] + sq[None, :] - 2.0 * (flat @ flat.T), 0.0)
    dist = np.sqrt(d2)
    np.fill_diagonal(dist, np.inf)

    # P-NN radius of every sample; the gate is the corpus median of these.
    knn_radius = np.sort(dist, axis=1)[:, p - 1]
    gate = float(np.median(knn_radius))

    sets: list[NeighborSet] = []
    for i in range(n):
        order = np.argsort(dist[i], kind="stable")[:p]
        kept = [int(j) for j in order if dist[i, j] <= gate]
        if not kept or mix_budget == 0.0:
            sets.append(NeighborSet(anchor=i))
            continue
        d = dist[i, kept]
        tau = max(float(d.mean()), 1e-12)
        logits = np.exp(-d / tau)
        weights = mix_budget * logits / logits.sum()
        sets.append(
            NeighborSet(anchor=i, neighbors=tuple(zip(kept, (float(w) for w in weights))))
        )
    return sets


def select_neighbors(ds: MTSDataset, i: int, p: int, mix_budget: float) -> NeighborSet:
    """Neighbor set of one sample; see :func:`neighbor_graph`.

    Distances are Euclidean between flattened series, so the corpus should
    be z-normalized first to make them scale-free.
    """
    flat = ds.samples.reshape(ds.n, -1)
    return neighbor_graph(flat, p, mix_budget)[i]


def frequency_mix(
    spectrum: np.ndarray, neighbor_spectra: list[tuple[np.ndarray, float]]
) -> np.ndarray:
    """Blend neighbor spectra into the anchor spectrum, bin-wise.

    ``blended = spectrum + sum_p weight_p * neighbor_spectrum_p`` on full
    complex bins. The operation is real-linear, so spectra of real signals
    blend into a spectrum of a real signal (Hermitian symmetry preserved).
    """
    global mix_call_count
    mix_call_count += 1
    out = np.array(spectrum, dtype=np.complex128, copy=True)
    for nb_spec, weight in neighbor_spectra:
        if nb_spec.shape != spectrum.shape:
            raise ShapeError(
                f"neighbor spectrum shape {nb_spec.shape} != anchor shape {spectrum.shape}"
            )
        out += weight * nb_spec
    return out


def coenhance(
    ds: MTSDataset,
    i: int,
    cfg: CoehConfig,
    rng: np.random.Generator,
    neighbor_set: NeighborSet | None = None,
) -> tuple[EnhancedSample, EnhancedSample]:
    """Produce the two views of sample ``i``: plain crop and enhanced crop.

    View A is an aligned crop of the sample itself; view B applies the
    spectral blend to the same window and synthesizes it back with the
    inverse transform. Both views share the window start. Passing a
    precomputed ``neighbor_set`` avoids re-deriving the whole graph.
    """
    if neighbor_set is None:
        neighbor_set = select_neighbors(ds, i, cfg.neighbors, cfg.mix_budget)
    neighbors = [ds.samples[j] for j in neighbor_set.indices()]
    seg, neigh_segs, start = aligned_crop(ds.samples[i], neighbors, cfg.crop_len, rng)

    spectrum = dft_forward(seg)
    pairs = [(dft_forward(ns), w) for ns, w in zip(neigh_segs, neighbor_set.weights())]
    blended = frequency_mix(spectrum, pairs)
    enhanced = dft_inverse(blended)

    view_a = EnhancedSample(values=seg.copy(), window_start=start, source=i)
    view_b = EnhancedSample(values=enhanced, window_start=start, source=i)
    return view_a, view_b


def baseline_augment(
    x: np.ndarray, kind: str, rng: np.random.Generator, strength: float = 0.2
) -> np.ndarray:
    """One of the five classical augmentations, applied to a (T, F) array.

    jitter: additive N(0, strength^2) noise.
    scaling: per-channel multiplicative N(1, strength^2) factor.
    permutation: time axis split into ceil(1/strength) segments, shuffled.
    crop: keep a random window of (1-strength)*T values, zero-pad to T.
    mask: zero a random contiguous span of strength*T timesteps.
    """
    if strength <= 0:
        raise ConfigError(f"augmentation strength must be positive, got {strength}")
    t = x.shape[0]
    if kind == "jitter":
        return x + rng.normal(0.0, strength, size=x.shape)
    if kind == "scaling":
        factors = rng.normal(1.0, strength, size=(1, x.shape[1]))
        return x * factors
    if kind == "permutation":
        n_seg = int(np.ceil(1.0 / strength))
        if n_seg <= 1:
            return x.copy()
        pieces = np.array_split(np.arange(t), n_seg)
        order = rng.permutation(len(pieces))
        idx = np.concatenate([pieces[k] for k in order])
        return x[idx]
    if kind == "crop":
        keep = max(1, int(round((1.0 - strength) * t)))
        start = int(rng.integers(0, t - keep + 1))
        out = np.zeros_like(x)
        out[:keep] = x[start : start + keep]
        return out
    if kind == "mask":
        span = int(round(strength * t))
        out = x.copy()
        if span > 0:
            start = int(rng.integers(0, t - span + 1))
            out[start : start + span] = 0.0
        return out
    raise ConfigError(f"unknown augmentation kind '{kind}'")
