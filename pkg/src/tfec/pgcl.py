"""Pseudo-label guided contrastive learning over fused representations.

The fused per-sample representation is clustered with k-means; each sample
gets a confidence ``exp(-||R_i - c||^2)`` against its assigned centroid;
the most confident fraction of every cluster forms the pool from which
positive pairs (same cluster, cross view) are drawn, while negatives
repel the centroids of those high-confidence pools from one another.

The loss gradient flows into the encoder both through the paired encodings
and through the pool centroids, which are recomputed as plain means inside
the loss so the repulsion term is differentiable. Cluster membership and
pool selection are treated as constants within one step.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError, ShapeError

_COS_EPS = 1e-12


@dataclass(frozen=True)
class ClusterState:
    """K-means result plus the confidence-gated pools derived from it."""

    centroids: np.ndarray  # (K, D)
    assignments: np.ndarray  # (N,)
    confidences: np.ndarray  # (N,)
    wcss: float
    highconf: tuple[np.ndarray, ...] | None = None
    highconf_centroids: np.ndarray | None = None

    @property
    def k(self) -> int:
        return self.centroids.shape[0]


@dataclass(frozen=True)
class ContrastivePairs:
    """Index pairs: positives over samples, negatives over clusters."""

    positives: np.ndarray  # (M, 2) sample indices (view-a index, view-b index)
    negatives: np.ndarray  # (Q, 2) cluster indices, p < q


def fuse_views(r_a: np.ndarray, r_b: np.ndarray) -> np.ndarray:
    """Elementwise mean of the two view encodings."""
    if r_a.shape != r_b.shape:
        raise ShapeError(f"view encodings differ in shape: {r_a.shape} vs {r_b.shape}")
    return (r_a + r_b) / 2.0


def _sq_dists(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    # (N, K) squared Euclidean distances.
    diff = points[:, None, :] - centroids[None, :, :]
    return np.sum(diff * diff, axis=2)


def _kmeans_pp(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = points.shape[0]
    first = int(rng.integers(0, n))
    centers = [first]
    d2 = np.sum((points - points[first]) ** 2, axis=1)
    while len(centers) < k:
        total = float(d2.sum())
        if total <= 0.0:
            # Remaining mass is zero (duplicate points); take the lowest
            # index not yet chosen to stay deterministic.
            pick = next(i for i in range(n) if i not in centers)
        else:
            pick = int(rng.choice(n, p=d2 / total))
        centers.append(pick)
        d2 = np.minimum(d2, np.sum((points - points[pick]) ** 2, axis=1))
    return points[centers].copy()


def _lloyd(points: np.ndarray, centroids: np.ndarray, max_iter: int):
    n, k = points.shape[0], centroids.shape[0]
    centroids = centroids.copy()
    prev = None
    for _ in range(max_iter):
        d2 = _sq_dists(points, centroids)
        assign = np.argmin(d2, axis=1)
        if prev is not None and np.array_equal(assign, prev):
            break
        counts = np.bincount(assign, minlength=k)
        for p in range(k):
            if counts[p] > 0:
                centroids[p] = points[assign == p].mean(axis=0)
        # Empty clusters grab the point currently farthest from its centroid.
        for p in np.flatnonzero(counts == 0):
            d_own = _sq_dists(points, centroids)[np.arange(n), assign]
            far = int(np.argmax(d_own))
            centroids[p] = points[far]
            assign[far] = p
            counts = np.bincount(assign, minlength=k)
        prev = assign
    d2 = _sq_dists(points, centroids)
    assign = np.argmin(d2, axis=1)
    wcss = float(d2[np.arange(n), assign].sum())
    return centroids, assign, wcss


def kmeans(
    points: np.ndarray,
    k: int,
    seed: int,
    max_iter: int = 100,
    restarts: int = 10,
    init_centroids: np.ndarray | None = None,
) -> ClusterState:
    """Best-of-restarts Lloyd iterations with k-means++ seeding.

    Passing ``init_centroids`` warm-starts a single run from them instead,
    which keeps cluster indices stable across successive refreshes.
    """
    points = np.asarray(points, dtype=np.float64)
    n = points.shape[0]
    if k > n:
        raise ConfigError(f"k={k} exceeds number of points {n}")
    rng = np.random.default_rng(seed)

    if init_centroids is not None:
        best = _lloyd(points, np.asarray(init_centroids, dtype=np.float64), max_iter)
    else:
        best = None
        for _ in range(restarts):
            run = _lloyd(points, _kmeans_pp(points, k, rng), max_iter)
            if best is None or run[2] < best[2]:
                best = run
    centroids, assign, wcss = best
    conf = confidence(points, centroids[assign])
    return ClusterState(centroids=centroids, assignments=assign, confidences=conf, wcss=wcss)


def confidence(points: np.ndarray, assigned_centroids: np.ndarray):
    """``exp(-||R_i - c||^2)`` against each point's assigned centroid.

    Accepts a single (D,) pair (returns a float) or matched (N, D) arrays
    (returns a length-N vector). Values lie in (0, 1].
    """
    single = np.asarray(points).ndim == 1
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    assigned_centroids = np.atleast_2d(np.asarray(assigned_centroids, dtype=np.float64))
    d2 = np.sum((points - assigned_centroids) ** 2, axis=1)
    out = np.exp(-d2)
    return float(out[0]) if single else out


def select_high_confidence(state: ClusterState, embeddings: np.ndarray, q: float) -> ClusterState:
    """Keep the top ``ceil(q * cluster_size)`` members of each cluster.

    Ranking is by confidence, ties broken toward the lower sample index.
    The kept members' mean embedding becomes that cluster's pool centroid.
    Singleton clusters always keep their member.
    """
    if not 0.0 < q <= 1.0:
        raise ConfigError(f"confidence fraction {q} outside (0, 1]")
    pools: list[np.ndarray] = []
    pool_centroids = np.array(state.centroids, copy=True)
    for p in range(state.k):
        members = np.flatnonzero(state.assignments == p)
        if members.size == 0:
            pools.append(members)
            continue
        keep = int(np.ceil(q * members.size))
        order = np.lexsort((members, -state.confidences[members]))
        kept = np.sort(members[order[:keep]])
        pools.append(kept)
        pool_centroids[p] = embeddings[kept].mean(axis=0)
    return replace(state, highconf=tuple(pools), highconf_centroids=pool_centroids)


def build_pairs(state: ClusterState) -> ContrastivePairs:
    """All cross-view positives within each pool, all cluster pairs as negatives.

    Positives are ordered pairs (i, j) within one pool, including i = j
    (the classic cross-view self-pair). Clusters with an empty pool
    contribute no pairs on either side.
    """
    if state.highconf is None:
        raise ConfigError("high-confidence pools not populated; run select_high_confidence first")
    pos: list[tuple[int, int]] = []
    for kept in state.highconf:
        for i in kept:
            for j in kept:
                pos.append((int(i), int(j)))
    occupied = [p for p in range(state.k) if state.highconf[p].size > 0]
    neg = [(p, q) for ai, p in enumerate(occupied) for q in occupied[ai + 1 :]]
    return ContrastivePairs(
        positives=np.array(pos, dtype=np.int64).reshape(-1, 2),
        negatives=np.array(neg, dtype=np.int64).reshape(-1, 2),
    )


def contrastive_loss(
    pairs: ContrastivePairs,
    r_a: np.ndarray,
    r_b: np.ndarray,
    state: ClusterState,
    alpha: float,
) -> float:
    """Positive alignment plus alpha-weighted centroid cosine repulsion."""
    loss, _, _ = contrastive_loss_grad(pairs, r_a, r_b, state, alpha)
    return loss


def contrastive_loss_grad(
    pairs: ContrastivePairs,
    r_a: np.ndarray,
    r_b: np.ndarray,
    state: ClusterState,
    alpha: float,
):
    """Loss and gradients w.r.t. both view encodings.

    Mean squared distance over positive pairs, plus the mean cosine
    similarity between pool centroids over negative cluster pairs, scaled
    by alpha. Pool centroids are recomputed here from the current fused
    embeddings, so the repulsion gradient reaches the encoder through the
    means. An empty side contributes 0.
    """
    if r_a.shape != r_b.shape:
        raise ShapeError(f"view encodings differ in shape: {r_a.shape} vs {r_b.shape}")
    if state.highconf is None:
        raise ConfigError("high-confidence pools not populated")
    d_a = np.zeros_like(r_a)
    d_b = np.zeros_like(r_b)
    loss = 0.0

    m = pairs.positives.shape[0]
    if m > 0:
        ai = pairs.positives[:, 0]
        bj = pairs.positives[:, 1]
        diff = r_a[ai] - r_b[bj]
        loss += float(np.sum(diff * diff)) / m
        np.add.at(d_a, ai, 2.0 * diff / m)
        np.add.at(d_b, bj, -2.0 * diff / m)

    q_count = pairs.negatives.shape[0]
    if q_count > 0:
        fused = (r_a + r_b) / 2.0
        pools = state.highconf
        centroids = {
            p: fused[pools[p]].mean(axis=0)
            for p in np.unique(pairs.negatives)
        }
        d_c = {p: np.zeros(r_a.shape[1]) for p in centroids}
        neg_sum = 0.0
        for p, q in pairs.negatives:
            cp, cq = centroids[int(p)], centroids[int(q)]
            norm_p = float(np.linalg.norm(cp))
            norm_q = float(np.linalg.norm(cq))
            denom = norm_p * norm_q + _COS_EPS
            dot = float(cp @ cq)
            neg_sum += dot / denom
            # d(cos)/d(cp) = cq/denom - dot * norm_q * cp / (norm_p * denom^2)
            d_c[int(p)] += cq / denom - dot * norm_q * cp / (max(norm_p, _COS_EPS) * denom**2)
            d_c[int(q)] += cp / denom - dot * norm_p * cq / (max(norm_q, _COS_EPS) * denom**2)
        loss += alpha * neg_sum / q_count
        for p, grad_c in d_c.items():
            members = pools[p]
            if members.size == 0:
                continue
            per_member = (alpha / q_count) * grad_c / members.size
            np.add.at(d_a, members, per_member / 2.0)
            np.add.at(d_b, members, per_member / 2.0)

    return loss, d_a, d_b
