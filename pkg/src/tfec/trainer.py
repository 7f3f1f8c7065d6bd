"""End-to-end training: enhanced views, dual-path losses, joint objective.

Each epoch regenerates the two views, encodes them, runs the masked
reconstruction path and the pseudo-label contrastive path, and takes one
Adam step on ``beta * l_con + (1 - beta) * l_recon``. Cluster assignments
are refreshed every epoch with k-means warm-started from the previous
centroids so the pseudo-labels track the moving representation. The final
clustering is k-means on fused representations of deterministic
full-length views.

Runs are deterministic for a fixed seed on one thread: every random draw
comes from one seeded generator in a fixed order.
"""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from . import coeh, metrics, model, pgcl
from .dataset import MTSDataset, znormalize
from .errors import ConfigError, NumericError
from .numkernel import adam_init, adam_step

ABLATION_ROWS = (
    ("full", True, True, True),
    ("no_coeh", False, True, True),
    ("no_pgcl", True, False, True),
    ("no_read", True, True, False),
    ("no_pgcl_no_read", True, False, False),
)


@dataclass
class RunConfig:
    """All knobs of one training run; JSON-round-trippable."""

    data: str | None = None
    seed: int = 0
    epochs: int = 100
    batch_size: int | None = None  # None: min(N, 32); batching engages only when N > 256
    crop_len: int | None = None  # None: ceil(0.9 * T)
    neighbors: int = 3
    mix_budget: float = 0.2
    neighbor_space: str = "input"  # "input" | "feature"
    mask_ratio: float = 0.15
    conf_fraction: float = 0.5
    alpha: float = 1.0
    beta: float = 0.5
    k: int | None = None  # None: corpus class count
    use_coeh: bool = True
    use_pgcl: bool = True
    use_read: bool = True
    lr: float = 1e-3
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    enc_h1: int = 64
    enc_h2: int = 128
    enc_dim: int = 64
    kmeans_restarts: int = 10
    kmeans_iters: int = 100
    normalize: bool = True
    merge_splits: bool = True
    separate_read_encoder: bool = False
    baseline_aug: str | None = None  # replaces the enhanced view in comparison runs
    baseline_strength: float = 0.2


def validate_config(cfg: RunConfig) -> None:
    """Raise one ConfigError listing every invalid field at once."""
    problems: list[str] = []
    if not 0.0 <= cfg.beta <= 1.0:
        problems.append(f"beta={cfg.beta} outside [0, 1]")
    if not (cfg.use_pgcl or cfg.use_read):
        problems.append("at least one of use_pgcl, use_read must be true")
    if not 0.0 <= cfg.mix_budget <= 1.0:
        problems.append(f"mix_budget={cfg.mix_budget} outside [0, 1]")
    if not 0.0 < cfg.conf_fraction <= 1.0:
        problems.append(f"conf_fraction={cfg.conf_fraction} outside (0, 1]")
    if not 0.0 <= cfg.mask_ratio < 1.0:
        problems.append(f"mask_ratio={cfg.mask_ratio} outside [0, 1)")
    if cfg.epochs < 0:
        problems.append(f"epochs={cfg.epochs} negative")
    if cfg.neighbors < 1:
        problems.append(f"neighbors={cfg.neighbors} must be >= 1")
    if cfg.neighbor_space not in ("input", "feature"):
        problems.append(f"neighbor_space='{cfg.neighbor_space}' not one of input, feature")
    if cfg.baseline_aug is not None and cfg.baseline_aug not in coeh.BASELINE_KINDS:
        problems.append(
            f"baseline_aug='{cfg.baseline_aug}' not one of {', '.join(coeh.BASELINE_KINDS)}"
        )
    if cfg.lr <= 0:
        problems.append(f"lr={cfg.lr} must be positive")
    for name in ("enc_h1", "enc_h2", "enc_dim", "kmeans_restarts", "kmeans_iters"):
        if getattr(cfg, name) < 1:
            problems.append(f"{name}={getattr(cfg, name)} must be >= 1")
    if problems:
        raise ConfigError("; ".join(problems))


def config_from_dict(data: dict) -> RunConfig:
    known = {f.name for f in fields(RunConfig)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    return RunConfig(**data)


def apply_overrides(cfg: RunConfig, overrides: list[str]) -> RunConfig:
    """Apply ``key=value`` strings, coercing each value to the field's type."""
    by_name = {f.name: f for f in fields(RunConfig)}
    updates: dict = {}
    problems: list[str] = []
    for item in overrides:
        if "=" not in item:
            problems.append(f"override '{item}' is not key=value")
            continue
        key, _, raw = item.partition("=")
        key = key.strip()
        if key not in by_name:
            problems.append(f"unknown config key '{key}'")
            continue
        try:
            updates[key] = _coerce(raw.strip(), getattr(cfg, key))
        except ValueError as exc:
            problems.append(f"bad value for '{key}': {exc}")
    if problems:
        raise ConfigError("; ".join(problems))
    return replace(cfg, **updates)


def _coerce(raw: str, current):
    if raw.lower() in ("none", "null"):
        return None
    if isinstance(current, bool):
        if raw.lower() in ("true", "1", "yes"):
            return True
        if raw.lower() in ("false", "0", "no"):
            return False
        raise ValueError(f"'{raw}' is not a boolean")
    if isinstance(current, int) and not isinstance(current, bool):
        return int(raw)
    if isinstance(current, float):
        return float(raw)
    if current is None:
        # Unset optional field: try int, then float, then string.
        for cast in (int, float):
            try:
                return cast(raw)
            except ValueError:
                pass
    return raw


@dataclass
class RunReport:
    """Everything one run produces: losses, final clustering, metrics."""

    config: dict
    seed: int
    losses: list[dict] = field(default_factory=list)
    metrics: dict | None = None
    assignments: np.ndarray | None = None
    embeddings: np.ndarray | None = None
    wall_clock: float = 0.0

    def summary_dict(self) -> dict:
        """JSON-ready view without the bulky arrays."""
        return {
            "config": self.config,
            "seed": self.seed,
            "losses": self.losses,
            "metrics": self.metrics,
            "wall_clock": self.wall_clock,
        }


def total_loss(l_con: float, l_recon: float, beta: float) -> float:
    """Joint objective: ``beta * l_con + (1 - beta) * l_recon``."""
    if not 0.0 <= beta <= 1.0:
        raise ConfigError(f"beta={beta} outside [0, 1]")
    return beta * l_con + (1.0 - beta) * l_recon


def effective_beta(cfg: RunConfig) -> float:
    """The trade-off actually applied after ablation switches.

    Disabling the reconstruction path forces beta to 1; disabling the
    contrastive path forces it to 0.
    """
    if not cfg.use_read:
        return 1.0
    if not cfg.use_pgcl:
        return 0.0
    return cfg.beta


class _Runner:
    """Mutable state of one training run."""

    def __init__(self, cfg: RunConfig, ds: MTSDataset):
        validate_config(cfg)
        self.cfg = cfg
        self.ds = znormalize(ds) if cfg.normalize else ds
        self.n, self.t, self.f = self.ds.samples.shape
        self.k = cfg.k if cfg.k is not None else self.ds.class_count
        if self.k is None:
            raise ConfigError("k not set and corpus has no labels to infer it from")
        if self.k > self.n:
            raise ConfigError(f"k={self.k} exceeds corpus size {self.n}")
        self.crop_len = cfg.crop_len if cfg.crop_len is not None else int(np.ceil(0.9 * self.t))
        if not 1 <= self.crop_len <= self.t:
            raise ConfigError(f"crop_len={self.crop_len} outside [1, {self.t}]")
        if cfg.neighbors >= self.n:
            raise ConfigError(f"neighbors={cfg.neighbors} must be < corpus size {self.n}")

        self.rng = np.random.default_rng(cfg.seed)
        self.enc = model.init_encoder(self.rng, self.f, cfg.enc_h1, cfg.enc_h2, cfg.enc_dim)
        self.enc_read = (
            model.init_encoder(self.rng, self.f, cfg.enc_h1, cfg.enc_h2, cfg.enc_dim)
            if cfg.separate_read_encoder
            else self.enc
        )
        self.dec = model.init_decoder(self.rng, cfg.enc_dim, cfg.enc_h2, self.crop_len, self.f)
        self.params = self._collect_params()
        self.adam = adam_init(
            self.params, lr=cfg.lr, beta1=cfg.adam_beta1, beta2=cfg.adam_beta2, eps=cfg.adam_eps
        )
        self.input_graph = self._build_graph(self.ds.samples.reshape(self.n, -1))
        self.prev_fused: np.ndarray | None = None
        self.prev_centroids: np.ndarray | None = None

    def _collect_params(self) -> dict[str, np.ndarray]:
        params = {f"enc.{k}": v for k, v in self.enc.to_dict().items()}
        params.update({f"dec.{k}": v for k, v in self.dec.to_dict().items()})
        if self.cfg.separate_read_encoder:
            params.update({f"enc2.{k}": v for k, v in self.enc_read.to_dict().items()})
        return params

    def _install_params(self, params: dict[str, np.ndarray]) -> None:
        self.params = params
        self.enc = model.EncoderParams.from_dict(
            {k.split(".", 1)[1]: v for k, v in params.items() if k.startswith("enc.")}
        )
        dec_arrays = {k.split(".", 1)[1]: v for k, v in params.items() if k.startswith("dec.")}
        self.dec = model.DecoderParams(
            out_len=self.dec.out_len, out_channels=self.dec.out_channels, **dec_arrays
        )
        if self.cfg.separate_read_encoder:
            self.enc_read = model.EncoderParams.from_dict(
                {k.split(".", 1)[1]: v for k, v in params.items() if k.startswith("enc2.")}
            )
        else:
            self.enc_read = self.enc

    def _build_graph(self, flat: np.ndarray) -> list[coeh.NeighborSet]:
        return coeh.neighbor_graph(flat, self.cfg.neighbors, self.cfg.mix_budget)

    def _epoch_graph(self) -> list[coeh.NeighborSet]:
        if self.cfg.neighbor_space == "feature" and self.prev_fused is not None:
            return self._build_graph(self.prev_fused)
        return self.input_graph

    def _make_views(self, crop_len: int, graph: list[coeh.NeighborSet]):
        cfg = self.cfg
        ccfg = coeh.CoehConfig(
            crop_len=crop_len, neighbors=cfg.neighbors, mix_budget=cfg.mix_budget
        )
        va = np.empty((self.n, crop_len, self.f))
        vb = np.empty((self.n, crop_len, self.f))
        for i in range(self.n):
            if cfg.baseline_aug is not None:
                seg, _, _ = coeh.aligned_crop(self.ds.samples[i], [], crop_len, self.rng)
                va[i] = seg
                vb[i] = coeh.baseline_augment(
                    seg, cfg.baseline_aug, self.rng, cfg.baseline_strength
                )
            elif cfg.use_coeh:
                view_a, view_b = coeh.coenhance(
                    self.ds, i, ccfg, self.rng, neighbor_set=graph[i]
                )
                va[i] = view_a.values
                vb[i] = view_b.values
            else:
                seg_a, _, _ = coeh.aligned_crop(self.ds.samples[i], [], crop_len, self.rng)
                seg_b, _, _ = coeh.aligned_crop(self.ds.samples[i], [], crop_len, self.rng)
                va[i] = seg_a
                vb[i] = seg_b
        return va, vb

    def _mask_batch(self, batch: np.ndarray) -> np.ndarray:
        out = np.empty_like(batch)
        for i in range(batch.shape[0]):
            out[i], _ = model.mask_random(batch[i], self.cfg.mask_ratio, self.rng)
        return out

    def _cluster(self, fused: np.ndarray, seed: int, warm: bool) -> pgcl.ClusterState:
        init = self.prev_centroids if warm else None
        state = pgcl.kmeans(
            fused,
            self.k,
            seed=seed,
            max_iter=self.cfg.kmeans_iters,
            restarts=self.cfg.kmeans_restarts,
            init_centroids=init,
        )
        return state

    def _epoch_step(self, epoch: int) -> tuple[float, float, float]:
        cfg = self.cfg
        graph = self._epoch_graph()
        va, vb = self._make_views(self.crop_len, graph)
        kmeans_seed = int(self.rng.integers(2**31))
        batch_size = cfg.batch_size if cfg.batch_size is not None else min(self.n, 32)
        # Full-batch steps below the size threshold remove sampling noise
        # from small corpora; larger ones fall back to mini-batch SGD.
        if self.n <= 256 or batch_size >= self.n:
            return self._full_batch_step(epoch, va, vb, kmeans_seed)
        return self._mini_batch_step(epoch, va, vb, kmeans_seed, batch_size)

    def _contrastive_grads(self, grads, cache_a, cache_b, d_ra, d_rb, scale: float) -> None:
        for key, g in model.encode_backward(self.enc, cache_a, scale * d_ra).items():
            grads[f"enc.{key}"] += g
        for key, g in model.encode_backward(self.enc, cache_b, scale * d_rb).items():
            grads[f"enc.{key}"] += g

    def _read_forward(self, targets: np.ndarray):
        masked = self._mask_batch(targets)
        r_m, cache_m = model.encode_with_cache(self.enc_read, masked)
        x_hat, cache_d = model.decode_with_cache(self.dec, r_m)
        loss, d_xhat = model.recon_loss_grad(x_hat, targets)
        return loss, d_xhat, cache_m, cache_d

    def _read_grads(self, grads, cache_m, cache_d, d_xhat, scale: float) -> None:
        dec_grads, d_rm = model.decode_backward(self.dec, cache_d, scale * d_xhat)
        for key, g in dec_grads.items():
            grads[f"dec.{key}"] += g
        prefix = "enc2." if self.cfg.separate_read_encoder else "enc."
        for key, g in model.encode_backward(self.enc_read, cache_m, d_rm).items():
            grads[f"{prefix}{key}"] += g

    def _apply_step(self, grads, l_con: float, l_recon: float, epoch: int, beta_eff: float):
        l_total = total_loss(l_con, l_recon, beta_eff)
        if not np.isfinite(l_total):
            raise NumericError(f"non-finite loss at epoch {epoch}")
        new_params, self.adam = adam_step(self.params, grads, self.adam)
        self._install_params(new_params)
        return l_total

    def _full_batch_step(self, epoch, va, vb, kmeans_seed):
        cfg = self.cfg
        ra, cache_a = model.encode_with_cache(self.enc, va)
        rb, cache_b = model.encode_with_cache(self.enc, vb)
        fused = pgcl.fuse_views(ra, rb)
        self.prev_fused = fused

        beta_eff = effective_beta(cfg)
        grads = {k: np.zeros_like(v) for k, v in self.params.items()}
        l_con = 0.0
        l_recon = 0.0

        if cfg.use_pgcl:
            state = self._cluster(fused, kmeans_seed, warm=self.prev_centroids is not None)
            state = pgcl.select_high_confidence(state, fused, cfg.conf_fraction)
            pairs = pgcl.build_pairs(state)
            l_con, d_ra, d_rb = pgcl.contrastive_loss_grad(pairs, ra, rb, state, cfg.alpha)
            self.prev_centroids = state.centroids
            if beta_eff > 0.0:
                self._contrastive_grads(grads, cache_a, cache_b, d_ra, d_rb, beta_eff)

        if cfg.use_read:
            l_recon, d_xhat, cache_m, cache_d = self._read_forward(vb)
            if (1.0 - beta_eff) > 0.0:
                self._read_grads(grads, cache_m, cache_d, d_xhat, 1.0 - beta_eff)

        l_total = self._apply_step(grads, l_con, l_recon, epoch, beta_eff)
        return l_con, l_recon, l_total

    def _mini_batch_step(self, epoch, va, vb, kmeans_seed, batch_size):
        cfg = self.cfg
        beta_eff = effective_beta(cfg)
        state = None
        if cfg.use_pgcl:
            fused = pgcl.fuse_views(model.encode(self.enc, va), model.encode(self.enc, vb))
            self.prev_fused = fused
            state = self._cluster(fused, kmeans_seed, warm=self.prev_centroids is not None)
            state = pgcl.select_high_confidence(state, fused, cfg.conf_fraction)
            self.prev_centroids = state.centroids

        order = self.rng.permutation(self.n)
        cons: list[float] = []
        recons: list[float] = []
        for start in range(0, self.n, batch_size):
            idx = order[start : start + batch_size]
            grads = {k: np.zeros_like(v) for k, v in self.params.items()}
            l_con = 0.0
            l_recon = 0.0
            if cfg.use_pgcl:
                sub = _restrict_state(state, idx)
                ra_b, cache_a = model.encode_with_cache(self.enc, va[idx])
                rb_b, cache_b = model.encode_with_cache(self.enc, vb[idx])
                pairs = pgcl.build_pairs(sub)
                l_con, d_ra, d_rb = pgcl.contrastive_loss_grad(pairs, ra_b, rb_b, sub, cfg.alpha)
                if beta_eff > 0.0:
                    self._contrastive_grads(grads, cache_a, cache_b, d_ra, d_rb, beta_eff)
            if cfg.use_read:
                l_recon, d_xhat, cache_m, cache_d = self._read_forward(vb[idx])
                if (1.0 - beta_eff) > 0.0:
                    self._read_grads(grads, cache_m, cache_d, d_xhat, 1.0 - beta_eff)
            self._apply_step(grads, l_con, l_recon, epoch, beta_eff)
            cons.append(l_con)
            recons.append(l_recon)

        l_con = float(np.mean(cons))
        l_recon = float(np.mean(recons))
        return l_con, l_recon, total_loss(l_con, l_recon, beta_eff)

    def final_clustering(self):
        """K-means over the fused representations of one more view draw.

        Uses the same view pipeline as training (so a zero-epoch run
        reports the clustering of the freshly initialized model), with a
        fresh best-of-restarts k-means rather than a warm start.
        """
        cfg = self.cfg
        va, vb = self._make_views(self.crop_len, self._epoch_graph())
        ra = model.encode(self.enc, va)
        rb = model.encode(self.enc, vb)
        fused = pgcl.fuse_views(ra, rb)
        seed = int(self.rng.integers(2**31))
        state = pgcl.kmeans(
            fused, self.k, seed=seed, max_iter=cfg.kmeans_iters, restarts=cfg.kmeans_restarts
        )
        return fused, state


def _restrict_state(state: pgcl.ClusterState, idx: np.ndarray) -> pgcl.ClusterState:
    """Re-express a cluster state over a batch: pools as local positions."""
    pos = {int(g): j for j, g in enumerate(idx)}
    pools = tuple(
        np.array(sorted(pos[int(i)] for i in kept if int(i) in pos), dtype=np.int64)
        for kept in state.highconf
    )
    return pgcl.ClusterState(
        centroids=state.centroids,
        assignments=state.assignments[idx],
        confidences=state.confidences[idx],
        wcss=state.wcss,
        highconf=pools,
        highconf_centroids=state.highconf_centroids,
    )


def train(cfg: RunConfig, ds: MTSDataset) -> RunReport:
    """Run the full pipeline on one corpus and report losses and metrics."""
    started = time.perf_counter()
    runner = _Runner(cfg, ds)
    losses: list[dict] = []
    for epoch in range(cfg.epochs):
        l_con, l_recon, l_total = runner._epoch_step(epoch)
        losses.append(
            {"epoch": epoch, "l_con": l_con, "l_recon": l_recon, "l_total": l_total}
        )
    fused, state = runner.final_clustering()
    scores = None
    if ds.labels is not None:
        scores = metrics.evaluate(state.assignments, ds.labels)
    return RunReport(
        config=asdict(cfg),
        seed=cfg.seed,
        losses=losses,
        metrics=scores,
        assignments=state.assignments,
        embeddings=fused,
        wall_clock=time.perf_counter() - started,
    )


def ablate(cfg: RunConfig, ds: MTSDataset) -> list[tuple[str, tuple[bool, bool, bool], RunReport]]:
    """Run the five component-switch rows, full model first.

    The last row disables both learning paths; nothing can train there, so
    it is realized as a zero-epoch run (enhanced views, freshly initialized
    encoder, k-means) while the reported flags keep the row's meaning.
    """
    rows: list[tuple[str, tuple[bool, bool, bool], RunReport]] = []
    for name, use_coeh, use_pgcl, use_read in ABLATION_ROWS:
        if not (use_pgcl or use_read):
            row_cfg = replace(cfg, use_coeh=use_coeh, use_pgcl=True, use_read=True, epochs=0)
        else:
            row_cfg = replace(cfg, use_coeh=use_coeh, use_pgcl=use_pgcl, use_read=use_read)
        rows.append((name, (use_coeh, use_pgcl, use_read), train(row_cfg, ds)))
    return rows


def raw_kmeans_baseline(ds: MTSDataset, seed: int, normalize: bool = True,
                        restarts: int = 10) -> RunReport:
    """K-means on flattened (normalized) series, the trivial reference."""
    started = time.perf_counter()
    work = znormalize(ds) if normalize else ds
    if ds.class_count is None:
        raise ConfigError("raw baseline needs a labeled corpus to set k")
    flat = work.samples.reshape(work.n, -1)
    state = pgcl.kmeans(flat, ds.class_count, seed=seed, restarts=restarts)
    scores = metrics.evaluate(state.assignments, ds.labels)
    return RunReport(
        config={"baseline": "raw_kmeans", "seed": seed, "normalize": normalize},
        seed=seed,
        losses=[],
        metrics=scores,
        assignments=state.assignments,
        embeddings=flat,
        wall_clock=time.perf_counter() - started,
    )
