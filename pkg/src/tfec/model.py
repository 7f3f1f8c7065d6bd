"""Encoder, decoder, and masking for the representation networks.

The encoder is two temporal convolutions with ReLU, a global mean-pool over
time, and a dense projection onto the unit sphere. It is length-agnostic:
the same weights encode crops and full series. The decoder mirrors the
post-pool part for a fixed output length. Backward passes are explicit
per-layer functions (no tape); every path is checked against finite
differences in the test suite.

Array shape conventions: batches are (B, L, F) time-major; convolution
weights are (k, in_channels, out_channels).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError

_NORM_EPS = 1e-12


@dataclass
class EncoderParams:
    conv1_w: np.ndarray  # (7, F, H1)
    conv1_b: np.ndarray  # (H1,)
    conv2_w: np.ndarray  # (5, H1, H2)
    conv2_b: np.ndarray  # (H2,)
    proj_w: np.ndarray  # (H2, D)
    proj_b: np.ndarray  # (D,)

    def to_dict(self) -> dict[str, np.ndarray]:
        return {
            "conv1_w": self.conv1_w,
            "conv1_b": self.conv1_b,
            "conv2_w": self.conv2_w,
            "conv2_b": self.conv2_b,
            "proj_w": self.proj_w,
            "proj_b": self.proj_b,
        }

    @classmethod
    def from_dict(cls, d: dict[str, np.ndarray]) -> "EncoderParams":
        return cls(**{k: d[k] for k in ("conv1_w", "conv1_b", "conv2_w", "conv2_b", "proj_w", "proj_b")})


@dataclass
class DecoderParams:
    fc1_w: np.ndarray  # (D, H2)
    fc1_b: np.ndarray  # (H2,)
    fc2_w: np.ndarray  # (H2, L*F)
    fc2_b: np.ndarray  # (L*F,)
    out_len: int
    out_channels: int

    def to_dict(self) -> dict[str, np.ndarray]:
        return {"fc1_w": self.fc1_w, "fc1_b": self.fc1_b, "fc2_w": self.fc2_w, "fc2_b": self.fc2_b}


def init_encoder(
    rng: np.random.Generator, channels: int, h1: int = 64, h2: int = 128, d: int = 64
) -> EncoderParams:
    """He-initialized convolutions, Xavier-scaled projection, zero biases."""
    return EncoderParams(
        conv1_w=rng.normal(0.0, np.sqrt(2.0 / (7 * channels)), size=(7, channels, h1)),
        conv1_b=np.zeros(h1),
        conv2_w=rng.normal(0.0, np.sqrt(2.0 / (5 * h1)), size=(5, h1, h2)),
        conv2_b=np.zeros(h2),
        proj_w=rng.normal(0.0, np.sqrt(1.0 / h2), size=(h2, d)),
        proj_b=np.zeros(d),
    )


def init_decoder(
    rng: np.random.Generator, d: int, h2: int, out_len: int, channels: int
) -> DecoderParams:
    return DecoderParams(
        fc1_w=rng.normal(0.0, np.sqrt(2.0 / d), size=(d, h2)),
        fc1_b=np.zeros(h2),
        fc2_w=rng.normal(0.0, np.sqrt(1.0 / h2), size=(h2, out_len * channels)),
        fc2_b=np.zeros(out_len * channels),
        out_len=out_len,
        out_channels=channels,
    )


def _pad_time(x: np.ndarray, pad: int) -> np.ndarray:
    return np.pad(x, ((0, 0), (pad, pad), (0, 0)))


def _conv_forward(xp: np.ndarray, w: np.ndarray) -> np.ndarray:
    # xp: (B, L + k - 1, Cin), w: (k, Cin, Cout) -> (B, L, Cout)
    k = w.shape[0]
    length = xp.shape[1] - k + 1
    y = np.zeros((xp.shape[0], length, w.shape[2]))
    for dt in range(k):
        y += xp[:, dt : dt + length, :] @ w[dt]
    return y


def _conv_backward(
    xp: np.ndarray, w: np.ndarray, dy: np.ndarray, need_dx: bool = True
) -> tuple[np.ndarray, np.ndarray | None]:
    k = w.shape[0]
    length = dy.shape[1]
    dw = np.zeros_like(w)
    dxp = np.zeros_like(xp) if need_dx else None
    for dt in range(k):
        seg = xp[:, dt : dt + length, :]
        dw[dt] = np.tensordot(seg, dy, axes=([0, 1], [0, 1]))
        if need_dx:
            dxp[:, dt : dt + length, :] += dy @ w[dt].T
    return dw, dxp


def encode_with_cache(params: EncoderParams, x: np.ndarray):
    """Forward pass on a (B, L, F) batch; returns (r, cache) with r (B, D)."""
    if x.ndim != 3:
        raise ShapeError(f"expected (B, L, F) batch, got shape {x.shape}")
    if x.shape[2] != params.conv1_w.shape[1]:
        raise ShapeError(
            f"input has {x.shape[2]} channels, encoder expects {params.conv1_w.shape[1]}"
        )
    p1 = params.conv1_w.shape[0] // 2
    p2 = params.conv2_w.shape[0] // 2
    xp1 = _pad_time(x, p1)
    z1 = _conv_forward(xp1, params.conv1_w) + params.conv1_b
    a1 = np.maximum(z1, 0.0)
    xp2 = _pad_time(a1, p2)
    z2 = _conv_forward(xp2, params.conv2_w) + params.conv2_b
    a2 = np.maximum(z2, 0.0)
    pooled = a2.mean(axis=1)
    z3 = pooled @ params.proj_w + params.proj_b
    norm = np.maximum(np.linalg.norm(z3, axis=1, keepdims=True), _NORM_EPS)
    r = z3 / norm
    cache = (xp1, z1, xp2, z2, pooled, z3, norm, r)
    return r, cache


def encode(params: EncoderParams, x: np.ndarray) -> np.ndarray:
    """Unit-norm representation of one (L, F) sample or a (B, L, F) batch."""
    single = x.ndim == 2
    batch = x[None] if single else x
    r, _ = encode_with_cache(params, batch)
    return r[0] if single else r


def encode_backward(params: EncoderParams, cache, d_r: np.ndarray) -> dict[str, np.ndarray]:
    """Parameter gradients of the encoder given d(loss)/d(r)."""
    xp1, z1, xp2, z2, pooled, z3, norm, r = cache
    length = z2.shape[1]
    p2 = params.conv2_w.shape[0] // 2

    dz3 = (d_r - r * np.sum(d_r * r, axis=1, keepdims=True)) / norm
    dproj_w = pooled.T @ dz3
    dproj_b = dz3.sum(axis=0)
    dpooled = dz3 @ params.proj_w.T

    da2 = np.broadcast_to(dpooled[:, None, :] / length, z2.shape)
    dz2 = da2 * (z2 > 0)
    dconv2_w, dxp2 = _conv_backward(xp2, params.conv2_w, dz2)
    dconv2_b = dz2.sum(axis=(0, 1))

    da1 = dxp2[:, p2 : p2 + length, :]
    dz1 = da1 * (z1 > 0)
    dconv1_w, _ = _conv_backward(xp1, params.conv1_w, dz1, need_dx=False)
    dconv1_b = dz1.sum(axis=(0, 1))

    return {
        "conv1_w": dconv1_w,
        "conv1_b": dconv1_b,
        "conv2_w": dconv2_w,
        "conv2_b": dconv2_b,
        "proj_w": dproj_w,
        "proj_b": dproj_b,
    }


def decode_with_cache(params: DecoderParams, r: np.ndarray):
    """Reconstruct (B, L, F) from representations (B, D)."""
    if r.ndim != 2 or r.shape[1] != params.fc1_w.shape[0]:
        raise ShapeError(f"expected (B, {params.fc1_w.shape[0]}) representations, got {r.shape}")
    zh = r @ params.fc1_w + params.fc1_b
    h = np.maximum(zh, 0.0)
    zo = h @ params.fc2_w + params.fc2_b
    out = zo.reshape(r.shape[0], params.out_len, params.out_channels)
    cache = (r, zh, h)
    return out, cache


def decode(params: DecoderParams, r: np.ndarray) -> np.ndarray:
    single = r.ndim == 1
    batch = r[None] if single else r
    out, _ = decode_with_cache(params, batch)
    return out[0] if single else out


def decode_backward(params: DecoderParams, cache, d_out: np.ndarray):
    """Returns (param grads, d_r)."""
    r, zh, h = cache
    dzo = d_out.reshape(d_out.shape[0], -1)
    dfc2_w = h.T @ dzo
    dfc2_b = dzo.sum(axis=0)
    dh = dzo @ params.fc2_w.T
    dzh = dh * (zh > 0)
    dfc1_w = r.T @ dzh
    dfc1_b = dzh.sum(axis=0)
    d_r = dzh @ params.fc1_w.T
    grads = {"fc1_w": dfc1_w, "fc1_b": dfc1_b, "fc2_w": dfc2_w, "fc2_b": dfc2_b}
    return grads, d_r


@dataclass(frozen=True)
class MaskSpec:
    """Boolean hide-mask over an (L, F) sample; True marks hidden cells."""

    ratio: float
    mask: np.ndarray


def mask_random(x: np.ndarray, ratio: float, rng: np.random.Generator):
    """Hide one contiguous time span per channel, sized to the ratio.

    Hidden positions are set to 0, the per-channel mean after
    z-normalization. The realized masked fraction is within 1/L of the
    requested ratio.
    """
    if not 0.0 <= ratio < 1.0:
        raise ShapeError(f"mask ratio {ratio} outside [0, 1)")
    length, channels = x.shape
    mask = np.zeros((length, channels), dtype=bool)
    span = int(round(ratio * length))
    if span > 0:
        for f in range(channels):
            start = int(rng.integers(0, length - span + 1))
            mask[start : start + span, f] = True
    masked = x.copy()
    masked[mask] = 0.0
    return masked, MaskSpec(ratio=ratio, mask=mask)


def recon_loss(x_hat: np.ndarray, x: np.ndarray, mask: MaskSpec | None = None) -> float:
    """Mean squared error over all positions.

    The whole signal is anchored, not just hidden cells; the mask argument
    is accepted for callers that track it alongside the loss.
    """
    if x_hat.shape != x.shape:
        raise ShapeError(f"reconstruction shape {x_hat.shape} != target shape {x.shape}")
    return float(np.mean((x_hat - x) ** 2))


def recon_loss_grad(x_hat: np.ndarray, x: np.ndarray):
    """(loss, d loss / d x_hat)."""
    loss = recon_loss(x_hat, x)
    d = 2.0 * (x_hat - x) / x_hat.size
    return loss, d


def save_checkpoint(path, arrays: dict[str, np.ndarray], meta: dict | None = None) -> None:
    """Write named parameter arrays to an ``.npz`` checkpoint (version 1)."""
    payload = {f"param/{k}": v for k, v in arrays.items()}
    payload["checkpoint_version"] = np.array(1)
    if meta:
        for k, v in meta.items():
            payload[f"meta/{k}"] = np.asarray(v)
    np.savez(path, **payload)


def load_checkpoint(path) -> dict[str, np.ndarray]:
    """Read the named parameter arrays back from an ``.npz`` checkpoint."""
    with np.load(path) as data:
        return {k[len("param/") :]: data[k] for k in data.files if k.startswith("param/")}
