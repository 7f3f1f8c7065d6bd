"""Numerical substrate: discrete Fourier transforms, Adam, gradient checks.

Transforms follow plain DFT semantics, ``bin[k] = sum_t x[t] exp(-2i pi k t / T)``,
for arbitrary T (corpus lengths range from 30 to 2500, so no power-of-two
assumption). They are computed with numpy's FFT, which implements exactly
these semantics; the test suite checks them against a direct O(T^2)
summation oracle.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NumericError, ShapeError

Params = dict[str, np.ndarray]


def dft_forward(signal: np.ndarray) -> np.ndarray:
    """DFT along the time axis (axis 0) of a real signal.

    Accepts shape (T,) or (T, F); returns a complex array of the same
    shape. Spectra of real signals are Hermitian-symmetric.
    """
    signal = np.asarray(signal, dtype=np.float64)
    if not np.all(np.isfinite(signal)):
        raise NumericError("non-finite values in transform input")
    return np.fft.fft(signal, axis=0)


def dft_inverse(spectrum: np.ndarray, return_residual: bool = False):
    """Inverse DFT along axis 0, keeping the real part.

    The discarded imaginary residual is returned as a fraction of total
    signal energy when ``return_residual`` is set. A Hermitian input
    spectrum must invert to a real signal; if it does not, something is
    numerically wrong and a :class:`NumericError` is raised.
    """
    spectrum = np.asarray(spectrum, dtype=np.complex128)
    if not np.all(np.isfinite(spectrum)):
        raise NumericError("non-finite values in spectrum")
    full = np.fft.ifft(spectrum, axis=0)
    real = full.real.copy()
    energy = float(np.sum(np.abs(full) ** 2))
    residual = float(np.sum(full.imag**2)) / energy if energy > 0 else 0.0
    if residual > 1e-6 and _is_hermitian(spectrum):
        raise NumericError(f"imaginary residual {residual:.3e} from a Hermitian spectrum")
    if return_residual:
        return real, residual
    return real


def _is_hermitian(spectrum: np.ndarray, tol: float = 1e-9) -> bool:
    t = spectrum.shape[0]
    conj_rev = np.conj(spectrum[(-np.arange(t)) % t])
    scale = np.max(np.abs(spectrum)) or 1.0
    return bool(np.max(np.abs(spectrum - conj_rev)) <= tol * scale)


@dataclass
class AdamState:
    """Adam moments and hyper-parameters for a named parameter set."""

    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step_count: int = 0
    first_moment: Params = field(default_factory=dict)
    second_moment: Params = field(default_factory=dict)


def adam_init(params: Params, lr: float = 1e-3, beta1: float = 0.9,
              beta2: float = 0.999, eps: float = 1e-8) -> AdamState:
    return AdamState(
        lr=lr,
        beta1=beta1,
        beta2=beta2,
        eps=eps,
        step_count=0,
        first_moment={k: np.zeros_like(v) for k, v in params.items()},
        second_moment={k: np.zeros_like(v) for k, v in params.items()},
    )


def adam_step(params: Params, grads: Params, state: AdamState) -> tuple[Params, AdamState]:
    """One bias-corrected Adam update. Returns new params and state."""
    for key, p in params.items():
        if key not in grads:
            raise ShapeError(f"missing gradient for parameter '{key}'")
        if grads[key].shape != p.shape:
            raise ShapeError(
                f"gradient shape {grads[key].shape} != parameter shape {p.shape} for '{key}'"
            )
        if not np.all(np.isfinite(grads[key])):
            raise NumericError(f"non-finite gradient for parameter '{key}'")

    t = state.step_count + 1
    new_params: Params = {}
    m_new: Params = {}
    v_new: Params = {}
    for key, p in params.items():
        g = grads[key]
        m = state.beta1 * state.first_moment[key] + (1 - state.beta1) * g
        v = state.beta2 * state.second_moment[key] + (1 - state.beta2) * g * g
        m_hat = m / (1 - state.beta1**t)
        v_hat = v / (1 - state.beta2**t)
        new_params[key] = p - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
        m_new[key] = m
        v_new[key] = v
    new_state = AdamState(
        lr=state.lr,
        beta1=state.beta1,
        beta2=state.beta2,
        eps=state.eps,
        step_count=t,
        first_moment=m_new,
        second_moment=v_new,
    )
    return new_params, new_state


@dataclass
class GradCheckReport:
    max_rel_error: float
    passed: bool
    per_param: dict[str, float]


def grad_check(f, params: Params, rel_tol: float = 1e-3) -> GradCheckReport:
    """Compare analytic gradients against central finite differences.

    ``f(params)`` must return ``(loss, grads)`` with grads shaped like
    params. Uses per-coordinate step ``h = 1e-4 * max(1, |w|)`` and reports
    the max relative error ``|fd - an| / max(|fd|, |an|, 1e-6)``.
    """
    _, analytic = f(params)
    per_param: dict[str, float] = {}
    worst = 0.0
    for key, p in params.items():
        fd = np.zeros_like(p)
        flat = p.ravel()
        fd_flat = fd.ravel()
        for idx in range(flat.size):
            w = flat[idx]
            h = 1e-4 * max(1.0, abs(w))
            flat[idx] = w + h
            up, _ = f(params)
            flat[idx] = w - h
            down, _ = f(params)
            flat[idx] = w
            fd_flat[idx] = (up - down) / (2 * h)
        an = analytic[key]
        denom = np.maximum(np.maximum(np.abs(fd), np.abs(an)), 1e-6)
        err = float(np.max(np.abs(fd - an) / denom)) if p.size else 0.0
        per_param[key] = err
        worst = max(worst, err)
    return GradCheckReport(max_rel_error=worst, passed=worst < rel_tol, per_param=per_param)
