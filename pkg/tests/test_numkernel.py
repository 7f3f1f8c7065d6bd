import numpy as np
import pytest

from tfec.errors import NumericError, ShapeError
from tfec.numkernel import (
    adam_init,
    adam_step,
    dft_forward,
    dft_inverse,
    grad_check,
)

CORPUS_LENGTHS = (30, 45, 51, 65, 640, 2500)


def dft_direct(signal: np.ndarray) -> np.ndarray:
    """O(T^2) summation oracle, independent of the library transform."""
    t = signal.shape[0]
    k = np.arange(t)
    basis = np.exp(-2j * np.pi * np.outer(k, k) / t)
    return basis @ signal.astype(np.complex128)


def idft_direct(spectrum: np.ndarray) -> np.ndarray:
    t = spectrum.shape[0]
    k = np.arange(t)
    basis = np.exp(2j * np.pi * np.outer(k, k) / t)
    return (basis @ spectrum) / t


class TestForward:
    def test_constant_signal_dc_only(self):
        t, c = 16, 2.5
        spec = dft_forward(np.full(t, c))
        assert abs(spec[0] - t * c) < 1e-9
        assert np.max(np.abs(spec[1:])) < 1e-9

    def test_unit_impulse_flat_spectrum(self):
        x = np.zeros(12)
        x[0] = 1.0
        spec = dft_forward(x)
        np.testing.assert_allclose(spec, np.ones(12, dtype=complex), atol=1e-12)

    def test_matches_direct_oracle_length_51(self):
        rng = np.random.default_rng(51)
        x = rng.normal(size=51)
        np.testing.assert_allclose(dft_forward(x), dft_direct(x), atol=1e-9)

    def test_hermitian_symmetry_of_real_signal(self):
        rng = np.random.default_rng(1)
        x = rng.normal(size=30)
        spec = dft_forward(x)
        idx = (-np.arange(30)) % 30
        np.testing.assert_allclose(spec, np.conj(spec[idx]), atol=1e-9)

    def test_non_finite_input_rejected(self):
        with pytest.raises(NumericError):
            dft_forward(np.array([1.0, np.nan, 2.0]))

    def test_linearity(self):
        rng = np.random.default_rng(2)
        x, y = rng.normal(size=45), rng.normal(size=45)
        a, b = 1.7, -0.3
        lhs = dft_forward(a * x + b * y)
        rhs = a * dft_forward(x) + b * dft_forward(y)
        np.testing.assert_allclose(lhs, rhs, atol=1e-9)


class TestInverse:
    @pytest.mark.parametrize("t", CORPUS_LENGTHS)
    def test_round_trip_identity(self, t):
        rng = np.random.default_rng(t)
        x = rng.normal(size=t)
        back = dft_inverse(dft_forward(x))
        assert np.max(np.abs(back - x)) < 1e-9

    def test_all_zero_spectrum(self):
        assert np.all(dft_inverse(np.zeros(8, dtype=complex)) == 0.0)

    def test_non_hermitian_spectrum_real_part_matches_oracle(self):
        rng = np.random.default_rng(9)
        spec = rng.normal(size=20) + 1j * rng.normal(size=20)
        real, residual = dft_inverse(spec, return_residual=True)
        np.testing.assert_allclose(real, idft_direct(spec).real, atol=1e-9)
        assert residual > 0.0

    def test_multichannel_round_trip(self):
        rng = np.random.default_rng(4)
        x = rng.normal(size=(65, 4))
        np.testing.assert_allclose(dft_inverse(dft_forward(x)), x, atol=1e-9)

    @pytest.mark.parametrize("t", CORPUS_LENGTHS)
    def test_parseval(self, t):
        rng = np.random.default_rng(t + 1)
        x = rng.normal(size=t)
        spec = dft_forward(x)
        time_energy = float(np.sum(x**2))
        freq_energy = float(np.sum(np.abs(spec) ** 2)) / t
        assert abs(time_energy - freq_energy) / time_energy < 1e-6


class TestAdam:
    def test_zero_gradient_leaves_params(self):
        params = {"w": np.array([1.0, -2.0])}
        state = adam_init(params)
        new, state = adam_step(params, {"w": np.zeros(2)}, state)
        np.testing.assert_array_equal(new["w"], params["w"])
        assert state.step_count == 1

    def test_single_step_closed_form(self):
        # From zeroed moments, bias correction cancels the decay factors:
        # m_hat = g, v_hat = g^2, so the update is lr * g / (|g| + eps).
        g = 0.37
        lr = 1e-3
        params = {"w": np.array([2.0])}
        state = adam_init(params, lr=lr)
        new, _ = adam_step(params, {"w": np.array([g])}, state)
        expected = 2.0 - lr * g / (abs(g) + state.eps)
        assert abs(new["w"][0] - expected) < 1e-15

    def test_quadratic_descent(self):
        # f(w) = w^2 / 2, grad = w; scalar simulation oracle.
        params = {"w": np.array([1.0])}
        state = adam_init(params, lr=0.01)
        trace = [1.0]
        for _ in range(1000):
            params, state = adam_step(params, {"w": params["w"].copy()}, state)
            trace.append(abs(float(params["w"][0])))
        assert all(b < a + 1e-12 for a, b in zip(trace[5:80], trace[6:81]))
        assert trace[-1] < 0.1

    def test_shape_mismatch(self):
        params = {"w": np.zeros(3)}
        state = adam_init(params)
        with pytest.raises(ShapeError):
            adam_step(params, {"w": np.zeros(4)}, state)

    def test_non_finite_grads_surfaced(self):
        params = {"w": np.zeros(2)}
        state = adam_init(params)
        with pytest.raises(NumericError):
            adam_step(params, {"w": np.array([np.inf, 0.0])}, state)


class TestGradCheck:
    def test_quadratic(self):
        def f(params):
            w = params["w"]
            return float(np.sum(w**2)), {"w": 2 * w}

        report = grad_check(f, {"w": np.array([0.5, -1.5, 2.0])}, rel_tol=1e-6)
        assert report.passed

    def test_constant_function(self):
        def f(params):
            return 3.0, {"w": np.zeros_like(params["w"])}

        report = grad_check(f, {"w": np.array([1.0, 2.0])}, rel_tol=1e-6)
        assert report.passed
        assert report.max_rel_error == 0.0

    def test_detects_wrong_gradient(self):
        def f(params):
            w = params["w"]
            return float(np.sum(w**2)), {"w": 3 * w}  # deliberately wrong

        report = grad_check(f, {"w": np.array([1.0])}, rel_tol=1e-3)
        assert not report.passed
