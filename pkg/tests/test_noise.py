"""Tests for embedding noise injection."""

import numpy as np
import pytest

from lago.errors import DataError
from lago.services.noise import NoiseMechanism, inject_noise, parse_mechanism


class TestParseMechanism:
    """Test mechanism names."""

    def test_names(self):
        """Test known names, case-insensitively."""
        assert parse_mechanism("Gaussian") is NoiseMechanism.GAUSSIAN
        assert parse_mechanism(NoiseMechanism.LAPLACE) is NoiseMechanism.LAPLACE

    def test_unknown(self):
        """Test unknown names raise DataError."""
        with pytest.raises(DataError, match="Unknown noise mechanism"):
            parse_mechanism("uniform")


class TestInjectNoise:
    """Test additive noise."""

    def test_zero_scale_is_identity(self):
        """Test scale 0 returns the input values."""
        E = np.arange(6.0).reshape(2, 3)
        assert np.array_equal(inject_noise(E, "gaussian", 0.0, 1), E)

    def test_none_mechanism(self):
        """Test mechanism none ignores the scale."""
        E = np.ones((2, 2))
        assert np.array_equal(inject_noise(E, "none", 5.0, 1), E)

    def test_deterministic(self):
        """Test the same seed gives the same noise."""
        E = np.zeros((4, 3))
        a = inject_noise(E, "laplace", 0.5, (3, 0, 1))
        b = inject_noise(E, "laplace", 0.5, (3, 0, 1))
        assert np.array_equal(a, b)
        assert not np.array_equal(a, inject_noise(E, "laplace", 0.5, (3, 1, 1)))

    def test_input_untouched(self):
        """Test the input matrix is not modified."""
        E = np.zeros((3, 3))
        inject_noise(E, "gaussian", 1.0, 0)
        assert not E.any()

    @pytest.mark.parametrize("mechanism, expected_std", [("gaussian", 0.2), ("laplace", 0.2 * np.sqrt(2))])
    def test_scale(self, mechanism, expected_std):
        """Test the empirical spread matches the mechanism."""
        noisy = inject_noise(np.zeros((200, 100)), mechanism, 0.2, 9)
        assert np.std(noisy) == pytest.approx(expected_std, rel=0.05)
        assert abs(np.mean(noisy)) < 0.02

    @pytest.mark.parametrize("scale", [-0.1, float("inf"), float("nan")])
    def test_invalid_scale(self, scale):
        """Test negative and non-finite scales raise DataError."""
        with pytest.raises(DataError):
            inject_noise(np.zeros((1, 1)), "gaussian", scale, 0)
