"""Discrete orthonormal waveform bank and matched filtering."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class WaveformBank:
    """``K`` orthonormal waveforms sampled at ``Ns`` fast-time points (one per row)."""

    samples: np.ndarray

    @property
    def K(self) -> int:
        return self.samples.shape[0]

    @property
    def Ns(self) -> int:
        return self.samples.shape[1]

    def gram(self) -> np.ndarray:
        return self.samples @ self.samples.conj().T

    def transmit(self, coefficients: np.ndarray) -> np.ndarray:
        """Superpose the waveforms with the given complex weights (``c^T Psi``).

        ``coefficients`` may be a single length-K vector or a batch of shape (..., K).
        """
        return np.asarray(coefficients) @ self.samples


def build_waveform_bank(K: int, Ns: int) -> WaveformBank:
    """First ``K`` rows of the unitary DFT over ``Ns`` points."""
    if K < 1 or Ns < K:
        raise ConfigError(f"need 1 <= K <= Ns, got K={K}, Ns={Ns}")
    n = np.arange(Ns)
    k = np.arange(K)[:, None]
    samples = np.exp(-2j * np.pi * k * n / Ns) / np.sqrt(Ns)
    return WaveformBank(samples)


def matched_filter(received: np.ndarray, bank: WaveformBank) -> np.ndarray:
    """Correlate the received samples with every waveform.

    Accepts a single length-Ns vector or a batch of shape (..., Ns).
    """
    received = np.asarray(received)
    if received.shape[-1] != bank.Ns:
        raise ConfigError(f"received length {received.shape[-1]} != Ns={bank.Ns}")
    return received @ bank.samples.conj().T


def rotate_bank(bank: WaveformBank, rotations: np.ndarray) -> WaveformBank:
    """Scale row k by the unit-modulus ``rotations[k]``; orthonormality is kept."""
    rotations = np.asarray(rotations, dtype=complex)
    if rotations.shape != (bank.K,):
        raise ConfigError(f"expected {bank.K} rotations, got shape {rotations.shape}")
    if np.max(np.abs(np.abs(rotations) - 1.0)) > 1e-9:
        raise ConfigError("phase rotations must be unit-modulus")
    return WaveformBank(rotations[:, None] * bank.samples)
