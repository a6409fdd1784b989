"""Bit mapping, transmit configuration, detection and closed-form error rates."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.special import erfc

from .arrays import (ArrayGeometry, Permutation, Subarray, phase_rotation_plan,
                     steering_vector)
from .dictionary import SymbolDictionary, build_regularized_dictionary
from .errors import ConfigError


def bits_per_symbol(scheme: str, M: int, K: int) -> int:
    """Largest bit count a scheme can carry per pulse (floor of log2 of its alphabet)."""
    if scheme == "regularized":
        return K
    if not 1 <= K <= M:
        raise ConfigError(f"need 1 <= K <= M, got M={M}, K={K}")
    L = math.comb(M, K)
    if scheme == "selection":
        return L.bit_length() - 1
    if scheme == "hybrid":
        return (L * math.factorial(K)).bit_length() - 1
    raise ConfigError(f"unknown scheme {scheme!r}")


def subrate_dictionary(dictionary: SymbolDictionary, bits: int) -> SymbolDictionary:
    """Alphabet for ``bits`` bits per symbol.

    Selection and hybrid dictionaries keep their first ``2**bits`` entries;
    the regularized scheme repeats each bit over adjacent subgroups instead.
    """
    if dictionary.scheme == "regularized":
        if bits == dictionary.Nb:
            return dictionary
        return build_regularized_dictionary(dictionary.K, bits)
    return dictionary.truncated(bits)


def bits_to_index(bits: Sequence[int]) -> int:
    out = 0
    for b in bits:
        if b not in (0, 1):
            raise ConfigError(f"bits must be 0 or 1, got {b!r}")
        out = (out << 1) | int(b)
    return out


def index_to_bits(index: int, nbits: int) -> list[int]:
    return [(index >> (nbits - 1 - i)) & 1 for i in range(nbits)]


@dataclass
class SchemeConfig:
    dictionary: SymbolDictionary
    geometry: ArrayGeometry
    theta_c: float
    prf: float = 1e4
    rotate: bool = True
    _reference: Optional[np.ndarray] = field(default=None, init=False, repr=False)

    def __post_init__(self):
        if abs(self.theta_c) > math.pi / 2:
            raise ConfigError("communication direction must lie within +-90 deg")
        if self.dictionary.M != self.geometry.M:
            raise ConfigError(
                f"dictionary built for M={self.dictionary.M}, geometry has M={self.geometry.M}"
            )
        if not self.rotate:
            if self.scheme == "regularized":
                raise ConfigError("the regularized scheme always rotates its waveforms")
            if self.theta_c == 0.0:
                warnings.warn("broadside receiver without phase rotation: every selected "
                              "subarray gives the all-ones vector", stacklevel=2)

    @property
    def scheme(self) -> str:
        return self.dictionary.scheme

    @property
    def Nb(self) -> int:
        return self.dictionary.Nb

    @property
    def reference(self) -> np.ndarray:
        """(L, K) matrix of the vectors the detector compares against."""
        if self._reference is None:
            if self.rotate:
                self._reference = self.dictionary.vectors
            else:
                a = steering_vector(self.geometry, self.theta_c)
                self._reference = np.array([a[list(c.ordered)] for c in self.dictionary])
        return self._reference


@dataclass(frozen=True)
class TransmitSpec:
    """Antenna driven by each waveform plus the per-waveform phase rotation."""

    ordered: tuple[int, ...]
    M: int
    rotations: np.ndarray

    def __post_init__(self):
        if len(self.rotations) != len(self.ordered):
            raise ConfigError("one rotation per waveform is required")
        if np.max(np.abs(np.abs(self.rotations) - 1.0)) > 1e-9:
            raise ConfigError("rotations must be unit-modulus")

    @property
    def sub(self) -> Subarray:
        return Subarray(tuple(sorted(self.ordered)))

    def selection_matrix(self) -> np.ndarray:
        return self.sub.selection_matrix(self.M)

    def permutation(self) -> Permutation:
        order = self.sub.indices
        return Permutation(tuple(order.index(a) for a in self.ordered))

    def mixing_matrix(self) -> np.ndarray:
        """``Q P``: row k selects the antenna driven by waveform k."""
        return self.permutation().matrix() @ self.selection_matrix()


def encode(cfg: SchemeConfig, bits: Sequence[int]) -> TransmitSpec:
    if len(bits) != cfg.Nb:
        raise ConfigError(f"expected {cfg.Nb} bits, got {len(bits)}")
    index = bits_to_index(bits)
    if index >= len(cfg.dictionary):
        raise ConfigError(f"symbol index {index} outside the dictionary")
    return encode_index(cfg, index)


def encode_index(cfg: SchemeConfig, index: int) -> TransmitSpec:
    cw = cfg.dictionary[index]
    ordered = cw.ordered
    K = len(ordered)
    geo = cfg.geometry
    if not cfg.rotate:
        rotations = np.ones(K, dtype=complex)
    elif cfg.scheme == "regularized":
        # bit 0 -> total phase 0, bit 1 -> total phase pi
        bit = np.array([a % 2 for a in ordered])
        pos = np.asarray(ordered) * geo.spacing
        rotations = np.exp(1j * (np.pi * bit - 2 * np.pi * pos * math.sin(cfg.theta_c)))
    else:
        rotations = phase_rotation_plan(geo, cfg.theta_c).u[list(ordered)]
    return TransmitSpec(tuple(ordered), geo.M, rotations)


def comm_observation(spec: TransmitSpec, cfg: SchemeConfig, channel_gain: complex = 1.0,
                     theta: Optional[float] = None) -> np.ndarray:
    """Noiseless matched-filter output toward ``theta`` (default: the design angle)."""
    a = steering_vector(cfg.geometry, cfg.theta_c if theta is None else theta)
    return channel_gain * spec.rotations * a[list(spec.ordered)]


@dataclass
class Detection:
    index: int
    bits: list[int]
    distance: float
    margin: float


def decode_nearest(cfg: SchemeConfig, y: np.ndarray, channel_gain: complex = 1.0) -> Detection:
    """Minimum-Euclidean-distance detection after removing the channel gain.

    Equidistant candidates resolve to the lowest bit index.
    """
    if channel_gain == 0:
        raise ConfigError("channel gain must be nonzero")
    a_hat = np.asarray(y) / channel_gain
    d2 = np.round(np.sum(np.abs(cfg.reference - a_hat[None, :]) ** 2, axis=1), 12)
    order = np.argsort(d2, kind="stable")
    best = int(order[0])
    margin = float(np.sqrt(d2[order[1]]) - np.sqrt(d2[best])) if len(d2) > 1 else math.inf
    return Detection(best, index_to_bits(best, cfg.Nb), float(np.sqrt(d2[best])), margin)


def decode_regularized(cfg: SchemeConfig, y: np.ndarray, channel_gain: complex = 1.0) -> list[int]:
    """Per-bit phase decision: bit 0 when the compensated sample points toward phase 0.

    Bits repeated over several subgroups are decided on the summed real parts.
    """
    if cfg.scheme != "regularized":
        raise ConfigError("phase detection applies to the regularized scheme only")
    if channel_gain == 0:
        raise ConfigError("channel gain must be nonzero")
    re = (np.asarray(y) / channel_gain).real
    rep = cfg.dictionary.K // cfg.Nb
    block = re.reshape(cfg.Nb, rep).sum(axis=1)
    return [0 if v >= 0 else 1 for v in block]


def mpsk_symbol_error(rho, gamma):
    """``erfc(sqrt(rho) sin(gamma/2))`` clipped to [0, 1]."""
    rho = np.asarray(rho, dtype=float)
    if np.any(rho < 0):
        raise ConfigError("SNR must be non-negative")
    if not 0 < gamma < 2 * math.pi:
        raise ConfigError("angular separation must lie in (0, 2 pi)")
    out = np.clip(erfc(np.sqrt(rho) * math.sin(gamma / 2)), 0.0, 1.0)
    return float(out) if out.ndim == 0 else out


def selection_ser_bound(rho, M: int, K: int):
    """Upper bound ``1 - (1 - Q(rho, 2 pi / M))**K`` on the selection-scheme SER."""
    q = mpsk_symbol_error(rho, 2 * math.pi / M)
    return 1.0 - (1.0 - q) ** K


def regularized_error_rates(rho, K: int):
    """(BER, SER) of the regularized scheme: ``erfc(sqrt(rho))`` and ``1 - (1 - BER)**K``."""
    ber = mpsk_symbol_error(rho, math.pi)
    return ber, 1.0 - (1.0 - ber) ** K


def antipodal_ber(rho):
    """Exact bit error probability of +-1 signalling with per-branch SNR ``rho``."""
    out = 0.5 * erfc(np.sqrt(np.asarray(rho, dtype=float)))
    return float(out) if np.ndim(out) == 0 else out


def theory_ser_bound(scheme: str, rho, M: int, K: int):
    """Closed-form SER bound used as the reference curve for each scheme."""
    if scheme == "regularized":
        return regularized_error_rates(rho, K)[1]
    return selection_ser_bound(rho, M, K)
