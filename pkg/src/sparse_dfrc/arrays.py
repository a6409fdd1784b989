"""Transmit/receive array geometry, steering vectors and phase rotation plans.

Antenna ``m`` of the candidate grid sits at position ``m * spacing`` (in
wavelengths) with ``m = 0 .. M-1``.  All angles are radians.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigError

UNIT_TOL = 1e-12


@dataclass(frozen=True)
class ArrayGeometry:
    """Uniform grid of ``M`` candidate transmit antennas."""

    M: int
    spacing: float = 0.25

    def __post_init__(self):
        if int(self.M) != self.M or self.M < 2:
            raise ConfigError(f"need at least 2 candidate antennas, got M={self.M}")
        if not self.spacing > 0:
            raise ConfigError(f"element spacing must be positive, got {self.spacing}")

    @property
    def positions(self) -> np.ndarray:
        """Element positions in wavelengths."""
        return np.arange(self.M) * self.spacing


@dataclass(frozen=True)
class ReceiveArray:
    """Radar receive array; positions are in wavelengths."""

    positions: tuple[float, ...]

    def __post_init__(self):
        pos = tuple(float(p) for p in self.positions)
        object.__setattr__(self, "positions", pos)
        if len(pos) < 1:
            raise ConfigError("receive array needs at least one antenna")
        if any(b <= a for a, b in zip(pos, pos[1:])):
            raise ConfigError("receive positions must be strictly increasing")

    @classmethod
    def ula(cls, N: int = 10, spacing: float = 0.5) -> "ReceiveArray":
        return cls(tuple(np.arange(N) * spacing))

    @property
    def N(self) -> int:
        return len(self.positions)

    def steering(self, theta: float) -> np.ndarray:
        return np.exp(2j * np.pi * np.asarray(self.positions) * math.sin(theta))


@dataclass(frozen=True)
class Subarray:
    """Ascending indices of the ``K`` active antennas."""

    indices: tuple[int, ...]

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        object.__setattr__(self, "indices", idx)
        if not idx:
            raise ConfigError("a subarray needs at least one antenna")
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ConfigError(f"subarray indices must be strictly increasing: {idx}")
        if idx[0] < 0:
            raise ConfigError(f"negative antenna index in {idx}")

    @property
    def K(self) -> int:
        return len(self.indices)

    def check(self, M: int) -> None:
        if self.indices[-1] >= M:
            raise ConfigError(f"antenna index {self.indices[-1]} out of range for M={M}")

    def selection_matrix(self, M: int) -> np.ndarray:
        """Canonical K x M selection matrix (rows in ascending antenna order)."""
        self.check(M)
        P = np.zeros((self.K, M), dtype=int)
        P[np.arange(self.K), self.indices] = 1
        return P


@dataclass(frozen=True)
class Permutation:
    """Waveform-to-antenna reordering: waveform ``k`` uses the ``perm[k]``-th selected antenna."""

    perm: tuple[int, ...]

    def __post_init__(self):
        p = tuple(int(i) for i in self.perm)
        object.__setattr__(self, "perm", p)
        if sorted(p) != list(range(len(p))):
            raise ConfigError(f"not a permutation: {p}")

    @classmethod
    def identity(cls, K: int) -> "Permutation":
        return cls(tuple(range(K)))

    @property
    def is_identity(self) -> bool:
        return self.perm == tuple(range(len(self.perm)))

    def matrix(self) -> np.ndarray:
        K = len(self.perm)
        Q = np.zeros((K, K), dtype=int)
        Q[np.arange(K), self.perm] = 1
        return Q

    def apply(self, values: Sequence):
        return [values[i] for i in self.perm]


@dataclass(frozen=True)
class PhasePlan:
    """Per-antenna phase rotations, stored as angles."""

    phases: np.ndarray

    @property
    def u(self) -> np.ndarray:
        return np.exp(1j * self.phases)


def steering_vector(geometry: ArrayGeometry, theta: float) -> np.ndarray:
    """Full-array transmit steering vector ``exp(j 2 pi d m sin(theta))``."""
    if abs(theta) > math.pi / 2 + 1e-12:
        raise ConfigError(f"angle {math.degrees(theta):.4f} deg outside [-90, 90]")
    return np.exp(2j * np.pi * geometry.positions * math.sin(theta))


def subarray_steering(geometry: ArrayGeometry, sub: Subarray, theta: float) -> np.ndarray:
    sub.check(geometry.M)
    return steering_vector(geometry, theta)[list(sub.indices)]


def maximal_spread_angle(geometry: ArrayGeometry) -> float:
    """Angle where the M element phases spread uniformly around the circle."""
    arg = 1.0 / (geometry.M * geometry.spacing)
    if arg > 1.0:
        raise ConfigError(
            f"no real maximal spread angle: M*d = {geometry.M * geometry.spacing} < 1"
        )
    return math.asin(arg)


def ambiguity_angles(geometry: ArrayGeometry) -> list[float]:
    """All angles at which two candidate antennas share a phase modulo 2 pi."""
    out = []
    for m in range(1, geometry.M):
        arg = 1.0 / ((geometry.M - m) * geometry.spacing)
        if arg <= 1.0:
            out.append(math.asin(arg))
    return sorted(out)


def phase_rotation_plan(geometry: ArrayGeometry, theta_c: float) -> PhasePlan:
    """Rotations mapping ``a(theta_c)`` onto the M-th roots of unity."""
    m = np.arange(geometry.M)
    phases = 2 * np.pi * m / geometry.M - 2 * np.pi * geometry.spacing * m * math.sin(theta_c)
    return PhasePlan(phases)


def rotated_symbol(indices: Sequence[int], M: int) -> np.ndarray:
    """Post-rotation codeword: entry k is ``exp(j 2 pi l_k / M)``.

    ``indices`` may be in any order (a permuted subarray is allowed).
    """
    idx = np.asarray(indices, dtype=float)
    return np.exp(2j * np.pi * idx / M)
