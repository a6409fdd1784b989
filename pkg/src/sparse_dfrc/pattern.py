"""MIMO virtual-array beampatterns and minimax mainlobe-ripple weight design."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional

import cvxpy as cp
import numpy as np

from .arrays import ArrayGeometry, ReceiveArray, Subarray, subarray_steering
from .errors import ConfigError, InfeasibleError

# virtual positions closer than this are merged
_POSITION_DECIMALS = 9


@dataclass(frozen=True)
class PatternGrid:
    """Sampled mainlobe sector and sidelobe region (radians)."""

    mainlobe: np.ndarray
    sidelobe: np.ndarray
    sector: tuple[float, float]
    guard: float

    def __post_init__(self):
        if np.intersect1d(np.round(self.mainlobe, 12), np.round(self.sidelobe, 12)).size:
            raise ConfigError("mainlobe and sidelobe samples overlap")

    @classmethod
    def build(cls, min_deg: float = -10.0, max_deg: float = 10.0, step_deg: float = 0.5,
              guard_deg: float = 8.0) -> "PatternGrid":
        if not min_deg < max_deg:
            raise ConfigError(f"empty mainlobe sector [{min_deg}, {max_deg}]")
        deg = _grid_deg(step_deg)
        main = deg[(deg >= min_deg - 1e-9) & (deg <= max_deg + 1e-9)]
        side = deg[(deg < min_deg - guard_deg + 1e-9) | (deg > max_deg + guard_deg - 1e-9)]
        return cls(np.radians(main), np.radians(side),
                   (math.radians(min_deg), math.radians(max_deg)), math.radians(guard_deg))

    def refined(self, step_deg: float) -> "PatternGrid":
        """Same sector and guard band sampled at another resolution."""
        lo, hi = (math.degrees(t) for t in self.sector)
        return PatternGrid.build(lo, hi, step_deg, math.degrees(self.guard))

    @property
    def angles(self) -> np.ndarray:
        return np.sort(np.concatenate([self.mainlobe, self.sidelobe]))


def _grid_deg(step_deg: float) -> np.ndarray:
    n = int(round(90.0 / step_deg))
    if not math.isclose(n * step_deg, 90.0, rel_tol=0, abs_tol=1e-9):
        raise ConfigError(f"grid step {step_deg} deg must divide 90 deg")
    return np.arange(-n, n + 1) * step_deg


def reporting_angles(step_deg: float = 0.1) -> np.ndarray:
    return np.radians(_grid_deg(step_deg))


def virtual_positions(sub: Subarray, geometry: ArrayGeometry, receive: ReceiveArray) -> np.ndarray:
    """Virtual element positions, ordered like the Kronecker product (transmit-major)."""
    sub.check(geometry.M)
    tx = geometry.positions[list(sub.indices)]
    return (tx[:, None] + np.asarray(receive.positions)[None, :]).ravel()


def virtual_steering(sub: Subarray, geometry: ArrayGeometry, receive: ReceiveArray,
                     theta: float) -> np.ndarray:
    return np.kron(subarray_steering(geometry, sub, theta), receive.steering(theta))


def pattern_values(w: np.ndarray, positions: np.ndarray, angles: np.ndarray) -> np.ndarray:
    """Complex response ``w^H c(theta)`` for virtual elements at ``positions``."""
    C = np.exp(2j * np.pi * np.outer(np.sin(angles), positions))
    return C @ np.conj(w)


@dataclass
class Beampattern:
    angles: np.ndarray
    gain: np.ndarray
    gain_db: np.ndarray


def beampattern(w: np.ndarray, sub: Subarray, geometry: ArrayGeometry, receive: ReceiveArray,
                angles: np.ndarray, mainlobe: Optional[tuple[float, float]] = None) -> Beampattern:
    """``|w^H c(theta)|`` on ``angles`` plus dB values normalized to the mainlobe peak.

    Without ``mainlobe`` the normalization uses the global peak.
    """
    angles = np.asarray(angles, dtype=float)
    gain = np.abs(pattern_values(w, virtual_positions(sub, geometry, receive), angles))
    if mainlobe is None:
        ref = gain.max(initial=0.0)
    else:
        inside = (angles >= mainlobe[0] - 1e-12) & (angles <= mainlobe[1] + 1e-12)
        ref = gain[inside].max(initial=0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        gain_db = 20 * np.log10(gain / ref) if ref > 0 else np.full_like(gain, -np.inf)
    return Beampattern(angles, gain, gain_db)


PhaseProfile = Callable[[np.ndarray], np.ndarray]


def zero_phase(theta: np.ndarray) -> np.ndarray:
    return np.zeros_like(theta)


def linear_phase(center: float, slope: float) -> PhaseProfile:
    """Phase profile ``slope * (sin(theta) - sin(center))``."""
    return lambda theta: slope * (np.sin(theta) - math.sin(center))


@dataclass
class MinimaxDesign:
    weights: np.ndarray
    ripple: float
    sidelobe_peak: float  # max |w^H c| over the design sidelobe grid
    support: tuple[float, ...] = field(repr=False, default=())


def support_key(sub: Subarray, geometry: ArrayGeometry, receive: ReceiveArray) -> tuple[float, ...]:
    """Distinct virtual positions; subarrays sharing a key have identical achievable patterns."""
    return tuple(np.unique(np.round(virtual_positions(sub, geometry, receive), _POSITION_DECIMALS)))


@lru_cache(maxsize=8192)
def _solve_support(support: tuple[float, ...], main: tuple[float, ...], side: tuple[float, ...],
                   target: tuple[complex, ...], eps: float):
    pos = np.asarray(support)
    Em = np.exp(2j * np.pi * np.outer(np.sin(main), pos))
    Es = np.exp(2j * np.pi * np.outer(np.sin(side), pos))
    h = cp.Variable(len(pos), complex=True)  # h = conj(effective weights)
    rho = cp.Variable()
    cons = [cp.abs(Em @ h - np.asarray(target)) <= rho, cp.abs(Es @ h) <= eps]
    prob = cp.Problem(cp.Minimize(rho), cons)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        prob.solve(solver=cp.CLARABEL)
    if prob.status not in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE) or h.value is None:
        raise InfeasibleError(f"minimax design failed: solver status {prob.status}")
    hv = np.asarray(h.value)
    # re-measured, not read back from the solver
    achieved = float(np.max(np.abs(Em @ hv - np.asarray(target))))
    return hv, achieved


def design_minimax_weights(sub: Subarray, geometry: ArrayGeometry, receive: ReceiveArray,
                           grid: PatternGrid, sidelobe_eps: float,
                           phase_profile: PhaseProfile = zero_phase) -> MinimaxDesign:
    """Weights minimizing the peak mainlobe deviation from ``exp(j mu(theta))``.

    Sidelobes are held at or below ``sidelobe_eps`` on ``grid.sidelobe``.  The
    problem is solved over the distinct virtual positions (coincident virtual
    elements add up), then spread evenly over the coincident elements, which is
    the minimum-norm full weight vector with the same pattern.

    Raises
    ------
    InfeasibleError
        If the sidelobe level forces the mainlobe to vanish (ripple of 1).
    """
    if not sidelobe_eps > 0:
        raise ConfigError("sidelobe level must be positive")
    pos = np.round(virtual_positions(sub, geometry, receive), _POSITION_DECIMALS)
    uniq, inverse, counts = np.unique(pos, return_inverse=True, return_counts=True)
    target = np.exp(1j * phase_profile(grid.mainlobe))
    hv, ripple = _solve_support(tuple(uniq), tuple(grid.mainlobe), tuple(grid.sidelobe),
                                tuple(target), float(sidelobe_eps))
    if ripple >= 1.0 - 1e-9:
        raise InfeasibleError(
            f"subarray {sub.indices}: sidelobe level {sidelobe_eps:g} leaves no mainlobe"
        )
    g = np.conj(hv)
    w = g[inverse] / counts[inverse]
    side = np.abs(pattern_values(w, pos, grid.sidelobe))
    return MinimaxDesign(w, ripple, float(side.max(initial=0.0)), tuple(uniq))


def sidelobe_peak_db(w: np.ndarray, sub: Subarray, geometry: ArrayGeometry,
                     receive: ReceiveArray, grid: PatternGrid, step_deg: float = 0.1) -> float:
    """Peak sidelobe on a fine reporting grid, in dB relative to the mainlobe peak."""
    fine = grid.refined(step_deg)
    angles = fine.angles
    bp = beampattern(w, sub, geometry, receive, angles, mainlobe=grid.sector)
    side = np.isin(np.round(angles, 12), np.round(fine.sidelobe, 12))
    return float(bp.gain_db[side].max())


def ripple_metric(sub: Subarray, geometry: ArrayGeometry, receive: ReceiveArray,
                  grid: PatternGrid, sidelobe_eps: float,
                  phase_profile: PhaseProfile = zero_phase,
                  verify_step_deg: Optional[float] = 0.1) -> Optional[float]:
    """Achieved minimax ripple, or ``None`` when the sidelobe requirement fails.

    With ``verify_step_deg`` set, the design is re-checked on that finer grid
    and rejected when any sidelobe sample exceeds ``sidelobe_eps`` relative to
    the mainlobe peak.
    """
    try:
        design = design_minimax_weights(sub, geometry, receive, grid, sidelobe_eps, phase_profile)
    except InfeasibleError:
        return None
    if verify_step_deg is not None:
        limit_db = 20 * math.log10(sidelobe_eps)
        if sidelobe_peak_db(design.weights, sub, geometry, receive, grid, verify_step_deg) > limit_db:
            return None
    return design.ripple
