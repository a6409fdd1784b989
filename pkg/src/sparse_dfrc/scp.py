"""Sequential convex programming for symbol subset selection.

Both selectors relax the boolean selection to the unit box and add the
boolean-promoting term ``mu * z^T (z - 1)``, which is convex and therefore
linearized at the current iterate as ``mu * (2 z_k - 1)^T z`` (constant
dropped).  A run ends once the iterate is boolean and stationary or after
``max_iter`` subproblems; a fractional end point is reported as failure and
the caller restarts from a new random point.

The communication selector works on the relaxed K x M selection matrix P
rather than on z = 1^T P alone: the detector distance between two codewords
depends on which antenna lands on which waveform slot, and ``P a`` is linear
in P, so the distance constraints linearize exactly like the penalty.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import cvxpy as cp
import numpy as np
from scipy.optimize import linprog

from .arrays import ArrayGeometry, ReceiveArray, Subarray
from .dictionary import SymbolDictionary, analytic_extreme_pair, make_codeword
from .errors import ConfigError, InfeasibleError, NotBooleanError
from .pattern import PatternGrid, PhaseProfile, ripple_metric, virtual_positions, zero_phase

BOOL_TOL = 1e-6
MAX_WEIGHT = 1e3  # larger penalty weights upset the LP/conic solvers numerically


def is_boolean(x: np.ndarray, tol: float = BOOL_TOL) -> bool:
    x = np.asarray(x)
    return bool(np.all(np.minimum(np.abs(x), np.abs(x - 1.0)) <= tol))


@dataclass
class CommSelection:
    P: np.ndarray  # relaxed K x M selection matrix at the last iterate
    nu: float  # true minimum squared distance to the chosen codewords at P
    iterations: int
    boolean: bool

    @property
    def z(self) -> np.ndarray:
        return self.P.sum(axis=0)

    @property
    def indices(self) -> tuple[int, ...]:
        return tuple(int(i) for i in np.argmax(self.P, axis=1))


def _random_feasible_P(M: int, K: int, rng: np.random.Generator, n_mix: int = 4) -> np.ndarray:
    P = np.zeros((K, M))
    weights = rng.dirichlet(np.ones(n_mix))
    for w in weights:
        idx = np.sort(rng.choice(M, size=K, replace=False))
        P[np.arange(K), idx] += w
    return P


def _min_distance_P(P: np.ndarray, a: np.ndarray, chosen: np.ndarray) -> float:
    v = P @ a
    return float(np.min(np.sum(np.abs(chosen - v[None, :]) ** 2, axis=1)))


def scp_comm_relaxed(M: int, K: int, chosen: Sequence[Sequence[int]], mu: float = 0.1,
                     max_iter: int = 50, rng: Optional[np.random.Generator] = None,
                     init: Optional[np.ndarray] = None,
                     mu_growth: float = 1.0) -> CommSelection:
    """Run the linearized max-min-distance iteration and return the last iterate.

    ``mu_growth`` > 1 multiplies the penalty weight after every subproblem.
    """
    if mu < 0:
        raise ConfigError("trade-off mu must be non-negative")
    if mu_growth < 1:
        raise ConfigError("mu_growth must be at least 1")
    if not 1 <= K <= M:
        raise ConfigError(f"need 1 <= K <= M, got M={M}, K={K}")
    if not chosen:
        raise ConfigError("at least one already-chosen codeword is required")
    rng = np.random.default_rng() if rng is None else rng
    a = np.exp(2j * np.pi * np.arange(M) / M)
    targets = np.array([np.exp(2j * np.pi * np.asarray(c) / M) for c in chosen])
    n = K * M

    # fixed constraints on x = [vec(P), nu]
    A_eq = np.zeros((K, n + 1))
    for k in range(K):
        A_eq[k, k * M:(k + 1) * M] = 1.0
    b_eq = np.ones(K)
    fixed_ub = []
    for m in range(M):
        row = np.zeros(n + 1)
        row[m:n:M] = 1.0
        fixed_ub.append((row, 1.0))
    pos = np.arange(M, dtype=float)
    for k in range(K - 1):
        row = np.zeros(n + 1)
        row[k * M:(k + 1) * M] = pos
        row[(k + 1) * M:(k + 2) * M] = -pos
        fixed_ub.append((row, -1.0))
    bounds = [(0.0, 1.0)] * n + [(None, None)]

    P = _random_feasible_P(M, K, rng) if init is None else np.asarray(init, dtype=float).copy()
    it = 0
    weight = mu
    for it in range(1, max_iter + 1):
        rows = [r for r, _ in fixed_ub]
        rhs = [b for _, b in fixed_ub]
        v = P @ a
        for q in targets:
            resid = v - q
            f0 = float(np.sum(np.abs(resid) ** 2))
            grad = 2 * np.real(np.conj(resid)[:, None] * a[None, :])  # d f / d P
            # nu <= f0 + <grad, P - P0>
            row = np.concatenate([-grad.ravel(), [1.0]])
            rows.append(row)
            rhs.append(f0 - float(np.sum(grad * P)))
        c = np.concatenate([-weight * (2 * P - 1).ravel(), [-1.0]])
        weight = min(weight * mu_growth, MAX_WEIGHT)
        res = linprog(c, A_ub=np.array(rows), b_ub=np.array(rhs), A_eq=A_eq, b_eq=b_eq,
                      bounds=bounds, method="highs")
        if res.status != 0:
            raise InfeasibleError(f"selection subproblem failed: {res.message}")
        new = np.clip(res.x[:n].reshape(K, M), 0.0, 1.0)
        step = float(np.max(np.abs(new - P)))
        P = new
        if is_boolean(P) and step <= BOOL_TOL:
            break
    return CommSelection(P, _min_distance_P(P, a, targets), it, is_boolean(P))


def scp_comm_select(M: int, K: int, already_chosen: Sequence, mu: float = 0.1,
                    max_iter: int = 50, rng: Optional[np.random.Generator] = None,
                    init: Optional[np.ndarray] = None, mu_growth: float = 1.5):
    """One SCP run; returns a codeword (bit index -1) or raises :class:`NotBooleanError`.

    ``already_chosen`` holds codewords or antenna index tuples.
    """
    chosen = [c.ordered if hasattr(c, "ordered") else tuple(c) for c in already_chosen]
    sel = scp_comm_relaxed(M, K, chosen, mu, max_iter, rng, init, mu_growth)
    if not sel.boolean:
        raise NotBooleanError("selection vector not boolean after "
                              f"{max_iter} iterations", sel.z)
    return make_codeword(Subarray(sel.indices), M, -1)


def scp_comm_dictionary(M: int, K: int, size: int, mu: float = 0.1, max_iter: int = 50,
                        seed: int = 0, max_restarts: int = 1000,
                        mu_growth: float = 1.5) -> SymbolDictionary:
    """Outer loop: grow the dictionary with SCP runs from fresh random starts."""
    rng = np.random.default_rng(seed)
    found = [c.sub.indices for c in analytic_extreme_pair(M, K)][:size]
    restarts = 0
    while len(found) < size:
        if restarts >= max_restarts:
            raise InfeasibleError(f"gave up after {max_restarts} restarts with {len(found)} symbols")
        restarts += 1
        try:
            cw = scp_comm_select(M, K, found, mu, max_iter, rng, mu_growth=mu_growth)
        except (NotBooleanError, InfeasibleError):
            continue
        if cw.sub.indices not in found:
            found.append(cw.sub.indices)
    entries = [make_codeword(Subarray(idx), M, b) for b, idx in enumerate(found)]
    return SymbolDictionary("selection", M, K, entries,
                            {"construction": "scp-maxmin", "restarts": restarts})


@dataclass
class RadarSelection:
    sub: Subarray
    ripple: float  # ripple of the fixed-subarray design for the selected antennas
    z: np.ndarray
    iterations: int


class _RadarSubproblem:
    """Parametrized convex subproblem over (z, w, rho), compiled once."""

    def __init__(self, geometry: ArrayGeometry, K: int, receive: ReceiveArray, grid: PatternGrid,
                 sidelobe_eps: float, phase_profile: PhaseProfile, block_bound: float):
        M, N = geometry.M, receive.N
        full = Subarray(tuple(range(M)))
        pos = virtual_positions(full, geometry, receive)
        Cm = np.exp(2j * np.pi * np.outer(np.sin(grid.mainlobe), pos))
        Cs = np.exp(2j * np.pi * np.outer(np.sin(grid.sidelobe), pos))
        target = np.exp(1j * phase_profile(grid.mainlobe))
        self.h = cp.Variable(M * N, complex=True)  # conj(w)
        self.z = cp.Variable(M)
        self.rho = cp.Variable()
        self.lin = cp.Parameter(M)
        blocks = cp.reshape(self.h, (M, N), order="C")
        cons = [
            cp.abs(Cm @ self.h - target) <= self.rho,
            cp.abs(Cs @ self.h) <= sidelobe_eps,
            cp.norm(blocks, 2, axis=1) <= block_bound * self.z,
            self.z >= 0, self.z <= 1, cp.sum(self.z) == K,
        ]
        self.problem = cp.Problem(cp.Minimize(self.rho - self.lin @ self.z), cons)

    def solve(self, lin: np.ndarray) -> np.ndarray:
        self.lin.value = lin
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", UserWarning)
            self.problem.solve(solver=cp.CLARABEL)
        if self.problem.status not in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE):
            raise InfeasibleError(f"radar subproblem status {self.problem.status}")
        return np.asarray(self.z.value, dtype=float)


def default_block_bound(K: int, receive: ReceiveArray, factor: float = 2.0) -> float:
    """Scale for the coupling ``|J_m w| <= beta z_m``.

    A uniform taper reaching unit mainlobe gain spreads ``1/(K N)`` per virtual
    element, so each active block has norm ``1/(K sqrt(N))``; beta allows
    ``factor`` times that.  Much looser bounds let tiny fractional entries carry
    large weights and the relaxation stops ranking subarrays usefully.
    """
    return factor / (K * math.sqrt(receive.N))


def scp_radar_select(geometry: ArrayGeometry, K: int, receive: ReceiveArray, grid: PatternGrid,
                     sidelobe_eps: float, mu: float = 0.1, max_iter: int = 30,
                     rng: Optional[np.random.Generator] = None,
                     phase_profile: PhaseProfile = zero_phase,
                     block_bound: Optional[float] = None,
                     init: Optional[np.ndarray] = None, mu_growth: float = 2.0,
                     _sub: Optional[_RadarSubproblem] = None) -> RadarSelection:
    """One SCP run of the ripple-minimizing selection.

    The boolean result is re-designed with the fixed-subarray minimax solver so
    the reported ripple and sidelobes are those of the selected antennas alone.
    The penalty weight is multiplied by ``mu_growth`` after every subproblem:
    with a loose coupling bound a fixed weight lets tiny fractional entries
    buy ripple cheaply and the iteration stalls short of a boolean point.

    Raises
    ------
    NotBooleanError
        If z is still fractional after ``max_iter`` subproblems.
    InfeasibleError
        If the selected subarray misses the sidelobe requirement.
    """
    if mu < 0:
        raise ConfigError("trade-off mu must be non-negative")
    M = geometry.M
    rng = np.random.default_rng() if rng is None else rng
    if block_bound is None:
        block_bound = default_block_bound(K, receive)
    sub_problem = _sub or _RadarSubproblem(geometry, K, receive, grid, sidelobe_eps,
                                           phase_profile, block_bound)
    if init is None:
        z = rng.dirichlet(np.ones(M)) * K
        while z.max() > 1:  # push mass off entries above 1 to stay in the box
            over = z > 1
            spill = float((z[over] - 1).sum())
            z[over] = 1
            free = ~over & (z < 1)
            z[free] += spill * (1 - z[free]) / (1 - z[free]).sum()
    else:
        z = np.asarray(init, dtype=float)
    if mu_growth < 1:
        raise ConfigError("mu_growth must be at least 1")
    it = 0
    weight = mu
    for it in range(1, max_iter + 1):
        new = np.clip(sub_problem.solve(weight * (2 * z - 1)), 0.0, 1.0)
        weight = min(weight * mu_growth, MAX_WEIGHT)
        step = float(np.max(np.abs(new - z)))
        z = new
        if is_boolean(z) and step <= BOOL_TOL:
            break
    if not is_boolean(z):
        raise NotBooleanError(f"selection vector not boolean after {max_iter} iterations", z)
    sub = Subarray(tuple(int(i) for i in np.flatnonzero(z > 0.5)))
    if sub.K != K:
        raise NotBooleanError(f"boolean z selects {sub.K} antennas, expected {K}", z)
    rho = ripple_metric(sub, geometry, receive, grid, sidelobe_eps, phase_profile)
    if rho is None:
        raise InfeasibleError(f"selected subarray {sub.indices} misses the sidelobe requirement")
    return RadarSelection(sub, rho, z, it)


def scp_radar_dictionary(geometry: ArrayGeometry, K: int, size: int, receive: ReceiveArray,
                         grid: PatternGrid, sidelobe_eps: float, mu: float = 0.1,
                         max_iter: int = 30, seed: int = 0, restarts: Optional[int] = None,
                         phase_profile: PhaseProfile = zero_phase) -> SymbolDictionary:
    """Collect distinct boolean SCP results from random starts; keep the ``size`` best.

    ``restarts`` defaults to ``10 * size`` runs.
    """
    if size > math.comb(geometry.M, K):
        raise ConfigError(f"size {size} exceeds C({geometry.M},{K})")
    rng = np.random.default_rng(seed)
    beta = default_block_bound(K, receive)
    sub_problem = _RadarSubproblem(geometry, K, receive, grid, sidelobe_eps, phase_profile, beta)
    found: dict[tuple[int, ...], float] = {}
    for _ in range(restarts or 10 * size):
        try:
            sel = scp_radar_select(geometry, K, receive, grid, sidelobe_eps, mu, max_iter, rng,
                                   phase_profile, beta, _sub=sub_problem)
        except (NotBooleanError, InfeasibleError):
            continue
        found[sel.sub.indices] = sel.ripple
    if len(found) < size:
        raise InfeasibleError(f"SCP found only {len(found)} feasible subarrays, {size} requested")
    best = sorted(found.items(), key=lambda kv: (round(kv[1], 9), kv[0]))[:size]
    entries = [make_codeword(Subarray(idx), geometry.M, b) for b, (idx, _) in enumerate(best)]
    return SymbolDictionary("selection", geometry.M, K, entries,
                            {"construction": "scp-ripple", "ripple": [r for _, r in best]})
