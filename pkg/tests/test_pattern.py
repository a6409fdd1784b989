import math

import numpy as np
import pytest
from scipy.optimize import linprog

from conftest import TOY_EPS, TOY_GEO, TOY_GRID, TOY_RX
from sparse_dfrc.arrays import ArrayGeometry, ReceiveArray, Subarray, subarray_steering
from sparse_dfrc.dictionary import enumerate_subarrays, rank_subarrays_by_ripple
from sparse_dfrc.errors import ConfigError, InfeasibleError
from sparse_dfrc.pattern import (PatternGrid, beampattern, design_minimax_weights,
                                 pattern_values, reporting_angles, ripple_metric,
                                 sidelobe_peak_db, virtual_positions, virtual_steering)

G8 = ArrayGeometry(8, 0.25)
RX3 = ReceiveArray.ula(3, 0.5)


def test_virtual_steering_dimension_and_kron_entries(rng):
    g, rx = ArrayGeometry(16), ReceiveArray.ula(10)
    sub = Subarray(tuple(range(0, 16, 2)))
    theta = rng.uniform(-1.2, 1.2)
    c = virtual_steering(sub, g, rx, theta)
    assert c.shape == (80,)
    a, b = subarray_steering(g, sub, theta), rx.steering(theta)
    for k in range(8):
        for n in range(10):
            assert c[k * 10 + n] == pytest.approx(a[k] * b[n], abs=1e-12)
    assert np.vdot(c, c).real == pytest.approx(80)


def test_virtual_steering_single_receiver_is_transmit_steering():
    sub = Subarray((1, 4, 6))
    rx = ReceiveArray((0.0,))
    assert np.allclose(virtual_steering(sub, G8, rx, 0.4), subarray_steering(G8, sub, 0.4))


def test_pattern_matches_double_loop(rng):
    sub = Subarray((0, 3, 5))
    w = rng.standard_normal(9) + 1j * rng.standard_normal(9)
    angles = np.radians([-50.0, -3.0, 0.0, 12.5, 71.0])
    got = pattern_values(w, virtual_positions(sub, G8, RX3), angles)
    for t, val in zip(angles, got):
        acc = 0j
        for k, m in enumerate(sub.indices):
            for n, p in enumerate(RX3.positions):
                acc += np.conj(w[k * 3 + n]) * np.exp(2j * np.pi * (m * 0.25 + p) * math.sin(t))
        assert val == pytest.approx(acc, abs=1e-10)


def test_conventional_beamformer_peaks_at_look_angle():
    sub = Subarray((0, 2, 3, 7))
    t0 = math.radians(20)
    c0 = virtual_steering(sub, G8, RX3, t0)
    bp = beampattern(c0 / np.vdot(c0, c0).real, sub, G8, RX3, reporting_angles(0.5))
    assert bp.angles[np.argmax(bp.gain)] == pytest.approx(t0, abs=1e-9)
    assert bp.gain.max() == pytest.approx(1.0)


def test_zero_weights_and_global_phase():
    sub = Subarray((0, 1))
    ang = reporting_angles(5.0)
    assert np.all(beampattern(np.zeros(6), sub, G8, RX3, ang).gain == 0)
    w = np.arange(1, 7) * (1 + 0.5j)
    a = beampattern(w, sub, G8, RX3, ang).gain
    b = beampattern(w * np.exp(1.1j), sub, G8, RX3, ang).gain
    assert np.allclose(a, b)


def test_grid_disjoint_and_validation():
    g = PatternGrid.build(-10, 10, 0.5, 8)
    assert not set(np.round(g.mainlobe, 12)) & set(np.round(g.sidelobe, 12))
    assert math.degrees(g.sidelobe[np.argmin(np.abs(g.sidelobe))]) == pytest.approx(-18.0)
    with pytest.raises(ConfigError):
        PatternGrid.build(-10, 10, 0.7)
    with pytest.raises(ConfigError):
        PatternGrid.build(10, -10)


def _polygon_bounds(sub, geometry, receive, grid, eps, P=256):
    """Lower/upper bounds on the minimax ripple from outer/inner polygonal LPs."""
    pos = np.unique(np.round(virtual_positions(sub, geometry, receive), 9))
    n = len(pos)
    Em = np.exp(2j * np.pi * np.outer(np.sin(grid.mainlobe), pos))
    Es = np.exp(2j * np.pi * np.outer(np.sin(grid.sidelobe), pos))
    phis = 2 * np.pi * np.arange(P) / P

    def solve(shrink):
        rows, rhs = [], []
        for phi in phis:
            rot = np.exp(-1j * phi)
            # Re(rot (E h - 1)) <= shrink * rho, with h = x + j y
            A = rot * Em
            rows += [np.hstack([A.real, -A.imag, -shrink * np.ones((len(Em), 1))])]
            rhs += [np.real(rot * np.ones(len(Em)))]
            B = rot * Es
            rows += [np.hstack([B.real, -B.imag, np.zeros((len(Es), 1))])]
            rhs += [np.full(len(Es), shrink * eps)]
        c = np.zeros(2 * n + 1)
        c[-1] = 1
        res = linprog(c, A_ub=np.vstack(rows), b_ub=np.concatenate(rhs),
                      bounds=[(None, None)] * (2 * n) + [(0, None)], method="highs")
        assert res.status == 0
        return res.x[-1]

    return solve(1.0), solve(math.cos(math.pi / P))


@pytest.mark.parametrize("indices", [(0, 1), (0, 3)])
def test_minimax_toy_against_polygon_lp_oracle(indices):
    g, rx = ArrayGeometry(4, 0.25), ReceiveArray.ula(2, 0.5)
    grid = PatternGrid.build(-10, 10, 5.0, 20.0)
    eps = 10 ** (-10 / 20)
    sub = Subarray(indices)
    d = design_minimax_weights(sub, g, rx, grid, eps)
    lo, hi = _polygon_bounds(sub, g, rx, grid, eps)
    assert hi - lo < 1e-3
    assert lo - 1e-6 <= d.ripple <= hi + 1e-6


def test_minimax_constraints_reverified(rng):
    sub = Subarray((0, 1, 4))
    d = design_minimax_weights(sub, TOY_GEO, TOY_RX, TOY_GRID, TOY_EPS)
    pos = virtual_positions(sub, TOY_GEO, TOY_RX)
    side = np.abs(pattern_values(d.weights, pos, TOY_GRID.sidelobe))
    main = pattern_values(d.weights, pos, TOY_GRID.mainlobe)
    assert side.max() <= TOY_EPS + 1e-6
    assert np.max(np.abs(main - 1)) == pytest.approx(d.ripple, abs=1e-9)


def test_ripple_monotone_in_sidelobe_level():
    sub = Subarray((0, 1, 4))
    ripples = [design_minimax_weights(sub, TOY_GEO, TOY_RX, TOY_GRID, 10 ** (db / 20)).ripple
               for db in (-20, -15, -10, -5)]
    assert all(b <= a + 1e-6 for a, b in zip(ripples, ripples[1:]))


def test_unreachable_level_flagged():
    # a tiny absolute level only shrinks the whole pattern; the relative check rejects it
    d = design_minimax_weights(Subarray((0, 1, 2)), TOY_GEO, TOY_RX, TOY_GRID, 1e-6)
    assert d.ripple > 0.999
    assert ripple_metric(Subarray((0, 1, 2)), TOY_GEO, TOY_RX, TOY_GRID, 1e-6) is None


def test_nonpositive_level_rejected():
    with pytest.raises(ConfigError):
        design_minimax_weights(Subarray((0, 1)), TOY_GEO, TOY_RX, TOY_GRID, 0.0)


def test_ripple_deterministic():
    sub = Subarray((0, 3, 5))
    a = ripple_metric(sub, TOY_GEO, TOY_RX, TOY_GRID, TOY_EPS)
    b = ripple_metric(sub, TOY_GEO, TOY_RX, TOY_GRID, TOY_EPS)
    assert a == b


def test_toy_ranking_matches_independent_enumeration():
    """Per-subarray designs without the shared-support shortcut give the same ranking."""
    ranked = rank_subarrays_by_ripple(TOY_GEO, 3, TOY_RX, TOY_GRID, TOY_EPS)
    oracle = []
    for sub in enumerate_subarrays(6, 3):
        try:
            d = design_minimax_weights(sub, TOY_GEO, TOY_RX, TOY_GRID, TOY_EPS)
        except InfeasibleError:
            continue
        bp = beampattern(d.weights, sub, TOY_GEO, TOY_RX, reporting_angles(0.1),
                         mainlobe=TOY_GRID.sector)
        fine = TOY_GRID.refined(0.1)
        side = np.isin(np.round(bp.angles, 12), np.round(fine.sidelobe, 12))
        if bp.gain_db[side].max() <= -15.0:
            oracle.append((round(d.ripple, 9), sub.indices))
    oracle.sort()
    assert [idx for _, idx in ranked] == [idx for _, idx in oracle]


def test_sidelobe_peak_db_relative_to_mainlobe():
    sub = Subarray((0, 1, 4))
    d = design_minimax_weights(sub, TOY_GEO, TOY_RX, TOY_GRID, TOY_EPS)
    peak = sidelobe_peak_db(d.weights, sub, TOY_GEO, TOY_RX, TOY_GRID, step_deg=0.1)
    assert peak <= -15.0
