import math

import numpy as np
import pytest

from sparse_dfrc.arrays import ArrayGeometry, maximal_spread_angle
from sparse_dfrc.dictionary import build_regularized_dictionary
from sparse_dfrc.errors import ConfigError
from sparse_dfrc.signaling import SchemeConfig, antipodal_ber
from sparse_dfrc.simulator import (SNR_COMMENT, ChannelModel, MonteCarloConfig, censored,
                                   data_rate, fmt, run_angle_robustness, run_ser_sweep,
                                   theory_curves, worker_count)

G16 = ArrayGeometry(16, 0.25)
THETA = maximal_spread_angle(G16)


@pytest.fixture(scope="module")
def reg_cfg():
    return SchemeConfig(build_regularized_dictionary(8), G16, THETA)


def test_channel_model():
    ch = ChannelModel.from_snr_db(10.0, alpha=2.0)
    assert ch.rho == pytest.approx(10.0)
    assert ch.noise_var == pytest.approx(0.4)
    with pytest.raises(ConfigError):
        ChannelModel(0.0, 1.0)
    with pytest.raises(ConfigError):
        ChannelModel(1.0, -1.0)
    assert ChannelModel(1.0, 0.0).rho == math.inf


def test_monte_carlo_config_validation():
    with pytest.raises(ConfigError):
        MonteCarloConfig([])
    with pytest.raises(ConfigError):
        MonteCarloConfig([0.0], num_symbols=0)
    with pytest.raises(ConfigError):
        MonteCarloConfig([0.0], seed=-1)


def test_worker_count_env(monkeypatch):
    monkeypatch.setenv("DFRC_THREADS", "3")
    assert worker_count() == 3
    monkeypatch.setenv("DFRC_THREADS", "0")
    assert worker_count() >= 1
    monkeypatch.setenv("DFRC_THREADS", "x")
    with pytest.raises(ConfigError):
        worker_count()
    assert worker_count(2) == 2


def test_formatting_helpers():
    assert fmt(1 / 3) == "0.333333333"
    assert censored(0, 1000) == "<0.001"
    assert censored(5, 1000) == "0.005"


def test_csv_layout(reg_cfg):
    res = run_ser_sweep(reg_cfg, MonteCarloConfig([0.0, 6.0], num_symbols=5000, seed=1))
    lines = res.to_csv().split("\n")
    assert lines[0] == SNR_COMMENT
    assert lines[1] == "scheme,bits,snr_db,symbols,symbol_errors,ser,ber,theory_bound"
    assert lines[2].startswith("regularized,8,0,5000,")
    assert lines[-1] == ""
    assert "\r" not in res.to_csv()


def test_noiseless_limit_has_no_errors(d_comm):
    cfg = SchemeConfig(d_comm, G16, THETA)
    res = run_ser_sweep(cfg, MonteCarloConfig([300.0], num_symbols=3000))
    assert res.records[0].symbol_errors == 0


def test_ber_ser_relations_and_monotonicity(reg_cfg):
    res = run_ser_sweep(reg_cfg, MonteCarloConfig([-6.0, -3.0, 0.0, 3.0], num_symbols=40000))
    sers = [r.ser for r in res.records]
    assert all(b <= a for a, b in zip(sers, sers[1:]))
    for r in res.records:
        assert r.ber <= r.ser <= r.bits * r.ber


def test_regularized_ber_matches_antipodal_reference(reg_cfg):
    n = 100_000
    res = run_ser_sweep(reg_cfg, MonteCarloConfig([-3.0, 0.0, 3.0], num_symbols=n, seed=9))
    for r in res.records:
        p = antipodal_ber(10 ** (r.point / 10))
        se = math.sqrt(p * (1 - p) / (n * 8))
        assert abs(r.ber - p) <= 4 * se


def test_time_domain_agrees_with_shortcut(d_hybrid):
    cfg = SchemeConfig(d_hybrid.truncated(4), G16, THETA)
    mc = MonteCarloConfig([-4.0], num_symbols=20000, seed=4)
    a = run_ser_sweep(cfg, mc).records[0]
    b = run_ser_sweep(cfg, mc, timedomain=True, samples_per_pulse=20).records[0]
    se = math.sqrt(a.ser * (1 - a.ser) / mc.num_symbols)
    assert abs(a.ser - b.ser) <= 5 * se * math.sqrt(2)


def test_alpha_gain_only_rescales_snr(reg_cfg):
    mc = MonteCarloConfig([0.0], num_symbols=20000, seed=2)
    a = run_ser_sweep(reg_cfg, mc).records[0]
    b = run_ser_sweep(reg_cfg, mc, alpha=3.0).records[0]
    assert (a.symbol_errors, a.bit_errors) == (b.symbol_errors, b.bit_errors)
    # a complex gain rotates the signal against circular noise: same law, other draws
    c = run_ser_sweep(reg_cfg, mc, alpha=3 * np.exp(0.7j)).records[0]
    se = math.sqrt(a.ser * (1 - a.ser) / mc.num_symbols)
    assert abs(a.ser - c.ser) <= 5 * se * math.sqrt(2)


def test_seed_changes_counts_workers_do_not(reg_cfg):
    mc = dict(snr_grid_db=[-2.0, 2.0], num_symbols=70000, seed=5, batch_size=1 << 13)
    one = run_ser_sweep(reg_cfg, MonteCarloConfig(**mc, workers=1)).to_csv()
    four = run_ser_sweep(reg_cfg, MonteCarloConfig(**mc, workers=4)).to_csv()
    other = run_ser_sweep(reg_cfg, MonteCarloConfig(**{**mc, "seed": 6}, workers=1)).to_csv()
    assert one == four
    assert one != other


def test_robustness_zero_sigma_and_growth(reg_cfg):
    res = run_angle_robustness(reg_cfg, [0.0, 3.0, 10.0], trials=20, symbols_per_trial=500,
                               snr_db=20.0, seed=1)
    sers = [r.ser for r in res.records]
    assert sers[0] == 0.0
    assert sers[2] >= sers[1]
    text = res.to_csv()
    assert text.split("\n")[1] == "scheme,bits,sigma_deg,snr_db,trials,symbols,symbol_errors,ser,ber"
    with pytest.raises(ConfigError):
        run_angle_robustness(reg_cfg, [-1.0])


def test_data_rate_examples(d_comm, d_hybrid, d_reg):
    assert data_rate(SchemeConfig(d_comm, G16, THETA, prf=1e4)) == pytest.approx(130e3)
    assert data_rate(SchemeConfig(d_hybrid, G16, THETA, prf=1e5)) == pytest.approx(2.8e6)
    assert data_rate(SchemeConfig(d_reg, G16, THETA, prf=1e3)) == pytest.approx(8e3)


def test_theory_curves_columns():
    text = theory_curves("regularized", 16, 8, [0.0])
    header, row = text.split("\n")[1:3]
    assert header == "scheme,M,K,snr_db,rho,ser_bound,ber_bound,ber_exact"
    vals = row.split(",")
    e = math.erfc(1.0)
    assert float(vals[5]) == pytest.approx(1 - (1 - e) ** 8, rel=1e-8)
    assert float(vals[7]) == pytest.approx(e / 2, rel=1e-8)
