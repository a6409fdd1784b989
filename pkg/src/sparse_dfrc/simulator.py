"""Seeded Monte Carlo experiments: SER/BER versus SNR and versus pointing error.

Every batch of symbols draws from its own Philox stream keyed by the run seed
and counter-offset by (grid point, batch), so the counts do not depend on how
batches are spread over worker threads.
"""
from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigError
from .signaling import (SchemeConfig, antipodal_ber, bits_per_symbol, encode_index,
                        regularized_error_rates, theory_ser_bound)
from .waveforms import build_waveform_bank, matched_filter

BATCH_SIZE = 1 << 15
SNR_COMMENT = "# snr_db is the per-branch matched-filter SNR |alpha|^2 / sigma^2"


@dataclass(frozen=True)
class ChannelModel:
    alpha: complex = 1.0
    noise_var: float = 1.0

    def __post_init__(self):
        if self.alpha == 0:
            raise ConfigError("channel gain must be nonzero")
        if self.noise_var < 0:
            raise ConfigError("noise variance must be non-negative")

    @classmethod
    def from_snr_db(cls, snr_db: float, alpha: complex = 1.0) -> "ChannelModel":
        if not math.isfinite(snr_db):
            raise ConfigError(f"invalid SNR {snr_db}")
        return cls(alpha, abs(alpha) ** 2 / 10 ** (snr_db / 10))

    @property
    def rho(self) -> float:
        return math.inf if self.noise_var == 0 else abs(self.alpha) ** 2 / self.noise_var


@dataclass
class MonteCarloConfig:
    snr_grid_db: Sequence[float]
    num_symbols: int = 1_000_000
    seed: int = 0
    workers: Optional[int] = None
    batch_size: int = BATCH_SIZE

    def __post_init__(self):
        if len(self.snr_grid_db) == 0:
            raise ConfigError("SNR grid is empty")
        if self.num_symbols < 1:
            raise ConfigError("need at least one symbol per SNR point")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed must fit in 64 bits")


def worker_count(requested: Optional[int] = None) -> int:
    """Explicit request, else ``DFRC_THREADS`` (0 or unset means one per CPU)."""
    if requested is None:
        raw = os.environ.get("DFRC_THREADS", "0")
        try:
            requested = int(raw)
        except ValueError:
            raise ConfigError(f"DFRC_THREADS must be an integer, got {raw!r}") from None
    if requested < 0:
        raise ConfigError("worker count must be non-negative")
    return requested or (os.cpu_count() or 1)


def _stream(seed: int, point: int, batch: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed, counter=[0, 0, batch, point]))


@dataclass
class _Alphabet:
    """Per-codeword transmit data in array form for vectorized simulation."""

    rotations: np.ndarray  # (L, K)
    positions: np.ndarray  # (L, K) antenna positions in wavelengths
    reference: np.ndarray  # (L, 2K) real-stacked detector templates
    Nb: int

    @classmethod
    def build(cls, cfg: SchemeConfig) -> "_Alphabet":
        specs = [encode_index(cfg, i) for i in range(len(cfg.dictionary))]
        rot = np.array([s.rotations for s in specs])
        pos = np.array([s.ordered for s in specs]) * cfg.geometry.spacing
        ref = cfg.reference
        return cls(rot, pos, np.concatenate([ref.real, ref.imag], axis=1), cfg.Nb)

    def observations(self, theta: float, alpha: complex) -> np.ndarray:
        return alpha * self.rotations * np.exp(2j * np.pi * self.positions * math.sin(theta))


def _popcount(x: np.ndarray) -> np.ndarray:
    x = x.astype(np.uint64)
    count = np.zeros(x.shape, dtype=np.int64)
    while np.any(x):
        count += (x & np.uint64(1)).astype(np.int64)
        x = x >> np.uint64(1)
    return count


def _run_batch(alphabet: _Alphabet, Y0: np.ndarray, channel: ChannelModel, rng: np.random.Generator,
               n: int, bank=None) -> tuple[int, int]:
    L, K = Y0.shape
    sent = rng.integers(0, L, size=n)
    clean = Y0[sent]
    scale = math.sqrt(channel.noise_var / 2)
    if bank is None:
        noise = rng.standard_normal((n, 2 * K)) * scale
        y = clean + (noise[:, :K] + 1j * noise[:, K:])
    else:
        noise = rng.standard_normal((n, 2 * bank.Ns)) * scale
        x = bank.transmit(clean) + (noise[:, :bank.Ns] + 1j * noise[:, bank.Ns:])
        y = matched_filter(x, bank)
    a_hat = y / channel.alpha
    scores = np.concatenate([a_hat.real, a_hat.imag], axis=1) @ alphabet.reference.T
    got = np.argmax(scores, axis=1)
    wrong = got != sent
    bit_errors = int(_popcount(np.bitwise_xor(got[wrong], sent[wrong])).sum())
    return int(wrong.sum()), bit_errors


def _batches(total: int, size: int):
    for b, start in enumerate(range(0, total, size)):
        yield b, min(size, total - start)


@dataclass
class SweepRecord:
    point: float
    symbols: int
    symbol_errors: int
    bit_errors: int
    bits: int
    theory_bound: float = math.nan
    trials: int = 0

    @property
    def ser(self) -> float:
        return self.symbol_errors / self.symbols

    @property
    def ber(self) -> float:
        return self.bit_errors / (self.symbols * self.bits) if self.bits else 0.0


@dataclass
class SweepResult:
    scheme: str
    bits: int
    axis: str  # "snr_db" or "sigma_deg"
    records: list[SweepRecord] = field(default_factory=list)
    snr_db: Optional[float] = None

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(SNR_COMMENT + "\n")
        w = csv.writer(buf, lineterminator="\n")
        if self.axis == "snr_db":
            w.writerow(["scheme", "bits", "snr_db", "symbols", "symbol_errors", "ser", "ber",
                        "theory_bound"])
            for r in self.records:
                w.writerow([self.scheme, self.bits, fmt(r.point), r.symbols, r.symbol_errors,
                            censored(r.symbol_errors, r.symbols),
                            censored(r.bit_errors, r.symbols * r.bits), fmt(r.theory_bound)])
        else:
            w.writerow(["scheme", "bits", "sigma_deg", "snr_db", "trials", "symbols",
                        "symbol_errors", "ser", "ber"])
            for r in self.records:
                w.writerow([self.scheme, self.bits, fmt(r.point), fmt(self.snr_db), r.trials,
                            r.symbols, r.symbol_errors, censored(r.symbol_errors, r.symbols),
                            censored(r.bit_errors, r.symbols * r.bits)])
        return buf.getvalue()


def fmt(x: float) -> str:
    return f"{x:.9g}"


def censored(errors: int, total: int) -> str:
    """Error rate, or ``<1/n`` when no error was observed."""
    if total == 0:
        return fmt(0.0)
    if errors == 0:
        return "<" + fmt(1.0 / total)
    return fmt(errors / total)


def run_ser_sweep(cfg: SchemeConfig, mc: MonteCarloConfig, alpha: complex = 1.0,
                  timedomain: bool = False, samples_per_pulse: Optional[int] = None,
                  noise_var: Optional[float] = None) -> SweepResult:
    """Symbol and bit error counts at every SNR of ``mc.snr_grid_db``.

    With ``noise_var`` given, that fixed noise level replaces the SNR grid's
    (the grid then only labels the points).  ``timedomain`` synthesizes the
    waveforms and matched-filters them instead of adding noise after the
    filter.
    """
    alphabet = _Alphabet.build(cfg)
    Y0 = alphabet.observations(cfg.theta_c, alpha)
    bank = None
    if timedomain:
        bank = build_waveform_bank(cfg.dictionary.K, samples_per_pulse or 2 * cfg.dictionary.K)
    channels = [
        ChannelModel(alpha, noise_var) if noise_var is not None else ChannelModel.from_snr_db(s, alpha)
        for s in mc.snr_grid_db
    ]
    tasks = [
        (p, b, n)
        for p in range(len(channels))
        for b, n in _batches(mc.num_symbols, mc.batch_size)
    ]

    def work(task):
        p, b, n = task
        return _run_batch(alphabet, Y0, channels[p], _stream(mc.seed, p, b), n, bank)

    counts = _map(work, tasks, worker_count(mc.workers))
    result = SweepResult(cfg.scheme, cfg.Nb, "snr_db")
    M, K = cfg.geometry.M, cfg.dictionary.K
    for p, snr in enumerate(mc.snr_grid_db):
        sym = sum(c[0] for t, c in zip(tasks, counts) if t[0] == p)
        bit = sum(c[1] for t, c in zip(tasks, counts) if t[0] == p)
        bound = float(theory_ser_bound(cfg.scheme, channels[p].rho, M, K))
        result.records.append(SweepRecord(float(snr), mc.num_symbols, sym, bit, cfg.Nb, bound))
    return result


def run_angle_robustness(cfg: SchemeConfig, sigma_list_deg: Sequence[float], trials: int = 500,
                         symbols_per_trial: int = 1000, snr_db: float = 10.0,
                         alpha: complex = 1.0, seed: int = 0,
                         workers: Optional[int] = None) -> SweepResult:
    """SER when the receiver's true direction scatters around the design angle.

    Each trial draws the true angle from ``Normal(theta_c, sigma^2)``; the
    transmitter keeps rotating for ``theta_c`` and the receiver keeps
    detecting against the ``theta_c`` dictionary.
    """
    if trials < 1 or symbols_per_trial < 1:
        raise ConfigError("need at least one trial and one symbol per trial")
    if any(not math.isfinite(s) or s < 0 for s in sigma_list_deg):
        raise ConfigError("pointing-error deviations must be finite and non-negative")
    alphabet = _Alphabet.build(cfg)
    channel = ChannelModel.from_snr_db(snr_db, alpha)
    tasks = [(p, t) for p in range(len(sigma_list_deg)) for t in range(trials)]

    def work(task):
        p, t = task
        rng = _stream(seed, p, t)
        offset = math.radians(sigma_list_deg[p]) * rng.standard_normal()
        theta = min(max(cfg.theta_c + offset, -math.pi / 2), math.pi / 2)
        Y0 = alphabet.observations(theta, alpha)
        return _run_batch(alphabet, Y0, channel, rng, symbols_per_trial)

    counts = _map(work, tasks, worker_count(workers))
    result = SweepResult(cfg.scheme, cfg.Nb, "sigma_deg", snr_db=snr_db)
    for p, sigma in enumerate(sigma_list_deg):
        sym = sum(c[0] for t, c in zip(tasks, counts) if t[0] == p)
        bit = sum(c[1] for t, c in zip(tasks, counts) if t[0] == p)
        result.records.append(SweepRecord(float(sigma), trials * symbols_per_trial, sym, bit,
                                          cfg.Nb, trials=trials))
    return result


def _map(fn, tasks, workers: int):
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))


def data_rate(cfg: SchemeConfig) -> float:
    """Bits per second at full capacity of the scheme."""
    if not cfg.prf > 0:
        raise ConfigError("pulse repetition frequency must be positive")
    return bits_per_symbol(cfg.scheme, cfg.geometry.M, cfg.dictionary.K) * cfg.prf


def theory_curves(scheme: str, M: int, K: int, snr_grid_db: Sequence[float]) -> str:
    """Closed-form curves as CSV text."""
    buf = io.StringIO()
    buf.write(SNR_COMMENT + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["scheme", "M", "K", "snr_db", "rho", "ser_bound", "ber_bound", "ber_exact"])
    for s in snr_grid_db:
        rho = 10 ** (s / 10)
        ser = float(theory_ser_bound(scheme, rho, M, K))
        if scheme == "regularized":
            ber, ber_exact = float(regularized_error_rates(rho, K)[0]), float(antipodal_ber(rho))
            w.writerow([scheme, M, K, fmt(s), fmt(rho), fmt(ser), fmt(ber), fmt(ber_exact)])
        else:
            w.writerow([scheme, M, K, fmt(s), fmt(rho), fmt(ser), "", ""])
    return buf.getvalue()

