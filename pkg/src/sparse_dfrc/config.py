"""JSON run configuration and the dictionary/scheme objects it describes."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Optional

from .arrays import ArrayGeometry, ReceiveArray, maximal_spread_angle
from .dictionary import (SymbolDictionary, build_radar_dictionary_by_enumeration,
                         build_regularized_dictionary, greedy_maxmin_dictionary, load_dictionary,
                         permute_augment)
from .errors import ConfigError
from .pattern import PatternGrid
from .signaling import SchemeConfig, subrate_dictionary

MODES = ("comm", "radar", "hybrid", "regularized")
MODE_SCHEME = {"comm": "selection", "radar": "selection", "hybrid": "hybrid",
               "regularized": "regularized"}


@dataclass
class RunConfig:
    M: int = 16
    spacing: float = 0.25
    N: int = 10
    receive_spacing: float = 0.5
    K: int = 8
    scheme: Optional[str] = None
    bits_per_symbol: Optional[int] = None
    theta_c_deg: Optional[float] = None  # None: maximal spread angle
    mode: str = "comm"
    size: int = 256
    dictionary_path: Optional[str] = None
    hybrid_base: str = "comm"
    mainlobe_min_deg: float = -10.0
    mainlobe_max_deg: float = 10.0
    grid_step_deg: float = 0.5
    guard_deg: float = 8.0
    sidelobe_db: float = -20.0
    snr_grid_db: list = field(default_factory=lambda: [float(s) for s in range(-20, 21, 2)])
    num_symbols: int = 1_000_000
    seed: int = 0
    prf_hz: float = 1e4
    sigma_grid_deg: list = field(default_factory=lambda: [0.0, 1.0, 2.0, 3.0, 4.0, 5.0])
    trials: int = 500
    symbols_per_trial: int = 1000
    robustness_snr_db: float = 10.0
    workers: Optional[int] = None

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"unknown dictionary mode {self.mode!r}; expected one of {MODES}")
        if self.hybrid_base not in ("comm", "radar"):
            raise ConfigError("dictionary.base must be 'comm' or 'radar'")
        expected = MODE_SCHEME[self.mode]
        if self.scheme is not None and self.scheme != expected:
            raise ConfigError(f"scheme {self.scheme!r} does not match dictionary mode {self.mode!r}")
        if self.mode == "regularized" and self.M != 2 * self.K:
            raise ConfigError(f"the regularized scheme needs M = 2K, got M={self.M}, K={self.K}")
        if self.sidelobe_db >= 0:
            raise ConfigError("sidelobe_db must be negative")
        if self.mainlobe_min_deg >= self.mainlobe_max_deg:
            raise ConfigError("mainlobe.min_deg must be below mainlobe.max_deg")
        if self.bits_per_symbol is not None and self.bits_per_symbol < 1:
            raise ConfigError("bits_per_symbol must be positive")
        for name in ("num_symbols", "trials", "symbols_per_trial", "size", "M", "K", "N"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed must fit in 64 bits")

    @property
    def resolved_scheme(self) -> str:
        return MODE_SCHEME[self.mode]

    def geometry(self) -> ArrayGeometry:
        return ArrayGeometry(self.M, self.spacing)

    def receive(self) -> ReceiveArray:
        return ReceiveArray.ula(self.N, self.receive_spacing)

    def grid(self) -> PatternGrid:
        return PatternGrid.build(self.mainlobe_min_deg, self.mainlobe_max_deg, self.grid_step_deg,
                                 self.guard_deg)

    @property
    def sidelobe_eps(self) -> float:
        return 10 ** (self.sidelobe_db / 20)

    def theta_c(self) -> float:
        if self.theta_c_deg is None:
            return maximal_spread_angle(self.geometry())
        return math.radians(self.theta_c_deg)

    def with_overrides(self, **kw) -> "RunConfig":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})


# config JSON path -> RunConfig attribute
_KEYS = {
    ("geometry", "M"): "M",
    ("geometry", "spacing_wavelengths"): "spacing",
    ("geometry", "K"): "K",
    ("receive", "N"): "N",
    ("receive", "spacing_wavelengths"): "receive_spacing",
    ("scheme",): "scheme",
    ("K",): "K",
    ("bits_per_symbol",): "bits_per_symbol",
    ("theta_c_deg",): "theta_c_deg",
    ("dictionary", "mode"): "mode",
    ("dictionary", "size"): "size",
    ("dictionary", "path"): "dictionary_path",
    ("dictionary", "base"): "hybrid_base",
    ("mainlobe", "min_deg"): "mainlobe_min_deg",
    ("mainlobe", "max_deg"): "mainlobe_max_deg",
    ("mainlobe", "step_deg"): "grid_step_deg",
    ("mainlobe", "guard_deg"): "guard_deg",
    ("sidelobe_db",): "sidelobe_db",
    ("snr_grid_db",): "snr_grid_db",
    ("num_symbols",): "num_symbols",
    ("seed",): "seed",
    ("prf_hz",): "prf_hz",
    ("sigma_grid_deg",): "sigma_grid_deg",
    ("trials",): "trials",
    ("symbols_per_trial",): "symbols_per_trial",
    ("robustness_snr_db",): "robustness_snr_db",
    ("workers",): "workers",
}
_SECTIONS = {k[0] for k in _KEYS if len(k) == 2}


def config_from_dict(doc: dict) -> RunConfig:
    if not isinstance(doc, dict):
        raise ConfigError("configuration must be a JSON object")
    values: dict[str, Any] = {}
    for key, value in doc.items():
        if key in _SECTIONS:
            if not isinstance(value, dict):
                raise ConfigError(f"{key!r} must be an object")
            for sub, v in value.items():
                if (key, sub) not in _KEYS:
                    raise ConfigError(f"unknown configuration key {key}.{sub}")
                values[_KEYS[(key, sub)]] = v
        elif (key,) in _KEYS:
            values[_KEYS[(key,)]] = value
        else:
            raise ConfigError(f"unknown configuration key {key!r}")
    if values.get("scheme") is not None and "mode" not in values:
        # a bare scheme implies the matching dictionary construction
        values["mode"] = {"selection": "comm", "hybrid": "hybrid",
                          "regularized": "regularized"}.get(values["scheme"], values["scheme"])
    types = {f.name: f.type for f in fields(RunConfig)}
    try:
        for name, v in values.items():
            if v is None:
                continue
            t = str(types[name])
            if "int" in t and "float" not in t:
                if isinstance(v, bool) or not isinstance(v, int):
                    raise ConfigError(f"{name} must be an integer")
            elif "float" in t:
                if isinstance(v, bool) or not isinstance(v, (int, float)):
                    raise ConfigError(f"{name} must be a number")
                values[name] = float(v)
            elif "str" in t:
                if not isinstance(v, str):
                    raise ConfigError(f"{name} must be a string")
            elif t == "list":
                if not isinstance(v, list) or not all(
                        isinstance(x, (int, float)) and not isinstance(x, bool) for x in v):
                    raise ConfigError(f"{name} must be a list of numbers")
                values[name] = [float(x) for x in v]
        return RunConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path) -> RunConfig:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {path}: {exc}") from None
    return config_from_dict(doc)


def build_dictionary(cfg: RunConfig, mode: Optional[str] = None) -> SymbolDictionary:
    """Full-size dictionary for ``mode`` (default ``cfg.mode``)."""
    from .simulator import worker_count

    mode = mode or cfg.mode
    if mode == "regularized":
        return build_regularized_dictionary(cfg.K)
    if mode == "comm":
        return greedy_maxmin_dictionary(cfg.M, cfg.K, cfg.size)
    if mode == "radar":
        return build_radar_dictionary_by_enumeration(
            cfg.geometry(), cfg.K, cfg.size, cfg.receive(), cfg.grid(), cfg.sidelobe_eps,
            workers=worker_count(cfg.workers))
    if mode == "hybrid":
        return permute_augment(build_dictionary(cfg, cfg.hybrid_base))
    raise ConfigError(f"unknown dictionary mode {mode!r}")


def resolve_dictionary(cfg: RunConfig) -> SymbolDictionary:
    """Load ``dictionary.path`` when it exists, else build from the configuration."""
    if cfg.dictionary_path and Path(cfg.dictionary_path).exists():
        d = load_dictionary(cfg.dictionary_path)
        if d.scheme != cfg.resolved_scheme:
            raise ConfigError(f"{cfg.dictionary_path} holds a {d.scheme} dictionary, "
                              f"mode {cfg.mode!r} needs {cfg.resolved_scheme}")
        if (d.M, d.K) != (cfg.M, cfg.K) and d.scheme != "regularized":
            raise ConfigError(f"{cfg.dictionary_path} was built for M={d.M}, K={d.K}")
        return d
    return build_dictionary(cfg)


def scheme_config(cfg: RunConfig, dictionary: Optional[SymbolDictionary] = None,
                  bits: Optional[int] = None) -> SchemeConfig:
    d = dictionary if dictionary is not None else resolve_dictionary(cfg)
    nb = bits if bits is not None else cfg.bits_per_symbol
    if nb is not None and nb != d.Nb:
        if nb > d.Nb:
            raise ConfigError(f"{nb} bits per symbol exceed the dictionary's {d.Nb}")
        d = subrate_dictionary(d, nb)
    return SchemeConfig(d, cfg.geometry(), cfg.theta_c(), prf=cfg.prf_hz)
