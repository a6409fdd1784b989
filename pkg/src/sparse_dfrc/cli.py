"""Command-line entry point: ``sparse-dfrc <subcommand> [--config cfg.json] [overrides]``.

Exit codes: 0 success, 2 configuration error, 3 infeasible design.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .config import (MODES, RunConfig, build_dictionary, load_config, resolve_dictionary,
                     scheme_config)
from .dictionary import dictionary_to_json, distance_stats, save_dictionary
from .errors import ConfigError, DFRCError, InfeasibleError
from .pattern import beampattern, design_minimax_weights, reporting_angles
from .signaling import bits_per_symbol
from .simulator import (MonteCarloConfig, fmt, run_angle_robustness, run_ser_sweep,
                        theory_curves, worker_count)

log = logging.getLogger("sparse_dfrc")

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE = 0, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def parse_grid(text: str) -> list[float]:
    """``start:step:stop`` (inclusive) or a comma-separated list."""
    try:
        if ":" in text:
            parts = [float(p) for p in text.split(":")]
            if len(parts) != 3:
                raise ValueError
            start, step, stop = parts
            if step == 0 or (stop - start) / step < 0:
                raise ValueError
            n = int(math.floor((stop - start) / step + 1e-9)) + 1
            return [round(start + i * step, 12) for i in range(n)]
        return [float(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise ConfigError(f"cannot parse grid {text!r}; use start:step:stop or a,b,c") from None


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON configuration file")
    p.add_argument("--out", help="output path (default: stdout)")
    p.add_argument("--M", type=int, help="candidate antennas")
    p.add_argument("--K", type=int, help="active antennas")
    p.add_argument("--theta-c", type=float, dest="theta_c_deg",
                   help="communication direction in degrees (default: maximal spread angle)")
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int, help="worker threads (default: DFRC_THREADS or CPUs)")
    p.add_argument("-v", "--verbose", action="store_true")


def _dict_opts(p: argparse.ArgumentParser) -> None:
    p.add_argument("--mode", choices=MODES, help="dictionary construction")
    p.add_argument("--size", type=int, help="dictionary size (power of two)")
    p.add_argument("--dict", dest="dictionary_path", help="dictionary JSON to load or write")
    p.add_argument("--sidelobe-db", type=float, dest="sidelobe_db")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sparse-dfrc", description="Sparse-array DFRC signaling simulator")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("build-dict", help="build a symbol dictionary")
    _common(p)
    _dict_opts(p)
    p.add_argument("--stats-out", help="distance statistics CSV (default: <out>.stats.csv)")

    p = sub.add_parser("simulate", help="SER/BER versus SNR")
    _common(p)
    _dict_opts(p)
    p.add_argument("--snr", type=parse_grid, dest="snr_grid_db", help="SNR grid in dB")
    p.add_argument("--bits", type=int, dest="bits_per_symbol")
    p.add_argument("--symbols", type=int, dest="num_symbols")
    p.add_argument("--timedomain", action="store_true",
                   help="synthesize waveforms and matched-filter them")

    p = sub.add_parser("robustness", help="SER versus pointing-error deviation")
    _common(p)
    _dict_opts(p)
    p.add_argument("--sigma", type=parse_grid, dest="sigma_grid_deg", help="deviations in degrees")
    p.add_argument("--bits", type=int, dest="bits_per_symbol")
    p.add_argument("--trials", type=int)
    p.add_argument("--symbols-per-trial", type=int)
    p.add_argument("--snr-db", type=float, dest="robustness_snr_db")

    p = sub.add_parser("pattern", help="beampattern per codeword")
    _common(p)
    _dict_opts(p)
    p.add_argument("--codewords", help="comma-separated bit indices (default: all)")
    p.add_argument("--step", type=float, default=0.1, help="angle step in degrees")

    p = sub.add_parser("rates", help="closed-form error-rate curves")
    _common(p)
    p.add_argument("--scheme", choices=("selection", "hybrid", "regularized"))
    p.add_argument("--snr", type=parse_grid, dest="snr_grid_db")
    p.add_argument("--prf", type=float, dest="prf_hz")
    return parser


_OVERRIDES = ("M", "K", "theta_c_deg", "seed", "workers", "mode", "size", "dictionary_path",
              "sidelobe_db", "snr_grid_db", "bits_per_symbol", "num_symbols", "sigma_grid_deg",
              "trials", "symbols_per_trial", "robustness_snr_db", "prf_hz")


def _config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    kw = {k: getattr(args, k, None) for k in _OVERRIDES}
    if getattr(args, "scheme", None) and args.command == "rates":
        kw["mode"] = {"selection": "comm", "hybrid": "hybrid",
                      "regularized": "regularized"}[args.scheme]
        kw["scheme"] = args.scheme
        if args.scheme == "regularized" and args.M is None:
            kw["M"] = 2 * (args.K if args.K is not None else cfg.K)
    elif kw.get("mode") is not None:
        cfg = replace(cfg, scheme=None)  # an explicit mode decides the scheme
    new = cfg.with_overrides(**kw)
    new.validate()
    return new


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8", newline="\n")
    else:
        sys.stdout.write(text)


def stats_csv(d) -> str:
    stats = distance_stats(d)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["bit_index", "indices", "d_min", "d_max"])
    for cw, lo, hi in zip(d, stats.d_min, stats.d_max):
        w.writerow([cw.bit_index, " ".join(map(str, cw.ordered)), fmt(lo), fmt(hi)])
    return buf.getvalue()


def cmd_build_dict(args, cfg: RunConfig) -> int:
    d = build_dictionary(cfg)
    out = args.out or cfg.dictionary_path
    if out:
        save_dictionary(d, out)
        stats_path = args.stats_out or str(Path(out).with_suffix("")) + ".stats.csv"
        Path(stats_path).write_text(stats_csv(d), encoding="utf-8", newline="\n")
        stats = distance_stats(d)
        log.info("wrote %s (%d codewords, min/max squared distance %.6g/%.6g)", out, len(d),
                 stats.global_min, stats.global_max)
    else:
        sys.stdout.write(json.dumps(dictionary_to_json(d), indent=1) + "\n")
        if args.stats_out:
            Path(args.stats_out).write_text(stats_csv(d), encoding="utf-8", newline="\n")
    return EXIT_OK


def cmd_simulate(args, cfg: RunConfig) -> int:
    sc = scheme_config(cfg)
    mc = MonteCarloConfig(cfg.snr_grid_db, cfg.num_symbols, cfg.seed, cfg.workers)
    result = run_ser_sweep(sc, mc, timedomain=args.timedomain)
    _emit(result.to_csv(), args.out)
    return EXIT_OK


def cmd_robustness(args, cfg: RunConfig) -> int:
    sc = scheme_config(cfg)
    result = run_angle_robustness(sc, cfg.sigma_grid_deg, cfg.trials, cfg.symbols_per_trial,
                                  cfg.robustness_snr_db, seed=cfg.seed, workers=cfg.workers)
    _emit(result.to_csv(), args.out)
    return EXIT_OK


def cmd_pattern(args, cfg: RunConfig) -> int:
    d = resolve_dictionary(cfg)
    if args.codewords:
        try:
            picks = [int(x) for x in args.codewords.split(",")]
        except ValueError:
            raise ConfigError(f"bad codeword list {args.codewords!r}") from None
        for i in picks:
            if not 0 <= i < len(d):
                raise ConfigError(f"codeword {i} outside 0..{len(d) - 1}")
    else:
        picks = list(range(len(d)))
    geo, rx, grid = cfg.geometry(), cfg.receive(), cfg.grid()
    angles = reporting_angles(args.step)
    sector = (math.radians(cfg.mainlobe_min_deg), math.radians(cfg.mainlobe_max_deg))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["codeword", "theta_deg", "gain_linear", "gain_db"])
    for i in picks:
        sub = d[i].sub
        design = design_minimax_weights(sub, geo, rx, grid, cfg.sidelobe_eps)
        bp = beampattern(design.weights, sub, geo, rx, angles, mainlobe=sector)
        for th, g, gdb in zip(np.degrees(angles), bp.gain, bp.gain_db):
            w.writerow([i, fmt(round(th, 9)), fmt(g), fmt(gdb)])
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


def cmd_rates(args, cfg: RunConfig) -> int:
    scheme = args.scheme or cfg.resolved_scheme
    text = theory_curves(scheme, cfg.M, cfg.K, cfg.snr_grid_db)
    _emit(text, args.out)
    nb = bits_per_symbol(scheme, cfg.M, cfg.K)
    log.info("%s: %d bits per symbol, %.9g bit/s at %g Hz", scheme, nb, nb * cfg.prf_hz,
             cfg.prf_hz)
    return EXIT_OK


COMMANDS = {"build-dict": cmd_build_dict, "simulate": cmd_simulate, "robustness": cmd_robustness,
            "pattern": cmd_pattern, "rates": cmd_rates}


_GRID_FLAGS = ("--snr", "--sigma")


def _glue_grids(argv: Sequence[str]) -> list[str]:
    """Turn ``--snr -20:2:20`` into ``--snr=-20:2:20`` so argparse accepts the leading minus."""
    out: list[str] = []
    it = iter(argv)
    for tok in it:
        if tok in _GRID_FLAGS:
            nxt = next(it, None)
            out.append(tok if nxt is None else f"{tok}={nxt}")
        else:
            out.append(tok)
    return out


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        args = build_parser().parse_args(_glue_grids(argv))
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(message)s", stream=sys.stderr)
        cfg = _config(args)
        worker_count(cfg.workers)  # validates DFRC_THREADS early
        return COMMANDS[args.command](args, cfg)
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DFRCError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
