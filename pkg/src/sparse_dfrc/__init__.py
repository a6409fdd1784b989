"""Sparse transmit-array dual-function radar-communications toolkit.

Information is embedded in which K of M candidate antennas are active (and,
optionally, in which waveform each active antenna radiates), while the
beampattern stays fit for the radar mission.
"""
from .arrays import (ArrayGeometry, Permutation, PhasePlan, ReceiveArray, Subarray,
                     ambiguity_angles, maximal_spread_angle, phase_rotation_plan, rotated_symbol,
                     steering_vector, subarray_steering)
from .dictionary import (Codeword, DistanceStats, SymbolDictionary, analytic_extreme_pair,
                         build_radar_dictionary_by_enumeration, build_regularized_dictionary,
                         distance_stats, enumerate_subarrays, greedy_maxmin_dictionary,
                         load_dictionary, permute_augment, save_dictionary)
from .errors import ConfigError, DFRCError, InfeasibleError, NotBooleanError
from .pattern import PatternGrid, beampattern, design_minimax_weights, ripple_metric
from .signaling import (SchemeConfig, bits_per_symbol, decode_nearest, decode_regularized, encode,
                        encode_index)
from .simulator import MonteCarloConfig, data_rate, run_angle_robustness, run_ser_sweep
from .waveforms import WaveformBank, build_waveform_bank, matched_filter, rotate_bank

__version__ = "0.1.0"
