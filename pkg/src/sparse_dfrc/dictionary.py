"""Symbol dictionaries built from antenna subsets and waveform permutations.

Every codeword is stored in its post-rotation form: the entry carried by
waveform ``k`` is ``exp(j 2 pi l_k / M)`` where ``l_k`` is the antenna that
waveform is routed to (selection and hybrid schemes), or ``+1/-1`` for the
regularized scheme.
"""
from __future__ import annotations

import itertools
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Optional, Sequence

import numpy as np

from .arrays import ArrayGeometry, Permutation, ReceiveArray, Subarray, rotated_symbol
from .errors import ConfigError, InfeasibleError
from .pattern import PatternGrid, PhaseProfile, ripple_metric, support_key, zero_phase

SCHEMES = ("selection", "hybrid", "regularized")
FORMAT_NAME = "sparse-dfrc-dictionary"
FORMAT_VERSION = 1

# ripples closer than this rank as equal (lexicographic order then decides)
RIPPLE_DECIMALS = 9
MAX_PERMUTE_K = 10


@dataclass(frozen=True, eq=False)
class Codeword:
    sub: Subarray
    vector: np.ndarray
    bit_index: int
    perm: Optional[Permutation] = None

    @property
    def ordered(self) -> tuple[int, ...]:
        """Antenna index driven by each waveform, in waveform order."""
        if self.perm is None:
            return self.sub.indices
        return tuple(self.perm.apply(self.sub.indices))

    @property
    def K(self) -> int:
        return self.sub.K


def make_codeword(sub: Subarray, M: int, bit_index: int,
                  perm: Optional[Permutation] = None) -> Codeword:
    sub.check(M)
    ordered = sub.indices if perm is None else perm.apply(sub.indices)
    return Codeword(sub, rotated_symbol(ordered, M), bit_index, perm)


@dataclass(eq=False)
class SymbolDictionary:
    scheme: str
    M: int
    K: int
    entries: list[Codeword]
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ConfigError(f"unknown scheme {self.scheme!r}")
        L = len(self.entries)
        if L < 1 or L & (L - 1):
            raise ConfigError(f"dictionary size {L} is not a power of two")
        if [c.bit_index for c in self.entries] != list(range(L)):
            raise ConfigError("codeword bit indices must be 0..L-1 in order")
        if any(c.K != self.K or len(c.vector) != self.K for c in self.entries):
            raise ConfigError("codeword length does not match K")
        if self.scheme == "regularized":
            for c in self.entries:
                if any(a // 2 != k for k, a in enumerate(c.sub.indices)):
                    raise ConfigError(f"codeword {c.sub.indices} breaks the subgroup structure")

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[Codeword]:
        return iter(self.entries)

    def __getitem__(self, i: int) -> Codeword:
        return self.entries[i]

    @property
    def Nb(self) -> int:
        return len(self.entries).bit_length() - 1

    @property
    def vectors(self) -> np.ndarray:
        return np.array([c.vector for c in self.entries])

    def truncated(self, bits: int) -> "SymbolDictionary":
        """Sub-rate alphabet: the first ``2**bits`` entries in construction order."""
        if not 0 <= bits <= self.Nb:
            raise ConfigError(f"cannot take {bits} bits from a {self.Nb}-bit dictionary")
        if bits == self.Nb:
            return self
        return SymbolDictionary(self.scheme, self.M, self.K, self.entries[: 1 << bits],
                                dict(self.meta))

    def min_distance(self) -> float:
        return distance_stats(self).global_min


class SubarraySpace:
    """All K-subsets of ``range(M)`` in lexicographic order."""

    def __init__(self, M: int, K: int):
        if not 1 <= K <= M:
            raise ConfigError(f"need 1 <= K <= M, got M={M}, K={K}")
        self.M, self.K = M, K

    def __len__(self) -> int:
        return math.comb(self.M, self.K)

    def __iter__(self) -> Iterator[Subarray]:
        return (Subarray(c) for c in itertools.combinations(range(self.M), self.K))

    def as_array(self) -> np.ndarray:
        """(L, K) integer matrix of index sets."""
        flat = np.fromiter(
            itertools.chain.from_iterable(itertools.combinations(range(self.M), self.K)),
            dtype=np.int64, count=len(self) * self.K,
        )
        return flat.reshape(len(self), self.K)


def enumerate_subarrays(M: int, K: int) -> SubarraySpace:
    return SubarraySpace(M, K)


def analytic_extreme_pair(M: int, K: int) -> tuple[Codeword, Codeword]:
    """Two codewords ``4K`` apart: antennas ``0..K-1`` and ``M/2..M/2+K-1``."""
    if M % 2:
        raise ConfigError(f"the antipodal pair needs an even M, got {M}")
    if not 1 <= K <= M // 2:
        raise ConfigError(f"the antipodal pair needs K <= M/2, got K={K}, M={M}")
    first = make_codeword(Subarray(tuple(range(K))), M, 0)
    second = make_codeword(Subarray(tuple(range(M // 2, M // 2 + K))), M, 1)
    return first, second


def _sq_distances(cand: np.ndarray, chosen: Sequence[int], M: int) -> np.ndarray:
    """Squared distance from every candidate index row to one ordered index set."""
    diff = cand - np.asarray(chosen)[None, :]
    return 2 * cand.shape[1] - 2 * np.cos(2 * np.pi * diff / M).sum(axis=1)


def greedy_maxmin_dictionary(M: int, K: int, size: int,
                             candidates: Optional[np.ndarray] = None) -> SymbolDictionary:
    """Grow a selection dictionary by repeatedly adding the max-min-distance candidate.

    Starts from the antipodal pair when M is even (and that pair is among the
    candidates), otherwise from the first candidate.  Ties go to the
    lexicographically smallest index set.
    """
    cand = SubarraySpace(M, K).as_array() if candidates is None else np.asarray(candidates)
    if size < 1 or size & (size - 1):
        raise ConfigError(f"dictionary size {size} is not a power of two")
    if size > len(cand):
        raise ConfigError(f"size {size} exceeds the {len(cand)} candidate subarrays")
    lookup = {tuple(row): i for i, row in enumerate(cand.tolist())}
    start: list[int] = []
    if M % 2 == 0 and K <= M // 2:
        pair = [tuple(range(K)), tuple(range(M // 2, M // 2 + K))]
        if all(p in lookup for p in pair):
            start = [lookup[p] for p in pair]
    if not start:
        start = [0]
    start = start[:size]
    running = np.full(len(cand), np.inf)
    picked: list[int] = []
    for i in start:
        running = np.minimum(running, _sq_distances(cand, cand[i], M))
        picked.append(i)
    taken = np.zeros(len(cand), dtype=bool)
    taken[picked] = True
    while len(picked) < size:
        score = np.where(taken, -np.inf, np.round(running, RIPPLE_DECIMALS))
        i = int(np.argmax(score))
        picked.append(i)
        taken[i] = True
        running = np.minimum(running, _sq_distances(cand, cand[i], M))
    entries = [make_codeword(Subarray(tuple(cand[i])), M, b) for b, i in enumerate(picked)]
    return SymbolDictionary("selection", M, K, entries, {"construction": "greedy-maxmin"})


def rank_subarrays_by_ripple(geometry: ArrayGeometry, K: int, receive: ReceiveArray,
                             grid: PatternGrid, sidelobe_eps: float,
                             phase_profile: PhaseProfile = zero_phase,
                             workers: int = 1) -> list[tuple[float, tuple[int, ...]]]:
    """(ripple, indices) for every subarray meeting the sidelobe requirement, best first.

    Subarrays with the same distinct virtual positions share one design, so
    only one representative per support is optimized.  Results are sorted
    after collection, so the order does not depend on ``workers``.
    """
    groups: dict[tuple[float, ...], list[tuple[int, ...]]] = {}
    for sub in SubarraySpace(geometry.M, K):
        groups.setdefault(support_key(sub, geometry, receive), []).append(sub.indices)

    def evaluate(members):
        return ripple_metric(Subarray(members[0]), geometry, receive, grid, sidelobe_eps,
                             phase_profile)

    keys = list(groups)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            ripples = list(pool.map(evaluate, (groups[k] for k in keys)))
    else:
        ripples = [evaluate(groups[k]) for k in keys]
    ranked = [
        (rho, idx)
        for key, rho in zip(keys, ripples) if rho is not None
        for idx in groups[key]
    ]
    ranked.sort(key=lambda item: (round(item[0], RIPPLE_DECIMALS), item[1]))
    return ranked


def build_radar_dictionary_by_enumeration(geometry: ArrayGeometry, K: int, size: int,
                                          receive: ReceiveArray, grid: PatternGrid,
                                          sidelobe_eps: float,
                                          phase_profile: PhaseProfile = zero_phase,
                                          workers: int = 1) -> SymbolDictionary:
    """The ``size`` subarrays with the smallest minimax mainlobe ripple."""
    if size < 1 or size & (size - 1):
        raise ConfigError(f"dictionary size {size} is not a power of two")
    if size > math.comb(geometry.M, K):
        raise ConfigError(f"size {size} exceeds C({geometry.M},{K})")
    ranked = rank_subarrays_by_ripple(geometry, K, receive, grid, sidelobe_eps, phase_profile,
                                      workers)
    if len(ranked) < size:
        raise InfeasibleError(
            f"only {len(ranked)} subarrays meet the {20 * math.log10(sidelobe_eps):.1f} dB "
            f"sidelobe requirement, {size} requested"
        )
    chosen = ranked[:size]
    entries = [make_codeword(Subarray(idx), geometry.M, b) for b, (_, idx) in enumerate(chosen)]
    meta = {"construction": "ripple-ranking", "ripple": [rho for rho, _ in chosen],
            "sidelobe_db": 20 * math.log10(sidelobe_eps)}
    return SymbolDictionary("selection", geometry.M, K, entries, meta)


def _as_real(vectors: np.ndarray) -> np.ndarray:
    """[re | im] stacking, so real inner products equal Re<u, v>."""
    return np.ascontiguousarray(np.concatenate([vectors.real, vectors.imag], axis=-1))


def _best_permutation(vector: np.ndarray, perms: np.ndarray, kept: np.ndarray,
                      rows: int = 2048) -> int:
    """Row of ``perms`` maximizing the min distance of ``vector[perm]`` to ``kept``.

    Ties resolve to the lowest row.
    """
    K = vector.shape[0]
    cand = _as_real(vector[perms])
    ref = np.ascontiguousarray(_as_real(kept).T)
    worst = np.empty(len(cand))
    for s in range(0, len(cand), rows):
        worst[s:s + rows] = (cand[s:s + rows] @ ref).max(axis=1)
    return int(np.argmax(np.round(2 * K - 2 * worst, RIPPLE_DECIMALS)))


def permute_augment(base: SymbolDictionary, max_K: int = MAX_PERMUTE_K) -> SymbolDictionary:
    """Reorder each codeword's waveforms to push it away from the ones kept before it.

    Codewords are visited in dictionary order; each keeps the permutation with
    the largest minimum distance to all previously kept codewords (the
    lexicographically first permutation on ties, so the first codeword keeps
    the identity).
    """
    if base.scheme != "selection":
        raise ConfigError("permutation augmentation needs a selection dictionary")
    K = base.K
    if K > max_K:
        raise ConfigError(f"refusing to enumerate {K}! permutations (K > {max_K})")
    perms = np.array(list(itertools.permutations(range(K))), dtype=np.int64)
    kept_vectors: list[np.ndarray] = []
    entries = []
    for cw in base:
        best = _best_permutation(cw.vector, perms, np.array(kept_vectors)) if kept_vectors else 0
        perm = Permutation(tuple(perms[best]))
        new = make_codeword(cw.sub, base.M, cw.bit_index, perm)
        kept_vectors.append(new.vector)
        entries.append(new)
    meta = dict(base.meta)
    meta["construction"] = f"{base.meta.get('construction', 'selection')}+permutation"
    return SymbolDictionary("hybrid", base.M, K, entries, meta)


def regularized_bits(bit_index: int, K: int, bits: int) -> list[int]:
    """Per-subgroup bits: information bit ``i`` is repeated on ``K // bits`` adjacent subgroups."""
    info = [(bit_index >> (bits - 1 - i)) & 1 for i in range(bits)]
    rep = K // bits
    return [info[k // rep] for k in range(K)]


def build_regularized_dictionary(K: int, bits: Optional[int] = None) -> SymbolDictionary:
    """All ``2**bits`` codewords of the paired-antenna scheme (``M = 2K``).

    Subgroup ``k`` drives antenna ``2k`` for bit 0 and ``2k+1`` for bit 1; after
    rotation the entry is ``+1`` for bit 0 and ``-1`` for bit 1.
    """
    if K < 1:
        raise ConfigError("K must be positive")
    bits = K if bits is None else bits
    if not 1 <= bits <= K or K % bits:
        raise ConfigError(f"{bits} bits cannot be spread evenly over {K} subgroups")
    entries = []
    for b in range(1 << bits):
        sg = regularized_bits(b, K, bits)
        sub = Subarray(tuple(2 * k + s for k, s in enumerate(sg)))
        vector = np.where(np.asarray(sg) == 0, 1.0, -1.0).astype(complex)
        entries.append(Codeword(sub, vector, b))
    return SymbolDictionary("regularized", 2 * K, K, entries,
                            {"construction": "regularized", "repetition": K // bits})


@dataclass
class DistanceStats:
    d_min: np.ndarray
    d_max: np.ndarray

    @property
    def global_min(self) -> float:
        return float(self.d_min.min())

    @property
    def global_max(self) -> float:
        return float(self.d_max.max())


def pairwise_sq_distances(vectors: np.ndarray) -> np.ndarray:
    vectors = np.asarray(vectors)
    norms = np.sum(np.abs(vectors) ** 2, axis=1)
    inner = vectors.real @ vectors.real.T + vectors.imag @ vectors.imag.T
    D = norms[:, None] + norms[None, :] - 2 * inner
    np.fill_diagonal(D, 0.0)
    return np.maximum(D, 0.0)


def distance_stats(dictionary: SymbolDictionary) -> DistanceStats:
    """Per-codeword nearest and farthest squared distance to the other codewords."""
    if len(dictionary) < 2:
        raise ConfigError("distance statistics need at least two codewords")
    D = pairwise_sq_distances(dictionary.vectors)
    off = ~np.eye(len(D), dtype=bool)
    d_min = np.where(off, D, np.inf).min(axis=1)
    d_max = np.where(off, D, -np.inf).max(axis=1)
    return DistanceStats(d_min, d_max)


def dictionary_to_json(dictionary: SymbolDictionary) -> dict:
    return {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "scheme": dictionary.scheme,
        "M": dictionary.M,
        "K": dictionary.K,
        "Nb": dictionary.Nb,
        "entries": [
            {
                "bit_index": c.bit_index,
                "indices": list(c.sub.indices),
                "perm": None if c.perm is None else list(c.perm.perm),
                "vector_re": [float(v) for v in c.vector.real],
                "vector_im": [float(v) for v in c.vector.imag],
            }
            for c in dictionary
        ],
        "meta": dictionary.meta,
    }


def dictionary_from_json(doc: dict) -> SymbolDictionary:
    if doc.get("format") != FORMAT_NAME:
        raise ConfigError("not a dictionary document")
    if doc.get("version") != FORMAT_VERSION:
        raise ConfigError(f"unsupported dictionary version {doc.get('version')}")
    try:
        entries = [
            Codeword(
                Subarray(tuple(e["indices"])),
                np.array(e["vector_re"], dtype=float) + 1j * np.array(e["vector_im"], dtype=float),
                int(e["bit_index"]),
                None if e.get("perm") is None else Permutation(tuple(e["perm"])),
            )
            for e in doc["entries"]
        ]
        out = SymbolDictionary(doc["scheme"], int(doc["M"]), int(doc["K"]), entries,
                               dict(doc.get("meta", {})))
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"malformed dictionary document: {exc}") from exc
    if out.Nb != doc.get("Nb", out.Nb):
        raise ConfigError("Nb does not match the number of entries")
    return out


def save_dictionary(dictionary: SymbolDictionary, path) -> None:
    Path(path).write_text(json.dumps(dictionary_to_json(dictionary), indent=1) + "\n",
                          encoding="utf-8")


def load_dictionary(path) -> SymbolDictionary:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read dictionary {path}: {exc}") from exc
    return dictionary_from_json(doc)
