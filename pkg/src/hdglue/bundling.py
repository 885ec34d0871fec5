"""Exact weighted majority bundling of hypervectors.

An accumulator keeps one signed tally per bit position: adding a vector
with weight w moves each tally by +w where the bit is 1 and -w where it
is 0. Weights are fixed-point integers in millionths, so accumulation is
exact integer arithmetic: any order of adds, subtracts, and merges over
the same multiset lands on identical counters, and removing a term
restores the prior state bit for bit.

Finalizing takes the per-bit sign; exact zero tallies fall back to a
seeded tiebreak vector so the result is still deterministic.
"""

from __future__ import annotations

import struct

import numpy as np

from . import _kernels
from .errors import (
    AccumulatorUnderflowError,
    DataFormatError,
    DimensionMismatchError,
    InvalidValueError,
)
from .hv import Hypervector, SeedContext, check_dim, num_words, random_hv

__all__ = [
    "MILLION",
    "ConsensusAccumulator",
    "majority",
    "normalized_weights",
    "to_millionths",
]

MILLION = 1_000_000


def to_millionths(weight) -> int:
    """Positive weight (votes) as an exact integer count of millionths."""
    if isinstance(weight, (bool, np.bool_)):
        raise InvalidValueError("weight must be numeric, not boolean")
    if isinstance(weight, (int, np.integer)):
        m = int(weight) * MILLION
    elif isinstance(weight, (float, np.floating)):
        f = float(weight)
        if not np.isfinite(f):
            raise InvalidValueError("weight must be finite")
        m = round(f * MILLION)
    else:
        raise InvalidValueError(f"weight must be numeric, got {type(weight).__name__}")
    if m <= 0:
        raise InvalidValueError(f"weight must be positive, got {weight!r}")
    return m


def normalized_weights(weights) -> list[float]:
    """Scale positive weights so they sum to their count (fractional votes)."""
    ws = [float(w) for w in weights]
    if not ws:
        return []
    if any(w <= 0 or not np.isfinite(w) for w in ws):
        raise InvalidValueError("weights must be positive and finite")
    total = sum(ws)
    return [w * len(ws) / total for w in ws]


class ConsensusAccumulator:
    """Signed per-bit vote tallies in integer millionths.

    ``tiebreak_ctx`` addresses the vector consulted wherever a tally is
    exactly zero, including the freshly constructed empty state.
    """

    __slots__ = ("dim", "counters", "total_weight", "term_count", "tiebreak_ctx", "_tiebreak")

    def __init__(self, dim: int, tiebreak_ctx: SeedContext):
        self.dim = check_dim(dim)
        self.counters = np.zeros(dim, dtype=np.int64)
        self.total_weight = 0
        self.term_count = 0
        self.tiebreak_ctx = tiebreak_ctx
        self._tiebreak = random_hv(tiebreak_ctx, dim)

    # -- mutation --------------------------------------------------------

    def _signs(self, v: Hypervector) -> np.ndarray:
        if v.dim != self.dim:
            raise DimensionMismatchError(f"dim {v.dim} vs accumulator dim {self.dim}")
        return 2 * v.bits().astype(np.int64) - 1

    def add(self, v: Hypervector, weight=1) -> None:
        m = to_millionths(weight)
        self.counters += m * self._signs(v)
        self.total_weight += m
        self.term_count += 1

    def sub(self, v: Hypervector, weight=1) -> None:
        """Remove one previously added term; exact inverse of :meth:`add`."""
        m = to_millionths(weight)
        if m > self.total_weight or self.term_count == 0:
            raise AccumulatorUnderflowError(
                f"cannot remove weight {m} from total {self.total_weight}"
            )
        signs = self._signs(v)  # validate before mutating anything
        self.counters -= m * signs
        self.total_weight -= m
        self.term_count -= 1

    def merge(self, other: "ConsensusAccumulator") -> "ConsensusAccumulator":
        """New accumulator holding both tallies."""
        if self.dim != other.dim:
            raise DimensionMismatchError(f"dim {self.dim} vs {other.dim}")
        if self.tiebreak_ctx != other.tiebreak_ctx:
            raise InvalidValueError("cannot merge accumulators with different tiebreaks")
        out = self.copy()
        out.counters += other.counters
        out.total_weight += other.total_weight
        out.term_count += other.term_count
        return out

    def copy(self) -> "ConsensusAccumulator":
        out = ConsensusAccumulator.__new__(ConsensusAccumulator)
        out.dim = self.dim
        out.counters = self.counters.copy()
        out.total_weight = self.total_weight
        out.term_count = self.term_count
        out.tiebreak_ctx = self.tiebreak_ctx
        out._tiebreak = self._tiebreak
        return out

    # -- readout ---------------------------------------------------------

    def finalize(self) -> Hypervector:
        """Majority vote per bit; zero tallies copy the tiebreak bit."""
        pos = self.counters > 0
        tie = self.counters == 0
        bits = (pos | (tie & (self._tiebreak.bits() == 1))).astype(np.uint8)
        return Hypervector.from_bits(bits)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ConsensusAccumulator):
            return NotImplemented
        return (
            self.dim == other.dim
            and self.total_weight == other.total_weight
            and self.term_count == other.term_count
            and self.tiebreak_ctx == other.tiebreak_ctx
            and bool(np.array_equal(self.counters, other.counters))
        )

    def __repr__(self) -> str:
        return (
            f"ConsensusAccumulator(dim={self.dim}, terms={self.term_count}, "
            f"total_weight={self.total_weight / MILLION:g})"
        )

    # -- serialization ---------------------------------------------------

    def state_bytes(self) -> bytes:
        """dim, total weight, term count, then counters, all little-endian."""
        return (
            struct.pack("<IqQ", self.dim, self.total_weight, self.term_count)
            + self.counters.astype("<i8").tobytes()
        )

    @classmethod
    def from_state_bytes(cls, data: bytes, tiebreak_ctx: SeedContext) -> "ConsensusAccumulator":
        if len(data) < 20:
            raise DataFormatError("accumulator blob shorter than its header")
        dim, total_weight, term_count = struct.unpack_from("<IqQ", data, 0)
        out = cls(dim, tiebreak_ctx)
        body = data[20:]
        if len(body) != dim * 8:
            raise DataFormatError(f"accumulator blob for dim {dim} has wrong payload size")
        if total_weight < 0:
            raise DataFormatError("negative total weight")
        counters = np.frombuffer(body, dtype="<i8").astype(np.int64)
        if np.abs(counters).max(initial=0) > total_weight:
            raise DataFormatError("counter magnitude exceeds total weight")
        out.counters = counters
        out.total_weight = total_weight
        out.term_count = term_count
        return out


def majority(vectors, tiebreak: Hypervector) -> Hypervector:
    """Equal-weight majority of a non-empty vector list, ties from ``tiebreak``.

    Matches an accumulator fed the same list with weight 1, via a packed
    bit-sliced count instead of per-term tallies.
    """
    vectors = list(vectors)
    if not vectors:
        raise InvalidValueError("majority of an empty list")
    dim = vectors[0].dim
    if tiebreak.dim != dim:
        raise DimensionMismatchError(f"tiebreak dim {tiebreak.dim} vs {dim}")
    words = np.empty((len(vectors), num_words(dim)), dtype=np.uint64)
    for i, v in enumerate(vectors):
        if v.dim != dim:
            raise DimensionMismatchError(f"dim {v.dim} vs {dim}")
        words[i] = v.words
    out = _kernels.majority_words(words, tiebreak.words, dim)
    return Hypervector.from_words(dim, out)
