"""Turning real-valued signal vectors into single hypervectors.

The pipeline: squash each component through tanh, bin the result into one
of ``num_levels`` quantization levels, look up that level's hypervector,
bind it to the component's position vector by XOR, and take the bitwise
majority over all components.

Level vectors form a gradient between two independent random endpoints:
walking from level 0 to the last level flips disjoint slices of their
disagreeing bits, so hamming distance grows exactly linearly (up to slice
rounding) and never backtracks. Nearby signal values therefore land on
nearby hypervectors, distant values on unrelated ones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import _kernels
from .errors import (
    DimensionMismatchError,
    InvalidValueError,
    TooManyLevelsError,
)
from .hv import (
    DEFAULT_DIM,
    Hypervector,
    Permutation,
    SeedContext,
    check_dim,
    num_words,
    random_hv,
    random_table,
)

__all__ = [
    "MAX_LEVELS",
    "MIN_LEVELS",
    "EncoderConfig",
    "LevelTable",
    "PositionBasis",
    "SignalEncoder",
    "encode_sequence",
    "encode_set",
]

MIN_LEVELS = 2
MAX_LEVELS = 1025


@dataclass(frozen=True)
class EncoderConfig:
    """Shape and seeding of one encoder.

    length: number of signal components each input must carry.
    dim: hypervector width in bits.
    num_levels: quantization bins across the tanh range.
    seed: master seed all of the encoder's random material derives from.
    """

    length: int
    dim: int = DEFAULT_DIM
    num_levels: int = 65
    seed: int = 0

    def __post_init__(self):
        if not isinstance(self.length, (int, np.integer)) or self.length < 1:
            raise InvalidValueError(f"length must be a positive integer, got {self.length!r}")
        check_dim(self.dim)
        if not MIN_LEVELS <= self.num_levels <= MAX_LEVELS:
            raise InvalidValueError(
                f"num_levels {self.num_levels} outside [{MIN_LEVELS}, {MAX_LEVELS}]"
            )


class LevelTable:
    """Hypervectors for quantization levels along one endpoint pair.

    Endpoints come from ``ctx`` at indices 0 and 1. Their disagreeing bit
    positions are shuffled by a seeded permutation and cut into
    ``num_levels - 1`` near-equal contiguous slices (larger slices first);
    level i+1 is level i with slice i flipped.
    """

    def __init__(self, dim: int, num_levels: int, ctx: SeedContext):
        dim = check_dim(dim)
        if num_levels < MIN_LEVELS:
            raise InvalidValueError(f"need at least {MIN_LEVELS} levels, got {num_levels}")
        if num_levels > MAX_LEVELS:
            raise InvalidValueError(f"num_levels {num_levels} above cap {MAX_LEVELS}")
        self.dim = dim
        self.num_levels = num_levels
        self.ctx = ctx

        low = random_hv(replace(ctx, index=0), dim)
        high = random_hv(replace(ctx, index=1), dim)
        diff = np.nonzero((low ^ high).bits())[0]
        steps = num_levels - 1
        if steps > diff.shape[0]:
            raise TooManyLevelsError(
                f"{num_levels} levels need {steps} disagreeing bits, endpoints share "
                f"all but {diff.shape[0]}"
            )
        order = random_table(SeedContext(ctx.master_seed, "level-order", ctx.index), diff.shape[0])
        diff = diff[order]

        base, rem = divmod(diff.shape[0], steps)
        sizes = [base + 1] * rem + [base] * (steps - rem)
        self.flip_schedule = np.asarray(sizes, dtype=np.int64)

        bits = low.bits()
        n_w = num_words(dim)
        self.words = np.empty((num_levels, n_w), dtype=np.uint64)
        self.words[0] = low.words
        start = 0
        for i, size in enumerate(sizes):
            sl = diff[start : start + size]
            bits[sl] ^= 1
            start += size
            full = np.zeros(n_w * 64, dtype=np.uint8)
            full[:dim] = bits
            self.words[i + 1] = np.packbits(full, bitorder="little").view(np.uint64)
        self.words.setflags(write=False)
        self.levels = [Hypervector(dim, self.words[i]) for i in range(num_levels)]

    def distance(self, i: int, j: int) -> int:
        """Exact hamming distance between levels i and j from the schedule."""
        lo, hi = sorted((i, j))
        if lo < 0 or hi >= self.num_levels:
            raise InvalidValueError(f"level index outside [0, {self.num_levels - 1}]")
        return int(self.flip_schedule[lo:hi].sum())

    def quantize(self, x: float) -> int:
        """Level index for one raw signal value (tanh then uniform bins)."""
        if not math.isfinite(x):
            raise InvalidValueError(f"cannot quantize non-finite value {x!r}")
        return int(_quantize_array(np.asarray([x], dtype=np.float64), self.num_levels)[0])


def _quantize_array(values: np.ndarray, num_levels: int) -> np.ndarray:
    # Half-up rounding: floor(x + 0.5), not round-half-even.
    pos = (np.tanh(values) + 1.0) / 2.0 * (num_levels - 1)
    idx = np.floor(pos + 0.5).astype(np.int64)
    return np.clip(idx, 0, num_levels - 1)


class PositionBasis:
    """One random role vector per signal component, drawn from ``ctx``."""

    def __init__(self, dim: int, length: int, ctx: SeedContext):
        dim = check_dim(dim)
        if length < 1:
            raise InvalidValueError("position basis needs at least one slot")
        self.dim = dim
        self.length = length
        self.ctx = ctx
        self.words = np.empty((length, num_words(dim)), dtype=np.uint64)
        for i in range(length):
            self.words[i] = random_hv(replace(ctx, index=i), dim).words
        self.words.setflags(write=False)
        self.positions = [Hypervector(dim, self.words[i]) for i in range(length)]

    def __len__(self) -> int:
        return self.length

    def __getitem__(self, i: int) -> Hypervector:
        return self.positions[i]


class SignalEncoder:
    """Deterministic map from a real vector to one hypervector.

    All random material (levels, positions, permutation, tiebreak) is
    derived from ``config.seed`` under fixed namespaces, so two encoders
    with equal configs encode identically with nothing shared or stored.
    """

    def __init__(self, config: EncoderConfig):
        self.config = config
        seed = config.seed
        self.levels = LevelTable(
            config.dim, config.num_levels, SeedContext(seed, "level-endpoint", 0)
        )
        self.positions = PositionBasis(config.dim, config.length, SeedContext(seed, "position", 0))
        self.permutation = Permutation(SeedContext(seed, "permutation", 0), config.dim)
        self.tiebreak = random_hv(SeedContext(seed, "tiebreak", 0), config.dim)

    @property
    def dim(self) -> int:
        return self.config.dim

    def quantize(self, x: float) -> int:
        return self.levels.quantize(x)

    def _check_values(self, values) -> np.ndarray:
        arr = np.asarray(values, dtype=np.float64)
        if arr.ndim != 1:
            raise InvalidValueError(f"expected a flat value vector, got shape {arr.shape}")
        if arr.shape[0] != self.config.length:
            raise DimensionMismatchError(
                f"encoder expects {self.config.length} components, got {arr.shape[0]}"
            )
        if not np.isfinite(arr).all():
            bad = int(np.flatnonzero(~np.isfinite(arr))[0])
            raise InvalidValueError(f"non-finite value at component {bad}")
        return arr

    def encode(self, values) -> Hypervector:
        """Bitwise majority over per-component level-position bindings."""
        arr = self._check_values(values)
        idx = _quantize_array(arr, self.config.num_levels)
        words = _kernels.majority_bound_words(
            self.levels.words, idx, self.positions.words, self.tiebreak.words, self.config.dim
        )
        return Hypervector(self.config.dim, words)

    def encode_batch(self, rows: np.ndarray) -> list[Hypervector]:
        rows = np.asarray(rows, dtype=np.float64)
        if rows.ndim != 2:
            raise InvalidValueError(f"expected a 2-d batch, got shape {rows.shape}")
        return [self.encode(rows[i]) for i in range(rows.shape[0])]


def encode_set(items) -> Hypervector:
    """Order-free XOR fold of a non-empty vector collection."""
    items = list(items)
    if not items:
        raise InvalidValueError("cannot fold an empty set")
    out = items[0]
    for v in items[1:]:
        out = out ^ v
    return out


def encode_sequence(items, permutation: Permutation) -> Hypervector:
    """Order-sensitive fold: item k is buried under k applications of the
    permutation, so prepending never disturbs existing items' images."""
    items = list(items)
    if not items:
        raise InvalidValueError("cannot fold an empty sequence")
    out = items[-1]
    if out.dim != permutation.dim:
        raise DimensionMismatchError(f"dim {out.dim} vs permutation dim {permutation.dim}")
    for v in reversed(items[:-1]):
        out = permutation.apply(out, 1) ^ v
    return out
