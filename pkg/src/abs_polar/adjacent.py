"""Adjacent-bits channels: 4-ary input channels carrying a pair of consecutive bits.

A channel is a table ``probs[y, 2*u1 + u2] = V(y | u1, u2)``. Two independent
copies of a channel combine into three channels one layer deeper, either with
the plain double-bits wiring (DOWN, MID, UP) or with the swapped wiring
(SWAP_DOWN, SWAP_MID, SWAP_UP) used when the middle bits of a block are
exchanged.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass

import numpy as np

from .channels import STOCHASTIC_TOL, BmsChannel, capacity, capacity_of_table

DEFAULT_MU = 250_000
MIN_MU = 8
PRUNE_MASS = 1e-15
# Upper bound on floats materialized at once by a chunked transform.
_CHUNK_FLOATS = 1 << 22


class Transform(enum.Enum):
    DOWN = "▽"
    MID = "◇"
    UP = "△"
    SWAP_DOWN = "▼"
    SWAP_MID = "◆"
    SWAP_UP = "▲"

    @property
    def swapped(self) -> bool:
        return self in (Transform.SWAP_DOWN, Transform.SWAP_MID, Transform.SWAP_UP)

    @property
    def known_prefix(self) -> int:
        """Number of leading bits that move from the input to the output side."""
        return {"▽": 0, "◇": 1, "△": 2, "▼": 0, "◆": 1, "▲": 2}[self.value]

    @classmethod
    def coerce(cls, kind: "Transform | str") -> "Transform":
        if isinstance(kind, cls):
            return kind
        for member in cls:
            if kind in (member.value, member.name, member.name.lower()):
                return member
        raise ValueError(f"unknown transform kind {kind!r}")


DB_KINDS = (Transform.DOWN, Transform.MID, Transform.UP)
SDB_KINDS = (Transform.SWAP_DOWN, Transform.SWAP_MID, Transform.SWAP_UP)


def _kernel_indices(swapped: bool) -> tuple[np.ndarray, np.ndarray]:
    """Column indices into the two channel copies for each (u1, u2, u3, u4).

    Plain wiring reads V(y1 | u1+u2, u3+u4) V(y2 | u2, u4); swapped wiring
    reads V(y1 | u1+u3, u2+u4) V(y2 | u3, u4).
    """
    first, second = [], []
    for u1, u2, u3, u4 in itertools.product((0, 1), repeat=4):
        if swapped:
            first.append(2 * (u1 ^ u3) + (u2 ^ u4))
            second.append(2 * u3 + u4)
        else:
            first.append(2 * (u1 ^ u2) + (u3 ^ u4))
            second.append(2 * u2 + u4)
    return np.array(first), np.array(second)


KERNEL_INDICES = {False: _kernel_indices(False), True: _kernel_indices(True)}


@dataclass(frozen=True, eq=False)
class AdjacentBitsChannel:
    probs: np.ndarray

    def __post_init__(self):
        probs = np.ascontiguousarray(self.probs, dtype=np.float64)
        if probs.ndim != 2 or probs.shape[1] != 4 or probs.shape[0] == 0:
            raise ValueError(f"expected an (M, 4) table, got shape {probs.shape}")
        if np.any(probs < 0) or not np.all(np.isfinite(probs)):
            raise ValueError("transition probabilities must be finite and nonnegative")
        col = probs.sum(axis=0)
        if np.any(np.abs(col - 1.0) > STOCHASTIC_TOL):
            raise ValueError(f"columns must sum to 1, got {col}")
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    @property
    def num_outputs(self) -> int:
        return self.probs.shape[0]


@dataclass(frozen=True)
class BitChannelPair:
    first: BmsChannel
    second: BmsChannel


def init_pair(channel: BmsChannel) -> AdjacentBitsChannel:
    """V(y1, y2 | u1, u2) = W(y1 | u1 + u2) W(y2 | u2), outputs ordered by (y1, y2)."""
    w = channel.probs
    probs = np.empty((w.shape[0], w.shape[0], 2, 2))
    for u1, u2 in itertools.product((0, 1), repeat=2):
        probs[:, :, u1, u2] = np.outer(w[:, u1 ^ u2], w[:, u2])
    return AdjacentBitsChannel(_prune(probs.reshape(-1, 4)))


def _prune(rows: np.ndarray) -> np.ndarray:
    return rows[rows.sum(axis=1) >= PRUNE_MASS]


def _transform_rows(table: np.ndarray, kind: Transform, lo: int, hi: int) -> np.ndarray:
    """Output rows generated by first-copy outputs ``lo:hi`` (all second-copy outputs)."""
    idx_first, idx_second = KERNEL_INDICES[kind.swapped]
    block = 0.25 * table[lo:hi, None, idx_first] * table[None, :, idx_second]
    block = block.reshape(hi - lo, table.shape[0], 2, 2, 2, 2)
    prefix = kind.known_prefix
    if prefix == 0:
        block = block.sum(axis=(4, 5))
    elif prefix == 1:
        block = block.sum(axis=5)
    return block.reshape(-1, 4)


def _output_count(num_outputs: int, kind: Transform) -> int:
    return num_outputs * num_outputs * (1 << kind.known_prefix)


def _bucket_ids(rows: np.ndarray, b: int) -> np.ndarray:
    post = rows[:, :3] / rows.sum(axis=1, keepdims=True)
    cells = np.floor(b * post).astype(np.int64)
    np.clip(cells, 0, b, out=cells)
    return (cells[:, 0] * (b + 1) + cells[:, 1]) * (b + 1) + cells[:, 2]


def _bucket_width(mu: int) -> int:
    if mu < MIN_MU:
        raise ValueError(f"mu must be at least {MIN_MU}, got {mu}")
    b = int(round(mu ** (1.0 / 3.0)))
    while b**3 > mu:
        b -= 1
    while (b + 1) ** 3 <= mu:
        b += 1
    return b - 1


def _merge_rows(rows: np.ndarray, b: int) -> np.ndarray:
    ids = _bucket_ids(rows, b)
    uniq, inverse = np.unique(ids, return_inverse=True)
    out = np.zeros((uniq.size, 4))
    np.add.at(out, inverse, rows)
    return out


def quantize(channel: AdjacentBitsChannel, mu: int = DEFAULT_MU) -> AdjacentBitsChannel:
    """Merge outputs whose posteriors on (00, 01, 10) fall into the same cube cell.

    With b = floor(mu^(1/3)) - 1 the cell of output y is
    (floor(b p1), floor(b p2), floor(b p3)); empty cells are dropped.
    """
    b = _bucket_width(mu)
    if channel.num_outputs <= mu:
        return channel
    return AdjacentBitsChannel(_merge_rows(_prune(channel.probs), b))


def transform(channel: AdjacentBitsChannel, kind: "Transform | str",
              mu: int | None = None) -> AdjacentBitsChannel:
    """Apply one of the six transforms, optionally followed by quantization to ``mu``.

    When quantizing a large output, rows are generated in chunks and merged
    into their cells on the fly, so the full product alphabet never lives in
    memory at once. The result equals ``quantize(transform(V, kind), mu)``.
    """
    kind = Transform.coerce(kind)
    table = channel.probs
    size = table.shape[0]
    if mu is None or _output_count(size, kind) <= mu:
        if mu is not None:
            _bucket_width(mu)
        return AdjacentBitsChannel(_prune(_transform_rows(table, kind, 0, size)))
    b = _bucket_width(mu)
    cells = (b + 1) ** 3
    acc = None
    pending: list[np.ndarray] = []
    live = 0
    step = max(1, _CHUNK_FLOATS // (16 * size))
    for lo in range(0, size, step):
        rows = _prune(_transform_rows(table, kind, lo, min(size, lo + step)))
        if acc is None:
            # Hold rows back until the live alphabet is known to exceed mu.
            pending.append(rows)
            live += rows.shape[0]
            if live <= mu:
                continue
            acc = np.zeros((cells, 4))
            rows = np.concatenate(pending)
            pending = []
        if rows.size == 0:
            continue
        ids = _bucket_ids(rows, b)
        for col in range(4):
            acc[:, col] += np.bincount(ids, weights=rows[:, col], minlength=cells)
    if acc is None:
        return AdjacentBitsChannel(np.concatenate(pending))
    return AdjacentBitsChannel(acc[acc.sum(axis=1) > 0])


def merge_equivalent(channel: AdjacentBitsChannel, decimals: int = 12) -> AdjacentBitsChannel:
    """Losslessly merge outputs whose posteriors agree to ``decimals`` places.

    Outputs with equal posteriors carry the same information about the
    input pair, so merging them leaves every derived capacity unchanged.
    """
    rows = channel.probs
    post = np.round(rows / rows.sum(axis=1, keepdims=True), decimals)
    _, first, inverse = np.unique(post, axis=0, return_index=True, return_inverse=True)
    if first.size == rows.shape[0]:
        return channel
    merged = np.zeros((first.size, 4))
    np.add.at(merged, inverse.ravel(), rows)
    return AdjacentBitsChannel(merged)


def db_transform(channel: AdjacentBitsChannel):
    """The plain (DOWN, MID, UP) triple, without quantization."""
    return tuple(transform(channel, kind) for kind in DB_KINDS)


def sdb_transform(channel: AdjacentBitsChannel):
    """The swapped (SWAP_DOWN, SWAP_MID, SWAP_UP) triple, without quantization."""
    return tuple(transform(channel, kind) for kind in SDB_KINDS)


def split(channel: AdjacentBitsChannel) -> BitChannelPair:
    """Bit-channels of the first input (second marginalized) and the second input (first known)."""
    v = channel.probs.reshape(-1, 2, 2)
    first = 0.5 * v.sum(axis=2)
    second = 0.5 * v.reshape(-1, 2)
    return BitChannelPair(BmsChannel(first), BmsChannel(second))


def split_capacities(channel: AdjacentBitsChannel) -> tuple[float, float]:
    pair = split(channel)
    return capacity(pair.first), capacity(pair.second)


def joint_information(channel: AdjacentBitsChannel) -> float:
    """Mutual information between the input pair and the output."""
    return capacity_of_table(channel.probs)


def g_metric(channel: AdjacentBitsChannel) -> float:
    """Polarization level I1(1 - I1) + I2(1 - I2) of the two split bit-channels."""
    i1, i2 = split_capacities(channel)
    return i1 * (1 - i1) + i2 * (1 - i2)


def is_perfect(channel: AdjacentBitsChannel, tol: float = 1e-12) -> bool:
    """Every output identifies the input pair."""
    return bool(np.all((channel.probs > tol).sum(axis=1) <= 1))
