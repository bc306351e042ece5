"""Code construction: swap-set selection, layer evolution and information sets."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .adjacent import (
    DEFAULT_MU,
    AdjacentBitsChannel,
    Transform,
    g_metric,
    init_pair,
    merge_equivalent,
    quantize,
    split_capacities,
    transform,
)
from .channels import BmsChannel

SPEC_HEADER = "ABS-POLAR v1"
MIN_SWAP_SCORE = 1e-12


def is_power_of_two(n: int) -> bool:
    return n >= 1 and n & (n - 1) == 0


def log2_exact(n: int) -> int:
    if not is_power_of_two(n):
        raise ValueError(f"{n} is not a power of two")
    return n.bit_length() - 1


def validate_swap_set(n0: int, swaps: Iterable[int]) -> tuple[int, ...]:
    """Check one layer's swap set and return it sorted.

    Each element i names the exchange of positions i and i+1 (1-based). The
    elements must be even, lie in [2, n0-2], and sit at least 4 apart.
    """
    items = tuple(sorted(int(i) for i in swaps))
    if n0 <= 2 and items:
        raise ValueError("the length-2 layer never swaps")
    for i in items:
        if i % 2:
            raise ValueError(f"swap index {i} in layer {n0} is odd")
        if not 2 <= i <= n0 - 2:
            raise ValueError(f"swap index {i} out of range for layer {n0}")
    for a, b in zip(items, items[1:]):
        if b - a < 4:
            raise ValueError(f"swap indices {a} and {b} in layer {n0} are closer than 4")
    return items


@dataclass(frozen=True)
class PermutationSpec:
    """Per-layer swap sets; layers absent from the mapping have no swaps."""

    n: int
    swap_sets: Mapping[int, tuple[int, ...]] = field(default_factory=dict)

    def __post_init__(self):
        log2_exact(self.n)
        clean = {}
        for n0, swaps in dict(self.swap_sets).items():
            n0 = int(n0)
            if not is_power_of_two(n0) or not 2 <= n0 <= self.n:
                raise ValueError(f"layer size {n0} is invalid for n={self.n}")
            items = validate_swap_set(n0, swaps)
            if items:
                clean[n0] = items
        object.__setattr__(self, "swap_sets", dict(sorted(clean.items())))

    def swaps(self, n0: int) -> tuple[int, ...]:
        return self.swap_sets.get(n0, ())

    @property
    def is_standard(self) -> bool:
        return not self.swap_sets

    @classmethod
    def standard(cls, n: int) -> "PermutationSpec":
        return cls(n, {})


@dataclass(frozen=True)
class CodeSpec:
    n: int
    k: int
    perms: PermutationSpec
    info_set: tuple[int, ...]

    def __post_init__(self):
        log2_exact(self.n)
        if self.perms.n != self.n:
            raise ValueError("permutation spec length does not match n")
        info = tuple(sorted(int(a) for a in self.info_set))
        if len(info) != self.k or len(set(info)) != self.k:
            raise ValueError(f"information set must hold {self.k} distinct indices")
        if info and (info[0] < 1 or info[-1] > self.n):
            raise ValueError("information indices must lie in [1, n]")
        object.__setattr__(self, "info_set", info)

    @property
    def m(self) -> int:
        return log2_exact(self.n)

    def frozen_mask(self) -> np.ndarray:
        """Boolean mask over 0-based positions, True where the bit is frozen to zero."""
        mask = np.ones(self.n, dtype=bool)
        mask[np.asarray(self.info_set, dtype=np.int64) - 1] = False
        return mask

    def to_text(self) -> str:
        lines = [SPEC_HEADER, f"n={self.n} k={self.k}"]
        for n0, swaps in self.perms.swap_sets.items():
            lines.append(f"I {n0} : " + " ".join(map(str, swaps)))
        lines.append("A : " + " ".join(map(str, self.info_set)))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "CodeSpec":
        lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
        if not lines or lines[0] != SPEC_HEADER:
            raise ValueError(f"missing {SPEC_HEADER!r} header")
        try:
            fields = dict(part.split("=", 1) for part in lines[1].split())
            n, k = int(fields["n"]), int(fields["k"])
        except (IndexError, KeyError, ValueError) as exc:
            raise ValueError("malformed 'n=<n> k=<k>' line") from exc
        swap_sets: dict[int, tuple[int, ...]] = {}
        info = None
        for line in lines[2:]:
            head, sep, body = line.partition(":")
            if not sep:
                raise ValueError(f"malformed line {line!r}")
            values = tuple(int(v) for v in body.split())
            head = head.split()
            if head == ["A"]:
                if info is not None:
                    raise ValueError("duplicate information set line")
                info = values
            elif len(head) == 2 and head[0] == "I":
                n0 = int(head[1])
                if n0 in swap_sets:
                    raise ValueError(f"duplicate swap set for layer {n0}")
                swap_sets[n0] = values
            else:
                raise ValueError(f"malformed line {line!r}")
        if info is None:
            raise ValueError("missing information set line")
        return cls(n, k, PermutationSpec(n, swap_sets), info)


def select_swaps(scores: Sequence[float], min_score: float = MIN_SWAP_SCORE) -> list[int]:
    """Maximum-weight subset of 1-based indices with no two adjacent.

    Follows the recursion M_j = max(M_{j-1}, Score(j) + M_{j-2}), where the
    new index enters only on a strict improvement. Scores at or below
    ``min_score`` count as zero, so rounding noise on a score that is
    exactly zero never triggers a swap.
    """
    scores = [float(x) if x > min_score else 0.0 for x in scores]
    best_prev2, best_prev = 0.0, 0.0
    take = [False] * (len(scores) + 1)
    for j, value in enumerate(scores, start=1):
        if value + best_prev2 > best_prev:
            take[j] = True
            best_prev2, best_prev = best_prev, value + best_prev2
        else:
            best_prev2 = best_prev
    chosen = []
    j = len(scores)
    while j >= 1:
        if take[j]:
            chosen.append(j)
            j -= 2
        else:
            j -= 1
    chosen.reverse()
    assert all(scores[j - 1] > 0 for j in chosen)
    return chosen


def score(channel: AdjacentBitsChannel, mu: int | None = None) -> float:
    """Gain in polarization from swapping the middle bits: g(MID) - g(SWAP_MID)."""
    return g_metric(transform(channel, Transform.MID, mu)) - g_metric(
        transform(channel, Transform.SWAP_MID, mu))


def evolve_layer(prev: Sequence[AdjacentBitsChannel], swaps: Iterable[int],
                 mu: int | None = DEFAULT_MU,
                 cache: Mapping[tuple[int, Transform], AdjacentBitsChannel] | None = None,
                 ) -> list[AdjacentBitsChannel]:
    """Adjacent-bits channels of length 2n from those of length n.

    ``prev[i - 1]`` is V_i for i = 1..n-1 and the result holds V_1..V_{2n-1}.
    For a swapped parent i (2i in ``swaps``) the swapped triple yields
    V_{2i-1}, V_{2i}, V_{2i+1}. Otherwise V_{2i} is MID of V_i, V_{2i+1}
    comes from UP of V_i unless the next parent is swapped, and DOWN is
    used only for V_1. Each child is computed exactly once. ``cache`` may
    hold already computed (parent index, kind) results.
    """
    h = len(prev)
    swapped = set(j // 2 for j in validate_swap_set(2 * (h + 1), swaps))
    cache = dict(cache or {})

    def child(i: int, kind: Transform) -> AdjacentBitsChannel:
        key = (i, kind)
        if key not in cache:
            cache[key] = merge_equivalent(transform(prev[i - 1], kind, mu))
        return cache[key]

    out: list[AdjacentBitsChannel | None] = [None] * (2 * h + 1)
    for i in range(1, h + 1):
        if i in swapped:
            out[2 * i - 2] = child(i, Transform.SWAP_DOWN)
            out[2 * i - 1] = child(i, Transform.SWAP_MID)
            out[2 * i] = child(i, Transform.SWAP_UP)
            continue
        if i == 1:
            out[0] = child(1, Transform.DOWN)
        out[2 * i - 1] = child(i, Transform.MID)
        if i + 1 not in swapped:
            out[2 * i] = child(i, Transform.UP)
    assert all(v is not None for v in out)
    return out


def quantize_bms(channel: BmsChannel, mu: int) -> BmsChannel:
    """Merge outputs of a binary channel by the posterior of input 0 when M > mu."""
    if channel.num_outputs <= mu:
        return channel
    probs = channel.probs[channel.probs.sum(axis=1) > 0]
    post = probs[:, 0] / probs.sum(axis=1)
    cells = np.floor((mu - 1) * post).astype(np.int64)
    uniq, inverse = np.unique(cells, return_inverse=True)
    merged = np.zeros((uniq.size, 2))
    np.add.at(merged, inverse, probs)
    return BmsChannel(merged)


@dataclass
class LayerEvolution:
    perms: PermutationSpec
    channels: list[AdjacentBitsChannel]
    capacities: np.ndarray


def evolve_code(n: int, channel: BmsChannel, mu: int = DEFAULT_MU,
                family: str = "abs") -> LayerEvolution:
    """Run the full layer evolution and return swap sets and bit-channel capacities."""
    if family not in ("abs", "standard"):
        raise ValueError(f"unknown code family {family!r}")
    if n < 4 or not is_power_of_two(n):
        raise ValueError(f"n must be a power of two >= 4, got {n}")
    base = quantize_bms(channel, mu)
    layer = [transform_pair(base, mu)]
    swap_sets = {}
    n0 = 4
    while n0 <= n:
        cache = {}
        chosen = []
        if family == "abs":
            scores = []
            for i, v in enumerate(layer, start=1):
                cache[(i, Transform.MID)] = merge_equivalent(transform(v, Transform.MID, mu))
                cache[(i, Transform.SWAP_MID)] = merge_equivalent(
                    transform(v, Transform.SWAP_MID, mu))
                scores.append(g_metric(cache[(i, Transform.MID)])
                              - g_metric(cache[(i, Transform.SWAP_MID)]))
            chosen = select_swaps(scores)
        swaps = tuple(2 * j for j in chosen)
        layer = evolve_layer(layer, swaps, mu, cache)
        swap_sets[n0] = swaps
        n0 *= 2
    caps = [split_capacities(v)[0] for v in layer]
    caps.append(split_capacities(layer[-1])[1])
    return LayerEvolution(PermutationSpec(n, swap_sets), layer, np.array(caps))


def transform_pair(channel: BmsChannel, mu: int | None) -> AdjacentBitsChannel:
    v = merge_equivalent(init_pair(channel))
    return v if mu is None else quantize(v, mu)


def information_set(capacities: Sequence[float], k: int) -> tuple[int, ...]:
    """1-based indices of the k largest capacities, ties going to the larger index."""
    caps = np.asarray(capacities, dtype=np.float64)
    n = caps.size
    if not 0 <= k <= n:
        raise ValueError(f"k must lie in [0, {n}], got {k}")
    order = np.lexsort((-np.arange(n), -caps))
    return tuple(sorted(int(i) + 1 for i in order[:k]))


def _check_dims(n: int, k: int) -> None:
    if n < 4 or not is_power_of_two(n):
        raise ValueError(f"n must be a power of two >= 4, got {n}")
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in [1, {n}], got {k}")


def abs_construct(n: int, k: int, channel: BmsChannel, mu: int = DEFAULT_MU) -> CodeSpec:
    _check_dims(n, k)
    evo = evolve_code(n, channel, mu, "abs")
    return CodeSpec(n, k, evo.perms, information_set(evo.capacities, k))


def standard_construct(n: int, k: int, channel: BmsChannel, mu: int = DEFAULT_MU) -> CodeSpec:
    _check_dims(n, k)
    evo = evolve_code(n, channel, mu, "standard")
    return CodeSpec(n, k, evo.perms, information_set(evo.capacities, k))

