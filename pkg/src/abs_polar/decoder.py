"""Successive-cancellation list decoders for standard and ABS polar codes.

Three decoders share one workspace design:
  * ``standard``: the classic decoder built on the 2x2 polar transform,
  * ``db``: a decoder working on adjacent bit pairs with the DOWN/MID/UP
    transforms (standard codes only),
  * ``abs``: the ``db`` decoder extended with the swapped transforms, for
    codes whose layers carry swap sets.

Probabilities live in per-layer pools of preallocated slots and decoded
bits in a flat buffer carved into per-layer regions. Both are handed out by
bump allocation and released wholesale by resetting a layer counter, so
list pruning only copies pointers. Every probability row is renormalized
after each transform and its log scale carried alongside, which keeps path
scores exact in the log domain for any block length.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .adjacent import KERNEL_INDICES, Transform
from .channels import llr_to_probs
from .construction import CodeSpec, log2_exact
from .encoder import encode

FAMILIES = ("standard", "db", "abs")
# Bit-pool slots per list element and layer that each decoder may need.
BIT_POOL_FACTOR = {"standard": 2, "db": 4, "abs": 6}
MAX_BRUTEFORCE_K = 20

# Peak pool usage seen by any workspace in this process, as a multiple of L.
POOL_HIGH_WATER = {family: {"prob": 0.0, "bit": 0.0} for family in FAMILIES}


class PoolOverflow(AssertionError):
    """A pool counter exceeded its proven bound; this is a decoder bug."""


@dataclass
class DecodeResult:
    codeword: np.ndarray
    message: np.ndarray
    score: float
    # (message, log score) of every surviving list element, in list order.
    candidates: list[tuple[np.ndarray, float]] = field(default_factory=list)


def likelihood_pairs(rx, n: int) -> np.ndarray:
    """Turn LLRs of shape (n,) or likelihood pairs of shape (n, 2) into (n, 2) pairs."""
    rx = np.asarray(rx, dtype=np.float64)
    if not np.all(np.isfinite(rx)):
        raise ValueError("received values must be finite")
    if rx.shape == (n,):
        return llr_to_probs(rx)
    if rx.shape == (n, 2):
        if np.any(rx < 0):
            raise ValueError("likelihoods must be nonnegative")
        return rx
    raise ValueError(f"expected {n} LLRs or an ({n}, 2) likelihood array, got shape {rx.shape}")


def _normalize(raw: np.ndarray, scale: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Scale each row of the trailing axis to sum 1, folding the factor into ``scale``."""
    total = raw.sum(axis=-1)
    with np.errstate(divide="ignore"):
        scale = scale + np.log(total)
    safe = np.where(total > 0, total, 1.0)
    return raw / safe[..., None], scale


def _log(values: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(values)


class DecoderWorkspace:
    """Preallocated pools and pointer tables for one (n, L, family) combination.

    ``probs[lam]`` holds L slots of shape (2^(m-lam), width) with per-row
    log scales in ``scales[lam]``. Layer lam of the bit buffer holds
    ``factor * L`` units of 2^(m-lam) bits each. Pointer tables ``P`` hold
    slot indices, ``R`` and ``H`` absolute offsets into the bit buffer.
    """

    def __init__(self, n: int, list_size: int, family: str):
        if family not in FAMILIES:
            raise ValueError(f"unknown decoder family {family!r}")
        if list_size < 1:
            raise ValueError(f"list size must be at least 1, got {list_size}")
        self.m = log2_exact(n)
        if self.m < 1:
            raise ValueError("block length must be at least 2")
        self.n = n
        self.list_size = list_size
        self.family = family
        m, L = self.m, list_size
        self.first_layer = 0 if family == "standard" else 1
        width = 2 if family == "standard" else 4
        layers = range(self.first_layer, m + 1)
        self.probs = {lam: np.zeros((L, 1 << (m - lam), width)) for lam in layers}
        self.scales = {lam: np.zeros((L, 1 << (m - lam))) for lam in layers}
        self.bit_bound = BIT_POOL_FACTOR[family] * L
        self.unit = np.array([1 << (m - lam) for lam in range(m + 1)], dtype=np.int64)
        sizes = np.where(np.arange(m + 1) >= self.first_layer, self.bit_bound * self.unit, 0)
        self.base = np.concatenate(([0], np.cumsum(sizes)[:-1])).astype(np.int64)
        self.bits = np.zeros(int(sizes.sum()), dtype=np.uint8)
        self.prob_count = np.zeros(m + 1, dtype=np.int64)
        self.bit_count = np.zeros(m + 1, dtype=np.int64)
        self.P = np.zeros((L, m + 1), dtype=np.int64)
        self.R = np.zeros((L, m + 1), dtype=np.int64)
        self.H = np.zeros((L, m + 1), dtype=np.int64)
        self.score = np.zeros(L)
        self.u_hat = np.zeros((L, n), dtype=np.uint8)
        self.active = 1
        self.peak_prob = 0
        self.peak_bit = 0

    def reset(self) -> None:
        self.prob_count[:] = 0
        self.bit_count[:] = 0
        self.score[:] = 0.0
        self.u_hat[:] = 0
        self.active = 1

    def allocate_prob(self, lam: int) -> np.ndarray:
        count = self.active
        start = self.prob_count[lam]
        self.prob_count[lam] = start + count
        if self.prob_count[lam] > self.list_size:
            raise PoolOverflow(f"probability pool of layer {lam} exceeded {self.list_size}")
        self.peak_prob = max(self.peak_prob, int(self.prob_count[lam]))
        return start + np.arange(count)

    def allocate_bit(self, lam: int, k: int) -> np.ndarray:
        """Bump-allocate k consecutive units per active list element."""
        count = self.active
        start = self.bit_count[lam]
        self.bit_count[lam] = start + k * count
        if self.bit_count[lam] > self.bit_bound:
            raise PoolOverflow(f"bit pool of layer {lam} exceeded {self.bit_bound}")
        self.peak_bit = max(self.peak_bit, int(self.bit_count[lam]))
        return self.base[lam] + (start + k * np.arange(count)) * self.unit[lam]

    def read_bits(self, pointers: np.ndarray, length: int) -> np.ndarray:
        return self.bits[pointers[:, None] + np.arange(length)]

    def write_bits(self, pointers: np.ndarray, values: np.ndarray) -> None:
        self.bits[pointers[:, None] + np.arange(values.shape[1])] = values

    def parent_rows(self, lam: int) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Top and bottom halves of the layer lam-1 slots, with their row scales."""
        slots = self.P[:self.active, lam - 1]
        table = self.probs[lam - 1][slots]
        scale = self.scales[lam - 1][slots]
        half = table.shape[1] // 2
        return table[:, :half], table[:, half:], scale[:, :half], scale[:, half:]

    def store_probs(self, lam: int, raw: np.ndarray, scale: np.ndarray) -> None:
        table, scale = _normalize(raw, scale)
        slots = self.allocate_prob(lam)
        self.probs[lam][slots] = table
        self.scales[lam][slots] = scale
        self.P[:self.active, lam] = slots

    def select(self, parents: np.ndarray, first: np.ndarray, second: np.ndarray,
               logprob: np.ndarray) -> np.ndarray:
        """Keep the best min(L, count) candidates and copy their pointer tables.

        Candidates are ordered by decreasing probability; ties go to the lower
        list index, then to first bit 0, then to second bit 0. Returns the
        chosen candidate indices.
        """
        order = np.lexsort((second, first, parents, -logprob))
        keep = order[:min(self.list_size, order.size)]
        src = parents[keep]
        count = keep.size
        self.P[:count] = self.P[src]
        self.R[:count] = self.R[src]
        self.H[:count] = self.H[src]
        self.u_hat[:count] = self.u_hat[src]
        self.score[:count] = logprob[keep]
        self.active = count
        return keep

    def record_peaks(self) -> None:
        stats = POOL_HIGH_WATER[self.family]
        stats["prob"] = max(stats["prob"], self.peak_prob / self.list_size)
        stats["bit"] = max(stats["bit"], self.peak_bit / self.list_size)

    def best_index(self) -> int:
        """Last list element attaining the maximum score."""
        scores = self.score[:self.active]
        return int(np.flatnonzero(scores == scores.max())[-1])

    def result(self, spec: CodeSpec, codewords: np.ndarray) -> DecodeResult:
        info = np.asarray(spec.info_set, dtype=np.int64) - 1
        messages = self.u_hat[:self.active][:, info]
        best = self.best_index()
        candidates = [(messages[i].copy(), float(self.score[i])) for i in range(self.active)]
        self.record_peaks()
        return DecodeResult(codewords[best].copy(), messages[best].copy(),
                            float(self.score[best]), candidates)


class _StandardDecoder:
    """List decoder over the 2x2 polar transform, one message bit per leaf."""

    def __init__(self, ws: DecoderWorkspace, spec: CodeSpec):
        self.ws = ws
        self.frozen = spec.frozen_mask()

    def run(self, pairs: np.ndarray) -> np.ndarray:
        ws = self.ws
        ws.reset()
        ws.store_probs(0, pairs[None], np.zeros((1, ws.n)))
        self.decode_channel(0, 1)
        return ws.read_bits(ws.R[:ws.active, 0], ws.n)

    def transform(self, lam: int, known: bool) -> None:
        ws = self.ws
        top, bot, s_top, s_bot = ws.parent_rows(lam)
        if known:
            a = ws.read_bits(ws.R[:ws.active, lam - 1], top.shape[1]).astype(np.int64)
            first = np.take_along_axis(top, a[..., None], axis=2)[..., 0]
            other = np.take_along_axis(top, 1 - a[..., None], axis=2)[..., 0]
            raw = np.stack((first * bot[..., 0], other * bot[..., 1]), axis=-1)
        else:
            raw = np.stack((top[..., 0] * bot[..., 0] + top[..., 1] * bot[..., 1],
                            top[..., 1] * bot[..., 0] + top[..., 0] * bot[..., 1]), axis=-1)
        ws.store_probs(lam, raw, s_top + s_bot)

    def decode_channel(self, lam: int, i: int) -> None:
        ws = self.ws
        if lam == ws.m:
            self.decode_boundary(i)
        else:
            self.transform(lam + 1, known=False)
            self.decode_channel(lam + 1, 2 * i - 1)
            ws.R[:ws.active, lam] = ws.R[:ws.active, lam + 1]
            self.transform(lam + 1, known=True)
            self.decode_channel(lam + 1, 2 * i)
            half = int(ws.unit[lam + 1])
            left = ws.read_bits(ws.R[:ws.active, lam], half)
            right = ws.read_bits(ws.R[:ws.active, lam + 1], half)
            ptr = ws.allocate_bit(lam, 1)
            ws.write_bits(ptr, np.concatenate((left ^ right, right), axis=1))
            ws.R[:ws.active, lam] = ptr
            ws.bit_count[lam + 1] = 0
        ws.prob_count[lam] = 0

    def decode_boundary(self, i: int) -> None:
        ws = self.ws
        m, count = ws.m, ws.active
        slots = ws.P[:count, m]
        leaf = ws.probs[m][slots, 0]
        logp = _log(leaf) + ws.scales[m][slots, :1]
        if self.frozen[i - 1]:
            ws.score[:count] = logp[:, 0]
            bit = np.zeros(count, dtype=np.uint8)
        else:
            parents = np.repeat(np.arange(count), 2)
            bits = np.tile(np.array([0, 1]), count)
            keep = ws.select(parents, bits, np.zeros_like(bits), logp.ravel())
            bit = bits[keep].astype(np.uint8)
        ws.u_hat[:ws.active, i - 1] = bit
        ptr = ws.allocate_bit(m, 1)
        ws.write_bits(ptr, bit[:, None])
        ws.R[:ws.active, m] = ptr


class _PairDecoder:
    """List decoder over adjacent bit pairs; handles swapped layers when present."""

    def __init__(self, ws: DecoderWorkspace, spec: CodeSpec):
        self.ws = ws
        self.frozen = spec.frozen_mask()
        # swapped[lam] holds the swap set of the layer with 2^lam channels.
        self.swapped = {lam: frozenset(spec.perms.swaps(1 << lam)) for lam in range(ws.m + 1)}

    def run(self, pairs: np.ndarray) -> np.ndarray:
        ws = self.ws
        ws.reset()
        half = ws.n // 2
        raw = np.empty((1, half, 4))
        for a, b in itertools.product((0, 1), repeat=2):
            raw[0, :, 2 * a + b] = pairs[:half, a ^ b] * pairs[half:, b]
        ws.store_probs(1, raw, np.zeros((1, half)))
        self.decode_channel(1, 1)
        both = ws.read_bits(ws.R[:ws.active, 1], ws.n)
        first, second = both[:, :half], both[:, half:]
        return np.concatenate((first ^ second, second), axis=1)

    def transform(self, lam: int, kind: Transform) -> None:
        """Probabilities of the layer-lam channel obtained from layer lam-1 by ``kind``."""
        ws = self.ws
        count = ws.active
        top, bot, s_top, s_bot = ws.parent_rows(lam)
        idx_top, idx_bot = KERNEL_INDICES[kind.swapped]
        rows = top.shape[1]
        block = (top[..., idx_top] * bot[..., idx_bot]).reshape(count, rows, 2, 2, 2, 2)
        prefix = kind.known_prefix
        if prefix == 0:
            raw = block.sum(axis=(4, 5))
        else:
            li = np.arange(count)[:, None]
            ri = np.arange(rows)[None, :]
            h = ws.read_bits(ws.H[:count, lam], rows).astype(np.int64)
            if prefix == 1:
                raw = block[li, ri, h].sum(axis=4)
            else:
                r = ws.read_bits(ws.R[:count, lam - 1], rows).astype(np.int64)
                raw = block[li, ri, h, r]
        ws.store_probs(lam, raw.reshape(count, rows, 4), s_top + s_bot)

    def decode_channel(self, lam: int, i: int) -> None:
        ws = self.ws
        if lam == ws.m:
            self.decode_boundary(i)
        elif 2 * i in self.swapped[lam + 1]:
            self.decode_swapped(lam, i)
        else:
            self.decode_original(lam, i)
        ws.prob_count[lam] = 0

    def decode_original(self, lam: int, i: int) -> None:
        ws = self.ws
        n_c = 1 << lam
        half = int(ws.unit[lam + 1])
        # After a swapped sibling the first child is already decoded and H holds
        # the bit that the swap moved into this block.
        if 2 * (i - 1) not in self.swapped[lam + 1]:
            self.transform(lam + 1, Transform.DOWN)
            self.decode_channel(lam + 1, 2 * i - 1)
            ws.H[:ws.active, lam + 1] = ws.R[:ws.active, lam + 1]
        self.transform(lam + 1, Transform.MID)
        self.decode_channel(lam + 1, 2 * i)
        ws.R[:ws.active, lam] = ws.R[:ws.active, lam + 1]
        if i <= n_c - 2:
            temp = ws.read_bits(ws.R[:ws.active, lam], half)
            h = ws.read_bits(ws.H[:ws.active, lam + 1], half)
            ptr = ws.allocate_bit(lam, 1)
            ws.write_bits(ptr, np.concatenate((h ^ temp, temp), axis=1))
        else:
            self.transform(lam + 1, Transform.UP)
            self.decode_channel(lam + 1, 2 * i + 1)
            temp = ws.read_bits(ws.R[:ws.active, lam], half)
            h = ws.read_bits(ws.H[:ws.active, lam + 1], half)
            last = ws.read_bits(ws.R[:ws.active, lam + 1], 2 * half)
            c1, c2 = last[:, :half], last[:, half:]
            ptr = ws.allocate_bit(lam, 2)
            ws.write_bits(ptr, np.concatenate((h ^ temp, temp, c1 ^ c2, c2), axis=1))
        ws.R[:ws.active, lam] = ptr
        ws.bit_count[lam + 1] = 0

    def decode_swapped(self, lam: int, i: int) -> None:
        ws = self.ws
        n_c = 1 << lam
        half = int(ws.unit[lam + 1])
        self.transform(lam + 1, Transform.SWAP_DOWN)
        self.decode_channel(lam + 1, 2 * i - 1)
        ws.H[:ws.active, lam + 1] = ws.R[:ws.active, lam + 1]
        self.transform(lam + 1, Transform.SWAP_MID)
        self.decode_channel(lam + 1, 2 * i)
        ws.R[:ws.active, lam] = ws.R[:ws.active, lam + 1]
        self.transform(lam + 1, Transform.SWAP_UP)
        self.decode_channel(lam + 1, 2 * i + 1)
        held = ws.R[:ws.active, lam].copy()
        h = ws.read_bits(ws.H[:ws.active, lam + 1], half)
        if i <= n_c - 2:
            c = ws.read_bits(ws.R[:ws.active, lam + 1], half)
            ptr = ws.allocate_bit(lam, 1)
            ws.write_bits(ptr, np.concatenate((h ^ c, c), axis=1))
            ws.R[:ws.active, lam] = ptr
            # The swapped-out middle bit becomes the known first bit of the next block.
            ws.H[:ws.active, lam + 1] = held
        else:
            temp = ws.read_bits(held, half)
            last = ws.read_bits(ws.R[:ws.active, lam + 1], 2 * half)
            c1, c2 = last[:, :half], last[:, half:]
            ptr = ws.allocate_bit(lam, 2)
            ws.write_bits(ptr, np.concatenate((h ^ c1, c1, temp ^ c2, c2), axis=1))
            ws.R[:ws.active, lam] = ptr
            ws.bit_count[lam + 1] = 0

    def decode_boundary(self, i: int) -> None:
        ws = self.ws
        m, n, count = ws.m, ws.n, ws.active
        slots = ws.P[:count, m]
        leaf = ws.probs[m][slots, 0].reshape(count, 2, 2)
        offset = ws.scales[m][slots, 0]
        if i <= n - 2:
            logp = _log(leaf.sum(axis=2)) + offset[:, None]
            if self.frozen[i - 1]:
                ws.score[:count] = logp[:, 0]
                first = np.zeros(count, dtype=np.uint8)
            else:
                parents = np.repeat(np.arange(count), 2)
                a = np.tile(np.array([0, 1]), count)
                keep = ws.select(parents, a, np.zeros_like(a), logp.ravel())
                first = a[keep].astype(np.uint8)
            ws.u_hat[:ws.active, i - 1] = first
            ptr = ws.allocate_bit(m, 1)
            ws.write_bits(ptr, first[:, None])
        else:
            logp = _log(leaf) + offset[:, None, None]
            choices_a = (0, 1) if not self.frozen[n - 2] else (0,)
            choices_b = (0, 1) if not self.frozen[n - 1] else (0,)
            if len(choices_a) == 1 and len(choices_b) == 1:
                ws.score[:count] = logp[:, 0, 0]
                first = np.zeros(count, dtype=np.uint8)
                second = np.zeros(count, dtype=np.uint8)
            else:
                combos = np.array(list(itertools.product(choices_a, choices_b)))
                parents = np.repeat(np.arange(count), len(combos))
                a = np.tile(combos[:, 0], count)
                b = np.tile(combos[:, 1], count)
                keep = ws.select(parents, a, b, logp[parents, a, b])
                first = a[keep].astype(np.uint8)
                second = b[keep].astype(np.uint8)
            ws.u_hat[:ws.active, n - 2] = first
            ws.u_hat[:ws.active, n - 1] = second
            ptr = ws.allocate_bit(m, 2)
            ws.write_bits(ptr, np.stack((first, second), axis=1))
        ws.R[:ws.active, m] = ptr


def _decode(family: str, spec: CodeSpec, rx, list_size: int,
            workspace: DecoderWorkspace | None) -> DecodeResult:
    if family != "abs" and not spec.perms.is_standard:
        raise ValueError(f"the {family} decoder needs a code without swaps; use scl_decode_abs")
    pairs = likelihood_pairs(rx, spec.n)
    ws = workspace
    if ws is None:
        ws = DecoderWorkspace(spec.n, list_size, family)
    elif (ws.n, ws.list_size, ws.family) != (spec.n, list_size, family):
        raise ValueError("workspace does not match the code length, list size and decoder")
    engine = _StandardDecoder(ws, spec) if family == "standard" else _PairDecoder(ws, spec)
    codewords = engine.run(pairs)
    return ws.result(spec, codewords)


def scl_decode_standard(spec: CodeSpec, rx, list_size: int,
                        workspace: DecoderWorkspace | None = None) -> DecodeResult:
    return _decode("standard", spec, rx, list_size, workspace)


def scl_decode_db(spec: CodeSpec, rx, list_size: int,
                  workspace: DecoderWorkspace | None = None) -> DecodeResult:
    return _decode("db", spec, rx, list_size, workspace)


def scl_decode_abs(spec: CodeSpec, rx, list_size: int,
                   workspace: DecoderWorkspace | None = None) -> DecodeResult:
    return _decode("abs", spec, rx, list_size, workspace)


def scl_decode(spec: CodeSpec, rx, list_size: int,
               workspace: DecoderWorkspace | None = None) -> DecodeResult:
    """The 2x2 decoder for codes without swaps, the ABS decoder otherwise."""
    family = "standard" if spec.perms.is_standard else "abs"
    return _decode(family, spec, rx, list_size, workspace)


def ml_decode_bruteforce(spec: CodeSpec, rx) -> tuple[np.ndarray, float]:
    """Exact maximum-likelihood codeword by enumerating all 2^k codewords.

    Returns the codeword and its likelihood prod_j W(y_j | x_j); ties go to
    the smallest message in binary order.
    """
    if spec.k > MAX_BRUTEFORCE_K:
        raise ValueError(f"brute force is limited to k <= {MAX_BRUTEFORCE_K}")
    pairs = likelihood_pairs(rx, spec.n)
    basis = np.array([encode(spec, row) for row in np.eye(spec.k, dtype=np.uint8)],
                     dtype=np.int64).reshape(spec.k, spec.n)
    shifts = np.arange(spec.k - 1, -1, -1)
    msgs = (np.arange(1 << spec.k)[:, None] >> shifts) & 1
    codewords = (msgs @ basis) % 2
    loglik = _log(pairs)
    totals = np.where(codewords == 1, loglik[:, 1], loglik[:, 0]).sum(axis=1)
    best = int(np.argmax(totals))
    return codewords[best].astype(np.uint8), float(np.exp(totals[best]))
