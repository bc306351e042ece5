"""Finite binary-input memoryless symmetric (BMS) channels stored as tables."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

LLR_CLAMP = 40.0
STOCHASTIC_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class BmsChannel:
    """Channel with ``probs[y, x] = W(y | x)`` for outputs ``y`` and inputs ``x`` in {0, 1}."""

    probs: np.ndarray

    def __post_init__(self):
        probs = np.ascontiguousarray(self.probs, dtype=np.float64)
        if probs.ndim != 2 or probs.shape[1] != 2 or probs.shape[0] == 0:
            raise ValueError(f"expected an (M, 2) table, got shape {probs.shape}")
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


def _xlogx_ratio(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    out = np.zeros_like(num)
    mask = num > 0
    out[mask] = num[mask] * np.log2(num[mask] / den[mask])
    return out


def capacity_of_table(probs: np.ndarray) -> float:
    """Symmetric mutual information in bits of an (M, q) transition table.

    Works for any number of equiprobable inputs, so it also gives the joint
    information of an adjacent-bits channel (q = 4).
    """
    probs = np.asarray(probs, dtype=np.float64)
    q = probs.shape[1]
    mix = probs.mean(axis=1, keepdims=True)
    den = np.broadcast_to(mix, probs.shape)
    value = float(_xlogx_ratio(probs, den).sum() / q)
    return min(max(value, 0.0), np.log2(q))


def capacity(channel: BmsChannel) -> float:
    """I(W) in bits with a uniform input."""
    return min(capacity_of_table(channel.probs), 1.0)


def make_bec(eps: float) -> BmsChannel:
    """Binary erasure channel; outputs are ordered (0, ?, 1)."""
    if not 0.0 <= eps <= 1.0:
        raise ValueError(f"erasure probability must lie in [0, 1], got {eps}")
    return BmsChannel(np.array([[1 - eps, 0.0], [eps, eps], [0.0, 1 - eps]]))


def make_bsc(p: float) -> BmsChannel:
    if not 0.0 <= p <= 0.5:
        raise ValueError(f"crossover probability must lie in [0, 1/2], got {p}")
    return BmsChannel(np.array([[1 - p, p], [p, 1 - p]]))


def noise_sigma(ebn0_db: float, rate: float) -> float:
    """Noise standard deviation for unit-energy BPSK at the given Eb/N0 and code rate."""
    if rate <= 0:
        raise ValueError(f"rate must be positive, got {rate}")
    variance = 1.0 / (2.0 * rate * 10.0 ** (ebn0_db / 10.0))
    if not np.isfinite(variance) or variance <= 0:
        raise ValueError(f"noise variance must be positive and finite, got {variance}")
    return float(np.sqrt(variance))


def llr_bin_edges(sigma: float, levels: int) -> np.ndarray:
    """Inner bin edges on the LLR axis; the outer two bins absorb overflow."""
    if levels < 2:
        raise ValueError(f"levels must be at least 2, got {levels}")
    if levels == 2:
        return np.zeros(1)
    span = 8.0 / sigma**2
    return np.linspace(-span, span, levels - 1)


def make_awgn(ebn0_db: float, rate: float = 0.5, levels: int = 64) -> BmsChannel:
    """BPSK over AWGN with the output quantized into ``levels`` LLR bins.

    Input 0 maps to +1. The received value y has LLR 2y/sigma^2, so the LLR
    edges translate to y-edges by a factor sigma^2/2.
    """
    sigma = noise_sigma(ebn0_db, rate)
    edges_y = np.concatenate(([-np.inf], llr_bin_edges(sigma, levels) * sigma**2 / 2, [np.inf]))
    cdf0 = norm.cdf(edges_y, loc=1.0, scale=sigma)
    cdf1 = norm.cdf(edges_y, loc=-1.0, scale=sigma)
    probs = np.stack([np.diff(cdf0), np.diff(cdf1)], axis=1)
    probs = probs[probs.sum(axis=1) > 0]
    probs /= probs.sum(axis=0, keepdims=True)
    return BmsChannel(probs)


def is_symmetric(channel: BmsChannel, tol: float = 1e-12) -> bool:
    """True when some output involution maps W(.|0) onto W(.|1)."""
    pairs = channel.probs
    live = pairs[pairs.sum(axis=1) > tol]
    flipped = live[:, ::-1]
    # Sort on rounded keys so rounding noise cannot reorder near-equal rows.
    decimals = max(0, int(-np.log10(tol)) - 2)

    def ordered(rows):
        keys = np.round(rows, decimals)
        return rows[np.lexsort((keys[:, 1], keys[:, 0]))]

    return bool(np.allclose(ordered(live), ordered(flipped), atol=tol, rtol=0))


def parse_channel(descriptor: str, rate: float = 0.5, levels: int = 64) -> BmsChannel:
    """Build a channel from ``bec:<eps>``, ``bsc:<p>`` or ``awgn:<ebn0_db>``."""
    kind, _, value = descriptor.partition(":")
    if not value:
        raise ValueError(f"channel descriptor needs a parameter: {descriptor!r}")
    param = float(value)
    kind = kind.strip().lower()
    if kind == "bec":
        return make_bec(param)
    if kind == "bsc":
        return make_bsc(param)
    if kind == "awgn":
        return make_awgn(param, rate=rate, levels=levels)
    raise ValueError(f"unknown channel kind {kind!r}")


def clamp_llr(llr: np.ndarray) -> np.ndarray:
    return np.clip(np.asarray(llr, dtype=np.float64), -LLR_CLAMP, LLR_CLAMP)


def llr_to_probs(llr: np.ndarray) -> np.ndarray:
    """Normalized likelihood pairs (W(y|0), W(y|1)) from clamped LLRs."""
    llr = clamp_llr(llr)
    p0 = 1.0 / (1.0 + np.exp(-llr))
    p1 = 1.0 / (1.0 + np.exp(llr))
    return np.stack([p0, p1], axis=-1)
