"""Exact polarization analysis over binary erasure channels.

Every adjacent-bits channel derived from a BEC is a double-bits erasure
channel DBEC(p, q, r, s, t). Given the pair (U1, U2) the output reveals
  (U1, U1+U2, U2) with probability p,
  only U1 with probability q,
  only U1+U2 with probability r,
  only U2 with probability s,
  nothing with probability t.
All six transforms map this family into itself through closed-form
polynomials, so construction over a BEC needs no quantization.
"""

from __future__ import annotations

from dataclasses import astuple, dataclass
from typing import Mapping

import numpy as np

from .adjacent import AdjacentBitsChannel, Transform
from .construction import PermutationSpec, select_swaps


@dataclass(frozen=True)
class Dbec:
    p: float
    q: float
    r: float
    s: float
    t: float

    def __post_init__(self):
        values = astuple(self)
        if any(not (-1e-12 <= v <= 1 + 1e-12) for v in values):
            raise ValueError(f"DBEC parameters must lie in [0, 1], got {values}")
        if abs(sum(values) - 1.0) > 1e-12:
            raise ValueError(f"DBEC parameters must sum to 1, got {sum(values)}")


def dbec_init(eps: float) -> Dbec:
    if not 0.0 <= eps <= 1.0:
        raise ValueError(f"erasure probability must lie in [0, 1], got {eps}")
    keep = 1.0 - eps
    return Dbec(keep * keep, 0.0, keep * eps, keep * eps, eps * eps)


def _apply(kind: Transform, p, q, r, s, t):
    """Closed-form transform, valid for scalars and for numpy arrays alike."""
    if kind is Transform.DOWN:
        known, lost = p + q, r + s + t
        return known * known, 0.0 * p, known * lost, lost * known, lost * lost
    if kind is Transform.MID:
        return (p * p + 2 * r * p + 2 * s * p,
                2 * q - q * q + 2 * p * t,
                2 * r * s,
                r * r + s * s,
                2 * t * (r + s) + t * t)
    if kind is Transform.UP:
        known, lost = p + r + s, q + t
        return known * known, 0.0 * p, known * lost, lost * known, lost * lost
    if kind is Transform.SWAP_DOWN:
        return (p * p,
                q * q + 2 * p * q,
                r * r + 2 * p * r,
                s * s + 2 * p * s,
                2 * t - t * t + 2 * q * r + 2 * q * s + 2 * r * s)
    if kind is Transform.SWAP_MID:
        return (p * p + 2 * p * r + 2 * p * s,
                r * r + s * s,
                2 * r * s,
                2 * q - q * q + 2 * p * t,
                t * t + 2 * r * t + 2 * s * t)
    if kind is Transform.SWAP_UP:
        return (2 * p - p * p + 2 * q * r + 2 * q * s + 2 * r * s,
                q * q + 2 * t * q,
                r * r + 2 * r * t,
                s * s + 2 * s * t,
                t * t)
    raise ValueError(f"unknown transform kind {kind!r}")


def dbec_transform(channel: Dbec, kind: "Transform | str") -> Dbec:
    kind = Transform.coerce(kind)
    return Dbec(*(float(v) for v in _apply(kind, *astuple(channel))))


def dbec_erasures(channel: Dbec) -> tuple[float, float]:
    """Erasure probabilities of the first bit (second unknown) and second bit (first known)."""
    return channel.r + channel.s + channel.t, channel.q + channel.t


# Table view: 11 outputs, grouped by which linear functions of (u1, u2) they reveal.
_SUPPORTS = {
    "p": [(0,), (1,), (2,), (3,)],
    "q": [(0, 1), (2, 3)],
    "r": [(0, 3), (1, 2)],
    "s": [(0, 2), (1, 3)],
    "t": [(0, 1, 2, 3)],
}


def dbec_to_table(channel: Dbec) -> AdjacentBitsChannel:
    rows = []
    for name, supports in _SUPPORTS.items():
        mass = getattr(channel, name)
        for support in supports:
            row = np.zeros(4)
            row[list(support)] = mass
            rows.append(row)
    return AdjacentBitsChannel(np.array(rows))


def table_to_dbec(channel: AdjacentBitsChannel, tol: float = 1e-13) -> Dbec:
    """Classify each output by the set of input pairs it leaves possible.

    Raises if some output is not erasure-like (non-uniform posterior or an
    unexpected support).
    """
    lookup = {support: name for name, supports in _SUPPORTS.items() for support in supports}
    masses = dict.fromkeys(_SUPPORTS, 0.0)
    for row in channel.probs:
        total = row.sum()
        if total <= tol:
            continue
        support = tuple(int(i) for i in np.flatnonzero(row > tol * max(total, 1.0)))
        if support not in lookup:
            raise ValueError(f"output with support {support} is not erasure-like")
        if np.ptp(row[list(support)]) > 1e-9 * total + tol:
            raise ValueError("output posterior is not uniform on its support")
        masses[lookup[support]] += total / 4.0
    return Dbec(**masses)


@dataclass(frozen=True)
class BecConstruction:
    perms: PermutationSpec
    erasure_probs: np.ndarray


def _layer_erasures(layer: np.ndarray) -> np.ndarray:
    """Bit-channel erasure probabilities from a (5, n-1) array of DBEC parameters.

    W_i comes from the first bit of V_i for i < n and W_n from the second bit
    of V_{n-1}.
    """
    p, q, r, s, t = layer
    return np.concatenate((r + s + t, [q[-1] + t[-1]]))


def _scores(layer: np.ndarray) -> np.ndarray:
    """g(V^MID) - g(V^SWAP_MID) for every channel of the layer."""
    def g(params):
        _, q, r, s, t = params
        e1, e2 = r + s + t, q + t
        return e1 * (1 - e1) + e2 * (1 - e2)

    mid = _apply(Transform.MID, *layer)
    swap_mid = _apply(Transform.SWAP_MID, *layer)
    return g(mid) - g(swap_mid)


def _evolve(layer: np.ndarray, swaps: np.ndarray) -> np.ndarray:
    """Next layer of DBEC parameters, vectorized over the whole layer.

    ``swaps`` flags the parents i (0-based) for which bits 2(i+1) and 2(i+1)+1
    are exchanged. Children are indexed 0..2h where h is the parent count:
    child 2i+1 always comes from parent i (MID or SWAP_MID), child 2i from
    SWAP_DOWN of parent i when swapped, DOWN of parent 0 for child 0, and
    otherwise from UP or SWAP_UP of parent i-1.
    """
    h = layer.shape[1]
    out = np.empty((5, 2 * h + 1))
    mid = np.array(_apply(Transform.MID, *layer))
    smid = np.array(_apply(Transform.SWAP_MID, *layer))
    out[:, 1::2] = np.where(swaps, smid, mid)

    up = np.array(_apply(Transform.UP, *layer))
    sup = np.array(_apply(Transform.SWAP_UP, *layer))
    odd_from_below = np.where(swaps, sup, up)
    sdown = np.array(_apply(Transform.SWAP_DOWN, *layer))
    down0 = np.array(_apply(Transform.DOWN, *layer[:, :1]))[:, 0]
    # Child 2i (i >= 1) is SWAP_DOWN of parent i if swapped, else UP-side of parent i-1.
    out[:, 2:-1:2] = np.where(swaps[1:], sdown[:, 1:], odd_from_below[:, :-1])
    out[:, 0] = sdown[:, 0] if swaps[0] else down0
    out[:, -1] = odd_from_below[:, -1]
    return out


def bec_layers(eps: float, max_n: int, family: str = "abs"):
    """Yield (n, swap set, erasure probabilities) for n = 2, 4, ..., max_n."""
    if family not in ("abs", "standard"):
        raise ValueError(f"unknown code family {family!r}")
    if max_n < 2 or max_n & (max_n - 1):
        raise ValueError(f"n must be a power of two >= 2, got {max_n}")
    layer = np.array(astuple(dbec_init(eps)), dtype=np.float64).reshape(5, 1)
    yield 2, (), _layer_erasures(layer)
    n0 = 4
    while n0 <= max_n:
        if family == "abs":
            chosen = select_swaps(_scores(layer))
        else:
            chosen = []
        flags = np.zeros(layer.shape[1], dtype=bool)
        flags[[j - 1 for j in chosen]] = True
        layer = _evolve(layer, flags)
        yield n0, tuple(2 * j for j in chosen), _layer_erasures(layer)
        n0 *= 2


def construct_bec(n: int, eps: float, family: str = "abs") -> BecConstruction:
    """Exact swap sets and bit-channel erasure probabilities for length n over BEC(eps)."""
    if n < 4 or n & (n - 1):
        raise ValueError(f"n must be a power of two >= 4, got {n}")
    swap_sets = {}
    erasures = None
    for n0, swaps, erasures in bec_layers(eps, n, family):
        swap_sets[n0] = swaps
    return BecConstruction(PermutationSpec(n, swap_sets), erasures)


def unpolarized_fraction(erasure_probs, lo: float = 0.01, hi: float = 0.99) -> float:
    """Fraction of bit-channels whose capacity lies in [lo, hi]."""
    caps = 1.0 - np.asarray(erasure_probs, dtype=np.float64)
    return float(np.count_nonzero((caps >= lo) & (caps <= hi)) / caps.size)


def gamma_metric(erasure_probs) -> float:
    """Mean of H(1 - H) over the bit-channels."""
    h = np.asarray(erasure_probs, dtype=np.float64)
    return float(np.mean(h * (1.0 - h)))


def scaling_exponent(fractions: Mapping[int, float]) -> tuple[float, float]:
    """Fit f(n) = c n^(-gamma) by least squares on logs; returns (1/gamma, c)."""
    if len(fractions) < 3:
        raise ValueError("need at least three points for the fit")
    ns = np.array(sorted(fractions), dtype=np.float64)
    fs = np.array([fractions[int(n)] for n in ns], dtype=np.float64)
    if np.any(fs <= 0):
        raise ValueError("fractions must be positive")
    slope, intercept = np.polyfit(np.log(ns), np.log(fs), 1)
    return float(-1.0 / slope), float(np.exp(intercept))
