"""Encoding of ABS polar codes and a dense generator-matrix reference."""

from __future__ import annotations

import numpy as np

from .construction import CodeSpec

MAX_DENSE_N = 4096


def _as_bits(values, length: int, what: str) -> np.ndarray:
    bits = np.asarray(values, dtype=np.uint8).ravel()
    if bits.size != length:
        raise ValueError(f"{what} must have {length} bits, got {bits.size}")
    if np.any(bits > 1):
        raise ValueError(f"{what} must contain only 0 and 1")
    return bits


def scatter_message(spec: CodeSpec, msg) -> np.ndarray:
    """Place message bits on the information positions; frozen positions stay 0."""
    u = np.zeros(spec.n, dtype=np.uint8)
    u[np.asarray(spec.info_set, dtype=np.int64) - 1] = _as_bits(msg, spec.k, "message")
    return u


def transform_vector(spec: CodeSpec, u) -> np.ndarray:
    """Compute u G for the full length-n input vector u (in place on a copy).

    Stage i works on stride t = 2^i subsequences of length n0 = 2^(m-i):
    first the layer-n0 swaps exchange adjacent entries, then each entry at
    an even offset absorbs its right neighbour.
    """
    c = _as_bits(u, spec.n, "input vector").copy()
    n, m = spec.n, spec.m
    for i in range(m):
        t = 1 << i
        n0 = n >> i
        swaps = spec.perms.swaps(n0)
        for h in range(t):
            for j in swaps:
                a = h + (j - 1) * t
                b = a + t
                c[a], c[b] = c[b], c[a]
            c[h:n:2 * t] ^= c[h + t:n:2 * t]
    return c


def encode(spec: CodeSpec, msg) -> np.ndarray:
    return transform_vector(spec, scatter_message(spec, msg))


def generator_matrix(spec: CodeSpec) -> np.ndarray:
    """Dense n x n matrix from G_1 = [1] and G_n = P_n (G_{n/2} kron G_2)."""
    if spec.n > MAX_DENSE_N:
        raise ValueError(f"dense generator limited to n <= {MAX_DENSE_N}")
    kernel = np.array([[1, 0], [1, 1]], dtype=np.uint8)
    g = np.ones((1, 1), dtype=np.uint8)
    size = 1
    while size < spec.n:
        size *= 2
        g = np.kron(g, kernel)
        for i in spec.perms.swaps(size):
            g[[i - 1, i]] = g[[i, i - 1]]
    return g


def encode_dense(spec: CodeSpec, msg) -> np.ndarray:
    u = scatter_message(spec, msg)
    return (u.astype(np.int64) @ generator_matrix(spec).astype(np.int64) % 2).astype(np.uint8)


def bits_to_hex(bits) -> str:
    """Pack bits MSB first, zero-padding the tail to a whole hex digit."""
    bits = np.asarray(bits, dtype=np.uint8).ravel()
    if bits.size == 0:
        return ""
    pad = (-bits.size) % 4
    padded = np.concatenate((bits, np.zeros(pad, dtype=np.uint8))).reshape(-1, 4)
    digits = padded @ np.array([8, 4, 2, 1])
    return "".join(f"{d:x}" for d in digits)


def hex_to_bits(text: str, length: int) -> np.ndarray:
    text = text.strip().lower().removeprefix("0x")
    if len(text) != (length + 3) // 4:
        raise ValueError(f"expected {(length + 3) // 4} hex digits for {length} bits, got {len(text)}")
    try:
        digits = [int(ch, 16) for ch in text]
    except ValueError as exc:
        raise ValueError(f"invalid hex string {text!r}") from exc
    bits = np.array([(d >> s) & 1 for d in digits for s in (3, 2, 1, 0)], dtype=np.uint8)
    if np.any(bits[length:]):
        raise ValueError("padding bits beyond the message length must be zero")
    return bits[:length]
