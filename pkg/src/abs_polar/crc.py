"""CRC attachment and CRC-aided selection among list-decoder candidates."""

from __future__ import annotations

from typing import Sequence

import numpy as np

# Generator polynomials without the leading x^len term.
CRC_POLYNOMIALS = {
    4: 0x3,
    8: 0x07,
    12: 0x80F,
    16: 0x1021,
    20: 0x8F57B,
    24: 0x864CFB,
}
CRC_LENGTHS = (0,) + tuple(CRC_POLYNOMIALS)


def _check_length(crc_len: int) -> None:
    if crc_len not in CRC_LENGTHS:
        raise ValueError(f"CRC length must be one of {CRC_LENGTHS}, got {crc_len}")


def crc_bits(bits, crc_len: int) -> np.ndarray:
    """Remainder of bits(x) * x^len modulo the generator, MSB first, zero initial state."""
    _check_length(crc_len)
    if crc_len == 0:
        return np.zeros(0, dtype=np.uint8)
    poly = CRC_POLYNOMIALS[crc_len]
    top = 1 << (crc_len - 1)
    mask = (1 << crc_len) - 1
    reg = 0
    for bit in np.asarray(bits, dtype=np.uint8).ravel():
        feedback = ((reg & top) != 0) ^ bool(bit)
        reg = (reg << 1) & mask
        if feedback:
            reg ^= poly
    return np.array([(reg >> s) & 1 for s in range(crc_len - 1, -1, -1)], dtype=np.uint8)


def crc_attach(msg, crc_len: int) -> np.ndarray:
    msg = np.asarray(msg, dtype=np.uint8).ravel()
    return np.concatenate((msg, crc_bits(msg, crc_len)))


def crc_check(bits, crc_len: int) -> bool:
    bits = np.asarray(bits, dtype=np.uint8).ravel()
    _check_length(crc_len)
    if bits.size < crc_len:
        raise ValueError("word is shorter than its CRC")
    payload, tail = bits[:bits.size - crc_len], bits[bits.size - crc_len:]
    return bool(np.array_equal(crc_bits(payload, crc_len), tail))


def _best(scores: Sequence[float], indices: Sequence[int]) -> int:
    # Last maximum, matching the decoder's own final selection.
    top = max(scores[i] for i in indices)
    return [i for i in indices if scores[i] == top][-1]


def crc_select(candidates: Sequence[tuple[np.ndarray, float]], crc_len: int
               ) -> tuple[np.ndarray, bool]:
    """Payload of the best-scoring candidate that passes the CRC.

    Falls back to the best-scoring candidate overall when none pass. Returns
    the payload with the CRC stripped and whether the CRC passed.
    """
    _check_length(crc_len)
    if not candidates:
        raise ValueError("no candidates to select from")
    scores = [float(score) for _, score in candidates]
    everyone = range(len(candidates))
    passing = [i for i in everyone if crc_check(candidates[i][0], crc_len)]
    chosen = _best(scores, passing) if passing else _best(scores, everyone)
    word = np.asarray(candidates[chosen][0], dtype=np.uint8).ravel()
    return word[:word.size - crc_len].copy(), bool(passing)
