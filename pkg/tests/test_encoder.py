import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from abs_polar.construction import CodeSpec, PermutationSpec
from abs_polar.encoder import (
    MAX_DENSE_N,
    bits_to_hex,
    encode,
    encode_dense,
    generator_matrix,
    hex_to_bits,
    transform_vector,
)
from oracles import EXAMPLE_INFO, EXAMPLE_SWAPS, kron_generator
from strategies import code_specs

EXAMPLE = CodeSpec(16, 8, PermutationSpec(16, EXAMPLE_SWAPS), EXAMPLE_INFO)


def gf2_rank(matrix: np.ndarray) -> int:
    a = matrix.copy() % 2
    rank = 0
    for col in range(a.shape[1]):
        pivot = next((r for r in range(rank, a.shape[0]) if a[r, col]), None)
        if pivot is None:
            continue
        a[[rank, pivot]] = a[[pivot, rank]]
        for r in range(a.shape[0]):
            if r != rank and a[r, col]:
                a[r] ^= a[rank]
        rank += 1
    return rank


def test_length_two_generator():
    spec = CodeSpec(2, 2, PermutationSpec.standard(2), (1, 2))
    assert generator_matrix(spec).tolist() == [[1, 0], [1, 1]]


@pytest.mark.parametrize("n", [4, 8, 64])
def test_standard_generator_is_kronecker_power(n):
    spec = CodeSpec(n, n, PermutationSpec.standard(n), range(1, n + 1))
    assert np.array_equal(generator_matrix(spec), kron_generator(n))


def test_all_zero_message_gives_all_zero_codeword():
    assert not encode(EXAMPLE, np.zeros(8)).any()


def test_example_code_matches_oracle_for_every_message():
    g = generator_matrix(EXAMPLE).astype(np.int64)
    info = np.array(EXAMPLE_INFO) - 1
    for msg in itertools.product((0, 1), repeat=8):
        expected = np.array(msg) @ g[info] % 2
        assert np.array_equal(encode(EXAMPLE, msg), expected)


@given(code_specs(max_log_n=6), st.randoms(use_true_random=False))
def test_encoder_matches_dense_oracle(spec, rnd):
    msg = [rnd.randint(0, 1) for _ in range(spec.k)]
    assert np.array_equal(encode(spec, msg), encode_dense(spec, msg))


@given(code_specs(min_log_n=2, max_log_n=6), st.randoms(use_true_random=False))
def test_encoding_is_linear(spec, rnd):
    m1 = np.array([rnd.randint(0, 1) for _ in range(spec.k)], dtype=np.uint8)
    m2 = np.array([rnd.randint(0, 1) for _ in range(spec.k)], dtype=np.uint8)
    assert np.array_equal(encode(spec, m1 ^ m2), encode(spec, m1) ^ encode(spec, m2))


@given(code_specs(min_log_n=2, max_log_n=6))
def test_generator_rows_permute_the_kronecker_rows(spec):
    g = generator_matrix(spec)
    ref = kron_generator(spec.n)
    assert sorted(map(tuple, g.tolist())) == sorted(map(tuple, ref.tolist()))
    assert gf2_rank(g.astype(np.int64)) == spec.n


@given(code_specs(min_log_n=1, max_log_n=5))
def test_transform_vector_of_unit_vectors_gives_generator_rows(spec):
    g = generator_matrix(spec)
    for i in range(spec.n):
        unit = np.zeros(spec.n, dtype=np.uint8)
        unit[i] = 1
        assert np.array_equal(transform_vector(spec, unit), g[i])


def test_length_errors():
    with pytest.raises(ValueError):
        encode(EXAMPLE, np.zeros(7))
    with pytest.raises(ValueError):
        encode(EXAMPLE, [2] * 8)
    big = CodeSpec(2 * MAX_DENSE_N, 1, PermutationSpec.standard(2 * MAX_DENSE_N), (1,))
    with pytest.raises(ValueError):
        generator_matrix(big)


def test_hex_helpers():
    bits = np.array([1, 0, 1, 0, 0, 1, 0, 1, 1], dtype=np.uint8)
    assert bits_to_hex(bits) == "a58"
    assert np.array_equal(hex_to_bits("a58", 9), bits)
    assert np.array_equal(hex_to_bits("0xA58", 9), bits)
    assert bits_to_hex([]) == ""
    for text, length in (("a5", 9), ("a59", 9), ("zz", 8)):
        with pytest.raises(ValueError):
            hex_to_bits(text, length)


@given(st.lists(st.integers(0, 1), max_size=40))
def test_hex_round_trip(bits):
    assert hex_to_bits(bits_to_hex(bits), len(bits)).tolist() == bits
