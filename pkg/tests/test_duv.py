import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from coverloop.duv import (
    ECC_BITS,
    WORD_MASK,
    EccStatus,
    Opcode,
    adc_sample,
    alu_step,
    ecc_decode,
    ecc_encode,
)
from coverloop.errors import DomainError
from oracles import all_pairs, bits, encode_by_matrix, h_matrix

words = st.integers(0, WORD_MASK)


def test_add_small():
    t = alu_step(Opcode.ADD, 1, 2)
    assert (t.result, t.carry, t.zero) == (3, 0, 0)


def test_add_wraps_with_carry():
    t = alu_step(Opcode.ADD, 0xFFFFFFFF, 1)
    assert (t.result, t.carry, t.zero) == (0, 1, 1)


def test_sub_borrow_sets_carry():
    assert alu_step(Opcode.SUB, 0, 1).carry == 1
    assert alu_step(Opcode.SUB, 0, 1).result == WORD_MASK


@given(words)
def test_xor_self_is_zero(x):
    t = alu_step(Opcode.XOR, x, x)
    assert t.result == 0 and t.zero == 1


@given(words, words)
def test_add_and_sub_identities(a, b):
    assert alu_step(Opcode.ADD, a, b).result == (a + b) % 2**32
    assert alu_step(Opcode.SUB, a, a).result == 0


@given(st.sampled_from(list(Opcode)), words, words)
def test_zero_flag_tracks_result(op, a, b):
    t = alu_step(op, a, b)
    assert 0 <= t.result <= WORD_MASK
    assert t.zero == int(t.result == 0)


@given(words, st.integers(0, 200))
def test_shifts_use_low_five_bits(a, b):
    assert alu_step(Opcode.SLL, a, b).result == (a << (b % 32)) & WORD_MASK
    assert alu_step(Opcode.SRL, a, b).result == a >> (b % 32)


def test_ecc_zero_word():
    assert ecc_encode(0) == 0


def test_ecc_one_matches_parity_check_matrix():
    assert ecc_encode(1) == encode_by_matrix(1)


@given(words)
def test_ecc_codewords_satisfy_all_parity_equations(d):
    cw = ecc_encode(d)
    assert cw == encode_by_matrix(d)
    assert not (h_matrix() @ bits(cw) % 2).any()


def test_ecc_round_trip_1000_words():
    rnd = random.Random(7)
    for _ in range(1000):
        d = rnd.getrandbits(32)
        assert ecc_decode(ecc_encode(d)) == (d, EccStatus.OK)


@pytest.mark.parametrize("d", [0, 1, 0xDEADBEEF, WORD_MASK])
def test_ecc_every_single_flip_corrected(d):
    cw = ecc_encode(d)
    for p in range(ECC_BITS):
        assert ecc_decode(cw ^ (1 << p)) == (d, EccStatus.CORRECTED)


@pytest.mark.parametrize("d", [0, 0x12345678, WORD_MASK])
def test_ecc_every_double_flip_detected(d):
    cw = ecc_encode(d)
    pairs = all_pairs(ECC_BITS)
    assert len(pairs) == 741
    for i, j in pairs:
        assert ecc_decode(cw ^ (1 << i) ^ (1 << j))[1] is EccStatus.DETECTED_DOUBLE


@pytest.mark.parametrize("vin,code", [(0.0, 0), (1.0, 255), (0.5, 128), (-0.3, 0), (1.7, 255)])
def test_adc_codes(vin, code):
    assert adc_sample(vin, 1.0).code == code


def test_adc_rejects_nonpositive_vref():
    with pytest.raises(DomainError):
        adc_sample(0.5, 0.0)


@given(st.floats(-0.5, 1.5), st.floats(-0.5, 1.5))
def test_adc_monotone(v1, v2):
    lo, hi = sorted((v1, v2))
    assert adc_sample(lo, 1.0).code <= adc_sample(hi, 1.0).code
