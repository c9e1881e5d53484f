"""Behavioral models of the three designs under verification.

All models are untimed: one call is one transaction.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal

from coverloop.errors import DomainError

WORD_MASK = 0xFFFFFFFF


class Opcode(enum.IntEnum):
    ADD = 0
    SUB = 1
    AND = 2
    OR = 3
    XOR = 4
    SLL = 5
    SRL = 6
    MUL = 7


@dataclass(frozen=True)
class AluTransaction:
    opcode: Opcode
    a: int
    b: int
    result: int
    carry: int
    zero: int


def alu_step(op: Opcode | int, a: int, b: int) -> AluTransaction:
    op = Opcode(op)
    a &= WORD_MASK
    b &= WORD_MASK
    carry = 0
    if op is Opcode.ADD:
        full = a + b
        carry = int(full > WORD_MASK)
    elif op is Opcode.SUB:
        full = a - b
        carry = int(a < b)
    elif op is Opcode.AND:
        full = a & b
    elif op is Opcode.OR:
        full = a | b
    elif op is Opcode.XOR:
        full = a ^ b
    elif op is Opcode.SLL:
        full = a << (b % 32)
    elif op is Opcode.SRL:
        full = a >> (b % 32)
    else:
        full = a * b
    result = full & WORD_MASK
    return AluTransaction(op, a, b, result, carry, int(result == 0))


# --- SECDED: extended Hamming(38,32) ---------------------------------------
#
# Codeword bit i is position i.  Position 0 holds overall parity, positions
# 1, 2, 4, 8, 16, 32 hold Hamming check bits and the remaining 32 positions
# in 3..38 hold data bits LSB first.

ECC_BITS = 39
CHECK_POSITIONS = (1, 2, 4, 8, 16, 32)
DATA_POSITIONS = tuple(p for p in range(1, ECC_BITS) if p not in CHECK_POSITIONS)
assert len(DATA_POSITIONS) == 32


class EccStatus(enum.Enum):
    OK = "OK"
    CORRECTED = "CORRECTED"
    DETECTED_DOUBLE = "DETECTED_DOUBLE"


def _syndrome(cw: int) -> int:
    s = 0
    x = cw >> 1
    pos = 1
    while x:
        if x & 1:
            s ^= pos
        x >>= 1
        pos += 1
    return s


def _parity(x: int) -> int:
    return bin(x).count("1") & 1


def ecc_encode(data: int) -> int:
    data &= WORD_MASK
    cw = 0
    for i, pos in enumerate(DATA_POSITIONS):
        if (data >> i) & 1:
            cw |= 1 << pos
    s = _syndrome(cw)
    for j, pos in enumerate(CHECK_POSITIONS):
        if (s >> j) & 1:
            cw |= 1 << pos
    if _parity(cw):
        cw |= 1
    return cw


def _extract(cw: int) -> int:
    data = 0
    for i, pos in enumerate(DATA_POSITIONS):
        if (cw >> pos) & 1:
            data |= 1 << i
    return data


def ecc_decode(cw: int) -> tuple[int, EccStatus]:
    """Decode a 39-bit codeword.

    A nonzero syndrome with odd parity that points past position 38 cannot
    come from a single flip and is reported as DETECTED_DOUBLE.
    """
    cw &= (1 << ECC_BITS) - 1
    s = _syndrome(cw)
    odd = _parity(cw)
    if s == 0 and not odd:
        return _extract(cw), EccStatus.OK
    if s == 0:
        return _extract(cw ^ 1), EccStatus.CORRECTED
    if odd and s < ECC_BITS:
        return _extract(cw ^ (1 << s)), EccStatus.CORRECTED
    return _extract(cw), EccStatus.DETECTED_DOUBLE


# --- SAR ADC ---------------------------------------------------------------

ADC_BITS = 8
ADC_MAX_CODE = (1 << ADC_BITS) - 1


@dataclass(frozen=True)
class AdcSample:
    vin: float
    vref: float
    code: int


def adc_sample(vin: float, vref: float) -> AdcSample:
    """Ideal 8-bit quantizer, ``clamp(round_half_up(255 * vin / vref))``.

    Arithmetic runs in decimal on the shortest repr of the inputs so a logged
    6-decimal voltage sitting exactly on a code boundary rounds up.
    """
    if not vref > 0:
        raise DomainError(f"vref must be positive, got {vref}")
    ratio = Decimal(repr(float(vin))) * ADC_MAX_CODE / Decimal(repr(float(vref)))
    code = int(ratio.quantize(Decimal(1), rounding=ROUND_HALF_UP))
    return AdcSample(vin, vref, min(max(code, 0), ADC_MAX_CODE))
