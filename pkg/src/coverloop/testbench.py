"""Per-DUV stimulus fields, scoreboards and shipped covergroups."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from coverloop.coverage import CoverBin, CoverGroup
from coverloop.duv import (
    ADC_MAX_CODE,
    ECC_BITS,
    WORD_MASK,
    EccStatus,
    Opcode,
    adc_sample,
    alu_step,
    ecc_decode,
    ecc_encode,
)
from coverloop.errors import ConfigError
from coverloop.stimulus import INT, REAL, FieldSpec, StimulusRecord

DEFAULT_TXNS = 50


@dataclass(frozen=True)
class Testbench:
    name: str
    fields: tuple[FieldSpec, ...]
    covergroup: CoverGroup
    step: Callable[[StimulusRecord], bool]
    default_tests: int
    default_txns: int = DEFAULT_TXNS

    __test__ = False  # not a pytest class

    def field(self, name: str) -> FieldSpec:
        for f in self.fields:
            if f.name == name:
                return f
        raise KeyError(name)

    def with_covergroup(self, group: CoverGroup) -> "Testbench":
        group.validate(self.fields)
        return Testbench(self.name, self.fields, group, self.step, self.default_tests, self.default_txns)


# --- ALU ---------------------------------------------------------------------

ALU_FIELDS = (
    FieldSpec("op", INT, 0, 7),
    FieldSpec("a", INT, 0, WORD_MASK),
    FieldSpec("b", INT, 0, WORD_MASK),
)

_HI = (0xF0000000, WORD_MASK)
_LO = (0, 0x0FFFFFFF)
_Q3 = (0xC0000000, WORD_MASK)


def _op(o: Opcode) -> tuple[int, int]:
    return (int(o), int(o))


def alu_covergroup() -> CoverGroup:
    bins = [CoverBin.of(f"op_{o.name.lower()}", op=_op(o)) for o in Opcode]
    bins += [
        CoverBin.of("add_carry_hi", op=_op(Opcode.ADD), a=_HI, b=_HI),
        CoverBin.of("sub_borrow", op=_op(Opcode.SUB), a=_LO, b=_HI),
        CoverBin.of("and_hi", op=_op(Opcode.AND), a=_HI, b=_HI),
        CoverBin.of("or_lo", op=_op(Opcode.OR), a=_LO, b=_LO),
        CoverBin.of("xor_hi_lo", op=_op(Opcode.XOR), a=_HI, b=_LO),
        CoverBin.of("sll_a_hi", op=_op(Opcode.SLL), a=_HI),
        CoverBin.of("srl_a_hi", op=_op(Opcode.SRL), a=_HI),
        CoverBin.of("mul_lo", op=_op(Opcode.MUL), a=_LO, b=_LO),
        CoverBin.of("mul_hi", op=_op(Opcode.MUL), a=_Q3, b=_Q3),
        # corner crosses; essentially unreachable by unconstrained random
        CoverBin.of("add_max_plus_one", op=_op(Opcode.ADD), a=(WORD_MASK, WORD_MASK), b=(1, 1)),
        CoverBin.of("sub_zero", op=_op(Opcode.SUB), a=(0, 0), b=(0, 0)),
        CoverBin.of("and_ones", op=_op(Opcode.AND), a=(WORD_MASK, WORD_MASK), b=(WORD_MASK, WORD_MASK)),
        CoverBin.of("xor_small", op=_op(Opcode.XOR), a=(0, 0xFF), b=(0, 0xFF)),
        CoverBin.of("mul_by_zero", op=_op(Opcode.MUL), b=(0, 0)),
    ]
    return CoverGroup(tuple(bins))


def _alu_check(rec: StimulusRecord) -> bool:
    t = alu_step(rec["op"], rec["a"], rec["b"])
    return t.zero == int(t.result == 0) and 0 <= t.result <= WORD_MASK


# --- ECC ---------------------------------------------------------------------

ECC_FIELDS = (
    FieldSpec("data", INT, 0, WORD_MASK),
    FieldSpec("n_flips", INT, 0, 2),
    FieldSpec("pos_a", INT, 0, ECC_BITS - 1),
    # second flip lands on (pos_a + 1 + pos_b) mod 39, never on pos_a
    FieldSpec("pos_b", INT, 0, ECC_BITS - 2),
)


def ecc_covergroup() -> CoverGroup:
    bins = [CoverBin.of("no_error", n_flips=(0, 0))]
    bins += [CoverBin.of(f"single_{p:02d}", n_flips=(1, 1), pos_a=(p, p)) for p in range(ECC_BITS)]
    bins.append(CoverBin.of("double", n_flips=(2, 2)))
    return CoverGroup(tuple(bins))


def ecc_flip_positions(rec: StimulusRecord) -> tuple[int, ...]:
    n, pa = rec["n_flips"], rec["pos_a"]
    if n == 0:
        return ()
    if n == 1:
        return (pa,)
    return (pa, (pa + 1 + rec["pos_b"]) % ECC_BITS)


def _ecc_check(rec: StimulusRecord) -> bool:
    cw = ecc_encode(rec["data"])
    flips = ecc_flip_positions(rec)
    for p in flips:
        cw ^= 1 << p
    data, status = ecc_decode(cw)
    expected = (EccStatus.OK, EccStatus.CORRECTED, EccStatus.DETECTED_DOUBLE)[len(flips)]
    return status is expected and (status is EccStatus.DETECTED_DOUBLE or data == rec["data"])


# --- ADC ---------------------------------------------------------------------

ADC_VREF = 1.0
ADC_FIELDS = (FieldSpec("vin", REAL, -0.05, 1.05),)
_MICRO = 10**6


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


def _code_lower_edge(code: int) -> float:
    """Smallest 6-decimal vin (vref = 1) that quantizes to ``code`` or above."""
    return _ceil_div((2 * code - 1) * _MICRO, 2 * ADC_MAX_CODE) / _MICRO


def _code_upper_edge(code: int) -> float:
    """Largest 6-decimal vin (vref = 1) that quantizes to ``code`` or below."""
    return (_ceil_div((2 * code + 1) * _MICRO, 2 * ADC_MAX_CODE) - 1) / _MICRO


def adc_code_range(lo_code: int, hi_code: int) -> tuple[float, float]:
    vin = ADC_FIELDS[0]
    lo = vin.lo if lo_code == 0 else _code_lower_edge(lo_code)
    hi = vin.hi if hi_code == ADC_MAX_CODE else _code_upper_edge(hi_code)
    return lo, hi


def adc_covergroup() -> CoverGroup:
    bins = [CoverBin.of("rail_lo", vin=adc_code_range(0, 0))]
    bins += [CoverBin.of(f"band_{i:02d}", vin=adc_code_range(16 * i, 16 * i + 15)) for i in range(16)]
    bins.append(CoverBin.of("rail_hi", vin=adc_code_range(ADC_MAX_CODE, ADC_MAX_CODE)))
    return CoverGroup(tuple(bins))


def _adc_check(rec: StimulusRecord) -> bool:
    s = adc_sample(rec["vin"], ADC_VREF)
    return 0 <= s.code <= ADC_MAX_CODE


BENCHES: dict[str, Callable[[], Testbench]] = {
    "alu": lambda: Testbench("alu", ALU_FIELDS, alu_covergroup(), _alu_check, default_tests=100),
    "ecc": lambda: Testbench("ecc", ECC_FIELDS, ecc_covergroup(), _ecc_check, default_tests=50),
    "adc": lambda: Testbench("adc", ADC_FIELDS, adc_covergroup(), _adc_check, default_tests=200),
}


def get_bench(name: str) -> Testbench:
    try:
        return BENCHES[name.lower()]()
    except KeyError:
        raise ConfigError(f"unknown DUV {name!r}; choose from {sorted(BENCHES)}") from None
