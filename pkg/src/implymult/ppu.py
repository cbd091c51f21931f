"""Partial product units (PPUs) of the serial array multipliers.

Each PPU fuses partial-product generation (AND/NAND) with a half or full adder.
The *proposed* variants are step-overlapped microcode; the *classic* variants
are literal concatenations of the cell programs with register renaming.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Mapping, Sequence

from .cells import (
    Verdict, build_and, build_full_adder, build_half_adder, build_nand, microcode,
    verify_program,
)
from .core import ImplyError, Program

UNSIGNED = "unsigned"
SIGNED = "signed"
PROPOSED = "proposed"
CLASSIC = "classic"


def _ha(a, b):
    return {"Sum": a ^ b, "Cout": a & b}


def _fa(a, b, c):
    t = a + b + c
    return {"Sum": t & 1, "Cout": t >> 1}


def _nand(a, b):
    return 1 - (a & b)


REFERENCE = {
    (UNSIGNED, 1): lambda a, b, c, d: _ha(a & b, c & d),
    (UNSIGNED, 2): lambda a, b, beta, Cin: _fa(a & b, beta, Cin),
    (UNSIGNED, 3): lambda a, b, c, d, Cin: _fa(a & b, c & d, Cin),
    (SIGNED, 1): lambda a, b, c, d: _ha(a & b, c & d),
    (SIGNED, 2): lambda a, b, c, d: _ha(a & b, _nand(c, d)),
    (SIGNED, 3): lambda beta: _ha(1, beta),
    (SIGNED, 4): lambda a, b, beta, Cin: _fa(a & b, beta, Cin),
    (SIGNED, 5): lambda a, b, c, d, Cin: _fa(_nand(a, b), _nand(c, d), Cin),
    (SIGNED, 6): lambda a, b, beta, Cin: _fa(_nand(a, b), beta, Cin),
    (SIGNED, 7): lambda a, b, c, d, Cin: _fa(_nand(a, b), c & d, Cin),
    (SIGNED, 8): lambda beta, Cin: _fa(1, beta, Cin),
}

# (family, index) -> (proposed steps, classic steps)
STEPS = {
    (UNSIGNED, 1): (18, 22), (UNSIGNED, 2): (25, 27), (UNSIGNED, 3): (28, 32),
    (SIGNED, 1): (18, 22), (SIGNED, 2): (18, 20), (SIGNED, 3): (2, 12), (SIGNED, 4): (25, 27),
    (SIGNED, 5): (28, 28), (SIGNED, 6): (25, 25), (SIGNED, 7): (28, 30), (SIGNED, 8): (9, 22),
}

# (family, index) -> (proposed nJ, classic nJ)
ENERGY = {
    (UNSIGNED, 1): (1.602, 1.68), (UNSIGNED, 2): (2.156, 2.18), (UNSIGNED, 3): (2.5, 2.51),
    (SIGNED, 1): (1.602, 1.68), (SIGNED, 2): (1.62, 1.59), (SIGNED, 3): (0.13, 1.02),
    (SIGNED, 4): (2.156, 2.18), (SIGNED, 5): (2.5, 2.33), (SIGNED, 6): (2.15, 2.09),
    (SIGNED, 7): (2.475, 2.42), (SIGNED, 8): (0.74, 1.85),
}


# -- proposed microcode ---------------------------------------------------------

def _ppu_u1() -> Program:
    return microcode("ppu_u1", "a b c d".split(), {"Sum": "S3", "Cout": "S4"}, "S1 S2 S3 S4".split(), """
        F S1
        F S2
        I b S1
        I a S1
        I d S2
        I c S2
        F S3
        F S4
        I S1 S3
        I S2 S4
        I S1 S2
        I S4 S1
        I S3 S4
        F S3
        I S2 S3
        I S4 S3
        F S4
        I S1 S4
    """)


def _ppu_u2() -> Program:
    return microcode("ppu_u2", "a b beta Cin".split(), {"Sum": "S3", "Cout": "S2"}, "S1 S2 S3".split(), """
        F S1
        F S2
        F S3
        I b S1
        I a S1
        I S1 S3
        I beta S2
        I S1 beta
        I S3 S2
        F S3
        I beta S3
        I S2 S3
        F S1
        I Cin S1
        I S2 Cin
        I S3 S1
        F S3
        I S1 S3
        F S1
        I Cin S1
        I beta S1
        I beta Cin
        I Cin S3
        F S2
        I S1 S2
    """)


def _ppu_u3() -> Program:
    # step 12 targets S2: the printed "S4''" operand contradicts its own result column
    return microcode("ppu_u3", "a b c d Cin".split(), {"Sum": "S3", "Cout": "S4"}, "S1 S2 S3 S4".split(), """
        F S1
        F S2
        I b S1
        I a S1
        I d S2
        I c S2
        F S3
        F S4
        I S1 S3
        I S2 S4
        I S1 S4
        I S3 S2
        F S3
        I S4 S3
        I S2 S3
        F S1
        I Cin S1
        I S2 Cin
        I S3 S1
        F S3
        I S1 S3
        F S2
        I Cin S2
        I S4 S2
        I S4 Cin
        I Cin S3
        F S4
        I S2 S4
    """)


def _ppu_s2() -> Program:
    return microcode("ppu_s2", "a b c d".split(), {"Sum": "S3", "Cout": "S2"}, "S1 S2 S3 S4".split(), """
        F S1
        F S2
        I b S1
        I a S1
        I d S2
        I c S2
        F S3
        F S4
        I S1 S3
        I S2 S4
        I S1 S4
        I S2 S1
        I S3 S2
        F S3
        I S4 S3
        I S2 S3
        F S2
        I S1 S2
    """)


def _ppu_s3() -> Program:
    # Cout is beta itself; nothing writes it
    return microcode("ppu_s3", ["beta"], {"Sum": "S1", "Cout": "beta"}, ["S1"], """
        F S1
        I beta S1
    """)


def _ppu_s5() -> Program:
    return microcode("ppu_s5", "a b c d Cin".split(), {"Sum": "S4", "Cout": "S3"}, "S1 S2 S3 S4".split(), """
        F S1
        F S2
        F S3
        F S4
        I b S1
        I a S1
        I d S2
        I c S2
        I S1 S3
        I S2 S4
        I S3 S2
        I S1 S4
        F S1
        I S2 S1
        I S4 S1
        F S3
        I Cin S3
        I S4 Cin
        I S1 S3
        F S4
        I S3 S4
        F S1
        I Cin S1
        I S2 S1
        I S2 Cin
        I Cin S4
        F S3
        I S1 S3
    """)


def _ppu_s6() -> Program:
    return microcode("ppu_s6", "a b beta Cin".split(), {"Sum": "S1", "Cout": "S3"}, "S1 S2 S3".split(), """
        F S1
        F S2
        F S3
        I b S1
        I a S1
        I beta S2
        I S1 S2
        I S1 S3
        F S1
        I S2 S1
        I S3 beta
        I beta S1
        F S3
        I Cin S3
        I S1 S3
        F S1
        I S3 S1
        I S2 Cin
        F S2
        I Cin S2
        I beta S2
        I beta Cin
        I Cin S1
        F S3
        I S2 S3
    """)


def _ppu_s7() -> Program:
    return microcode("ppu_s7", "a b c d Cin".split(), {"Sum": "S1", "Cout": "S3"}, "S1 S2 S3 S4".split(), """
        F S1
        F S2
        F S3
        F S4
        I b S1
        I a S1
        I d S2
        I c S2
        I S1 S3
        I S2 S4
        I S3 S4
        I S1 S2
        F S1
        I S2 S1
        I S4 S1
        F S3
        I Cin S3
        I S1 S3
        F S1
        I S3 S1
        I S2 Cin
        F S2
        I Cin S2
        I S4 S2
        I S4 Cin
        I Cin S1
        F S3
        I S2 S3
    """)


def _ppu_s8() -> Program:
    return microcode("ppu_s8", ["beta", "Cin"], {"Sum": "S2", "Cout": "Cin"}, ["S1", "S2"], """
        F S1
        F S2
        I Cin S1
        I beta S1
        I beta S2
        I S2 Cin
        F S2
        I S1 S2
        I Cin S2
    """)


# -- classic concatenations -----------------------------------------------------

def concatenate(name: str, parts: Sequence[tuple[Program, Mapping[str, str]]], inputs: Sequence[str],
                outputs: Mapping[str, str], work: Sequence[str],
                constants: Mapping[str, int] | None = None) -> Program:
    """Chain programs, renaming each part's registers via its mapping."""
    instructions = []
    for prog, mapping in parts:
        missing = set(prog.registers) - set(mapping)
        if missing:
            raise ImplyError(f"{name}: no wiring for {prog.name} register(s) {sorted(missing)}")
        instructions += [instr.rename(mapping) for instr in prog.instructions]
    return Program(name, tuple(instructions), {i: i for i in inputs}, dict(outputs), tuple(work),
                   constants or {})


def _w_and(a, b, tmp, out):
    return build_and(), {"a": a, "b": b, "S1": tmp, "S2": out}


def _w_nand(a, b, out):
    return build_nand(), {"a": a, "b": b, "S1": out}


def _w_half(a, b, s1, s2):
    return build_half_adder(), {"a": a, "b": b, "S1": s1, "S2": s2}


def _w_full(a, b, cin, s1, s2):
    return build_full_adder(), {"a": a, "b": b, "Cin": cin, "S1": s1, "S2": s2}


W3 = ("S1", "S2", "S3")
W4 = ("S1", "S2", "S3", "S4")


def _classic_u1() -> Program:
    return concatenate("ppu_u1_classic", [
        _w_and("a", "b", "S1", "S2"), _w_and("c", "d", "S1", "S3"), _w_half("S2", "S3", "S1", "S4"),
    ], "a b c d".split(), {"Sum": "S1", "Cout": "S2"}, W4)


def _classic_u2() -> Program:
    return concatenate("ppu_u2_classic", [
        _w_and("a", "b", "S1", "S2"), _w_full("S2", "beta", "Cin", "S1", "S3"),
    ], "a b beta Cin".split(), {"Sum": "S2", "Cout": "Cin"}, W3)


def _classic_u3() -> Program:
    return concatenate("ppu_u3_classic", [
        _w_and("a", "b", "S1", "S2"), _w_and("c", "d", "S1", "S3"), _w_full("S2", "S3", "Cin", "S1", "S4"),
    ], "a b c d Cin".split(), {"Sum": "S2", "Cout": "Cin"}, W4)


def _classic_s2() -> Program:
    return concatenate("ppu_s2_classic", [
        _w_nand("c", "d", "S3"), _w_and("a", "b", "S1", "S2"), _w_half("S2", "S3", "S1", "S4"),
    ], "a b c d".split(), {"Sum": "S1", "Cout": "S2"}, W4)


def _classic_s3() -> Program:
    return concatenate("ppu_s3_classic", [_w_half("one", "beta", "S1", "S2")],
                       ["one", "beta"], {"Sum": "S1", "Cout": "one"}, ("S1", "S2"), {"one": 1})


def _classic_s5() -> Program:
    return concatenate("ppu_s5_classic", [
        _w_nand("a", "b", "S1"), _w_nand("c", "d", "S2"), _w_full("S1", "S2", "Cin", "S3", "S4"),
    ], "a b c d Cin".split(), {"Sum": "S1", "Cout": "Cin"}, W4)


def _classic_s6() -> Program:
    return concatenate("ppu_s6_classic", [
        _w_nand("a", "b", "S1"), _w_full("S1", "beta", "Cin", "S2", "S3"),
    ], "a b beta Cin".split(), {"Sum": "S1", "Cout": "Cin"}, W3)


def _classic_s7() -> Program:
    return concatenate("ppu_s7_classic", [
        _w_nand("a", "b", "S1"), _w_and("c", "d", "S2", "S3"), _w_full("S1", "S3", "Cin", "S2", "S4"),
    ], "a b c d Cin".split(), {"Sum": "S1", "Cout": "Cin"}, W4)


def _classic_s8() -> Program:
    return concatenate("ppu_s8_classic", [_w_full("one", "beta", "Cin", "S1", "S2")],
                       ["one", "beta", "Cin"], {"Sum": "one", "Cout": "Cin"}, ("S1", "S2"), {"one": 1})


_BUILDERS = {
    (UNSIGNED, 1, PROPOSED): _ppu_u1, (UNSIGNED, 2, PROPOSED): _ppu_u2, (UNSIGNED, 3, PROPOSED): _ppu_u3,
    (UNSIGNED, 1, CLASSIC): _classic_u1, (UNSIGNED, 2, CLASSIC): _classic_u2,
    (UNSIGNED, 3, CLASSIC): _classic_u3,
    # signed PPU1/PPU4 are the unsigned PPU1/PPU2
    (SIGNED, 1, PROPOSED): _ppu_u1, (SIGNED, 1, CLASSIC): _classic_u1,
    (SIGNED, 4, PROPOSED): _ppu_u2, (SIGNED, 4, CLASSIC): _classic_u2,
    (SIGNED, 2, PROPOSED): _ppu_s2, (SIGNED, 2, CLASSIC): _classic_s2,
    (SIGNED, 3, PROPOSED): _ppu_s3, (SIGNED, 3, CLASSIC): _classic_s3,
    (SIGNED, 5, PROPOSED): _ppu_s5, (SIGNED, 5, CLASSIC): _classic_s5,
    (SIGNED, 6, PROPOSED): _ppu_s6, (SIGNED, 6, CLASSIC): _classic_s6,
    (SIGNED, 7, PROPOSED): _ppu_s7, (SIGNED, 7, CLASSIC): _classic_s7,
    (SIGNED, 8, PROPOSED): _ppu_s8, (SIGNED, 8, CLASSIC): _classic_s8,
}


@dataclass(frozen=True)
class PpuDescriptor:
    family: str
    index: int
    variant: str
    program: Program
    steps: int
    energy_nJ: float

    @property
    def name(self) -> str:
        tag = f"ppu_{self.family[0]}{self.index}"
        return tag if self.variant == PROPOSED else f"{tag}_classic"

    @property
    def reference_fn(self):
        return REFERENCE[(self.family, self.index)]

    @property
    def inputs(self) -> tuple[str, ...]:
        return self.program.free_inputs


@lru_cache(maxsize=None)
def _program(family: str, index: int, variant: str) -> Program:
    return _BUILDERS[(family, index, variant)]()


def _build(family: str, index: int, variant: str) -> PpuDescriptor:
    if variant not in (PROPOSED, CLASSIC):
        raise ImplyError(f"unknown variant {variant!r}")
    if (family, index) not in STEPS:
        raise ImplyError(f"no {family} PPU with index {index}")
    i = 0 if variant == PROPOSED else 1
    return PpuDescriptor(family, index, variant, _program(family, index, variant),
                         STEPS[(family, index)][i], ENERGY[(family, index)][i])


def build_unsigned_ppu(index: int, variant: str = PROPOSED) -> PpuDescriptor:
    if index not in (1, 2, 3):
        raise ImplyError(f"unsigned PPU index must be 1..3, got {index}")
    return _build(UNSIGNED, index, variant)


def build_signed_ppu(index: int, variant: str = PROPOSED) -> PpuDescriptor:
    if not 1 <= index <= 8:
        raise ImplyError(f"signed PPU index must be 1..8, got {index}")
    return _build(SIGNED, index, variant)


def all_ppus(variant: str | None = None) -> list[PpuDescriptor]:
    """The nine distinct PPUs (signed 1 and 4 are the unsigned 1 and 2)."""
    variants = (PROPOSED, CLASSIC) if variant is None else (variant,)
    out = []
    for v in variants:
        out += [build_unsigned_ppu(i, v) for i in (1, 2, 3)]
        out += [build_signed_ppu(i, v) for i in (2, 3, 5, 6, 7, 8)]
    return out


def lookup(name: str) -> PpuDescriptor:
    """Resolve names such as ``ppu_u1``, ``ppu_s8_classic``."""
    key = name.lower()
    variant = CLASSIC if key.endswith("_classic") else PROPOSED
    key = key.removesuffix("_classic")
    if not key.startswith("ppu_") or len(key) != 6 or key[4] not in "us" or not key[5].isdigit():
        raise ImplyError(f"unknown PPU {name!r}")
    family = UNSIGNED if key[4] == "u" else SIGNED
    return _build(family, int(key[5]), variant)


def verify_ppu(descriptor: PpuDescriptor) -> Verdict:
    """Exhaustive check of a PPU program against its reference and declared step count."""
    return verify_program(descriptor.program, descriptor.reference_fn, descriptor.steps, descriptor.name)
