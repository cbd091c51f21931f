"""Basic IMPLY cells: executable microcode for NOT/AND/NAND/COPY/HA/FA and the
published cost constants of every cell used by the multipliers."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Callable, Mapping, Sequence

from .core import ImplyError, Program, false, imply, run_program

Bits = Mapping[str, int]
ReferenceFn = Callable[..., dict]


def microcode(name: str, inputs: Sequence[str], outputs: Mapping[str, str],
              work: Sequence[str], steps: str, constants: Mapping[str, int] | None = None) -> Program:
    """Build a program from compact ``F reg`` / ``I cond target`` lines."""
    instructions = []
    for line in steps.strip().splitlines():
        parts = line.split()
        if parts[0] == "F":
            instructions.append(false(parts[1]))
        elif parts[0] == "I":
            instructions.append(imply(parts[1], parts[2]))
        else:
            raise ImplyError(f"{name}: bad microcode line {line!r}")
    bindings = {i: i for i in inputs}
    return Program(name, tuple(instructions), bindings, dict(outputs), tuple(work), constants or {})


def build_not() -> Program:
    return microcode("not", ["a"], {"out": "S1"}, ["S1"], """
        F S1
        I a S1
    """)


def build_and() -> Program:
    return microcode("and", ["a", "b"], {"out": "S2"}, ["S1", "S2"], """
        F S1
        F S2
        I a S1
        I b S1
        I S1 S2
    """)


def build_nand() -> Program:
    return microcode("nand", ["a", "b"], {"out": "S1"}, ["S1"], """
        F S1
        I b S1
        I a S1
    """)


def build_copy() -> Program:
    # double negation through two scratch registers
    return microcode("copy", ["a"], {"out": "S2"}, ["S1", "S2"], """
        F S1
        I a S1
        F S2
        I S1 S2
    """)


def build_half_adder() -> Program:
    # Cout overwrites a, b is clobbered
    return microcode("half_adder", ["a", "b"], {"Sum": "S1", "Cout": "a"}, ["S1", "S2"], """
        F S1
        F S2
        I a S1
        I b S2
        I S1 S2
        I b S1
        I a b
        F a
        I S1 a
        F S1
        I S2 S1
        I b S1
    """)


def build_full_adder() -> Program:
    # Sum overwrites a, Cout overwrites Cin, b is clobbered
    return microcode("full_adder", ["a", "b", "Cin"], {"Sum": "a", "Cout": "Cin"}, ["S1", "S2"], """
        F S1
        F S2
        I a S1
        I b S2
        I S1 b
        I a S2
        F a
        I b a
        I S2 a
        F S1
        I Cin S1
        I S2 Cin
        I a S1
        F a
        I S1 a
        F S2
        I Cin S2
        I b S2
        I b Cin
        I Cin a
        F Cin
        I S2 Cin
    """)


# -- boolean references -------------------------------------------------------

def ref_not(a):
    return {"out": 1 - a}


def ref_and(a, b):
    return {"out": a & b}


def ref_nand(a, b):
    return {"out": 1 - (a & b)}


def ref_or(a, b):
    return {"out": a | b}


def ref_xor(a, b):
    return {"out": a ^ b}


def ref_xnor(a, b):
    return {"out": 1 - (a ^ b)}


def ref_copy(a):
    return {"out": a}


def ref_mux(a, b, select):
    return {"out": b if select else a}


def ref_half_adder(a, b):
    return {"Sum": a ^ b, "Cout": a & b}


def ref_full_adder(a, b, Cin):
    total = a + b + Cin
    return {"Sum": total & 1, "Cout": total >> 1}


@dataclass(frozen=True)
class CellDescriptor:
    """Published cost constants of a cell.

    ``memristors`` is an int or an inclusive ``(low, high)`` range.  Cells whose
    microcode is not published have ``builder=None`` and are cost-only.
    """

    name: str
    steps: int | None
    memristors: int | tuple[int, int] | None
    energy_nJ: float | None
    reusable_inputs: bool | None
    reference_fn: ReferenceFn | None = None
    builder: Callable[[], Program] | None = field(default=None, compare=False)

    @property
    def executable(self) -> bool:
        return self.builder is not None

    def program(self) -> Program:
        if self.builder is None:
            raise ImplyError(f"{self.name} is cost-only; no microcode is available")
        return self.builder()


CELLS: dict[str, CellDescriptor] = {
    c.name: c for c in [
        CellDescriptor("false", 1, 1, 0.05, None),
        CellDescriptor("not", 2, 2, 0.13, False, ref_not, build_not),
        CellDescriptor("and", 5, (3, 4), 0.33, True, ref_and, build_and),
        CellDescriptor("nand", 3, 3, 0.24, True, ref_nand, build_nand),
        CellDescriptor("half_adder", 12, 4, 1.02, True, ref_half_adder, build_half_adder),
        CellDescriptor("full_adder", 22, 5, 1.85, True, ref_full_adder, build_full_adder),
        CellDescriptor("copy", 4, (3, 4), None, True, ref_copy, build_copy),
        CellDescriptor("xor", 9, 4, 0.374, True, ref_xor),
        CellDescriptor("or", None, None, 0.244, None, ref_or),
        CellDescriptor("xnor", None, None, 0.9, None, ref_xnor),
        CellDescriptor("first_mux2_1", 9, 6, 0.6, False, ref_mux),
        CellDescriptor("second_mux2_1", 7, 5, 0.9, False, ref_mux),
        CellDescriptor("compressor_4_2", 44, 7, 3.76, None),
    ]
}

_ALIASES = {"ha": "half_adder", "fa": "full_adder", "mux": "first_mux2_1",
            "first_mux": "first_mux2_1", "second_mux": "second_mux2_1"}


def cell_constants(name: str) -> CellDescriptor:
    key = name.strip().lower().replace("-", "_").replace(" ", "_")
    key = _ALIASES.get(key, key)
    try:
        return CELLS[key]
    except KeyError:
        raise ImplyError(f"unknown cell {name!r}; known: {', '.join(CELLS)}") from None


def executable_cells() -> dict[str, Program]:
    return {name: c.program() for name, c in CELLS.items() if c.executable}


# -- exhaustive verification --------------------------------------------------

@dataclass
class Mismatch:
    inputs: dict[str, int]
    expected: dict[str, int]
    observed: dict[str, int]


@dataclass
class Verdict:
    name: str
    vectors: int
    steps: int
    mismatches: list[Mismatch] = field(default_factory=list)
    expected_steps: int | None = None

    @property
    def steps_ok(self) -> bool:
        return self.expected_steps is None or self.expected_steps == self.steps

    @property
    def passed(self) -> bool:
        return not self.mismatches and self.steps_ok

    def __str__(self):
        status = "PASS" if self.passed else "FAIL"
        text = f"{status} {self.name}: {self.vectors} vectors, {self.steps} steps"
        if not self.steps_ok:
            text += f" (expected {self.expected_steps})"
        for m in self.mismatches[:5]:
            text += f"\n    {m.inputs}: expected {m.expected}, got {m.observed}"
        return text


def input_vectors(names: Sequence[str]):
    for bits in product((0, 1), repeat=len(names)):
        yield dict(zip(names, bits))


def exhaustive_outputs(program: Program, names: Sequence[str]) -> list[dict[str, int]]:
    """Simulate ``program`` on all 2**k vectors at once, one lane per vector.

    Vector ``v`` follows :func:`input_vectors` ordering (first name is the MSB).
    """
    k = len(names)
    lanes = 1 << k
    packed = {}
    for pos, name in enumerate(names):
        shift = k - 1 - pos
        packed[name] = sum(1 << v for v in range(lanes) if (v >> shift) & 1)
    result = run_program(program, packed, lanes=lanes)
    return [{o: (val >> v) & 1 for o, val in result.outputs.items()} for v in range(lanes)]


def verify_program(program: Program, reference_fn: ReferenceFn, expected_steps: int | None = None,
                   name: str | None = None) -> Verdict:
    names = list(program.free_inputs)
    if len(names) > 8:
        raise ImplyError("exhaustive verification is limited to 8 inputs")
    observed = exhaustive_outputs(program, names)
    verdict = Verdict(name or program.name, len(observed), program.steps, expected_steps=expected_steps)
    for vec, got in zip(input_vectors(names), observed):
        want = reference_fn(**vec)
        got = {k: got[k] for k in want}
        if got != want:
            verdict.mismatches.append(Mismatch(vec, want, got))
    return verdict


def verify_cell(program: Program, reference_fn: ReferenceFn) -> Verdict:
    """Exhaustively compare ``program`` against ``reference_fn`` (at most 8 inputs)."""
    declared = CELLS.get(program.name)
    return verify_program(program, reference_fn, declared.steps if declared else None)
