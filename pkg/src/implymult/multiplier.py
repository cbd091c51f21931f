"""n-bit CSA array multipliers lowered to a single serial IMPLY program.

The builder lays PPUs out row by row (row 1 of half-adder PPUs, rows 2..n-1 of
full-adder PPUs, then the final ripple-carry row), assigns every logical wire a
physical memristor with a linear-scan allocator, and concatenates the renamed
block programs.  No copy steps are inserted, so the program's instruction count
is exactly the sum of the block step counts.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Mapping, Sequence

import numpy as np

from . import ppu as ppu_lib
from .cells import build_and, build_full_adder, build_half_adder, cell_constants
from .core import ImplyError, Instruction, Machine, Program, dump_program

UNSIGNED = "unsigned"
SIGNED = "signed"
PROPOSED = ppu_lib.PROPOSED
CLASSIC = ppu_lib.CLASSIC


@dataclass(frozen=True)
class Block:
    """One combinational block of the array.

    :param kind: census name (``PPU1`` .. ``PPU8``, ``HA``, ``FA``, ``AND``)
    :param inputs: program input name -> wire
    :param outputs: program output name -> wire
    """

    kind: str
    program: Program
    inputs: Mapping[str, str]
    outputs: Mapping[str, str]
    energy_nJ: float
    position: tuple[int, int]  # (row, column weight)

    @property
    def steps(self) -> int:
        return self.program.steps


@dataclass
class Netlist:
    n: int
    signedness: str
    variant: str
    blocks: list[Block]
    operands: list[str]
    products: list[str]

    def census(self) -> dict[str, int]:
        return dict(Counter(b.kind for b in self.blocks))


# -- netlist construction -------------------------------------------------------

def _ppu(family: str, index: int, variant: str):
    return ppu_lib._build(family, index, variant)


def _block(kind, desc_or_prog, inputs, outputs, position, energy=None, program=None) -> Block:
    if isinstance(desc_or_prog, Program):
        prog = desc_or_prog
    else:
        prog = program or desc_or_prog.program
        energy = desc_or_prog.energy_nJ if energy is None else energy
    return Block(kind, prog, dict(inputs), dict(outputs), energy, position)


def _check_width(n: int, signedness: str):
    if not isinstance(n, int) or n < 4:
        raise ImplyError(f"operand width must be an integer >= 4, got {n!r}")
    if signedness not in (UNSIGNED, SIGNED):
        raise ImplyError(f"unknown signedness {signedness!r}")


def build_netlist(n: int, signedness: str = UNSIGNED, variant: str = PROPOSED) -> Netlist:
    """Lay out the blocks of an n-bit array multiplier in evaluation order.

    Wires: operands ``x{i}``/``y{j}``; row sums ``s{row}_{weight}``; row carries
    ``c{row}_{weight}`` (carry *out of* that weight); ripple carries ``r{weight}``
    (carry *into* that weight); product bits ``p{k}``.
    """
    _check_width(n, signedness)
    if variant not in (PROPOSED, CLASSIC):
        raise ImplyError(f"unknown variant {variant!r}")
    signed = signedness == SIGNED
    fam = ppu_lib.SIGNED if signed else ppu_lib.UNSIGNED
    fa = cell_constants("full_adder")
    ha = cell_constants("half_adder")
    an = cell_constants("and")
    x = [f"x{i}" for i in range(n)]
    y = [f"y{j}" for j in range(n)]
    blocks: list[Block] = []

    def sum_wire(row, k):
        return f"p{k}" if k == row else f"s{row}_{k}"

    blocks.append(_block("AND", build_and(), {"a": x[0], "b": y[0]}, {"out": "p0"}, (0, 0), an.energy_nJ))

    # row 1: half-adder PPUs over partial-product rows 0 and 1
    for k in range(1, n):
        a, b, c, d = x[k], y[0], x[k - 1], y[1]
        if signed and k == n - 1:
            # AND(x[n-2], y1) plus NAND(x[n-1], y0)
            blocks.append(_block("PPU2", _ppu(fam, 2, variant), {"a": c, "b": d, "c": a, "d": b},
                                 {"Sum": sum_wire(1, k), "Cout": f"c1_{k}"}, (1, k)))
        else:
            blocks.append(_block("PPU1", _ppu(fam, 1, variant), {"a": a, "b": b, "c": c, "d": d},
                                 {"Sum": sum_wire(1, k), "Cout": f"c1_{k}"}, (1, k)))

    # rows 2..n-1: full-adder PPUs; the leftmost one absorbs the previous row's spare product
    for j in range(2, n):
        last = j == n - 1
        for k in range(j, j + n - 1):
            i = k - j
            outs = {"Sum": sum_wire(j, k), "Cout": f"c{j}_{k}"}
            cin = f"c{j - 1}_{k - 1}"
            if i < n - 2:
                ins = {"a": x[i], "b": y[j], "beta": f"s{j - 1}_{k}", "Cin": cin}
                if not signed:
                    blocks.append(_block("PPU2", _ppu(fam, 2, variant), ins, outs, (j, k)))
                elif last:
                    blocks.append(_block("PPU6", _ppu(fam, 6, variant), ins, outs, (j, k)))
                else:
                    blocks.append(_block("PPU4", _ppu(fam, 4, variant), ins, outs, (j, k)))
            elif not signed:
                ins = {"a": x[n - 2], "b": y[j], "c": x[n - 1], "d": y[j - 1], "Cin": cin}
                blocks.append(_block("PPU3", _ppu(fam, 3, variant), ins, outs, (j, k)))
            elif last:
                ins = {"a": x[n - 2], "b": y[j], "c": x[n - 1], "d": y[j - 1], "Cin": cin}
                blocks.append(_block("PPU5", _ppu(fam, 5, variant), ins, outs, (j, k)))
            else:
                # NAND(x[n-1], y[j-1]) and AND(x[n-2], y[j])
                ins = {"a": x[n - 1], "b": y[j - 1], "c": x[n - 2], "d": y[j], "Cin": cin}
                blocks.append(_block("PPU7", _ppu(fam, 7, variant), ins, outs, (j, k)))

    # final ripple-carry row
    row = n
    s, c = f"s{n - 1}_", f"c{n - 1}_"
    if signed:
        # constant-1 at weight n folded into PPU8; the classic totals count the folded
        # 9-step/2-step programs for PPU8/PPU3 while charging classic cell energies
        p8 = _ppu(fam, 8, variant)
        blocks.append(_block("PPU8", p8, {"beta": s + str(n), "Cin": c + str(n - 1)},
                             {"Sum": f"p{n}", "Cout": f"r{n + 1}"}, (row, n),
                             program=_ppu(fam, 8, PROPOSED).program))
    else:
        blocks.append(_block("HA", build_half_adder(), {"a": s + str(n), "b": c + str(n - 1)},
                             {"Sum": f"p{n}", "Cout": f"r{n + 1}"}, (row, n), ha.energy_nJ))
    for k in range(n + 1, 2 * n - 2):
        blocks.append(_block("FA", build_full_adder(), {"a": s + str(k), "b": c + str(k - 1), "Cin": f"r{k}"},
                             {"Sum": f"p{k}", "Cout": f"r{k + 1}"}, (row, k), fa.energy_nJ))
    k = 2 * n - 2
    top = _ppu(fam, 4 if signed else 2, variant)
    top_carry = f"r{k + 1}" if signed else f"p{k + 1}"
    blocks.append(_block("PPU4" if signed else "PPU2", top,
                         {"a": x[n - 1], "b": y[n - 1], "beta": c + str(k - 1), "Cin": f"r{k}"},
                         {"Sum": f"p{k}", "Cout": top_carry}, (row, k)))
    if signed:
        # constant-1 at weight 2n-1; the carry out of it is discarded (mod 2**2n)
        p3 = _ppu(fam, 3, variant)
        blocks.append(_block("PPU3", p3, {"beta": f"r{k + 1}"}, {"Sum": f"p{k + 1}"}, (row, k + 1),
                             program=_ppu(fam, 3, PROPOSED).program))

    return Netlist(n, signedness, variant, blocks, x + y, [f"p{k}" for k in range(2 * n)])


def expected_census(n: int, signedness: str) -> dict[str, int]:
    if signedness == UNSIGNED:
        return {"PPU1": n - 1, "PPU2": n * n - 4 * n + 5, "PPU3": n - 2, "HA": 1, "FA": n - 3, "AND": 1}
    return {"PPU1": n - 2, "PPU2": 1, "PPU3": 1, "PPU4": n * n - 5 * n + 7, "PPU5": 1, "PPU6": n - 2,
            "PPU7": n - 3, "PPU8": 1, "FA": n - 3, "AND": 1}


# -- register allocation ----------------------------------------------------------

@dataclass
class AllocationPlan:
    """Result of linear-scan allocation over the block order.

    ``intervals[wire] = (def_block, last_use_block)``; operands are defined at -1 and
    product bits stay live until ``len(blocks)``.
    """

    intervals: dict[str, tuple[int, int]]
    assignment: dict[str, str]
    peak: int
    bindings: list[dict[str, str]]  # per block: program register -> physical register
    occupancy: list[int] = field(default_factory=list)

    @property
    def registers(self) -> list[str]:
        return [f"m{i}" for i in range(self.peak)]


class AllocationError(ImplyError):
    def __init__(self, message, peak=None, wires=()):
        super().__init__(message)
        self.peak = peak
        self.wires = tuple(wires)


def liveness(netlist: Netlist) -> dict[str, tuple[int, int]]:
    end = len(netlist.blocks)
    start = {w: -1 for w in netlist.operands}
    last = {w: -1 for w in netlist.operands}
    for b, block in enumerate(netlist.blocks):
        for wire in block.inputs.values():
            if wire not in start:
                raise AllocationError(f"block {b} ({block.kind}) reads {wire} before it is produced", wires=[wire])
            last[wire] = b
        for wire in block.outputs.values():
            if wire in start:
                raise AllocationError(f"wire {wire} is driven twice", wires=[wire])
            start[wire] = b
            last[wire] = b
    for wire in netlist.products:
        if wire not in start:
            raise AllocationError(f"product bit {wire} is never produced", wires=[wire])
        last[wire] = end
    return {w: (start[w], last[w]) for w in start}


def allocate_registers(netlist: Netlist, limit: int | None = None) -> AllocationPlan:
    """Assign physical memristors ``m0, m1, ...`` with first-fit linear scan.

    Operands take ``m0..m{2n-1}``.  A block's scratch registers are taken from the
    lowest free indices; registers whose wire is past its last use (including
    clobbered inputs) are released after the block, so operand memristors get
    recycled for product bits.
    """
    intervals = liveness(netlist)
    free: list[int] = []
    next_new = 0
    where: dict[str, int] = {}
    assignment: dict[str, str] = {}

    def take() -> int:
        nonlocal next_new
        if free:
            free.sort()
            return free.pop(0)
        next_new += 1
        return next_new - 1

    for wire in netlist.operands:
        where[wire] = take()
        assignment[wire] = f"m{where[wire]}"

    peak = len(where)
    bindings = []
    occupancy = []
    for b, block in enumerate(netlist.blocks):
        prog = block.program
        regmap = {}
        for name, reg in prog.inputs.items():
            regmap[reg] = where[block.inputs[name]]
        clobbered = prog.written_registers() & set(prog.input_registers)
        for name, reg in prog.inputs.items():
            wire = block.inputs[name]
            if reg in clobbered and intervals[wire][1] != b:
                raise AllocationError(f"block {b} ({block.kind}) overwrites {wire}, which is still live",
                                      peak, [wire])
        scratch = [r for r in prog.work if r not in regmap]
        for reg in scratch:
            regmap[reg] = take()
        live = len(where) + len(scratch)
        occupancy.append(live)
        peak = max(peak, live)
        if limit is not None and live > limit:
            over = sorted(where, key=lambda w: where[w])
            raise AllocationError(f"block {b} ({block.kind}) needs {live} registers, limit {limit}", live, over)
        bindings.append({r: f"m{i}" for r, i in regmap.items()})

        holding = {}
        for name, wire in block.outputs.items():
            holding[regmap[prog.outputs[name]]] = wire
        for name in set(block.inputs.values()):
            if intervals[name][1] == b:
                idx = where.pop(name)
                if idx not in holding:
                    free.append(idx)
        for reg in scratch:
            if regmap[reg] not in holding:
                free.append(regmap[reg])
        for idx, wire in holding.items():
            where[wire] = idx
            assignment[wire] = f"m{idx}"
        # outputs nobody reads (e.g. a discarded carry) die immediately
        for wire in list(block.outputs.values()):
            if intervals[wire][1] == b and wire not in netlist.products:
                free.append(where.pop(wire))

    return AllocationPlan(intervals, assignment, peak, bindings, occupancy)


# -- designs ------------------------------------------------------------------------

@dataclass(frozen=True)
class MultiplierDesign:
    n: int
    signedness: str
    variant: str
    program: Program
    census: Mapping[str, int]
    total_registers: int
    steps: int
    netlist: Netlist = field(repr=False, compare=False)
    plan: AllocationPlan = field(repr=False, compare=False)

    @property
    def input_memristors(self) -> int:
        return 2 * self.n

    @property
    def work_memristors(self) -> int:
        return self.total_registers - 2 * self.n

    @property
    def energy_nJ(self) -> float:
        return sum(b.energy_nJ for b in self.netlist.blocks)

    def manifest(self) -> dict:
        return {
            "n": self.n, "signedness": self.signedness, "variant": self.variant, "steps": self.steps,
            "registers": {"input": self.input_memristors, "work": self.work_memristors,
                          "total": self.total_registers},
            "census": dict(sorted(self.census.items())),
        }

    def to_json(self) -> str:
        return json.dumps(self.manifest(), sort_keys=True, indent=2)

    def to_microcode(self) -> str:
        comments = ["census:"] + [f"  {k}: {v}" for k, v in sorted(self.census.items())]
        return dump_program(self.program, comments)


def lower(netlist: Netlist, plan: AllocationPlan, name: str) -> Program:
    instructions: list[Instruction] = []
    for block, binding in zip(netlist.blocks, plan.bindings):
        instructions += [instr.rename(binding) for instr in block.program.instructions]
    inputs = {w: plan.assignment[w] for w in netlist.operands}
    outputs = {w: plan.assignment[w] for w in netlist.products}
    work = tuple(r for r in plan.registers if r not in set(inputs.values()))
    return Program(name, tuple(instructions), inputs, outputs, work)


@lru_cache(maxsize=None)
def _design(n: int, signedness: str, variant: str) -> MultiplierDesign:
    netlist = build_netlist(n, signedness, variant)
    plan = allocate_registers(netlist)
    name = f"array_{signedness}_{variant}_{n}"
    program = lower(netlist, plan, name)
    return MultiplierDesign(n, signedness, variant, program, netlist.census(), plan.peak,
                            program.steps, netlist, plan)


def build_unsigned_array(n: int, variant: str = PROPOSED) -> MultiplierDesign:
    _check_width(n, UNSIGNED)
    return _design(n, UNSIGNED, variant)


def build_signed_array(n: int, variant: str = PROPOSED) -> MultiplierDesign:
    _check_width(n, SIGNED)
    return _design(n, SIGNED, variant)


def build_array(n: int, signedness: str, variant: str = PROPOSED) -> MultiplierDesign:
    if signedness == SIGNED:
        return build_signed_array(n, variant)
    return build_unsigned_array(n, variant)


def formula_steps(n: int, signedness: str, variant: str) -> int:
    if signedness == UNSIGNED:
        return 25 * n * n - 32 * n + 2 if variant == PROPOSED else 27 * n * n - 32 * n
    return 25 * n * n - 32 * n + 1 if variant == PROPOSED else 27 * n * n - 36 * n + 3


# -- execution ------------------------------------------------------------------------

def operand_range(n: int, signedness: str) -> range:
    if signedness == SIGNED:
        return range(-(1 << (n - 1)), 1 << (n - 1))
    return range(0, 1 << n)


def _pack(bits: np.ndarray) -> int:
    """Pack a 0/1 array into an int, element ``i`` becoming bit ``i``."""
    return int.from_bytes(np.packbits(bits.astype(np.uint8), bitorder="little").tobytes(), "little")


def _unpack(value: int, lanes: int) -> np.ndarray:
    raw = value.to_bytes((lanes + 7) // 8, "little")
    return np.unpackbits(np.frombuffer(raw, dtype=np.uint8), bitorder="little")[:lanes]


def multiply_array(design: MultiplierDesign, xs, ys) -> tuple[np.ndarray, int]:
    """Run ``design`` on many operand pairs at once, one machine lane per pair.

    :param xs: integer operands, any array-like
    :param ys: integer operands, same length as ``xs``
    :return: decoded products (int64 array) and the number of steps each lane consumed
    """
    xs = np.asarray(xs, dtype=np.int64).ravel()
    ys = np.asarray(ys, dtype=np.int64).ravel()
    if xs.shape != ys.shape:
        raise ImplyError("operand lists differ in length")
    lanes = xs.size
    if lanes == 0:
        return np.zeros(0, dtype=np.int64), 0
    n = design.n
    span = operand_range(n, design.signedness)
    for label, values in (("x", xs), ("y", ys)):
        bad = (values < span.start) | (values >= span.stop)
        if bad.any():
            raise ImplyError(f"{label}={int(values[bad][0])} is not a {n}-bit {design.signedness} operand")
    mask = (1 << n) - 1
    prog = design.program
    machine = Machine(prog.registers, lanes=lanes)
    for side, values in (("x", xs), ("y", ys)):
        enc = values & mask
        for bit in range(n):
            machine.load(prog.inputs[f"{side}{bit}"], _pack((enc >> bit) & 1))
    machine.execute(prog.instructions)
    out = np.zeros(lanes, dtype=np.int64)
    for k in range(2 * n):
        out |= _unpack(machine.read(prog.outputs[f"p{k}"]), lanes).astype(np.int64) << k
    if design.signedness == SIGNED:
        out -= ((out >> (2 * n - 1)) & 1) << (2 * n)
    return out, machine.step_count


def multiply_batch(design: MultiplierDesign, xs: Sequence[int], ys: Sequence[int]) -> tuple[list[int], int]:
    """List-in, list-out wrapper around :func:`multiply_array`."""
    products, steps = multiply_array(design, xs, ys)
    return products.tolist(), steps


def multiply(design: MultiplierDesign, x: int, y: int) -> int:
    products, steps = multiply_batch(design, [x], [y])
    assert steps == design.steps
    return products[0]


@dataclass
class ProductVerdict:
    name: str
    pairs: int
    steps: int
    failures: list[tuple[int, int, int, int]]

    @property
    def passed(self) -> bool:
        return not self.failures

    def __str__(self):
        status = "PASS" if self.passed else "FAIL"
        text = f"{status} {self.name}: {self.pairs} operand pairs, {self.steps} steps"
        for x, y, want, got in self.failures[:5]:
            text += f"\n    {x} * {y}: expected {want}, got {got}"
        return text


def verify_multiplier(design: MultiplierDesign, chunk: int = 1 << 18) -> ProductVerdict:
    """Check every operand pair against host multiplication."""
    values = np.arange(operand_range(design.n, design.signedness).start,
                       operand_range(design.n, design.signedness).stop, dtype=np.int64)
    xs = np.repeat(values, values.size)
    ys = np.tile(values, values.size)
    failures = []
    for start in range(0, xs.size, chunk):
        px, py = xs[start:start + chunk], ys[start:start + chunk]
        got, steps = multiply_array(design, px, py)
        if steps != design.steps:
            raise ImplyError(f"lane consumed {steps} steps, design declares {design.steps}")
        want = px * py
        for i in np.flatnonzero(got != want):
            failures.append((int(px[i]), int(py[i]), int(want[i]), int(got[i])))
    return ProductVerdict(design.program.name, int(xs.size), design.steps, failures)
