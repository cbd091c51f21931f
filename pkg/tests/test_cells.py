from itertools import product

import pytest

from implymult.cells import (
    CELLS, build_and, build_copy, build_full_adder, build_half_adder, build_nand, build_not,
    cell_constants, executable_cells, verify_cell, verify_program,
)
from implymult.core import ImplyError, Program, run_program

# oracles: arithmetic meaning of each cell, independent of the library's reference functions
ORACLES = {
    "not": (build_not, lambda a: {"out": 1 - a}, 2),
    "and": (build_and, lambda a, b: {"out": int(a + b == 2)}, 5),
    "nand": (build_nand, lambda a, b: {"out": int(a + b < 2)}, 3),
    "copy": (build_copy, lambda a: {"out": a}, 4),
    "half_adder": (build_half_adder, lambda a, b: {"Sum": (a + b) % 2, "Cout": (a + b) // 2}, 12),
    "full_adder": (build_full_adder, lambda a, b, Cin: {"Sum": (a + b + Cin) % 2, "Cout": (a + b + Cin) // 2}, 22),
}


@pytest.mark.parametrize("name", sorted(ORACLES))
def test_cell_exhaustive(name):
    builder, oracle, steps = ORACLES[name]
    prog = builder()
    verdict = verify_program(prog, oracle, steps)
    assert verdict.passed, str(verdict)
    assert verdict.vectors == 2 ** len(prog.free_inputs)


@pytest.mark.parametrize("name", sorted(ORACLES))
def test_cell_single_lane_matches_oracle(name):
    builder, oracle, _ = ORACLES[name]
    prog = builder()
    for bits in product((0, 1), repeat=len(prog.free_inputs)):
        vec = dict(zip(prog.free_inputs, bits))
        out = run_program(prog, vec).outputs
        assert {k: out[k] for k in oracle(**vec)} == oracle(**vec)


@pytest.mark.parametrize("name", sorted(ORACLES))
def test_cells_initialise_scratch(name):
    assert ORACLES[name][0]().warnings() == []


def test_verify_cell_uses_declared_steps():
    assert verify_cell(build_and(), ORACLES["and"][1]).passed


def test_wrong_oracle_reports_mismatch():
    verdict = verify_program(build_and(), lambda a, b: {"out": a | b}, 5)
    assert not verdict.passed
    assert len(verdict.mismatches) == 2
    assert str(verdict).startswith("FAIL")


def test_wrong_step_count_fails():
    verdict = verify_program(build_and(), ORACLES["and"][1], 6)
    assert not verdict.passed and "expected 6" in str(verdict)


@pytest.mark.parametrize("name,steps,energy", [
    ("false", 1, 0.05), ("not", 2, 0.13), ("and", 5, 0.33), ("nand", 3, 0.24),
    ("half_adder", 12, 1.02), ("full_adder", 22, 1.85), ("xor", 9, 0.374),
    ("first_mux2_1", 9, 0.6), ("second_mux2_1", 7, 0.9), ("compressor_4_2", 44, 3.76),
])
def test_published_constants(name, steps, energy):
    cell = cell_constants(name)
    assert cell.steps == steps
    assert cell.energy_nJ == energy


def test_memristor_counts():
    assert cell_constants("and").memristors == (3, 4)
    assert cell_constants("full_adder").memristors == 5
    assert cell_constants("compressor_4_2").memristors == 7


def test_aliases_and_unknown():
    assert cell_constants("FA").name == "full_adder"
    assert cell_constants("Half-Adder").name == "half_adder"
    with pytest.raises(ImplyError, match="unknown cell"):
        cell_constants("nor")


def test_cost_only_cells_have_no_program():
    assert not CELLS["xor"].executable
    with pytest.raises(ImplyError, match="cost-only"):
        CELLS["xor"].program()
    assert set(executable_cells()) == set(ORACLES)


def test_exhaustive_limit():
    big = Program("wide", [], {f"i{k}": f"i{k}" for k in range(9)}, {}, [])
    with pytest.raises(ImplyError, match="8 inputs"):
        verify_program(big, lambda **kw: {})
