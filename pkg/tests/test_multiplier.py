import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from implymult.core import ImplyError, parse_program
from implymult.multiplier import (
    CLASSIC, PROPOSED, SIGNED, UNSIGNED, AllocationError, allocate_registers, build_array, build_netlist,
    build_signed_array, build_unsigned_array, formula_steps, multiply, multiply_array, multiply_batch,
    verify_multiplier,
)

DESIGNS = [(s, v) for s in (UNSIGNED, SIGNED) for v in (PROPOSED, CLASSIC)]


def table5(n):
    return {"PPU1": n - 1, "PPU2": n * n - 4 * n + 5, "PPU3": n - 2, "HA": 1, "FA": n - 3, "AND": 1}


def table12(n):
    return {"PPU1": n - 2, "PPU2": 1, "PPU3": 1, "PPU4": n * n - 5 * n + 7, "PPU5": 1, "PPU6": n - 2,
            "PPU7": n - 3, "PPU8": 1, "FA": n - 3, "AND": 1}


@pytest.mark.parametrize("n", [4, 5, 6, 8, 10])
def test_census(n):
    assert build_unsigned_array(n).census == table5(n)
    assert build_signed_array(n).census == table12(n)


@pytest.mark.parametrize("n", [4, 6, 8, 10])
@pytest.mark.parametrize("signedness,variant", DESIGNS)
def test_step_closed_forms(n, signedness, variant):
    closed = {
        (UNSIGNED, PROPOSED): 25 * n * n - 32 * n + 2, (UNSIGNED, CLASSIC): 27 * n * n - 32 * n,
        (SIGNED, PROPOSED): 25 * n * n - 32 * n + 1, (SIGNED, CLASSIC): 27 * n * n - 36 * n + 3,
    }[(signedness, variant)]
    design = build_array(n, signedness, variant)
    assert design.steps == design.program.steps == closed == formula_steps(n, signedness, variant)
    assert sum(b.steps for b in design.netlist.blocks) == closed


def test_published_step_examples():
    assert build_unsigned_array(8).steps == 1346
    assert build_unsigned_array(8, CLASSIC).steps == 1472
    assert build_signed_array(8).steps == 1345
    assert build_signed_array(8, CLASSIC).steps == 1443
    assert build_unsigned_array(4).steps == 274
    assert build_signed_array(4).steps == 273


@pytest.mark.parametrize("n", [4, 5])
@pytest.mark.parametrize("signedness,variant", DESIGNS)
def test_exhaustive_small(n, signedness, variant):
    verdict = verify_multiplier(build_array(n, signedness, variant))
    assert verdict.passed, str(verdict)
    assert verdict.pairs == 4 ** n


def test_examples():
    assert multiply(build_unsigned_array(8), 13, 11) == 143
    assert multiply(build_unsigned_array(8), 255, 0) == 0
    assert multiply(build_signed_array(8), -3, 5) == -15
    assert multiply(build_signed_array(8, CLASSIC), -128, -128) == 16384


@settings(max_examples=40, deadline=None)
@given(n=st.integers(4, 12), signed=st.booleans(), data=st.data())
def test_random_operands(n, signed, data):
    lo, hi = (-(1 << (n - 1)), (1 << (n - 1)) - 1) if signed else (0, (1 << n) - 1)
    xs = data.draw(st.lists(st.integers(lo, hi), min_size=1, max_size=20))
    ys = data.draw(st.lists(st.integers(lo, hi), min_size=len(xs), max_size=len(xs)))
    s = SIGNED if signed else UNSIGNED
    for variant in (PROPOSED, CLASSIC):
        got, steps = multiply_batch(build_array(n, s, variant), xs, ys)
        assert got == [x * y for x, y in zip(xs, ys)]
        assert steps == formula_steps(n, s, variant)


@pytest.mark.parametrize("n", [7, 9])
def test_odd_width_signed(n):
    rng = np.random.default_rng(n)
    xs = rng.integers(-(1 << (n - 1)), 1 << (n - 1), 5000)
    ys = rng.integers(-(1 << (n - 1)), 1 << (n - 1), 5000)
    for variant in (PROPOSED, CLASSIC):
        got, _ = multiply_array(build_signed_array(n, variant), xs, ys)
        assert np.array_equal(got, xs * ys)


def test_variants_agree():
    xs = np.arange(-128, 128).repeat(256)
    ys = np.tile(np.arange(-128, 128), 256)
    a, _ = multiply_array(build_signed_array(8, PROPOSED), xs, ys)
    b, _ = multiply_array(build_signed_array(8, CLASSIC), xs, ys)
    assert np.array_equal(a, b)


def test_rejections():
    with pytest.raises(ImplyError):
        build_unsigned_array(3)
    with pytest.raises(ImplyError):
        build_signed_array(2)
    with pytest.raises(ImplyError):
        build_netlist(8, "ones-complement")
    d = build_unsigned_array(8)
    with pytest.raises(ImplyError, match="not a 8-bit"):
        multiply(d, 256, 1)
    with pytest.raises(ImplyError):
        multiply(d, -1, 1)
    with pytest.raises(ImplyError):
        multiply(build_signed_array(8), 128, 1)
    with pytest.raises(ImplyError, match="length"):
        multiply_batch(d, [1, 2], [1])


def test_lsb_is_lone_and():
    first = build_netlist(6).blocks[0]
    assert first.kind == "AND" and first.inputs == {"a": "x0", "b": "y0"} and first.outputs == {"out": "p0"}


# -- allocation ---------------------------------------------------------------------

@pytest.mark.parametrize("n", [4, 6, 8])
@pytest.mark.parametrize("signedness,variant", DESIGNS)
def test_no_two_live_wires_share_a_register(n, signedness, variant):
    design = build_array(n, signedness, variant)
    plan, blocks = design.plan, design.netlist.blocks
    for b in range(len(blocks)):
        live_in = [w for w, (s, e) in plan.intervals.items() if s < b <= e]
        regs = [plan.assignment[w] for w in live_in]
        assert len(regs) == len(set(regs)), f"block {b}"
        survivors = [w for w, (s, e) in plan.intervals.items() if s < b < e]
        outs = [plan.assignment[w] for w in blocks[b].outputs.values()]
        assert not set(outs) & {plan.assignment[w] for w in survivors}


@pytest.mark.parametrize("signedness", [UNSIGNED, SIGNED])
def test_y_operand_dies_after_next_row(signedness):
    n = 8
    design = build_array(n, signedness)
    blocks = design.netlist.blocks
    for j in range(n):
        rows = [blk.position[0] for blk in blocks if f"y{j}" in blk.inputs.values()]
        assert max(rows) <= j + 1


def test_operands_sit_in_first_registers():
    design = build_unsigned_array(6)
    regs = sorted(int(design.plan.assignment[w][1:]) for w in design.netlist.operands)
    assert regs == list(range(12))


def test_product_bits_reuse_operand_registers():
    design = build_unsigned_array(8)
    operand_regs = {design.plan.assignment[w] for w in design.netlist.operands}
    product_regs = {design.program.outputs[f"p{k}"] for k in range(16)}
    assert product_regs & operand_regs


def test_allocation_is_deterministic():
    a = allocate_registers(build_netlist(6, SIGNED))
    b = allocate_registers(build_netlist(6, SIGNED))
    assert a.assignment == b.assignment and a.peak == b.peak


def test_allocation_limit_reports_wires():
    netlist = build_netlist(6)
    peak = allocate_registers(netlist).peak
    with pytest.raises(AllocationError) as info:
        allocate_registers(netlist, limit=peak - 1)
    assert info.value.peak == peak and info.value.wires


@pytest.mark.parametrize("n", [4, 5, 6, 8, 10])
def test_peak_usage_is_4n_plus_2(n):
    # measured behaviour of the row-major first-fit allocator
    for s, v in DESIGNS:
        assert build_array(n, s, v).total_registers == 4 * n + 2


# -- exports ---------------------------------------------------------------------------

def test_manifest_and_microcode():
    design = build_signed_array(4)
    manifest = json.loads(design.to_json())
    assert manifest["steps"] == 273 and manifest["census"]["PPU8"] == 1
    assert manifest["registers"]["input"] == 8
    text = design.to_microcode()
    assert "# census:" in text
    assert parse_program(text) == design.program
