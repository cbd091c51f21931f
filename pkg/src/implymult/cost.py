"""Closed-form cost model for serial IMPLY multipliers.

Every family carries exact polynomials for steps, memristors and energy.  The
coefficients are held as :class:`fractions.Fraction` so that evaluations (and
census-based energy sums) are exact; floats are only produced at the edges.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

from . import ppu as ppu_lib
from .cells import cell_constants
from .core import ImplyError
from .multiplier import expected_census as census_formula

UNSIGNED = ppu_lib.UNSIGNED
SIGNED = ppu_lib.SIGNED
PROPOSED = ppu_lib.PROPOSED
CLASSIC = ppu_lib.CLASSIC


def _q(value) -> Fraction:
    return Fraction(str(value))


@dataclass(frozen=True)
class Poly:
    """Quadratic ``a*n^2 + b*n + c`` with exact coefficients."""

    a: Fraction
    b: Fraction
    c: Fraction

    @classmethod
    def of(cls, a=0, b=0, c=0) -> "Poly":
        return cls(_q(a), _q(b), _q(c))

    def exact(self, n: int) -> Fraction:
        return self.a * n * n + self.b * n + self.c

    def __call__(self, n: int):
        value = self.exact(n)
        return int(value) if value.denominator == 1 else float(value)

    def __str__(self):
        terms = []
        for coef, suffix in ((self.a, "n^2"), (self.b, "n"), (self.c, "")):
            if coef == 0:
                continue
            mag = abs(coef)
            text = _fmt_number(mag)
            if suffix and mag == 1:
                text = ""
            sign = "-" if coef < 0 else "+"
            terms.append((sign, text + suffix))
        if not terms:
            return "0"
        first_sign, first = terms[0]
        out = ("-" if first_sign == "-" else "") + first
        for sign, text in terms[1:]:
            out += f" {sign} {text}"
        return out


def _fmt_number(value: Fraction) -> str:
    if value.denominator == 1:
        return str(value.numerator)
    return format(float(value), "g")


@dataclass(frozen=True)
class CostFormulaSet:
    """Cost polynomials of one multiplier family.

    :param printed_energy: the energy polynomial as published, when it differs
        from ``energy_nJ`` (a documented typo); ``None`` otherwise
    :param array: ``(signedness, variant)`` for the CSA array families, whose
        cost also has a per-block census breakdown
    """

    family: str
    label: str
    signed: bool
    steps: Poly
    memristors: Poly
    energy_nJ: Poly
    printed_energy: Poly | None = None
    array: tuple[str, str] | None = None
    note: str = ""


FAMILIES: dict[str, CostFormulaSet] = {f.family: f for f in [
    CostFormulaSet("dadda", "Dadda", False, Poly.of(27, -32), Poly.of(1, 0, 2), Poly.of("2.18", "-2.68")),
    CostFormulaSet("compressor_ref28", "4:2 compressor serial multiplier", False, Poly.of(27, -32),
                   Poly.of(1, 0, 2), Poly.of("2.21", "-2.8", "-0.05")),
    CostFormulaSet("add_shift_unsigned", "Add & Shift", False, Poly.of(31, 1, 4), Poly.of(0, 3, 5),
                   Poly.of("2.623", "-0.023", "0.26")),
    CostFormulaSet("array_unsigned_classic", "Array Multiplier (Classic)", False, Poly.of(27, -32),
                   Poly.of(0, 5, -4), Poly.of("2.18", "-2.68"), array=(UNSIGNED, CLASSIC)),
    CostFormulaSet("array_unsigned_proposed", "Array Multiplier (Proposed)", False, Poly.of(25, -32, 2),
                   Poly.of(0, 5, -4), Poly.of("2.156", "-2.672", "-0.022"), array=(UNSIGNED, PROPOSED)),
    CostFormulaSet("add_shift_signed", "Add & Shift", True, Poly.of(31, 6, 9), Poly.of(0, 3, 5),
                   Poly.of("2.623", "0.287", "0.57"),
                   note="signed steps 31n^2 + 6n + 9 (the n=8 value 2041 and the 9-bit value 2574 both follow it)"),
    CostFormulaSet("booth_radix2", "Radix-2 Booth", True, Poly.of(49, 15, -4), Poly.of(0, 4, 8),
                   Poly.of("4.169", "0.804", "-0.2")),
    CostFormulaSet("baugh_wooley_dadda", "Baugh-Wooley (Dadda)", True, Poly.of(27, -24, 24), Poly.of(1, 0, 2),
                   Poly.of("2.18", "-1.84", "1.63"), printed_energy=Poly.of("2.18", "1.84", "1.63"),
                   note="energy printed with +1.84n; -1.84n reproduces 126.43 (n=8) and 161.65 (n=9)"),
    CostFormulaSet("array_signed_classic", "Array Multiplier (Classic)", True, Poly.of(27, -36, 3),
                   Poly.of(0, 5, -4), Poly.of("2.18", "-2.86", "2.03"), array=(SIGNED, CLASSIC)),
    CostFormulaSet("array_signed_proposed", "Array Multiplier (Proposed)", True, Poly.of(25, -32, 1),
                   Poly.of(0, 5, -4), Poly.of("2.156", "-2.703", "-0.067"),
                   printed_energy=Poly.of("2.156", "-2.073", "-0.067"), array=(SIGNED, PROPOSED),
                   note="energy printed with -2.073n; -2.703n reproduces 116.29 at n=8 and the census sum"),
]}

UNSIGNED_TABLE = ["dadda", "compressor_ref28", "add_shift_unsigned", "array_unsigned_classic",
                  "array_unsigned_proposed"]
SIGNED_TABLE = ["add_shift_signed", "booth_radix2", "baugh_wooley_dadda", "array_signed_classic",
                "array_signed_proposed"]

# published n=8 cells of the comparison tables: family -> (steps, memristors, energy as printed)
PUBLISHED_N8 = {
    "dadda": (1472, 66, "118.08"),
    "compressor_ref28": (1472, 66, "119"),
    "add_shift_unsigned": (1996, 29, "167.95"),
    "array_unsigned_classic": (1472, 36, "118.08"),
    "array_unsigned_proposed": (1346, 36, "116.59"),
    "add_shift_signed": (2041, 29, "170.74"),
    "booth_radix2": (3252, 40, "273.05"),
    "baugh_wooley_dadda": (1560, 66, "126.43"),
    "array_signed_classic": (1443, 36, "118.67"),
    "array_signed_proposed": (1345, 36, "116.29"),
}


def family(name: str) -> CostFormulaSet:
    try:
        return FAMILIES[name]
    except KeyError:
        raise ImplyError(f"unknown multiplier family {name!r}; known: {', '.join(FAMILIES)}") from None


# -- per-block unit costs -------------------------------------------------------------

def unit_costs(signedness: str, variant: str) -> dict[str, tuple[int, Fraction]]:
    """Block name -> (steps, energy nJ) for one array design.

    The classic signed design runs the folded PPU3/PPU8 programs (2 and 9 steps),
    which is what its published step total assumes, while its energies are the
    classic half/full adder values.
    """
    fam = SIGNED if signedness == SIGNED else UNSIGNED
    col = 0 if variant == PROPOSED else 1
    table = {}
    for (f, idx), steps in ppu_lib.STEPS.items():
        if f != fam:
            continue
        s = steps[col]
        if fam == SIGNED and idx in (3, 8):
            s = steps[0]
        table[f"PPU{idx}"] = (s, _q(ppu_lib.ENERGY[(f, idx)][col]))
    for block, cell in (("HA", "half_adder"), ("FA", "full_adder"), ("AND", "and")):
        c = cell_constants(cell)
        table[block] = (c.steps, _q(c.energy_nJ))
    return table


def energy_from_census(census: Mapping[str, int], signedness: str = UNSIGNED,
                       variant: str = PROPOSED) -> float:
    """Sum ``count x unit energy`` over a block census.

    Block names are ``PPU1``..``PPU8``, ``HA``, ``FA``, ``AND`` or any cell name
    with a published energy (``nand``, ``xor``, ...).

    :raises ImplyError: a block has no energy constant
    """
    return float(_census_energy(census, signedness, variant))


def _census_energy(census, signedness, variant) -> Fraction:
    units = unit_costs(signedness, variant)
    total = Fraction(0)
    for block, count in census.items():
        if block in units:
            energy = units[block][1]
        else:
            try:
                cell = cell_constants(block)
            except ImplyError:
                raise ImplyError(f"block {block!r} has no energy constant") from None
            if cell.energy_nJ is None:
                raise ImplyError(f"block {block!r} has no energy constant")
            energy = _q(cell.energy_nJ)
        total += count * energy
    return total


# -- reports ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BreakdownEntry:
    block: str
    count: int
    steps_per_block: int
    energy_nJ_per_block: Fraction

    @property
    def steps(self) -> int:
        return self.count * self.steps_per_block

    @property
    def energy_exact(self) -> Fraction:
        return self.count * self.energy_nJ_per_block

    def as_dict(self) -> dict:
        return {"block": self.block, "count": self.count, "steps_per_block": self.steps_per_block,
                "energy_nJ_per_block": float(self.energy_nJ_per_block), "steps": self.steps,
                "energy_nJ": float(self.energy_exact)}


@dataclass
class CostReport:
    """Costs of one family at one operand width.

    ``steps`` and ``energy_nJ`` equal the sums over ``breakdown``.
    """

    family: str
    n: int
    steps: int
    input_memristors: int
    work_memristors: int
    energy_exact: Fraction
    breakdown: list[BreakdownEntry]
    flags: list[str] = field(default_factory=list)

    @property
    def memristors(self) -> int:
        return self.input_memristors + self.work_memristors

    @property
    def energy_nJ(self) -> float:
        return float(self.energy_exact)

    def as_dict(self, pulse_width: float | None = None) -> dict:
        out = {
            "family": self.family, "n": self.n, "steps": self.steps,
            "memristors": {"input": self.input_memristors, "work": self.work_memristors,
                           "total": self.memristors},
            "energy_nJ": round(self.energy_nJ, 9),
            "breakdown": [e.as_dict() for e in self.breakdown],
        }
        if self.flags:
            out["flags"] = list(self.flags)
        if pulse_width is not None:
            out["latency_s"] = self.steps * pulse_width
        return out


def formula_cost(family_name: str, n: int, printed: bool = False) -> CostReport:
    """Evaluate a family's cost polynomials at width ``n``.

    :param printed: use the energy polynomial exactly as published, typo
        included, instead of the corrected one
    """
    fam = family(family_name)
    if not isinstance(n, int) or n < 4:
        raise ImplyError(f"operand width must be an integer >= 4, got {n!r}")
    steps = fam.steps(n)
    total_mem = fam.memristors(n)
    energy_poly = fam.printed_energy if printed and fam.printed_energy else fam.energy_nJ
    energy = energy_poly.exact(n)
    flags = []
    if fam.printed_energy is not None:
        other = fam.energy_nJ if energy_poly is fam.printed_energy else fam.printed_energy
        which = "printed" if energy_poly is fam.printed_energy else "corrected"
        flags.append(f"{which} energy {energy_poly}; alternative {other} gives "
                     f"{float(other.exact(n)):.3f} nJ ({fam.note})")

    if fam.array is not None and energy_poly is fam.energy_nJ:
        signedness, variant = fam.array
        units = unit_costs(signedness, variant)
        census = census_formula(n, signedness)
        breakdown = [BreakdownEntry(b, c, units[b][0], units[b][1]) for b, c in sorted(census.items())]
        if sum(e.steps for e in breakdown) != steps or sum(e.energy_exact for e in breakdown) != energy:
            raise AssertionError(f"{family_name}: census breakdown disagrees with the closed forms at n={n}")
    else:
        breakdown = [BreakdownEntry(family_name, 1, steps, energy)]
    return CostReport(family_name, n, steps, 2 * n, total_mem - 2 * n, energy, breakdown, flags)


def improvement(base: float, value: float) -> float:
    """Percentage saved by ``value`` relative to ``base``."""
    return (base - value) / base * 100.0


# -- comparison tables ---------------------------------------------------------------

def _decimals(text: str) -> int:
    return len(text.split(".")[1]) if "." in text else 0


def comparison_table(signed: bool, n: int = 8) -> dict:
    """Regenerate the unsigned or signed comparison table at width ``n``.

    The ``imp_*`` columns give each row's saving relative to the worst family of
    the table in that metric.  At n=8 each row also carries the published cells
    and whether the computed values reproduce them at the printed precision.
    """
    names = SIGNED_TABLE if signed else UNSIGNED_TABLE
    reports = {name: formula_cost(name, n) for name in names}
    worst_steps = max(r.steps for r in reports.values())
    worst_mem = max(r.memristors for r in reports.values())
    worst_energy = max(r.energy_nJ for r in reports.values())
    rows = []
    for name in names:
        fam, rep = FAMILIES[name], reports[name]
        row = {
            "family": name, "label": fam.label,
            "steps_formula": str(fam.steps), "steps": rep.steps,
            "memristors_formula": str(fam.memristors), "memristors": rep.memristors,
            "energy_formula": str(fam.energy_nJ), "energy_nJ": round(rep.energy_nJ, 6),
            "imp_steps": round(improvement(worst_steps, rep.steps), 2),
            "imp_memristors": round(improvement(worst_mem, rep.memristors), 2),
            "imp_energy": round(improvement(worst_energy, rep.energy_nJ), 2),
        }
        if fam.printed_energy is not None:
            row["energy_formula_printed"] = str(fam.printed_energy)
            row["energy_nJ_printed_formula"] = round(float(fam.printed_energy.exact(n)), 6)
            row["flag"] = fam.note
        if n == 8:
            p_steps, p_mem, p_energy = PUBLISHED_N8[name]
            row["published"] = {"steps": p_steps, "memristors": p_mem, "energy_nJ": p_energy}
            row["reproduced"] = {
                "steps": rep.steps == p_steps,
                "memristors": rep.memristors == p_mem,
                "energy_nJ": f"{rep.energy_nJ:.{_decimals(p_energy)}f}" == p_energy,
            }
        rows.append(row)
    return {"table": "signed" if signed else "unsigned", "n": n, "rows": rows}


def format_table(table: dict) -> str:
    """Human-readable rendering of :func:`comparison_table` output."""
    header = f"{'family':<26}{'steps':>8}{'mem':>6}{'energy nJ':>12}{'%steps':>8}{'%mem':>7}{'%energy':>9}"
    lines = [f"{table['table']} multipliers, n={table['n']}", header]
    for r in table["rows"]:
        mark = ""
        if "reproduced" in r and not all(r["reproduced"].values()):
            mark = "  <- differs from published"
        if "flag" in r:
            mark += "  [flag: " + r["flag"] + "]"
        lines.append(f"{r['family']:<26}{r['steps']:>8}{r['memristors']:>6}{r['energy_nJ']:>12.3f}"
                     f"{r['imp_steps']:>8.2f}{r['imp_memristors']:>7.2f}{r['imp_energy']:>9.2f}{mark}")
    return "\n".join(lines)


# -- cross-validation against simulation ------------------------------------------------

@dataclass
class Check:
    name: str
    simulated: object
    formula: object
    ok: bool

    def __str__(self):
        return f"{'ok  ' if self.ok else 'DIFF'} {self.name}: simulated {self.simulated}, formula {self.formula}"


@dataclass
class CrossValidation:
    design: str
    checks: list[Check]

    @property
    def passed(self) -> bool:
        return all(c.ok for c in self.checks)

    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.ok]

    def __str__(self):
        return "\n".join([self.design] + ["  " + str(c) for c in self.checks])


def array_family(signedness: str, variant: str) -> str:
    return f"array_{signedness}_{variant}"


def cross_validate(design, tolerance_nJ: float = 1e-6) -> CrossValidation:
    """Compare a built multiplier design with its family's closed forms.

    Mismatches are reported as failed checks, never raised.
    """
    name = array_family(design.signedness, design.variant)
    rep = formula_cost(name, design.n)
    census_energy = _census_energy(design.census, design.signedness, design.variant)
    expected = census_formula(design.n, design.signedness)
    checks = [
        Check("steps", design.steps, rep.steps, design.steps == rep.steps),
        Check("census", dict(sorted(design.census.items())), dict(sorted(expected.items())),
              dict(design.census) == expected),
        Check("registers", design.total_registers, rep.memristors, design.total_registers == rep.memristors),
        Check("energy_nJ", float(census_energy), rep.energy_nJ,
              abs(float(census_energy - rep.energy_exact)) <= tolerance_nJ),
    ]
    return CrossValidation(design.program.name, checks)


def all_reports(n: int, names: Iterable[str] | None = None) -> list[CostReport]:
    return [formula_cost(name, n) for name in (names or FAMILIES)]
