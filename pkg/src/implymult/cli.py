"""Command-line entry point: ``implymult {verify,cost,trace,convolve,report}``.

Machine-readable output is JSON (sorted keys) on stdout or in ``--out``; human
summaries go to stderr.  Exit status: 0 success, 1 verification failure,
2 usage error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import cost, imgproc
from .cells import CELLS, cell_constants, verify_cell
from .core import ImplyError, dump_trace, run_program
from .multiplier import CLASSIC, PROPOSED, SIGNED, UNSIGNED, build_array, verify_multiplier
from .ppu import all_ppus, lookup, verify_ppu

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _width(text: str) -> int:
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if n < 4:
        raise argparse.ArgumentTypeError(f"operand width must be >= 4, got {n}")
    return n


def _positive(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if value <= 0:
        raise argparse.ArgumentTypeError("must be positive")
    return value


def _emit(payload, out: str | None):
    text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _say(*lines):
    for line in lines:
        print(line, file=sys.stderr)


# -- verify -------------------------------------------------------------------------

def cmd_verify(args) -> int:
    results = []
    scope = args.scope
    if scope in ("cells", "all"):
        for name, cell in CELLS.items():
            if cell.executable:
                v = verify_cell(cell.program(), cell.reference_fn)
                results.append({"kind": "cell", "name": name, "checked": v.vectors, "steps": v.steps,
                                "passed": v.passed})
                _say(str(v))
    if scope in ("ppus", "all"):
        for desc in all_ppus():
            v = verify_ppu(desc)
            results.append({"kind": "ppu", "name": desc.name, "checked": v.vectors, "steps": v.steps,
                            "passed": v.passed})
            _say(str(v))
    if scope in ("multipliers", "all"):
        for n in args.n or [4, 8]:
            for signedness in (UNSIGNED, SIGNED):
                for variant in (PROPOSED, CLASSIC):
                    v = verify_multiplier(build_array(n, signedness, variant))
                    results.append({"kind": "multiplier", "name": v.name, "checked": v.pairs, "steps": v.steps,
                                    "passed": v.passed})
                    _say(str(v))
    failed = sum(not r["passed"] for r in results)
    _say(f"{len(results) - failed} passed, {failed} failed")
    _emit({"scope": scope, "results": results, "passed": failed == 0}, args.out)
    return EXIT_OK if failed == 0 else EXIT_FAIL


# -- cost -------------------------------------------------------------------------

def cmd_cost(args) -> int:
    tables = []
    if args.all or args.unsigned_table:
        tables.append(cost.comparison_table(False, args.n))
    if args.all or args.signed_table:
        tables.append(cost.comparison_table(True, args.n))
    if tables:
        if args.pulse_width:
            for t in tables:
                for row in t["rows"]:
                    row["latency_s"] = row["steps"] * args.pulse_width
        for t in tables:
            _say(cost.format_table(t), "")
        _emit({"n": args.n, "tables": tables}, args.out)
        return EXIT_OK
    if not args.family:
        raise UsageError("name a family, or pass --all / --unsigned-table / --signed-table")
    report = cost.formula_cost(args.family, args.n, printed=args.printed)
    payload = report.as_dict(args.pulse_width)
    if args.format == "table":
        _say(f"{report.family} n={report.n}: {report.steps} steps, {report.memristors} memristors "
             f"({report.input_memristors} input + {report.work_memristors} work), {report.energy_nJ:.3f} nJ")
        for e in report.breakdown:
            _say(f"  {e.block:<24}{e.count:>6} x {e.steps_per_block:>5} steps  "
                 f"{float(e.energy_nJ_per_block):>8.3f} nJ")
        for flag in report.flags:
            _say(f"  flag: {flag}")
    _emit(payload, args.out)
    return EXIT_OK


# -- trace ------------------------------------------------------------------------

def _named_program(name: str):
    key = name.lower()
    if key.startswith("ppu_"):
        return lookup(key).program
    cell = cell_constants(key)
    return cell.program()


def cmd_trace(args) -> int:
    program = _named_program(args.name)
    names = list(program.free_inputs)
    bits = args.bits
    if len(bits) != len(names) or set(bits) - {"0", "1"}:
        raise UsageError(f"{program.name} takes {len(names)} input bits ({' '.join(names)}), got {bits!r}")
    result = run_program(program, {n: int(b) for n, b in zip(names, bits)}, trace=True)
    text = dump_trace(result.trace)
    outputs = " ".join(f"{k}={v}" for k, v in result.outputs.items())
    text += f"# outputs: {outputs}\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    _say(f"{program.name}: {result.steps} steps, {outputs}")
    return EXIT_OK


# -- convolve / report ---------------------------------------------------------------

def cmd_convolve(args) -> int:
    kernel = imgproc.kernel_by_name(args.kernel)
    family = imgproc.resolve_family(kernel, args.family)
    try:
        image = imgproc.load_pgm(Path(args.input).read_bytes())
    except OSError as exc:
        raise OSError(f"cannot read {args.input}: {exc.strerror or exc}") from exc
    variant = CLASSIC if family.endswith("_classic") else PROPOSED
    stats = imgproc.FaithfulStats()
    result = imgproc.convolve(image, kernel, args.mode, variant=variant, sample=args.sample,
                              normalize=args.normalize, stats=stats)
    status = EXIT_OK
    if args.mode == imgproc.FAITHFUL:
        reference = imgproc.convolve(image, kernel, imgproc.FUNCTIONAL, normalize=args.normalize)
        if result != reference:
            diff = int((result.pixels != reference.pixels).sum())
            _say(f"FAIL faithful output differs from functional output in {diff} pixels")
            status = EXIT_FAIL
        else:
            _say(f"PASS faithful output matches functional output "
                 f"({stats.multiplications} microcode multiplications, {stats.instructions} instructions)")
    try:
        Path(args.output).write_bytes(imgproc.save_pgm(result))
    except OSError as exc:
        raise OSError(f"cannot write {args.output}: {exc.strerror or exc}") from exc
    report = imgproc.application_report(kernel, image.width, image.height, family)
    payload = report.as_dict(args.pulse_width)
    if args.mode == imgproc.FAITHFUL:
        payload["faithful"] = {"multiplications": stats.multiplications, "instructions": stats.instructions,
                               "sampled_pixels": stats.sampled_pixels, "matches_functional": status == EXIT_OK}
    _emit(payload, args.report)
    return status


def cmd_report(args) -> int:
    kernel = imgproc.kernel_by_name(args.kernel)
    families = args.family or (cost.SIGNED_TABLE if kernel.signed else cost.UNSIGNED_TABLE)
    reports = []
    for fam in families:
        rep = imgproc.application_report(kernel, args.size, args.size, fam)
        reports.append(rep.as_dict(args.pulse_width))
        _say(f"{rep.family:<26}{rep.steps:>14} steps{rep.memristors:>10} memristors"
             f"{rep.energy_J * 1e3:>10.3f} mJ" + "".join(f"\n    flag: {f}" for f in rep.flags))
    _emit(reports[0] if len(reports) == 1 else {"reports": reports}, args.out)
    return EXIT_OK


# -- parser -------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="implymult", description="Serial IMPLY multiplier toolkit.")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run the exhaustive correctness suites")
    v.add_argument("scope", choices=["cells", "ppus", "multipliers", "all"])
    v.add_argument("--n", type=_width, action="append", help="multiplier width (repeatable; default 4 and 8)")
    v.add_argument("--out", help="write the JSON summary here instead of stdout")
    v.set_defaults(func=cmd_verify)

    c = sub.add_parser("cost", help="evaluate closed-form costs")
    c.add_argument("family", nargs="?", choices=sorted(cost.FAMILIES))
    c.add_argument("--n", type=_width, default=8)
    c.add_argument("--format", choices=["json", "table"], default="json")
    c.add_argument("--all", action="store_true", help="emit the unsigned and signed comparison tables")
    c.add_argument("--unsigned-table", action="store_true")
    c.add_argument("--signed-table", action="store_true")
    c.add_argument("--printed", action="store_true", help="use published energy polynomials, typos included")
    c.add_argument("--pulse-width", type=_positive, help="seconds per step; adds a latency figure")
    c.add_argument("--out")
    c.set_defaults(func=cmd_cost)

    t = sub.add_parser("trace", help="print the per-step trace of a cell or PPU")
    t.add_argument("name", help="cell (and, nand, not, copy, half_adder, full_adder) or PPU (ppu_u1, ppu_s8_classic)")
    t.add_argument("bits", help="input bits in declaration order, e.g. 1011")
    t.add_argument("--out")
    t.set_defaults(func=cmd_trace)

    k = sub.add_parser("convolve", help="convolve a PGM image")
    k.add_argument("input")
    k.add_argument("output")
    k.add_argument("--kernel", choices=sorted(imgproc.KERNELS), default="gaussian")
    k.add_argument("--mode", choices=[imgproc.FUNCTIONAL, imgproc.FAITHFUL], default=imgproc.FUNCTIONAL)
    k.add_argument("--family", default="proposed", help="multiplier family for the cost report")
    k.add_argument("--sample", type=int, default=1, help="faithful mode: microcode for every k-th pixel")
    k.add_argument("--normalize", choices=imgproc.NORMALIZATIONS, default="clamp")
    k.add_argument("--report", help="write the JSON report here instead of stdout")
    k.add_argument("--pulse-width", type=_positive)
    k.set_defaults(func=cmd_convolve)

    r = sub.add_parser("report", help="multiplier cost of a kernel on a square image")
    r.add_argument("--kernel", choices=sorted(imgproc.KERNELS), default="gaussian")
    r.add_argument("--size", type=int, default=256)
    r.add_argument("--family", action="append", help="repeatable; default: every family of matching signedness")
    r.add_argument("--pulse-width", type=_positive)
    r.add_argument("--out")
    r.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (UsageError, ImplyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, imgproc.ImageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
