import json

import pytest

from implymult.cli import main
from implymult.imgproc import load_pgm, random_image, save_pgm


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_trace_ppu_u1(capsys):
    code, out, _ = run(capsys, "trace", "ppu_u1", "1011")
    lines = out.splitlines()
    assert code == 0
    steps = [l for l in lines if not l.startswith("#")]
    assert len(steps) == 18
    assert lines[-1] == "# outputs: Sum=1 Cout=0"


def test_trace_and(capsys):
    code, out, _ = run(capsys, "trace", "and", "10")
    lines = out.splitlines()
    assert code == 0 and len(lines) == 6 and lines[-1] == "# outputs: out=0"


def test_trace_ppu_s8(capsys):
    _, out, _ = run(capsys, "trace", "ppu_s8", "00")
    lines = out.splitlines()
    assert len(lines) == 10 and lines[-1] == "# outputs: Sum=1 Cout=0"


@pytest.mark.parametrize("argv", [("trace", "and", "1"), ("trace", "and", "12"), ("trace", "nor", "10")])
def test_trace_usage_errors(capsys, argv):
    assert run(capsys, *argv)[0] == 2


def test_verify_ppus(capsys):
    code, out, err = run(capsys, "verify", "ppus")
    doc = json.loads(out)
    assert code == 0 and doc["passed"] and len(doc["results"]) == 18
    assert "18 passed, 0 failed" in err


def test_verify_multipliers(capsys):
    code, out, _ = run(capsys, "verify", "multipliers", "--n", "8")
    doc = json.loads(out)
    assert code == 0 and [r["checked"] for r in doc["results"]] == [65536] * 4


def test_verify_rejects_small_width(capsys):
    assert run(capsys, "verify", "multipliers", "--n", "3")[0] == 2


def test_verify_bad_scope(capsys):
    assert run(capsys, "verify", "everything")[0] == 2


@pytest.mark.parametrize("family,key,value", [
    ("array_unsigned_proposed", "steps", 1346),
    ("baugh_wooley_dadda", "steps", 1560),
    ("dadda", "memristors", 66),
])
def test_cost_examples(capsys, family, key, value):
    code, out, _ = run(capsys, "cost", family, "--n", "8")
    doc = json.loads(out)
    got = doc[key]["total"] if key == "memristors" else doc[key]
    assert code == 0 and got == value


def test_cost_json_is_sorted_and_stable(capsys):
    _, a, _ = run(capsys, "cost", "--all", "--n", "8")
    _, b, _ = run(capsys, "cost", "--all", "--n", "8")
    assert a == b
    assert a == json.dumps(json.loads(a), sort_keys=True, indent=2) + "\n"


def test_cost_pulse_width(capsys):
    _, out, _ = run(capsys, "cost", "array_signed_proposed", "--pulse-width", "30e-6")
    assert json.loads(out)["latency_s"] == pytest.approx(1345 * 30e-6)


def test_cost_needs_family(capsys):
    assert run(capsys, "cost")[0] == 2


def test_convolve_round_trip(tmp_path, capsys):
    src = tmp_path / "in.pgm"
    src.write_bytes(save_pgm(random_image(16, 16, seed=5)))
    dst, rep = tmp_path / "out.pgm", tmp_path / "r.json"
    code, _, err = run(capsys, "convolve", str(src), str(dst), "--kernel", "edge", "--mode", "faithful",
                       "--report", str(rep))
    assert code == 0 and "PASS" in err
    report = json.loads(rep.read_text())
    assert report["faithful"]["matches_functional"]
    assert report["family"] == "array_signed_proposed"
    assert report["ops"][0]["count"] == 5 * 14 * 14
    assert load_pgm(dst.read_bytes()).width == 16


def test_convolve_too_small(tmp_path, capsys):
    src = tmp_path / "tiny.pgm"
    src.write_bytes(b"P5\n2 2\n255\n\x00\x00\x00\x00")
    assert run(capsys, "convolve", str(src), str(tmp_path / "o.pgm"))[0] == 2


def test_convolve_io_errors(tmp_path, capsys):
    assert run(capsys, "convolve", str(tmp_path / "missing.pgm"), str(tmp_path / "o.pgm"))[0] == 3
    bad = tmp_path / "bad.pgm"
    bad.write_bytes(b"P5\n4 4\n255\n\x00")
    code, _, err = run(capsys, "convolve", str(bad), str(tmp_path / "o.pgm"))
    assert code == 3 and "byte" in err


def test_report_table_row(capsys):
    code, out, _ = run(capsys, "report", "--kernel", "gaussian", "--size", "256", "--family", "proposed")
    doc = json.loads(out)
    assert code == 0 and doc["totals"]["steps"] == 781546824 and doc["totals"]["memristors"] == 9290324


def test_report_all_families(capsys):
    _, out, err = run(capsys, "report", "--kernel", "edge")
    doc = json.loads(out)
    assert len(doc["reports"]) == 5 and "flag" in err
