import csv
import io
import json
import subprocess
import sys
import xml.etree.ElementTree as ET
from fractions import Fraction

import pytest

from trilines import cli


def run(capsys, *args):
    code = cli.main(list(args))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_formula_headline(capsys):
    code, out, _ = run(capsys, "formula", "--p", "1/3", "--q", "1/3")
    d = json.loads(out)
    assert code == 0 and d["schema_version"] == cli.SCHEMA_VERSION
    assert d["pmf"] == {"3": "2/9", "4": "7/12", "5": "1/6", "6": "1/36"}
    assert (d["beta"], d["para"], d["trap"], d["mean"], d["variance"]) == ("8/81", "1/4", "1/3", "4", "1/2")


def test_formula_rational_sums_to_one(capsys):
    _, out, _ = run(capsys, "formula", "--p", "1/4", "--q", "1/4")
    assert sum(Fraction(v) for v in json.loads(out)["pmf"].values()) == 1


def test_formula_rejects_bad_weights(capsys):
    code, _, err = run(capsys, "formula", "--p", "0.5", "--q", "0.6")
    assert code == 2 and "p + q < 1" in err
    code, _, _ = run(capsys, "formula", "--p", "1/0")
    assert code == 2


def test_formula_csv(capsys):
    _, out, _ = run(capsys, "formula", "--format", "csv")
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0][:3] == ["p", "q", "beta"] and rows[1][3] == "2/9"


def test_unsupported_format(capsys):
    code, _, err = run(capsys, "formula", "--format", "svg")
    assert code == 2 and "json|csv" in err


def test_argparse_usage_error(capsys):
    with pytest.raises(SystemExit) as info:
        cli.main(["formula", "--bogus"])
    assert info.value.code == 2


def test_config_precedence(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"p": "1/5", "q": "1/5"}))
    _, out, _ = run(capsys, "formula", "--config", str(cfg))
    assert json.loads(out)["p"] == "1/5"
    _, out, _ = run(capsys, "formula", "--config", str(cfg), "--p", "1/4")
    d = json.loads(out)
    assert d["p"] == "1/4" and d["q"] == "1/5"
    cfg.write_text(json.dumps({"nope": 1}))
    assert run(capsys, "formula", "--config", str(cfg))[0] == 2


def test_simulate_default_is_reproducible(capsys):
    code, a, _ = run(capsys, "simulate")
    _, b, _ = run(capsys, "simulate")
    assert code == 0 and a == b
    d = json.loads(a)
    assert all(abs(z) < 3 for z in d["z_scores"].values())
    assert d["analytic"]["3"] == "2/9" and d["boundary_warning"] is False
    assert "wall_time_ms" not in d
    assert d["total"] >= 100_000


def test_simulate_tiny_window_flags_boundary(capsys):
    code, out, err = run(capsys, "simulate", "--window-R", "2", "--replicates", "300", "--min-cells", "0")
    d = json.loads(out)
    assert code == 0 and d["boundary_warning"] and d["discarded_ratio"] > cli.DISCARD_WARN_RATIO
    assert "warning" in err


def test_simulate_empty_sample_exit_code(capsys):
    code, _, err = run(capsys, "simulate", "--window-R", "0.5", "--inner-frac", "0.1", "--replicates", "1", "--min-cells", "0")
    assert code == 4 and "--window-R" in err
    assert "fewer than one cell expected" in err


def test_simulate_csv(capsys):
    _, out, _ = run(capsys, "simulate", "--format", "csv", "--replicates", "3", "--min-cells", "0", "--timing")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [r["n"] for r in rows] == ["3", "4", "5", "6"]


def test_integrate(capsys):
    code, out, _ = run(capsys, "integrate", "--p", "1/3", "--q", "1/3")
    d = json.loads(out)
    assert code == 0 and d["max_abs_deviation"] < 1e-9
    labels = {c["label"]: c for c in d["cases"]}
    assert labels["T1"]["probability"] == pytest.approx(labels["T2"]["probability"], abs=1e-12)
    assert {c["subtype"] for c in d["cases"] if c["n"] == 4} == {"para", "trap"}
    assert d["subtype_sums"]["para"] == pytest.approx(0.25, abs=1e-9)
    for n, v in zip("3456", (2 / 9, 7 / 12, 1 / 6, 1 / 36)):
        assert d["sums"][n] == pytest.approx(v, abs=1e-9)


def test_integrate_quadrature_failure_exit_code(capsys, monkeypatch):
    from trilines.cells import QuadratureError

    def boom(case, w):
        raise QuadratureError(case.label, 0.1, 1e-3)

    monkeypatch.setattr(cli, "integrate_case", boom)
    code, _, err = run(capsys, "integrate")
    assert code == 3 and "quadrature" in err


def test_scan_csv(capsys):
    code, out, _ = run(capsys, "scan", "--step", "1/20")
    rows = list(csv.reader(io.StringIO(out)))
    assert code == 0
    assert rows[0] == ["p", "q", "p3", "p4", "p5", "p6", "para", "trap"]
    assert len(rows) - 1 == 19 * 18 // 2


@pytest.mark.parametrize("step", ["0", "1/3", "-1/10", "abc"])
def test_scan_rejects_bad_step(capsys, step):
    assert run(capsys, "scan", f"--step={step}")[0] == 2


def test_scan_heatmaps(tmp_path, capsys):
    out = tmp_path / "h.svg"
    code, _, _ = run(capsys, "scan", "--step", "1/30", "--format", "svg",
                     "--component", "3", "--component", "4", "--out", str(out))
    assert code == 0
    for comp, best in (("3", max), ("4", min)):
        root = ET.parse(tmp_path / f"h_{comp}.svg").getroot()
        cells = [r.find("{http://www.w3.org/2000/svg}title").text
                 for r in root.iter("{http://www.w3.org/2000/svg}rect")
                 if r.find("{http://www.w3.org/2000/svg}title") is not None]
        vals = {c: float(c.split("value=")[1]) for c in cells}
        top = best(vals, key=vals.get)
        assert top.startswith("p=0.3333 q=0.3333")


def test_scan_svg_stdout_single_component(capsys):
    code, out, _ = run(capsys, "scan", "--step", "1/10", "--format", "svg", "--component", "trap")
    assert code == 0 and ET.fromstring(out.encode()).tag.endswith("svg")


def test_render_and_sample_cell(tmp_path, capsys):
    out = tmp_path / "t.svg"
    assert run(capsys, "render-tessellation", "--window-R", "10", "--out", str(out))[0] == 0
    ET.parse(out)
    _, a, _ = run(capsys, "render-tessellation", "--window-R", "6", "--format", "csv")
    _, b, _ = run(capsys, "render-tessellation", "--window-R", "6", "--format", "csv")
    assert a == b and a.startswith("face_id,")
    code, out, _ = run(capsys, "sample-cell", "--k", "3", "--seed", "5")
    d = json.loads(out)
    assert code == 0 and len(d["cells"]) == 3
    assert all(len(c["vertices"]) == c["n"] for c in d["cells"])
    _, svg_out, _ = run(capsys, "sample-cell", "--k", "3", "--format", "svg")
    ET.fromstring(svg_out.encode())
    assert run(capsys, "sample-cell", "--k", "0")[0] == 2


def test_help_lists_commands():
    res = subprocess.run([sys.executable, "-m", "trilines", "--help"], capture_output=True, text=True)
    assert res.returncode == 0
    for cmd in cli.COMMANDS:
        assert cmd in res.stdout
    res = subprocess.run([sys.executable, "-m", "trilines", "simulate", "--help"],
                         capture_output=True, text=True)
    for flag in ("--window-R", "--inner-frac", "--replicates", "--min-cells", "--seed", "--out", "--format"):
        assert flag in res.stdout
