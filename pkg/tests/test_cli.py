import json
import subprocess
import sys

from confholo import cli, curvature
from confholo.chartio import format_chart, parse_chart

PP = "u=1 v=1 x=1 y=1"


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_tensor_text_and_zero_report(capsys):
    code, out, _ = run(capsys, "tensor", "--chart", "ppwave_quartic", "--which", "bach")
    assert code == 0 and out.startswith("bach[1,1] = ")
    code, out, _ = run(capsys, "tensor", "--chart", "flat_1_3", "--which", "weyl")
    assert code == 0 and out == "weyl: all components zero\n"


def test_scalar_at_point(capsys):
    code, out, _ = run(capsys, "tensor", "--chart", "s4", "--which", "scalar", "--point", "x1=0 x2=0 x3=0 x4=0")
    assert code == 0 and out.strip().endswith("= 12")


def test_holonomy_report(capsys):
    code, out, _ = run(capsys, "holonomy", "--chart", "ppwave_poly", "--point", PP)
    assert code == 0
    assert "dim 8/15" in out and "r_E 1" in out and "E lightlike yes" in out
    assert "not observed generic up to order 4" in out


def test_holonomy_flat_is_trivial(capsys):
    code, out, _ = run(capsys, "holonomy", "--chart", "flat_1_3", "--max-order", "2")
    assert code == 0 and "dim 0/15" in out and "r_E 0" in out


def test_jsonl_mirrors_text(capsys):
    _, text, _ = run(capsys, "holonomy", "--chart", "ppwave_poly", "--point", PP, "--point", "u=2 v=1 x=1 y=1")
    _, js, _ = run(capsys, "--format", "jsonl", "holonomy", "--chart", "ppwave_poly", "--point", PP,
                   "--point", "u=2 v=1 x=1 y=1")
    records = [json.loads(line) for line in js.splitlines()]
    assert len(records) == len(text.splitlines()) == 2
    assert records[0]["dim"] == 8 and records[0]["r_E"] == 1 and records[0]["E_basis"] == [["0", "1", "0", "0"]]


def test_output_is_deterministic(capsys):
    args = ("ambient", "--chart", "ppwave_quartic")
    _, first, _ = run(capsys, *args)
    _, second, _ = run(capsys, *args)
    assert first == second
    assert "obstruction[1,1] = 6*u + 2" in first
    assert "euler identity holds" in first


def test_rescale_round_trip(capsys, tmp_path):
    code, out, _ = run(capsys, "rescale", "--chart", "flat_0_3", "--factor", "1 + x1^2")
    assert code == 0
    chart = parse_chart(out)
    path = tmp_path / "r.chart"
    path.write_text(format_chart(chart))
    code, out, _ = run(capsys, "tensor", "--chart", str(path), "--which", "weyl")
    assert code == 0 and "all components zero" in out


def test_verify_passes_on_conformally_flat_and_einstein(capsys):
    for name, pt in (("s4", "x1=1 x2=1/2 x3=1/3 x4=1"), ("s2xs2", "x1=1 x2=1 y1=1 y2=1")):
        code, out, _ = run(capsys, "verify", "--chart", name, "--point", pt)
        assert code == 0, out
        assert "0 failed" in out


def test_verify_reports_rho_row_failure_on_ppwave(capsys):
    code, out, _ = run(capsys, "verify", "--chart", "ppwave_quartic", "--point", PP)
    assert code == 1
    assert "PASS obstruction_in_holonomy" in out
    assert "FAIL ambient_identification_rho_row" in out


def test_verify_with_measured_constant_in_dim6(capsys):
    pt = "u=1 v=1 x1=1 x2=1 x3=1 x4=1"
    code, out, _ = run(capsys, "verify", "--chart", "ppwave6", "--point", pt, "--rho-factor=-1/2")
    assert code == 0, out


def test_corrupted_bach_fails_verify(capsys, monkeypatch):
    original = curvature.bach
    monkeypatch.setattr(curvature, "bach", lambda chart: original(chart) + curvature.metric_tensor(chart))
    code, out, _ = run(capsys, "verify", "--chart", "s4", "--point", "x1=1 x2=1 x3=1 x4=1")
    assert code == 1
    assert "FAIL obstruction_in_holonomy" in out


def test_exit_codes(capsys, tmp_path):
    assert run(capsys, "verify", "--chart", "flat_0_3")[0] == 3
    assert run(capsys, "tensor", "--chart", "nosuch", "--which", "ricci")[0] == 2
    assert run(capsys, "holonomy", "--chart", "s4", "--point", "x1=1")[0] == 2
    assert run(capsys, "rescale", "--chart", "flat_0_3", "--factor", "1 +")[0] == 2
    assert run(capsys, "rescale", "--chart", "flat_0_3", "--factor", "0")[0] == 3
    bad = tmp_path / "bad.chart"
    bad.write_text("chart b\ndim 3\n")
    code, _, err = run(capsys, "tensor", "--chart", str(bad), "--which", "ricci")
    assert code == 2 and "input error" in err


def test_point_file(capsys, tmp_path):
    f = tmp_path / "pts.txt"
    f.write_text("# two points\nu=1 v=1 x=1 y=1\nu=2 v=0 x=1 y=1\n")
    code, out, _ = run(capsys, "holonomy", "--chart", "ppwave_vacuum", "--point", str(f))
    assert code == 0 and len(out.splitlines()) == 2


def test_classify_e(capsys):
    code, out, _ = run(capsys, "classify-e", "--bryant", "x1*x3^2", "--point", "x1=1 x2=2 x3=1 y1=1 y2=1 y3=1")
    assert code == 0 and "generic yes" in out and "span dims [6]" in out
    code, out, _ = run(capsys, "classify-e", "--chart", "ppwave_poly", "--field", "0,1,0,0", "--point", PP)
    assert code == 0 and "r_E by point [1]" in out and "integrable yes" in out
    assert run(capsys, "classify-e", "--chart", "ppwave_poly", "--field", "0,0,1,0", "--point", PP)[0] == 3
    assert run(capsys, "classify-e", "--chart", "ppwave_poly", "--field", "0,1", "--point", PP)[0] == 2
    assert run(capsys, "classify-e")[0] == 2


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "confholo", "tensor", "--chart", "s4", "--which", "scalar"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and proc.stdout.strip() == "scalar = 12"
