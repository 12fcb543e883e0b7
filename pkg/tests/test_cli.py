import json

import numpy as np
import pytest

from brinkmann import classify
from brinkmann.cli import format_json, main
from brinkmann.metricfile import spec_to_text
from brinkmann.spaces import fixture


@pytest.fixture()
def cw42_file(tmp_path):
    path = tmp_path / "cw42.metric"
    path.write_text(spec_to_text(fixture("cw4_r2")))
    return str(path)


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_check_verdict_and_exit_code(cw42_file, capsys):
    code, out, _ = run(capsys, "check", cw42_file)
    assert code == 0
    report = json.loads(out)
    assert report["schema_version"] == 1
    assert report["verdict"] == "proper_second_symmetric"
    assert set(report["residuals"]) == {"R", "nabla_R", "nabla2_R"}
    assert report["structural_checks"]["scalar_constant"] is True
    assert report["A_tilde"]["d0_parallel"] is True
    assert report["eisenhart"]["partition"] == [[2, 3]]


def test_check_flat_exit_zero(tmp_path, capsys):
    path = tmp_path / "flat.metric"
    path.write_text(spec_to_text(fixture("flat")))
    code, out, _ = run(capsys, "check", str(path))
    assert code == 0
    assert json.loads(out)["verdict"] == "flat"


def test_check_undetermined_exit_two(tmp_path, capsys):
    path = tmp_path / "r3.metric"
    path.write_text(spec_to_text(fixture("cw4_r3")))
    code, out, _ = run(capsys, "check", str(path))
    assert code == 2
    report = json.loads(out)
    assert report["verdict"] == "undetermined"
    assert report["second_block_norms"]["00_a"] > 1e-3


def test_check_parse_error_exit_one(tmp_path, capsys):
    path = tmp_path / "bad.metric"
    path.write_text('[metric]\ndimension = 4\nH = "x9 + u"\n')
    code, _, err = run(capsys, "check", str(path))
    assert code == 1
    assert f"{path}:3:" in err


def test_reports_byte_deterministic(cw42_file, capsys):
    _, out1, _ = run(capsys, "check", cw42_file)
    _, out2, _ = run(capsys, "check", cw42_file)
    assert out1 == out2


def test_check_csv_schema(cw42_file, capsys):
    code, out, _ = run(capsys, "check", cw42_file, "--schema", "csv")
    assert code == 0
    assert out.splitlines()[0] == "key,value"
    assert any(line.startswith("verdict,") for line in out.splitlines())


def test_generate_cw_expansion(capsys):
    code, out, _ = run(capsys, "generate", "cw", "-d", "4", "-r", "2",
                       "--P", "1=1 0; 0 0")
    assert code == 0
    assert 'H = "u * x2^2"' in out


def test_generate_cw_d2(capsys):
    code, out, _ = run(capsys, "generate", "cw", "-d", "2", "-r", "1")
    assert code == 0
    assert "dimension = 2" in out
    assert "H =" not in out      # H identically zero is omitted (defaults to 0)


def test_generate_product(tmp_path, capsys, cw42_file):
    code, out, _ = run(capsys, "generate", "product", "--base", cw42_file,
                       "--block", "sphere", "--radius", "1")
    assert code == 0
    assert 'g55 = "sin(x4)^2"' in out


def test_generate_then_check_roundtrip(tmp_path, capsys):
    path = tmp_path / "gen.metric"
    code, out, _ = run(capsys, "generate", "cw", "-d", "4", "-r", "2",
                       "--P", "1=1 0; 0 0", "--P", "0=0 0; 0 1",
                       "--out", str(path))
    assert code == 0
    code, out, _ = run(capsys, "check", str(path))
    assert code == 0
    assert json.loads(out)["verdict"] == "proper_second_symmetric"


def test_oracle_diff_pass(cw42_file, capsys):
    code, out, _ = run(capsys, "oracle-diff", cw42_file, "--samples", "3")
    assert code == 0
    report = json.loads(out)
    assert report["pass"] is True
    assert report["overall"] < 1e-8
    assert "00_a" in report["max_relative_deviation"]


def test_oracle_diff_flags_corrupted_engine(cw42_file, capsys, monkeypatch):
    # negative control: a deliberately corrupted engine block must be caught
    original = classify._engine_blocks

    def corrupted(cc, depth):
        out = original(cc, depth)
        out["A"] = np.asarray(out["A"]) + 1e-4
        return out

    monkeypatch.setattr(classify, "_engine_blocks", corrupted)
    code, out, _ = run(capsys, "oracle-diff", cw42_file, "--samples", "3")
    assert code == 1
    assert json.loads(out)["pass"] is False


def test_canonicalize_happy_path(tmp_path, capsys):
    path = tmp_path / "scr.metric"
    path.write_text(spec_to_text(fixture("scrambled_cw4")))
    code, out, _ = run(capsys, "canonicalize", str(path), "--steps", "400")
    assert code == 0
    report = json.loads(out)
    assert report["proper"] is True
    assert report["orthogonality_error"] < 1e-8
    assert report["affine_residual"] < 1e-8
    assert len(report["R_samples"]) >= 16
    assert report["essential_parameters"] == 2 - 1 + 2 * 3 // 2


def test_canonicalize_precondition_exit_two(tmp_path, capsys):
    path = tmp_path / "r1.metric"
    path.write_text(spec_to_text(fixture("cw4_r1")))
    code, out, _ = run(capsys, "canonicalize", str(path))
    assert code == 2
    report = json.loads(out)
    assert report["verdict"] == "locally_symmetric"
    assert "precondition" in report["error"]


def test_transport_csv_outputs(cw42_file, capsys):
    code, out, _ = run(capsys, "transport", cw42_file, "--experiment", "nullsec",
                       "--span", "2", "--steps", "50", "--point", "0", "0", "0")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "tau,K"
    assert len(lines) == 53  # header + 51 samples + trailing stat
    assert lines[-1].startswith("# max_second_difference,")

    code, out, _ = run(capsys, "transport", cw42_file, "--experiment", "geodesic",
                       "--span", "1", "--steps", "20", "--point", "0", "0", "0")
    assert code == 0
    header = out.splitlines()[0].split(",")
    assert header[:5] == ["tau", "u", "v", "x2", "x3"]
    assert header[-2:] == ["energy", "k_pairing"]

    code, out, _ = run(capsys, "transport", cw42_file, "--experiment", "d0",
                       "--span", "1", "--steps", "10")
    assert code == 0
    assert out.splitlines()[0].startswith("u,X0_2")


def test_format_json_fixed_floats():
    text = format_json({"a": 1.0 / 3.0, "b": [1, 2.5], "c": None, "d": True})
    assert "0.33333333333333331" in text
    parsed = json.loads(text)
    assert parsed["b"] == [1, 2.5]
    assert parsed["c"] is None and parsed["d"] is True


def test_missing_file_is_an_error(capsys):
    code, _, err = run(capsys, "check", "/nonexistent/x.metric")
    assert code == 1
    assert "error:" in err
