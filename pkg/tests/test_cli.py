import csv

import ujson
import pytest

from faltings_height.bounds.circles import BoundInconsistency
from faltings_height.cli import exit_code, main, parse_complex
from faltings_height.distortion.certificates import CertificateFailure, CertificateReport
from faltings_height.general.errors import DomainError, NonConvergence
from faltings_height.heights.polynomials import RepeatedRoots


def _json_out(capsys):
    return ujson.loads(capsys.readouterr().out)


def _run_dir(out, command):
    dirs = list(out.glob(f"{command}-*"))
    assert len(dirs) == 1
    return dirs[0]


def test_parse_complex():
    assert parse_complex("1+2i") == 1 + 2j
    assert parse_complex("0.5-0.25i") == 0.5 - 0.25j
    assert parse_complex(3) == 3 + 0j
    with pytest.raises(DomainError):
        parse_complex("one")


def test_exit_codes():
    report = CertificateReport("x", 1, 1.0, None, False)
    assert exit_code(CertificateFailure(report)) == 4
    assert exit_code(BoundInconsistency("x")) == 4
    assert exit_code(NonConvergence("x")) == 3
    assert exit_code(RepeatedRoots("x")) == 2
    assert exit_code(KeyError("x")) == 1


def test_eval_ghyp(capsys):
    assert main(["eval", "ghyp", "1+0i", "--json"]) == 0
    res = _json_out(capsys)
    assert res["value"] == pytest.approx(-8.9835381, abs=1e-6)
    assert res["point"] == [1.0, 0.0]


def test_eval_j_at_rho(capsys):
    assert main(["eval", "j", "0.5+0.866025403784i", "--json"]) == 0
    re, im = _json_out(capsys)["value"]
    assert abs(complex(re, im)) < 1e-6


def test_eval_e2star_at_i(capsys):
    assert main(["eval", "E2star", "0+1i", "--json"]) == 0
    re, im = _json_out(capsys)["value"]
    assert abs(complex(re, im)) < 1e-12


@pytest.mark.parametrize(
    "argv",
    [
        ["eval", "j", "0-1i"],
        ["eval", "E8", "0+1i"],
        ["height", "1,2,1"],
        ["height", "cyclotomic:0"],
    ],
)
def test_invalid_input_exits_with_two(argv):
    assert main(argv) == 2


def test_height_cyclotomic(capsys):
    assert main(["height", "cyclotomic:6", "--json"]) == 0
    res = _json_out(capsys)
    assert res["height"] == pytest.approx(-0.74862517, abs=1e-7)
    assert res["finite"] == 0


def test_height_writes_reproducible_reports(tmp_path, capsys):
    for sub in ("a", "b"):
        assert main(["height", "1,-1,1,-1,1", "--out", str(tmp_path / sub)]) == 0
    capsys.readouterr()

    first = _run_dir(tmp_path / "a", "height")
    second = _run_dir(tmp_path / "b", "height")
    assert first.name == second.name
    assert (first / "height.json").read_bytes() == (second / "height.json").read_bytes()

    manifest = ujson.loads((first / "manifest.json").read_text())
    assert manifest["command"] == "height"
    assert manifest["exit_code"] == 0
    assert manifest["outputs"] == ["height.csv", "height.json"]
    assert "height" in manifest["timings"]
    assert (first / "run.log.jsonl").exists()


def test_upper_at_best_center(tmp_path, capsys):
    assert main(["upper", "--center", "0.205", "--json", "--out", str(tmp_path)]) == 0
    res = _json_out(capsys)
    assert res["reports"][0]["value"] <= -0.7486227509 + 1e-9
    assert res["zhang_bound"] == pytest.approx(-1.2425268622, abs=1e-9)
    run_dir = _run_dir(tmp_path, "upper")
    assert (run_dir / "upper.json").exists()
    assert (run_dir / "upper.csv").exists()


def test_verify_constants_suite(capsys):
    assert main(["verify", "constants"]) == 0
    out = capsys.readouterr().out
    assert "PASS constants" in out
    assert "PASS f_prime_0" in out


def test_verify_single_certificate(capsys):
    assert main(["verify", "special_values", "--json"]) == 0
    reports = _json_out(capsys)
    assert [r["name"] for r in reports] == ["special_values"]


def test_failed_certificate_exits_with_four(tmp_path, capsys):
    assert main(["verify", "constants", "--tol=-1", "--out", str(tmp_path)]) == 4
    manifest = ujson.loads((_run_dir(tmp_path, "verify") / "manifest.json").read_text())
    assert manifest["exit_code"] == 4


def test_scan_below_the_minimum(capsys):
    assert main(["scan", "--max_order", "3", "--threshold=-0.749", "--json"]) == 0
    rows = _json_out(capsys)
    assert [r["label"] for r in rows] == ["cyclotomic:1", "cyclotomic:3", "cyclotomic:2"]


def test_lower_replay_of_a_config(tmp_path, capsys):
    config = tmp_path / "config.json"
    config.write_text(
        ujson.dumps(
            {
                "sections": {"grid": 120, "refine_top_k": 4},
                "polys": [[0, 1]],
                "replay_exponents": [0.0],
            }
        )
    )
    assert main(["lower", "--config", str(config), "--json"]) == 0
    res = _json_out(capsys)
    assert res["infimum"] == pytest.approx(-0.74875248, abs=1e-7)


def test_height_csv(tmp_path, capsys):
    path = tmp_path / "height.csv"
    assert main(["height", "cyclotomic:6", "--csv", str(path)]) == 0
    capsys.readouterr()
    with open(path, newline="") as fh:
        (row,) = list(csv.DictReader(fh))
    assert list(row) == ["poly", "archimedean", "finite", "height", "error_estimate"]
    assert row["poly"] == "1,-1,1"
    assert float(row["height"]) == pytest.approx(-0.74862517, abs=1e-7)


def test_eval_and_verify_csv(tmp_path, capsys):
    eval_csv = tmp_path / "eval.csv"
    verify_csv = tmp_path / "verify.csv"
    assert main(["eval", "E4", "0+1i", "--csv", str(eval_csv)]) == 0
    assert main(["verify", "constants", "--csv", str(verify_csv)]) == 0
    capsys.readouterr()
    assert eval_csv.read_text().startswith("function,point,value,error_estimate")
    assert len(verify_csv.read_text().splitlines()) == 3


def test_lower_replay_of_the_frozen_families(tmp_path, capsys):
    path = tmp_path / "lower.csv"
    assert main(["lower", "--replay", "--grid", "200", "--json", "--csv", str(path)]) == 0
    reports = _json_out(capsys)
    expected = {
        "delta": -0.74875248,
        "zero": -0.74862817,
        "zero_one": -0.74862517,
        "zero_one_sixth": -0.74862386,
        "zero_one_sixth_tenth": -0.74862360,
    }
    assert [r["name"] for r in reports] == list(expected)
    for r in reports:
        assert r["infimum"] == pytest.approx(expected[r["name"]], abs=1e-6)
    assert len(path.read_text().splitlines()) == 6


def test_upper_sweep(capsys):
    assert main(["upper", "--sweep=0,1", "--json"]) == 0
    (report,) = _json_out(capsys)["reports"]
    assert report["center"] == pytest.approx(0.205, abs=0.01)
    assert report["value"] <= -0.7486227509 + 1e-8


def test_upper_default_centers(tmp_path, capsys):
    path = tmp_path / "upper.csv"
    assert main(["upper", "--json", "--csv", str(path)]) == 0
    (report,) = _json_out(capsys)["reports"]
    assert report["center"] == pytest.approx(0.205)
    assert len(path.read_text().splitlines()) == 2


def test_scan_report(tmp_path, capsys):
    path = tmp_path / "spectrum.csv"
    argv = ["scan", "--max_order", "30", "--max_degree", "4", "--report", "--json"]
    assert main(argv + ["--csv", str(path)]) == 0
    res = _json_out(capsys)
    assert [e["label"] for e in res["isolated"]] == [
        "j=0",
        "cyclotomic:1",
        "cyclotomic:6",
        "cyclotomic:10",
    ]
    assert res["density_interval_start"] == pytest.approx(-0.7486227509)
    assert path.read_text().splitlines()[1].startswith("j=0,")
