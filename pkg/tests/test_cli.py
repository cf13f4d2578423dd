import csv
import json
import math
from pathlib import Path

import pytest

from bellsim.cli import main

GOLDEN = Path(__file__).parent / "golden"
SCHEMA = json.loads((GOLDEN / "sample_schema.json").read_text())
CANONICAL = ["1.5707963", "0", "0.7853982", "-0.7853982"]


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def value_of(out, key):
    for line in out.splitlines():
        if line.startswith(key + " = "):
            return float(line.split(" = ", 1)[1])
    raise AssertionError(f"{key} not in output:\n{out}")


@pytest.fixture(autouse=True)
def _cwd(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv("BELLSIM_SEED", raising=False)


# ------------------------------------------------------------------ analytic


def test_analytic_standard_zero(capsys):
    code, out, _ = run(capsys, "analytic", "--scenario", "standard", "--alpha", "0", "--beta", "0")
    assert code == 0
    assert value_of(out, "E") == 1.0


def test_analytic_source_modulated_standard(capsys):
    code, out, _ = run(
        capsys, "analytic", "--scenario", "source-modulated", "--alpha", "0.3", "--beta", "0.5", "--scheme", "standard"
    )
    assert code == 0
    assert value_of(out, "p_pp") == 1.0


def test_analytic_multiple_schemes_and_degrees(capsys):
    code, out, _ = run(
        capsys, "analytic", "--scenario", "source-modulated", "--alpha", "30", "--beta", "15", "--degrees",
        "--scheme", "standard", "--scheme", "q",
    )
    assert code == 0
    assert "[q]" in out
    assert out.count("E = ") == 2
    assert out.rstrip().endswith(f"E = {math.cos(math.radians(45)):.12g}")


def test_analytic_bad_alpha(capsys):
    code, _, err = run(capsys, "analytic", "--alpha", "abc", "--beta", "0")
    assert code == 2
    assert "not a number" in err


def test_analytic_degenerate(capsys):
    code, _, err = run(capsys, "analytic", "--scenario", "source-modulated", "--alpha", "1", "--beta", str(math.pi - 1))
    assert code == 3


# ---------------------------------------------------------------------- chsh


def test_chsh_tsirelson(capsys):
    code, out, _ = run(capsys, "chsh", "--scenario", "standard", "--scheme", "standard", "--angles", *CANONICAL)
    assert code == 0
    assert "B = 2.828427" in out


def test_chsh_source_modulated_optimize(capsys):
    code, out, _ = run(capsys, "chsh", "--scenario", "source-modulated", "--scheme", "standard", "--optimize")
    assert code == 0
    assert "B = 2.000000" in out
    assert "skipped 32 degenerate setting pairs" in out


def test_chsh_q_optimize(capsys):
    code, out, _ = run(capsys, "chsh", "--scenario", "source-modulated", "--scheme", "q", "--optimize")
    assert code == 0
    assert "B = 2.828427" in out


def test_chsh_degenerate_angles(capsys):
    code, _, _ = run(capsys, "chsh", "--scenario", "source-modulated", "--angles", "1", "0", str(math.pi - 1), "0")
    assert code == 3


def test_chsh_needs_angles_or_optimize(capsys):
    assert run(capsys, "chsh")[0] == 2
    assert run(capsys, "chsh", "--optimize", "--grid-density", "4")[0] == 2


def test_chsh_output_and_replay(capsys, tmp_path):
    code, _, _ = run(capsys, "chsh", "--angles", *CANONICAL, "--output", "r.json")
    assert code == 0
    report = json.loads((tmp_path / "r.json").read_text())
    assert report["schema"] == "bellsim.chsh/1"
    assert report["bell"] == pytest.approx(2 * math.sqrt(2), abs=1e-6)
    first = (tmp_path / "r.json").read_bytes()
    (tmp_path / "r.json").unlink()
    assert run(capsys, "replay", "r.json.manifest.json")[0] == 0
    assert (tmp_path / "r.json").read_bytes() == first


# ---------------------------------------------------------------------- scan


def read_scan(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_scan_golden(capsys, tmp_path):
    code, _, _ = run(capsys, "scan", "--scenario", "standard", "--steps", "5", "--output", "s.csv")
    assert code == 0
    assert (tmp_path / "s.csv").read_bytes() == (GOLDEN / "scan_standard_steps5.csv").read_bytes()


def test_scan_standard_is_cosine(capsys, tmp_path):
    run(capsys, "scan", "--scenario", "standard", "--steps", "37", "--beta", "0.4", "--output", "s.csv")
    rows = read_scan(tmp_path / "s.csv")
    assert len(rows) == 37
    assert ",".join(rows[0].keys()) == SCHEMA["scan_header"]
    for r in rows:
        assert float(r["E"]) == pytest.approx(math.cos(float(r["alpha"]) + float(r["beta"])), abs=1e-9)


def test_scan_source_modulated_standard_is_flat(capsys, tmp_path):
    code, _, err = run(
        capsys, "scan", "--scenario", "source-modulated", "--sum-min", "0", "--sum-max", "6", "--steps", "40",
        "--output", "s.csv",
    )
    assert code == 0
    rows = read_scan(tmp_path / "s.csv")
    assert len(rows) == 40
    assert {float(r["E"]) for r in rows} == {1.0}


def test_scan_skips_degenerate_point(capsys, tmp_path):
    code, _, err = run(
        capsys, "scan", "--scenario", "source-modulated", "--sum-min", "0", "--sum-max", str(2 * math.pi),
        "--steps", "3", "--output", "s.csv",
    )
    assert code == 0
    assert "skipped 1" in err
    assert len(read_scan(tmp_path / "s.csv")) == 2


def test_scan_empty_grid(capsys, tmp_path):
    code, _, _ = run(capsys, "scan", "--steps", "0", "--output", "e.csv")
    assert code == 0
    assert (tmp_path / "e.csv").read_text() == SCHEMA["scan_header"] + "\n"


def test_scan_unwritable(capsys, tmp_path):
    code, _, err = run(capsys, "scan", "--output", str(tmp_path / "missing" / "x.csv"))
    assert code == 4


def test_scan_manifest_replay_is_bit_exact(capsys, tmp_path):
    run(capsys, "scan", "--scenario", "two-detector", "--scheme", "tilde", "--steps", "11", "--output", "s.csv")
    manifest = json.loads((tmp_path / "s.csv.manifest.json").read_text())
    assert manifest["schema"] == "bellsim.manifest/1"
    assert "timestamp" in manifest
    first = (tmp_path / "s.csv").read_bytes()
    (tmp_path / "s.csv").unlink()
    assert run(capsys, "replay", "s.csv.manifest.json")[0] == 0
    assert (tmp_path / "s.csv").read_bytes() == first


# -------------------------------------------------------------------- sample


def test_sample_schema_fields(capsys):
    code, out, _ = run(capsys, "sample", "--pairs", "1000", "--seed", "5")
    assert code == 0
    doc = json.loads(out)
    assert doc["schema"] == SCHEMA["schema"]
    assert sorted(doc) == SCHEMA["top_level"]
    assert sorted(doc["acquisitions"][0]) == SCHEMA["acquisition"]
    assert sorted(doc["sampler"]) == SCHEMA["sampler"]
    assert sorted(doc["manifest"]) == SCHEMA["manifest"]


def test_sample_byte_identical(capsys):
    args = ("sample", "--scenario", "standard", "--angles", *CANONICAL, "--pairs", "20000", "--seed", "42")
    _, first, _ = run(capsys, *args)
    _, second, _ = run(capsys, *args)
    assert first == second
    _, third, _ = run(capsys, *args[:-1], "43")
    assert third != first


def test_sample_seed_from_environment(capsys, monkeypatch):
    monkeypatch.setenv("BELLSIM_SEED", "42")
    _, from_env, _ = run(capsys, "sample", "--pairs", "1000")
    monkeypatch.delenv("BELLSIM_SEED")
    _, explicit, _ = run(capsys, "sample", "--pairs", "1000", "--seed", "42")
    assert json.loads(from_env)["acquisitions"] == json.loads(explicit)["acquisitions"]
    assert json.loads(from_env)["manifest"]["argv"][-2:] == ["--seed", "42"]


def test_sample_bad_env_seed(capsys, monkeypatch):
    monkeypatch.setenv("BELLSIM_SEED", "nope")
    assert run(capsys, "sample")[0] == 2


def test_sample_million_pairs(capsys):
    code, out, _ = run(capsys, "sample", "--scenario", "standard", "--alpha", "0", "--beta", "0", "--pairs", "1000000", "--seed", "9")
    acq = json.loads(out)["acquisitions"][0]
    assert abs(acq["counts"]["pp"] / 1e6 - 0.5) < 0.0015


def test_sample_two_detector_omits_unobservable(capsys):
    _, out, _ = run(capsys, "sample", "--scenario", "two-detector", "--pairs", "1000")
    acq = json.loads(out)["acquisitions"][0]
    assert set(acq["counts"]) == {"pp"}
    assert set(acq["standard_errors"]) == {"pp"}


def test_sample_degenerate_fixed_pairs(capsys):
    code, _, _ = run(capsys, "sample", "--scenario", "source-modulated", "--alpha", "1", "--beta", str(math.pi - 1))
    assert code == 3


def test_sample_mode_flag_mismatch(capsys):
    assert run(capsys, "sample", "--mode", "poisson", "--pairs", "10")[0] == 2
    assert run(capsys, "sample", "--exposure", "10")[0] == 2


def test_sample_writes_files_and_replays(capsys, tmp_path):
    code, out, _ = run(
        capsys, "sample", "--scenario", "source-modulated", "--angles", *CANONICAL, "--shifted",
        "--mode", "poisson", "--exposure", "1000", "--output", "s.json", "--counts-csv", "c.csv",
    )
    assert code == 0
    assert (tmp_path / "s.json").read_text() == out
    assert (tmp_path / "c.csv").read_text().splitlines()[0] == SCHEMA["counts_header"]
    assert len((tmp_path / "c.csv").read_text().splitlines()) == 1 + 16
    for name in ("s.json", "c.csv"):
        assert (tmp_path / f"{name}.manifest.json").exists()
    before = {n: (tmp_path / n).read_bytes() for n in ("s.json", "c.csv")}
    for n in before:
        (tmp_path / n).unlink()
    assert run(capsys, "replay", "c.csv.manifest.json")[0] == 0
    assert {n: (tmp_path / n).read_bytes() for n in before} == before


# --------------------------------------------------------------- audit, lhv


def make_counts(capsys, scenario, *extra):
    code, _, _ = run(
        capsys, "sample", "--scenario", scenario, "--angles", *CANONICAL, "--counts-csv", "c.csv", "--seed", "11", *extra
    )
    assert code == 0
    return "c.csv"


def test_audit_q_warns(capsys):
    path = make_counts(capsys, "source-modulated", "--shifted", "--mode", "poisson", "--exposure", "1e6")
    code, out, _ = run(capsys, "audit", path, "--scheme", "q")
    assert code == 0
    b = float(out.split("B = ")[1].split()[0])
    assert b == pytest.approx(2 * math.sqrt(2), abs=0.01)
    assert "WARNING" in out


def test_audit_standard_clean(capsys):
    path = make_counts(capsys, "standard", "--pairs", "1000000")
    code, out, _ = run(capsys, "audit", path, "--scheme", "standard")
    assert code == 0
    b, sigma = (float(x) for x in out.split("B = ")[1].split("\n")[0].split(" +- "))
    assert b <= 2 * math.sqrt(2) + 3 * sigma
    assert "WARNING" not in out


def test_audit_flatness_threshold_is_configurable(capsys):
    path = make_counts(capsys, "source-modulated", "--shifted", "--mode", "poisson", "--exposure", "1e6")
    _, out, _ = run(capsys, "audit", path, "--scheme", "q", "--flatness-sigma", "1e9")
    assert "WARNING" not in out


def test_audit_truncated_row(capsys, tmp_path):
    (tmp_path / "bad.csv").write_text("alpha,beta,outcome,count,exposure\n0,0,pp,10,1\n0,0,pm\n")
    code, _, err = run(capsys, "audit", "bad.csv")
    assert code == 5
    assert "line 3" in err


def test_audit_missing_partner(capsys):
    path = make_counts(capsys, "standard", "--pairs", "1000")
    code, _, err = run(capsys, "audit", path, "--scheme", "tilde", "--angles", *CANONICAL)
    assert code == 6


def test_lhv_command(capsys):
    code, out, _ = run(capsys, "lhv")
    assert code == 0
    assert "LHV bound: 2" in out
    assert "strategies: 16" in out
    assert len([l for l in out.splitlines() if l.startswith(("+", "-"))]) == 16
    assert out.split("max strategy value: ")[1].split()[0] == out.split("LHV bound: ")[1].split()[0]
