import csv
import io
import json
import math

import pytest

from resonant_search import __version__
from resonant_search.cli import RunConfig, main, parse_policy


def run(*argv):
    buf = io.StringIO()
    code = main(list(argv), out=buf)
    return code, buf.getvalue()


def rows(text):
    body = [line for line in text.splitlines() if not line.startswith("#")]
    return list(csv.DictReader(body))


def strip_timestamp(text):
    return "\n".join(line for line in text.splitlines() if "timestamp" not in line)


def test_simulate_iontrap():
    code, text = run("simulate", "--n", "4", "--energy", "1", "--epsilon", "1", "--phi-pi", "1",
                     "--model", "iontrap", "--w", "resonant")
    assert code == 0
    doc = json.loads(text)
    assert doc["p_peak"] == pytest.approx(0.75, abs=1e-9)
    assert doc["t_peak"] == pytest.approx(3.6276, abs=1e-4)
    assert doc["w"] == pytest.approx(0.5, abs=1e-15)
    assert doc["gap_to_unity"] == pytest.approx(0.25, abs=1e-9)
    assert doc["notes"]


def test_simulate_hg_effective():
    code, text = run("simulate", "--n", "4", "--model", "hg-effective", "--epsilon", "1", "--phi-pi", "1")
    assert code == 0
    doc = json.loads(text)
    assert doc["p_peak"] == pytest.approx(1.0, abs=1e-8)
    assert doc["t_peak"] == pytest.approx(math.pi, abs=1e-6)


def test_simulate_rejects_weak_epsilon(capsys):
    code, _ = run("simulate", "--n", "4", "--epsilon", "0.4", "--phi-pi", "1", "--model", "hls", "--w", "resonant")
    assert code == 2
    assert "eps > Ex" in capsys.readouterr().err


def test_simulate_rk4_matches_closed_form():
    _, closed = run("simulate", "--n", "16", "--model", "hls", "--epsilon", "1")
    _, rk4 = run("simulate", "--n", "16", "--model", "hls", "--epsilon", "1", "--method", "rk4")
    assert json.loads(rk4)["p_peak"] == pytest.approx(json.loads(closed)["p_peak"], abs=1e-8)


def test_simulate_numerical_failure_exit_code():
    code, _ = run("simulate", "--n", "4", "--model", "hls", "--method", "rk4", "--dt", "1.5")
    assert code == 3


def test_simulate_dense_and_threshold(tmp_path):
    out = tmp_path / "traj.csv"
    code, text = run("simulate", "--n", "16", "--model", "hg-dense", "--epsilon", "c-over-sqrt-n:2",
                     "--threshold", "0.5", "--output", str(out))
    assert code == 0
    doc = json.loads(text)
    assert doc["p_peak"] == pytest.approx(1.0, abs=1e-6)
    assert doc["first_hit"] is not None and 0 < doc["first_hit"] < doc["t_peak"]
    table = rows(out.read_text())
    assert list(table[0]) == ["t", "p_target", "norm_error"]
    assert len(table) <= 2001


def test_iontrap_needs_odd_phase():
    assert run("simulate", "--n", "4", "--phi-pi", "0.5")[0] == 2


@pytest.mark.parametrize("argv", [
    ["simulate"],
    ["simulate", "--n", "1"],
    ["simulate", "--n", "4", "--target", "4"],
    ["simulate", "--n", "4", "--energy", "0"],
    ["simulate", "--n", "4", "--threshold", "1.5"],
    ["simulate", "--n", "4", "--epsilon", "bogus:1"],
    ["simulate", "--n", "4", "--t-end", "soon"],
    ["simulate", "--n", "4", "--model", "nope"],
    ["frobnicate"],
])
def test_config_errors_exit_2(argv):
    assert run(*argv)[0] == 2


def test_scan_resonance():
    code, text = run("scan", "--axis", "w", "--n", "4", "--epsilon", "1", "--phi-pi", "1",
                     "--min", "0", "--max", "1", "--steps", "100", "--initial", "pure-beta")
    assert code == 0
    table = rows(text)
    assert len(table) == 101
    best = max(table, key=lambda r: float(r["p_peak"]))
    assert float(best["w"]) == pytest.approx(0.5, abs=1e-12)


def test_scan_phase():
    code, text = run("scan", "--axis", "phi", "--model", "hg-effective", "--n", "16",
                     "--min", "0", "--max", "2", "--steps", "64")
    assert code == 0
    table = rows(text)
    assert len(table) == 65
    top = max(float(r["p_peak"]) for r in table)
    at_pi = next(r for r in table if float(r["phi_pi"]) == 1.0)
    # every phase reaches probability one here, so the phi = pi row ties the maximum
    assert float(at_pi["p_peak"]) == pytest.approx(top, abs=1e-12)
    assert float(at_pi["p_peak"]) == pytest.approx(1.0, abs=1e-9)


def test_scan_zero_steps():
    assert run("scan", "--axis", "w", "--n", "4", "--steps", "0")[0] == 2


def test_scaling_sqrt_n():
    code, text = run("scaling", "--n-list", "16,64,256,1024,4096,16384,65536",
                     "--policy", "c-over-sqrt-n:2", "--model", "hg-effective")
    assert code == 0
    doc = json.loads(text)
    assert 0.48 <= doc["metadata"]["slope"] <= 0.52
    assert doc["metadata"]["r_squared"] >= 0.999


def test_scaling_fixed_policy_note():
    code, text = run("scaling", "--policy", "fixed:1", "--model", "hls")
    assert code == 0
    doc = json.loads(text)
    assert abs(doc["metadata"]["slope"]) <= 0.05
    assert any("independent of N" in note for note in doc["metadata"]["notes"])


def test_scaling_too_few_sizes():
    assert run("scaling", "--n-list", "16,64")[0] == 2


def test_grover_optimal():
    code, text = run("grover", "--n", "4", "--optimal")
    assert code == 0
    cols = json.loads(text)["columns"]
    assert cols["k"] == [1]
    assert cols["success"][0] == pytest.approx(1.0, abs=1e-12)


def test_grover_n2():
    code, text = run("grover", "--n", "2", "--k", "1")
    assert code == 0
    assert json.loads(text)["columns"]["success"][0] == pytest.approx(0.5, abs=1e-12)


def test_grover_needs_k():
    assert run("grover", "--n", "8")[0] == 2


def test_compare_table():
    code, text = run("compare", "--n-list", "4,16,64,256", "--c", "2")
    assert code == 0
    table = rows(text)
    assert [int(r["n"]) for r in table] == [4, 16, 64, 256]
    for r in table:
        assert float(r["analog_ratio"]) == pytest.approx(1, abs=0.01)
    assert float(table[-1]["grover_ratio"]) == pytest.approx(1, abs=0.05)


def test_version_and_config_in_outputs():
    _, text = run("scan", "--axis", "w", "--n", "4", "--steps", "4")
    assert text.splitlines()[0] == f"# version: {__version__}"
    config = json.loads(text.splitlines()[1].removeprefix("# config: "))
    assert config["n"] == 4 and config["steps"] == 4
    _, text = run("simulate", "--n", "4")
    doc = json.loads(text)
    assert doc["version"] == __version__ and doc["config"]["model"] == "iontrap"


def test_timestamp_on_own_line():
    _, text = run("compare", "--n-list", "4,16")
    stamp = [line for line in text.splitlines() if "timestamp" in line]
    assert len(stamp) == 1 and stamp[0].startswith("# timestamp: ")


def test_config_file_equals_flags(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"n": 16, "epsilon": 1.0, "phi_pi": 1.0, "model": "hls", "threshold": 0.5}))
    _, from_file = run("simulate", "--config", str(cfg))
    _, from_flags = run("simulate", "--n", "16", "--epsilon", "1", "--phi-pi", "1", "--model", "hls",
                        "--threshold", "0.5")
    assert strip_timestamp(from_file) == strip_timestamp(from_flags)


def test_flags_override_config_file(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"n": 16, "min": 0, "max": 1, "steps": 10, "axis": "w"}))
    _, text = run("scan", "--config", str(cfg), "--n", "4", "--initial", "pure-beta")
    config = json.loads(text.splitlines()[1].removeprefix("# config: "))
    assert config["n"] == 4 and config["steps"] == 10


def test_bad_config_file(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("[1, 2]")
    assert run("simulate", "--config", str(bad))[0] == 2
    assert run("simulate", "--config", str(tmp_path / "absent.json"))[0] == 2


def test_unwritable_output(tmp_path):
    code, _ = run("grover", "--n", "4", "--k", "1", "--output", str(tmp_path / "no" / "x.json"))
    assert code == 2


def test_output_file_matches_stdout(tmp_path):
    out = tmp_path / "c.csv"
    _, stdout = run("compare", "--n-list", "4,16")
    run("compare", "--n-list", "4,16", "--output", str(out))
    def body(text):
        return [line for line in text.splitlines() if not line.startswith("#")]

    assert body(out.read_text()) == body(stdout)


def test_workers_env(monkeypatch):
    monkeypatch.setenv("RESONANT_SEARCH_WORKERS", "3")
    _, a = run("scan", "--axis", "w", "--n", "4", "--steps", "20")
    monkeypatch.setenv("RESONANT_SEARCH_WORKERS", "1")
    _, b = run("scan", "--axis", "w", "--n", "4", "--steps", "20")
    assert strip_timestamp(a) == strip_timestamp(b)


def test_policy_parsing():
    assert parse_policy("fixed:0.5") == 0.5
    assert parse_policy("c-over-sqrt-n:2") == {"kind": "c_over_sqrt_n", "c": 2.0}
    assert parse_policy({"kind": "c_over_sqrt_n", "c": 3}) == {"kind": "c_over_sqrt_n", "c": 3.0}
    assert RunConfig(n=16, epsilon={"kind": "c_over_sqrt_n", "c": 2.0}).resolved_epsilon() == 0.5
