import json
import os

import numpy as np
import pytest
from click.testing import CliRunner

from dickesim.cli import main
from dickesim.scenarios import bundled_scenarios, load_config, run_scenario

runner = CliRunner()


def read_csv(path):
    rows = []
    with open(path) as fh:
        header = None
        for ln in fh:
            ln = ln.rstrip("\n")
            if ln.startswith("#"):
                continue
            if header is None:
                header = ln.split(",")
                continue
            rows.append(ln.split(","))
    return header, rows


def rate_lookup(summary):
    return {(r["state"], r["engine"]): r["rate"] for r in summary["rates"]}


def test_list_scenarios():
    result = runner.invoke(main, ["list-scenarios"])
    assert result.exit_code == 0
    for name in ("dicke-n4", "switch-demo", "ww-n4", "compare-n4"):
        assert name in result.output


def test_run_dicke_n4(tmp_path):
    out = tmp_path / "out"
    result = runner.invoke(main, ["run", "dicke-n4", "--out-dir", str(out)])
    assert result.exit_code == 0, result.output
    summary = json.loads((out / "summary.json").read_text())
    rates = rate_lookup(summary)
    assert rates[("plus", "kernel")] == pytest.approx(4.0, rel=1e-10)
    assert rates[("plus", "dicke-oracle")] == pytest.approx(4.0, rel=1e-10)
    assert rates[("minus", "kernel")] == pytest.approx(0.0, abs=1e-10)
    assert rates[("multiplet:2,-1", "kernel")] == pytest.approx(4.0, rel=1e-10)
    assert rates[("multiplet:2,-1", "dicke-oracle")] == pytest.approx(
        4.0, rel=1e-10)
    # closed-form column present with deviations
    plus_rows = [r for r in summary["rates"] if r["state"] == "plus"]
    assert all(r["closed_form"] is not None for r in plus_rows)
    assert all(r["closed_form_rel_deviation"] is not None for r in plus_rows)
    # header carries hash and version in every artifact
    header, _ = read_csv(out / "rates.csv")
    text = (out / "rates.csv").read_text()
    assert "# config-sha256:" in text
    assert "# tool-version:" in text


def test_run_switch_demo(tmp_path):
    out = tmp_path / "sw"
    result = runner.invoke(main, ["run", "switch-demo", "--out-dir", str(out)])
    assert result.exit_code == 0, result.output
    record = json.loads((out / "protocol.json").read_text())
    assert record["rate_before"] == pytest.approx(0.0, abs=1e-10)
    assert record["rate_after"] == pytest.approx(4.0, rel=1e-10)
    header, rows = read_csv(out / "switch_demo.csv")
    t = np.array([float(r[0]) for r in rows])
    p = np.array([float(r[1]) for r in rows])
    before = p[t <= 1.0]
    after = p[t > 1.0]
    assert np.allclose(before, 1.0, atol=1e-9)
    # exponential at N gamma = 4 after the switch
    expect = np.exp(-4.0 * (t[t > 1.0] - 1.0))
    assert np.allclose(after, expect, rtol=1e-5)


def test_malformed_config_exit_and_no_partial_files(tmp_path):
    cfg = tmp_path / "broken.yaml"
    cfg.write_text("geometry: [unclosed\n")
    out = tmp_path / "out"
    result = runner.invoke(main, ["run", str(cfg), "--out-dir", str(out)])
    assert result.exit_code == 2
    assert not out.exists()


def test_missing_section_is_parse_error(tmp_path):
    cfg = tmp_path / "nosection.yaml"
    cfg.write_text("geometry: {kind: point-cluster, n: 2}\n"
                   "state: {constructors: [plus]}\n"
                   "engine: {engines: [kernel]}\n")
    result = runner.invoke(main, ["run", str(cfg)])
    assert result.exit_code == 2


def test_validation_error_exit(tmp_path):
    cfg = tmp_path / "bad.yaml"
    cfg.write_text("geometry: {kind: point-cluster, n: 2, gamma: -1.0}\n"
                   "state: {constructors: [plus]}\n"
                   "engine: {engines: [kernel]}\n"
                   "output: {}\n")
    out = tmp_path / "out"
    result = runner.invoke(main, ["run", str(cfg), "--out-dir", str(out)])
    assert result.exit_code == 3
    assert not out.exists()


def test_unknown_state_is_validation_error(tmp_path):
    cfg = tmp_path / "badstate.yaml"
    cfg.write_text("geometry: {kind: point-cluster, n: 2}\n"
                   "state: {constructors: [sideways]}\n"
                   "engine: {engines: [kernel]}\n"
                   "output: {}\n")
    result = runner.invoke(main, ["run", str(cfg)])
    assert result.exit_code == 3


def test_engine_error_exit(tmp_path):
    # explicit dt stable for the collective decay but not for the widest
    # detunings: norm drift aborts the integration
    cfg = tmp_path / "blowup.yaml"
    cfg.write_text(
        "geometry: {kind: point-cluster, n: 1}\n"
        "state: {constructors: ['basis:0']}\n"
        "engine:\n"
        "  engines: [ww]\n"
        "  ww: {n_angles: 6, n_radial: 64, cutoff_multiple: 2000,"
        " t_end: 0.2, dt: 0.002}\n"
        "output: {}\n")
    out = tmp_path / "out"
    result = runner.invoke(main, ["run", str(cfg), "--out-dir", str(out)])
    assert result.exit_code == 4
    assert not out.exists()


def test_compare_passes(tmp_path):
    out = tmp_path / "cmp"
    result = runner.invoke(main, ["compare", "compare-n4", "--out-dir",
                                  str(out)])
    assert result.exit_code == 0, result.output
    report = json.loads((out / "compare_report.json").read_text())
    assert report["passed"] is True
    pairs = {(c["state"], c["pair"]) for c in report["checks"]}
    assert ("plus", "kernel-vs-oracle") in pairs
    assert ("plus", "kernel-vs-ww") in pairs


def test_compare_tolerance_violation_exit5(tmp_path):
    cfg = tmp_path / "strict.yaml"
    cfg.write_text(
        "geometry: {kind: point-cluster, n: 4}\n"
        "state: {constructors: [plus]}\n"
        "engine:\n"
        "  engines: [kernel, ww]\n"
        "  ww: {n_angles: 6, n_radial: 128, cutoff_multiple: 60, t_end: 1.2}\n"
        "  tolerances: {kernel_ww: 1.0e-9}\n"
        "output: {}\n")
    out = tmp_path / "out"
    result = runner.invoke(main, ["compare", str(cfg), "--out-dir", str(out)])
    assert result.exit_code == 5
    # report still written for inspection
    assert (out / "compare_report.json").exists()
    report = json.loads((out / "compare_report.json").read_text())
    assert report["passed"] is False


def test_compare_n12_skips_oracle(tmp_path):
    cfg = tmp_path / "n12.yaml"
    cfg.write_text(
        "geometry: {kind: point-cluster, n: 12}\n"
        "state: {constructors: [plus, minus]}\n"
        "engine:\n"
        "  engines: [kernel, ww, dicke-oracle]\n"
        "  ww: {n_angles: 6, n_radial: 64, cutoff_multiple: 100, t_end: 0.6}\n"
        "output: {}\n")
    out = tmp_path / "out"
    result = runner.invoke(main, ["compare", str(cfg), "--out-dir", str(out)])
    assert result.exit_code == 0, result.output
    report = json.loads((out / "compare_report.json").read_text())
    oracle_rows = [r for r in report["rates"]
                   if r["engine"] == "dicke-oracle"]
    assert all(r["skipped"] for r in oracle_rows)
    assert all("capacity" in r["reason"] for r in oracle_rows)
    kernel_ww = [c for c in report["checks"] if c["pair"] == "kernel-vs-ww"]
    assert kernel_ww and all(c["passed"] for c in kernel_ww)


def test_byte_identical_reruns(tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    for out in (out1, out2):
        result = runner.invoke(main, ["run", "dicke-n4", "--out-dir",
                                      str(out)])
        assert result.exit_code == 0
    for name in sorted(os.listdir(out1)):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_seed_override_changes_slab(tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    r1 = runner.invoke(main, ["run", "slab-n32", "--out-dir", str(out1)])
    r2 = runner.invoke(main, ["run", "slab-n32", "--out-dir", str(out2),
                              "--seed-override", "99"])
    assert r1.exit_code == 0 and r2.exit_code == 0
    s1 = json.loads((out1 / "summary.json").read_text())
    s2 = json.loads((out2 / "summary.json").read_text())
    assert rate_lookup(s1)[("plus", "kernel")] != rate_lookup(s2)[("plus",
                                                                   "kernel")]
    assert s2["_meta"]["seed-override"] == 99


def test_json_format_tables(tmp_path):
    out = tmp_path / "out"
    result = runner.invoke(main, ["run", "dicke-n4", "--out-dir", str(out),
                                  "--format", "json"])
    assert result.exit_code == 0
    doc = json.loads((out / "rates.json").read_text())
    assert any(row["state"] == "plus" and row["rate"] == pytest.approx(4.0)
               for row in doc["rows"])
    assert not (out / "rates.csv").exists()


def test_protocol_scenarios(tmp_path):
    out = tmp_path / "sg"
    result = runner.invoke(main, ["run", "singlet-prep", "--out-dir",
                                  str(out)])
    assert result.exit_code == 0, result.output
    record = json.loads((out / "protocol.json").read_text())
    assert record["fidelity"] == pytest.approx(1.0, abs=1e-10)
    assert record["oracle_rate"] == pytest.approx(0.0, abs=1e-10)

    out2 = tmp_path / "cond"
    result = runner.invoke(main, ["run", "conditional-prep", "--out-dir",
                                  str(out2)])
    assert result.exit_code == 0, result.output
    record = json.loads((out2 / "protocol.json").read_text())
    for entry in record["outcomes"]:
        eps = entry["drive_strength"]
        assert entry["no_count_probability"] == pytest.approx(eps ** 2,
                                                              rel=0.10)
        assert entry["fidelity"] >= 1 - eps ** 2


def test_run_scenario_api_matches_cli(tmp_path):
    config = load_config("dicke-n4")
    res = run_scenario(config, str(tmp_path / "api"))
    assert any(p.endswith("summary.json") for p in res.artifacts)
    assert res.summary["ensemble"]["n_atoms"] == 4


def test_all_bundled_scenarios_parse():
    for name in bundled_scenarios():
        config = load_config(name)
        assert config.name == name
