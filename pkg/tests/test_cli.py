import csv
import io
import json
import subprocess
import sys

import pytest

from localgc.cli import EXIT_FAIL, EXIT_OK, EXIT_USAGE, main
from localgc.experiments import spec_hash, validate_spec

POWER2 = {"family": "power_law", "params": {"T": 2}}

SMALL = {
    "rates_S": {"kind": "rates_S", "family": POWER2, "n_grid": [16, 64], "replicates": 300, "seed": 1},
    "rates_T_probe": {"kind": "rates_T_probe", "family": {"family": "power_law", "params": {"T": 1}},
                      "n_grid": [16, 64], "replicates": 300, "seed": 2},
    "certify": {"kind": "certify", "grids": ["kl", "bk_mad"], "seed": 0},
    "coverage": {"kind": "coverage", "family": POWER2, "d": 20, "n_grid": [100], "delta": 0.1,
                 "replicates": 50, "seed": 3},
    "crossval": {"kind": "crossval", "n_grid": [5, 10, 20], "cases": 5, "d_max": 4,
                 "replicates": 4000, "seed": 4},
    "vc_demo": {"kind": "vc_demo", "k": 3, "d_max": 8},
    "lgc_floor": {"kind": "lgc_floor", "n_grid": [20], "J_grid": [10, 100]},
}


def write_spec(tmp_path, spec, name="spec.json"):
    path = tmp_path / name
    path.write_text(json.dumps(spec, indent=2))
    return str(path)


def read_csv(path):
    return list(csv.DictReader(io.StringIO(path.read_text())))


def test_validate_examples(tmp_path, capsys):
    ok = write_spec(tmp_path, SMALL["rates_S"])
    assert main(["validate", ok]) == EXIT_OK
    assert validate_spec(SMALL["rates_S"]) == []
    empty = dict(SMALL["rates_S"], n_grid=[])
    assert any("n_grid" in d for d in validate_spec(empty))
    flat = dict(SMALL["rates_S"], n_grid=[16, 16, 32])
    assert any("increasing" in d for d in validate_spec(flat))
    assert main(["validate", write_spec(tmp_path, flat, "bad.json")]) == EXIT_USAGE
    assert "increasing" in capsys.readouterr().err


@pytest.mark.parametrize("spec,needle", [
    ({"kind": "nope"}, "kind"),
    ({"kind": "rates_S", "n_grid": [4]}, "family"),
    (dict(SMALL["rates_S"], seed=-1), "seed"),
    (dict(SMALL["rates_S"], family={"family": "power_law", "params": {"T": -1}}), "family"),
    (dict(SMALL["coverage"], delta=1.5), "delta"),
    ({"kind": "certify", "grids": ["bogus"]}, "grids"),
    ({"kind": "lgc_floor", "n_grid": [10], "J_grid": [10, 5]}, "J_grid"),
])
def test_validate_diagnostics(spec, needle):
    assert any(needle in d for d in validate_spec(spec))


def test_parse_error_has_line_context(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text('{\n  "kind": "rates_S",\n  "n_grid": [1, 2,\n}\n')
    assert main(["validate", str(path)]) == EXIT_USAGE
    err = capsys.readouterr().err
    assert "broken.json:4:" in err and "}" in err.splitlines()[1]


def test_validate_never_runs(tmp_path, monkeypatch):
    import localgc.experiments as ex
    monkeypatch.setattr(ex, "RUNNERS", {})
    assert main(["validate", write_spec(tmp_path, SMALL["rates_S"])]) == EXIT_OK


@pytest.mark.parametrize("kind", list(SMALL))
def test_each_kind_runs(tmp_path, kind, capsys):
    spec = SMALL[kind]
    code = main(["run", write_spec(tmp_path, spec), "--out-dir", str(tmp_path / "out")])
    assert code == EXIT_OK or kind == "lgc_floor"
    csv_path = tmp_path / "out" / f"{kind}.csv"
    rows = read_csv(csv_path)
    assert rows and all(r["seed"] == str(spec.get("seed", 0)) and r["spec_hash"] == spec_hash(spec)
                        for r in rows)
    assert b"\r" not in csv_path.read_bytes()
    meta = json.loads((tmp_path / "out" / f"{kind}.csv.meta.json").read_text())
    assert meta["spec_hash"] == spec_hash(spec) and "started" in meta


def test_rates_columns(tmp_path):
    main(["run", write_spec(tmp_path, SMALL["rates_S"]), "--out-dir", str(tmp_path)])
    rows = read_csv(tmp_path / "rates_S.csv")
    for key in ("n", "delta_est", "ci", "sqrtn_delta", "sqrt_S", "ratio"):
        assert key in rows[0]
    main(["run", write_spec(tmp_path, SMALL["rates_T_probe"]), "--out-dir", str(tmp_path)])
    rows = read_csv(tmp_path / "rates_T_probe.csv")
    for key in ("n", "n_delta", "T", "ratio"):
        assert key in rows[0]


def test_certify_writes_jsonl(tmp_path):
    main(["run", write_spec(tmp_path, SMALL["certify"]), "--out-dir", str(tmp_path)])
    lines = (tmp_path / "certify.jsonl").read_text().splitlines()
    assert len(lines) > 1000 and all(json.loads(x)["pass"] for x in lines[:50])
    rows = read_csv(tmp_path / "certify.csv")
    assert [r["grid"] for r in rows] == ["kl", "bk_mad"] and all(r["failed"] == "0" for r in rows)


def test_vc_demo_prints_rows(tmp_path, capsys):
    assert main(["run", write_spec(tmp_path, SMALL["vc_demo"]), "--out-dir", str(tmp_path)]) == EXIT_OK
    out = capsys.readouterr().out
    assert "00001111\n00110011\n01010101\n" in out


def test_failed_expectation_exit_code(tmp_path, capsys):
    spec = dict(SMALL["rates_S"], expect={"ratio_max": 1e-3})
    assert main(["run", write_spec(tmp_path, spec), "--out-dir", str(tmp_path)]) == EXIT_FAIL
    assert "FAILED" in capsys.readouterr().err


def test_usage_errors(tmp_path):
    assert main([]) == EXIT_USAGE
    assert main(["frobnicate"]) == EXIT_USAGE
    assert main(["run", str(tmp_path / "missing.json")]) == EXIT_USAGE
    spec = write_spec(tmp_path, SMALL["vc_demo"])
    assert main(["run", spec, "--threads", "0", "--out-dir", str(tmp_path)]) == EXIT_USAGE
    bad = write_spec(tmp_path, dict(SMALL["rates_S"], family={"family": "log_inverse",
                                                                 "params": {"offset": 2}}), "li.json")
    assert main(["run", bad, "--out-dir", str(tmp_path)]) == EXIT_USAGE


def test_rerun_byte_identical_and_threads(tmp_path):
    spec = write_spec(tmp_path, dict(SMALL["rates_S"], replicates=5000))
    main(["run", spec, "--out-dir", str(tmp_path / "a")])
    main(["run", spec, "--out-dir", str(tmp_path / "b"), "--threads", "4"])
    main(["run", spec, "--out-dir", str(tmp_path / "c")])
    a = (tmp_path / "a" / "rates_S.csv").read_bytes()
    assert a == (tmp_path / "b" / "rates_S.csv").read_bytes() == (tmp_path / "c" / "rates_S.csv").read_bytes()


def test_seed_override(tmp_path):
    spec = write_spec(tmp_path, SMALL["rates_S"])
    main(["run", spec, "--out-dir", str(tmp_path / "a")])
    main(["run", spec, "--out-dir", str(tmp_path / "b"), "--seed-override", "99"])
    ra = read_csv(tmp_path / "a" / "rates_S.csv")
    rb = read_csv(tmp_path / "b" / "rates_S.csv")
    assert rb[0]["seed"] == "99" and ra[0]["seed"] == "1"
    assert ra[0]["delta_est"] != rb[0]["delta_est"]
    assert ra[0]["spec_hash"] != rb[0]["spec_hash"]


def test_output_dir_env(tmp_path, monkeypatch):
    monkeypatch.setenv("LOCALGC_OUT_DIR", str(tmp_path / "env"))
    assert main(["run", write_spec(tmp_path, SMALL["vc_demo"])]) == EXIT_OK
    assert (tmp_path / "env" / "vc_demo.csv").exists()


def test_custom_output_names(tmp_path):
    spec = dict(SMALL["vc_demo"], outputs={"csv": "x.csv", "text": "x.txt"})
    main(["run", write_spec(tmp_path, spec), "--out-dir", str(tmp_path)])
    assert (tmp_path / "x.csv").exists() and (tmp_path / "x.txt").read_text().startswith("00001111")
    # output paths do not change the hash
    assert spec_hash(spec) == spec_hash(SMALL["vc_demo"])


def test_module_entry_point(tmp_path):
    spec = write_spec(tmp_path, SMALL["vc_demo"])
    proc = subprocess.run([sys.executable, "-m", "localgc", "validate", spec],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "ok" in proc.stdout
