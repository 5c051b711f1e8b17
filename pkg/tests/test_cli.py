import json
import subprocess
import sys

import numpy as np
import pytest

from denseeit import __version__
from denseeit.cli import MANIFEST, main, write_csv
from denseeit.config import PRESET_NAMES, load_preset

SUBCOMMANDS = ("susceptibility", "propagate", "analyze", "scan", "presets", "selftest")


@pytest.fixture
def short_config(tmp_path):
    cfg = load_preset("fig4").replace(k0z=31.6, n_z=21, n_tau=12001, tau_half_width=150.0)
    path = tmp_path / "short.json"
    path.write_text(json.dumps(cfg.to_dict()))
    return path


def tree(root):
    return sorted(str(p.relative_to(root)) for p in root.rglob("*"))


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def read_manifest(out_dir):
    return json.loads((out_dir / MANIFEST).read_text())


def test_presets_list(capsys):
    code, out, _ = run(["presets", "list"], capsys)
    assert code == 0
    assert out.split() == ["fig2a", "fig2b", "fig3-baseline", "fig4"] == list(PRESET_NAMES)


def test_presets_show_round_trips(capsys):
    code, out, _ = run(["presets", "show", "fig4"], capsys)
    assert code == 0
    assert json.loads(out) == load_preset("fig4").to_dict()


@pytest.mark.parametrize("argv", [["bogus"], ["propagate", "--frobnicate"],
                                  ["presets", "show"], ["presets", "show", "nope"],
                                  ["susceptibility", "--steps", "1"], []])
def test_usage_errors_exit_1(argv, capsys):
    try:
        code = main(argv)
    except SystemExit as exc:
        code = exc.code
    assert code == 1
    assert capsys.readouterr().err


@pytest.mark.parametrize("sub", SUBCOMMANDS)
def test_help_on_every_subcommand(sub, capsys):
    with pytest.raises(SystemExit) as exc:
        main([sub, "--help"])
    assert exc.value.code == 0
    assert "usage" in capsys.readouterr().out


def test_susceptibility_to_stdout(capsys):
    code, out, _ = run(["susceptibility", "--preset", "fig2a", "--dmin", "-4", "--dmax", "4",
                        "--steps", "801"], capsys)
    assert code == 0
    lines = out.split("\n")
    assert lines[0] == "delta31,re_chi,im_chi,re_k,im_k"
    assert lines[-1] == "" and len(lines) == 803
    assert float(lines[1].split(",")[0]) == -4.0


def test_csv_formatting(tmp_path):
    path = tmp_path / "x.csv"
    write_csv(path, {"a": [0.1, 1 / 3], "flag": ["ok", "edge"]})
    raw = path.read_bytes()
    assert b"\r" not in raw
    assert raw.decode().splitlines() == ["a,flag", "0.10000000000000001,ok",
                                         "0.33333333333333331,edge"]


def test_config_error_exit_1(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"gamma31": -1.0}))
    code, _, err = run(["susceptibility", "--config", str(bad)], capsys)
    assert code == 1 and "gamma31" in err
    code, _, _ = run(["susceptibility", "--config", str(tmp_path / "missing.json")], capsys)
    assert code == 1


def test_grid_rejection_exit_1(tmp_path, short_config, capsys):
    cfg = json.loads(short_config.read_text())
    cfg["n_tau"] = 301
    short_config.write_text(json.dumps(cfg))
    code, _, err = run(["propagate", "--config", str(short_config), "--out",
                        str(tmp_path / "o")], capsys)
    assert code == 1 and "n_tau" in err
    assert not (tmp_path / "o" / MANIFEST).exists()


def test_solver_failure_exit_2(tmp_path, short_config, capsys, monkeypatch):
    from denseeit import propagation
    from denseeit.bloch import SolverError

    def boom(*a, **k):
        raise SolverError("diverged")

    monkeypatch.setattr(propagation, "propagate", boom)
    code, _, err = run(["propagate", "--config", str(short_config), "--out",
                        str(tmp_path / "o")], capsys)
    assert code == 2 and "diverged" in err
    assert not (tmp_path / "o" / MANIFEST).exists()


def test_propagate_outputs_and_manifest(tmp_path, short_config, capsys):
    out = tmp_path / "run"
    before = tree(tmp_path)
    code, _, _ = run(["propagate", "--config", str(short_config), "--out", str(out)], capsys)
    assert code == 0
    assert set(tree(tmp_path)) - set(before) == {"run", "run/field.csv", "run/metrics.json",
                                                  "run/manifest.json"}
    m = read_manifest(out)
    assert m["subcommand"] == "propagate" and m["version"] == __version__
    assert m["outputs"] == ["field.csv", "metrics.json"]
    assert m["config"]["k0z"] == 31.6 and "initial_state" in m["config"]
    assert len(m["input_hash"]) == 64 and m["timestamp"]
    # manifest written after every output
    mtimes = [(out / f).stat().st_mtime_ns for f in m["outputs"]]
    assert (out / MANIFEST).stat().st_mtime_ns >= max(mtimes)
    field = np.loadtxt(out / "field.csv", delimiter=",", skiprows=1)
    assert field.shape == (2 * 12001, 4)
    metrics = json.loads((out / "metrics.json").read_text())
    assert 0.5 < metrics["peak_ratio"] < 1.0


def test_rerun_is_byte_identical(tmp_path, short_config, capsys):
    runs = []
    for name in ("a", "b"):
        assert main(["propagate", "--config", str(short_config), "--out",
                     str(tmp_path / name)]) == 0
        runs.append(tmp_path / name)
    capsys.readouterr()
    assert (runs[0] / "field.csv").read_bytes() == (runs[1] / "field.csv").read_bytes()
    assert (runs[0] / "metrics.json").read_bytes() == (runs[1] / "metrics.json").read_bytes()
    assert read_manifest(runs[0])["input_hash"] == read_manifest(runs[1])["input_hash"]


def test_input_hash_tracks_config(tmp_path, short_config, capsys):
    for name in ("a", "b"):
        main(["susceptibility", "--config", str(short_config), "--out", str(tmp_path / name)])
    main(["susceptibility", "--preset", "fig4", "--out", str(tmp_path / "c")])
    capsys.readouterr()
    a, b, c = (read_manifest(tmp_path / n)["input_hash"] for n in "abc")
    assert a == b and a != c


def test_single_manifest_after_rerun(tmp_path, capsys):
    out = tmp_path / "s"
    for _ in range(2):
        assert main(["susceptibility", "--out", str(out)]) == 0
    capsys.readouterr()
    assert sorted(p.name for p in out.iterdir()) == ["manifest.json", "susceptibility.csv"]


def test_analyze_analytic_only(tmp_path, capsys):
    out = tmp_path / "an"
    code, _, _ = run(["analyze", "--preset", "fig4", "--analytic-only", "--out", str(out)],
                     capsys)
    assert code == 0
    m = read_manifest(out)
    assert m["outputs"] == ["analytic_envelope.csv", "metrics.json", "nsm.csv",
                            "polarization.csv"]
    metrics = json.loads((out / "metrics.json").read_text())
    assert metrics["closed_form"]["peak_phase"] == pytest.approx(0.118800673552743527, rel=1e-12)
    assert metrics["closed_form"]["width_sq"] == pytest.approx(550.082003270212824, rel=1e-12)


def test_analyze_with_numeric_run(tmp_path, short_config, capsys):
    out = tmp_path / "an"
    assert main(["analyze", "--config", str(short_config), "--out", str(out)]) == 0
    capsys.readouterr()
    metrics = json.loads((out / "metrics.json").read_text())
    assert metrics["numeric_vs_analytic_rel_Linf"] < 0.05
    assert (out / "numeric_envelope.csv").exists()


def test_scan_outputs(tmp_path, capsys):
    cfg = load_preset("fig3-baseline").replace(k0z=31.6, n_z=21, n_tau=12001,
                                               tau_half_width=150.0)
    path = tmp_path / "c.json"
    path.write_text(json.dumps(cfg.to_dict()))
    out = tmp_path / "scan"
    code, _, _ = run(["scan", "--config", str(path), "--gs-min", "1e-4", "--gs-max", "1e-1",
                      "--gs-steps", "3", "--trap-min", "0.5", "--trap-max", "0.99",
                      "--trap-steps", "2", "--workers", "1", "--out", str(out)], capsys)
    assert code == 0
    lines = (out / "map.csv").read_text().splitlines()
    assert lines[0] == "gs,trap_ratio,peak_ratio,flag" and len(lines) == 7
    assert all(line.endswith(",ok") for line in lines[1:])
    contours = json.loads((out / "contours.json").read_text())
    assert set(contours) == {"0.50", "0.25", "0.01"}


def test_selftest_subset(tmp_path, capsys):
    code, out, _ = run(["selftest", "--criteria", "1,10", "--out", str(tmp_path / "st")],
                       capsys)
    assert code == 0
    assert "[PASS]  1" in out and "[PASS] 10" in out and "2/2 criteria passed" in out
    report = json.loads((tmp_path / "st" / "selftest.json").read_text())
    assert [r["number"] for r in report] == [1, 10]


def test_selftest_unknown_criterion(capsys):
    code, _, err = run(["selftest", "--criteria", "99"], capsys)
    assert code == 1 and "99" in err


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "denseeit", "presets", "list"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert proc.stdout.split() == list(PRESET_NAMES)
    proc = subprocess.run([sys.executable, "-m", "denseeit", "nonsense"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 1 and "usage" in proc.stderr
