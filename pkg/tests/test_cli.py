import csv
import json
import os
import subprocess
import sys

import pytest

from synclab.cli import run

FAST = {
    "orbit": {"n": 100},
    "integrate": {"T": 1.0},
    "sync-test": {"n_steps": 100, "n_pairs": 4},
    "lyapunov": {"n": 1000},
    "linsync": {"search": True, "budget": 200},
    "annulus": {"annuli": [[3.0, 4.0], [1.0, 2.0]], "check": "type"},
    "certify": {"n_rotations": 2},
    "perturb-sweep": {"eps_list": [1e-5, 1e-1], "n_samples": 2, "n_rotations": 1,
                      "critical": {"direction": "radial_in", "eps_lo": 1e-5, "eps_hi": 1e-1, "iters": 4}},
}


def write_json(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


def invoke(tmp_path, command, cfg=None, name="out", extra=()):
    out = tmp_path / name
    argv = [command, "--out", str(out), *extra]
    if cfg is not None:
        argv += ["--config", write_json(tmp_path / f"{name}.json", cfg)]
    return run(argv), out


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def outputs(out):
    man = json.loads((out / "manifest.json").read_text())
    return man, {name: (out / name).read_bytes() for name in man["outputs"]}


def test_orbit_and_integrate_row_counts(tmp_path):
    code, out = invoke(tmp_path, "orbit")
    assert code == 0
    rows = read_csv(out / "orbit.csv")
    assert len(rows) == 101 and list(rows[0]) == ["n", "x0", "x1"]
    code, out = invoke(tmp_path, "integrate", {"T": 10.0}, name="lz")
    assert code == 0 and len(read_csv(out / "integrate.csv")) == 10_001


@pytest.mark.parametrize("command", sorted(FAST))
def test_replay_from_manifest_is_byte_identical(tmp_path, command):
    code, first = invoke(tmp_path, command, FAST[command], name="a")
    assert code == 0
    man, files = outputs(first)
    assert man["command"] == command and man["manifest_version"] == 1 and files
    code = run([command, "--config", str(first / "manifest.json"), "--out", str(tmp_path / "b")])
    assert code == 0
    man2, files2 = outputs(tmp_path / "b")
    assert files2 == files
    assert man2["config"] == man["config"]


def test_sync_test_outputs(tmp_path):
    code, out = invoke(tmp_path, "sync-test", FAST["sync-test"])
    verdict = json.loads((out / "verdict.json").read_text())
    assert code == 0 and verdict["verdict"] == "synchronizing"
    rows = read_csv(out / "distances.csv")
    assert list(rows[0]) == ["pair_id", "n", "distance"]


def test_verdict_never_changes_exit_code(tmp_path):
    cfg = {"system": {"system": "polar"}, "structure": None, "mode": "absolute",
           "drives": [{"kind": "constant", "value": 0.0}], "n_steps": 3000, "init_box": [-5.0, 5.0]}
    code, out = invoke(tmp_path, "sync-test", cfg)
    assert code == 0
    assert json.loads((out / "verdict.json").read_text())["verdict"] == "non_synchronizing"


def test_certify_and_annulus_summaries(tmp_path):
    code, out = invoke(tmp_path, "certify", {"n_rotations": 0})
    cert = json.loads((out / "certify.json").read_text())
    assert code == 0 and cert["certificates"][0]["verdict"] == "non_synchronizing_for_structure"
    code, out = invoke(tmp_path, "annulus", {"annuli": [[3.0, 4.0]]}, name="an")
    assert code == 0
    report = json.loads((out / "annulus.json").read_text())
    assert report["annuli"][0]["type_Q"] is True


def test_linsync_and_lyapunov(tmp_path):
    code, out = invoke(tmp_path, "linsync")
    rep = json.loads((out / "linsync.json").read_text())
    assert code == 0 and rep["report"]["synchronizable"] is True
    code, out = invoke(tmp_path, "lyapunov", name="ly")
    assert code == 0 and json.loads((out / "manifest.json").read_text())["summary"]["conditional_lyapunov"] == -50.0


def test_divergence_exits_3_with_partial_output(tmp_path):
    code, out = invoke(tmp_path, "orbit", {"x0": [10.0, 0.0], "n": 100})
    assert code == 3
    man = json.loads((out / "manifest.json").read_text())
    assert man["partial"] is True
    assert len(read_csv(out / "orbit.csv")) == man["summary"]["rows"] < 101


@pytest.mark.parametrize("cfg", [
    {"no_such_key": 1},
    {"system": {"system": "nope"}},
    {"n": -1},
])
def test_invalid_config_exits_2(tmp_path, cfg):
    code, _ = invoke(tmp_path, "orbit", cfg)
    assert code == 2


def test_bad_config_file_and_wrong_manifest(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(["orbit", "--config", str(bad), "--out", str(tmp_path / "x")]) == 2
    invoke(tmp_path, "orbit", name="o")
    assert run(["integrate", "--config", str(tmp_path / "o" / "manifest.json"), "--out", str(tmp_path / "y")]) == 2


def test_plot(tmp_path):
    _, src = invoke(tmp_path, "integrate", {"T": 1.0}, name="lz")
    code = run(["plot", str(src / "integrate.csv"), "--x", "t", "--y", "x0,x2", "--out", str(tmp_path / "p")])
    assert code == 0
    svg = (tmp_path / "p" / "plot.svg").read_text()
    assert svg.startswith("<svg") and svg.count("<polyline") >= 2
    assert run(["plot", str(src / "integrate.csv"), "--x", "t", "--y", "nope", "--out", str(tmp_path / "q")]) == 2
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    assert run(["plot", str(empty), "--x", "t", "--y", "x0", "--out", str(tmp_path / "r")]) == 2


def test_seed_flag_changes_config(tmp_path):
    invoke(tmp_path, "perturb-sweep", FAST["perturb-sweep"], name="s1", extra=("--seed", "5"))
    man = json.loads((tmp_path / "s1" / "manifest.json").read_text())
    assert man["config"]["seed"] == 5


def test_module_entry_point(tmp_path):
    env = dict(os.environ)
    res = subprocess.run([sys.executable, "-m", "synclab", "--version"], capture_output=True, text=True, env=env)
    assert res.returncode == 0 and "synclab" in res.stdout
