import json
import math
import os
import subprocess
import sys

import numpy as np
import pytest

from bri2d.cli import EXIT_OK, EXIT_USAGE, main
from bri2d.io import read_jump_csv, svg_polylines


def _run(tmp_path, *args, name="out"):
    out = tmp_path / name
    code = main(list(args) + ["--out", str(out)])
    return code, (out.read_bytes() if out.exists() else b"")


def test_moustache_svg(tmp_path):
    code, data = _run(tmp_path, "moustache", "--trunc", "50", "--seed", "7", "--format", "svg")
    assert code == EXIT_OK
    text = data.decode()
    assert text.count("<circle") == 1 and text.count("<polyline") == 2
    for p in svg_polylines(text):
        assert np.hypot(p[:, 0], p[:, 1]).min() > 1.0


def test_moustache_json_deterministic(tmp_path):
    a = _run(tmp_path, "moustache", "--trunc", "5", "--seed", "3", "--format", "json", name="a")[1]
    b = _run(tmp_path, "moustache", "--trunc", "5", "--seed", "3", "--format", "json", name="b")[1]
    c = _run(tmp_path, "moustache", "--trunc", "5", "--seed", "4", "--format", "json", name="c")[1]
    assert a == b and a != c
    assert json.loads(a)["format"] == "bri2d-moustache/1"


def test_moustache_rejects_trunc_one(tmp_path):
    assert _run(tmp_path, "moustache", "--trunc", "1.0")[0] == EXIT_USAGE


def test_bri_item_count(tmp_path):
    counts = []
    for seed in range(200):
        code, data = _run(tmp_path, "bri", "--alpha", "1", "--window", "1", "50", "--levels-only",
                          "--seed", str(seed))
        assert code == EXIT_OK
        counts.append(len(json.loads(data)["items"]))
    mean = 2 * math.log(50)
    assert abs(np.mean(counts) - mean) <= 4 * math.sqrt(mean / len(counts))


def test_bri_svg_elements(tmp_path):
    code, data = _run(tmp_path, "bri", "--alpha", "1", "--window", "1", "20", "--format", "svg", "--seed", "2")
    assert code == EXIT_OK
    text = data.decode()
    code, js = _run(tmp_path, "bri", "--alpha", "1", "--window", "1", "20", "--seed", "2", name="js")
    items = json.loads(js)["items"]
    assert text.count("<circle") == 1
    assert text.count("<polyline") == sum(len(it["branches"]) for it in items) == 2 * len(items)


@pytest.mark.parametrize("args", [["--alpha", "0"], ["--alpha", "1", "--b", "-1"],
                                  ["--alpha", "1", "--window", "5", "2"], ["--alpha", "1", "--trunc", "0.5"]])
def test_bri_usage_errors(tmp_path, args):
    assert _run(tmp_path, "bri", *args)[0] == EXIT_USAGE


def test_capacity_disk(tmp_path):
    code, data = _run(tmp_path, "capacity", "--disk", "2.71828")
    d = json.loads(data)
    assert code == EXIT_OK and d["method"] == "closed-form"
    assert d["value"] == pytest.approx(0.63662, abs=5e-6)


def test_capacity_blister_pair(tmp_path):
    code, data = _run(tmp_path, "capacity", "--pair", "1", "0", "1.4142135")
    assert code == EXIT_OK
    assert json.loads(data)["value"] == pytest.approx(0.27470, abs=2e-5)


def test_capacity_usage_errors(tmp_path):
    assert _run(tmp_path, "capacity", "--pair", "0", "0", "0.5")[0] == EXIT_USAGE
    assert _run(tmp_path, "capacity", "--disk", "0.5")[0] == EXIT_USAGE
    assert _run(tmp_path, "capacity", "--disks", "1,2")[0] == EXIT_USAGE
    assert main(["capacity"]) == EXIT_USAGE


def test_capacity_disk_list_matches_pair(tmp_path):
    a = json.loads(_run(tmp_path, "capacity", "--disks", "0,0,1;30,0,1", name="a")[1])
    b = json.loads(_run(tmp_path, "capacity", "--pair", "30", "0", "1", name="b")[1])
    assert a["value"] == pytest.approx(b["value"], rel=1e-3)


def test_capacity_monte_carlo(tmp_path):
    code, data = _run(tmp_path, "capacity", "--disk", "2.71828", "--method", "monte-carlo", "--samples", "2000")
    d = json.loads(data)
    assert code == EXIT_OK and d["method"] == "monte-carlo"
    assert d["value"] == pytest.approx(2 / math.pi, rel=0.05)


def test_phi_nonincreasing(tmp_path):
    code, data = _run(tmp_path, "phi", "--x", "0", "0", "--alpha", "0.1", "10", "--seed", "1")
    assert code == EXIT_OK
    meta, t, v = read_jump_csv(data.decode())
    assert meta["subcommand"] == "phi" and meta["seed"] == "1"
    assert np.all(np.diff(v) <= 0) and t[0] == 0.1 and t[-1] == 10.0


def test_phi_terminal_value_large_alpha(tmp_path):
    code, data = _run(tmp_path, "phi", "--x", "0.5", "0", "--alpha", "1", "1000000")
    _, _, v = read_jump_csv(data.decode())
    assert abs(v[-1] - 0.5) < 1e-2


@pytest.mark.xfail(strict=True, reason="Phi_x(1000) - 0.5 is of order 1e-2 at |x| = 0.5")
def test_phi_terminal_value_moderate_alpha(tmp_path):
    _, data = _run(tmp_path, "phi", "--x", "0.5", "0", "--alpha", "1", "1000")
    _, _, v = read_jump_csv(data.decode())
    assert abs(v[-1] - 0.5) < 1e-2


def test_phi_json(tmp_path):
    code, data = _run(tmp_path, "phi", "--x", "2", "0", "--alpha", "1", "5", "--format", "json")
    d = json.loads(data)
    assert code == EXIT_OK and d["format"] == "bri2d-jumppath/1" and d["process"] == "phix"


def test_phi_usage_error(tmp_path):
    assert _run(tmp_path, "phi", "--alpha", "5", "1")[0] == EXIT_USAGE


def test_y_stationary_start(tmp_path):
    starts = []
    for seed in range(300):
        code, data = _run(tmp_path, "y", "--beta", "0", "10", "--stationary", "--seed", str(seed))
        assert code == EXIT_OK
        starts.append(read_jump_csv(data.decode())[2][0])
    from bri2d.distance_process import gumbel_neg_cdf
    from bri2d.stats import ks_one_sample
    assert ks_one_sample(starts, gumbel_neg_cdf, 0.01).passed


def test_y_fixed_start(tmp_path):
    code, data = _run(tmp_path, "y", "--beta", "0", "2", "--y0", "-1.5")
    meta, t, v = read_jump_csv(data.decode())
    assert code == EXIT_OK and v[0] == -1.5 and meta["start"] == "-1.5"
    assert _run(tmp_path, "y", "--beta", "2", "0")[0] == EXIT_USAGE


def test_verify_quick_suite(tmp_path):
    code, data = _run(tmp_path, "verify", "phi0", "--budget", "quick")
    d = json.loads(data)
    assert code == EXIT_OK and d["pass"] and d["results"][0]["suite"] == "phi0"


def test_verify_unknown_suite(tmp_path, capsys):
    assert _run(tmp_path, "verify", "nosuch")[0] == EXIT_USAGE
    assert "phi0" in capsys.readouterr().err


def test_workers_do_not_change_output(tmp_path):
    a = _run(tmp_path, "bri", "--alpha", "1", "--window", "1", "10", "--seed", "5", "--workers", "1", name="a")[1]
    b = _run(tmp_path, "bri", "--alpha", "1", "--window", "1", "10", "--seed", "5", "--workers", "3", name="b")[1]
    assert a == b
    assert _run(tmp_path, "bri", "--alpha", "1", "--workers", "0")[0] == EXIT_USAGE


def test_every_subcommand_has_common_flags(capsys):
    for sub in ("moustache", "bri", "capacity", "phi", "y", "verify"):
        assert main([sub, "--help"]) == EXIT_OK
        text = capsys.readouterr().out
        for flag in ("--seed", "--format", "--out"):
            assert flag in text


def test_console_script_and_env_seed(tmp_path):
    env = dict(os.environ, BRI2D_SEED="99")
    cmd = [sys.executable, "-m", "bri2d.cli", "phi", "--alpha", "1", "2"]
    a = subprocess.run(cmd, env=env, capture_output=True, check=True).stdout
    b = subprocess.run(cmd + ["--seed", "99"], capture_output=True, check=True).stdout
    assert a == b and a.startswith(b"# bri2d phi v1 seed=99")
    bad = subprocess.run([sys.executable, "-m", "bri2d.cli", "bogus"], capture_output=True)
    assert bad.returncode == EXIT_USAGE
