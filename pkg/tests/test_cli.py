import json
import subprocess
import sys


import numpy as np
import pytest

import becpde.lab as lab
from becpde.cli import (
    ConfigError,
    build_initial_condition,
    cmd_run,
    cmd_steady,
    cmd_sweep,
    cmd_verify,
    load_config,
    main,
    parse_grid,
    parse_params,
)

BASE = """
[params]
n = 2.0
alpha = 6.5
beta = 0.5
gamma = {gamma}
L = 1.0
eps = 0.05
k = 4.0

[grid]
N = 48
p = 2.0

[control]
dt_init = 1e-7
dt_max = 1e-5
newton_tol = 1e-12

[ic]
preset = {preset}

[run]
t_end = 2e-5

[output]
snapshot_stride = 10
"""


def write_cfg(tmp_path, text, name="cfg.ini"):
    path = tmp_path / name
    path.write_text(text)
    return path


def run_cli(*argv):
    return subprocess.run(
        [sys.executable, "-m", "becpde", *argv], capture_output=True, text=True
    )


class TestConfig:
    def test_missing_file(self, tmp_path):
        assert main(["run", str(tmp_path / "none.ini")]) == 2

    def test_parse_roundtrip(self, tmp_path):
        cfg = load_config(write_cfg(tmp_path, BASE.format(gamma="0.0", preset="constant")))
        p = parse_params(cfg)
        assert p.N == 48 and p.eps == 0.05
        g = parse_grid(cfg, p)
        assert g.N == 48 and g.p == 2.0

    def test_cosine_must_stay_positive(self, tmp_path):
        text = BASE.format(gamma="0.0", preset="cosine\namplitude = 2.0")
        cfg = load_config(write_cfg(tmp_path, text))
        p = parse_params(cfg)
        g = parse_grid(cfg, p)
        with pytest.raises(ConfigError):
            build_initial_condition(cfg, p, g)

    def test_file_preset(self, tmp_path):
        cfg = load_config(write_cfg(tmp_path, BASE.format(gamma="0.0", preset="file")))
        p = parse_params(cfg)
        g = parse_grid(cfg, p)
        data = tmp_path / "ic.txt"
        np.savetxt(data, np.full(g.nnodes, 2.0))
        cfg["ic"]["path"] = str(data)
        u0 = build_initial_condition(cfg, p, g)
        assert np.all(u0 == 2.0)


class TestRunCommand:
    def test_constant_completes(self, tmp_path):
        cfg = load_config(write_cfg(tmp_path, BASE.format(gamma="0.0", preset="constant")))
        out = tmp_path / "out"
        assert cmd_run(cfg, out) == 0
        summary = json.loads((out / "summary.json").read_text())
        assert summary["stop"]["kind"] == "Completed"
        assert (out / "snapshots.csv").exists()
        assert (out / "diagnostics.csv").exists()
        assert (out / "schema.md").exists()

    def test_invalid_gamma_exit_2(self, tmp_path):
        path = write_cfg(tmp_path, BASE.format(gamma="1.0", preset="constant"))
        proc = run_cli("run", str(path), "--out", str(tmp_path / "o"))
        assert proc.returncode == 2
        err = json.loads(proc.stdout)
        assert "gamma.upper" in err["error"]["violations"]

    def test_rerun_byte_identical(self, tmp_path):
        path = write_cfg(tmp_path, BASE.format(gamma="0.0", preset="cosine"))
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(["run", str(path), "--out", str(a)]) == 0
        assert main(["run", str(path), "--out", str(b)]) == 0
        for name in ("snapshots.csv", "diagnostics.csv", "summary.json", "schema.md"):
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_powerlaw_preset(self, tmp_path):
        text = BASE.format(gamma="0.0", preset="powerlaw\nsigma = 1.5")
        cfg = load_config(write_cfg(tmp_path, text))
        out = tmp_path / "out"
        assert cmd_run(cfg, out) == 0
        summary = json.loads((out / "summary.json").read_text())
        assert summary["stop"]["kind"] == "Completed"
        assert summary["regularization"]["lambda"] == pytest.approx(1.0 / 1.05)

    def test_diagnostics_columns(self, tmp_path):
        cfg = load_config(write_cfg(tmp_path, BASE.format(gamma="0.0", preset="cosine")))
        out = tmp_path / "out"
        cmd_run(cfg, out)
        header = (out / "diagnostics.csv").read_text().splitlines()[0]
        assert header == (
            "t,mass_beta,grad_energy,diss1,diss2,diss3,diss4,diss5,"
            "sup_u,sup_bound,holder_C,deadcore,energy,entropy"
        )


VERIFY = """
[params]
eps = 0.05

[verify]
corpus = {corpus}
etas = 0.1 0.5 0.9
"""


class TestVerifyCommand:
    def test_empty_corpus(self, tmp_path):
        cfg = load_config(write_cfg(tmp_path, VERIFY.format(corpus=0)))
        out = tmp_path / "v"
        assert cmd_verify(cfg, out) == 0
        assert (out / "inequalities.jsonl").read_text() == ""

    def test_small_corpus_passes(self, tmp_path):
        cfg = load_config(write_cfg(tmp_path, VERIFY.format(corpus=10)))
        out = tmp_path / "v"
        assert cmd_verify(cfg, out) == 0
        lines = (out / "inequalities.jsonl").read_text().splitlines()
        # 5 inequalities x 3 etas + 2 pointwise, per function
        assert len(lines) == 10 * (5 * 3 + 2)
        assert all(json.loads(ln)["passed"] for ln in lines)

    def test_injected_constant_bug_detected(self, tmp_path, monkeypatch):
        monkeypatch.setattr(
            lab, "const_ux2", lambda eta, e, n: (1.0 / eta + (e - 4.0) ** 2) / (n + 1.0) ** 2 / 10.0
        )
        cfg = load_config(write_cfg(tmp_path, VERIFY.format(corpus=50)))
        out = tmp_path / "v"
        assert cmd_verify(cfg, out) == 1
        summary = json.loads((out / "summary.json").read_text())
        assert summary["failures"] >= 1


STEADY = """
[params]
eps = 0.05

[grid]
p = 1.0

[steady]
sigmas = 1.5
grids = 256 512
"""


class TestSteadyCommand:
    def test_refinement_ratio(self, tmp_path):
        cfg = load_config(write_cfg(tmp_path, STEADY))
        out = tmp_path / "s"
        assert cmd_steady(cfg, out) == 0
        summary = json.loads((out / "summary.json").read_text())
        ratios = summary["decay_ratios"]["1.5"]
        assert ratios[0] >= 3.5
        assert summary["exceptional_sigmas"] == [0.0, 1.0, 7.0 / 6.0, 1.5]


CONT = """
[params]
eps = 0.2

[grid]
N = 48
p = 2.0

[control]
dt_init = 1e-7
dt_max = 1e-5

[ic]
preset = cosine

[continuation]
eps_list = 0.2 0.1 0.05
t_end = 1e-4
n_snap = 4
"""


class TestContinuationCommand:
    def test_distances_decrease(self, tmp_path):
        cfg = load_config(write_cfg(tmp_path, CONT))
        out = tmp_path / "c"
        assert main(["continuation", str(write_cfg(tmp_path, CONT, "c.ini")), "--out", str(out)]) == 0
        rows = (out / "index.csv").read_text().splitlines()[1:]
        dists = [float(r.split(",")[3]) for r in rows]
        assert dists[0] > dists[1]
        summary = json.loads((out / "summary.json").read_text())
        assert summary["cauchy"] is True
        assert (out / "eps_000" / "snapshots.csv").exists()


SWEEP = """
[params]
eps = 0.05

[grid]
N = 48

[control]
dt_init = 1e-7
dt_max = 1e-5
newton_tol = 1e-12

[ic]
preset = constant

[run]
t_end = 2e-5

[output]
snapshot_stride = 10

[sweep]
max_workers = 1
params.eps = 0.05
"""


class TestSweepCommand:
    def test_single_cell_matches_plain_run(self, tmp_path):
        sweep_cfg = load_config(write_cfg(tmp_path, SWEEP, "s.ini"))
        out = tmp_path / "sw"
        assert cmd_sweep(sweep_cfg, out) == 0
        plain_cfg = load_config(write_cfg(tmp_path, BASE.format(gamma="0.0", preset="constant")))
        plain_out = tmp_path / "plain"
        cmd_run(plain_cfg, plain_out)
        a = (out / "cell_000" / "snapshots.csv").read_bytes()
        b = (plain_out / "snapshots.csv").read_bytes()
        assert a == b

    def test_grid_of_cells(self, tmp_path):
        text = SWEEP.replace("params.eps = 0.05", "params.eps = 0.1 0.05\nic.value = 1.0 2.0")
        cfg = load_config(write_cfg(tmp_path, text, "s2.ini"))
        out = tmp_path / "sw2"
        assert cmd_sweep(cfg, out) == 0
        rows = (out / "index.csv").read_text().splitlines()
        assert rows[0] == "cell,ic.value,params.eps,stop_kind,exit_code"
        assert len(rows) == 5

    def test_bad_cell_recorded(self, tmp_path):
        text = SWEEP.replace("params.eps = 0.05", "params.gamma = 0.0 1.0")
        cfg = load_config(write_cfg(tmp_path, text, "s3.ini"))
        out = tmp_path / "sw3"
        assert cmd_sweep(cfg, out) == 1
        assert (out / "cell_001" / "error.json").exists()
