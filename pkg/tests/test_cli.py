import json

import numpy as np
import pytest

from spskit.cli import main
from spskit.sim import read_records


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_repro_fig1(capsys):
    code, out, _ = run(capsys, "repro", "fig1")
    assert code == 0
    assert out.splitlines() == ["1,4,6,4,1", "oracle_match=pass"]


def test_path_min_and_verdict(capsys):
    code, out, _ = run(capsys, "path", "min", "--model", "heis", "--n", "8", "--state", "00001111")
    assert code == 0 and out.startswith("11110000 depth=16")
    code, out, _ = run(capsys, "path", "verdict", "--model", "heis", "--n", "6",
                       "--init", "101010", "--state", "111000")
    assert code == 0 and out.strip() == "accept"
    code, out, _ = run(capsys, "path", "verdict", "--model", "heis", "--n", "6",
                       "--init", "101010", "--state", "111100")
    assert code == 0 and out.strip() == "reject"


def test_path_failrate_csv(capsys):
    code, out, _ = run(capsys, "path", "failrate", "--model", "heis", "--n", "6", "--mu", "1", "2")
    lines = [ln for ln in out.splitlines() if not ln.startswith("#")]
    assert code == 0 and lines[0] == "n,mu,failures,total,rate,ci_low,ci_high"
    assert lines[1].startswith("6,1,0,64,")


def test_sps_commands(capsys, tmp_path):
    code, out, _ = run(capsys, "sps", "partition", "--model", "hop", "--n", "4", "--sizes-only")
    assert code == 0 and "6" in out
    f = tmp_path / "g.txt"
    code, _, _ = run(capsys, "sps", "enum", "--model", "heis", "--n", "4", "--init", "1100", "--out", str(f))
    kets = [ln for ln in f.read_text().splitlines() if not ln.startswith("#")]
    assert code == 0 and len(kets) == 6


def test_editmap_build(capsys, tmp_path):
    f = tmp_path / "maps.json"
    code, _, _ = run(capsys, "editmap", "build", "--model", "t6", "--n", "5", "--out", str(f))
    assert code == 0 and json.loads(f.read_text())


def test_sim_and_metrics(capsys, tmp_path):
    rec = tmp_path / "shots.jsonl"
    code, _, _ = run(capsys, "sim", "run", "--model", "heis", "--n", "6", "--init", "101010",
                     "--steps", "3", "--shots", "200", "--eps3", "0.01", "--seed", "4",
                     "--out", str(rec))
    header, recs = read_records(rec)
    assert code == 0 and header["base_seed"] == 4 and header["version"]
    assert [r.p for r in recs] == [0, 1, 2, 3] and all(len(r) == 200 for r in recs)
    assert np.all(recs[0].shots[recs[0].shots != recs[0].shots[0]] >= 0)
    gp = tmp_path / "curve.dat"
    code, out, _ = run(capsys, "metrics", "curve", "--record", str(rec), "--mu", "1", "exact",
                       "--emit-gnuplot", str(gp))
    body = [ln for ln in out.splitlines() if not ln.startswith("#")]
    assert code == 0 and body[0].startswith("p,F_raw,F_ps_mu1,F_ps_exact")
    assert len(body) == 5 and gp.exists()


def test_oracle_verify(capsys):
    code, out, _ = run(capsys, "oracle", "verify", "--model", "f4", "--n", "7")
    assert code == 0 and out.strip().endswith("PASS")


@pytest.mark.parametrize("argv", [
    ["sim", "run", "--model", "heis", "--n", "4", "--steps", "1", "--shots", "5"],
    ["path", "min", "--model", "heis", "--n", "4", "--state", "01x0"],
    ["path", "min", "--model", "heis", "--n", "99", "--state", "0"],
    ["sim", "run", "--model", "heis", "--n", "4", "--init", "0000", "--steps", "1",
     "--shots", "5", "--eps3", "0.9", "--out", "x.jsonl"],
    ["frobnicate"],
])
def test_validation_errors_exit_1(capsys, argv):
    assert main(argv) == 1


def test_compute_errors_exit_2(capsys):
    assert main(["oracle", "verify", "--model", "heis", "--n", "11"]) == 2
    assert main(["sps", "enum", "--model", "heis", "--n", "12", "--init", "111111000000",
                 "--cap", "10"]) == 2


def test_empty_postselection_exits_2(capsys, tmp_path):
    rec = tmp_path / "shots.jsonl"
    header = {"model": "heis", "n": 4, "init": "1100", "eps": 0.0, "base_seed": 0}
    lines = [json.dumps({"p": 1, "shot": s, "ket": "0000"}) for s in range(50)]
    rec.write_text(json.dumps(header) + "\n" + "\n".join(lines) + "\n")
    assert main(["metrics", "curve", "--record", str(rec)]) == 2


def test_threads_env_validation(capsys, monkeypatch):
    monkeypatch.setenv("SPSKIT_THREADS", "many")
    assert main(["repro", "fig1"]) == 1
