import json
import math

import pytest

from hesscap.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr()


def test_cap_newtonian(capsys):
    code, out = run(capsys, "cap", "--n", "3", "--k", "1", "--r", "1", "--R", "2")
    assert code == 0
    vals = dict(line.split() for line in out.out.splitlines() if not line.startswith("note"))
    for key in ("closed_form", "flux", "variational"):
        assert float(vals[key]) == pytest.approx(8 * math.pi, rel=5e-3)


def test_cap_log_branch(capsys):
    code, out = run(capsys, "cap", "--n", "4", "--k", "2", "--r", "1", "--R", repr(math.e))
    assert code == 0
    assert float(out.out.split()[1]) == pytest.approx(3 * math.pi ** 2, rel=1e-10)
    assert "log branch" in out.out


def test_cap_guard(capsys):
    code, out = run(capsys, "cap", "--n", "5", "--k", "3", "--r", "1", "--R", "2")
    assert code != 0
    assert "unsupported: k exceeds n/2" in out.err


def test_unknown_id_is_usage_error(capsys):
    with pytest.raises(SystemExit) as info:
        main(["verify", "nonsense"])
    assert info.value.code == 2


def test_verify_writes_reports(tmp_path, capsys):
    code, out = run(capsys, "verify", "cap-defs", "--n", "3", "--k", "1", "--r", "1", "--R", "2", "--m", "512",
                    "--out", str(tmp_path))
    assert code == 0 and out.out.startswith("PASS")
    rep = json.loads((tmp_path / "cap-defs.json").read_text())
    assert rep["schema_version"] == 1 and rep["passed"]
    assert (tmp_path / "cap-defs.csv").read_text().startswith("definition,value,ratio")


def test_verify_exit_code_follows_pass_flag(tmp_path, capsys):
    code, _ = run(capsys, "verify", "moser-trudinger", "--n", "4", "--alpha-factor", "1.1", "--out", str(tmp_path))
    assert code == 1
    code, _ = run(capsys, "verify", "isocap", "--n", "5", "--k", "2", "--q", "15", "--out", str(tmp_path))
    assert code == 0


def test_env_var_output_dir(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("HESSCAP_OUT", str(tmp_path / "env"))
    code, _ = run(capsys, "verify", "wiener", "--n", "3")
    assert code == 0 and (tmp_path / "env" / "wiener.json").exists()


def test_config_file_with_flag_override(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n": 4, "k": 1, "r": 1.0, "R": 3.0, "out": str(tmp_path / "a")}))
    code, _ = run(capsys, "verify", "wiener", "--config", str(cfg), "--R", "2")
    assert code == 0
    rep = json.loads((tmp_path / "a" / "wiener.json").read_text())
    assert rep["params"] == {"n": 4, "r": 1.0, "R": 2.0}
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"colour": 1}))
    with pytest.raises(SystemExit):
        main(["cap", "--config", str(bad)])


def test_weak_type_deterministic(tmp_path, capsys):
    outs = []
    for name in ("one", "two"):
        code, _ = run(capsys, "verify", "weak-type", "--n", "5", "--k", "2", "--profiles", "8", "--seed", "7",
                      "--out", str(tmp_path / name))
        assert code == 0
        outs.append(((tmp_path / name / "weak-type.json").read_bytes(), (tmp_path / name / "weak-type.csv").read_bytes()))
    assert outs[0] == outs[1]


@pytest.mark.parametrize("curve", ["capacity-vs-r", "weak-ratio-vs-t", "isocap-vs-aspect"])
def test_sweeps(tmp_path, capsys, curve):
    code, _ = run(capsys, "sweep", curve, "--n", "5", "--k", "2", "--r", "0.5", "--R", "1", "--out", str(tmp_path))
    assert code == 0
    rows = (tmp_path / f"{curve}.csv").read_text().splitlines()
    schema = json.loads((tmp_path / f"{curve}.schema.json").read_text())
    assert rows[0].split(",") == [c["name"] for c in schema["columns"]]
    if curve == "capacity-vs-r":
        caps = [float(line.split(",")[1]) for line in rows[1:]]
        assert all(b > a for a, b in zip(caps, caps[1:]))


def test_mt_sweep_crosses_alpha0(tmp_path, capsys):
    code, _ = run(capsys, "sweep", "mt-vs-alpha", "--n", "4", "--points", "6", "--lo", "0.6", "--hi", "1.1",
                  "--out", str(tmp_path))
    assert code == 0
    rows = [line.split(",") for line in (tmp_path / "mt-vs-alpha.csv").read_text().splitlines()[1:]]
    growth = {float(a): float(g) for a, _, g in rows}
    assert growth[0.6] < 1 and growth[1.1] > 1


def test_sweep_empty_range(tmp_path):
    with pytest.raises(SystemExit) as info:
        main(["sweep", "capacity-vs-r", "--lo", "0.5", "--hi", "0.1", "--out", str(tmp_path)])
    assert info.value.code == 2
