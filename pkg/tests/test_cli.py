import json
import math

import numpy as np
import pytest

from nodal_lab import geometry as geo
from nodal_lab import radial as rad
from nodal_lab.cli import RunConfig, main


def run(args):
    return main([str(a) for a in args])


def test_config_roundtrip():
    cfg = RunConfig(domain="annulus", q=1.25, radii=[0.3, 0.9], nr=16,
                    ntheta=32, seed=5)
    again = RunConfig.from_dict(cfg.to_dict())
    assert again == cfg


def test_config_rejects_unknown_keys():
    with pytest.raises(ValueError, match="unknown config key: 'qq'"):
        RunConfig.from_dict({"qq": 3})


def test_malformed_config_exits_one(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"domain": "disc", "qq": 3}')
    code = run(["solve", "--config", bad, "--out", tmp_path / "o"])
    assert code == 1
    assert "qq" in capsys.readouterr().err


def test_solve_interval_and_verify(tmp_path, capsys):
    out = tmp_path / "run"
    code = run(["solve", "--domain", "interval", "--q", 1, "--n", 512,
                "--seed", 3, "--starts", 2, "--out", out])
    assert code == 0
    report = json.loads((out / "report.json").read_text())
    assert report["energy"] == pytest.approx(-1.0 / 3.0, abs=1e-3)
    assert report["converged"] is True
    assert report["domain"]["kind"] == "interval"
    assert report["seed"] == 3
    assert "version" in report
    assert (out / "field.csv").exists()
    assert (out / "diagnostics.json").exists()
    assert (out / "zero_curve.csv").exists()

    assert run(["verify", out / "report.json"]) == 0
    # mismatched exponent must fail the residual thresholds
    assert run(["verify", out / "report.json", "--q", 1.5]) == 2
    # unreadable dump
    assert run(["verify", tmp_path / "missing.json"]) == 1


def test_solve_deterministic_bytes(tmp_path):
    args = ["solve", "--domain", "interval", "--q", 1.25, "--n", 256,
            "--seed", 9, "--starts", 2]
    run(args + ["--out", tmp_path / "a"])
    run(args + ["--out", tmp_path / "b"])
    for name in ("report.json", "field.csv", "diagnostics.json", "zero_curve.csv"):
        assert (tmp_path / "a" / name).read_bytes() == \
            (tmp_path / "b" / name).read_bytes()


def test_radial_command(tmp_path, capsys):
    out = tmp_path / "rad"
    assert run(["radial", "--N", 2, "--q", 1, "--out", out]) == 0
    printed = capsys.readouterr().out
    m2 = -math.pi * (-1.0 / 16.0 + math.log(2.0) / 8.0)
    assert f"m_r = {m2:.7f}" in printed
    report = json.loads((out / "radial_report.json").read_text())
    assert report["m_r"] == pytest.approx(m2, abs=1e-15)
    assert report["closed_form_sup_error"] <= 1e-6
    assert abs(report["shoot"]["du_at_1"]) <= 1e-8
    assert report["h_monotone"]["monotone"] is True
    assert (out / "profile.csv").exists()


def test_radial_command_invalid_inputs(tmp_path):
    assert run(["radial", "--N", 1, "--out", tmp_path]) == 1
    assert run(["radial", "--N", 3, "--q", 2.5, "--out", tmp_path]) == 1


def test_radial_command_q15(tmp_path):
    out = tmp_path / "rad15"
    assert run(["radial", "--N", 2, "--q", 1.5, "--out", out]) == 0
    report = json.loads((out / "radial_report.json").read_text())
    assert abs(report["shoot"]["du_at_1"]) <= 1e-8
    assert report["shoot"]["sign_changes"] == 1


def test_bounds_command(tmp_path, capsys):
    out = tmp_path / "bounds"
    assert run(["bounds", "--n-min", 2, "--n-max", 10, "--out", out]) == 0
    data = json.loads((out / "bounds.json").read_text())
    assert data["all_hold"] is True
    rows = {row["N"]: row for row in data["rows"]}
    assert rows[2]["upper_bound"] == pytest.approx(-math.pi / 18.0, abs=1e-15)
    assert rows[2]["m_r"] == pytest.approx(
        -math.pi * (-1 / 16 + math.log(2) / 8), abs=1e-15)
    assert rows[3]["upper_bound"] == pytest.approx(-math.pi / 27.0, abs=1e-15)
    assert all(rows[n]["holds"] for n in range(2, 11))
    assert rows[3]["h3"] == pytest.approx((5 * 2 ** (1 / 3) - 7) / 3, abs=1e-15)
    lines = (out / "bounds.csv").read_text().splitlines()
    assert lines[0].startswith("N,")
    assert len(lines) == 10
    assert run(["bounds", "--n-min", 1, "--out", tmp_path]) == 1


def test_verify_closed_form_radial_on_disc(tmp_path):
    grid = geo.build_grid(geo.DomainSpec.disc(1.0), (64, 128))
    r = np.repeat(grid.polar["ring_radii"], grid.polar["n_theta"])
    u = rad._closed_form_funcs(2)[0](r)
    out = tmp_path / "cf"
    out.mkdir()
    geo.write_field_csv(grid, u, out / "field.csv")
    report = {"q": 1.0, "field_csv": "field.csv", **grid.to_dict()}
    (out / "report.json").write_text(json.dumps(report))
    assert run(["verify", out / "report.json"]) == 0


def test_sweep_command(tmp_path):
    out = tmp_path / "sw"
    code = run(["sweep", "--q-list", "1.5,1.25,1.0", "--domain", "interval",
                "--n", 256, "--seed", 5, "--starts", 2, "--out", out])
    assert code == 0
    lines = (out / "sweep.csv").read_text().splitlines()
    assert lines[0] == "q,energy,iterations,constraint,converged"
    assert len(lines) == 4
    assert "sign-balance" in lines[3]

    out2 = tmp_path / "sw2"
    run(["sweep", "--q-list", "1.5,1.25,1.0", "--domain", "interval",
         "--n", 256, "--seed", 5, "--starts", 2, "--out", out2])
    assert (out / "sweep.csv").read_bytes() == (out2 / "sweep.csv").read_bytes()

    assert run(["sweep", "--q-list", "1.0,1.5", "--out", tmp_path]) == 1
    assert run(["sweep", "--q-list", "2.4", "--out", tmp_path]) == 1


def test_sweep_single_matches_solve(tmp_path):
    a = tmp_path / "a"
    b = tmp_path / "b"
    run(["solve", "--domain", "interval", "--q", 1.5, "--n", 256,
         "--seed", 5, "--starts", 2, "--out", a])
    run(["sweep", "--q-list", "1.5", "--domain", "interval", "--n", 256,
         "--seed", 5, "--starts", 2, "--out", b])
    energy_solve = json.loads((a / "report.json").read_text())["energy"]
    row = (b / "sweep.csv").read_text().splitlines()[1].split(",")
    assert float(row[1]) == energy_solve


def test_solve_nonconvergence_exit_two(tmp_path):
    code = run(["solve", "--domain", "interval", "--q", 1.5, "--n", 256,
                "--seed", 2, "--starts", 1, "--max-iter", 1,
                "--out", tmp_path / "nc"])
    assert code == 2
    report = json.loads((tmp_path / "nc" / "report.json").read_text())
    assert report["converged"] is False
    assert report["stop_reason"] == "max-iterations-exceeded"


def test_verify_rejects_nonfinite_dump(tmp_path):
    out = tmp_path / "nf"
    out.mkdir()
    grid = geo.build_grid(geo.DomainSpec.interval(1.0), 16)
    (out / "field.csv").write_text(
        "x,weight,value\n" + "\n".join(f"0,0.1,{v}" for v in ["1.0"] * 15 + ["nan"]))
    report = {"q": 1.0, "field_csv": "field.csv", **grid.to_dict()}
    (out / "report.json").write_text(json.dumps(report))
    assert run(["verify", out / "report.json"]) == 1
