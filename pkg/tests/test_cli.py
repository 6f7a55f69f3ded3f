import io
import json
import zipfile
from pathlib import Path

import pytest

from cems import PvParams, config_to_dict, config_to_json
from cems.cli import main

from conftest import make_community, make_ess, make_home, make_hvac


@pytest.fixture(scope="module")
def small_cfg():
    prices = [1.0, 1.2, 4.0, 5.0, 4.5, 2.0]
    ghi = [0.2, 0.8, 0.9, 0.3, 0.0, 0.0]
    homes = [
        make_home("a", 6, ess=make_ess(), pv=PvParams(panel_area=8.0, efficiency=0.2),
                  fixed_load=[0.5, 0.5, 1.0, 1.5, 1.5, 1.0]),
        make_home("b", 6, pv=PvParams(panel_area=6.0, efficiency=0.2),
                  fixed_load=[0.6, 0.6, 1.2, 1.6, 1.4, 0.9]),
        make_home("c", 6, fixed_load=[0.4, 0.5, 1.1, 1.4, 1.3, 0.8]),
    ]
    return make_community(homes, prices, ghi=ghi, alpha=0.6)


@pytest.fixture(scope="module")
def cfg_file(small_cfg, tmp_path_factory):
    path = tmp_path_factory.mktemp("cli") / "community.json"
    path.write_text(config_to_json(small_cfg))
    return str(path)


@pytest.fixture(scope="module")
def infeasible_cfg_file(tmp_path_factory):
    # valid config, hopeless physics: the heater cannot hold the comfort floor
    homes = [make_home("a", 3), make_home("b", 3, hvac=make_hvac(p_max=0.5))]
    cfg = make_community(homes, [2.0, 2.0, 2.0], t_out=[10.0, 10.0, 10.0])
    path = tmp_path_factory.mktemp("cli-bad") / "cold.json"
    path.write_text(config_to_json(cfg))
    return str(path)


# -- argument handling ------------------------------------------------------

def test_no_command_prints_help_and_fails(capsys):
    assert main([]) == 1
    assert "COMMAND" in capsys.readouterr().out


def test_unknown_flag_is_usage_error(cfg_file, tmp_path, capsys):
    code = main(["solve", "--config", cfg_file, "--out", str(tmp_path),
                 "--frobnicate"])
    assert code == 1
    assert "error" in capsys.readouterr().err


def test_unknown_subcommand_is_usage_error(capsys):
    assert main(["optimize"]) == 1


HELP_FLAGS = {
    "validate": ["--config", "--format"],
    "solve": ["--config", "--format", "--scenario", "--alpha", "--pmid",
              "--bigm", "--gap", "--time-limit", "--jobs", "--out"],
    "compare": ["--config", "--format", "--alpha", "--pmid", "--bigm",
                "--gap", "--time-limit", "--jobs", "--out"],
    "settle": ["--config", "--format", "--schedule", "--alpha", "--pmid",
               "--bigm", "--out"],
    "bench": ["--config", "--format", "--sizes", "--seed", "--gap",
              "--time-limit", "--out"],
    "export-lp": ["--config", "--format", "--scenario", "--home", "--alpha",
                  "--pmid", "--bigm", "--out"],
}


@pytest.mark.parametrize("command", sorted(HELP_FLAGS))
def test_help_documents_every_flag(command, capsys):
    with pytest.raises(SystemExit) as exc:
        main([command, "--help"])
    assert exc.value.code == 0
    text = capsys.readouterr().out
    for flag in HELP_FLAGS[command]:
        assert flag in text, f"{command} --help is missing {flag}"


# -- validate ---------------------------------------------------------------

def test_validate_ok(cfg_file, capsys):
    assert main(["validate", "--config", cfg_file]) == 0
    assert "ok: 3 homes, 6 slots" in capsys.readouterr().out


def test_validate_rejects_bad_alpha(small_cfg, tmp_path, capsys):
    doc = config_to_dict(small_cfg)
    doc["community"]["alpha"] = 1.5
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    assert main(["validate", "--config", str(path)]) == 1
    assert "community.alpha" in capsys.readouterr().err


def test_validate_malformed_json(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text("{oops")
    assert main(["validate", "--config", str(path)]) == 1
    assert "invalid input" in capsys.readouterr().err


def test_missing_config_is_io_failure(tmp_path, capsys):
    assert main(["validate", "--config", str(tmp_path / "nope.json")]) == 3
    assert "i/o failure" in capsys.readouterr().err


def test_validate_csv_bundle(small_cfg, tmp_path, capsys):
    doc = config_to_dict(small_cfg)
    series = doc.pop("series")
    buf = io.BytesIO()
    with zipfile.ZipFile(buf, "w") as z:
        z.writestr("community.json", json.dumps(doc))
        for name, values in series.items():
            rows = "\n".join(f"{t + 1},{v}" for t, v in enumerate(values))
            z.writestr(f"{name}.csv", "slot,value\n" + rows + "\n")
    path = tmp_path / "bundle.zip"
    path.write_bytes(buf.getvalue())
    assert main(["validate", "--config", str(path), "--format", "csv-bundle"]) == 0
    assert "ok: 3 homes" in capsys.readouterr().out


# -- solve ------------------------------------------------------------------

SOLVE_REPORTS = ("schedule.json", "settlement.json", "settlement.csv",
                 "feasibility.json", "timings.json")


def test_solve_writes_reports(cfg_file, tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["solve", "--config", cfg_file, "--out", str(out)]) == 0
    for name in SOLVE_REPORTS:
        assert (out / name).exists(), name
    feas = json.loads((out / "feasibility.json").read_text())
    assert feas["max_violation"] <= 1e-6
    assert feas["cost_matches_solver"] is True
    assert "system: community cost" in capsys.readouterr().out


def test_solve_reports_are_byte_identical(cfg_file, tmp_path):
    out1, out2 = tmp_path / "r1", tmp_path / "r2"
    assert main(["solve", "--config", cfg_file, "--out", str(out1)]) == 0
    assert main(["solve", "--config", cfg_file, "--out", str(out2)]) == 0
    for name in SOLVE_REPORTS:
        if name == "timings.json":  # wall clock, excluded by design
            continue
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes(), name


def test_solve_prosumer_with_jobs(cfg_file, tmp_path, capsys):
    out = tmp_path / "pro"
    code = main(["solve", "--config", cfg_file, "--scenario", "prosumer",
                 "--jobs", "2", "--out", str(out)])
    assert code == 0
    assert "prosumer: community cost" in capsys.readouterr().out


def test_solver_failure_exit_codes(infeasible_cfg_file, tmp_path, capsys):
    code = main(["solve", "--config", infeasible_cfg_file,
                 "--out", str(tmp_path / "s")])
    assert code == 2
    code = main(["solve", "--config", infeasible_cfg_file, "--scenario",
                 "prosumer", "--out", str(tmp_path / "p")])
    assert code == 2
    assert "solver failure" in capsys.readouterr().err


def test_out_dir_collision_is_io_failure(cfg_file, tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("in the way")
    code = main(["solve", "--config", cfg_file, "--out", str(blocker)])
    assert code == 3
    assert "i/o failure" in capsys.readouterr().err


def test_alpha_override_validates(cfg_file, tmp_path, capsys):
    code = main(["solve", "--config", cfg_file, "--alpha", "1.5",
                 "--out", str(tmp_path / "x")])
    assert code == 1
    assert "community.alpha" in capsys.readouterr().err


def test_bigm_override(cfg_file, tmp_path, capsys):
    out = tmp_path / "fixed"
    code = main(["solve", "--config", cfg_file, "--bigm", "fixed:1e9",
                 "--out", str(out)])
    assert code == 0
    code = main(["solve", "--config", cfg_file, "--bigm", "enormous",
                 "--out", str(tmp_path / "y")])
    assert code == 1
    assert "big_m_policy" in capsys.readouterr().err


# -- compare ----------------------------------------------------------------

def test_compare_outputs(cfg_file, tmp_path, capsys):
    out = tmp_path / "cmp"
    assert main(["compare", "--config", cfg_file, "--out", str(out)]) == 0
    for name in ("comparison.json", "comparison.csv", "comparison_homes.csv",
                 "comparison_slots.csv", "timings.json"):
        assert (out / name).exists(), name
    doc = json.loads((out / "comparison.json").read_text())
    cost = doc["community_cost"]
    assert cost["system"] <= cost["prosumer"] + 1e-6
    assert cost["prosumer"] <= cost["none"] + 1e-6
    assert capsys.readouterr().out.count("community cost") == 3


# -- settle -----------------------------------------------------------------

def test_settle_reuses_solved_schedule(cfg_file, tmp_path, capsys):
    run = tmp_path / "run"
    assert main(["solve", "--config", cfg_file, "--out", str(run)]) == 0
    baseline = json.loads((run / "settlement.json").read_text())

    out = tmp_path / "resettle"
    code = main(["settle", "--config", cfg_file, "--schedule",
                 str(run / "schedule.json"), "--out", str(out)])
    assert code == 0
    resettled = json.loads((out / "settlement.json").read_text())
    assert resettled["community_daily_cost"] == pytest.approx(
        baseline["community_daily_cost"], abs=1e-9)

    out3 = tmp_path / "case3"
    code = main(["settle", "--config", cfg_file, "--schedule",
                 str(run / "schedule.json"), "--pmid", "case3", "--out", str(out3)])
    assert code == 0
    shifted = json.loads((out3 / "settlement.json").read_text())
    # higher local price moves money between homes but not in or out
    assert shifted["community_daily_cost"] == pytest.approx(
        baseline["community_daily_cost"], abs=1e-9)
    assert shifted["per_home_daily_cost"] != pytest.approx(
        baseline["per_home_daily_cost"])


def test_settle_rejects_garbage_schedule(cfg_file, tmp_path, capsys):
    bad = tmp_path / "sched.json"
    bad.write_text("{not json")
    code = main(["settle", "--config", cfg_file, "--schedule", str(bad),
                 "--out", str(tmp_path / "o")])
    assert code == 1
    assert "error" in capsys.readouterr().err


# -- bench ------------------------------------------------------------------

def test_bench_outputs_and_determinism(cfg_file, tmp_path, capsys):
    out1, out2 = tmp_path / "b1", tmp_path / "b2"
    argv = ["bench", "--config", cfg_file, "--sizes", "2,3", "--seed", "5",
            "--gap", "0.05"]
    assert main(argv + ["--out", str(out1)]) == 0
    assert main(argv + ["--out", str(out2)]) == 0
    for name in ("bench.csv", "bench.json", "bench_timings.csv"):
        assert (out1 / name).exists(), name
    for name in ("bench.csv", "bench.json"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes(), name
    assert "n=2:" in capsys.readouterr().out


def test_bench_rejects_bad_sizes(cfg_file, tmp_path, capsys):
    code = main(["bench", "--config", cfg_file, "--sizes", "ten,20",
                 "--out", str(tmp_path / "b")])
    assert code == 1
    assert "--sizes" in capsys.readouterr().err


# -- export-lp --------------------------------------------------------------

def test_export_lp_system(cfg_file, tmp_path, capsys):
    out = tmp_path / "lp"
    assert main(["export-lp", "--config", cfg_file, "--out", str(out)]) == 0
    text = (out / "model.lp").read_text()
    assert "Minimize" in text and "Binary" in text and text.rstrip().endswith("End")
    assert "model.lp" in capsys.readouterr().out


def test_export_lp_single_home(cfg_file, tmp_path, capsys):
    out = tmp_path / "lp"
    code = main(["export-lp", "--config", cfg_file, "--scenario", "prosumer",
                 "--home", "a", "--out", str(out)])
    assert code == 0
    assert (out / "home_a.lp").exists()

    code = main(["export-lp", "--config", cfg_file, "--scenario", "prosumer",
                 "--out", str(out)])
    assert code == 1  # --home is required for a single-home model
    code = main(["export-lp", "--config", cfg_file, "--scenario", "prosumer",
                 "--home", "zzz", "--out", str(out)])
    assert code == 1
    assert "zzz" in capsys.readouterr().err
