"""Config parsing, report writing, byte determinism and the CLI."""

import filecmp
import json
import os

import numpy as np
import pytest

from simstack import (
    ConfigError,
    GeometryParams,
    Scenario,
    TrainConfig,
    UserParams,
    apply_overrides,
    config_hash,
    default_config,
    load_config,
    run_multiuser,
    run_sweep,
    scenario_from_config,
    write_report,
    write_sweep_report,
)
from simstack.cli import main


def tiny_scenario():
    return Scenario(
        geometry=GeometryParams(layers=3, atoms_x=4, atoms_y=4),
        users=UserParams(count=2),
        train=TrainConfig(eta0=0.8, beta=0.99, episodes=30, tolerance=0.0, pilots=32),
        snr_grid_db=(0.0, 10.0),
        realizations=2,
        payload_slots=128,
        constellation_slots=32,
        master_seed=17,
    )


TINY_OVERRIDES = [
    "geometry.atoms_x=4", "geometry.atoms_y=4", "geometry.layers=3",
    "users.count=2", "train.episodes=30", "train.pilots=32",
    "realizations=2", "payload_slots=128", "constellation_slots=32",
]


def dir_files(root):
    out = {}
    for name in sorted(os.listdir(root)):
        with open(os.path.join(root, name), "rb") as fh:
            out[name] = fh.read()
    return out


# ---------------------------------------------------------------- config


def test_default_config_is_valid_and_minimal():
    cfg = default_config()
    sc = scenario_from_config(cfg)
    assert sc.geometry.layers == 5
    assert sc.users.count == 4
    assert sc.snr_grid_db == (0.0, 4.0, 8.0, 12.0, 16.0)


def test_config_errors_name_the_offending_key():
    with pytest.raises(ConfigError, match="schema_version"):
        scenario_from_config({})
    with pytest.raises(ConfigError, match="geometry.layers"):
        scenario_from_config({"schema_version": 1})
    with pytest.raises(ConfigError, match="geometry.layers"):
        scenario_from_config({"schema_version": 1, "geometry": {}})
    with pytest.raises(ConfigError, match="users.cout"):
        scenario_from_config({"schema_version": 1, "geometry": {"layers": 2},
                              "users": {"cout": 4}})
    with pytest.raises(ConfigError, match="train.eta0"):
        scenario_from_config({"schema_version": 1, "geometry": {"layers": 2},
                              "train": {"eta0": "fast"}})
    with pytest.raises(ConfigError):
        scenario_from_config({"schema_version": 99, "geometry": {"layers": 2}})
    # dataclass-level validation surfaces as a config error too
    with pytest.raises(ConfigError):
        scenario_from_config({"schema_version": 1, "geometry": {"layers": 2},
                              "jamming": {"mode": "sometimes"}})


def test_rician_factor_accepts_inf_string():
    cfg = {"schema_version": 1, "geometry": {"layers": 2},
           "users": {"rician_factor": "inf"}}
    assert np.isinf(scenario_from_config(cfg).users.rician_factor)
    cfg["users"]["rician_factor"] = "huge"
    with pytest.raises(ConfigError):
        scenario_from_config(cfg)


def test_load_config_io_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError, match="not valid JSON"):
        load_config(bad)
    good = tmp_path / "good.json"
    good.write_text(json.dumps({"schema_version": 1, "geometry": {"layers": 2}}))
    assert load_config(good)["geometry"]["layers"] == 2


def test_apply_overrides_paths_and_values():
    cfg = default_config()
    out = apply_overrides(cfg, ["train.eta0=0.95", "jamming.mode=aware",
                                "snr_grid_db=[0, 10]", "geometry.atoms_x=6"])
    assert out["train"]["eta0"] == 0.95
    assert out["jamming"]["mode"] == "aware"
    assert out["snr_grid_db"] == [0, 10]
    assert cfg == default_config()  # input untouched
    with pytest.raises(ConfigError):
        apply_overrides(cfg, ["no_equals_sign"])
    with pytest.raises(ConfigError):
        apply_overrides(cfg, ["geometry.layers.deeper=1"])  # crosses a scalar


def test_config_hash_is_canonical():
    a = {"schema_version": 1, "geometry": {"layers": 5, "atoms_x": 8}}
    b = {"geometry": {"atoms_x": 8, "layers": 5}, "schema_version": 1}
    assert config_hash(a) == config_hash(b)
    c = json.loads(json.dumps(a))
    c["geometry"]["atoms_x"] = 9
    assert config_hash(a) != config_hash(c)
    assert len(config_hash(a)) == 64


# ---------------------------------------------------------------- reports


def test_write_report_contents_and_manifest(tmp_path):
    rep = run_multiuser(tiny_scenario())
    cfg = default_config()
    out = tmp_path / "rep"
    manifest = write_report(rep, out, config=cfg, figures=False,
                            timings={"experiment_s": 1.0})
    listed = set(manifest["files"])
    on_disk = set(os.listdir(out)) - {"timings.json"}
    assert listed == on_disk
    assert manifest["config_hash"] == config_hash(cfg)
    assert manifest["kind"] == "multiuser"
    header = (out / "metrics.csv").read_text().splitlines()[0]
    assert header == "snr_db,ser,ser_std,sum_rate,sum_rate_std,mse,mse_std"
    header = (out / "diagonality.csv").read_text().splitlines()[0]
    assert header == "layer,avg_diag_power,avg_offdiag_power,offdiag_suppression_db"
    header = (out / "loss_curve.csv").read_text().splitlines()[0]
    assert header == "episode,loss_mean,loss_std"
    for r in range(2):
        assert (out / f"train_record_r{r}.csv").exists()
        assert (out / f"metrics_r{r}.csv").exists()
        assert (out / f"constellation_r{r}.csv").exists()
        assert (out / f"phasebook_r{r}.txt").exists()
    # csv floats carry full precision
    row = (out / "metrics.csv").read_text().splitlines()[1].split(",")
    assert float(row[1]) == rep.metrics["ser"][0]


def test_report_rerun_is_byte_identical(tmp_path):
    sc = tiny_scenario()
    for name in ("a", "b"):
        write_report(run_multiuser(sc), tmp_path / name, config=default_config(),
                     figures=True, timings={"experiment_s": np.random.rand()})
    a, b = dir_files(tmp_path / "a"), dir_files(tmp_path / "b")
    assert set(a) == set(b)
    for name in a:
        if name == "timings.json":
            continue  # wall clock is quarantined here
        assert a[name] == b[name], f"{name} differs between reruns"
    assert any(name.endswith(".png") for name in a)


def test_write_sweep_report(tmp_path):
    sc = tiny_scenario()
    results = run_sweep(sc, "eta0", [0.5, 0.9])
    manifest = write_sweep_report("eta0", results, tmp_path / "sw", figures=False)
    assert manifest["axis"] == "eta0"
    assert manifest["values"] == [0.5, 0.9]
    lines = (tmp_path / "sw" / "sweep.csv").read_text().splitlines()
    assert lines[0] == "value,snr_db,ser,sum_rate,mse,noise_free_mse"
    # one row per (value, snr) pair
    assert len(lines) == 1 + 2 * len(sc.snr_grid_db)


# ---------------------------------------------------------------- CLI


def test_cli_validate_passes_on_fresh_checkout(capsys):
    assert main(["validate"]) == 0
    out = capsys.readouterr().out
    assert "6/6 checks passed" in out


def test_cli_usage_and_config_errors(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["multiuser"])  # --out is required
    assert exc.value.code == 2
    assert main(["multiuser", "--out", str(tmp_path / "x"), "--snr", "a,b"]) == 1
    assert main(["sweep", "--axis", "Q", "--values", "1", "--out",
                 str(tmp_path / "y")]) == 1
    assert main(["multiuser", "--out", str(tmp_path / "z"),
                 "--override", "users.cout=4"]) == 1
    err = capsys.readouterr().err
    assert "users.cout" in err


def test_cli_multiuser_end_to_end(tmp_path, capsys):
    out = tmp_path / "mu"
    args = ["multiuser", "--out", str(out), "--seed", "17", "--snr", "0,10",
            "--no-figures"]
    for item in TINY_OVERRIDES + ["train.eta0=0.95"]:
        args += ["--override", item]
    assert main(args) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["train"]["eta0"] == 0.95  # override echoed
    assert manifest["master_seed"] == 17
    assert (out / "metrics.csv").exists()
    assert "multiuser: 2 realizations" in capsys.readouterr().out


def test_cli_train_and_channels(tmp_path):
    out = tmp_path / "tr"
    args = ["train", "--out", str(out), "--seed", "3"]
    for item in TINY_OVERRIDES:
        args += ["--override", item]
    assert main(args) == 0
    assert (out / "train_record_r0.csv").exists()
    assert (out / "phasebook_r0.txt").exists()
    npz = tmp_path / "ch.npz"
    args = ["channels", "--save", str(npz), "--seed", "3"]
    for item in TINY_OVERRIDES:
        args += ["--override", item]
    assert main(args) == 0
    from simstack import load_channel_set

    ch = load_channel_set(npz)
    assert (ch.atoms, ch.users, ch.layers) == (16, 2, 3)


def test_cli_same_command_line_twice_is_byte_identical(tmp_path):
    outs = [tmp_path / "r1", tmp_path / "r2"]
    for out in outs:
        args = ["multiuser", "--out", str(out), "--seed", "4", "--snr", "10"]
        for item in TINY_OVERRIDES:
            args += ["--override", item]
        assert main(args) == 0
    match, mismatch, errors = filecmp.cmpfiles(
        outs[0], outs[1],
        [n for n in os.listdir(outs[0]) if n != "timings.json"],
        shallow=False,
    )
    assert not mismatch and not errors


def test_cli_sweep_writes_report(tmp_path):
    out = tmp_path / "sw"
    args = ["sweep", "--axis", "B", "--values", "2,8", "--out", str(out),
            "--seed", "5", "--snr", "10", "--no-figures"]
    for item in TINY_OVERRIDES:
        args += ["--override", item]
    assert main(args) == 0
    rows = (out / "sweep.csv").read_text().splitlines()
    assert len(rows) == 3
    # coarse quantization hurts: noise-free mse column is worse for B=2
    b2 = float(rows[1].split(",")[5])
    b8 = float(rows[2].split(",")[5])
    assert b2 > b8
