from __future__ import annotations

import csv
import json

import pytest

from msnsim.cli import build_parser, main
from msnsim.config import (
    DEFAULT_SEEDS,
    DEFAULT_THRESHOLDS,
    KNOWN_KEYS,
    Config,
    ConfigError,
    parse_config,
    parse_seed_list,
)
from msnsim.metrics import CSV_FIELDS
from msnsim.network import SimConfig


def write(tmp_path, text, name="cfg.txt"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


# --- config -----------------------------------------------------------------------


def test_empty_config_gives_reference_defaults(tmp_path):
    cfg = parse_config(write(tmp_path, ""))
    assert cfg == Config()
    sim = cfg.sim
    assert (sim.machine_count, sim.subspace_count, sim.interest_universe, sim.interests_per_machine) == (
        100,
        10,
        10,
        5,
    )
    assert sim.weights.interest == sim.weights.spatial == sim.weights.neighbor == pytest.approx(1 / 3)
    assert sim.decay.rate == 0.1 and sim.steps == 200
    assert len(DEFAULT_THRESHOLDS) == 21 and DEFAULT_THRESHOLDS[9] == 0.45
    assert DEFAULT_SEEDS == tuple(range(1, 21))


def test_every_field_settable(tmp_path):
    text = """
    # all simulation fields
    machines = 30
    subspaces = 6
    interest_universe = 8
    interests_per_machine = 3
    w_interest = 0.5
    w_spatial = 0.25
    w_neighbor = 0.25
    decay_rate = 0.2
    threshold = 0.4
    visibility = adhoc
    adhoc_range = 2
    p_move = 0.1
    p_interest = 0.0
    steps = 50
    seed = 18446744073709551615
    decay_scaled = true
    refractory = 2
    thresholds = 0.1, 0.2
    seeds = 3..5, 9
    baseline_degree = 10
    time_average = yes
    workers = 2
    maze = m.txt
    radio_range = 3
    max_steps = 99
    share_mode = on_discovery
    share_cap = 5
    explore = merged
    """
    cfg = parse_config(write(tmp_path, text))
    assert cfg.sim == SimConfig(
        machine_count=30,
        subspace_count=6,
        interest_universe=8,
        interests_per_machine=3,
        weights=cfg.sim.weights,
        decay=cfg.sim.decay,
        visibility="adhoc",
        adhoc_range=2,
        p_move=0.1,
        p_interest=0.0,
        steps=50,
        seed=2**64 - 1,
        decay_scaled=True,
        refractory=2,
    )
    assert (cfg.sim.weights.interest, cfg.sim.decay.rate, cfg.sim.decay.threshold) == (0.5, 0.2, 0.4)
    assert cfg.sweep.thresholds == (0.1, 0.2) and cfg.sweep.seeds == (3, 4, 5, 9)
    assert cfg.sweep.baseline.degree == 10 and cfg.sweep.time_average and cfg.sweep.workers == 2
    assert cfg.maze.maze == "m.txt" and cfg.maze.share_cap == 5 and cfg.maze.explore == "merged"
    assert len(KNOWN_KEYS) == 28


def test_bad_weights_name_the_invariant(tmp_path):
    path = write(tmp_path, "w_interest = 0.3\nw_spatial = 0.3\nw_neighbor = 0.3\n")
    with pytest.raises(ConfigError, match="Weights"):
        parse_config(path)


@pytest.mark.parametrize(
    "text,match",
    [
        ("colour = blue\n", r"cfg.txt:1: unknown field 'colour'"),
        ("\n\nmachines\n", r"cfg.txt:3: expected 'key = value'"),
        ("machines = many\n", r"cfg.txt:1: field 'machines'"),
        ("machines = 3\nmachines = 4\n", "already set on line 1"),
        ("adhoc_range = 10\n", "adhoc_range"),
        ("baseline_degree = 100\n", "FixedBaseline"),
        ("thresholds = 0.2, 1.4\n", "threshold"),
    ],
)
def test_config_errors(tmp_path, text, match):
    with pytest.raises(ConfigError, match=match):
        parse_config(write(tmp_path, text))


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        parse_config(tmp_path / "nope.txt")


def test_seed_list_parsing():
    assert parse_seed_list("1..3,7") == (1, 2, 3, 7)
    with pytest.raises(ValueError):
        parse_seed_list("5..2")
    with pytest.raises(ValueError):
        parse_seed_list("")


# --- commands -------------------------------------------------------------------------

FAST = "machines = 20\nsteps = 15\nbaseline_degree = 5\n"


def test_help_lists_all_flags(capsys):
    parser = build_parser()
    with pytest.raises(SystemExit):
        parser.parse_args(["sweep", "--help"])
    text = capsys.readouterr().out
    for flag in ("--config", "--out", "--seed", "--seeds", "--thresholds", "--time-average"):
        assert flag in text
    for cmd, flags in (("run", ("--config", "--out", "--seed", "--thresholds")), ("maze", ("--config", "--out", "--seed"))):
        with pytest.raises(SystemExit):
            parser.parse_args([cmd, "--help"])
        text = capsys.readouterr().out
        assert all(f in text for f in flags)


def test_sweep_defaults_write_21_rows(tmp_path, capsys):
    cfg = write(tmp_path, FAST)
    out = tmp_path / "out"
    assert main(["sweep", "--config", str(cfg), "--out", str(out), "--seeds", "1,2"]) == 0
    rows = list(csv.reader((out / "sweep.csv").open(encoding="utf-8")))
    assert tuple(rows[0]) == CSV_FIELDS
    assert len(rows) == 22
    data = json.loads((out / "sweep.json").read_text())
    assert len(data) == 21 and set(data[0]) == set(CSV_FIELDS)
    assert "crossover threshold" in capsys.readouterr().out


def test_sweep_single_threshold(tmp_path):
    cfg = write(tmp_path, FAST)
    out = tmp_path / "out"
    assert main(["sweep", "--config", str(cfg), "--out", str(out), "--thresholds", "0.45", "--seed", "3"]) == 0
    rows = (out / "sweep.csv").read_text().splitlines()
    assert len(rows) == 2 and rows[1].startswith("0.45,") and rows[1].split(",")[3] == "1"


def test_output_dir_needs_existing_parent(tmp_path, capsys):
    cfg = write(tmp_path, FAST)
    bad = tmp_path / "a" / "b"
    assert main(["sweep", "--config", str(cfg), "--out", str(bad), "--thresholds", "0.5"]) != 0
    assert "does not exist" in capsys.readouterr().err
    assert not bad.exists()


def test_run_command(tmp_path):
    cfg = write(tmp_path, FAST)
    out = tmp_path / "out"
    assert main(["run", "--config", str(cfg), "--out", str(out), "--seed", "4", "--thresholds", "0.5"]) == 0
    rows = list(csv.DictReader((out / "run.csv").open(encoding="utf-8")))
    assert len(rows) == 15 and rows[0]["step"] == "0"
    summary = json.loads((out / "run.json").read_text())
    assert summary["seed"] == 4 and summary["threshold"] == 0.5
    assert summary["live_links"] == int(rows[-1]["live_links"])
    assert main(["run", "--config", str(cfg), "--out", str(out), "--thresholds", "0.1,0.2"]) != 0


def test_maze_command(tmp_path):
    out = tmp_path / "out"
    assert main(["maze", "--out", str(out)]) == 0
    report = json.loads((out / "maze_report.json").read_text())
    assert set(report) == {"solo", "cooperative", "archive"}
    steps = {name: {a["id"]: a["steps_taken"] for a in rep["agents"]} for name, rep in report.items()}
    assert steps["archive"][3] <= steps["cooperative"][1] <= steps["solo"][1]
    assert set(report["archive"]["agents"][0]) == {"id", "entry_step", "steps_taken", "escaped"}


def test_maze_command_rejects_unsolvable(tmp_path, capsys):
    maze = write(tmp_path, "4 3\n####\nS#.E\n####\n", "bad.txt")
    cfg = write(tmp_path, "maze = bad.txt\n")
    assert main(["maze", "--config", str(cfg), "--out", str(tmp_path / "o")]) != 0
    assert "unsolvable" in capsys.readouterr().err
    assert maze.exists()


@pytest.mark.parametrize(
    "argv,files",
    [
        (["sweep", "--thresholds", "0.3,0.6", "--seeds", "1,2"], ["sweep.csv", "sweep.json"]),
        (["run"], ["run.csv", "run.json"]),
        (["maze", "--seed", "7"], ["maze_report.json"]),
    ],
)
def test_commands_are_byte_deterministic(tmp_path, argv, files):
    cfg = write(tmp_path, FAST)
    outs = []
    for name in ("first", "second"):
        out = tmp_path / name
        assert main(argv + ["--config", str(cfg), "--out", str(out)]) == 0
        outs.append({f: (out / f).read_bytes() for f in files})
    assert outs[0] == outs[1]
