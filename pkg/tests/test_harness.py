"""Experiment runner, CSV/graph persistence, presets, and the CLI."""

import json
import os

import numpy as np
import pytest

from stemfluff import cli
from stemfluff import topology as tp
from stemfluff.harness import (CSV_HEADER, ConfigError, ExperimentConfig,
                               config_from_dict, load_graph, parse_config_file,
                               run_experiment, run_preset, run_trial,
                               serialize_graph, write_csv)


def small_cfg(**kw):
    base = dict(experiment="smoke", n=30, p=0.2, q=0.0, trials=3, seed=7,
                topology="exact-regular", scheme="one-to-one",
                estimator="first-spy")
    base.update(kw)
    return ExperimentConfig(**base)


# -------------------------------------------------------------- CSV contract

def test_csv_header_is_frozen():
    assert CSV_HEADER == ("experiment,topology,n,eta,d,p,q,beta,scheme,"
                          "estimator,mode,m,trial,seed,avg_precision,"
                          "avg_recall,aux_key,aux_value")


def test_run_trial_is_deterministic():
    cfg = small_cfg()
    assert run_trial(cfg, 3) == run_trial(cfg, 3)


def test_worker_count_never_changes_csv_bytes(tmp_path):
    solo = tmp_path / "solo.csv"
    pooled = tmp_path / "pooled.csv"
    write_csv(run_experiment(small_cfg(trials=6, workers=1)), str(solo))
    write_csv(run_experiment(small_cfg(trials=6, workers=2)), str(pooled))
    assert solo.read_bytes() == pooled.read_bytes()


def test_csv_row_shape_and_float_format(tmp_path):
    path = tmp_path / "rows.csv"
    write_csv(run_experiment(small_cfg(trials=2)), str(path))
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == CSV_HEADER
    assert len(lines) == 3
    for line in lines[1:]:
        cells = line.split(",")
        assert len(cells) == 18
    first = lines[1].split(",")
    assert first[0] == "smoke"
    assert first[5] == "0.200000"  # p, six fractional digits
    assert first[12] == "0"        # trial index
    assert "." in first[14] and len(first[14].split(".")[1]) == 6


def test_write_csv_refuses_empty(tmp_path):
    with pytest.raises(ValueError):
        write_csv([], str(tmp_path / "empty.csv"))


def test_no_spies_means_nothing_to_accuse():
    row = run_trial(small_cfg(p=0.0, trials=1), 0)
    assert row.avg_precision == 0.0
    assert row.avg_recall == 0.0


# ------------------------------------------------------------- configuration

def test_config_validation_rejects_bad_values():
    bad = [
        dict(p=1.5),
        dict(q=-0.1),
        dict(trials=0),
        dict(m=0),
        dict(n=1),
        dict(topology="mesh"),
        dict(scheme="broadcast"),
        dict(estimator="oracle"),
        dict(stem_mode="bogus"),
        dict(observation="sometimes"),
        dict(deployment_mode="version-checking"),  # needs approx-regular
        dict(deployment_mode="version-checking", topology="approx-regular",
             beta=0.0),
        dict(deployment_mode="no-version-checking", topology="approx-regular",
             beta=0.5, estimator="intersection"),
        dict(estimator="routing-aware", scheme="per-transaction"),
    ]
    for kw in bad:
        with pytest.raises(ConfigError):
            small_cfg(**kw)


def test_mode_label():
    assert small_cfg().mode_label == "hop-coin"
    assert small_cfg(stem_mode="epoch-diffuser").mode_label == "epoch-diffuser"
    assert small_cfg(drop_policy="drop-all").mode_label == "drop-all"
    assert small_cfg(deployment_mode="version-checking",
                     topology="approx-regular",
                     beta=0.5).mode_label == "version-checking"


def test_config_file_round_trip(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# smoke run\n"
                    "n = 24\n"
                    "p = 0.25  # spy share\n"
                    "supernode = true\n"
                    "train-walks = 77\n",
                    encoding="utf-8")
    cfg = config_from_dict(parse_config_file(str(path)))
    assert (cfg.n, cfg.p, cfg.supernode, cfg.train_walks) == (24, 0.25, True, 77)


def test_config_file_errors(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("n 24\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        parse_config_file(str(bad))
    with pytest.raises(ConfigError):
        config_from_dict({"walks": "10"})
    with pytest.raises(ConfigError):
        config_from_dict({"supernode": "maybe"})


# --------------------------------------------------------- graph persistence

def test_graph_round_trip(tmp_path):
    rng = np.random.default_rng(12)
    spy, supports = tp.assign_roles(30, 0.2, 0.6, rng)
    g = tp.gen_p2p_approx_regular(30, 4, rng, spy=spy, supports=supports)
    path = serialize_graph(g, str(tmp_path / "graph.edges"))
    back = load_graph(path)
    assert back.same_structure(g)
    assert np.array_equal(back.spy, g.spy)
    assert np.array_equal(back.supports, g.supports)


def test_graph_parse_errors_name_the_line(tmp_path):
    edges = tmp_path / "g.edges"

    edges.write_text("nodes 5\n", encoding="utf-8")
    with pytest.raises(ValueError, match=r"g\.edges:1: expected header"):
        load_graph(str(edges))

    edges.write_text("n 3\n0 x\n", encoding="utf-8")
    with pytest.raises(ValueError, match=r"g\.edges:2: malformed edge"):
        load_graph(str(edges))

    edges.write_text("n 3\n0 7\n", encoding="utf-8")
    with pytest.raises(ValueError, match=r"g\.edges:2: .*out of range"):
        load_graph(str(edges))

    edges.write_text("n 3\n0 1\n1 2\n2 0\n", encoding="utf-8")
    roles = tmp_path / "g.edges.roles"
    roles.write_text("0 z 1\n", encoding="utf-8")
    with pytest.raises(ValueError, match=r"g\.edges\.roles:1: malformed role"):
        load_graph(str(edges))

    roles.write_text("5 h 1\n", encoding="utf-8")
    with pytest.raises(ValueError, match=r"roles:1: node 5 out of range"):
        load_graph(str(edges))


def test_missing_roles_sidecar(tmp_path):
    edges = tmp_path / "lonely.edges"
    edges.write_text("n 2\n0 1\n1 0\n", encoding="utf-8")
    with pytest.raises(FileNotFoundError):
        load_graph(str(edges))


# -------------------------------------------------------------------- presets

def test_unknown_preset_rejected(tmp_path):
    with pytest.raises(ConfigError):
        run_preset("fig99", out_dir=str(tmp_path))


def test_preset_smoke_fig4(tmp_path):
    files = run_preset("fig4", out_dir=str(tmp_path),
                       overrides={"n": 20, "trials": 2})
    lines = open(files["fig4"], encoding="utf-8").read().splitlines()
    assert lines[0] == CSV_HEADER
    # 2 graph families x 2 estimators x 10 spy shares x 2 trials
    assert len(lines) == 1 + 80
    manifest = json.load(open(files["manifest"], encoding="utf-8"))
    assert manifest["preset"] == "fig4"
    assert manifest["csv_header"] == CSV_HEADER
    assert manifest["axes"]["x"] == "p"


def test_preset_fig9_carries_bound_rows(tmp_path):
    files = run_preset("fig9", out_dir=str(tmp_path),
                       overrides={"n": 120, "trials": 1})
    lines = open(files["fig9"], encoding="utf-8").read().splitlines()[1:]
    # per (mode, beta) point: one trial row plus the two analytic band rows
    assert len(lines) == 2 * 9 * 3
    bound_rows = [l.split(",") for l in lines if l.split(",")[9] == "analytic-bound"]
    assert len(bound_rows) == 2 * 9 * 2
    keys = {cells[16] for cells in bound_rows}
    assert keys == {"recall_bound_lower", "recall_bound_upper"}
    for cells in bound_rows:
        assert 0.0 <= float(cells[17]) <= 1.0


def test_preset_blackhole_rows(tmp_path):
    files = run_preset("blackhole", out_dir=str(tmp_path),
                       overrides={"trials": 10})
    lines = open(files["blackhole"], encoding="utf-8").read().splitlines()[1:]
    assert len(lines) == 2 * 5 * 10
    cells = [l.split(",") for l in lines]
    assert {c[2] for c in cells} == {"6", "11"}              # n = k + 1
    assert {c[7] for c in cells} == {"0.010000", "0.020000", "0.050000",
                                     "0.100000", "0.200000"}  # beta = epsilon
    assert all(c[16] == "premature" for c in cells)
    assert {c[17] for c in cells} <= {"0.000000", "1.000000"}


# ------------------------------------------------------------------------ CLI

def test_cli_gen_graph_and_reload(tmp_path):
    rc = cli.main(["gen-graph", "--n", "30", "--topology", "approx-regular",
                   "--eta", "4", "--p", "0.2", "--seed", "3",
                   "--out", str(tmp_path)])
    assert rc == 0
    g = load_graph(str(tmp_path / "graph.edges"))
    assert g.n == 30
    assert g.spy.sum() == 6


def test_cli_run_writes_csv(tmp_path):
    rc = cli.main(["run", "--n", "20", "--p", "0.2", "--trials", "2",
                   "--seed", "1", "--out", str(tmp_path)])
    assert rc == 0
    lines = (tmp_path / "experiment.csv").read_text().splitlines()
    assert lines[0] == CSV_HEADER and len(lines) == 3


def test_cli_flag_overrides_config_file(tmp_path):
    cfg = tmp_path / "base.cfg"
    cfg.write_text("experiment = filerun\nn = 20\np = 0.1\ntrials = 1\n",
                   encoding="utf-8")
    rc = cli.main(["run", "--config", str(cfg), "--p", "0.3",
                   "--out", str(tmp_path)])
    assert rc == 0
    row = (tmp_path / "filerun.csv").read_text().splitlines()[1].split(",")
    assert row[5] == "0.300000"


def test_cli_error_exit_codes(tmp_path, capsys):
    assert cli.main(["run", "--n", "20", "--p", "1.5",
                     "--out", str(tmp_path)]) == 2
    assert "outside [0, 1]" in capsys.readouterr().err

    bad = tmp_path / "bad.cfg"
    bad.write_text("walks = 10\n", encoding="utf-8")
    assert cli.main(["run", "--config", str(bad), "--out", str(tmp_path)]) == 2
    assert cli.main(["run", "--config", str(tmp_path / "nope.cfg"),
                     "--out", str(tmp_path)]) == 2


def test_cli_bounds_table(capsys):
    rc = cli.main(["bounds", "--p", "0.2", "--q", "0.2", "--n", "1000",
                   "--eta", "8", "--beta", "0.5", "--mode", "version-checking",
                   "--k", "10", "--epsilon", "0.05"])
    assert rc == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "name,value"
    table = dict(l.split(",") for l in lines[1:])
    assert table["timer_t_base"] == "263.192298"
    assert 0.0 < float(table["partial_recall_lower"]) <= 1.0
