import csv
import json
from pathlib import Path

import numpy as np
import pytest
import yaml

from banditmt.cli import EXIT_DATA, EXIT_OK, EXIT_USAGE, main
from banditmt.config import ConfigError, read_config
from banditmt.environment import ArmCatalog, load_dataset
from banditmt.evaluation import RunLog

CONFIGS = Path(__file__).parent.parent / "configs"


def write_config(path, **raw):
    path.write_text(yaml.safe_dump(raw), encoding="utf-8")
    return path


def single_domain_synth(records=2000, sigma=5.0):
    means = [40, 30, 25, 20, 15, 10, 8, 5]
    return {
        "arms": [f"sys{i}" for i in range(8)],
        "domains": ["news"],
        "means": {f"sys{i}": {"news": m} for i, m in enumerate(means)},
        "sigma": sigma,
        "records_per_domain": records,
        "seed": 3,
    }


def read_csv(path):
    with open(path, newline="") as f:
        return list(csv.reader(f))


def test_score_identical_single_arm(tmp_path, fixtures_dir):
    out = tmp_path / "ds.jsonl"
    ref = str(fixtures_dir / "ref.txt")
    assert main(["score", "--ref", ref, "--hyp", ref, "--arms", "copy", "--out", str(out)]) == EXIT_OK
    lines = out.read_text().splitlines()
    assert len(lines) == 10
    assert all(json.loads(l)["scores"] == [100.0] for l in lines)


def test_score_round_trip(tmp_path, fixtures_dir):
    out, arms = tmp_path / "ds.jsonl", tmp_path / "arms.txt"
    code = main(["score", "--ref", str(fixtures_dir / "ref.txt"),
                 "--hyp", str(fixtures_dir / "hyp_nmt.txt"), "--hyp", str(fixtures_dir / "hyp_smt.txt"),
                 "--out", str(out), "--arms-out", str(arms), "--domain", "news"])
    assert code == EXIT_OK
    catalog = ArmCatalog.from_file(arms)
    assert catalog.names == ("hyp_nmt", "hyp_smt")
    ds = load_dataset(out, catalog)
    assert len(ds) == 10 and ds.domains == ["news"]
    assert ds.score_matrix[:, 0].mean() > ds.score_matrix[:, 1].mean()


def test_score_missing_file_names_path(tmp_path, fixtures_dir, capsys):
    missing = tmp_path / "nope.txt"
    code = main(["score", "--ref", str(fixtures_dir / "ref.txt"), "--hyp", str(missing),
                 "--out", str(tmp_path / "o.jsonl")])
    assert code == EXIT_DATA
    assert str(missing) in capsys.readouterr().err


def test_score_length_mismatch(tmp_path, fixtures_dir, capsys):
    short = tmp_path / "short.txt"
    short.write_text("a b c\n")
    code = main(["score", "--ref", str(fixtures_dir / "ref.txt"), "--hyp", str(short),
                 "--out", str(tmp_path / "o.jsonl")])
    assert code == EXIT_DATA
    err = capsys.readouterr().err
    assert "10" in err and "1" in err


def test_synth_command(tmp_path):
    out = tmp_path / "synth.jsonl"
    assert main(["synth", "--sigma", "0", "--records-per-domain", "5", "--out", str(out)]) == EXIT_OK
    catalog = ArmCatalog.from_file(tmp_path / "synth.arms.txt")
    ds = load_dataset(out, catalog)
    assert len(ds) == 15 and len(catalog) == 8


def test_synth_from_config_file(tmp_path):
    cfg = write_config(tmp_path / "s.yaml", synth=single_domain_synth(records=4))
    out = tmp_path / "s.jsonl"
    assert main(["synth", "--config", str(cfg), "--out", str(out), "--no-embedding"]) == EXIT_OK
    first = json.loads(out.read_text().splitlines()[0])
    assert "emb" not in first or first["emb"] is None


def test_run_oracle_has_zero_regret(tmp_path):
    cfg = write_config(tmp_path / "c.yaml", synth=single_domain_synth(records=200), policy={"kind": "oracle"})
    assert main(["run", str(cfg), "--out", str(tmp_path / "o")]) == EXIT_OK
    summary = json.loads((tmp_path / "o" / "summary.json").read_text())
    assert summary["average_regret"] == 0.0
    assert summary["cumulative_regret"] == 0.0
    assert sum(summary["pull_counts"]) == 200


def test_run_is_byte_identical(tmp_path):
    cfg = write_config(tmp_path / "c.yaml", synth=single_domain_synth(records=300),
                       policy={"kind": "epsilon_greedy"}, feedback={"style": "variance"})
    for d in ("a", "b"):
        assert main(["run", str(cfg), "--out", str(tmp_path / d)]) == EXIT_OK
    for name in ("runlog.jsonl", "summary.json", "heatmap.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_run_epsilon_greedy_improves(tmp_path):
    cfg = write_config(tmp_path / "c.yaml", synth=single_domain_synth(), policy={"kind": "epsilon_greedy"},
                       feedback={"style": "scale"})
    assert main(["run", str(cfg), "--out", str(tmp_path / "o"), "--seed", "5"]) == EXIT_OK
    arms = RunLog.read(tmp_path / "o" / "runlog.jsonl").arms()
    q = len(arms) // 4
    assert np.mean(arms[-q:] == 0) > np.mean(arms[:q] == 0)


def test_run_overrides(tmp_path):
    cfg = write_config(tmp_path / "c.yaml", synth=single_domain_synth(records=50), policy={"kind": "oracle"})
    assert main(["run", str(cfg), "--out", str(tmp_path / "o"), "--set", "policy.kind=ucb1",
                 "--set", "max_steps=20"]) == EXIT_OK
    log = RunLog.read(tmp_path / "o" / "runlog.jsonl")
    assert len(log) == 20 and log.meta["policy"]["kind"] == "ucb1"


def test_run_rejects_several_policies(tmp_path, capsys):
    cfg = write_config(tmp_path / "c.yaml", synth=single_domain_synth(records=10),
                       policies=[{"kind": "ucb1"}, {"kind": "random"}])
    assert main(["run", str(cfg), "--out", str(tmp_path / "o")]) == EXIT_USAGE
    assert "sweep" in capsys.readouterr().err


def test_sweep_single_seed_equals_run(tmp_path):
    cfg = write_config(tmp_path / "c.yaml", synth=single_domain_synth(records=200),
                       policy={"kind": "ucb1"}, seeds=[4])
    assert main(["run", str(cfg), "--out", str(tmp_path / "r")]) == EXIT_OK
    assert main(["sweep", str(cfg), "--out", str(tmp_path / "s")]) == EXIT_OK
    for name in ("runlog.jsonl", "summary.json", "heatmap.csv"):
        assert (tmp_path / "r" / name).read_bytes() == (tmp_path / "s" / "ucb1" / "seed_4" / name).read_bytes()


def test_sweep_aggregate_table(tmp_path):
    cfg = write_config(tmp_path / "c.yaml", synth=single_domain_synth(records=150),
                       policies=[{"kind": "random"}, {"kind": "epsilon_greedy"}, {"kind": "ucb1"}],
                       seeds=[1, 1])
    assert main(["sweep", str(cfg), "--out", str(tmp_path / "s"), "--jobs", "2"]) == EXIT_OK
    rows = read_csv(tmp_path / "s" / "aggregate.csv")
    assert rows[0][:4] == ["policy", "runs", "average_regret_mean", "average_regret_std"]
    assert [r[0] for r in rows[1:]] == ["random", "epsilon_greedy", "ucb1"]
    for r in rows[1:]:
        assert float(r[3]) == 0.0


def test_sweep_seed_override(tmp_path):
    cfg = write_config(tmp_path / "c.yaml", synth=single_domain_synth(records=50), policy={"kind": "random"})
    assert main(["sweep", str(cfg), "--out", str(tmp_path / "s"), "--seeds", "2,3"]) == EXIT_OK
    rows = read_csv(tmp_path / "s" / "aggregate.csv")
    assert rows[1][1] == "2"
    assert (tmp_path / "s" / "random" / "seed_3" / "runlog.jsonl").exists()


def test_report_outputs(tmp_path):
    cfg = write_config(tmp_path / "c.yaml", synth=single_domain_synth(records=250),
                       policies=[{"kind": "random"}, {"kind": "ucb1"}])
    assert main(["sweep", str(cfg), "--out", str(tmp_path / "s")]) == EXIT_OK
    logs = [str(tmp_path / "s" / p / "seed_0" / "runlog.jsonl") for p in ("random", "ucb1")]
    assert main(["report", *logs, "--interval", "100", "--out", str(tmp_path / "rep")]) == EXIT_OK
    rows = read_csv(tmp_path / "rep" / "regret_curve.csv")
    assert rows[0] == ["t", "random_seed0", "ucb1_seed0"]
    assert len(rows) == 251
    for col in (1, 2):
        curve = [float(r[col]) for r in rows[1:]]
        assert all(b >= a for a, b in zip(curve, curve[1:]))
    summary = json.loads((tmp_path / "s" / "random" / "seed_0" / "summary.json").read_text())
    assert float(rows[-1][1]) == summary["cumulative_regret"]
    heat = read_csv(tmp_path / "rep" / "ucb1_seed0_heatmap.csv")
    assert heat[0] == ["arm", "1", "101", "201"] and len(heat) == 9
    for name in ("regret_curve.png", "random_seed0_heatmap.png", "ucb1_seed0_heatmap.png"):
        assert (tmp_path / "rep" / name).read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_report_single_step(tmp_path):
    cfg = write_config(tmp_path / "c.yaml", synth=single_domain_synth(records=1), policy={"kind": "random"})
    assert main(["run", str(cfg), "--out", str(tmp_path / "o")]) == EXIT_OK
    log = str(tmp_path / "o" / "runlog.jsonl")
    assert main(["report", log, log, "--out", str(tmp_path / "rep"), "--no-figures"]) == EXIT_OK
    rows = read_csv(tmp_path / "rep" / "regret_curve.csv")
    assert rows[0] == ["t", "random_seed0", "random_seed0_1"] and len(rows) == 2
    heat = read_csv(tmp_path / "rep" / "random_seed0_heatmap.csv")
    assert heat[0] == ["arm", "1"]
    assert not list((tmp_path / "rep").glob("*.png"))


def test_run_does_not_touch_inputs(tmp_path, fixtures_dir):
    ds, arms = tmp_path / "ds.jsonl", tmp_path / "arms.txt"
    main(["score", "--ref", str(fixtures_dir / "ref.txt"), "--hyp", str(fixtures_dir / "hyp_nmt.txt"),
          "--hyp", str(fixtures_dir / "hyp_smt.txt"), "--out", str(ds), "--arms-out", str(arms)])
    before = ds.read_bytes()
    cfg = write_config(tmp_path / "c.yaml", dataset="ds.jsonl", arms_file="arms.txt",
                       policy={"kind": "oracle"}, output_dir="out")
    assert main(["run", str(cfg)]) == EXIT_OK
    assert ds.read_bytes() == before
    summary = json.loads((tmp_path / "out" / "summary.json").read_text())
    assert summary["corpus_bleu"] is not None


@pytest.mark.parametrize("argv", [[], ["frobnicate"], ["run"], ["report", "x.jsonl", "--interval", "0"]])
def test_usage_errors(argv):
    with pytest.raises(SystemExit) as e:
        main(argv)
    assert e.value.code == EXIT_USAGE


def test_config_errors_are_usage_errors(tmp_path, capsys):
    cfg = write_config(tmp_path / "c.yaml", synth=single_domain_synth(records=5), colour="blue")
    assert main(["run", str(cfg)]) == EXIT_USAGE
    assert "colour" in capsys.readouterr().err


def test_bad_data_is_exit_two(tmp_path):
    (tmp_path / "ds.jsonl").write_text('{"id": "a", "domain": "d", "source": "x", "scores": [1, 2, 3]}\n')
    cfg = write_config(tmp_path / "c.yaml", dataset="ds.jsonl", arms=["a", "b"])
    assert main(["run", str(cfg), "--out", str(tmp_path / "o")]) == EXIT_DATA
    assert main(["report", str(tmp_path / "missing.jsonl"), "--out", str(tmp_path / "r")]) == EXIT_DATA


def test_config_validation(tmp_path):
    with pytest.raises(ConfigError):
        read_config(write_config(tmp_path / "a.yaml", policy={"kind": "ucb1"}))
    with pytest.raises(ConfigError):
        read_config(write_config(tmp_path / "b.yaml", synth=single_domain_synth(), seeds=[]))
    with pytest.raises(ConfigError):
        read_config(write_config(tmp_path / "c.yaml", synth=single_domain_synth(),
                                 policies=[{"kind": "ucb1"}, {"kind": "ucb1"}]))
    cfg = read_config(write_config(tmp_path / "d.yaml", synth=single_domain_synth(),
                                   policies=[{"kind": "linucb", "lambda": 2.0},
                                             {"kind": "linucb", "alpha": 0.5, "name": "linucb-narrow"}]))
    assert cfg.policies[0].lam == 2.0
    assert [p.label for p in cfg.policies] == ["linucb", "linucb-narrow"]
    assert cfg.plan_for(9).seed == 9


@pytest.mark.parametrize("name", ["mixed_domains.yaml", "cyclic_domains.yaml"])
def test_shipped_configs_parse(name):
    cfg = read_config(CONFIGS / name)
    assert cfg.synth is not None and cfg.policies
