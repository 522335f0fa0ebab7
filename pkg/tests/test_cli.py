import json
import os

import pytest
from click.testing import CliRunner

from molgfn.cli import main
from molgfn.checkpoint import save_checkpoint
from molgfn.config import desk_config, save_config
from molgfn.trainer import OptimizerState, make_policy


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def tiny_ini(tmp_path, corpus_path):
    cfg = desk_config(
        num_emb=16,
        num_layers=1,
        num_mlp_layers=1,
        sampling_batch_size=4,
        training_batch_size=4,
        train_steps=2,
        max_nodes=8,
        max_edges=9,
        max_traj_len=14,
        num_back_steps_max=13,
        checkpoint_every=2,
        eval_every=1000,
        eval_samples=4,
        corpus=str(corpus_path),
        num_workers=1,
    )
    p = tmp_path / "run.ini"
    save_config(cfg, p)
    return p, cfg


@pytest.fixture
def tiny_checkpoint(tmp_path, tiny_ini):
    _, cfg = tiny_ini
    net = make_policy(cfg)
    path = tmp_path / "init.npz"
    save_checkpoint(path, net, OptimizerState.for_net(net), 0, cfg)
    return path


class TestIngest:
    def test_labels_cached(self, runner, tmp_path):
        smi = tmp_path / "in.smi"
        smi.write_text("CCO\nc1ccccc1\nbad(((\n")
        out = tmp_path / "labels.jsonl"
        res = runner.invoke(main, ["ingest", str(smi), "--out", str(out)])
        assert res.exit_code == 0, res.output
        rows = [json.loads(l) for l in out.read_text().splitlines()]
        assert len(rows) == 2
        assert {"smiles", "tpsa", "qed", "sas", "num_rings", "mol_wt", "logp"} <= set(rows[0])


class TestPretrainFinetuneSampleEval:
    def test_end_to_end(self, runner, tmp_path, tiny_ini, corpus_path):
        ini, cfg = tiny_ini
        out = tmp_path / "run_out"
        res = runner.invoke(main, ["pretrain", "-c", str(ini), "-o", str(out)])
        assert res.exit_code == 0, res.output
        final = out / "checkpoints" / "final.npz"
        assert final.exists()
        assert (out / "config.ini").exists()
        assert (out / "stats.jsonl").exists()
        assert (out / "training_curves.png").exists()

        # sample from it
        samples = tmp_path / "samples.jsonl"
        res = runner.invoke(
            main,
            ["sample", str(final), "-n", "6", "-c", str(ini), "--out", str(samples)],
        )
        assert res.exit_code == 0, res.output
        assert len(samples.read_text().splitlines()) == 6

        # evaluate the sample file: JSON + CSV + figures
        eval_dir = tmp_path / "eval_out"
        res = runner.invoke(
            main,
            [
                "eval", str(samples), "-c", str(ini),
                "--corpus", str(corpus_path), "-o", str(eval_dir),
            ],
        )
        assert res.exit_code == 0, res.output
        assert (eval_dir / "metrics.json").exists()
        assert (eval_dir / "metrics.csv").exists()
        assert (eval_dir / "samples.csv").exists()
        assert (eval_dir / "property_histograms.png").exists()
        assert (eval_dir / "reward_histogram.png").exists()
        rep = json.loads((eval_dir / "metrics.json").read_text())
        assert rep["validity"] == 1.0

    def test_finetune_from_checkpoint(self, runner, tmp_path, tiny_ini, tiny_checkpoint):
        ini, cfg = tiny_ini
        out = tmp_path / "ft_out"
        res = runner.invoke(
            main,
            [
                "finetune", str(tiny_checkpoint), "-c", str(ini), "-o", str(out),
                "-s", "beta=64", "-s", "train_steps=2",
            ],
        )
        assert res.exit_code == 0, res.output
        assert (out / "checkpoints" / "final.npz").exists()

    def test_finetune_needs_checkpoint_or_flag(self, runner, tiny_ini):
        ini, _ = tiny_ini
        res = runner.invoke(main, ["finetune", "-c", str(ini)])
        assert res.exit_code == 1
        assert "error" in res.output

    def test_sample_n_zero_writes_empty_file(self, runner, tmp_path, tiny_ini, tiny_checkpoint):
        ini, _ = tiny_ini
        out = tmp_path / "empty.jsonl"
        res = runner.invoke(
            main, ["sample", str(tiny_checkpoint), "-n", "0", "-c", str(ini), "--out", str(out)]
        )
        assert res.exit_code == 0, res.output
        assert out.read_text() == ""


class TestEnumerateCmd:
    def test_dump(self, runner, tmp_path):
        out = tmp_path / "enum.json"
        res = runner.invoke(
            main,
            ["enumerate", "--elements", "C", "--max-atoms", "2", "--orders", "1,2,3", "--out", str(out)],
        )
        assert res.exit_code == 0, res.output
        assert len(json.loads(out.read_text())) == 4


class TestConfigErrors:
    def test_bad_override(self, runner, tiny_ini, tiny_checkpoint):
        ini, _ = tiny_ini
        res = runner.invoke(
            main, ["sample", str(tiny_checkpoint), "-c", str(ini), "-s", "nope=1"]
        )
        assert res.exit_code == 1
        assert "unknown config key" in res.output

    def test_out_dir_env_override(self, runner, tmp_path, tiny_ini, monkeypatch):
        ini, _ = tiny_ini
        target = tmp_path / "via_env"
        monkeypatch.setenv("MOLGFN_OUT_DIR", str(target))
        res = runner.invoke(main, ["pretrain", "-c", str(ini)])
        assert res.exit_code == 0, res.output
        assert target.exists()
