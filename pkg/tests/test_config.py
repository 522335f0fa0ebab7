import pytest

from molgfn.config import (
    RunConfig,
    desk_config,
    load_config,
    paper_config,
    preset,
    save_config,
)
from molgfn.errors import ConfigError


class TestDefaults:
    def test_paper_table_values(self):
        cfg = paper_config()
        assert cfg.beta == 96.0
        assert cfg.OOB_percent == 0.1
        assert cfg.sampling_batch_size == 2048
        assert cfg.training_batch_size == 64
        assert cfg.learning_rate == 1e-4
        assert cfg.Z_learning_rate == 1e-3
        assert cfg.online_offline_mix_ratio == 0.5
        assert cfg.gfn_loss_coeff == 0.04
        assert cfg.MLE_coeff == 20.0
        assert (cfg.num_emb, cfg.num_layers, cfg.num_mlp_layers, cfg.num_heads) == (128, 8, 4, 2)
        assert cfg.illegal_action_logreward == -512.0
        assert cfg.weight_decay == 1e-8
        assert cfg.momentum == 0.9
        assert cfg.adam_eps == 1e-8
        assert cfg.lr_decay == cfg.Z_lr_decay == 20000.0
        assert cfg.clip_grad_param == 10.0
        assert cfg.random_action_prob == cfg.random_stop_prob == 0.001
        assert cfg.num_back_steps_max == 25
        assert (cfg.max_traj_len, cfg.max_nodes, cfg.max_edges) == (40, 45, 50)
        assert cfg.tb_p_b_is_parameterized
        assert cfg.num_thermometer_dim == 16
        assert cfg.sample_temp == 1.0
        assert cfg.random_seed == 1428570

    def test_desk_profile(self):
        cfg = desk_config()
        assert (cfg.num_emb, cfg.num_layers) == (32, 3)
        assert cfg.sampling_batch_size == 128

    def test_default_property_table(self):
        cfg = desk_config()
        by_name = {s.name: s for s in cfg.properties}
        assert (by_name["tpsa"].c_low, by_name["tpsa"].c_high, by_name["tpsa"].d) == (60.0, 100.0, 0)
        assert (by_name["qed"].c_low, by_name["qed"].c_high, by_name["qed"].d) == (0.65, 0.8, 0)
        assert (by_name["sas"].c_low, by_name["sas"].c_high, by_name["sas"].d) == (1.0, 3.0, 0)
        assert (by_name["num_rings"].c_low, by_name["num_rings"].c_high, by_name["num_rings"].d) == (1.0, 3.0, 1)
        assert by_name["tpsa"].lam == 20.0
        assert all(by_name[k].lam == 1.0 for k in ("qed", "sas", "num_rings"))


class TestFileRoundTrip:
    def test_save_load(self, tmp_path):
        cfg = desk_config(train_steps=123, beta=64.0, corpus="data/desk_corpus.smi")
        p = tmp_path / "run.ini"
        save_config(cfg, p)
        back = load_config(p)
        assert back.fingerprint() == cfg.fingerprint()

    def test_unknown_key_rejected(self, tmp_path):
        p = tmp_path / "bad.ini"
        p.write_text("[run]\nnot_a_key = 1\n")
        with pytest.raises(ConfigError):
            load_config(p)

    def test_unknown_section_rejected(self, tmp_path):
        p = tmp_path / "bad.ini"
        p.write_text("[wat]\nx = 1\n")
        with pytest.raises(ConfigError):
            load_config(p)

    def test_property_section(self, tmp_path):
        p = tmp_path / "run.ini"
        p.write_text("[run]\nprofile = desk\n\n[property.tpsa]\nlow = 40\nhigh = 60\n")
        cfg = load_config(p)
        tpsa = next(s for s in cfg.properties if s.name == "tpsa")
        assert (tpsa.c_low, tpsa.c_high) == (40.0, 60.0)
        assert len(cfg.properties) == 1  # explicit sections replace the defaults

    def test_task_section(self, tmp_path):
        p = tmp_path / "run.ini"
        p.write_text(
            "[run]\nprofile = desk\n\n[task]\nproperty = mol_wt\nlow = 100\nhigh = 800\nd = -1\nlambda = 50\n"
        )
        cfg = load_config(p)
        assert cfg.task.name == "mol_wt" and cfg.task.d == -1

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "nope.ini")


class TestValidation:
    def test_back_steps_must_fit_budget(self):
        with pytest.raises(ConfigError):
            RunConfig(num_back_steps_max=40, max_traj_len=40)

    def test_only_mul_aggregation(self):
        with pytest.raises(ConfigError):
            RunConfig(reward_aggregation="sum")


class TestPresets:
    def test_tpsa_targeting(self):
        cfg = preset("property_targeting_tpsa_40_60")
        tpsa = next(s for s in cfg.properties if s.name == "tpsa")
        assert (tpsa.c_low, tpsa.c_high) == (40.0, 60.0)
        assert cfg.beta == 64.0
        assert cfg.task is None

    def test_prop_opt_logp(self):
        cfg = preset("prop_opt_logp")
        assert cfg.task.name == "logp"
        assert (cfg.task.c_low, cfg.task.c_high, cfg.task.d) == (-5.0, 6.0, -1)

    def test_prop_opt_molwt(self):
        cfg = preset("prop_opt_molwt")
        assert (cfg.task.c_low, cfg.task.c_high, cfg.task.d) == (100.0, 800.0, -1)

    def test_dra_shifts_tpsa_and_sets_task(self):
        cfg = preset("dra_molwt_tpsa_100_120")
        tpsa = next(s for s in cfg.properties if s.name == "tpsa")
        assert (tpsa.c_low, tpsa.c_high) == (100.0, 120.0)
        assert cfg.task.c_low == 340.0

    def test_unknown_preset(self):
        with pytest.raises(ConfigError):
            preset("nope")

    def test_fingerprint_distinguishes_presets(self):
        a = preset("prop_opt_logp")
        b = preset("prop_opt_molwt")
        assert a.fingerprint() != b.fingerprint()
