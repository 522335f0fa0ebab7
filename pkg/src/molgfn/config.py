"""Run configuration: hyperparameter names follow the standard setup tables
verbatim so runs can be cross-referenced; unknown keys are rejected.

Config files are INI-style: a [run] section for scalars, one
[property.<name>] section per conditional property, and an optional [task]
section for the fine-tuning task reward.
"""

from __future__ import annotations

import configparser
import hashlib
import json
from dataclasses import asdict, dataclass, replace

from .conditioning import DEFAULT_PROPERTY_SPECS, TASK_BOUNDS, PropertySpec
from .errors import ConfigError


@dataclass(frozen=True)
class RunConfig:
    profile: str = "desk"
    random_seed: int = 1428570
    corpus: str = ""
    out_dir: str = "runs/out"
    train_steps: int = 20000

    # sampled-trajectory / environment budgets
    max_traj_len: int = 40
    max_nodes: int = 45
    max_edges: int = 50
    num_back_steps_max: int = 25
    elements: tuple[str, ...] = ("C", "N", "O", "F", "S", "P")
    orders: tuple[int, ...] = (1, 2, 3)
    chirality_enabled: bool = True
    fixed_conditionals: bool = False  # train on the desired ranges verbatim

    # reward
    beta: float = 96.0
    OOB_percent: float = 0.1
    reward_aggregation: str = "mul"
    illegal_action_logreward: float = -512.0

    # batching
    sampling_batch_size: int = 2048
    training_batch_size: int = 64
    online_offline_mix_ratio: float = 0.5

    # model
    num_emb: int = 128
    num_layers: int = 8
    num_mlp_layers: int = 4
    num_heads: int = 2
    i2h_width: int = 1
    num_thermometer_dim: int = 16
    tb_p_b_is_parameterized: bool = True

    # optimization
    learning_rate: float = 1e-4
    Z_learning_rate: float = 1e-3
    lr_decay: float = 20000.0
    Z_lr_decay: float = 20000.0
    weight_decay: float = 1e-8
    momentum: float = 0.9
    adam_eps: float = 1e-8
    clip_grad_type: str = "norm"
    clip_grad_param: float = 10.0
    gfn_loss_coeff: float = 0.04  # lambda_1
    MLE_coeff: float = 20.0  # lambda_2

    # sampling behaviour
    random_action_prob: float = 0.001
    random_stop_prob: float = 0.001
    sample_temp: float = 1.0

    # bookkeeping
    checkpoint_every: int = 1000
    eval_every: int = 5000
    eval_samples: int = 512
    num_workers: int = 2
    num_data_loader_workers: int = 8
    max_num_iter: int = 500000
    bootstrap_own_reward: bool = False
    gfn_batch_shuffle: bool = False
    reward_loss_multiplier: float = 1.0
    zinc_rad_scale: float = 1.0

    # conditional properties and optional fine-tuning task
    properties: tuple[PropertySpec, ...] = DEFAULT_PROPERTY_SPECS
    task: PropertySpec | None = None
    finetune_mode: str = "online"  # or "hybrid"
    noise_sd: float = 0.01

    def __post_init__(self):
        if self.num_back_steps_max > self.max_traj_len - 1:
            raise ConfigError("num_back_steps_max must leave room for the Stop action")
        if self.reward_aggregation != "mul":
            raise ConfigError("only multiplicative reward aggregation is supported")
        if self.clip_grad_type != "norm":
            raise ConfigError("only norm gradient clipping is supported")
        if not 0 <= self.online_offline_mix_ratio <= 1:
            raise ConfigError("online_offline_mix_ratio must be in [0,1]")
        if self.finetune_mode not in ("online", "hybrid"):
            raise ConfigError("finetune_mode must be 'online' or 'hybrid'")

    def fingerprint(self) -> str:
        payload = asdict(self)
        payload["properties"] = [asdict(p) for p in self.properties]
        payload["task"] = asdict(self.task) if self.task else None
        blob = json.dumps(payload, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


DESK_OVERRIDES = dict(
    num_emb=32,
    num_layers=3,
    num_mlp_layers=2,
    sampling_batch_size=128,
    training_batch_size=64,
    train_steps=20000,
    max_nodes=16,
    max_edges=19,
    max_traj_len=32,
    num_back_steps_max=25,
    eval_every=2500,
    checkpoint_every=1000,
)


def desk_config(**overrides) -> RunConfig:
    kw = dict(DESK_OVERRIDES)
    kw.update(overrides)
    return RunConfig(profile="desk", **kw)


def paper_config(**overrides) -> RunConfig:
    return RunConfig(profile="paper", **overrides)


_INT_KEYS = {
    "random_seed", "train_steps", "max_traj_len", "max_nodes", "max_edges",
    "num_back_steps_max", "sampling_batch_size", "training_batch_size",
    "num_emb", "num_layers", "num_mlp_layers", "num_heads", "i2h_width",
    "num_thermometer_dim", "checkpoint_every", "eval_every", "eval_samples",
    "num_workers", "num_data_loader_workers", "max_num_iter",
}
_FLOAT_KEYS = {
    "beta", "OOB_percent", "illegal_action_logreward", "online_offline_mix_ratio",
    "learning_rate", "Z_learning_rate", "lr_decay", "Z_lr_decay", "weight_decay",
    "momentum", "adam_eps", "clip_grad_param", "gfn_loss_coeff", "MLE_coeff",
    "random_action_prob", "random_stop_prob", "sample_temp",
    "reward_loss_multiplier", "zinc_rad_scale", "noise_sd",
}
_BOOL_KEYS = {
    "tb_p_b_is_parameterized", "bootstrap_own_reward", "gfn_batch_shuffle",
    "chirality_enabled", "fixed_conditionals",
}
_STR_KEYS = {
    "profile", "corpus", "out_dir", "reward_aggregation", "clip_grad_type",
    "finetune_mode",
}


def _convert(key: str, raw: str):
    if key == "elements":
        return tuple(x.strip() for x in raw.split(",") if x.strip())
    if key == "orders":
        return tuple(int(x) for x in raw.split(","))
    if key in _INT_KEYS:
        return int(raw)
    if key in _FLOAT_KEYS:
        return float(raw)
    if key in _BOOL_KEYS:
        low = raw.strip().lower()
        if low in ("true", "1", "yes"):
            return True
        if low in ("false", "0", "no"):
            return False
        raise ConfigError(f"{key}: cannot parse boolean from {raw!r}")
    if key in _STR_KEYS:
        return raw.strip()
    raise ConfigError(f"unknown config key {key!r}")


def _parse_property(name: str, section) -> PropertySpec:
    known = {"low", "high", "d", "lambda", "min", "max", "sigma"}
    unknown = set(section) - known
    if unknown:
        raise ConfigError(f"[property.{name}] unknown keys: {sorted(unknown)}")
    defaults = {s.name: s for s in DEFAULT_PROPERTY_SPECS}
    base = defaults.get(name)
    lo_star, hi_star = TASK_BOUNDS.get(name, (None, None))
    if base is not None:
        lo_star = base.lo_star if lo_star is None else lo_star
        hi_star = base.hi_star if hi_star is None else hi_star
    if "min" in section:
        lo_star = float(section["min"])
    if "max" in section:
        hi_star = float(section["max"])
    if lo_star is None or hi_star is None:
        raise ConfigError(f"[property.{name}] needs min/max permissible bounds")
    return PropertySpec(
        name=name,
        lo_star=lo_star,
        hi_star=hi_star,
        c_low=float(section["low"]) if "low" in section else (base.c_low if base else 0.0),
        c_high=float(section["high"]) if "high" in section else (base.c_high if base else 1.0),
        d=int(section["d"]) if "d" in section else (base.d if base else 0),
        lam=float(section["lambda"]) if "lambda" in section else (base.lam if base else 1.0),
        sigma=float(section["sigma"]) if "sigma" in section else None,
    )


def load_config(path) -> RunConfig:
    cp = configparser.ConfigParser()
    read = cp.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path}")
    kw: dict = {}
    props: list[PropertySpec] = []
    task: PropertySpec | None = None
    for section in cp.sections():
        if section == "run":
            for key, raw in cp["run"].items():
                # configparser lowercases keys; restore canonical casing
                canon = _CANONICAL.get(key)
                if canon is None:
                    raise ConfigError(f"unknown config key {key!r}")
                kw[canon] = _convert(canon, raw)
        elif section.startswith("property."):
            props.append(_parse_property(section.split(".", 1)[1], cp[section]))
        elif section == "task":
            sec = dict(cp["task"])
            name = sec.pop("property", None)
            if name is None:
                raise ConfigError("[task] needs a 'property' key")
            task = _parse_property(name, sec)
        else:
            raise ConfigError(f"unknown config section [{section}]")
    profile = kw.pop("profile", "desk")
    if props:
        kw["properties"] = tuple(props)
    if task is not None:
        kw["task"] = task
    if profile == "desk":
        return desk_config(**kw)
    if profile == "paper":
        return paper_config(**kw)
    raise ConfigError(f"unknown profile {profile!r}")


_CANONICAL = {f.lower(): f for f in RunConfig.__dataclass_fields__ if f not in ("properties", "task")}


def save_config(cfg: RunConfig, path) -> None:
    cp = configparser.ConfigParser()
    cp["run"] = {}
    for name in RunConfig.__dataclass_fields__:
        if name in ("properties", "task"):
            continue
        value = getattr(cfg, name)
        if isinstance(value, tuple):
            value = ",".join(str(x) for x in value)
        cp["run"][name] = str(value)
    for spec in cfg.properties:
        cp[f"property.{spec.name}"] = {
            "low": str(spec.c_low),
            "high": str(spec.c_high),
            "d": str(spec.d),
            "lambda": str(spec.lam),
            "min": str(spec.lo_star),
            "max": str(spec.hi_star),
        }
    if cfg.task is not None:
        s = cfg.task
        cp["task"] = {
            "property": s.name,
            "low": str(s.c_low),
            "high": str(s.c_high),
            "d": str(s.d),
            "lambda": str(s.lam),
            "min": str(s.lo_star),
            "max": str(s.hi_star),
        }
    with open(path, "w", encoding="utf-8") as fh:
        cp.write(fh)


# presets for the fine-tuning experiment families
def preset(name: str, **overrides) -> RunConfig:
    presets = {
        "property_targeting_tpsa_40_60": dict(
            properties=_with_tpsa(40.0, 60.0), beta=64.0
        ),
        "property_targeting_tpsa_100_120": dict(
            properties=_with_tpsa(100.0, 120.0), beta=64.0
        ),
        "prop_opt_molwt": dict(
            task=PropertySpec("mol_wt", 0.0, 900.0, 100.0, 800.0, -1, lam=50.0),
            beta=64.0,
        ),
        "prop_opt_logp": dict(
            task=PropertySpec("logp", -10.0, 10.0, -5.0, 6.0, -1, lam=2.0),
            beta=64.0,
        ),
        "prop_const_molwt": dict(
            task=PropertySpec("mol_wt", 0.0, 900.0, 302.0, 800.0, -1, lam=50.0),
            beta=64.0,
        ),
        "prop_const_logp": dict(
            task=PropertySpec("logp", -10.0, 10.0, 1.65, 5.0, -1, lam=2.0),
            beta=64.0,
        ),
        "dra_molwt_tpsa_100_120": dict(
            properties=_with_tpsa(100.0, 120.0),
            task=PropertySpec("mol_wt", 0.0, 900.0, 340.0, 800.0, -1, lam=50.0),
            beta=64.0,
        ),
        "dra_molwt_tpsa_40_60": dict(
            properties=_with_tpsa(40.0, 60.0),
            task=PropertySpec("mol_wt", 0.0, 900.0, 300.0, 800.0, -1, lam=50.0),
            beta=64.0,
        ),
        "dra_logp_tpsa_100_120": dict(
            properties=_with_tpsa(100.0, 120.0),
            task=PropertySpec("logp", -10.0, 10.0, 1.5, 5.0, -1, lam=2.0),
            beta=64.0,
        ),
        "dra_logp_tpsa_40_60": dict(
            properties=_with_tpsa(40.0, 60.0),
            task=PropertySpec("logp", -10.0, 10.0, 2.4, 5.0, -1, lam=2.0),
            beta=64.0,
        ),
    }
    if name not in presets:
        raise ConfigError(f"unknown preset {name!r}; available: {sorted(presets)}")
    kw = presets[name]
    kw.update(overrides)
    return desk_config(**kw)


def _with_tpsa(lo: float, hi: float) -> tuple[PropertySpec, ...]:
    out = []
    for s in DEFAULT_PROPERTY_SPECS:
        if s.name == "tpsa":
            out.append(replace(s, c_low=lo, c_high=hi))
        else:
            out.append(s)
    return tuple(out)
