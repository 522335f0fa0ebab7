"""Trajectory construction, trajectory-balance + MLE losses, training loops.

Online trajectories roll the forward policy from the empty graph in lockstep
batches; offline trajectories deconstruct corpus molecules with the backward
policy and are replayed forward (index maps keep the replayed states exactly
consistent with the recorded actions, so the final state reconstructs the
source molecule). Losses are assembled over one collated batch per policy
direction; Adam with global-norm clipping and exponentially decaying
learning rates applies the update.
"""

from __future__ import annotations

import json
import math
import os
import time
from dataclasses import dataclass, field

import numpy as np
import torch

from . import graph as G
from .checkpoint import load_checkpoint, save_checkpoint  # noqa: F401 (re-export)
from .conditioning import (
    ConditionalRange,
    LOG_REWARD_FLOOR,
    conditional_reward,
    encode_conditional,
    fixed_range,
    log_reward,
    reward_for_spec,
    sample_conditional,
)
from .config import RunConfig
from .errors import NonFiniteGradient, NonFiniteLoss
from .graph import EnvSpec, GraphAction, MolGraph
from .policy import PolicyNet, collate, init_params, sample_action
from .props import property_value
from .props.sas import default_fragment_table


def build_env(cfg: RunConfig) -> EnvSpec:
    return EnvSpec(
        elements=cfg.elements,
        orders=cfg.orders,
        chirality_enabled=cfg.chirality_enabled,
        max_nodes=cfg.max_nodes,
        max_edges=cfg.max_edges,
    )


def make_policy(cfg: RunConfig, seed: int | None = None) -> PolicyNet:
    return init_params(
        cfg.random_seed if seed is None else seed,
        build_env(cfg),
        num_properties=len(cfg.properties),
        num_emb=cfg.num_emb,
        num_layers=cfg.num_layers,
        num_mlp_layers=cfg.num_mlp_layers,
        num_heads=cfg.num_heads,
        i2h_width=cfg.i2h_width,
    )


def _rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed, *key))))


@dataclass
class CondSample:
    ranges: ConditionalRange
    encoding: np.ndarray


@dataclass
class Trajectory:
    states: list[MolGraph]
    actions: list[GraphAction]
    fwd_slots: list[int]
    fwd_masks: list[np.ndarray]
    bwd_slots: list[int]  # inverse-action slot in states[t+1]
    cond: CondSample
    origin: str  # online | offline
    complete: bool = False
    reward: float = 0.0
    log_reward: float = LOG_REWARD_FLOOR
    sampled_logprob: float = 0.0

    @property
    def final_state(self) -> MolGraph:
        return self.states[-1]

    def __len__(self) -> int:
        return len(self.actions)


class RewardEngine:
    """Terminal reward: conditional goal reward, optionally scaled by the
    task-range reward or an external scorer (the empirical-model slot)."""

    def __init__(self, cfg: RunConfig, external_reward=None, sas_table=None):
        self.specs = cfg.properties
        self.beta = cfg.beta
        self.task = cfg.task
        self.external = external_reward
        self.sas_table = sas_table if sas_table is not None else default_fragment_table()
        self.floor = cfg.illegal_action_logreward

    def needed_names(self) -> list[str]:
        names = [s.name for s in self.specs]
        if self.task is not None and self.task.name not in names:
            names.append(self.task.name)
        return names

    def values(self, g: MolGraph) -> dict[str, float]:
        return {n: property_value(g, n, self.sas_table) for n in self.needed_names()}

    def reward(self, g: MolGraph, cond: ConditionalRange) -> tuple[float, float]:
        vals = self.values(g)
        r = conditional_reward(self.specs, cond, vals)
        if self.task is not None:
            r *= reward_for_spec(
                self.task, vals[self.task.name], self.task.c_low, self.task.c_high
            )
        if self.external is not None:
            r *= float(self.external(g))
        lr = log_reward(r, self.beta)
        return r, max(lr, self.floor)


def sample_cond(cfg: RunConfig, rng, labels: dict[str, float] | None = None) -> CondSample:
    ranges = sample_conditional(cfg.properties, rng, labels=labels, oob_percent=cfg.OOB_percent)
    return CondSample(ranges, encode_conditional(cfg.properties, ranges, cfg.num_thermometer_dim))


def eval_cond(cfg: RunConfig) -> CondSample:
    ranges = fixed_range(cfg.properties)
    return CondSample(ranges, encode_conditional(cfg.properties, ranges, cfg.num_thermometer_dim))


# ---------------------------------------------------------------------------
# rollouts


def rollout_online_batch(
    net: PolicyNet,
    env: EnvSpec,
    cfg: RunConfig,
    conds: list[CondSample],
    rngs: list[np.random.Generator],
    engine: RewardEngine | None = None,
    greedy: bool = False,
) -> list[Trajectory]:
    b = len(conds)
    trajs = [
        Trajectory([G.new_graph()], [], [], [], [], conds[i], "online") for i in range(b)
    ]
    active = list(range(b))
    cond_mat = np.stack([c.encoding for c in conds])
    eps = 0.0 if greedy else cfg.random_action_prob
    eps_stop = 0.0 if greedy else cfg.random_stop_prob
    for t in range(cfg.max_traj_len):
        if not active:
            break
        force = t == cfg.max_traj_len - 1
        sub = [trajs[i].states[-1] for i in active]
        masks = [G.legal_forward_mask(s, env, force_stop=force) for s in sub]
        batch = collate(sub, cond_mat[active], masks, env, ["f"] * len(active))
        with torch.no_grad():
            flat = net.flat_logits(batch).numpy()
        starts = np.concatenate([[0], np.cumsum(batch.seg_counts)])
        nxt = []
        for k, i in enumerate(active):
            lo, hi = starts[k], starts[k + 1]
            slot, lp = sample_action(
                batch.slot_ids[lo:hi],
                flat[lo:hi],
                rngs[i],
                temp=cfg.sample_temp,
                random_action_prob=eps,
                random_stop_prob=eps_stop,
            )
            tr = trajs[i]
            state = tr.states[-1]
            action = G.forward_slot_to_action(state, env, slot)
            tr.actions.append(action)
            tr.fwd_slots.append(slot)
            tr.fwd_masks.append(masks[k])
            tr.sampled_logprob += lp
            if action.kind == G.ActionKind.STOP:
                tr.complete = True
            else:
                ns = G.apply_action(state, action, env)
                tr.bwd_slots.append(
                    G.backward_action_to_slot(ns, env, G.forward_inverse(state, action))
                )
                tr.states.append(ns)
                nxt.append(i)
        active = nxt
    if engine is not None:
        finalize_rewards(trajs, engine)
    return trajs


def finalize_rewards(trajs: list[Trajectory], engine: RewardEngine) -> None:
    for tr in trajs:
        if tr.complete and G.is_terminal_valid(tr.final_state):
            tr.reward, tr.log_reward = engine.reward(tr.final_state, tr.cond.ranges)
        else:  # budget exhausted without a legal Stop
            tr.reward, tr.log_reward = 0.0, engine.floor


def rollout_online(net, env, cfg, cond: CondSample, rng, engine=None) -> Trajectory:
    return rollout_online_batch(net, env, cfg, [cond], [rng], engine)[0]


def _deconstruction_record(g: MolGraph, b: GraphAction):
    """Forward inverse of backward action ``b`` at ``g``, in successor
    coordinates, plus the deleted node id (for the index map update)."""
    if b.kind == G.ActionKind.DELETE_NODE:
        v = b.a
        elem = g.elements[v]
        if g.num_nodes == 1:
            return GraphAction(G.ActionKind.ADD_NODE, -1, elem), v
        u = g.neighbors[v][0]
        return GraphAction(G.ActionKind.ADD_NODE, u - (u > v), elem), v
    if b.kind == G.ActionKind.DELETE_EDGE:
        return GraphAction(G.ActionKind.ADD_EDGE, min(b.a, b.b), max(b.a, b.b)), None
    if b.kind == G.ActionKind.REMOVE_NODE_ATTR:
        return GraphAction(G.ActionKind.SET_NODE_ATTR, b.a, g.chirality[b.a]), None
    u, v = min(b.a, b.b), max(b.a, b.b)
    return GraphAction(G.ActionKind.SET_EDGE_ATTR, u, v, g.edge_orders[(u, v)]), None


def rollout_offline_batch(
    net: PolicyNet,
    env: EnvSpec,
    cfg: RunConfig,
    mols: list[MolGraph],
    conds: list[CondSample],
    rngs: list[np.random.Generator],
    engine: RewardEngine | None = None,
) -> list[Trajectory]:
    b = len(mols)
    cur = list(mols)
    recs: list[list] = [[] for _ in range(b)]
    active = list(range(b))
    cond_mat = np.stack([c.encoding for c in conds])
    max_back = min(cfg.num_back_steps_max, cfg.max_traj_len - 1)
    for _ in range(max_back):
        if not active:
            break
        sub = [cur[i] for i in active]
        masks = [G.legal_backward_mask(s, env) for s in sub]
        batch = collate(sub, cond_mat[active], masks, env, ["b"] * len(active))
        with torch.no_grad():
            flat = net.flat_logits(batch).numpy()
        starts = np.concatenate([[0], np.cumsum(batch.seg_counts)])
        nxt = []
        for k, i in enumerate(active):
            lo, hi = starts[k], starts[k + 1]
            slot, _ = sample_action(
                batch.slot_ids[lo:hi],
                flat[lo:hi],
                rngs[i],
                temp=cfg.sample_temp,
                random_action_prob=cfg.random_action_prob,
            )
            back = G.backward_slot_to_action(cur[i], env, slot)
            recs[i].append(_deconstruction_record(cur[i], back))
            cur[i] = G.apply_action(cur[i], back, env)
            if cur[i].num_nodes:
                nxt.append(i)
        active = nxt

    out = []
    for i in range(b):
        out.append(_replay_forward(cur[i], recs[i], conds[i], env))
    if engine is not None:
        finalize_rewards(out, engine)
    return out


def _replay_forward(deepest: MolGraph, recs: list, cond: CondSample, env: EnvSpec) -> Trajectory:
    tr = Trajectory([deepest], [], [], [], [], cond, "offline")
    phi = {w: w for w in range(deepest.num_nodes)}
    g = deepest
    for fwd, deleted in reversed(recs):
        if fwd.kind == G.ActionKind.ADD_NODE:
            src = -1 if fwd.a < 0 else phi[fwd.a]
            action = GraphAction(G.ActionKind.ADD_NODE, src, fwd.b)
            new_id = g.num_nodes
            nphi = {deleted: new_id}
            for w in range(len(phi) + 1):
                if w != deleted:
                    nphi[w] = phi[w - (w > deleted)]
            phi = nphi
        elif fwd.kind == G.ActionKind.ADD_EDGE:
            u, v = phi[fwd.a], phi[fwd.b]
            action = GraphAction(G.ActionKind.ADD_EDGE, min(u, v), max(u, v))
        elif fwd.kind == G.ActionKind.SET_NODE_ATTR:
            action = GraphAction(G.ActionKind.SET_NODE_ATTR, phi[fwd.a], fwd.b)
        else:
            u, v = phi[fwd.a], phi[fwd.b]
            action = GraphAction(G.ActionKind.SET_EDGE_ATTR, min(u, v), max(u, v), fwd.c)
        mask = G.legal_forward_mask(g, env)
        slot = G.forward_action_to_slot(g, env, action)
        ns = G.apply_action(g, action, env)
        tr.actions.append(action)
        tr.fwd_slots.append(slot)
        tr.fwd_masks.append(mask)
        tr.bwd_slots.append(G.backward_action_to_slot(ns, env, G.forward_inverse(g, action)))
        tr.states.append(ns)
        g = ns
    # terminal stop at the reconstructed molecule
    mask = G.legal_forward_mask(g, env)
    tr.actions.append(GraphAction(G.ActionKind.STOP))
    tr.fwd_slots.append(0)
    tr.fwd_masks.append(mask)
    tr.complete = True
    return tr


def rollout_offline(net, env, cfg, mol, cond, rng, engine=None) -> Trajectory:
    return rollout_offline_batch(net, env, cfg, [mol], [cond], [rng], engine)[0]


# ---------------------------------------------------------------------------
# losses


def _backward_mask_cached(s: MolGraph, env: EnvSpec) -> np.ndarray:
    return s._cache("bwd_mask", lambda: G.legal_backward_mask(s, env))


def assemble_losses(net: PolicyNet, env: EnvSpec, trajs: list[Trajectory]):
    """Per-batch TB and MLE losses as torch scalars (one trunk pass per
    policy direction)."""
    f_states, f_masks, f_slots, f_tids, f_conds = [], [], [], [], []
    b_states, b_masks, b_slots, b_tids, b_conds = [], [], [], [], []
    for ti, tr in enumerate(trajs):
        enc = tr.cond.encoding
        for t in range(len(tr.actions)):
            f_states.append(tr.states[t])
            f_masks.append(tr.fwd_masks[t])
            f_slots.append(tr.fwd_slots[t])
            f_tids.append(ti)
            f_conds.append(enc)
        for t in range(1, len(tr.states)):
            s = tr.states[t]
            b_states.append(s)
            b_masks.append(_backward_mask_cached(s, env))
            b_slots.append(tr.bwd_slots[t - 1])
            b_tids.append(ti)
            b_conds.append(enc)

    nb = len(trajs)
    fwd_batch = collate(
        f_states, np.stack(f_conds), f_masks, env, ["f"] * len(f_states), chosen_slots=f_slots
    )
    fwd_lp = net.chosen_log_probs(fwd_batch)
    sum_f = fwd_lp.new_zeros(nb).index_add_(0, torch.tensor(f_tids, dtype=torch.int64), fwd_lp)
    if b_states:
        bwd_batch = collate(
            b_states, np.stack(b_conds), b_masks, env, ["b"] * len(b_states), chosen_slots=b_slots
        )
        bwd_lp = net.chosen_log_probs(bwd_batch)
        sum_b = bwd_lp.new_zeros(nb).index_add_(
            0, torch.tensor(b_tids, dtype=torch.int64), bwd_lp
        )
    else:
        sum_b = fwd_lp.new_zeros(nb)

    cond_mat = torch.from_numpy(np.stack([tr.cond.encoding for tr in trajs]))
    log_z = net.log_z(cond_mat)
    log_r = torch.tensor([tr.log_reward for tr in trajs], dtype=torch.float64)
    tb_each = (log_z + sum_f - log_r - sum_b) ** 2
    tb = tb_each.mean()

    offline = torch.tensor(
        [1.0 if tr.origin == "offline" else 0.0 for tr in trajs], dtype=torch.float64
    )
    if offline.sum() > 0:
        mle = (-(sum_f * offline)).sum() / offline.sum()
    else:
        mle = sum_f.new_zeros(())
    if not (torch.isfinite(tb) and torch.isfinite(mle)):
        raise NonFiniteLoss(f"tb={float(tb)}, mle={float(mle)}")
    return tb, mle, log_z.detach(), sum_f.detach()


def tb_loss(traj: Trajectory, net: PolicyNet, env: EnvSpec) -> torch.Tensor:
    tb, _, _, _ = assemble_losses(net, env, [traj])
    return tb


def mle_loss(trajs: list[Trajectory], net: PolicyNet, env: EnvSpec) -> torch.Tensor:
    _, mle, _, _ = assemble_losses(net, env, trajs)
    return mle


def combined_loss(
    net: PolicyNet, env: EnvSpec, trajs: list[Trajectory], lam1: float, lam2: float
) -> tuple[torch.Tensor, dict]:
    tb, mle, log_z, _ = assemble_losses(net, env, trajs)
    loss = lam1 * tb + lam2 * mle
    stats = {
        "loss": float(loss.detach()),
        "loss_tb": float(tb.detach()),
        "loss_mle": float(mle.detach()),
        "logz_mean": float(log_z.mean()),
        "mean_reward": float(np.mean([tr.reward for tr in trajs])),
        "mean_traj_len": float(np.mean([len(tr) for tr in trajs])),
    }
    return loss, stats


# ---------------------------------------------------------------------------
# optimizer


@dataclass
class OptimizerState:
    m: dict[str, torch.Tensor]
    v: dict[str, torch.Tensor]
    step: int = 0

    @classmethod
    def for_net(cls, net: PolicyNet) -> "OptimizerState":
        return cls(
            m={n: torch.zeros_like(p) for n, p in net.named_parameters()},
            v={n: torch.zeros_like(p) for n, p in net.named_parameters()},
        )


def adam_update(net: PolicyNet, opt: OptimizerState, grads: dict[str, torch.Tensor], cfg: RunConfig) -> float:
    """Global-norm clip then Adam; separate decayed rates for log-Z params.

    Returns the pre-clip gradient norm.
    """
    total = math.sqrt(sum(float((g * g).sum()) for g in grads.values()))
    scale = 1.0 if total <= cfg.clip_grad_param else cfg.clip_grad_param / total
    decay_main = 2.0 ** (-opt.step / cfg.lr_decay)
    decay_z = 2.0 ** (-opt.step / cfg.Z_lr_decay)
    b1, b2 = cfg.momentum, 0.999
    opt.step += 1
    t = opt.step
    with torch.no_grad():
        for name, p in net.named_parameters():
            g = grads[name] * scale + cfg.weight_decay * p
            m = opt.m[name].mul_(b1).add_(g, alpha=1 - b1)
            v = opt.v[name].mul_(b2).addcmul_(g, g, value=1 - b2)
            mh = m / (1 - b1**t)
            vh = v / (1 - b2**t)
            lr = cfg.Z_learning_rate * decay_z if name.startswith("logz.") else cfg.learning_rate * decay_main
            p.addcdiv_(mh, vh.sqrt().add_(cfg.adam_eps), value=-lr)
    return total


def train_step(
    net: PolicyNet,
    opt: OptimizerState,
    env: EnvSpec,
    trajs: list[Trajectory],
    cfg: RunConfig,
    lam1: float,
    lam2: float,
) -> dict:
    from .policy import grad

    loss, stats = combined_loss(net, env, trajs, lam1, lam2)
    grads = grad(net, loss)
    stats["grad_norm"] = adam_update(net, opt, grads, cfg)
    stats["step"] = opt.step
    return stats


# ---------------------------------------------------------------------------
# corpus handling


@dataclass
class Corpus:
    graphs: list[MolGraph]
    labels: list[dict[str, float]]

    def __len__(self) -> int:
        return len(self.graphs)


def prepare_corpus(graphs: list[MolGraph], engine: RewardEngine, cfg: RunConfig) -> Corpus:
    """Filter to molecules the environment can rebuild, compute labels."""
    keep, labels = [], []
    for g in graphs:
        if g.num_nodes > cfg.max_nodes or g.num_edges > cfg.max_edges:
            continue
        # full forward rebuild needs one action per node/extra edge/attribute + stop
        extra_edges = g.num_edges - (g.num_nodes - 1)
        n_attr = sum(1 for _, _, o in g.bonds if o > 1) + sum(1 for c in g.chirality if c)
        if g.num_nodes + extra_edges + n_attr + 1 > cfg.max_traj_len:
            continue
        keep.append(g)
        labels.append(engine.values(g))
    return Corpus(keep, labels)


# ---------------------------------------------------------------------------
# training drivers


def _mix_counts(cfg: RunConfig, offline_available: bool) -> tuple[int, int]:
    if not offline_available:
        return cfg.sampling_batch_size, 0
    n_off = int(round(cfg.sampling_batch_size * cfg.online_offline_mix_ratio))
    return cfg.sampling_batch_size - n_off, n_off


def _sample_batch(
    net, env, cfg, engine, corpus: Corpus | None, iteration: int
) -> list[Trajectory]:
    n_on, n_off = _mix_counts(cfg, corpus is not None and len(corpus) > 0)
    seed = cfg.random_seed
    trajs: list[Trajectory] = []
    if n_on:
        rngs = [_rng(seed, 1, iteration, k) for k in range(n_on)]
        if cfg.fixed_conditionals:
            conds = [eval_cond(cfg) for _ in range(n_on)]
        else:
            conds = [sample_cond(cfg, rngs[k]) for k in range(n_on)]
        trajs += rollout_online_batch(net, env, cfg, conds, rngs, engine)
    if n_off:
        pick = _rng(seed, 2, iteration)
        idx = pick.integers(len(corpus), size=n_off)
        rngs = [_rng(seed, 3, iteration, k) for k in range(n_off)]
        mols = [corpus.graphs[i] for i in idx]
        conds = [
            sample_cond(cfg, rngs[k], labels=corpus.labels[idx[k]]) for k in range(n_off)
        ]
        trajs += rollout_offline_batch(net, env, cfg, mols, conds, rngs, engine)
    return trajs


def run_training(
    cfg: RunConfig,
    net: PolicyNet,
    engine: RewardEngine,
    corpus: Corpus | None,
    out_dir: str,
    lam1: float,
    lam2: float,
    eval_hook=None,
) -> str:
    """Shared loop: sample, split into gradient chunks, update, checkpoint.

    Returns the final checkpoint path. ``eval_hook(step, net)`` runs at
    every eval interval and its dict lands in the stats stream.
    """
    os.makedirs(out_dir, exist_ok=True)
    ckpt_dir = os.path.join(out_dir, "checkpoints")
    os.makedirs(ckpt_dir, exist_ok=True)
    torch.set_num_threads(max(1, cfg.num_workers))
    opt = OptimizerState.for_net(net)
    env = build_env(cfg)
    stats_path = os.path.join(out_dir, "stats.jsonl")
    t0 = time.time()
    iteration = 0
    with open(stats_path, "a", encoding="utf-8") as stats_fh:
        while opt.step < cfg.train_steps:
            trajs = _sample_batch(net, env, cfg, engine, corpus, iteration)
            for lo in range(0, len(trajs), cfg.training_batch_size):
                chunk = trajs[lo : lo + cfg.training_batch_size]
                if not chunk or opt.step >= cfg.train_steps:
                    break
                try:
                    stats = train_step(net, opt, env, chunk, cfg, lam1, lam2)
                except (NonFiniteGradient, NonFiniteLoss) as exc:
                    opt.step += 1
                    stats = {"step": opt.step, "skipped": str(exc)}
                    stats_fh.write(json.dumps(stats) + "\n")
                    continue
                if opt.step % 50 == 0 or opt.step == cfg.train_steps:
                    stats["elapsed_s"] = round(time.time() - t0, 1)
                    stats_fh.write(json.dumps(stats) + "\n")
                    stats_fh.flush()
                if opt.step % cfg.checkpoint_every == 0:
                    save_checkpoint(
                        os.path.join(ckpt_dir, f"step_{opt.step:07d}.npz"),
                        net, opt, opt.step, cfg,
                    )
                if eval_hook is not None and opt.step % cfg.eval_every == 0:
                    row = {"step": opt.step, **eval_hook(opt.step, net)}
                    stats_fh.write(json.dumps(row) + "\n")
                    stats_fh.flush()
            iteration += 1
    final = os.path.join(ckpt_dir, "final.npz")
    save_checkpoint(final, net, opt, opt.step, cfg)
    return final


def pretrain(
    cfg: RunConfig,
    corpus_graphs: list[MolGraph],
    out_dir: str | None = None,
    external_reward=None,
    eval_hook=None,
) -> str:
    """Hybrid online-offline pretraining with the TB + MLE objective."""
    net = make_policy(cfg)
    engine = RewardEngine(cfg, external_reward=external_reward)
    corpus = prepare_corpus(corpus_graphs, engine, cfg)
    if not len(corpus):
        raise ValueError("corpus is empty after environment-budget filtering")
    return run_training(
        cfg, net, engine, corpus,
        out_dir or cfg.out_dir,
        lam1=cfg.gfn_loss_coeff, lam2=cfg.MLE_coeff,
        eval_hook=eval_hook,
    )


def add_parameter_noise(net: PolicyNet, noise_sd: float, seed: int) -> None:
    """Zero-mean Gaussian perturbation, sd scaled by each array's RMS."""
    if noise_sd <= 0:
        return
    gen = torch.Generator().manual_seed(seed)
    with torch.no_grad():
        for _, p in net.named_parameters():
            rms = float(p.pow(2).mean().sqrt())
            if rms == 0.0:
                rms = 1.0
            noise = torch.empty_like(p)
            noise.normal_(0.0, noise_sd * rms, generator=gen)
            p.add_(noise)


def finetune(
    cfg: RunConfig,
    checkpoint_path: str | None,
    corpus_graphs: list[MolGraph] | None = None,
    out_dir: str | None = None,
    external_reward=None,
    eval_hook=None,
) -> str:
    """Task adaptation from a pretrained checkpoint (or from scratch when
    ``checkpoint_path`` is None, the task-trained baseline).

    Online mode trains with pure TB; hybrid mode keeps the offline MLE
    regularizer over task-labeled data.
    """
    net = make_policy(cfg)
    if checkpoint_path is not None:
        load_checkpoint(checkpoint_path, net, cfg=cfg)
        add_parameter_noise(net, cfg.noise_sd, cfg.random_seed + 9999)
    engine = RewardEngine(cfg, external_reward=external_reward)
    if cfg.finetune_mode == "hybrid":
        if not corpus_graphs:
            raise ValueError("hybrid fine-tuning needs task-labeled corpus molecules")
        corpus = prepare_corpus(corpus_graphs, engine, cfg)
        lam1, lam2 = cfg.gfn_loss_coeff, cfg.MLE_coeff
    else:
        corpus = None
        lam1, lam2 = 1.0, 0.0
    return run_training(
        cfg, net, engine, corpus,
        out_dir or cfg.out_dir,
        lam1=lam1, lam2=lam2,
        eval_hook=eval_hook,
    )


# ---------------------------------------------------------------------------
# evaluation sampling


def sample_molecules(
    net: PolicyNet,
    cfg: RunConfig,
    n: int,
    engine: RewardEngine | None = None,
    seed_domain: int = 7,
    conds: str = "fixed",
) -> list[Trajectory]:
    """Draw ``n`` terminal molecules under the desired (or freshly sampled)
    conditional ranges; exploration noise stays on unless greedy."""
    env = build_env(cfg)
    out: list[Trajectory] = []
    batch_size = min(cfg.sampling_batch_size, max(n, 1))
    k = 0
    while len(out) < n:
        m = min(batch_size, n - len(out))
        rngs = [_rng(cfg.random_seed, seed_domain, k, j) for j in range(m)]
        if conds == "fixed":
            cs = [eval_cond(cfg) for _ in range(m)]
        else:
            cs = [sample_cond(cfg, rngs[j]) for j in range(m)]
        out += rollout_online_batch(net, env, cfg, cs, rngs, engine)
        k += 1
    return out[:n]
