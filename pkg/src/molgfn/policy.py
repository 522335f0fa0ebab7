"""Conditional forward/backward policy over graph states plus log-Z head.

One multi-head attention trunk runs over the padded token matrix (a learned
conditional token at position 0, one token per atom after it; attention is
restricted to bonds, the conditional token and self loops, with a per-edge
additive bias from the bond type). Per-node, per-pair and global MLP heads
emit logits for exactly the unmasked action slots, which are normalized by a
segment softmax per state, so masked slots never receive probability.

Everything runs in float64. Gradients come from reverse mode via torch
autograd; ``grad_check`` compares against central finite differences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import torch
from torch import nn

from .conditioning import encoding_dim
from .errors import BackwardFromInitial, NoLegalAction, NonFiniteGradient, ShapeMismatch
from .graph import EnvSpec, MolGraph, layout_for

torch.set_default_dtype(torch.float64)

_ETYPE_PAD = 0
_ETYPE_SELF = 1
_ETYPE_GLOBAL = 2
_ETYPE_BOND = 3  # 3, 4, 5 for orders 1, 2, 3
_NUM_ETYPES = 6

FWD_HEADS = ("stop", "addnode_init", "addnode", "addedge", "setnode", "setedge")
BWD_HEADS = ("delnode", "deledge", "rmnode", "rmedge")


@dataclass(frozen=True)
class PolicyConfig:
    num_elements: int
    num_extra_orders: int
    chirality_enabled: bool
    cond_dim: int
    num_emb: int = 128
    num_layers: int = 8
    num_mlp_layers: int = 4
    num_heads: int = 2
    i2h_width: int = 1  # accepted for config parity; acts as a multiplier of 1

    def __post_init__(self):
        if self.num_layers <= 0 or self.num_emb <= 0 or self.num_heads <= 0:
            raise ValueError("model dimensions must be positive")
        if self.num_emb % self.num_heads:
            raise ValueError("num_emb must be divisible by num_heads")


def _mlp(in_dim: int, hidden: int, out_dim: int, layers: int) -> nn.Sequential:
    mods: list[nn.Module] = []
    d = in_dim
    for _ in range(max(layers - 1, 0)):
        mods.append(nn.Linear(d, hidden))
        mods.append(nn.LeakyReLU())
        d = hidden
    mods.append(nn.Linear(d, out_dim))
    return nn.Sequential(*mods)


class _AttentionLayer(nn.Module):
    def __init__(self, dim: int, heads: int):
        super().__init__()
        self.heads = heads
        self.dh = dim // heads
        self.ln1 = nn.LayerNorm(dim)
        self.q = nn.Linear(dim, dim)
        self.k = nn.Linear(dim, dim)
        self.v = nn.Linear(dim, dim)
        self.o = nn.Linear(dim, dim)
        self.edge_bias = nn.Embedding(_NUM_ETYPES, heads)
        self.ln2 = nn.LayerNorm(dim)
        self.ff1 = nn.Linear(dim, dim * 2)
        self.ff2 = nn.Linear(dim * 2, dim)

    def forward(self, h: torch.Tensor, etype: torch.Tensor) -> torch.Tensor:
        s, t, d = h.shape
        x = self.ln1(h)
        q = self.q(x).view(s, t, self.heads, self.dh).permute(0, 2, 1, 3)
        k = self.k(x).view(s, t, self.heads, self.dh).permute(0, 2, 1, 3)
        v = self.v(x).view(s, t, self.heads, self.dh).permute(0, 2, 1, 3)
        scores = q @ k.transpose(-1, -2) / math.sqrt(self.dh)
        scores = scores + self.edge_bias(etype).permute(0, 3, 1, 2)
        scores = scores.masked_fill((etype == _ETYPE_PAD).unsqueeze(1), -torch.inf)
        att = torch.softmax(scores, dim=-1)
        out = (att @ v).permute(0, 2, 1, 3).reshape(s, t, d)
        h = h + self.o(out)
        y = self.ln2(h)
        return h + self.ff2(torch.nn.functional.leaky_relu(self.ff1(y)))


class PolicyNet(nn.Module):
    """Parameter store + differentiable computation for both policies."""

    def __init__(self, cfg: PolicyConfig):
        super().__init__()
        self.cfg = cfg
        d = cfg.num_emb
        node_feat = cfg.num_elements + 4
        self.node_embed = nn.Linear(node_feat, d)
        self.cond_embed = _mlp(cfg.cond_dim, d, d, cfg.num_mlp_layers)
        self.layers = nn.ModuleList(
            _AttentionLayer(d, cfg.num_heads) for _ in range(cfg.num_layers)
        )
        k = cfg.num_mlp_layers
        self.head_stop = _mlp(d, d, 1, k)
        self.head_addnode_init = _mlp(d, d, cfg.num_elements, k)
        self.head_addnode = _mlp(d, d, cfg.num_elements, k)
        self.head_addedge = _mlp(2 * d, d, 1, k)
        self.head_setnode = _mlp(d, d, 2, k)
        self.head_setedge = _mlp(2 * d, d, max(cfg.num_extra_orders, 1), k)
        self.head_delnode = _mlp(d, d, 1, k)
        self.head_deledge = _mlp(2 * d, d, 1, k)
        self.head_rmnode = _mlp(d, d, 1, k)
        self.head_rmedge = _mlp(2 * d, d, 1, k)
        self.logz = _mlp(cfg.cond_dim, d, 1, k)

    # -- trunk ------------------------------------------------------------
    def embed(self, batch: "GraphBatch") -> torch.Tensor:
        s, n, f = batch.node_feat.shape
        if f != self.cfg.num_elements + 4:
            raise ShapeMismatch(
                f"node feature width {f} != {self.cfg.num_elements + 4}"
            )
        if batch.cond.shape[1] != self.cfg.cond_dim:
            raise ShapeMismatch(
                f"conditional width {batch.cond.shape[1]} != {self.cfg.cond_dim}"
            )
        glob = self.cond_embed(batch.cond).unsqueeze(1)  # [S,1,D]
        nodes = self.node_embed(batch.node_feat)  # [S,N,D]
        h = torch.cat([glob, nodes], dim=1)
        for layer in self.layers:
            h = layer(h, batch.etype)
        return h

    def log_z(self, cond: torch.Tensor) -> torch.Tensor:
        if cond.dim() == 1:
            cond = cond.unsqueeze(0)
        if cond.shape[1] != self.cfg.cond_dim:
            raise ShapeMismatch(f"conditional width {cond.shape[1]} != {self.cfg.cond_dim}")
        return self.logz(cond).squeeze(-1)

    # -- heads ------------------------------------------------------------
    def flat_logits(self, batch: "GraphBatch", h: torch.Tensor | None = None) -> torch.Tensor:
        """Logits for every candidate slot, ordered by (state, slot id)."""
        if h is None:
            h = self.embed(batch)
        glob = h[:, 0, :]
        nodes = h[:, 1:, :]
        parts: list[torch.Tensor] = []
        c = batch.cands

        def pair_feat(sids, us, vs):
            hu = nodes[sids, us]
            hv = nodes[sids, vs]
            return torch.cat([hu + hv, hu * hv], dim=1)

        if len(c.stop_sids):
            parts.append(self.head_stop(glob[c.stop_sids]).reshape(-1))
        if len(c.an_init_sids):
            out = self.head_addnode_init(glob[c.an_init_sids])
            parts.append(out[c.an_init_rows, c.an_init_elems])
        if len(c.an_sids):
            out = self.head_addnode(nodes[c.an_sids, c.an_nodes])
            parts.append(out[c.an_rows, c.an_elems])
        if len(c.ae_sids):
            parts.append(self.head_addedge(pair_feat(c.ae_sids, c.ae_u, c.ae_v)).reshape(-1))
        if len(c.sn_sids):
            out = self.head_setnode(nodes[c.sn_sids, c.sn_nodes])
            parts.append(out[c.sn_rows, c.sn_tags])
        if len(c.se_sids):
            out = self.head_setedge(pair_feat(c.se_sids, c.se_u, c.se_v))
            parts.append(out[c.se_rows, c.se_orders])
        if len(c.dn_sids):
            parts.append(self.head_delnode(nodes[c.dn_sids, c.dn_nodes]).reshape(-1))
        if len(c.de_sids):
            parts.append(self.head_deledge(pair_feat(c.de_sids, c.de_u, c.de_v)).reshape(-1))
        if len(c.rn_sids):
            parts.append(self.head_rmnode(nodes[c.rn_sids, c.rn_nodes]).reshape(-1))
        if len(c.re_sids):
            parts.append(self.head_rmedge(pair_feat(c.re_sids, c.re_u, c.re_v)).reshape(-1))
        if not parts:
            raise NoLegalAction("batch contains no candidate slots")
        flat = torch.cat(parts)
        return flat[batch.perm]

    def chosen_log_probs(self, batch: "GraphBatch", h: torch.Tensor | None = None) -> torch.Tensor:
        """log pi(chosen slot | state) for every state, [S]."""
        if batch.chosen_pos is None:
            raise ValueError("batch was collated without chosen actions")
        flat = self.flat_logits(batch, h)
        lse = segment_logsumexp(flat, batch.seg_ids, batch.num_states)
        return flat[batch.chosen_pos] - lse[batch.seg_of_chosen]


def segment_logsumexp(values: torch.Tensor, seg_ids: torch.Tensor, num_seg: int) -> torch.Tensor:
    m = values.new_full((num_seg,), -torch.inf)
    m = m.scatter_reduce(0, seg_ids, values.detach(), reduce="amax", include_self=True)
    exp = (values - m[seg_ids]).exp()
    total = values.new_zeros(num_seg).index_add_(0, seg_ids, exp)
    return m + total.log()


# ---------------------------------------------------------------------------
# encoding and collation


def state_features(g: MolGraph, env: EnvSpec) -> tuple[np.ndarray, np.ndarray]:
    """Per-node feature rows and the (n+1)-token edge-type matrix, cached."""

    def build():
        n = g.num_nodes
        ne = env.num_elements
        feat = np.zeros((n, ne + 4), dtype=np.float64)
        local = {e: i for i, e in enumerate(env.element_indices)}
        hs = g.implicit_h
        deg = g.degrees
        for i in range(n):
            feat[i, local[g.elements[i]]] = 1.0
            feat[i, ne] = hs[i] / 4.0
            feat[i, ne + 1] = deg[i] / 4.0
            if g.chirality[i]:
                feat[i, ne + 1 + g.chirality[i]] = 1.0
        et = np.zeros((n + 1, n + 1), dtype=np.int64)
        np.fill_diagonal(et, _ETYPE_SELF)
        et[0, 1:] = _ETYPE_GLOBAL
        et[1:, 0] = _ETYPE_GLOBAL
        for u, v, o in g.bonds:
            et[u + 1, v + 1] = _ETYPE_BOND + o - 1
            et[v + 1, u + 1] = _ETYPE_BOND + o - 1
        return feat, et

    return g._cache(f"policy_enc_{env.num_elements}", build)


def _inverse_pair_index(p: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    i = np.floor((2 * n - 1 - np.sqrt((2 * n - 1) ** 2 - 8 * p.astype(np.float64))) / 2).astype(np.int64)
    i = np.clip(i, 0, max(n - 2, 0))
    start = i * n - i * (i + 1) // 2

    # float-precision guard: nudge rows so start <= p < next start
    over = start > p
    while over.any():
        i = i - over.astype(np.int64)
        start = i * n - i * (i + 1) // 2
        over = start > p
    nxt = (i + 1) * n - (i + 1) * (i + 2) // 2
    under = (p >= nxt) & (i < n - 2)
    while under.any():
        i = i + under.astype(np.int64)
        start = i * n - i * (i + 1) // 2
        nxt = (i + 1) * n - (i + 1) * (i + 2) // 2
        under = (p >= nxt) & (i < n - 2)
    j = p - start + i + 1
    return i, j


@dataclass
class _Cands:
    stop_sids: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    an_init_sids: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    an_init_rows: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    an_init_elems: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    an_sids: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    an_nodes: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    an_rows: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    an_elems: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    ae_sids: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    ae_u: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    ae_v: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    sn_sids: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    sn_nodes: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    sn_rows: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    sn_tags: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    se_sids: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    se_u: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    se_v: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    se_rows: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    se_orders: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    dn_sids: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    dn_nodes: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    de_sids: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    de_u: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    de_v: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    rn_sids: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    rn_nodes: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    re_sids: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    re_u: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    re_v: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    def to_tensors(self):
        for name in vars(self):
            setattr(self, name, torch.from_numpy(np.ascontiguousarray(getattr(self, name))))


@dataclass
class GraphBatch:
    """Collated padded batch plus candidate-slot bookkeeping."""

    node_feat: torch.Tensor  # [S, N, F]
    etype: torch.Tensor  # [S, N+1, N+1]
    cond: torch.Tensor  # [S, C]
    cands: _Cands
    perm: torch.Tensor  # sorts head-grouped logits by (state, slot)
    seg_ids: torch.Tensor  # [TOTAL] state of each sorted logit
    seg_counts: np.ndarray  # [S] sorted-slot counts
    slot_ids: np.ndarray  # [TOTAL] slot id per sorted logit
    num_states: int
    chosen_pos: torch.Tensor | None = None  # [S] index into sorted logits
    seg_of_chosen: torch.Tensor | None = None


def _decode_forward(g: MolGraph, env: EnvSpec, mask: np.ndarray, sid: int, acc: dict):
    lay = layout_for(g, env)
    _, o1, o2, o3, o4 = lay.fwd_offsets
    idx = np.nonzero(mask)[0]
    if idx.size == 0:
        raise NoLegalAction(f"state {sid} has no legal forward action")
    ne = lay.num_elements
    if mask[0]:
        acc["stop"].append(sid)
    an = idx[(idx >= o1) & (idx < o2)] - o1
    if an.size:
        if lay.n == 0:
            acc["an_init"].append((sid, an))
        else:
            nodes = an // ne
            elems = an % ne
            acc["an"].append((sid, nodes, elems))
    ae = idx[(idx >= o2) & (idx < o3)] - o2
    if ae.size:
        us, vs = _inverse_pair_index(ae, lay.n)
        acc["ae"].append((sid, us, vs))
    sn = idx[(idx >= o3) & (idx < o4)] - o3
    if sn.size:
        acc["sn"].append((sid, sn // 2, sn % 2))
    se = idx[idx >= o4] - o4
    if se.size:
        k = lay.num_extra_orders
        epos = se // k
        t = se % k
        bonds = np.array([(u, v) for u, v, _ in g.bonds], dtype=np.int64)
        acc["se"].append((sid, bonds[epos, 0], bonds[epos, 1], t))


def _decode_backward(g: MolGraph, env: EnvSpec, mask: np.ndarray, sid: int, acc: dict):
    n, m = g.num_nodes, g.num_edges
    if n == 0:
        raise BackwardFromInitial("backward policy undefined on the empty graph")
    idx = np.nonzero(mask)[0]
    if idx.size == 0:
        raise NoLegalAction(f"state {sid} has no legal backward action")
    bonds = np.array([(u, v) for u, v, _ in g.bonds], dtype=np.int64) if m else None
    dn = idx[idx < n]
    if dn.size:
        acc["dn"].append((sid, dn))
    de = idx[(idx >= n) & (idx < n + m)] - n
    if de.size:
        acc["de"].append((sid, bonds[de, 0], bonds[de, 1]))
    rn = idx[(idx >= n + m) & (idx < 2 * n + m)] - n - m
    if rn.size:
        acc["rn"].append((sid, rn))
    re = idx[idx >= 2 * n + m] - 2 * n - m
    if re.size:
        acc["re"].append((sid, bonds[re, 0], bonds[re, 1]))


def collate(
    states,
    conds: np.ndarray,
    masks,
    env: EnvSpec,
    directions,
    chosen_slots=None,
) -> GraphBatch:
    """Build a GraphBatch.

    ``masks[i]`` must be the forward or backward mask of ``states[i]`` per
    ``directions[i]`` ('f' or 'b'). ``chosen_slots[i]``, when given, is the
    slot id whose log-probability the training step needs.
    """
    num = len(states)
    n_max = max((g.num_nodes for g in states), default=0)
    n_max = max(n_max, 1)
    ne = env.num_elements
    node_feat = np.zeros((num, n_max, ne + 4), dtype=np.float64)
    etype = np.zeros((num, n_max + 1, n_max + 1), dtype=np.int64)
    # candidate emission must follow head order so tensor offsets line up;
    # decode per state first, then assemble per head below
    per_state: list[dict] = []
    for sid, g in enumerate(states):
        feat, et = state_features(g, env)
        t = g.num_nodes
        node_feat[sid, :t] = feat
        etype[sid, : t + 1, : t + 1] = et
        etype[sid] = _pad_self(etype[sid], t + 1)
        local: dict = {
            "stop": [], "an_init": [], "an": [], "ae": [], "sn": [], "se": [],
            "dn": [], "de": [], "rn": [], "re": [],
        }
        if directions[sid] == "f":
            _decode_forward(g, env, masks[sid], sid, local)
        else:
            _decode_backward(g, env, masks[sid], sid, local)
        per_state.append(local)

    # assemble per-head arrays in fixed head order; remember for every
    # emitted logit its (state, slot) to build the sorting permutation
    head_sids: list[np.ndarray] = []
    head_slots: list[np.ndarray] = []
    cands = _Cands()

    def emit(sids_arr, slots_arr):
        head_sids.append(sids_arr)
        head_slots.append(slots_arr)

    # stop
    stop_list = [s for ps in per_state for s in ps["stop"]]
    cands.stop_sids = np.array(stop_list, dtype=np.int64)
    for s in stop_list:
        emit(np.full(1, s, dtype=np.int64), np.zeros(1, dtype=np.int64))
    # addnode on the empty graph
    an_init_sids, an_init_rows, an_init_elems = [], [], []
    for ps in per_state:
        for sid, elems in ps["an_init"]:
            r = len(an_init_sids)
            an_init_sids.append(sid)
            an_init_rows.extend([r] * elems.size)
            an_init_elems.extend(elems.tolist())
            emit(np.full(elems.size, sid, dtype=np.int64), elems + 1)
    cands.an_init_sids = np.array(an_init_sids, dtype=np.int64)
    cands.an_init_rows = np.array(an_init_rows, dtype=np.int64)
    cands.an_init_elems = np.array(an_init_elems, dtype=np.int64)

    an_sids, an_nodes, an_rows, an_elems = [], [], [], []
    for ps in per_state:
        for sid, nodes, elems in ps["an"]:
            uniq, inverse = np.unique(nodes, return_inverse=True)
            base = len(an_sids)
            an_sids.extend([sid] * uniq.size)
            an_nodes.extend(uniq.tolist())
            an_rows.extend((inverse + base).tolist())
            an_elems.extend(elems.tolist())
            emit(np.full(nodes.size, sid, dtype=np.int64), 1 + nodes * ne + elems)
    cands.an_sids = np.array(an_sids, dtype=np.int64)
    cands.an_nodes = np.array(an_nodes, dtype=np.int64)
    cands.an_rows = np.array(an_rows, dtype=np.int64)
    cands.an_elems = np.array(an_elems, dtype=np.int64)

    ae_sids, ae_u, ae_v = [], [], []
    for ps in per_state:
        for sid, us, vs in ps["ae"]:
            lay = layout_for(states[sid], env)
            ae_sids.extend([sid] * us.size)
            ae_u.extend(us.tolist())
            ae_v.extend(vs.tolist())
            slots = lay.fwd_offsets[2] + (
                us * lay.n - us * (us + 1) // 2 + (vs - us - 1)
            )
            emit(np.full(us.size, sid, dtype=np.int64), slots)
    cands.ae_sids = np.array(ae_sids, dtype=np.int64)
    cands.ae_u = np.array(ae_u, dtype=np.int64)
    cands.ae_v = np.array(ae_v, dtype=np.int64)

    sn_sids, sn_nodes, sn_rows, sn_tags = [], [], [], []
    for ps in per_state:
        for sid, nodes, tags in ps["sn"]:
            uniq, inverse = np.unique(nodes, return_inverse=True)
            base = len(sn_sids)
            sn_sids.extend([sid] * uniq.size)
            sn_nodes.extend(uniq.tolist())
            sn_rows.extend((inverse + base).tolist())
            sn_tags.extend(tags.tolist())
            lay = layout_for(states[sid], env)
            emit(np.full(nodes.size, sid, dtype=np.int64), lay.fwd_offsets[3] + nodes * 2 + tags)
    cands.sn_sids = np.array(sn_sids, dtype=np.int64)
    cands.sn_nodes = np.array(sn_nodes, dtype=np.int64)
    cands.sn_rows = np.array(sn_rows, dtype=np.int64)
    cands.sn_tags = np.array(sn_tags, dtype=np.int64)

    se_sids, se_u, se_v, se_rows, se_orders = [], [], [], [], []
    for ps in per_state:
        for sid, us, vs, t in ps["se"]:
            pairs = np.stack([us, vs], axis=1)
            uniq, inverse = np.unique(pairs, axis=0, return_inverse=True)
            base = len(se_sids)
            se_sids.extend([sid] * uniq.shape[0])
            se_u.extend(uniq[:, 0].tolist())
            se_v.extend(uniq[:, 1].tolist())
            se_rows.extend((inverse + base).tolist())
            se_orders.extend(t.tolist())
            g = states[sid]
            lay = layout_for(g, env)
            epos = np.array([_edge_pos(g, u, v) for u, v in pairs], dtype=np.int64)
            emit(
                np.full(us.size, sid, dtype=np.int64),
                lay.fwd_offsets[4] + epos * lay.num_extra_orders + t,
            )
    cands.se_sids = np.array(se_sids, dtype=np.int64)
    cands.se_u = np.array(se_u, dtype=np.int64)
    cands.se_v = np.array(se_v, dtype=np.int64)
    cands.se_rows = np.array(se_rows, dtype=np.int64)
    cands.se_orders = np.array(se_orders, dtype=np.int64)

    # backward heads: keep emission head-major so logit order matches
    dn_sids, dn_nodes = [], []
    for ps in per_state:
        for sid, nodes in ps["dn"]:
            dn_sids.extend([sid] * nodes.size)
            dn_nodes.extend(nodes.tolist())
            emit(np.full(nodes.size, sid, dtype=np.int64), nodes)
    de_sids, de_u, de_v = [], [], []
    for ps in per_state:
        for sid, us, vs in ps["de"]:
            g = states[sid]
            de_sids.extend([sid] * us.size)
            de_u.extend(us.tolist())
            de_v.extend(vs.tolist())
            epos = np.array([_edge_pos(g, u, v) for u, v in zip(us, vs)], dtype=np.int64)
            emit(np.full(us.size, sid, dtype=np.int64), g.num_nodes + epos)
    rn_sids, rn_nodes = [], []
    for ps in per_state:
        for sid, nodes in ps["rn"]:
            g = states[sid]
            rn_sids.extend([sid] * nodes.size)
            rn_nodes.extend(nodes.tolist())
            emit(np.full(nodes.size, sid, dtype=np.int64), g.num_nodes + g.num_edges + nodes)
    re_sids, re_u, re_v = [], [], []
    for ps in per_state:
        for sid, us, vs in ps["re"]:
            g = states[sid]
            re_sids.extend([sid] * us.size)
            re_u.extend(us.tolist())
            re_v.extend(vs.tolist())
            epos = np.array([_edge_pos(g, u, v) for u, v in zip(us, vs)], dtype=np.int64)
            emit(
                np.full(us.size, sid, dtype=np.int64),
                2 * g.num_nodes + g.num_edges + epos,
            )
    cands.dn_sids = np.array(dn_sids, dtype=np.int64)
    cands.dn_nodes = np.array(dn_nodes, dtype=np.int64)
    cands.de_sids = np.array(de_sids, dtype=np.int64)
    cands.de_u = np.array(de_u, dtype=np.int64)
    cands.de_v = np.array(de_v, dtype=np.int64)
    cands.rn_sids = np.array(rn_sids, dtype=np.int64)
    cands.rn_nodes = np.array(rn_nodes, dtype=np.int64)
    cands.re_sids = np.array(re_sids, dtype=np.int64)
    cands.re_u = np.array(re_u, dtype=np.int64)
    cands.re_v = np.array(re_v, dtype=np.int64)

    all_sids = np.concatenate(head_sids) if head_sids else np.zeros(0, dtype=np.int64)
    all_slots = np.concatenate(head_slots) if head_slots else np.zeros(0, dtype=np.int64)
    perm = np.lexsort((all_slots, all_sids))
    sorted_sids = all_sids[perm]
    sorted_slots = all_slots[perm]
    seg_counts = np.bincount(sorted_sids, minlength=num)

    chosen_pos = None
    seg_of_chosen = None
    if chosen_slots is not None:
        starts = np.concatenate([[0], np.cumsum(seg_counts)[:-1]])
        chosen_pos = np.empty(num, dtype=np.int64)
        for s in range(num):
            lo, hi = starts[s], starts[s] + seg_counts[s]
            block = sorted_slots[lo:hi]
            k = np.searchsorted(block, chosen_slots[s])
            if k >= block.size or block[k] != chosen_slots[s]:
                raise NoLegalAction(
                    f"chosen slot {chosen_slots[s]} of state {s} is masked"
                )
            chosen_pos[s] = lo + k
        seg_of_chosen = np.arange(num, dtype=np.int64)

    cands.to_tensors()
    return GraphBatch(
        node_feat=torch.from_numpy(node_feat),
        etype=torch.from_numpy(etype),
        cond=torch.from_numpy(np.ascontiguousarray(conds, dtype=np.float64)),
        cands=cands,
        perm=torch.from_numpy(perm),
        seg_ids=torch.from_numpy(sorted_sids),
        seg_counts=seg_counts,
        slot_ids=sorted_slots,
        num_states=num,
        chosen_pos=None if chosen_pos is None else torch.from_numpy(chosen_pos),
        seg_of_chosen=None if seg_of_chosen is None else torch.from_numpy(seg_of_chosen),
    )


def _pad_self(et: np.ndarray, t: int) -> np.ndarray:
    # padded tokens attend to themselves so softmax rows stay finite
    size = et.shape[0]
    if t < size:
        idx = np.arange(t, size)
        et[idx, idx] = _ETYPE_SELF
    return et


def _edge_pos(g: MolGraph, u: int, v: int) -> int:
    pos = g._cache("edge_pos", lambda: {(a, b): k for k, (a, b, _) in enumerate(g.bonds)})
    return pos[(min(u, v), max(u, v))]


# ---------------------------------------------------------------------------
# construction, sampling, differentiation


def init_params(
    seed: int,
    env: EnvSpec,
    num_properties: int,
    num_emb: int = 128,
    num_layers: int = 8,
    num_mlp_layers: int = 4,
    num_heads: int = 2,
    i2h_width: int = 1,
) -> PolicyNet:
    """Deterministically initialized policy network (scaled-uniform init)."""
    cfg = PolicyConfig(
        num_elements=env.num_elements,
        num_extra_orders=len(env.extra_orders),
        chirality_enabled=env.chirality_enabled,
        cond_dim=encoding_dim(num_properties),
        num_emb=num_emb,
        num_layers=num_layers,
        num_mlp_layers=num_mlp_layers,
        num_heads=num_heads,
        i2h_width=i2h_width,
    )
    net = PolicyNet(cfg)
    gen = torch.Generator().manual_seed(seed)
    with torch.no_grad():
        for name, p in net.named_parameters():
            if p.dim() >= 2:
                bound = math.sqrt(6.0 / sum(p.shape[-2:]))
                p.uniform_(-bound, bound, generator=gen)
            elif "weight" in name:  # LayerNorm scale
                p.fill_(1.0)
            else:
                p.zero_()
    return net


def sample_action(
    slot_ids: np.ndarray,
    logits: np.ndarray,
    rng: np.random.Generator,
    temp: float = 1.0,
    random_action_prob: float = 0.0,
    random_stop_prob: float = 0.0,
) -> tuple[int, float]:
    """Pick a slot among unmasked candidates; returns (slot id, log pi).

    The returned log-probability is the clean policy value for the chosen
    slot (exploration noise never enters it). ``temp`` == 0 picks argmax.
    """
    if slot_ids.size == 0:
        raise NoLegalAction("no unmasked slots to sample from")
    logits = logits - logits.max()
    probs = np.exp(logits)
    probs /= probs.sum()
    if temp != 1.0:
        if temp <= 0:
            k = int(np.argmax(logits))
            return int(slot_ids[k]), float(np.log(probs[k]))
        t = np.exp(logits / temp)
        t /= t.sum()
        sampling = t
    else:
        sampling = probs
    if random_stop_prob > 0 and rng.uniform() < random_stop_prob and slot_ids[0] == 0:
        k = 0
    elif random_action_prob > 0 and rng.uniform() < random_action_prob:
        k = int(rng.integers(slot_ids.size))
    else:
        k = int(rng.choice(slot_ids.size, p=sampling))
    return int(slot_ids[k]), float(np.log(probs[k]))


def grad(net: PolicyNet, loss: torch.Tensor) -> dict[str, torch.Tensor]:
    """Reverse-mode gradients for every parameter, keyed by name."""
    names, params = zip(*net.named_parameters())
    gs = torch.autograd.grad(loss, params, allow_unused=True)
    out = {}
    for n, p, g in zip(names, params, gs):
        g = torch.zeros_like(p) if g is None else g
        if not torch.isfinite(g).all():
            raise NonFiniteGradient(f"gradient of {n} is not finite")
        out[n] = g
    return out


def grad_check(net: PolicyNet, loss_fn, h: float = 1e-5, atol: float = 1e-7) -> float:
    """Max relative error between autograd and central finite differences.

    Differences below ``atol`` count as zero: central differences carry an
    absolute noise floor of roughly eps * |loss| / h, which would otherwise
    dominate the ratio wherever the true derivative vanishes.
    """
    loss = loss_fn()
    analytic = grad(net, loss)
    worst = 0.0
    with torch.no_grad():
        for name, p in net.named_parameters():
            flat = p.view(-1)
            ga = analytic[name].view(-1)
            for k in range(flat.numel()):
                orig = flat[k].item()
                flat[k] = orig + h
                f1 = float(loss_fn())
                flat[k] = orig - h
                f2 = float(loss_fn())
                flat[k] = orig
                fd = (f1 - f2) / (2 * h)
                a = float(ga[k])
                diff = abs(a - fd)
                if diff <= atol:
                    continue
                worst = max(worst, diff / max(abs(a), abs(fd)))
    return worst
