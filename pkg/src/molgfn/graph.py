"""Molecular-graph state, the five-family action space and legality masks.

States are immutable attributed graphs. Node ids are dense indices 0..n-1 in
insertion order; deleting a node renumbers the ids above it. Bond orders live
on edges (1 by default, raised to 2/3 via the set-edge-attribute action).
Chirality tags live on nodes, are reward-inert, and are ignored by canonical
identity.

Action slot layout (documented contract, stable given the node ordering and
the sorted edge list):

  forward:  [Stop][AddNode: src*E + elem (E slots on the empty graph)]
            [AddEdge: pairs i<j in row-major triangular order]
            [SetNodeAttr: node*2 + tag][SetEdgeAttr: edge*K + extra-order]
  backward: [DeleteNode: node][DeleteEdge: edge]
            [RemoveNodeAttr: node][RemoveEdgeAttr: edge]

where E is the element-vocabulary size, K the number of extra bond orders and
edges are enumerated sorted by (u, v).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .elements import ELEMENTS, element_index, implicit_h_count
from .errors import IllegalAction, InvalidMolecule, UnknownNodeId

CHIRALITY_NONE = 0
CHIRALITY_CW = 1
CHIRALITY_CCW = 2


class ActionKind(enum.IntEnum):
    STOP = 0
    ADD_NODE = 1
    ADD_EDGE = 2
    SET_NODE_ATTR = 3
    SET_EDGE_ATTR = 4
    DELETE_NODE = 5
    DELETE_EDGE = 6
    REMOVE_NODE_ATTR = 7
    REMOVE_EDGE_ATTR = 8


FORWARD_KINDS = (
    ActionKind.STOP,
    ActionKind.ADD_NODE,
    ActionKind.ADD_EDGE,
    ActionKind.SET_NODE_ATTR,
    ActionKind.SET_EDGE_ATTR,
)
BACKWARD_KINDS = (
    ActionKind.DELETE_NODE,
    ActionKind.DELETE_EDGE,
    ActionKind.REMOVE_NODE_ATTR,
    ActionKind.REMOVE_EDGE_ATTR,
)


@dataclass(frozen=True)
class GraphAction:
    """One action. Argument meaning depends on the kind.

    ADD_NODE:         a = source node (-1 on the empty graph), b = element index
    ADD_EDGE:         a, b = endpoints (stored unsorted, compared sorted)
    SET_NODE_ATTR:    a = node, b = chirality tag (1=CW, 2=CCW)
    SET_EDGE_ATTR:    a, b = endpoints, c = new order (2 or 3)
    DELETE_NODE:      a = node
    DELETE_EDGE:      a, b = endpoints
    REMOVE_NODE_ATTR: a = node
    REMOVE_EDGE_ATTR: a, b = endpoints
    STOP:             no arguments
    """

    kind: ActionKind
    a: int = -1
    b: int = -1
    c: int = -1

    def is_forward(self) -> bool:
        return self.kind in FORWARD_KINDS


@dataclass(frozen=True)
class EnvSpec:
    """Action-space configuration shared by environment, policy and oracles."""

    elements: tuple[str, ...] = ("C", "N", "O", "F", "S", "P")
    orders: tuple[int, ...] = (1, 2, 3)
    chirality_enabled: bool = True
    max_nodes: int = 45
    max_edges: int = 50

    def __post_init__(self):
        if self.orders[0] != 1 or list(self.orders) != sorted(set(self.orders)):
            raise ValueError("orders must be sorted, unique and start at 1")
        for s in self.elements:
            element_index(s)

    @property
    def element_indices(self) -> tuple[int, ...]:
        return tuple(element_index(s) for s in self.elements)

    @property
    def extra_orders(self) -> tuple[int, ...]:
        return self.orders[1:]

    @property
    def num_elements(self) -> int:
        return len(self.elements)

    @property
    def num_node_attr_values(self) -> int:
        return 2 if self.chirality_enabled else 0


DEFAULT_ENV = EnvSpec()


class MolGraph:
    """Immutable molecular graph. Use GraphEnv/apply_action to derive states."""

    __slots__ = ("elements", "chirality", "bonds", "_derived")

    def __init__(self, elements=(), chirality=(), bonds=()):
        object.__setattr__(self, "elements", tuple(elements))
        object.__setattr__(self, "chirality", tuple(chirality))
        normalized = ((min(u, v), max(u, v), o) for u, v, o in bonds)
        object.__setattr__(self, "bonds", tuple(sorted(normalized)))
        object.__setattr__(self, "_derived", {})

    def __setattr__(self, name, value):  # pragma: no cover - guard only
        raise AttributeError("MolGraph is immutable")

    @property
    def num_nodes(self) -> int:
        return len(self.elements)

    @property
    def num_edges(self) -> int:
        return len(self.bonds)

    def _cache(self, key, fn):
        d = self._derived
        if key not in d:
            d[key] = fn()
        return d[key]

    @property
    def bond_sums(self) -> np.ndarray:
        def build():
            s = np.zeros(self.num_nodes, dtype=np.int64)
            for u, v, o in self.bonds:
                s[u] += o
                s[v] += o
            return s

        return self._cache("bond_sums", build)

    @property
    def degrees(self) -> np.ndarray:
        def build():
            d = np.zeros(self.num_nodes, dtype=np.int64)
            for u, v, _ in self.bonds:
                d[u] += 1
                d[v] += 1
            return d

        return self._cache("degrees", build)

    @property
    def edge_orders(self) -> dict[tuple[int, int], int]:
        return self._cache("edge_orders", lambda: {(u, v): o for u, v, o in self.bonds})

    @property
    def neighbors(self) -> tuple[tuple[int, ...], ...]:
        def build():
            nbr = [[] for _ in range(self.num_nodes)]
            for u, v, _ in self.bonds:
                nbr[u].append(v)
                nbr[v].append(u)
            return tuple(tuple(sorted(x)) for x in nbr)

        return self._cache("neighbors", build)

    @property
    def max_valences(self) -> np.ndarray:
        def build():
            return np.array([ELEMENTS[e].max_valence for e in self.elements], dtype=np.int64)

        return self._cache("max_valences", build)

    @property
    def free_valences(self) -> np.ndarray:
        return self._cache("free", lambda: self.max_valences - self.bond_sums)

    @property
    def implicit_h(self) -> tuple[int, ...]:
        def build():
            sums = self.bond_sums
            return tuple(implicit_h_count(e, int(sums[i])) for i, e in enumerate(self.elements))

        return self._cache("implicit_h", build)

    @property
    def is_connected(self) -> bool:
        def build():
            n = self.num_nodes
            if n == 0:
                return False
            seen = [False] * n
            stack = [0]
            seen[0] = True
            count = 1
            nbr = self.neighbors
            while stack:
                x = stack.pop()
                for y in nbr[x]:
                    if not seen[y]:
                        seen[y] = True
                        count += 1
                        stack.append(y)
            return count == n

        return self._cache("connected", build)

    @property
    def bridges(self) -> frozenset[tuple[int, int]]:
        """Bridge edges (u, v) with u < v, via iterative Tarjan lowlink."""

        def build():
            n = self.num_nodes
            nbr = self.neighbors
            disc = [-1] * n
            low = [0] * n
            out = set()
            timer = 0
            for root in range(n):
                if disc[root] != -1:
                    continue
                stack = [(root, -1, iter(nbr[root]))]
                disc[root] = low[root] = timer
                timer += 1
                while stack:
                    x, parent, it = stack[-1]
                    advanced = False
                    for y in it:
                        if disc[y] == -1:
                            disc[y] = low[y] = timer
                            timer += 1
                            stack.append((y, x, iter(nbr[y])))
                            advanced = True
                            break
                        elif y != parent:
                            low[x] = min(low[x], disc[y])
                        # parallel edges cannot occur (single edge per pair)
                    if not advanced:
                        stack.pop()
                        if stack:
                            px = stack[-1][0]
                            low[px] = min(low[px], low[x])
                            if low[x] > disc[px]:
                                out.add((min(px, x), max(px, x)))
            return frozenset(out)

        return self._cache("bridges", build)

    def element_symbol(self, i: int) -> str:
        return ELEMENTS[self.elements[i]].symbol


def new_graph() -> MolGraph:
    """The initial state: no atoms, no bonds."""
    return MolGraph()


def is_terminal_valid(g: MolGraph) -> bool:
    """Nonempty, connected, and every bond-order sum within permitted valence."""
    if g.num_nodes == 0:
        return False
    if not g.is_connected:
        return False
    return bool(np.all(g.bond_sums <= g.max_valences))


def mol_formula(g: MolGraph) -> str:
    parts: dict[str, int] = {}
    for e in g.elements:
        sym = ELEMENTS[e].symbol
        parts[sym] = parts.get(sym, 0) + 1
    h = sum(g.implicit_h)
    if h:
        parts["H"] = h
    return "".join(f"{s}{parts[s]}" for s in sorted(parts))


# ---------------------------------------------------------------------------
# slot layout


def _pair_index(i: int, j: int, n: int) -> int:
    # i < j, row-major over the strict upper triangle
    return i * n - i * (i + 1) // 2 + (j - i - 1)


def _pair_from_index(idx: int, n: int) -> tuple[int, int]:
    i = 0
    row = n - 1
    while idx >= row:
        idx -= row
        i += 1
        row -= 1
    return i, i + 1 + idx


@dataclass(frozen=True)
class SlotLayout:
    """Block offsets of the flat forward/backward mask vectors for one state."""

    n: int
    m: int
    num_elements: int
    num_extra_orders: int
    chirality_enabled: bool

    @property
    def addnode_count(self) -> int:
        return self.num_elements if self.n == 0 else self.n * self.num_elements

    @property
    def pair_count(self) -> int:
        return self.n * (self.n - 1) // 2

    @property
    def setnode_count(self) -> int:
        return self.n * 2 if self.chirality_enabled else 0

    @property
    def setedge_count(self) -> int:
        return self.m * self.num_extra_orders

    @property
    def fwd_offsets(self) -> tuple[int, int, int, int, int]:
        o1 = 1
        o2 = o1 + self.addnode_count
        o3 = o2 + self.pair_count
        o4 = o3 + self.setnode_count
        return (0, o1, o2, o3, o4)

    @property
    def fwd_size(self) -> int:
        return self.fwd_offsets[4] + self.setedge_count

    @property
    def bwd_size(self) -> int:
        return 2 * self.n + 2 * self.m


def layout_for(g: MolGraph, env: EnvSpec) -> SlotLayout:
    return SlotLayout(
        n=g.num_nodes,
        m=g.num_edges,
        num_elements=env.num_elements,
        num_extra_orders=len(env.extra_orders),
        chirality_enabled=env.chirality_enabled,
    )


def forward_slot_to_action(g: MolGraph, env: EnvSpec, slot: int) -> GraphAction:
    lay = layout_for(g, env)
    _, o1, o2, o3, o4 = lay.fwd_offsets
    if slot == 0:
        return GraphAction(ActionKind.STOP)
    if slot < o2:
        k = slot - o1
        if lay.n == 0:
            return GraphAction(ActionKind.ADD_NODE, -1, env.element_indices[k])
        return GraphAction(ActionKind.ADD_NODE, k // lay.num_elements, env.element_indices[k % lay.num_elements])
    if slot < o3:
        i, j = _pair_from_index(slot - o2, lay.n)
        return GraphAction(ActionKind.ADD_EDGE, i, j)
    if slot < o4:
        k = slot - o3
        return GraphAction(ActionKind.SET_NODE_ATTR, k // 2, CHIRALITY_CW + k % 2)
    k = slot - o4
    u, v, _ = g.bonds[k // lay.num_extra_orders]
    return GraphAction(ActionKind.SET_EDGE_ATTR, u, v, env.extra_orders[k % lay.num_extra_orders])


def forward_action_to_slot(g: MolGraph, env: EnvSpec, a: GraphAction) -> int:
    lay = layout_for(g, env)
    _, o1, o2, o3, o4 = lay.fwd_offsets
    if a.kind == ActionKind.STOP:
        return 0
    if a.kind == ActionKind.ADD_NODE:
        e = env.element_indices.index(a.b)
        if lay.n == 0:
            return o1 + e
        return o1 + a.a * lay.num_elements + e
    if a.kind == ActionKind.ADD_EDGE:
        u, v = min(a.a, a.b), max(a.a, a.b)
        return o2 + _pair_index(u, v, lay.n)
    if a.kind == ActionKind.SET_NODE_ATTR:
        return o3 + a.a * 2 + (a.b - CHIRALITY_CW)
    if a.kind == ActionKind.SET_EDGE_ATTR:
        u, v = min(a.a, a.b), max(a.a, a.b)
        ei = _edge_position(g, u, v)
        return o4 + ei * lay.num_extra_orders + env.extra_orders.index(a.c)
    raise IllegalAction(f"{a.kind.name} is not a forward action")


def backward_slot_to_action(g: MolGraph, env: EnvSpec, slot: int) -> GraphAction:
    n, m = g.num_nodes, g.num_edges
    if slot < n:
        return GraphAction(ActionKind.DELETE_NODE, slot)
    if slot < n + m:
        u, v, _ = g.bonds[slot - n]
        return GraphAction(ActionKind.DELETE_EDGE, u, v)
    if slot < 2 * n + m:
        return GraphAction(ActionKind.REMOVE_NODE_ATTR, slot - n - m)
    u, v, _ = g.bonds[slot - 2 * n - m]
    return GraphAction(ActionKind.REMOVE_EDGE_ATTR, u, v)


def backward_action_to_slot(g: MolGraph, env: EnvSpec, a: GraphAction) -> int:
    n, m = g.num_nodes, g.num_edges
    if a.kind == ActionKind.DELETE_NODE:
        return a.a
    if a.kind == ActionKind.DELETE_EDGE:
        return n + _edge_position(g, min(a.a, a.b), max(a.a, a.b))
    if a.kind == ActionKind.REMOVE_NODE_ATTR:
        return n + m + a.a
    if a.kind == ActionKind.REMOVE_EDGE_ATTR:
        return 2 * n + m + _edge_position(g, min(a.a, a.b), max(a.a, a.b))
    raise IllegalAction(f"{a.kind.name} is not a backward action")


def _edge_position(g: MolGraph, u: int, v: int) -> int:
    pos = g._cache("edge_pos", lambda: {(a, b): k for k, (a, b, _) in enumerate(g.bonds)})
    try:
        return pos[(u, v)]
    except KeyError:
        raise UnknownNodeId(f"edge ({u},{v}) not in graph") from None


# ---------------------------------------------------------------------------
# masks


def legal_forward_mask(g: MolGraph, env: EnvSpec = DEFAULT_ENV, force_stop: bool = False) -> np.ndarray:
    """Boolean vector over the forward layout. True slots apply without error.

    ``force_stop`` is the trajectory-length budget hook: when set and Stop is
    legal, every other slot is masked so a rollout at its step limit must
    terminate.
    """
    lay = layout_for(g, env)
    mask = np.zeros(lay.fwd_size, dtype=bool)
    n, m = lay.n, lay.m
    _, o1, o2, o3, o4 = lay.fwd_offsets

    stop_ok = is_terminal_valid(g)
    mask[0] = stop_ok
    if force_stop and stop_ok:
        return mask

    free = g.free_valences

    if n < env.max_nodes:
        if n == 0:
            mask[o1 : o1 + lay.num_elements] = True
        elif m < env.max_edges:
            ok_src = free >= 1
            mask[o1 : o1 + n * lay.num_elements] = np.repeat(ok_src, lay.num_elements)

    if n >= 2 and m < env.max_edges:
        ok = free >= 1
        pair_ok = np.logical_and.outer(ok, ok)
        iu = np.triu_indices(n, k=1)
        flat = pair_ok[iu]
        if m:
            existing = np.zeros((n, n), dtype=bool)
            for u, v, _ in g.bonds:
                existing[u, v] = True
            flat &= ~existing[iu]
        mask[o2 : o2 + lay.pair_count] = flat

    if env.chirality_enabled and n:
        chir = np.array(g.chirality, dtype=np.int64)
        ok_node = (chir == CHIRALITY_NONE) & (g.degrees >= 3)
        mask[o3 : o3 + 2 * n] = np.repeat(ok_node, 2)

    if m and lay.num_extra_orders:
        for k, (u, v, o) in enumerate(g.bonds):
            if o != 1:
                continue
            for t, extra in enumerate(env.extra_orders):
                need = extra - 1
                if free[u] >= need and free[v] >= need:
                    mask[o4 + k * lay.num_extra_orders + t] = True
    return mask


def legal_backward_mask(g: MolGraph, env: EnvSpec = DEFAULT_ENV) -> np.ndarray:
    """Boolean vector over the backward layout.

    Unmasked actions lead to states that remain forward-reachable: node
    deletion is limited to single-bonded, untagged leaves (keeps exact
    inverse pairing with AddNode), edge deletion to order-1 cycle edges, and
    either is blocked when it would strand a chirality tag on an atom left
    with fewer than three neighbours.
    """
    n, m = g.num_nodes, g.num_edges
    mask = np.zeros(2 * n + 2 * m, dtype=bool)
    if n == 0:
        return mask
    if n == 1:
        mask[0] = True
        return mask

    deg = g.degrees
    chir = g.chirality
    bridges = g.bridges

    for v in range(n):
        if deg[v] != 1 or chir[v] != CHIRALITY_NONE:
            continue
        u = g.neighbors[v][0]
        uu, vv = min(u, v), max(u, v)
        if g.edge_orders[(uu, vv)] != 1:
            continue
        if chir[u] != CHIRALITY_NONE and deg[u] - 1 < 3:
            continue
        mask[v] = True

    for k, (u, v, o) in enumerate(g.bonds):
        if o == 1:
            if (u, v) in bridges:
                continue
            if chir[u] != CHIRALITY_NONE and deg[u] - 1 < 3:
                continue
            if chir[v] != CHIRALITY_NONE and deg[v] - 1 < 3:
                continue
            mask[n + k] = True
        else:
            mask[n + m + n + k] = True

    for v in range(n):
        if chir[v] != CHIRALITY_NONE:
            mask[n + m + v] = True
    return mask


# ---------------------------------------------------------------------------
# transitions


def _check_node(g: MolGraph, i: int):
    if not (0 <= i < g.num_nodes):
        raise UnknownNodeId(f"node {i} not in graph of size {g.num_nodes}")


def apply_action(g: MolGraph, a: GraphAction, env: EnvSpec = DEFAULT_ENV) -> MolGraph:
    """Successor state for action ``a``. Raises IllegalAction on masked slots.

    AddNode attaches the new atom to its source via a single bond (the very
    first atom is exempt), which keeps every reachable state connected.
    """
    kind = a.kind
    if kind == ActionKind.STOP:
        raise IllegalAction("Stop does not produce a successor state")

    if kind in FORWARD_KINDS:
        if kind == ActionKind.ADD_NODE:
            if g.num_nodes:
                _check_node(g, a.a)
            if a.b not in env.element_indices:
                raise IllegalAction(f"element index {a.b} not in this environment")
        elif kind in (ActionKind.ADD_EDGE, ActionKind.SET_EDGE_ATTR):
            _check_node(g, a.a)
            _check_node(g, a.b)
            if kind == ActionKind.SET_EDGE_ATTR and a.c not in env.extra_orders:
                raise IllegalAction(f"order {a.c} not in this environment")
        elif kind == ActionKind.SET_NODE_ATTR:
            _check_node(g, a.a)
            if a.b not in (CHIRALITY_CW, CHIRALITY_CCW):
                raise IllegalAction(f"chirality tag {a.b} unknown")
        slot = forward_action_to_slot(g, env, a)
        if not legal_forward_mask(g, env)[slot]:
            raise IllegalAction(f"forward action {a} is masked")
        if kind == ActionKind.ADD_NODE:
            elems = g.elements + (a.b,)
            chir = g.chirality + (CHIRALITY_NONE,)
            bonds = g.bonds if g.num_nodes == 0 else g.bonds + ((a.a, g.num_nodes, 1),)
            return MolGraph(elems, chir, bonds)
        if kind == ActionKind.ADD_EDGE:
            u, v = min(a.a, a.b), max(a.a, a.b)
            return MolGraph(g.elements, g.chirality, g.bonds + ((u, v, 1),))
        if kind == ActionKind.SET_NODE_ATTR:
            chir = list(g.chirality)
            chir[a.a] = a.b
            return MolGraph(g.elements, chir, g.bonds)
        u, v = min(a.a, a.b), max(a.a, a.b)
        bonds = tuple((x, y, a.c if (x, y) == (u, v) else o) for x, y, o in g.bonds)
        return MolGraph(g.elements, g.chirality, bonds)

    # backward kinds
    if kind == ActionKind.DELETE_NODE:
        _check_node(g, a.a)
    elif kind in (ActionKind.DELETE_EDGE, ActionKind.REMOVE_EDGE_ATTR):
        _check_node(g, a.a)
        _check_node(g, a.b)
    else:
        _check_node(g, a.a)
    slot = backward_action_to_slot(g, env, a)
    if not legal_backward_mask(g, env)[slot]:
        raise IllegalAction(f"backward action {a} is masked")
    if kind == ActionKind.DELETE_NODE:
        v = a.a
        elems = g.elements[:v] + g.elements[v + 1 :]
        chir = g.chirality[:v] + g.chirality[v + 1 :]
        bonds = tuple(
            (x - (x > v), y - (y > v), o) for x, y, o in g.bonds if x != v and y != v
        )
        return MolGraph(elems, chir, bonds)
    if kind == ActionKind.DELETE_EDGE:
        u, v = min(a.a, a.b), max(a.a, a.b)
        return MolGraph(g.elements, g.chirality, tuple(b for b in g.bonds if (b[0], b[1]) != (u, v)))
    if kind == ActionKind.REMOVE_NODE_ATTR:
        chir = list(g.chirality)
        chir[a.a] = CHIRALITY_NONE
        return MolGraph(g.elements, chir, g.bonds)
    u, v = min(a.a, a.b), max(a.a, a.b)
    bonds = tuple((x, y, 1 if (x, y) == (u, v) else o) for x, y, o in g.bonds)
    return MolGraph(g.elements, g.chirality, bonds)


def forward_inverse(g_before: MolGraph, a: GraphAction) -> GraphAction:
    """Backward action undoing forward ``a`` applied to ``g_before``.

    Expressed in the successor state's coordinates (AddNode appends, so the
    new node's id is the prior node count).
    """
    if a.kind == ActionKind.ADD_NODE:
        return GraphAction(ActionKind.DELETE_NODE, g_before.num_nodes)
    if a.kind == ActionKind.ADD_EDGE:
        return GraphAction(ActionKind.DELETE_EDGE, min(a.a, a.b), max(a.a, a.b))
    if a.kind == ActionKind.SET_NODE_ATTR:
        return GraphAction(ActionKind.REMOVE_NODE_ATTR, a.a)
    if a.kind == ActionKind.SET_EDGE_ATTR:
        return GraphAction(ActionKind.REMOVE_EDGE_ATTR, min(a.a, a.b), max(a.a, a.b))
    raise IllegalAction(f"{a.kind.name} has no backward inverse")


# ---------------------------------------------------------------------------
# canonical identity


def _refine_classes(g: MolGraph, classes: list[int]) -> list[int]:
    n = g.num_nodes
    nbr = g.neighbors
    orders = g.edge_orders
    while True:
        sigs = []
        for i in range(n):
            env_sig = tuple(sorted((orders[(min(i, j), max(i, j))], classes[j]) for j in nbr[i]))
            sigs.append((classes[i], env_sig))
        ranking = {s: k for k, s in enumerate(sorted(set(sigs)))}
        new = [ranking[s] for s in sigs]
        if new == classes:
            return new
        classes = new


def _initial_classes(g: MolGraph) -> list[int]:
    n = g.num_nodes
    sums = g.bond_sums
    deg = g.degrees
    sigs = [(g.elements[i], int(deg[i]), int(sums[i])) for i in range(n)]
    ranking = {s: k for k, s in enumerate(sorted(set(sigs)))}
    return [ranking[s] for s in sigs]


def _serialize(g: MolGraph, ranks: list[int]) -> str:
    n = g.num_nodes
    inv = [0] * n
    for i, r in enumerate(ranks):
        inv[r] = i
    atoms = ",".join(f"{g.element_symbol(inv[r])}{g.implicit_h[inv[r]]}" for r in range(n))
    edges = sorted(
        (min(ranks[u], ranks[v]), max(ranks[u], ranks[v]), o) for u, v, o in g.bonds
    )
    bond_str = ",".join(f"{u}-{v}:{o}" for u, v, o in edges)
    return f"{atoms}|{bond_str}"


def _canonical_search(g: MolGraph, classes: list[int]) -> tuple[str, list[int]]:
    n = g.num_nodes
    if len(set(classes)) == n:
        return _serialize(g, classes), classes
    # individualize: split the first smallest non-singleton cell
    counts: dict[int, int] = {}
    for c in classes:
        counts[c] = counts.get(c, 0) + 1
    target = min(c for c, k in counts.items() if k > 1)
    best: tuple[str, list[int]] | None = None
    for i in range(n):
        if classes[i] != target:
            continue
        bumped = [c + (1 if c > target or (c == target and k != i) else 0) for k, c in enumerate(classes)]
        refined = _refine_classes(g, bumped)
        cand = _canonical_search(g, refined)
        if best is None or cand[0] < best[0]:
            best = cand
    assert best is not None
    return best


def canonical_ranks(g: MolGraph) -> list[int]:
    """Canonical node ranks via iterative neighbourhood refinement.

    Ties are broken by exploring every individualization of the first tied
    cell and keeping the lexicographically smallest serialization, so the
    result is invariant under node relabeling. Chirality tags are ignored.
    """
    if g.num_nodes == 0:
        return []
    classes = _refine_classes(g, _initial_classes(g))
    _, ranks = _canonical_search(g, classes)
    return ranks


def canonical_key(g: MolGraph) -> str:
    """Order-independent identity string (stereo-blind), e.g. 'C3,C3,O1|0-1:1,1-2:1'."""
    if not is_terminal_valid(g):
        raise InvalidMolecule("canonical_key requires a terminal-valid graph")
    return g._cache("canonical_key", lambda: _serialize(g, canonical_ranks(g)))


def graphs_isomorphic(a: MolGraph, b: MolGraph) -> bool:
    if a.num_nodes != b.num_nodes or a.num_edges != b.num_edges:
        return False
    ra = _serialize(a, canonical_ranks(a))
    rb = _serialize(b, canonical_ranks(b))
    return ra == rb
