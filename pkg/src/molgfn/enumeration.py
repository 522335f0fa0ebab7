"""Brute-force enumeration of tiny chemical spaces and exact target
distributions, the oracle side of the distribution-matching checks."""

from __future__ import annotations

import json
from dataclasses import dataclass

from . import graph as G
from .conditioning import ConditionalRange, conditional_reward
from .errors import BudgetExceeded
from .graph import EnvSpec, MolGraph


@dataclass(frozen=True)
class TinySpaceConfig:
    elements: tuple[str, ...] = ("C",)
    max_atoms: int = 3
    orders: tuple[int, ...] = (1, 2, 3)
    chirality_enabled: bool = False
    state_budget: int = 200_000

    def env(self) -> EnvSpec:
        max_edges = self.max_atoms * (self.max_atoms - 1) // 2
        return EnvSpec(
            elements=self.elements,
            orders=self.orders,
            chirality_enabled=self.chirality_enabled,
            max_nodes=self.max_atoms,
            max_edges=max(max_edges, 1),
        )


def enumerate_terminals(cfg: TinySpaceConfig) -> dict[str, MolGraph]:
    """All reachable nonempty states, keyed canonically (every nonempty
    reachable state is a valid terminal). BFS over unmasked forward actions
    deduplicated by canonical key."""
    env = cfg.env()
    start = G.new_graph()
    seen: dict[str, MolGraph] = {}
    frontier: list[MolGraph] = [start]
    visited_keys: set[str] = set()
    while frontier:
        nxt: list[MolGraph] = []
        for g in frontier:
            mask = G.legal_forward_mask(g, env)
            for slot in mask.nonzero()[0]:
                action = G.forward_slot_to_action(g, env, int(slot))
                if action.kind == G.ActionKind.STOP:
                    continue
                child = G.apply_action(g, action, env)
                key = G.canonical_key(child)
                if key in visited_keys:
                    continue
                if len(visited_keys) >= cfg.state_budget:
                    raise BudgetExceeded(
                        f"enumeration exceeded {cfg.state_budget} states"
                    )
                visited_keys.add(key)
                seen[key] = child
                nxt.append(child)
        frontier = nxt
    return seen


def exact_target(
    terminals: dict[str, MolGraph],
    specs,
    cond: ConditionalRange,
    beta: float,
    value_fn,
) -> dict[str, float]:
    """p(x) proportional to R(x | cond)^beta over the enumerated terminals.

    ``value_fn(graph) -> dict`` supplies property values for the reward.
    """
    weights: dict[str, float] = {}
    for key, g in terminals.items():
        r = conditional_reward(specs, cond, value_fn(g))
        weights[key] = r**beta
    z = sum(weights.values())
    return {k: w / z for k, w in weights.items()}


def distribution_distance(samples: dict[str, float], target: dict[str, float]) -> float:
    """Total variation distance; inputs are key->probability (samples may be
    raw counts, they are normalized first)."""
    total = sum(samples.values())
    empirical = {k: v / total for k, v in samples.items()} if total > 0 else {}
    keys = set(empirical) | set(target)
    return 0.5 * sum(abs(empirical.get(k, 0.0) - target.get(k, 0.0)) for k in keys)


def dump_enumeration(terminals: dict[str, MolGraph], path) -> None:
    from .smiles import write_smiles

    with open(path, "w", encoding="utf-8") as fh:
        json.dump({k: write_smiles(g) for k, g in terminals.items()}, fh, indent=0)
