"""Simplified synthetic-accessibility score in [1, 10].

Keeps the shape of the fragment-frequency approach: a per-atom score from
how common each circular environment is in a reference corpus, minus
complexity penalties (size, spiro/bridgehead atoms, macrocycles), affinely
rescaled to [1, 10] with log smoothing of the hard end. The frequency table
is built from the ingested corpus instead of an external fragment database;
the packaged default table was generated from the committed desk corpus.
"""

from __future__ import annotations

import json
import math
from importlib import resources

from ..errors import InvalidMolecule
from ..graph import MolGraph, is_terminal_valid
from .fingerprint import atom_environments
from .rings import sssr

_UNSEEN_SCORE = -4.0


def build_fragment_table(graphs) -> dict[str, float]:
    """Log10 frequency-vs-uniform scores for every environment in ``graphs``."""
    counts: dict[int, int] = {}
    for g in graphs:
        for env in atom_environments(g):
            counts[env] = counts.get(env, 0) + 1
    total = sum(counts.values())
    if not total:
        return {}
    uniform = total / len(counts)
    return {str(env): math.log10(c / uniform) for env, c in counts.items()}


def save_fragment_table(table: dict[str, float], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(table, fh)


def load_fragment_table(path) -> dict[str, float]:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


_default_table: dict[str, float] | None = None


def default_fragment_table() -> dict[str, float]:
    global _default_table
    if _default_table is None:
        ref = resources.files("molgfn.props").joinpath("data/sas_fragments.json")
        with ref.open("r", encoding="utf-8") as fh:
            _default_table = json.load(fh)
    return _default_table


def _ring_complexity(g: MolGraph) -> tuple[int, int, bool]:
    rings = [set(r) for r in sssr(g)]
    spiro: set[int] = set()
    bridge: set[int] = set()
    macro = any(len(r) > 8 for r in rings)
    deg = g.degrees
    for i in range(len(rings)):
        for j in range(i + 1, len(rings)):
            shared = rings[i] & rings[j]
            if len(shared) == 1:
                spiro |= shared
            elif len(shared) >= 3:
                bridge |= {v for v in shared if deg[v] >= 3}
    return len(spiro), len(bridge), macro


def sas_simplified(g: MolGraph, table: dict[str, float] | None = None) -> float:
    if not is_terminal_valid(g):
        raise InvalidMolecule("sas requires a terminal-valid graph")
    if table is None:
        table = default_fragment_table()

    envs = atom_environments(g)
    n_atoms = g.num_nodes
    frag_score = sum(table.get(str(e), _UNSEEN_SCORE) for e in envs) / len(envs)

    n_spiro, n_bridge, macro = _ring_complexity(g)
    size_penalty = n_atoms**1.005 - n_atoms
    complexity = (
        size_penalty
        + math.log10(n_spiro + 1)
        + math.log10(n_bridge + 1)
        + (math.log10(2) if macro else 0.0)
    )

    n_unique = len(set(envs))
    symmetry_bonus = 0.5 * math.log(n_atoms / n_unique) if n_atoms > n_unique else 0.0

    raw = frag_score - complexity + symmetry_bonus
    score = 11.0 - (raw - (-4.0) + 1.0) / (2.5 - (-4.0)) * 9.0
    if score > 8.0:
        score = 8.0 + math.log(score + 1.0 - 9.0)
    return min(10.0, max(1.0, score))
