"""Topological polar surface area from additive N/O fragment contributions.

Uses the published per-environment surface contributions for neutral
nitrogen and oxygen (the charged entries are unreachable in this
environment). Atom environments are classified on the kekulized graph with
perceived aromaticity; an N/O environment with no table entry contributes
zero.
"""

from __future__ import annotations

from ..errors import InvalidMolecule
from ..graph import MolGraph, is_terminal_valid
from .rings import aromatic_atoms, aromatic_bonds, sssr


def _in_three_ring(g: MolGraph, v: int) -> bool:
    return any(len(r) == 3 and v in r for r in sssr(g))


def tpsa(g: MolGraph) -> float:
    if not is_terminal_valid(g):
        raise InvalidMolecule("tpsa requires a terminal-valid graph")
    ar_atoms = aromatic_atoms(g)
    ar_bonds = aromatic_bonds(g)
    orders = g.edge_orders
    hs = g.implicit_h
    total = 0.0

    for v in range(g.num_nodes):
        sym = g.element_symbol(v)
        if sym not in ("N", "O"):
            continue
        h = hs[v]
        n_ar = 0
        singles = 0
        doubles = 0
        triples = 0
        for w in g.neighbors[v]:
            key = (min(v, w), max(v, w))
            if key in ar_bonds:
                n_ar += 1
                continue
            o = orders[key]
            if o == 1:
                singles += 1
            elif o == 2:
                doubles += 1
            else:
                triples += 1

        contrib = 0.0
        if sym == "N":
            if v in ar_atoms and n_ar >= 2:
                if h == 1:
                    contrib = 15.79
                elif n_ar == 3:
                    contrib = 4.41
                elif singles == 1:
                    contrib = 4.93
                elif doubles == 1:
                    contrib = 8.39
                elif n_ar == 2 and singles == 0 and doubles == 0:
                    contrib = 12.89
            else:
                three = _in_three_ring(g, v)
                if h == 0:
                    if singles == 3:
                        contrib = 3.01 if three else 3.24
                    elif singles == 1 and doubles == 1:
                        contrib = 12.36
                    elif triples == 1 and singles == 0:
                        contrib = 23.79
                    elif singles == 1 and doubles == 2:
                        contrib = 11.68
                    elif doubles == 1 and triples == 1:
                        contrib = 13.60
                elif h == 1:
                    if singles == 2:
                        contrib = 21.94 if three else 12.03
                    elif doubles == 1:
                        contrib = 23.85
                elif h == 2 and singles == 1:
                    contrib = 26.02
        else:  # O
            if v in ar_atoms and n_ar >= 2:
                contrib = 13.14
            elif h == 1 and singles == 1:
                contrib = 20.23
            elif h == 0:
                if singles == 2:
                    contrib = 12.53 if _in_three_ring(g, v) else 9.23
                elif doubles == 1:
                    contrib = 17.07
        total += contrib
    return total
