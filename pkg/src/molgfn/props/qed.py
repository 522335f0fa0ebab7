"""Quantitative estimate of drug-likeness.

Geometric mean (unit weights) of eight asymmetric desirability functions
over MW, ALOGP, HBA, HBD, PSA, ROTB, AROM and ALERTS, using the published
asymmetric-double-sigmoid parameters.

Structural alerts are a fixed, documented list implementable on neutral
six-element graphs: aldehyde, non-aromatic imine, alkyne, N-N single bond,
azo, nitroso, peroxide, disulfide, thiol, Michael acceptor, three-membered
heterocycle, any phosphorus atom, and a >=4-atom acyclic methylene chain.
The count is the number of alert classes present.
"""

from __future__ import annotations

import math

from ..errors import InvalidMolecule
from ..graph import MolGraph, is_terminal_valid
from .crippen import crippen_logp
from .rings import aromatic_atoms, aromatic_rings, ring_atoms, sssr
from .tpsa import tpsa

# (a, b, c, d, e, f, dmax) per descriptor
_ADS_PARAMS = {
    "MW": (2.817065973, 392.5754953, 290.7489764, 2.419764353, 49.22325677, 65.37051707, 104.9805561),
    "ALOGP": (3.172690585, 137.8624751, 2.534937431, 4.581497897, 0.822739154, 0.576295591, 131.3186604),
    "HBA": (2.948620388, 160.4605972, 3.615294657, 4.435986202, 0.290141953, 1.300669958, 148.7763046),
    "HBD": (1.618662227, 1010.051101, 0.985094388, 0.000000001, 0.713820843, 0.920922555, 258.1632616),
    "PSA": (1.876861559, 125.2232657, 62.90773554, 87.83366614, 12.01999824, 28.51324732, 104.5686167),
    "ROTB": (0.010000000, 272.4121427, 2.558379970, 1.565547684, 1.271567166, 2.758063707, 105.4420403),
    "AROM": (3.217788970, 957.7374108, 2.274627939, 0.000000001, 1.317690384, 0.375760881, 312.3372610),
    "ALERTS": (0.010000000, 1199.094025, -0.09002883, 0.000000001, 0.185904477, 0.875193782, 417.7253140),
}


def _ads(x: float, p: tuple[float, ...]) -> float:
    a, b, c, d, e, f, dmax = p
    arg1 = (x - c + d / 2.0) / e
    arg2 = (x - c - d / 2.0) / f
    val = a + b / (1.0 + math.exp(-arg1)) * (1.0 - 1.0 / (1.0 + math.exp(-arg2)))
    return val / dmax


def hydrogen_bond_acceptors(g: MolGraph) -> int:
    """N/O/S acceptor atoms: every O, pyridine-type aromatic N, nitrile N,
    non-amide amine N, and 2-coordinate or thiocarbonyl S."""
    ar = aromatic_atoms(g)
    orders = g.edge_orders
    hs = g.implicit_h
    count = 0
    for v in range(g.num_nodes):
        sym = g.element_symbol(v)
        vb = [(w, orders[(min(v, w), max(v, w))]) for w in g.neighbors[v]]
        if sym == "O":
            count += 1
        elif sym == "N":
            if v in ar:
                if hs[v] == 0 and len(vb) == 2:
                    count += 1
            elif any(o == 3 for _, o in vb):
                count += 1
            elif len(vb) + hs[v] == 3 and all(o == 1 for _, o in vb):
                adjacent_acyl = False
                for w, _ in vb:
                    if g.element_symbol(w) not in ("C", "S"):
                        continue
                    for x in g.neighbors[w]:
                        if x == v:
                            continue
                        if (
                            orders[(min(w, x), max(w, x))] == 2
                            and g.element_symbol(x) == "O"
                        ):
                            adjacent_acyl = True
                if not adjacent_acyl:
                    count += 1
        elif sym == "S":
            if hs[v] == 0 and int(g.bond_sums[v]) == 2:
                count += 1
    return count


def hydrogen_bond_donors(g: MolGraph) -> int:
    hs = g.implicit_h
    return sum(
        1
        for v in range(g.num_nodes)
        if hs[v] >= 1 and g.element_symbol(v) in ("N", "O")
    )


def rotatable_bonds(g: MolGraph) -> int:
    """Single non-ring bonds between non-terminal atoms, sp atoms excluded."""
    ringed = set()
    for r in sssr(g):
        for i in range(len(r)):
            a, b = r[i], r[(i + 1) % len(r)]
            ringed.add((min(a, b), max(a, b)))
    deg = g.degrees
    sp = set()
    for u, v, o in g.bonds:
        if o == 3:
            sp.add(u)
            sp.add(v)
    count = 0
    for u, v, o in g.bonds:
        if o != 1 or (u, v) in ringed:
            continue
        if deg[u] < 2 or deg[v] < 2 or u in sp or v in sp:
            continue
        count += 1
    return count


def _alert_count(g: MolGraph) -> int:
    orders = g.edge_orders
    hs = g.implicit_h
    ar = aromatic_atoms(g)
    sym = g.element_symbol
    rings = sssr(g)
    in_ring = ring_atoms(g)

    def bonded(v):
        return [(w, orders[(min(v, w), max(v, w))]) for w in g.neighbors[v]]

    found = set()
    for v in range(g.num_nodes):
        s = sym(v)
        vb = bonded(v)
        if s == "C" and hs[v] >= 1 and any(o == 2 and sym(w) == "O" for w, o in vb):
            found.add("aldehyde")
        if s == "C" and v not in ar and any(o == 2 and sym(w) == "N" and w not in ar for w, o in vb):
            found.add("imine")
        if s == "S" and hs[v] >= 1:
            found.add("thiol")
        if s == "P":
            found.add("phosphorus")
        for w, o in vb:
            if w < v:
                continue
            pair = {s, sym(w)}
            if o == 3 and pair == {"C"}:
                found.add("alkyne")
            if pair == {"N"} and o == 1 and v not in ar and w not in ar:
                found.add("hydrazine")
            if pair == {"N"} and o == 2:
                found.add("azo")
            if pair == {"N", "O"} and o == 2 and v not in ar and w not in ar:
                found.add("nitroso")
            if pair == {"O"}:
                found.add("peroxide")
            if pair == {"S"} and o == 1:
                found.add("disulfide")
        # Michael acceptor: C=C with a carbonyl on either end
        for w, o in vb:
            if o == 2 and s == "C" and sym(w) == "C" and v not in ar and w not in ar:
                for x, o2 in bonded(w):
                    if x != v and o2 == 1 and sym(x) == "C":
                        if any(o3 == 2 and sym(y) == "O" for y, o3 in bonded(x)):
                            found.add("michael_acceptor")
    for r in rings:
        if len(r) == 3 and any(sym(v) in ("N", "O", "S") for v in r):
            found.add("small_heterocycle")
    # acyclic methylene chains of length >= 4
    best = 0
    deg = g.degrees
    visited = set()
    for v in range(g.num_nodes):
        if v in visited:
            continue
        if sym(v) == "C" and v not in in_ring and deg[v] == 2 and hs[v] == 2:
            chain = {v}
            frontier = [v]
            while frontier:
                x = frontier.pop()
                for w in g.neighbors[x]:
                    if (
                        w not in chain
                        and sym(w) == "C"
                        and w not in in_ring
                        and deg[w] == 2
                        and hs[w] == 2
                    ):
                        chain.add(w)
                        frontier.append(w)
            visited |= chain
            best = max(best, len(chain))
    if best >= 4:
        found.add("long_chain")
    return len(found)


def qed(g: MolGraph) -> float:
    if not is_terminal_valid(g):
        raise InvalidMolecule("qed requires a terminal-valid graph")
    from . import mol_wt  # local import avoids a cycle

    values = {
        "MW": mol_wt(g),
        "ALOGP": crippen_logp(g),
        "HBA": float(hydrogen_bond_acceptors(g)),
        "HBD": float(hydrogen_bond_donors(g)),
        "PSA": tpsa(g),
        "ROTB": float(rotatable_bonds(g)),
        "AROM": float(len(aromatic_rings(g))),
        "ALERTS": float(_alert_count(g)),
    }
    log_sum = 0.0
    for name, x in values.items():
        d = max(_ads(x, _ADS_PARAMS[name]), 1e-12)
        log_sum += math.log(d)
    return math.exp(log_sum / len(values))
