"""Wildman-Crippen logP by atomic contribution.

Atom typing follows the published table restricted to the six supported
elements plus implicit hydrogen; types that require charges, halogens beyond
fluorine, or exotic neighbours are unreachable here. Each atom takes the
first matching type in the published order; unmatched environments fall back
to the per-element wildcard contribution.
"""

from __future__ import annotations

from ..errors import InvalidMolecule
from ..graph import MolGraph, is_terminal_valid
from .rings import aromatic_atoms, aromatic_bonds

# carbon
_C1 = 0.1441
_C2 = 0.0
_C3 = -0.2035
_C4 = -0.2051
_C5 = -0.2783
_C6 = 0.1551
_C7 = 0.0017
_C8 = 0.08452
_C9 = -0.1444
_C10 = -0.0516
_C11 = 0.1193
_C12 = -0.0967
_C13 = -0.5443
_C14 = 0.0
_C18 = 0.1581
_C19 = 0.2955
_C20 = 0.2713
_C21 = 0.1360
_C22 = 0.4619
_C23 = 0.5437
_C24 = 0.1893
_C25 = -0.8186
_C26 = 0.2640
_CS = 0.08129
# nitrogen
_N1 = -1.0190
_N2 = -0.7096
_N3 = -1.0270
_N4 = -0.5188
_N5 = 0.08387
_N6 = 0.1836
_N7 = -0.3187
_N8 = -0.4458
_N9 = 0.01508
_N11 = -0.3239
_NS = -0.4806
# oxygen
_O1 = 0.1552
_O2 = -0.2893
_O3 = -0.0684
_O4 = -0.4195
_O5 = 0.0335
_O6 = -0.3339
_O8 = 0.1788
_O9 = -0.1526
_O10 = 0.1129
_O11 = 0.4833
_OS = -0.1188
# others
_F = 0.4202
_P = 0.8612
_S1 = 0.6482
_S3 = 0.6237
# hydrogen
_H1 = 0.1230
_H2 = -0.2677
_H3 = 0.2142
_H4 = 0.2980
_HS = 0.1125

_HETERO = {"N", "O", "P", "S", "F"}


class _Ctx:
    """Per-molecule view used by the typing predicates."""

    def __init__(self, g: MolGraph):
        self.g = g
        self.ar = aromatic_atoms(g)
        self.ar_bonds = aromatic_bonds(g)
        self.h = g.implicit_h
        self.orders = g.edge_orders

    def bonds_of(self, v: int):
        out = []
        for w in self.g.neighbors[v]:
            key = (min(v, w), max(v, w))
            if key in self.ar_bonds:
                out.append((w, "ar"))
            else:
                out.append((w, self.orders[key]))
        return out

    def sym(self, v: int) -> str:
        return self.g.element_symbol(v)


def _type_carbon(c: _Ctx, v: int) -> float:
    g, h = c.g, c.h[v]
    bonds = c.bonds_of(v)
    if v in c.ar:
        if h >= 1:
            return _C18
        subst = [(w, o) for w, o in bonds if o != "ar"]
        if any(c.sym(w) == "P" and w not in c.ar for w, _ in subst):
            return _C13
        if any(c.sym(w) == "F" for w, _ in subst):
            return _C14
        if not subst:
            return _C19  # three aromatic bonds (ring fusion)
        w, o = subst[0]
        if o == 2:
            return _C25
        if w in c.ar:
            return _C20
        ws = c.sym(w)
        if ws == "C":
            return _C21
        if ws == "N":
            return _C22
        if ws == "O":
            return _C23
        if ws == "S":
            return _C24
        return _CS

    doubles = [(w, o) for w, o in bonds if o == 2]
    triples = [(w, o) for w, o in bonds if o == 3]
    if triples:
        return _C7
    if doubles:
        if any(c.sym(w) != "C" and w not in c.ar for w, _ in doubles):
            return _C5
        if any(w in c.ar for w, _ in bonds):
            return _C26
        return _C6
    # sp3
    het = [w for w, _ in bonds if c.sym(w) in _HETERO and w not in c.ar]
    if het:
        return _C3 if h >= 2 else _C4
    arn = [w for w, _ in bonds if w in c.ar]
    if arn:
        if h == 3:
            return _C8 if c.sym(arn[0]) == "C" else _C9
        if h == 2:
            return _C10
        if h == 1:
            return _C11
        return _C12
    return _C1 if h >= 2 else _C2


def _type_nitrogen(c: _Ctx, v: int) -> float:
    if v in c.ar:
        return _N11
    h = c.h[v]
    bonds = c.bonds_of(v)
    singles = [w for w, o in bonds if o == 1 or o == "ar"]
    doubles = [w for w, o in bonds if o == 2]
    triples = [w for w, o in bonds if o == 3]
    has_ar = any(w in c.ar for w, _ in bonds)
    if h == 2 and len(singles) == 1 and not doubles and not triples:
        return _N3 if has_ar else _N1
    if h == 1:
        if len(singles) == 2 and not doubles:
            return _N4 if has_ar else _N2
        if len(doubles) == 1 and not singles:
            return _N5
    if h == 0:
        if len(singles) == 3 and not doubles:
            return _N8 if has_ar else _N7
        if len(doubles) == 1 and len(singles) == 1:
            return _N6
        if len(triples) == 1 and not singles and not doubles:
            return _N9
    return _NS


def _type_oxygen(c: _Ctx, v: int) -> float:
    if v in c.ar:
        return _O1
    h = c.h[v]
    bonds = c.bonds_of(v)
    if h >= 1:
        return _O2
    singles = [w for w, o in bonds if o == 1]
    doubles = [w for w, o in bonds if o == 2]
    if len(singles) == 2:
        return _O4 if any(w in c.ar for w in singles) else _O3
    if len(doubles) == 1:
        w = doubles[0]
        ws = c.sym(w)
        if ws == "N":
            return _O5
        if ws == "S":
            return _O6
        if w in c.ar:
            return _O8
        if ws == "C":
            others = [x for x, _ in c.bonds_of(w) if x != v]
            if len(others) == 2 and all(c.sym(x) != "C" for x in others):
                return _O11
            if any(x in c.ar for x in others):
                return _O10
            return _O9
    return _OS


def _h_type(c: _Ctx, v: int) -> float:
    sym = c.sym(v)
    if sym == "C":
        return _H1
    if sym == "N":
        return _H3
    if sym == "O":
        nbrs = c.g.neighbors[v]
        if not nbrs:
            return _HS
        w = nbrs[0]
        ws = c.sym(w)
        if ws == "N":
            return _H3
        if ws in ("O", "S"):
            return _H4
        if ws == "C":
            if w in c.ar:
                return _H2
            # acid/enol hydroxyl: carbon carries a double bond to C/N/O/S
            for x, o in c.bonds_of(w):
                if o == 2 and c.sym(x) in ("C", "N", "O", "S"):
                    return _H4
            return _H2
        return _H2
    return _H2  # H on S or P


def crippen_logp(g: MolGraph) -> float:
    if not is_terminal_valid(g):
        raise InvalidMolecule("crippen_logp requires a terminal-valid graph")
    c = _Ctx(g)
    total = 0.0
    for v in range(g.num_nodes):
        sym = c.sym(v)
        if sym == "C":
            total += _type_carbon(c, v)
        elif sym == "N":
            total += _type_nitrogen(c, v)
        elif sym == "O":
            total += _type_oxygen(c, v)
        elif sym == "F":
            total += _F
        elif sym == "P":
            total += _P
        elif sym == "S":
            total += _S3 if v in c.ar else _S1
        h = c.h[v]
        if h:
            total += h * _h_type(c, v)
    return total
