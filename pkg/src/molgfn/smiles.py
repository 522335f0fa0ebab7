"""SMILES input/output for the drug-like subset used by the corpus.

Supported grammar: bare organic-subset atoms of the six-element vocabulary,
aromatic lowercase c/n/o/s/p, branches, ring-closure digits (including %nn),
bond symbols - = # :, stereo bond symbols / \\ (accepted, treated as single),
and bracket atoms carrying an H count and/or @ / @@ chirality with zero
charge. Isotopes, charges, wildcards and dot-disconnections are rejected.

Aromatic rings are kekulized by exact backtracking perfect matching over the
aromatic subgraph; output is always written kekulized from the canonical
atom ranking, so isomorphic graphs serialize identically.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .elements import ELEMENTS, SYMBOL_TO_INDEX, implicit_h_count
from .errors import (
    ChargeUnsupported,
    InvalidMolecule,
    KekulizationFailure,
    SmilesSyntaxError,
    UnsupportedElement,
    ValenceError,
)
from .graph import (
    CHIRALITY_CCW,
    CHIRALITY_CW,
    CHIRALITY_NONE,
    MolGraph,
    canonical_ranks,
    is_terminal_valid,
)

_AROMATIC_OK = {"c", "n", "o", "s", "p"}
_BOND_ORDERS = {"-": 1, "=": 2, "#": 3, "/": 1, "\\": 1}
_AROM_BOND = ":"

_BRACKET_RE = re.compile(
    r"^(?P<isotope>\d+)?(?P<symbol>[A-Za-z][a-z]?)(?P<chiral>@@?)?"
    r"(?P<hcount>H\d*)?(?P<charge>[+-]\d*|\++|-+)?(?P<cls>:\d+)?$"
)

# the only bare two-letter organic-subset elements; detected so they reject
# as unsupported elements instead of splitting into two tokens
_KNOWN_FOREIGN = {"Cl", "Br"}

# real element symbols outside the vocabulary reject as unsupported; anything
# else is a syntax error
_REAL_ELEMENTS = {
    "H", "He", "Li", "Be", "B", "Ne", "Na", "Mg", "Al", "Si", "Cl", "Ar",
    "K", "Ca", "Cr", "Mn", "Fe", "Co", "Ni", "Cu", "Zn", "Ga", "Ge", "As",
    "Se", "Br", "Kr", "Sn", "Sb", "Te", "I", "Xe", "Pt", "Au", "Hg", "Pb", "Bi",
}


@dataclass
class _Atom:
    symbol: str
    aromatic: bool
    h_explicit: int | None = None
    chirality: int = CHIRALITY_NONE
    has_explicit_double: bool = False


@dataclass
class ParseReport:
    accepted: int = 0
    rejected: dict[str, int] = field(
        default_factory=lambda: {
            "unsupported_element": 0,
            "net_charge": 0,
            "valence_error": 0,
            "kekulization_failure": 0,
            "syntax_error": 0,
        }
    )

    @property
    def total(self) -> int:
        return self.accepted + sum(self.rejected.values())


def _parse_bracket(body: str) -> _Atom:
    m = _BRACKET_RE.match(body)
    if m is None:
        raise SmilesSyntaxError(f"malformed bracket atom [{body}]")
    if m.group("isotope"):
        raise SmilesSyntaxError("isotopes are not supported")
    if m.group("cls"):
        raise SmilesSyntaxError("atom classes are not supported")
    charge = m.group("charge")
    if charge:
        raise ChargeUnsupported(f"charged atom [{body}]")
    sym = m.group("symbol")
    aromatic = sym[0].islower()
    upper = sym.capitalize()
    if aromatic and sym not in _AROMATIC_OK and upper not in _REAL_ELEMENTS:
        raise SmilesSyntaxError(f"unknown atom symbol {sym!r}")
    if aromatic and sym not in _AROMATIC_OK:
        raise UnsupportedElement(f"aromatic {sym!r} is not supported")
    if upper not in SYMBOL_TO_INDEX:
        if upper in _REAL_ELEMENTS:
            raise UnsupportedElement(f"element {upper!r} is not supported")
        raise SmilesSyntaxError(f"unknown atom symbol {sym!r}")
    h = m.group("hcount")
    if h is None:
        hcount = 0
    else:
        hcount = 1 if h == "H" else int(h[1:])
    chir = CHIRALITY_NONE
    if m.group("chiral") == "@":
        chir = CHIRALITY_CCW
    elif m.group("chiral") == "@@":
        chir = CHIRALITY_CW
    return _Atom(upper, aromatic, h_explicit=hcount, chirality=chir)


def _tokenize_atoms(s: str, i: int) -> tuple[_Atom, int]:
    ch = s[i]
    if ch == "[":
        j = s.find("]", i)
        if j < 0:
            raise SmilesSyntaxError("unclosed bracket atom")
        return _parse_bracket(s[i + 1 : j]), j + 1
    two = s[i : i + 2]
    if two in _KNOWN_FOREIGN:
        raise UnsupportedElement(f"element {two!r} is not supported")
    if ch.isupper():
        if ch in SYMBOL_TO_INDEX:
            return _Atom(ch, aromatic=False), i + 1
        if ch in _REAL_ELEMENTS:
            raise UnsupportedElement(f"element {ch!r} is not supported")
        raise SmilesSyntaxError(f"unknown atom symbol {ch!r}")
    if ch.islower():
        if ch in _AROMATIC_OK:
            return _Atom(ch.upper(), aromatic=True), i + 1
        if ch in ("b",):
            raise UnsupportedElement(f"aromatic {ch!r} is not supported")
        raise SmilesSyntaxError(f"unexpected character {ch!r}")
    raise SmilesSyntaxError(f"unexpected character {ch!r}")


def parse_smiles(s: str) -> MolGraph:
    """Parse one SMILES string into a valence-valid MolGraph."""
    s = s.strip()
    if not s:
        raise SmilesSyntaxError("empty SMILES")
    atoms: list[_Atom] = []
    bonds: dict[tuple[int, int], object] = {}  # (u,v) -> order int or "ar"
    stack: list[int] = []
    prev: int | None = None
    pending: str | None = None
    ring: dict[int, tuple[int, str | None]] = {}
    i = 0

    def add_bond(u: int, v: int, sym: str | None):
        if u == v:
            raise SmilesSyntaxError("self-bond")
        key = (min(u, v), max(u, v))
        if key in bonds:
            raise SmilesSyntaxError("duplicate bond")
        if sym is None:
            order: object = "ar" if atoms[u].aromatic and atoms[v].aromatic else 1
        elif sym == _AROM_BOND:
            order = "ar"
        else:
            order = _BOND_ORDERS[sym]
            if order == 2:
                atoms[u].has_explicit_double = True
                atoms[v].has_explicit_double = True
        bonds[key] = order

    while i < len(s):
        ch = s[i]
        if ch in _BOND_ORDERS or ch == _AROM_BOND:
            if pending is not None:
                raise SmilesSyntaxError("two bond symbols in a row")
            pending = ch
            i += 1
        elif ch == "(":
            if prev is None:
                raise SmilesSyntaxError("branch before any atom")
            stack.append(prev)
            i += 1
        elif ch == ")":
            if not stack:
                raise SmilesSyntaxError("unbalanced parentheses")
            if pending is not None:
                raise SmilesSyntaxError("dangling bond before ')'")
            prev = stack.pop()
            i += 1
        elif ch.isdigit() or ch == "%":
            if prev is None:
                raise SmilesSyntaxError("ring digit before any atom")
            if ch == "%":
                if i + 2 >= len(s) or not s[i + 1 : i + 3].isdigit():
                    raise SmilesSyntaxError("malformed %nn ring closure")
                num = int(s[i + 1 : i + 3])
                i += 3
            else:
                num = int(ch)
                i += 1
            if num in ring:
                other, sym0 = ring.pop(num)
                sym = pending if pending is not None else sym0
                if pending is not None and sym0 is not None and pending != sym0:
                    raise SmilesSyntaxError("conflicting ring-bond symbols")
                add_bond(other, prev, sym)
            else:
                ring[num] = (prev, pending)
            pending = None
        elif ch == ".":
            raise SmilesSyntaxError("disconnected structures are not supported")
        elif ch == "*":
            raise UnsupportedElement("wildcard atoms are not supported")
        elif ch.isspace():
            break  # trailing id column
        else:
            atom, i = _tokenize_atoms(s, i)
            atoms.append(atom)
            idx = len(atoms) - 1
            if prev is not None:
                add_bond(prev, idx, pending)
            elif pending is not None:
                raise SmilesSyntaxError("bond symbol before first atom")
            pending = None
            prev = idx

    if stack:
        raise SmilesSyntaxError("unbalanced parentheses")
    if ring:
        raise SmilesSyntaxError("unclosed ring bond")
    if pending is not None:
        raise SmilesSyntaxError("dangling bond symbol")
    if not atoms:
        raise SmilesSyntaxError("no atoms")

    _kekulize(atoms, bonds)

    elems = tuple(SYMBOL_TO_INDEX[a.symbol] for a in atoms)
    chir = tuple(a.chirality for a in atoms)
    bond_tuples = tuple((u, v, o) for (u, v), o in sorted(bonds.items()))
    g = MolGraph(elems, chir, bond_tuples)

    sums = g.bond_sums
    for k, atom in enumerate(atoms):
        h = implicit_h_count(elems[k], int(sums[k]))
        if h < 0:
            raise ValenceError(f"atom {k} ({atom.symbol}) exceeds its permitted valence")
        if atom.h_explicit is not None and atom.h_explicit != h:
            raise ValenceError(
                f"atom {k} ({atom.symbol}) explicit H{atom.h_explicit} "
                f"inconsistent with derived H{h}"
            )
    return g


def _kekulize(atoms: list[_Atom], bonds: dict) -> None:
    """Replace 'ar' bond markers by alternating 1/2 orders, in place."""
    ar_edges = [k for k, o in bonds.items() if o == "ar"]
    if not ar_edges:
        for a in atoms:
            if a.aromatic:
                raise KekulizationFailure("aromatic atom without aromatic bonds")
        return
    ar_adj: dict[int, list[int]] = {}
    for u, v in ar_edges:
        ar_adj.setdefault(u, []).append(v)
        ar_adj.setdefault(v, []).append(u)

    sigma = {k: 0 for k in ar_adj}  # non-aromatic bond-order sum per aromatic atom
    for (u, v), o in bonds.items():
        if o == "ar":
            continue
        for x in (u, v):
            if x in sigma:
                sigma[x] += int(o)  # type: ignore[arg-type]

    def needs_double(idx: int) -> bool:
        a = atoms[idx]
        if not a.aromatic:
            raise KekulizationFailure("aromatic bond touching a non-aromatic atom")
        if a.has_explicit_double:
            return False
        if a.symbol == "C":
            return True
        if a.symbol in ("N", "P"):
            # pyridine-type (two ring bonds, nothing else) takes the double;
            # pyrrole-type (an H or a third substituent) donates its lone pair
            return len(ar_adj[idx]) == 2 and (a.h_explicit or 0) == 0 and sigma[idx] == 0
        return False  # O and S always donate the lone pair

    needs = sorted(idx for idx in ar_adj if needs_double(idx))
    need_set = set(needs)

    matched: dict[int, int] = {}

    def backtrack(remaining: list[int]) -> bool:
        if not remaining:
            return True
        # most-constrained-first keeps the search near-linear on real rings
        best_i = min(
            range(len(remaining)),
            key=lambda i: sum(1 for w in ar_adj[remaining[i]] if w in need_set and w not in matched),
        )
        u = remaining[best_i]
        rest = remaining[:best_i] + remaining[best_i + 1 :]
        for w in ar_adj[u]:
            if w in need_set and w not in matched:
                matched[u] = w
                matched[w] = u
                nxt = [x for x in rest if x != w]
                if backtrack(nxt):
                    return True
                del matched[u]
                del matched[w]
        return False

    if not backtrack(needs):
        raise KekulizationFailure("no alternating bond assignment exists")

    for u, v in ar_edges:
        if matched.get(u) == v:
            bonds[(u, v)] = 2
        else:
            bonds[(u, v)] = 1


_BOND_SYMBOL = {1: "", 2: "=", 3: "#"}


def write_smiles(g: MolGraph) -> str:
    """Canonical kekulized SMILES. parse_smiles(write_smiles(g)) ~ g."""
    if not is_terminal_valid(g):
        raise InvalidMolecule("write_smiles requires a terminal-valid graph")
    n = g.num_nodes
    ranks = canonical_ranks(g)
    order = sorted(range(n), key=lambda i: ranks[i])
    root = order[0]

    nbr_sorted = [sorted(g.neighbors[i], key=lambda j: ranks[j]) for i in range(n)]

    # classify tree vs ring edges with an explicit DFS in canonical order
    parent: dict[int, int | None] = {root: None}
    children: dict[int, list[int]] = {i: [] for i in range(n)}
    ring_edges: list[tuple[int, int]] = []
    seen_edge: set[tuple[int, int]] = set()
    stack = [(root, iter(nbr_sorted[root]))]
    while stack:
        x, it = stack[-1]
        for y in it:
            key = (min(x, y), max(x, y))
            if key in seen_edge:
                continue
            if y in parent:
                seen_edge.add(key)
                ring_edges.append((x, y))  # closure written at x, opened at y
                continue
            seen_edge.add(key)
            parent[y] = x
            children[x].append(y)
            stack.append((y, iter(nbr_sorted[y])))
            break
        else:
            stack.pop()

    # ring-closure digit bookkeeping: digit chosen when the first endpoint is
    # emitted, freed after the partner closes it
    ring_at: dict[int, list[tuple[int, int]]] = {}
    for x, y in ring_edges:
        ring_at.setdefault(y, []).append((x, g.edge_orders[(min(x, y), max(x, y))]))
        ring_at.setdefault(x, []).append((y, g.edge_orders[(min(x, y), max(x, y))]))

    digit_of: dict[tuple[int, int], int] = {}
    free_digits = list(range(1, 100))
    out: list[str] = []

    def digit_str(d: int) -> str:
        return str(d) if d < 10 else f"%{d:02d}"

    def emit(x: int):
        out.append(g.element_symbol(x))
        for y, order in sorted(ring_at.get(x, ()), key=lambda t: ranks[t[0]]):
            key = (min(x, y), max(x, y))
            if key in digit_of:
                d = digit_of.pop(key)
                free_digits.insert(0, d)
                free_digits.sort()
                out.append(digit_str(d))
            else:
                d = free_digits.pop(0)
                digit_of[key] = d
                out.append(_BOND_SYMBOL[order])
                out.append(digit_str(d))
        kids = children[x]
        for idx, y in enumerate(kids):
            o = g.edge_orders[(min(x, y), max(x, y))]
            last = idx == len(kids) - 1
            if not last:
                out.append("(")
            out.append(_BOND_SYMBOL[o])
            emit(y)
            if not last:
                out.append(")")

    emit(root)
    return "".join(out)


def ingest_corpus(path) -> tuple[list[MolGraph], ParseReport]:
    """Best-effort parse of a one-SMILES-per-line file.

    Lines may carry a whitespace-separated id after the SMILES. Blank lines
    and lines starting with '#' are skipped. Rejections are tallied by
    reason; only I/O problems raise.
    """
    report = ParseReport()
    graphs: list[MolGraph] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            smi = line.split()[0]
            try:
                g = parse_smiles(smi)
            except UnsupportedElement:
                report.rejected["unsupported_element"] += 1
            except ChargeUnsupported:
                report.rejected["net_charge"] += 1
            except ValenceError:
                report.rejected["valence_error"] += 1
            except KekulizationFailure:
                report.rejected["kekulization_failure"] += 1
            except SmilesSyntaxError:
                report.rejected["syntax_error"] += 1
            else:
                graphs.append(g)
                report.accepted += 1
    return graphs, report
