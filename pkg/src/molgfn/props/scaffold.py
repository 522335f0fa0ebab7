"""Ring-and-linker scaffolds (side chains pruned)."""

from __future__ import annotations

from ..errors import InvalidMolecule
from ..graph import CHIRALITY_NONE, MolGraph, canonical_key, is_terminal_valid
from .rings import ring_atoms


def murcko_scaffold(g: MolGraph) -> str:
    """Canonical key of the scaffold; acyclic molecules map to ''.

    Leaves attached by a single bond are pruned iteratively, so ring systems
    and the linkers between them survive, along with terminal atoms held by
    double or triple bonds (exocyclic carbonyls and the like).
    """
    if not is_terminal_valid(g):
        raise InvalidMolecule("murcko_scaffold requires a terminal-valid graph")
    if not ring_atoms(g):
        return ""

    keep = set(range(g.num_nodes))
    bonds = list(g.bonds)
    while True:
        deg: dict[int, int] = {v: 0 for v in keep}
        for u, v, _ in bonds:
            deg[u] += 1
            deg[v] += 1
        removable = set()
        for u, v, o in bonds:
            if o != 1:
                continue
            if deg[u] == 1:
                removable.add(u)
            if deg[v] == 1:
                removable.add(v)
        if not removable:
            break
        keep -= removable
        bonds = [b for b in bonds if b[0] in keep and b[1] in keep]

    remap = {v: i for i, v in enumerate(sorted(keep))}
    elems = tuple(g.elements[v] for v in sorted(keep))
    chir = tuple(CHIRALITY_NONE for _ in keep)
    new_bonds = tuple((remap[u], remap[v], o) for u, v, o in bonds)
    scaffold = MolGraph(elems, chir, new_bonds)
    return canonical_key(scaffold)
