"""Ring perception: smallest set of smallest rings and aromaticity.

SSSR comes from Horton's candidate cycles (shortest cycle through every
(vertex, edge) pair) filtered to linear independence over GF(2), which for a
connected graph yields exactly edges - nodes + 1 rings.

Aromaticity is perceived on the kekulized graph: a 5- or 6-ring is aromatic
when every member is sp2-capable (an in-ring double bond counts one pi
electron, an exocyclic double counts zero, a lone-pair heteroatom counts
two) and the total is 4n+2. Rings that fail alone are retried as part of
their edge-fused ring system, which covers the kekule structures of fused
aromatics whose individual rings do not alternate.
"""

from __future__ import annotations

from ..graph import MolGraph

_DONORS = {"N", "O", "S", "P"}


def sssr(g: MolGraph) -> list[tuple[int, ...]]:
    """Rings as vertex tuples (in traversal order), |result| = m - n + 1."""

    def build():
        n, m = g.num_nodes, g.num_edges
        nu = m - n + 1 if n else 0
        if nu <= 0:
            return []
        edge_ids = {(u, v): k for k, (u, v, _) in enumerate(g.bonds)}
        nbr = g.neighbors

        candidates: dict[int, tuple[int, ...]] = {}  # edge bitmask -> vertices
        for root in range(n):
            dist = [-1] * n
            par = [-1] * n
            dist[root] = 0
            queue = [root]
            for x in queue:
                for y in nbr[x]:
                    if dist[y] < 0:
                        dist[y] = dist[x] + 1
                        par[y] = x
                        queue.append(y)

            def path(x):
                out = [x]
                while par[out[-1]] >= 0:
                    out.append(par[out[-1]])
                return out  # x .. root

            for (u, v, _o) in g.bonds:
                if par[v] == u or par[u] == v:
                    continue  # BFS tree edge, no cycle
                pu, pv = path(u), path(v)
                shared = set(pu) & set(pv)
                if shared != {root}:
                    continue
                cyc = pu[:-1] + [root] + pv[-2::-1]  # u..root..v, closes via (v,u)
                if len(cyc) < 3 or len(set(cyc)) != len(cyc):
                    continue
                mask = 0
                ok = True
                for i in range(len(cyc)):
                    a, b = cyc[i], cyc[(i + 1) % len(cyc)]
                    key = (min(a, b), max(a, b))
                    if key not in edge_ids:
                        ok = False
                        break
                    mask |= 1 << edge_ids[key]
                if ok and mask.bit_count() == len(cyc) and mask not in candidates:
                    candidates[mask] = tuple(cyc)

        chosen: list[tuple[int, ...]] = []
        basis: list[int] = []
        for mask, verts in sorted(candidates.items(), key=lambda kv: (len(kv[1]), kv[1])):
            red = mask
            for b in basis:
                red = min(red, red ^ b)
            if red:
                basis.append(red)
                basis.sort(reverse=True)
                chosen.append(verts)
                if len(chosen) == nu:
                    break
        return chosen

    return g._cache("sssr", build)


def ring_counts(g: MolGraph) -> tuple[list[tuple[int, ...]], int]:
    rings = sssr(g)
    return rings, sum(1 for r in rings if len(r) in (5, 6))


def ring_atoms(g: MolGraph) -> frozenset[int]:
    return g._cache("ring_atoms", lambda: frozenset(v for r in sssr(g) for v in r))


def _ring_edges(ring: tuple[int, ...]) -> set[tuple[int, int]]:
    out = set()
    for i in range(len(ring)):
        a, b = ring[i], ring[(i + 1) % len(ring)]
        out.add((min(a, b), max(a, b)))
    return out


def _huckel(g: MolGraph, atoms: frozenset[int]) -> bool:
    """4n+2 test over an atom set; False when any member breaks conjugation."""
    orders = g.edge_orders
    total = 0
    for v in atoms:
        in_doubles = 0
        out_double = False
        for w in g.neighbors[v]:
            o = orders[(min(v, w), max(v, w))]
            if o == 3:
                return False
            if o == 2:
                if w in atoms:
                    in_doubles += 1
                else:
                    out_double = True
        if in_doubles >= 2:
            return False
        if in_doubles == 1:
            total += 1
        elif out_double:
            total += 0
        elif g.element_symbol(v) in _DONORS:
            total += 2
        else:
            return False  # saturated carbon blocks conjugation
    return total % 4 == 2


def _rings_connected(subset: list[int], edge_sets: list[set]) -> bool:
    if len(subset) <= 1:
        return True
    seen = {subset[0]}
    frontier = [subset[0]]
    while frontier:
        i = frontier.pop()
        for j in subset:
            if j not in seen and edge_sets[i] & edge_sets[j]:
                seen.add(j)
                frontier.append(j)
    return len(seen) == len(subset)


def aromatic_rings(g: MolGraph) -> list[tuple[int, ...]]:
    def build():
        cands = [r for r in sssr(g) if len(r) in (5, 6)]
        if not cands:
            return []
        flags = [_huckel(g, frozenset(r)) for r in cands]

        # fuse rings sharing an edge and retry the whole system
        edge_sets = [_ring_edges(r) for r in cands]
        parent = list(range(len(cands)))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for i in range(len(cands)):
            for j in range(i + 1, len(cands)):
                if edge_sets[i] & edge_sets[j]:
                    parent[find(i)] = find(j)
        groups: dict[int, list[int]] = {}
        for i in range(len(cands)):
            groups.setdefault(find(i), []).append(i)
        for members in groups.values():
            if len(members) < 2 or all(flags[i] for i in members):
                continue
            subsets = [members] + [
                [i for i in members if i != drop] for drop in members
            ]
            for subset in subsets:
                if not subset or all(flags[i] for i in subset):
                    continue
                if not _rings_connected(subset, edge_sets):
                    continue
                system = frozenset(v for i in subset for v in cands[i])
                if _huckel(g, system):
                    for i in subset:
                        flags[i] = True
        return [r for r, f in zip(cands, flags) if f]

    return g._cache("aromatic_rings", build)


def aromatic_atoms(g: MolGraph) -> frozenset[int]:
    return g._cache(
        "aromatic_atoms", lambda: frozenset(v for r in aromatic_rings(g) for v in r)
    )


def aromatic_bonds(g: MolGraph) -> frozenset[tuple[int, int]]:
    def build():
        out: set[tuple[int, int]] = set()
        for r in aromatic_rings(g):
            out |= _ring_edges(r)
        return frozenset(out)

    return g._cache("aromatic_bonds", build)
