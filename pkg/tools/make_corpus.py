"""Generate the committed desk-scale corpus of drug-like SMILES.

Molecules are assembled from ring-system cores (single rings plus fused
bicyclic/tricyclic systems, parsed from template SMILES), optionally linked
to a second system, then decorated with common substituents, and filtered to
the environment budgets and loose drug-like property windows. Deterministic
given the seed.

Usage: python tools/make_corpus.py [n] [out_path]
"""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from molgfn.elements import ELEMENTS, SYMBOL_TO_INDEX  # noqa: E402
from molgfn.graph import MolGraph, canonical_key, is_terminal_valid  # noqa: E402
from molgfn.props import compute_properties, ring_counts  # noqa: E402
from molgfn.smiles import parse_smiles, write_smiles  # noqa: E402

C, N, O, F, S, P = (SYMBOL_TO_INDEX[s] for s in "CNOFSP")

CORES_1RING = [
    "c1ccccc1", "c1ccncc1", "c1cncnc1", "c1cnccn1", "c1ccoc1", "c1ccsc1",
    "c1cc[nH]c1", "c1nc[nH]c1", "c1cnoc1", "c1cnsc1", "c1cc[nH]n1",
    "C1CCCCC1", "C1CCNCC1", "C1CCOCC1", "C1CCCC1", "C1CCNC1", "C1CCOC1",
    "C1COCCN1", "C1CNCCN1",
]
CORES_2RING = [
    "c1ccc2ccccc2c1",        # naphthalene
    "c1ccc2ncccc2c1",        # quinoline
    "c1ccc2cnccc2c1",        # isoquinoline
    "c1ccc2[nH]ccc2c1",      # indole
    "c1ccc2occc2c1",         # benzofuran
    "c1ccc2sccc2c1",         # benzothiophene
    "c1ccc2[nH]cnc2c1",      # benzimidazole
    "c1ccc2ncncc2c1",        # quinazoline
    "c1ccc2[nH]ncc2c1",      # indazole
    "C1Cc2ccccc2C1",         # indane
    "C1CCc2ccccc2C1",        # tetralin
    "C1Cc2ccccc2O1",         # 2,3-dihydrobenzofuran
    "C1COc2ccccc2N1",        # benzoxazine
    "C1CCC2CCCCC2C1",        # decalin
    "c1cc2cccnc2cn1",        # naphthyridine-like
]
CORES_3RING = [
    "c1ccc2cc3ccccc3cc2c1",      # anthracene
    "c1ccc2nc3ccccc3cc2c1",      # acridine
    "c1ccc2c(c1)oc1ccccc12",     # dibenzofuran
    "c1ccc2c(c1)sc1ccccc12",     # dibenzothiophene
    "c1ccc2c(c1)[nH]c1ccccc12",  # carbazole
    "C1Cc2ccccc2-c2ccccc21",     # fluorene-like
    "C1CCC2CC3CCCCC3CC2C1",      # perhydroanthracene
    "c1cc2cc3ccncc3cc2cn1",      # diazaanthracene-like
]


class Builder:
    def __init__(self):
        self.elems: list[int] = []
        self.bonds: list[tuple[int, int, int]] = []

    def add_atom(self, elem: int, bond_to: int | None = None, order: int = 1) -> int:
        self.elems.append(elem)
        idx = len(self.elems) - 1
        if bond_to is not None:
            self.bonds.append((min(bond_to, idx), max(bond_to, idx), order))
        return idx

    def add_core(self, core: MolGraph) -> list[int]:
        off = len(self.elems)
        self.elems.extend(core.elements)
        self.bonds.extend((u + off, v + off, o) for u, v, o in core.bonds)
        return list(range(off, off + core.num_nodes))

    def graph(self) -> MolGraph:
        return MolGraph(self.elems, [0] * len(self.elems), self.bonds)

    def bond_sum(self, v: int) -> int:
        return sum(o for a, b, o in self.bonds if v in (a, b))

    def free(self, v: int) -> int:
        return ELEMENTS[self.elems[v]].max_valence - self.bond_sum(v)


# substituent kind -> (heavy atoms added, weight)
SUBSTITUENTS = {
    "none": (0, 3.0),
    "methyl": (1, 2.0),
    "fluoro": (1, 1.5),
    "hydroxyl": (1, 2.5),
    "amino": (1, 2.5),
    "methoxy": (2, 2.0),
    "ethyl": (2, 1.0),
    "nitrile": (2, 1.0),
    "acetyl": (3, 1.5),
    "amide": (3, 2.5),
    "acid": (3, 1.5),
    "thioether": (2, 0.5),
    "formamide": (3, 1.5),
}


def attach(b: Builder, site: int, kind: str) -> None:
    if kind == "none":
        return
    if kind == "methyl":
        b.add_atom(C, site)
    elif kind == "fluoro":
        b.add_atom(F, site)
    elif kind == "hydroxyl":
        b.add_atom(O, site)
    elif kind == "amino":
        b.add_atom(N, site)
    elif kind == "methoxy":
        b.add_atom(C, b.add_atom(O, site))
    elif kind == "ethyl":
        b.add_atom(C, b.add_atom(C, site))
    elif kind == "nitrile":
        b.add_atom(N, b.add_atom(C, site), order=3)
    elif kind == "acetyl":
        c1 = b.add_atom(C, site)
        b.add_atom(O, c1, order=2)
        b.add_atom(C, c1)
    elif kind == "amide":
        c1 = b.add_atom(C, site)
        b.add_atom(O, c1, order=2)
        b.add_atom(N, c1)
    elif kind == "acid":
        c1 = b.add_atom(C, site)
        b.add_atom(O, c1, order=2)
        b.add_atom(O, c1)
    elif kind == "formamide":
        n1 = b.add_atom(N, site)
        c1 = b.add_atom(C, n1)
        b.add_atom(O, c1, order=2)
    elif kind == "thioether":
        b.add_atom(C, b.add_atom(S, site))
    else:
        raise ValueError(kind)


LINKERS = {"bond": 0, "ch2": 1, "ether": 1, "amine": 1, "carbonyl": 2}


def link(b: Builder, a: int, c: int, kind: str) -> None:
    if kind == "bond":
        b.bonds.append((min(a, c), max(a, c), 1))
        return
    if kind == "carbonyl":
        m = b.add_atom(C, a)
        b.add_atom(O, m, order=2)
    else:
        m = b.add_atom({"ch2": C, "ether": O, "amine": N}[kind], a)
    b.bonds.append((min(m, c), max(m, c), 1))


def load_cores():
    out = {1: [], 2: [], 3: []}
    for smis, nring in ((CORES_1RING, 1), (CORES_2RING, 2), (CORES_3RING, 3)):
        for smi in smis:
            g = parse_smiles(smi)
            assert is_terminal_valid(g), smi
            rings = ring_counts(g)[0]
            assert len(rings) == nring, (smi, len(rings))
            out[nring].append(g)
    return out


def sites(b: Builder, ids) -> list[int]:
    return [v for v in ids if b.elems[v] in (C, N) and b.free(v) >= 1]


def make_molecule(rng: np.random.Generator, cores, max_atoms: int) -> MolGraph | None:
    b = Builder()
    shape = rng.uniform()
    if shape < 0.12:
        plan = [1]
    elif shape < 0.30:
        plan = [2]
    elif shape < 0.45:
        plan = [1, 1]
    elif shape < 0.62:
        plan = [2, 1]
    elif shape < 0.85:
        plan = [3]
    else:
        plan = [1, 1, 1]
    groups = []
    for nring in plan:
        core = cores[nring][rng.integers(len(cores[nring]))]
        if len(b.elems) + core.num_nodes > max_atoms:
            return None
        groups.append(b.add_core(core))
    for prev, cur in zip(groups, groups[1:]):
        a_sites, c_sites = sites(b, prev), sites(b, cur)
        if not a_sites or not c_sites:
            return None
        kinds = list(LINKERS)
        kind = kinds[rng.integers(len(kinds))]
        if len(b.elems) + LINKERS[kind] > max_atoms:
            kind = "bond"
        link(b, a_sites[rng.integers(len(a_sites))], c_sites[rng.integers(len(c_sites))], kind)
    names = list(SUBSTITUENTS)
    weights = np.array([SUBSTITUENTS[k][1] for k in names])
    weights /= weights.sum()
    for _ in range(int(rng.integers(1, 5))):
        kind = names[rng.choice(len(names), p=weights)]
        cost = SUBSTITUENTS[kind][0]
        if len(b.elems) + cost > max_atoms:
            continue
        cand = sites(b, range(len(b.elems)))
        if not cand:
            break
        attach(b, cand[rng.integers(len(cand))], kind)
    g = b.graph()
    if g.num_nodes > max_atoms or not is_terminal_valid(g):
        return None
    return g


def main(n_target: int = 6000, out_path: str = "data/desk_corpus.smi", seed: int = 20240817):
    rng = np.random.default_rng(seed)
    cores = load_cores()
    seen: set[str] = set()
    lines: list[str] = []
    attempts = 0
    while len(lines) < n_target and attempts < n_target * 60:
        attempts += 1
        g = make_molecule(rng, cores, max_atoms=16)
        if g is None:
            continue
        key = canonical_key(g)
        if key in seen:
            continue
        props = compute_properties(g, sas_table={})
        if not (90.0 <= props.mol_wt <= 290.0 and props.tpsa <= 150.0):
            continue
        smi = write_smiles(g)
        back = parse_smiles(smi)
        assert canonical_key(back) == key, smi
        seen.add(key)
        lines.append(smi)
    Path(out_path).parent.mkdir(parents=True, exist_ok=True)
    with open(out_path, "w", encoding="utf-8") as fh:
        for i, smi in enumerate(lines):
            fh.write(f"{smi}\tdesk{i:05d}\n")
    print(f"wrote {len(lines)} molecules to {out_path} ({attempts} attempts)")


if __name__ == "__main__":
    n = int(sys.argv[1]) if len(sys.argv) > 1 else 6000
    out = sys.argv[2] if len(sys.argv) > 2 else "data/desk_corpus.smi"
    main(n, out)
