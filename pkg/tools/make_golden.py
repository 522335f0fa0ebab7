"""Freeze the 100-molecule golden descriptor corpus.

Expected values come from the independent oracle implementations in
tests/oracles.py (ring basis via networkx, flat-table descriptor typing),
so the main implementations are checked against a separately-computed
reference. Mix: 40 well-known neutral drug-like structures plus 60 samples
from the committed desk corpus.

Usage: python tools/make_golden.py [out_csv]
"""

from __future__ import annotations

import csv
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))
sys.path.insert(0, str(ROOT / "tests"))

from oracles import (  # noqa: E402
    oracle_logp,
    oracle_mol_wt,
    oracle_num_rings_5_6,
    oracle_qed,
    oracle_tpsa,
)
from molgfn.smiles import parse_smiles, write_smiles  # noqa: E402

PROVENANCE = "in-repo independent oracle (tests/oracles.py), frozen"

CLASSICS = [
    "CC(=O)Oc1ccccc1C(=O)O",          # aspirin
    "CC(=O)Nc1ccc(O)cc1",             # paracetamol
    "CC(C)Cc1ccc(cc1)C(C)C(=O)O",     # ibuprofen
    "CN1CCC[C@H]1c1cccnc1",           # nicotine
    "CCOC(=O)c1ccc(N)cc1",            # benzocaine
    "O=C(O)c1ccccc1O",                # salicylic acid
    "O=Cc1ccc(O)c(OC)c1",             # vanillin
    "NCCc1c[nH]c2ccc(O)cc12",         # serotonin
    "NC(Cc1c[nH]c2ccccc12)C(=O)O",    # tryptophan
    "OCC1OC(O)C(O)C(O)C1O",           # glucose (pyranose)
    "CC1CCC(C(C)C)C(O)C1",            # menthol
    "CC(=C)C1CCC(C)=CC1",             # limonene
    "c1ccc2ccccc2c1",                 # naphthalene
    "c1ccc2[nH]ccc2c1",               # indole
    "c1ccc2ncccc2c1",                 # quinoline
    "c1ccoc1",                        # furan
    "c1ccsc1",                        # thiophene
    "c1cc[nH]c1",                     # pyrrole
    "c1ccncc1",                       # pyridine
    "c1cncnc1",                       # pyrimidine
    "CCO",                            # ethanol
    "CC(C)O",                         # isopropanol
    "CCOCC",                          # diethyl ether
    "CC(=O)C",                        # acetone
    "CC(=O)OC",                       # methyl acetate
    "CC(=O)N(C)C",                    # DMA
    "CSC",                            # dimethyl sulfide
    "O=S(=O)(C)C",                    # dimethyl sulfone
    "CP(C)C",                         # trimethylphosphine
    "NC(=O)c1ccccc1",                 # benzamide
    "Nc1ccccc1",                      # aniline
    "Oc1ccccc1",                      # phenol
    "FC(F)(F)c1ccccc1",               # benzotrifluoride
    "C1CCNCC1",                       # piperidine
    "C1COCCN1",                       # morpholine
    "N#Cc1ccccc1",                    # benzonitrile
    "OC(=O)CCc1ccccc1",               # hydrocinnamic acid
    "CC(N)Cc1ccccc1",                 # amphetamine
    "COc1ccc2cc(ccc2c1)C(C)C(=O)O",   # naproxen
    "CC12CCC(CC1)CC2",                # bicyclooctane
]


def main(out_csv: str = "data/golden_props.csv"):
    corpus_lines = (ROOT / "data/desk_corpus.smi").read_text().splitlines()
    picked = [corpus_lines[i * 97].split()[0] for i in range(60)]
    rows = []
    seen = set()
    for smi in CLASSICS + picked:
        g = parse_smiles(smi)
        canon = write_smiles(g)
        if canon in seen:
            raise SystemExit(f"duplicate golden molecule {smi}")
        seen.add(canon)
        rows.append(
            {
                "smiles": smi,
                "mol_wt": f"{oracle_mol_wt(g):.4f}",
                "tpsa": f"{oracle_tpsa(g):.4f}",
                "logp": f"{oracle_logp(g):.4f}",
                "qed": f"{oracle_qed(g):.6f}",
                "num_rings": oracle_num_rings_5_6(g),
                "provenance": PROVENANCE,
            }
        )
    assert len(rows) == 100, len(rows)
    with open(out_csv, "w", encoding="utf-8", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)
    print(f"wrote {len(rows)} golden rows to {out_csv}")


if __name__ == "__main__":
    main(*sys.argv[1:])
