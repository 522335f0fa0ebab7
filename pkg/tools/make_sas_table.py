"""Build the packaged fragment-frequency table for the simplified SAS score
from the committed desk corpus.

Usage: python tools/make_sas_table.py [corpus] [out_json]
"""

from __future__ import annotations

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from molgfn.props.sas import build_fragment_table, save_fragment_table  # noqa: E402
from molgfn.smiles import ingest_corpus, parse_smiles  # noqa: E402

# trivial acyclic environments (chains, ethers, amines, small carbonyls) so
# that simple molecules are not scored as rare
SIMPLE = [
    "C", "CC", "CCC", "CCCC", "CCCCC", "CCCCCC", "CC(C)C", "CC(C)(C)C",
    "CO", "CCO", "CCCO", "CCOC", "COC", "CCOCC", "CN", "CCN", "CNC",
    "CCNC", "CN(C)C", "CS", "CCS", "CSC", "C=C", "CC=C", "C#C", "CC#C",
    "C=O", "CC=O", "CC(C)=O", "CC(=O)O", "CC(=O)N", "CC(=O)OC", "NC=O",
    "OC=O", "CC(N)C", "OCC(O)CO", "CCOC(C)=O", "CC(C)O", "OCCO", "NCCN",
    "NCCO", "CSCC", "CP", "CP(C)C", "FC", "FCF", "FC(F)F", "CC(F)(F)F",
]


# trivial environments are ubiquitous in any large reference set; weight the
# supplementary molecules accordingly so count-1 statistics do not mark
# methane-grade chemistry as rare
SIMPLE_WEIGHT = 100


def main(corpus="data/desk_corpus.smi", out="src/molgfn/props/data/sas_fragments.json"):
    graphs, rep = ingest_corpus(corpus)
    assert rep.accepted == rep.total, rep
    graphs += [parse_smiles(s) for s in SIMPLE] * SIMPLE_WEIGHT
    table = build_fragment_table(graphs)
    save_fragment_table(table, out)
    print(f"{len(table)} environments from {len(graphs)} molecules -> {out}")


if __name__ == "__main__":
    main(*sys.argv[1:])
