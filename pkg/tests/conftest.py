import csv
import sys
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "tests"))

DATA = ROOT / "data"


@pytest.fixture(scope="session")
def corpus_path():
    return DATA / "desk_corpus.smi"


@pytest.fixture(scope="session")
def corpus_graphs(corpus_path):
    from molgfn.smiles import ingest_corpus

    graphs, report = ingest_corpus(corpus_path)
    assert report.accepted == len(graphs)
    return graphs


@pytest.fixture(scope="session")
def golden_rows():
    with open(DATA / "golden_props.csv", newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def permute_graph(g, perm):
    """Relabeled copy: node i of the result is node perm[i] of the input."""
    from molgfn.graph import MolGraph

    inv = {old: new for new, old in enumerate(perm)}
    elems = [g.elements[old] for old in perm]
    chir = [g.chirality[old] for old in perm]
    bonds = [(inv[u], inv[v], o) for u, v, o in g.bonds]
    return MolGraph(elems, chir, bonds)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
