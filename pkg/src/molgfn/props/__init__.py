"""Molecular property calculators feeding the reward engine and metrics."""

from __future__ import annotations

from dataclasses import dataclass

from ..elements import ELEMENTS, H_MASS
from ..errors import InvalidMolecule
from ..graph import MolGraph, is_terminal_valid
from .crippen import crippen_logp
from .fingerprint import fingerprint, tanimoto
from .qed import qed
from .rings import aromatic_rings, ring_counts, sssr
from .sas import sas_simplified
from .scaffold import murcko_scaffold
from .tpsa import tpsa

__all__ = [
    "PropertyVector",
    "compute_properties",
    "property_value",
    "mol_wt",
    "tpsa",
    "qed",
    "sas_simplified",
    "crippen_logp",
    "ring_counts",
    "sssr",
    "aromatic_rings",
    "fingerprint",
    "tanimoto",
    "murcko_scaffold",
    "PROPERTY_NAMES",
]


def mol_wt(g: MolGraph) -> float:
    """Heavy-atom masses plus 1.008 per implicit hydrogen."""
    if not is_terminal_valid(g):
        raise InvalidMolecule("mol_wt requires a terminal-valid graph")
    heavy = sum(ELEMENTS[e].mass for e in g.elements)
    return heavy + H_MASS * sum(g.implicit_h)


@dataclass(frozen=True)
class PropertyVector:
    tpsa: float
    qed: float
    sas: float
    num_rings: int
    mol_wt: float
    logp: float

    def as_dict(self) -> dict[str, float]:
        return {
            "tpsa": self.tpsa,
            "qed": self.qed,
            "sas": self.sas,
            "num_rings": float(self.num_rings),
            "mol_wt": self.mol_wt,
            "logp": self.logp,
        }


PROPERTY_NAMES = ("tpsa", "qed", "sas", "num_rings", "mol_wt", "logp")


def compute_properties(g: MolGraph, sas_table=None) -> PropertyVector:
    return PropertyVector(
        tpsa=tpsa(g),
        qed=qed(g),
        sas=sas_simplified(g, sas_table),
        num_rings=ring_counts(g)[1],
        mol_wt=mol_wt(g),
        logp=crippen_logp(g),
    )


def property_value(g: MolGraph, name: str, sas_table=None) -> float:
    if name == "tpsa":
        return tpsa(g)
    if name == "qed":
        return qed(g)
    if name == "sas":
        return sas_simplified(g, sas_table)
    if name == "num_rings":
        return float(ring_counts(g)[1])
    if name == "mol_wt":
        return mol_wt(g)
    if name == "logp":
        return crippen_logp(g)
    raise KeyError(f"unknown property {name!r}")
