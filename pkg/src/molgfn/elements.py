"""Element vocabulary: the six heavy atoms plus implicit hydrogen.

Valence handling: an atom's implicit hydrogen count is derived from the
smallest permitted valence that covers its current bond-order sum. Adding a
bond is legal as long as the new sum stays within the largest permitted
valence (relevant for multi-valent S and P).
"""

from __future__ import annotations

from dataclasses import dataclass

H_MASS = 1.008


@dataclass(frozen=True)
class Element:
    symbol: str
    atomic_num: int
    mass: float
    valences: tuple[int, ...]  # ascending

    @property
    def max_valence(self) -> int:
        return self.valences[-1]


ELEMENTS: tuple[Element, ...] = (
    Element("C", 6, 12.011, (4,)),
    Element("N", 7, 14.007, (3,)),
    Element("O", 8, 15.999, (2,)),
    Element("F", 9, 18.998, (1,)),
    Element("S", 16, 32.06, (2, 4, 6)),
    Element("P", 15, 30.974, (3, 5)),
)

SYMBOL_TO_INDEX = {e.symbol: i for i, e in enumerate(ELEMENTS)}


def element_index(symbol: str) -> int:
    try:
        return SYMBOL_TO_INDEX[symbol]
    except KeyError:
        raise KeyError(f"unsupported element {symbol!r}") from None


def implicit_h_count(elem_idx: int, bond_order_sum: int) -> int:
    """Hydrogens filling the smallest permitted valence >= bond sum.

    Returns -1 when the bond sum exceeds every permitted valence.
    """
    for v in ELEMENTS[elem_idx].valences:
        if v >= bond_order_sum:
            return v - bond_order_sum
    return -1
