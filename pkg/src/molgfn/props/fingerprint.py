"""Circular substructure fingerprints and Tanimoto similarity.

Per-atom environment identifiers are built by iterated neighbourhood hashing
(radius 0..2) with a stable 64-bit hash, then folded into a fixed 2048-bit
vector packed as 32 uint64 words. Identifiers depend only on graph structure,
so isomorphic graphs produce identical fingerprints.
"""

from __future__ import annotations

import hashlib
import struct

import numpy as np

from ..elements import ELEMENTS
from ..graph import MolGraph
from .rings import ring_atoms

FP_BITS = 2048
FP_WORDS = FP_BITS // 64
RADIUS = 2


def _hash64(*ints: int) -> int:
    payload = struct.pack(f"<{len(ints)}Q", *ints)
    return int.from_bytes(hashlib.blake2b(payload, digest_size=8).digest(), "little")


def atom_environments(g: MolGraph, radius: int = RADIUS) -> list[int]:
    """Environment ids for every (atom, radius) pair, radius 0..``radius``."""

    def build():
        n = g.num_nodes
        ring = ring_atoms(g)
        sums = g.bond_sums
        deg = g.degrees
        hs = g.implicit_h
        cur = [
            _hash64(
                ELEMENTS[g.elements[i]].atomic_num,
                int(deg[i]),
                int(sums[i]),
                hs[i],
                1 if i in ring else 0,
            )
            for i in range(n)
        ]
        out = list(cur)
        orders = g.edge_orders
        for r in range(1, radius + 1):
            nxt = []
            for i in range(n):
                parts = sorted(
                    (orders[(min(i, j), max(i, j))], cur[j]) for j in g.neighbors[i]
                )
                flat = [r, cur[i]]
                for o, h in parts:
                    flat.extend((o, h))
                nxt.append(_hash64(*flat))
            out.extend(nxt)
            cur = nxt
        return out

    return g._cache(f"envs_{radius}", build)


def fingerprint(g: MolGraph, bits: int = FP_BITS) -> np.ndarray:
    """Packed bit vector (uint64 words, little-endian bit order)."""
    words = bits // 64
    fp = np.zeros(words, dtype=np.uint64)
    for env in atom_environments(g):
        b = env % bits
        fp[b // 64] |= np.uint64(1) << np.uint64(b % 64)
    return fp


def tanimoto(a: np.ndarray, b: np.ndarray) -> float:
    """|a & b| / |a | b|; defined as 1.0 when both vectors are empty."""
    inter = int(np.bitwise_count(a & b).sum())
    union = int(np.bitwise_count(a | b).sum())
    if union == 0:
        return 1.0
    return inter / union


def popcount_rows(mat: np.ndarray) -> np.ndarray:
    return np.bitwise_count(mat).sum(axis=-1)


def pairwise_tanimoto_sum(fps: np.ndarray) -> float:
    """Sum of tanimoto(i, j) over i < j for a [N, words] packed matrix."""
    n = fps.shape[0]
    sizes = popcount_rows(fps).astype(np.int64)
    total = 0.0
    for i in range(n - 1):
        inter = np.bitwise_count(fps[i + 1 :] & fps[i]).sum(axis=1).astype(np.int64)
        union = sizes[i + 1 :] + sizes[i] - inter
        with np.errstate(invalid="ignore"):
            t = np.where(union > 0, inter / np.maximum(union, 1), 1.0)
        total += float(t.sum())
    return total
