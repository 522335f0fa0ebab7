"""Evaluation metric suite over sampled molecule sets.

Properties are always recomputed from the molecule, never trusted from the
sampler. All metrics are order-independent except n_modes, which is defined
by a greedy scan in descending-reward order (ties broken by canonical key).
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass

import numpy as np

from .conditioning import ConditionalRange, PropertySpec, conditional_reward, fixed_range
from .errors import DegenerateRange, EmptySet, TooFewSamples
from .graph import MolGraph, canonical_key, is_terminal_valid
from .props import compute_properties, fingerprint, murcko_scaffold
from .props.fingerprint import pairwise_tanimoto_sum, popcount_rows


@dataclass
class SampleRecord:
    key: str
    smiles: str
    properties: dict[str, float]
    reward: float
    cond_lows: tuple[float, ...]
    cond_highs: tuple[float, ...]
    fp: np.ndarray
    valid: bool = True

    def to_json(self) -> str:
        d = {
            "key": self.key,
            "smiles": self.smiles,
            "properties": self.properties,
            "reward": self.reward,
            "cond_lows": list(self.cond_lows),
            "cond_highs": list(self.cond_highs),
            "valid": self.valid,
        }
        return json.dumps(d)


def build_record(
    g: MolGraph,
    specs: tuple[PropertySpec, ...],
    cond: ConditionalRange | None = None,
    sas_table=None,
    task: PropertySpec | None = None,
) -> SampleRecord:
    """Record with recomputed properties and reward for a terminal graph."""
    from .smiles import write_smiles

    if not is_terminal_valid(g):
        return SampleRecord("", "", {}, 0.0, (), (), np.zeros(32, dtype=np.uint64), valid=False)
    cond = cond if cond is not None else fixed_range(specs)
    props = compute_properties(g, sas_table).as_dict()
    reward = conditional_reward(specs, cond, props)
    if task is not None:
        from .conditioning import reward_for_spec

        reward *= reward_for_spec(task, props[task.name], task.c_low, task.c_high)
    return SampleRecord(
        key=canonical_key(g),
        smiles=write_smiles(g),
        properties=props,
        reward=reward,
        cond_lows=cond.lows,
        cond_highs=cond.highs,
        fp=fingerprint(g),
    )


def validity(records: list[SampleRecord]) -> float:
    if not records:
        raise EmptySet("validity of an empty set")
    return sum(1 for r in records if r.valid) / len(records)


def uniqueness(records: list[SampleRecord]) -> float:
    if not records:
        raise EmptySet("uniqueness of an empty set")
    keys = [r.key for r in records if r.valid]
    if not keys:
        return 0.0
    return len(set(keys)) / len(records)


def novelty(records: list[SampleRecord], corpus_keys: set[str]) -> float:
    """Distinct valid keys absent from the corpus over all generated."""
    if not records:
        raise EmptySet("novelty of an empty set")
    keys = {r.key for r in records if r.valid}
    return len(keys - corpus_keys) / len(records)


def diversity(records: list[SampleRecord]) -> float:
    n = len(records)
    if n < 2:
        raise TooFewSamples("diversity needs at least two samples")
    fps = np.stack([r.fp for r in records])
    sim_sum = pairwise_tanimoto_sum(fps)
    return 1.0 - (2.0 / (n * (n - 1))) * sim_sum


def n_modes(
    records: list[SampleRecord],
    reward_threshold_percentile: float = 75.0,
    sim_threshold: float = 0.7,
) -> int:
    """Greedy count of high-reward, mutually dissimilar molecules."""
    if not records:
        return 0
    rewards = np.array([r.reward for r in records])
    threshold = float(np.percentile(rewards, reward_threshold_percentile))
    eligible = [r for r in records if r.reward >= threshold and r.valid]
    eligible.sort(key=lambda r: (-r.reward, r.key))
    mode_fps: list[np.ndarray] = []
    mode_sizes: list[int] = []
    seen_keys: set[str] = set()
    for r in eligible:
        if r.key in seen_keys:
            continue
        seen_keys.add(r.key)
        size = int(popcount_rows(r.fp[None, :])[0])
        is_new = True
        for fp, sz in zip(mode_fps, mode_sizes):
            inter = int(np.bitwise_count(fp & r.fp).sum())
            union = sz + size - inter
            sim = 1.0 if union == 0 else inter / union
            if sim >= sim_threshold:
                is_new = False
                break
        if is_new:
            mode_fps.append(r.fp)
            mode_sizes.append(size)
    return len(mode_fps)


def normalized_l1(records: list[SampleRecord], spec: PropertySpec) -> float:
    """Mean |p - (c_low + 0.1 (c_high - c_low))| / (c_high - c_low)."""
    width = spec.c_high - spec.c_low
    if width <= 0:
        raise DegenerateRange(f"{spec.name} range has zero width")
    anchor = spec.c_low + 0.1 * width
    vals = [r.properties[spec.name] for r in records if r.valid]
    if not vals:
        raise EmptySet("normalized_l1 of an empty set")
    return float(np.mean([abs(v - anchor) / width for v in vals]))


def _indicator(value: float, spec: PropertySpec) -> float:
    if spec.d < 0:
        return 1.0 if abs(value - spec.c_low) <= 0.1 * abs(spec.c_low) else 0.0
    if spec.d > 0:
        return 1.0 if abs(value - spec.c_high) <= 0.1 * abs(spec.c_high) else 0.0
    return 1.0 if spec.c_low <= value <= spec.c_high else 0.0


def success_percent(records: list[SampleRecord], specs) -> float:
    """Mean fraction of satisfied conditionals, as a percentage."""
    if not records:
        raise EmptySet("success_percent of an empty set")
    total = 0.0
    for r in records:
        if not r.valid:
            continue
        hits = sum(_indicator(r.properties[s.name], s) for s in specs)
        total += hits / len(specs)
    return 100.0 * total / len(records)


@dataclass
class MetricsReport:
    n_samples: int
    validity: float
    uniqueness: float
    novelty: float
    diversity: float
    n_modes: int
    success_pct: float
    l1_per_property: dict[str, float]
    scaffold_count: int

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)


def scaffold_count(records: list[SampleRecord], first_n: int = 200) -> int:
    from .smiles import parse_smiles

    seen = set()
    for r in records[:first_n]:
        if not r.valid:
            continue
        seen.add(murcko_scaffold(parse_smiles(r.smiles)))
    return len(seen)


def report(
    records: list[SampleRecord],
    specs,
    corpus_keys: set[str],
    scaffold_n: int = 200,
) -> MetricsReport:
    if not records:
        raise EmptySet("report of an empty record list")
    return MetricsReport(
        n_samples=len(records),
        validity=validity(records),
        uniqueness=uniqueness(records),
        novelty=novelty(records, corpus_keys),
        diversity=diversity(records) if len(records) >= 2 else 0.0,
        n_modes=n_modes(records),
        success_pct=success_percent(records, specs),
        l1_per_property={s.name: normalized_l1(records, s) for s in specs},
        scaffold_count=scaffold_count(records, scaffold_n),
    )


def write_records_jsonl(records: list[SampleRecord], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            fh.write(r.to_json() + "\n")


def read_records_jsonl(path, sas_table=None) -> list[SampleRecord]:
    """Load records, recomputing properties and fingerprints from SMILES."""
    from .smiles import parse_smiles

    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            d = json.loads(line)
            g = parse_smiles(d["smiles"])
            props = compute_properties(g, sas_table).as_dict()
            out.append(
                SampleRecord(
                    key=canonical_key(g),
                    smiles=d["smiles"],
                    properties=props,
                    reward=float(d.get("reward", 0.0)),
                    cond_lows=tuple(d.get("cond_lows", ())),
                    cond_highs=tuple(d.get("cond_highs", ())),
                    fp=fingerprint(g),
                    valid=True,
                )
            )
    return out


def write_report_files(rep: MetricsReport, records: list[SampleRecord], out_dir) -> None:
    import os

    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "metrics.json"), "w", encoding="utf-8") as fh:
        fh.write(rep.to_json() + "\n")
    with open(os.path.join(out_dir, "metrics.csv"), "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        flat = asdict(rep)
        l1 = flat.pop("l1_per_property")
        for name, val in l1.items():
            flat[f"l1_{name}"] = val
        w.writerow(list(flat))
        w.writerow([flat[k] for k in flat])
    prop_names = sorted({k for r in records if r.valid for k in r.properties})
    with open(os.path.join(out_dir, "samples.csv"), "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["key", "smiles", "reward", "valid", *prop_names])
        for r in records:
            w.writerow(
                [r.key, r.smiles, f"{r.reward:.6g}", int(r.valid)]
                + [f"{r.properties.get(p, float('nan')):.6g}" for p in prop_names]
            )
