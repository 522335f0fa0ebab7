"""Goal-range sampling, thermometer encoding and reward shaping.

Each property carries a desired range (c_low, c_high), hard permissible
bounds (starred), a preference direction d and a decay rate. Per-trajectory
conditional ranges are sampled uniformly inside the desired range (online),
from a truncated normal around a known label (offline), or - with small
probability - out of bounds to teach the sampler arbitrary ranges. Rewards
follow the three-case piecewise shape per direction and multiply across
properties.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import ndtr, ndtri

NUM_THERMOMETER_DIM = 16
LOG_REWARD_FLOOR = -512.0


@dataclass(frozen=True)
class PropertySpec:
    name: str
    lo_star: float  # minimum permissible value
    hi_star: float  # maximum permissible value
    c_low: float
    c_high: float
    d: int  # preference direction: -1, 0, +1
    lam: float = 1.0
    sigma: float | None = None  # offline truncated-normal sd

    def __post_init__(self):
        if not (self.lo_star <= self.c_low < self.c_high <= self.hi_star):
            raise ValueError(
                f"{self.name}: need lo* <= c_low < c_high <= hi*, got "
                f"[{self.lo_star}, {self.c_low}, {self.c_high}, {self.hi_star}]"
            )
        if self.lam <= 0:
            raise ValueError(f"{self.name}: lambda must be positive")
        if self.d not in (-1, 0, 1):
            raise ValueError(f"{self.name}: d must be -1, 0 or +1")

    @property
    def sd(self) -> float:
        return self.sigma if self.sigma is not None else (self.c_high - self.c_low) / 10.0


# desired ranges used for pretraining; rates per property
DEFAULT_PROPERTY_SPECS: tuple[PropertySpec, ...] = (
    PropertySpec("tpsa", 0.0, 200.0, 60.0, 100.0, 0, lam=20.0),
    PropertySpec("qed", 0.0, 1.0, 0.65, 0.8, 0, lam=1.0),
    PropertySpec("sas", 1.0, 10.0, 1.0, 3.0, 0, lam=1.0),
    PropertySpec("num_rings", 0.0, 8.0, 1.0, 3.0, 1, lam=1.0),
)

# permissible bounds for fine-tuning task properties
TASK_BOUNDS = {
    "mol_wt": (0.0, 900.0),
    "logp": (-10.0, 10.0),
    "tpsa": (0.0, 200.0),
}


@dataclass(frozen=True)
class ConditionalRange:
    """Sampled per-trajectory goal (low, high) for each property, in spec order."""

    lows: tuple[float, ...]
    highs: tuple[float, ...]

    def bounds(self, i: int) -> tuple[float, float]:
        return self.lows[i], self.highs[i]


def fixed_range(specs) -> ConditionalRange:
    """The desired ranges themselves (used at evaluation time)."""
    return ConditionalRange(
        tuple(s.c_low for s in specs), tuple(s.c_high for s in specs)
    )


def _ordered(a: float, b: float) -> tuple[float, float]:
    return (a, b) if a <= b else (b, a)


def sample_online_range(spec: PropertySpec, rng: np.random.Generator) -> tuple[float, float]:
    a = rng.uniform(spec.c_low, spec.c_high)
    b = rng.uniform(spec.c_low, spec.c_high)
    return _ordered(a, b)


def _truncnorm(mean: float, sd: float, lo: float, hi: float, rng: np.random.Generator) -> float:
    if sd <= 0:
        return min(max(mean, lo), hi)
    a = ndtr((lo - mean) / sd)
    b = ndtr((hi - mean) / sd)
    u = rng.uniform(a, b)
    u = min(max(u, 1e-12), 1 - 1e-12)
    x = mean + sd * float(ndtri(u))
    # inverse-CDF loses precision when the mean sits far outside the support
    return min(max(x, lo), hi)


def sample_offline_range(
    spec: PropertySpec, p_j: float, rng: np.random.Generator
) -> tuple[float, float]:
    """Both bounds from TruncNormal(p_j, sigma) on the desired range, ordered."""
    a = _truncnorm(p_j, spec.sd, spec.c_low, spec.c_high, rng)
    b = _truncnorm(p_j, spec.sd, spec.c_low, spec.c_high, rng)
    return _ordered(a, b)


def sample_oob_range(
    spec: PropertySpec, p_j: float | None, rng: np.random.Generator
) -> tuple[float, float]:
    """One out-of-bounds draw over the permissible (starred) range.

    Offline (p_j known): a fair Bernoulli picks either (lo*, U(lo*, p_j)) or
    (U(p_j, hi*), hi*). Online: low ~ U(lo*, hi*), high ~ U(low, hi*).
    """
    if p_j is None:
        lo = rng.uniform(spec.lo_star, spec.hi_star)
        hi = rng.uniform(lo, spec.hi_star)
        return lo, hi
    p = min(max(p_j, spec.lo_star), spec.hi_star)
    if rng.uniform() < 0.5:
        return spec.lo_star, rng.uniform(spec.lo_star, p)
    return rng.uniform(p, spec.hi_star), spec.hi_star


def sample_conditional(
    specs,
    rng: np.random.Generator,
    labels: dict[str, float] | None = None,
    oob_percent: float = 0.1,
) -> ConditionalRange:
    """Per-property goal sampling for one trajectory.

    ``labels`` switches a property to the offline (truncated-normal) sampler
    when it holds that property's value. Each property independently goes
    out-of-bounds with probability ``oob_percent``.
    """
    lows, highs = [], []
    for spec in specs:
        p_j = labels.get(spec.name) if labels else None
        if rng.uniform() < oob_percent:
            lo, hi = sample_oob_range(spec, p_j, rng)
        elif p_j is not None:
            lo, hi = sample_offline_range(spec, p_j, rng)
        else:
            lo, hi = sample_online_range(spec, rng)
        if lo > hi:
            lo, hi = hi, lo
        lows.append(lo)
        highs.append(hi)
    return ConditionalRange(tuple(lows), tuple(highs))


def thermometer_encode(v: float, lo: float, hi: float, bins: int = NUM_THERMOMETER_DIM) -> np.ndarray:
    if not lo < hi:
        raise ValueError("thermometer_encode needs lo < hi")
    x = min(max(v, lo), hi)
    k = round((x - lo) / (hi - lo) * bins)
    out = np.zeros(bins, dtype=np.float64)
    out[:k] = 1.0
    return out


def encode_conditional(specs, cond: ConditionalRange, bins: int = NUM_THERMOMETER_DIM) -> np.ndarray:
    """Concatenated thermometer codes of both bounds, over permissible ranges."""
    parts = []
    for i, spec in enumerate(specs):
        lo, hi = cond.bounds(i)
        parts.append(thermometer_encode(lo, spec.lo_star, spec.hi_star, bins))
        parts.append(thermometer_encode(hi, spec.lo_star, spec.hi_star, bins))
    return np.concatenate(parts) if parts else np.zeros(0)


def encoding_dim(num_properties: int, bins: int = NUM_THERMOMETER_DIM) -> int:
    return 2 * bins * num_properties


def property_reward(p_x: float, c_low: float, c_high: float, d: int, lam: float) -> float:
    """Piecewise goal reward in (0, 1], continuous at both range boundaries."""
    width = c_high - c_low
    if d > 0:
        if p_x < c_low:
            return 0.5 * math.exp(-(c_low - p_x) / lam)
        if p_x > c_high:
            return math.exp(-(p_x - c_high) / lam)
        if width == 0:
            return 1.0
        return 0.5 * (p_x - c_low) / width + 0.5
    if d < 0:
        if p_x < c_low:
            return math.exp(-(c_low - p_x) / lam)
        if p_x > c_high:
            return 0.5 * math.exp(-(p_x - c_high) / lam)
        if width == 0:
            return 1.0
        return -0.5 * (p_x - c_low) / width + 1.0
    if p_x < c_low:
        return math.exp(-(c_low - p_x) / lam)
    if p_x > c_high:
        return math.exp(-(p_x - c_high) / lam)
    return 1.0


def reward_for_spec(spec: PropertySpec, p_x: float, lo: float, hi: float) -> float:
    return property_reward(p_x, lo, hi, spec.d, spec.lam)


def aggregate_reward(rewards) -> float:
    out = 1.0
    for r in rewards:
        out *= r
    return out


def conditional_reward(specs, cond: ConditionalRange, values: dict[str, float]) -> float:
    parts = [
        reward_for_spec(s, values[s.name], *cond.bounds(i)) for i, s in enumerate(specs)
    ]
    return aggregate_reward(parts)


def combine_task_reward(base: float, r_ext: float) -> float:
    return base * r_ext


def log_reward(r: float, beta: float) -> float:
    """beta * ln(r) with the illegal-action floor at -512."""
    if r < 0:
        raise ValueError("reward must be nonnegative")
    if r == 0:
        return LOG_REWARD_FLOOR
    return max(beta * math.log(r), LOG_REWARD_FLOOR)


def with_range(spec: PropertySpec, c_low: float, c_high: float) -> PropertySpec:
    return replace(spec, c_low=c_low, c_high=c_high)
