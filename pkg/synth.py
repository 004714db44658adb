"""Seeded synthetic signals with known scaling: binomial cascades and Gaussian walks"""

import logging
from dataclasses import dataclass
from typing import Literal

import numpy as np

from config import CASCADE_MAX_LEVELS, CASCADE_MIN_LEVELS, MIN_SERIES_LENGTH
from ingest import SeriesBundle, SeriesEntry

logger = logging.getLogger(__name__)

SynthKind = Literal["cascade", "walk", "shuffled_cascade"]


class SynthParameterError(Exception):
    pass


def make_rng(seed: int) -> np.random.Generator:
    """PCG64 generator; bit-reproducible for a given seed across platforms"""
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True)
class CascadeSpec:
    a: float
    levels: int
    seed: int = 0

    def __post_init__(self):
        if not 0.5 < self.a < 1.0:
            raise SynthParameterError(f"Cascade multiplier must lie in (0.5, 1), got {self.a}")
        if not CASCADE_MIN_LEVELS <= self.levels <= CASCADE_MAX_LEVELS:
            raise SynthParameterError(
                f"Cascade levels must lie in [{CASCADE_MIN_LEVELS}, {CASCADE_MAX_LEVELS}], "
                + f"got {self.levels}"
            )

    @property
    def length(self) -> int:
        return 2**self.levels


def binomial_cascade(spec: CascadeSpec) -> np.ndarray:
    """Finest-level masses of a binomial multiplicative cascade

    Each interval gives fraction a to one half and 1 - a to the other; the side
    receiving a is drawn per interval.
    """
    rng = make_rng(spec.seed)
    mass = np.ones(1)
    for _ in range(spec.levels):
        left = np.where(rng.random(mass.size) < 0.5, spec.a, 1.0 - spec.a)
        split = np.empty(2 * mass.size)
        split[0::2] = mass * left
        split[1::2] = mass * (1.0 - left)
        mass = split
    return mass


def gaussian_walk(length: int, seed: int) -> np.ndarray:
    """i.i.d. standard normal increments of a random walk"""
    if length < MIN_SERIES_LENGTH:
        raise SynthParameterError(f"Walk length must be >= {MIN_SERIES_LENGTH}, got {length}")
    return make_rng(seed).standard_normal(length)


def shuffle_surrogate(values: np.ndarray, seed: int) -> np.ndarray:
    """Random permutation: same marginal distribution, temporal correlations destroyed"""
    return make_rng(seed).permutation(np.asarray(values, dtype=float))


def analytic_cascade_h(r: float | np.ndarray, a: float) -> float | np.ndarray:
    """h(r) = 1/r - ln(a^r + (1-a)^r) / (r ln 2), with its limit at r = 0"""
    if not 0.0 < a < 1.0:
        raise SynthParameterError(f"Multiplier must lie in (0, 1), got {a}")
    r_arr = np.asarray(r, dtype=float)
    limit = -(np.log2(a) + np.log2(1.0 - a)) / 2.0
    with np.errstate(divide="ignore", invalid="ignore"):
        h = 1.0 / r_arr - np.log(a**r_arr + (1.0 - a) ** r_arr) / (r_arr * np.log(2.0))
    h = np.where(r_arr == 0, limit, h)
    return float(h) if h.ndim == 0 else h


def synth_bundle(
    kind: SynthKind,
    count: int = 1,
    seed: int = 0,
    a: float = 0.75,
    levels: int = 12,
    length: int | None = None,
) -> SeriesBundle:
    """`count` series seeded seed, seed + 1, ... in raw_signal mode"""
    if count < 1:
        raise SynthParameterError(f"count must be >= 1, got {count}")

    entries = []
    for i in range(count):
        series_seed = seed + i
        if kind == "walk":
            values = gaussian_walk(length or 2**levels, series_seed)
        elif kind in ("cascade", "shuffled_cascade"):
            values = binomial_cascade(CascadeSpec(a=a, levels=levels, seed=series_seed))
            if kind == "shuffled_cascade":
                values = shuffle_surrogate(values, series_seed)
        else:
            raise SynthParameterError(f"Unknown synthetic kind {kind}")
        entries.append(SeriesEntry(id=f"{kind}_{i:03d}", values=values, mode="raw"))
        logger.debug(f"Generated {kind} series {i} with seed {series_seed}")

    metadata = {"kind": kind, "count": count, "seed": seed}
    if kind != "walk":
        metadata.update({"a": a, "levels": levels, "h2_analytic": analytic_cascade_h(2.0, a)})
    return SeriesBundle(entries=tuple(entries), mode="raw", metadata=metadata)
