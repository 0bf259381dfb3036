"""Finite-support probability measures with exact rational weights.

Weights stay Fractions end to end, so drift and convolution identities are
checkable exactly.  Sampling is inverse-CDF over integer thresholds on the
common denominator, which draws each atom with exactly its rational weight
and is bit-reproducible per RNG stream.
"""

from __future__ import annotations

import math
import random
from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Iterator, Optional

from . import groups
from .errors import ResourceCapError
from .groups import Element, GeneratingSet, GroupDescriptor

_MIX_MULT = 0x9E3779B97F4A7C15
_MASK64 = (1 << 64) - 1


def rng_stream(seed: int, index: int) -> random.Random:
    """Deterministic child stream for (seed, index), splitmix64-style.

    Parallel samplers must each own their stream; results then do not depend
    on scheduling order.
    """
    z = (seed + (index + 1) * _MIX_MULT) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return random.Random(z ^ (z >> 31))


@dataclass(frozen=True)
class FiniteMeasure:
    """A finitely supported probability measure on a catalog group.

    Support pairs are stored sorted by element coordinates, deduplicated,
    with weights that are positive Fractions summing to exactly 1.
    """

    group: GroupDescriptor
    support: tuple[tuple[Element, Fraction], ...]

    @classmethod
    def from_pairs(cls, group: GroupDescriptor, pairs: Iterable) -> "FiniteMeasure":
        acc: dict[Element, Fraction] = {}
        for g, w in pairs:
            group.check_element(g)
            w = Fraction(w)
            if w <= 0:
                raise ValueError(f"weight of {g!r} must be positive, got {w}")
            acc[g] = acc.get(g, Fraction(0)) + w
        total = sum(acc.values(), Fraction(0))
        if total != 1:
            raise ValueError(f"weights must sum to exactly 1, got {total}")
        return cls(group, tuple(sorted(acc.items())))

    def weight(self, g: Element) -> Fraction:
        for h, w in self.support:
            if h == g:
                return w
        return Fraction(0)

    def __iter__(self) -> Iterator[tuple[Element, Fraction]]:
        return iter(self.support)

    def __len__(self) -> int:
        return len(self.support)


def point_mass(group: GroupDescriptor, g: Element) -> FiniteMeasure:
    return FiniteMeasure.from_pairs(group, [(g, Fraction(1))])


def uniform_on(group: GroupDescriptor, elements: Iterable[Element]) -> FiniteMeasure:
    elems = list(elements)
    w = Fraction(1, len(elems))
    return FiniteMeasure.from_pairs(group, [(g, w) for g in elems])


def simple_random_walk(group: GroupDescriptor, S: Optional[GeneratingSet] = None) -> FiniteMeasure:
    """Uniform step law on a symmetric generating set."""
    S = S or groups.standard_generators(group)
    return uniform_on(group, S.elements)


@dataclass(frozen=True)
class DriftVector:
    """Exact Abelianized mean step, one Fraction per free Abelian direction."""

    values: tuple[Fraction, ...]

    def is_zero(self) -> bool:
        return all(v == 0 for v in self.values)

    def __iter__(self):
        return iter(self.values)

    def __len__(self):
        return len(self.values)


def drift_abelian(mu: FiniteMeasure) -> DriftVector:
    """Sum of weight(g) * abelianize(g), computed in exact rationals.

    Zero exactly iff the measure is Abelian-centered; symmetric measures
    cancel pairwise and always return zero.
    """
    rank = mu.group.abelian_free_rank
    acc = [Fraction(0)] * rank
    for g, w in mu.support:
        for i, c in enumerate(groups.abelianize(mu.group, g)):
            acc[i] += w * c
    return DriftVector(tuple(acc))


@dataclass(frozen=True)
class SasReport:
    """Outcome of the symmetric / adapted / smooth checks.

    ``adapted_witness_radius`` is the smallest ball radius certified to be
    covered by the semigroup generated by the support, or None (unknown)
    when no radius could be certified within the probe budget.  Finite
    support makes smoothness automatic.
    """

    symmetric: bool
    adapted_witness_radius: Optional[int]
    smooth: bool
    first_moment: Fraction


def is_symmetric(mu: FiniteMeasure) -> bool:
    return all(mu.weight(groups.inv(mu.group, g)) == w for g, w in mu.support)


def check_sas(
    mu: FiniteMeasure,
    S: GeneratingSet,
    probe_radius: int = 3,
    word_budget: Optional[int] = None,
    closure_cap: int = 200_000,
) -> SasReport:
    """Exact symmetry test plus a semigroup-coverage witness for adaptedness.

    Semigroup words over the support of length at most ``word_budget`` are
    enumerated; the witness radius is the smallest r <= probe_radius whose
    ball is fully covered.  Unknown (None) is a value, not a failure.
    """
    if probe_radius < 1:
        raise ValueError("probe_radius must be >= 1")
    G = mu.group
    budget = word_budget if word_budget is not None else 2 * probe_radius + 2
    closure = {G.identity()} if any(g == G.identity() for g, _ in mu.support) else set()
    frontier = [g for g, _ in mu.support]
    closure.update(frontier)
    for _ in range(budget - 1):
        nxt = []
        for x in frontier:
            for g, _ in mu.support:
                y = groups.mul(G, x, g)
                if y not in closure:
                    closure.add(y)
                    nxt.append(y)
                    if len(closure) > closure_cap:
                        nxt = []
                        frontier = []
                        break
            else:
                continue
            break
        if not nxt:
            break
        frontier = nxt

    witness = None
    ball = groups.enumerate_ball(G, S, probe_radius)
    for r in range(1, probe_radius + 1):
        if all(g in closure for g in ball.elements_within(r)):
            witness = r
            break

    moment = Fraction(0)
    for g, w in mu.support:
        length = groups.word_length(G, g, S, cap=64)
        if length is None:
            raise ResourceCapError(
                f"support element {g!r} not reachable within word-length cap 64"
            )
        moment += w * length
    return SasReport(
        symmetric=is_symmetric(mu),
        adapted_witness_radius=witness,
        smooth=True,
        first_moment=moment,
    )


def convolve(mu: FiniteMeasure, nu: FiniteMeasure) -> FiniteMeasure:
    """Right-walk convolution: weight of z is the sum of mu(g) nu(h) over gh = z."""
    if mu.group != nu.group:
        raise TypeError("convolution requires measures on the same group")
    acc: dict[Element, Fraction] = {}
    for g, wg in mu.support:
        for h, wh in nu.support:
            z = groups.mul(mu.group, g, h)
            acc[z] = acc.get(z, Fraction(0)) + wg * wh
    return FiniteMeasure(mu.group, tuple(sorted(acc.items())))


def convolution_power(mu: FiniteMeasure, n: int) -> FiniteMeasure:
    if n < 1:
        raise ValueError("convolution power needs n >= 1")
    out = mu
    for _ in range(n - 1):
        out = convolve(out, mu)
    return out


@lru_cache(maxsize=256)
def _sampling_table(mu: FiniteMeasure):
    """Integer inverse-CDF thresholds over the common denominator."""
    denom = math.lcm(*(w.denominator for _, w in mu.support))
    thresholds = []
    acc = 0
    for _, w in mu.support:
        acc += w.numerator * (denom // w.denominator)
        thresholds.append(acc)
    assert acc == denom
    return denom, thresholds


def sample(mu: FiniteMeasure, rng: random.Random) -> Element:
    """One draw whose atom probabilities equal the rational weights exactly.

    Inverse-CDF over the fixed (sorted) support order; reproducible for a
    given RNG stream.
    """
    denom, thresholds = _sampling_table(mu)
    u = rng.randrange(denom)
    return mu.support[bisect_right(thresholds, u)][0]
