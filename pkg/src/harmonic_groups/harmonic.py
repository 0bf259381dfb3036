"""Affine harmonic functions f(x) = c + phi([x]) and their diagnostics.

``phi`` acts on the Abelianized coordinates, so harmonicity, Lipschitz
seminorms, translation defects and growth sequences are all exactly
computable in rational arithmetic.  Value dimension k is 1 for scalars,
2 for complex values encoded as (Re, Im), and arbitrary finite k for
vector targets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Mapping, Optional, Sequence

from . import groups, linalg, measures
from .groups import Element, GeneratingSet, GroupDescriptor, MarkedSubgroup
from .measures import FiniteMeasure


class _Inconsistent:
    """Sentinel: supplied values do not come from any affine function."""

    def __repr__(self):
        return "Inconsistent"

    def __bool__(self):
        return False


INCONSISTENT = _Inconsistent()


@dataclass(frozen=True)
class AffineHarmonic:
    """The pair (c, phi) realizing f(x) = c + phi * abelianize(x).

    ``c`` is a k-vector of Fractions and ``phi`` a k x rank matrix of
    Fractions.  For a step law mu, f is mu-harmonic iff phi annihilates the
    Abelian drift of mu.
    """

    group: GroupDescriptor
    c: tuple[Fraction, ...]
    phi: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self):
        if len(self.phi) != len(self.c):
            raise ValueError("phi must have one row per value coordinate")
        rank = self.group.abelian_free_rank
        for row in self.phi:
            if len(row) != rank:
                raise ValueError(f"phi rows must have length {rank}")

    @classmethod
    def scalar(cls, group: GroupDescriptor, c, phi_row: Sequence) -> "AffineHarmonic":
        return cls(
            group,
            (Fraction(c),),
            (tuple(Fraction(v) for v in phi_row),),
        )

    @classmethod
    def vector(cls, group: GroupDescriptor, c: Sequence, phi_rows) -> "AffineHarmonic":
        return cls(
            group,
            tuple(Fraction(v) for v in c),
            tuple(tuple(Fraction(v) for v in row) for row in phi_rows),
        )

    @property
    def value_dim(self) -> int:
        return len(self.c)

    def evaluate(self, x: Element) -> tuple[Fraction, ...]:
        ab = groups.abelianize(self.group, x)
        return tuple(
            cj + sum((rj * ai for rj, ai in zip(row, ab)), Fraction(0))
            for cj, row in zip(self.c, self.phi)
        )

    def is_constant(self) -> bool:
        return all(v == 0 for row in self.phi for v in row)


@dataclass(frozen=True)
class TabulatedFunction:
    """A non-affine test function (used only to falsify affine-only laws)."""

    group: GroupDescriptor
    fn: Callable[[Element], tuple]

    def evaluate(self, x: Element) -> tuple[Fraction, ...]:
        return tuple(Fraction(v) for v in self.fn(x))


def quadratic_coordinate(G: GroupDescriptor, index: int = 0) -> TabulatedFunction:
    """x -> (abelianized coordinate) squared; the standard non-affine probe."""
    return TabulatedFunction(G, lambda x: (groups.abelianize(G, x)[index] ** 2,))


def residual_at(f, mu: FiniteMeasure, x: Element) -> tuple[Fraction, ...]:
    """Harmonicity residual sum_g mu(g) f(xg) - f(x), exactly."""
    G = mu.group
    k = len(f.evaluate(G.identity()))
    acc = [Fraction(0)] * k
    for g, w in mu.support:
        v = f.evaluate(groups.mul(G, x, g))
        for j in range(k):
            acc[j] += w * v[j]
    fx = f.evaluate(x)
    return tuple(a - b for a, b in zip(acc, fx))


def verify_harmonic(f, mu: FiniteMeasure, points: Sequence[Element]) -> Fraction:
    """Max over points of the sup-norm harmonicity residual (exact)."""
    worst = Fraction(0)
    for x in points:
        worst = max(worst, linalg.sup_norm(residual_at(f, mu, x)))
    return worst


def _norm_sq(v: Sequence[Fraction]) -> Fraction:
    return sum((x * x for x in v), Fraction(0))


@dataclass(frozen=True)
class LipschitzReport:
    """Exact vs ball-empirical Lipschitz seminorm of an affine function.

    The two must agree for every radius >= 1 because affine functions have
    constant generator increments; both the Euclidean values and their exact
    squares are reported so equality can be asserted in rational arithmetic.
    """

    exact: float
    empirical: float
    exact_sq: Fraction
    empirical_sq: Fraction
    radius: int


def lipschitz_seminorm(
    f: AffineHarmonic,
    S: GeneratingSet,
    radius: int,
    ball: Optional[groups.BallIndex] = None,
) -> LipschitzReport:
    """max_s |phi([s])| by formula, and the same sup scanned over a ball."""
    if radius < 1:
        raise ValueError("radius must be >= 1")
    G = f.group
    exact_sq = Fraction(0)
    for s in S.elements:
        ab = groups.abelianize(G, s)
        vec = [sum((rj * ai for rj, ai in zip(row, ab)), Fraction(0)) for row in f.phi]
        exact_sq = max(exact_sq, _norm_sq(vec))

    if ball is None or ball.radius < radius:
        ball = groups.enumerate_ball(G, S, radius)
    empirical_sq = Fraction(0)
    for x in ball:
        if ball.length(x) > radius:
            continue
        fx = f.evaluate(x)
        for s in S.elements:
            fy = f.evaluate(groups.mul(G, x, s))
            empirical_sq = max(
                empirical_sq, _norm_sq([a - b for a, b in zip(fy, fx)])
            )
    return LipschitzReport(
        exact=math.sqrt(exact_sq),
        empirical=math.sqrt(empirical_sq),
        exact_sq=exact_sq,
        empirical_sq=empirical_sq,
        radius=radius,
    )


def theta_gradient(values: Mapping[Element, Sequence], G: GroupDescriptor, S: GeneratingSet):
    """Recover phi from generator values via f(s) - f(e).

    Solves phi * abelianize(s) = f(s) - f(e) exactly for all s.  Returns the
    phi matrix, or INCONSISTENT when the overdetermined system has no
    solution (the input is not affine).  Raises ValueError naming the
    missing directions when the generator images do not span.
    """
    ident = G.identity()
    if ident not in values:
        raise ValueError("values must include the identity element")
    base = tuple(Fraction(v) for v in values[ident])
    k = len(base)
    rows = []
    rhs_cols = [[] for _ in range(k)]
    for s in S.elements:
        if s not in values:
            raise ValueError(f"values must include every generator; missing {s!r}")
        rows.append([Fraction(a) for a in groups.abelianize(G, s)])
        vs = tuple(Fraction(v) for v in values[s])
        for j in range(k):
            rhs_cols[j].append(vs[j] - base[j])
    phi_rows = []
    for j in range(k):
        sol = linalg.solve_exact(rows, rhs_cols[j])
        if sol == "inconsistent":
            return INCONSISTENT
        phi_rows.append(sol)
    return tuple(phi_rows)


def translate_defect(f, g: Element, radius: int, S: Optional[GeneratingSet] = None) -> Fraction:
    """sup over the ball of |(g.f - f)(x) - (g.f - f)(e)|, exactly.

    (g.f)(x) = f(g^{-1} x).  Affine functions give exactly 0; the scan over
    the ball is what makes the statement falsifiable for non-affine input.
    """
    G = f.group
    S = S or groups.standard_generators(G)
    ginv = groups.inv(G, g)

    def diff(x):
        a = f.evaluate(groups.mul(G, ginv, x))
        b = f.evaluate(x)
        return tuple(u - v for u, v in zip(a, b))

    base = diff(G.identity())
    worst = Fraction(0)
    for x in groups.enumerate_ball(G, S, radius):
        d = diff(x)
        worst = max(worst, linalg.sup_norm([u - v for u, v in zip(d, base)]))
    return worst


def restrict_affine(f: AffineHarmonic, H: MarkedSubgroup) -> AffineHarmonic:
    """Restriction to H in model coordinates: (c, phi composed with inclusion)."""
    if f.group != H.parent:
        raise TypeError("function and subgroup live on different groups")
    rank_par = H.parent.abelian_free_rank
    rank_mod = H.model.abelian_free_rank
    if rank_par == 0:
        phi = tuple((Fraction(0),) * rank_mod for _ in f.c)
    else:
        incl = linalg.as_fraction_rows(H.inclusion_ab)
        phi = linalg.mat_mul(f.phi, incl)
    return AffineHarmonic(H.model, f.c, phi)


def translate_affine(f: AffineHarmonic, h: Element) -> AffineHarmonic:
    """Left translation (h.f)(x) = f(h^{-1} x), again affine."""
    ab = groups.abelianize(f.group, h)
    c = tuple(
        cj - sum((rj * ai for rj, ai in zip(row, ab)), Fraction(0))
        for cj, row in zip(f.c, f.phi)
    )
    return AffineHarmonic(f.group, c, f.phi)


@dataclass(frozen=True)
class Hf1Report:
    """Dimension of the space of linear-growth harmonic functions.

    dim = R + 1 - delta, where delta detects nonzero drift of the hitting
    measure on the nilpotent core.  delta None means inconclusive, in which
    case only the interval [R, R + 1] is certified.
    """

    R: int
    delta: Optional[int]
    dim_low: int
    dim_high: int
    drift_values: tuple[float, ...]
    drift_stderr: tuple[float, ...]
    method: str
    n_samples: int = 0
    censored: int = 0

    @property
    def dim(self):
        return self.dim_low if self.dim_low == self.dim_high else (self.dim_low, self.dim_high)


def dim_hf1(
    G: GroupDescriptor,
    mu: FiniteMeasure,
    core: MarkedSubgroup,
    cfg=None,
) -> Hf1Report:
    """dim HF_1 = R + 1 - delta(mu_core), with a 3/5 sigma trichotomy.

    When the core is the whole group the drift is computed exactly.
    Otherwise the drift of the hitting measure on the core is estimated by
    Monte Carlo: delta = 0 if every coordinate is within 3 sigma of zero,
    delta = 1 if some coordinate exceeds 5 sigma, else inconclusive.
    """
    if core.parent != G:
        raise TypeError("core must be a marked subgroup of G")
    R = core.model.abelian_free_rank
    if core.index == 1:
        drift = measures.drift_abelian(mu)
        delta = 0 if drift.is_zero() else 1
        return Hf1Report(
            R=R,
            delta=delta,
            dim_low=R + 1 - delta,
            dim_high=R + 1 - delta,
            drift_values=tuple(float(v) for v in drift),
            drift_stderr=(0.0,) * R,
            method="exact",
        )
    if cfg is None:
        raise ValueError("a WalkConfig is required when the core is proper")
    from . import walks

    em = walks.hitting_measure(core, cfg)
    means, errs = em.model_drift(core.model)
    if all(abs(m) <= 3 * e for m, e in zip(means, errs)):
        delta = 0
    elif any(abs(m) > 5 * e for m, e in zip(means, errs)):
        delta = 1
    else:
        delta = None
    if delta is None:
        dim_low, dim_high = R, R + 1
    else:
        dim_low = dim_high = R + 1 - delta
    return Hf1Report(
        R=R,
        delta=delta,
        dim_low=dim_low,
        dim_high=dim_high,
        drift_values=means,
        drift_stderr=errs,
        method="monte_carlo",
        n_samples=cfg.n_samples,
        censored=em.censored,
    )


def liouville_growth(f: AffineHarmonic, g: Element, n_max: int) -> list:
    """|f(g^n) - f(e)| for n = 1..n_max; exactly linear for affine f.

    Scalar values give exact Fractions, higher value dimensions give floats
    (Euclidean norm).
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    G = f.group
    base = f.evaluate(G.identity())
    out = []
    y = G.identity()
    for _ in range(n_max):
        y = groups.mul(G, y, g)
        v = [a - b for a, b in zip(f.evaluate(y), base)]
        if f.value_dim == 1:
            out.append(abs(v[0]))
        else:
            out.append(math.sqrt(_norm_sq(v)))
    return out
