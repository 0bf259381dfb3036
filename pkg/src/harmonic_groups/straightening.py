"""Quasi-isometry pipelines between lattices and their Abelian-defect analysis.

A pipeline maps the Abelianized coordinates of the source lattice through a
chain of primitives (integer-linear maps, translations, coordinate swaps,
and catalog shears) and lifts the result into the target lattice, so every
pipeline is a total map normalized to send identity to identity.

The central quantity is the Abelian defect

    delta(x, y) = A(xy) - A(x) - A(y),      A(x) = abelianized image of Psi(x),

whose boundedness is what makes the homogenized linearization L_ab exist.
Norms are fixed once: sup-norm on coordinate vectors, max row l1 for
operators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Sequence, Union

from . import groups, linalg, measures
from .errors import ResourceCapError
from .groups import Element, GroupDescriptor, MarkedSubgroup

COORDINATE_CAP = 10**18

SHEAR_KINDS = {
    "sqrt_floor": lambda n: math.isqrt(abs(n)),
    "mod2": lambda n: n % 2,
    "zero": lambda n: 0,
}


@dataclass(frozen=True)
class Linear:
    """Integer-linear stage; matrix rows act on the current coordinates."""

    matrix: tuple[tuple[int, ...], ...]

    def apply(self, v):
        return tuple(sum(r * x for r, x in zip(row, v)) for row in self.matrix)

    def dim_out(self, dim_in: int) -> int:
        if any(len(row) != dim_in for row in self.matrix):
            raise ValueError("linear stage has wrong input dimension")
        return len(self.matrix)


@dataclass(frozen=True)
class Translate:
    by: tuple[int, ...]

    def apply(self, v):
        return tuple(a + b for a, b in zip(v, self.by))

    def dim_out(self, dim_in: int) -> int:
        if len(self.by) != dim_in:
            raise ValueError("translate stage has wrong dimension")
        return dim_in


@dataclass(frozen=True)
class Shear:
    """Adds a catalog perturbation of coordinate ``of`` onto coordinate ``axis``."""

    axis: int
    of: int
    kind: str

    def apply(self, v):
        g = SHEAR_KINDS[self.kind]
        out = list(v)
        out[self.axis] += g(v[self.of])
        return tuple(out)

    def dim_out(self, dim_in: int) -> int:
        if not (0 <= self.axis < dim_in and 0 <= self.of < dim_in):
            raise ValueError("shear indices out of range")
        if self.kind not in SHEAR_KINDS:
            raise ValueError(f"unknown shear kind {self.kind!r}")
        return dim_in


@dataclass(frozen=True)
class Swap:
    perm: tuple[int, ...]

    def apply(self, v):
        return tuple(v[p] for p in self.perm)

    def dim_out(self, dim_in: int) -> int:
        if sorted(self.perm) != list(range(dim_in)):
            raise ValueError("swap stage must be a permutation of the coordinates")
        return dim_in


Stage = Union[Linear, Translate, Shear, Swap]


@dataclass(frozen=True)
class QiMapExpr:
    """A composable lattice map between nilpotent catalog members.

    Build through :func:`qi_map`, which validates stage dimensions and
    appends the normalizing translate.
    """

    source: GroupDescriptor
    target: GroupDescriptor
    pipeline: tuple[Stage, ...]

    def __post_init__(self):
        if not self.source.is_nilpotent or not self.target.is_nilpotent:
            raise ValueError("pipelines are defined between nilpotent lattices")
        dim = self.source.abelian_free_rank
        for stage in self.pipeline:
            dim = stage.dim_out(dim)
        if dim != self.target.abelian_free_rank:
            raise ValueError(
                "pipeline output dimension does not match the target Abelianization"
            )


def qi_map(
    source: GroupDescriptor,
    target: GroupDescriptor,
    stages: Sequence[Stage],
) -> QiMapExpr:
    """Validate stages and normalize so the identity maps to the identity."""
    probe = QiMapExpr(source, target, tuple(stages))
    zero = _apply_stages(probe.pipeline, (0,) * source.abelian_free_rank)
    if any(zero):
        stages = tuple(stages) + (Translate(tuple(-z for z in zero)),)
    return QiMapExpr(source, target, tuple(stages))


def identity_map(G: GroupDescriptor) -> QiMapExpr:
    return qi_map(G, G, ())


def lattice_linear(source, target, matrix) -> QiMapExpr:
    return qi_map(source, target, (Linear(tuple(tuple(r) for r in matrix)),))


def shear_map(G: GroupDescriptor, kind: str, axis: int = 1, of: int = 0) -> QiMapExpr:
    return qi_map(G, G, (Shear(axis, of, kind),))


def _apply_stages(stages, v):
    for stage in stages:
        v = stage.apply(v)
    return v


def _lift(target: GroupDescriptor, v) -> Element:
    if target.kind == groups.FREE_ABELIAN:
        return tuple(v)
    if target.kind == groups.HEISENBERG3:
        return (v[0], v[1], 0)
    if target.kind == groups.DIRECT_PRODUCT:
        out = []
        i = 0
        for f in target.factors:
            r = f.abelian_free_rank
            out.append(_lift(f, v[i:i + r]))
            i += r
        return tuple(out)
    raise ValueError(f"cannot lift into {target.describe()}")


def eval_qi(psi: QiMapExpr, x: Element) -> Element:
    """Evaluate the pipeline; total and deterministic, identity to identity."""
    psi.source.check_element(x)
    v = groups.abelianize(psi.source, x)
    return _lift(psi.target, _apply_stages(psi.pipeline, v))


def ab_image(psi: QiMapExpr, x: Element) -> tuple[int, ...]:
    """A(x): the Abelianized coordinates of the image of x."""
    return _apply_stages(psi.pipeline, groups.abelianize(psi.source, x))


def defect_at(psi: QiMapExpr, x: Element, y: Element) -> tuple[int, ...]:
    """delta(x, y) = A(xy) - A(x) - A(y) as an integer vector."""
    xy = groups.mul(psi.source, x, y)
    a_xy = ab_image(psi, xy)
    a_x = ab_image(psi, x)
    a_y = ab_image(psi, y)
    return tuple(c - a - b for c, a, b in zip(a_xy, a_x, a_y))


@dataclass(frozen=True)
class DefectReport:
    """Supremum scan of the Abelian defect over in-ball pairs.

    ``mode`` "exhaustive" means every pair was evaluated; "sampled" means a
    seeded probe-plus-uniform subsample, in which case max_defect is a lower
    bound for the true supremum.
    """

    max_defect: int
    argmax: tuple
    growth_curve: tuple  # (radius, max defect among pairs within radius)
    mode: str
    radius: int
    pairs_evaluated: int


def _curve_from_samples(samples, radii):
    pts = sorted(samples)
    idx = 0
    best = 0
    curve = []
    for r in sorted(radii):
        while idx < len(pts) and pts[idx][0] <= r:
            best = max(best, pts[idx][1])
            idx += 1
        curve.append((r, best))
    return tuple(curve)


def _default_radii(radius: int):
    radii = {radius}
    r = radius
    while r > 1:
        r = max(1, r // 2)
        radii.add(r)
    return sorted(radii)


def _sample_l1_point(d: int, radius: int, rng) -> tuple[int, ...]:
    while True:
        v = tuple(rng.randint(-radius, radius) for _ in range(d))
        if sum(abs(c) for c in v) <= radius:
            return v


def abelian_defect(
    psi: QiMapExpr,
    radius: int,
    pair_budget: int = 10**7,
    seed: int = 0,
    curve_radii: Optional[Sequence[int]] = None,
    n_random: int = 20_000,
) -> DefectReport:
    """Scan delta(x, y) over pairs with x, y in the ball of the given radius.

    When the ball is small enough that all pairs fit in the budget the scan
    is exhaustive; otherwise (free Abelian sources only) a seeded subsample
    is used, consisting of deterministic axis ladders  (a e_i, +- a e_i)
    plus uniformly sampled pairs.  The growth curve records the running sup
    among pairs whose word lengths stay within each radius checkpoint.
    """
    if radius < 1:
        raise ValueError("radius must be >= 1")
    radii = list(curve_radii) if curve_radii else _default_radii(radius)
    exhaustive_cap = math.isqrt(pair_budget)
    try:
        ball = groups.enumerate_ball(
            psi.source, groups.standard_generators(psi.source), radius,
            cap=exhaustive_cap,
        )
    except ResourceCapError:
        ball = None

    samples = []  # (pair radius, |delta|)
    best = -1
    arg = None
    pairs = 0

    if ball is not None:
        a_of = {x: ab_image(psi, x) for x in ball}
        for x in ball:
            ax = a_of[x]
            rx = ball.length(x)
            for y in ball:
                a_xy = ab_image(psi, groups.mul(psi.source, x, y))
                d = max(
                    (abs(c - a - b) for c, a, b in zip(a_xy, ax, a_of[y])),
                    default=0,
                )
                pairs += 1
                rho = max(rx, ball.length(y))
                samples.append((rho, d))
                if d > best:
                    best, arg = d, (x, y)
        mode = "exhaustive"
    else:
        if psi.source.kind != groups.FREE_ABELIAN:
            raise ResourceCapError(
                "ball too large for exhaustive defect scan and sampled mode "
                "is only available for free Abelian sources"
            )
        d_src = psi.source.d
        rng = measures.rng_stream(seed, 0)
        pair_list = []
        ladder = range(1, radius + 1) if radius <= 20_000 else [
            max(1, round(radius * k / 20_000)) for k in range(1, 20_001)
        ]
        for i in range(d_src):
            for a in ladder:
                e_a = tuple(a if j == i else 0 for j in range(d_src))
                e_ma = tuple(-a if j == i else 0 for j in range(d_src))
                pair_list.append((e_a, e_a))
                pair_list.append((e_a, e_ma))
                pair_list.append((e_ma, e_ma))
        for _ in range(n_random):
            pair_list.append(
                (
                    _sample_l1_point(d_src, radius, rng),
                    _sample_l1_point(d_src, radius, rng),
                )
            )
        for x, y in pair_list:
            d = max((abs(c) for c in defect_at(psi, x, y)), default=0)
            pairs += 1
            rho = max(sum(abs(c) for c in x), sum(abs(c) for c in y))
            samples.append((rho, d))
            if d > best:
                best, arg = d, (x, y)
        mode = "sampled"

    return DefectReport(
        max_defect=best,
        argmax=arg,
        growth_curve=_curve_from_samples(samples, radii),
        mode=mode,
        radius=radius,
        pairs_evaluated=pairs,
    )


@dataclass(frozen=True)
class Homogenization:
    """Limit of a(x^(2^k)) / 2^k with its geometric error certificate."""

    value: Fraction
    error_bound: Optional[Fraction]
    k_used: int
    sequence: tuple


def homogenize(
    G: GroupDescriptor,
    a: Callable[[Element], object],
    x: Element,
    k_max: int = 40,
    defect_bound=None,
    tol=Fraction(1, 10**9),
    stop_early: bool = True,
) -> Homogenization:
    """Homogenize a quasimorphism along the doubling sequence of x.

    Returns a_k at the first k whose next two differences both stay within
    tol (floor-type quasimorphisms can produce a single accidental zero
    difference, so one is not evidence of convergence), or at k_max.  When
    the defect of ``a`` on the doubling chain is certified <= defect_bound,
    the telescoped error bound is defect_bound / 2^k.  Integer-valued maps
    stay exact dyadic rationals.
    """
    if k_max < 1:
        raise ValueError("k_max must be >= 1")

    def as_term(raw, k):
        if isinstance(raw, (int, Fraction)):
            return Fraction(raw, 2**k)
        return raw / 2**k

    y = x
    seq = [as_term(a(x), 0)]
    k_used = k_max
    for k in range(1, k_max + 1):
        y = groups.mul(G, y, y)
        if any(abs(c) > COORDINATE_CAP for c in _flat_coords(y)):
            raise ResourceCapError(
                f"coordinates exceeded {COORDINATE_CAP} while doubling at k={k}"
            )
        seq.append(as_term(a(y), k))
        if (
            stop_early
            and k >= 2
            and abs(seq[k] - seq[k - 1]) <= tol
            and abs(seq[k - 1] - seq[k - 2]) <= tol
        ):
            k_used = k - 2
            break
    value = seq[k_used]
    bound = None
    if defect_bound is not None:
        bound = Fraction(defect_bound) / 2**k_used
    return Homogenization(value=value, error_bound=bound, k_used=k_used, sequence=tuple(seq))


def _flat_coords(g):
    for c in g:
        if isinstance(c, tuple):
            yield from _flat_coords(c)
        else:
            yield c


@dataclass(frozen=True)
class Linearization:
    """The homomorphism part L_ab of a bounded-defect pipeline.

    T_psi is the inverse transpose (the dual transport of functionals) and
    residual_bound a ball sup of |A(x) - L_ab pi(x)|.  Everything is exact
    rational; L_ab * T_psi^T is the identity by construction.
    """

    L_ab: tuple
    T_psi: tuple
    residual_bound: Fraction
    k_used: int
    defect_probe: DefectReport


class DivergenceError(RuntimeError):
    """The defect growth curve kept growing; bounded-defect input required."""


def _divergence_gate(curve, factor=1.5, slack=1.0):
    if len(curve) < 2:
        return
    d_lo = curve[0][1]
    d_hi = curve[-1][1]
    if d_hi > factor * d_lo + slack:
        raise DivergenceError(
            f"abelian defect grows from {d_lo} at radius {curve[0][0]} to "
            f"{d_hi} at radius {curve[-1][0]}; linearization rejected "
            "(the divergence gate can falsely reject slowly growing input)"
        )


def extract_linearization(
    psi: QiMapExpr,
    k_max: int = 40,
    probe_radius: int = 25,
    pair_budget: int = 10**7,
    sweep_radius: int = 30,
    seed: int = 0,
) -> Linearization:
    """Homogenize the Abelianized image columnwise into the linear part.

    Each basis direction of the source Abelianization is lifted, doubled,
    and homogenized per target coordinate; the columns assemble L_ab.  A
    defect probe gates divergent input first, and a singular L_ab (possible
    only without bounded defect) raises ValueError.
    """
    probe = abelian_defect(
        psi,
        4 * probe_radius,
        pair_budget=pair_budget,
        seed=seed,
        curve_radii=(probe_radius, 2 * probe_radius, 4 * probe_radius),
    )
    _divergence_gate(probe.growth_curve)

    rank = psi.source.abelian_free_rank
    k_used = 0
    cols = []
    for i in range(rank):
        lift = groups.ab_basis_lift(psi.source, i)
        col = []
        for j in range(rank):
            h = homogenize(
                psi.source,
                lambda z, j=j: ab_image(psi, z)[j],
                lift,
                k_max=k_max,
                defect_bound=probe.max_defect,
            )
            col.append(h.value)
            k_used = max(k_used, h.k_used)
        cols.append(col)
    L_ab = tuple(tuple(cols[i][j] for i in range(rank)) for j in range(rank))

    try:
        T_psi = linalg.transpose(linalg.mat_inv(L_ab))
    except ValueError:
        raise ValueError("linearization not invertible") from None

    ball = groups.enumerate_ball(
        psi.source, groups.standard_generators(psi.source), sweep_radius
    )
    residual = Fraction(0)
    for x in ball:
        ax = ab_image(psi, x)
        pred = linalg.mat_vec(L_ab, tuple(Fraction(v) for v in groups.abelianize(psi.source, x)))
        residual = max(residual, linalg.sup_norm([a - p for a, p in zip(ax, pred)]))
    return Linearization(
        L_ab=L_ab,
        T_psi=T_psi,
        residual_bound=residual,
        k_used=k_used,
        defect_probe=probe,
    )


@dataclass(frozen=True)
class HarmonicCoordinates:
    """A full-rank basis of characters read through the Abelianization.

    side "core": applied to abelianize(x) of the (nilpotent) group itself.
    side "extended": the point is first coset-decomposed along the marked
    core subgroup and the basis reads the H-part in model coordinates.
    """

    group: GroupDescriptor
    basis: tuple  # rows of Fractions
    side: str
    subgroup: Optional[MarkedSubgroup] = None

    def __post_init__(self):
        if self.side not in ("core", "extended"):
            raise ValueError("side must be 'core' or 'extended'")
        if self.side == "extended" and self.subgroup is None:
            raise ValueError("extended coordinates need a marked core subgroup")
        try:
            linalg.mat_inv(self.basis)
        except ValueError:
            raise ValueError("coordinate basis must have full rank") from None

    @property
    def rank(self) -> int:
        return len(self.basis)


def core_coordinates(G: GroupDescriptor, basis=None) -> HarmonicCoordinates:
    rank = G.abelian_free_rank
    rows = linalg.as_fraction_rows(basis) if basis is not None else linalg.identity_matrix(rank)
    return HarmonicCoordinates(group=G, basis=rows, side="core")


def extended_coordinates(H: MarkedSubgroup, basis=None) -> HarmonicCoordinates:
    rank = H.model.abelian_free_rank
    rows = linalg.as_fraction_rows(basis) if basis is not None else linalg.identity_matrix(rank)
    return HarmonicCoordinates(group=H.parent, basis=rows, side="extended", subgroup=H)


def transported_coordinates(
    lin: Linearization, target: GroupDescriptor, basis=None
) -> HarmonicCoordinates:
    """Push a source basis through T_psi: rows become basis * L_ab^{-1}."""
    rank = target.abelian_free_rank
    rows = linalg.as_fraction_rows(basis) if basis is not None else linalg.identity_matrix(rank)
    transported = linalg.mat_mul(rows, linalg.mat_inv(lin.L_ab))
    return HarmonicCoordinates(group=target, basis=transported, side="core")


def coordinates(F: HarmonicCoordinates, x: Element) -> tuple[Fraction, ...]:
    """Evaluate the coordinate vector at x (exact when the basis is rational)."""
    if F.side == "core":
        v = groups.abelianize(F.group, x)
    else:
        h_model, _ = groups.coset_decompose(F.subgroup, x)
        v = groups.abelianize(F.subgroup.model, h_model)
    return linalg.mat_vec(F.basis, tuple(Fraction(c) for c in v))


@dataclass(frozen=True)
class DeviationReport:
    sup_dev: float
    argmax: Optional[Element]
    curve: tuple  # (radius, max deviation within radius)


def straightening_deviation(
    phi_map,
    F_src: HarmonicCoordinates,
    F_tgt: HarmonicCoordinates,
    radius: int,
    S=None,
) -> DeviationReport:
    """sup over the ball of |F_tgt(map(x)) - F_src(x)| with its witness.

    ``phi_map`` may be a QiMapExpr or any callable sending source elements to
    target elements (for maps between groups that are only commensurable to
    pipeline sources, e.g. extensions along finite-index cores).
    """
    fn = (lambda x: eval_qi(phi_map, x)) if isinstance(phi_map, QiMapExpr) else phi_map
    G = F_src.group
    S = S or groups.standard_generators(G)
    ball = groups.enumerate_ball(G, S, radius)
    sup_dev = Fraction(-1)
    arg = None
    per_radius = {}
    for x in ball:
        d = linalg.sup_norm(
            [a - b for a, b in zip(coordinates(F_tgt, fn(x)), coordinates(F_src, x))]
        )
        r = ball.length(x)
        per_radius[r] = max(per_radius.get(r, Fraction(0)), d)
        if d > sup_dev:
            sup_dev, arg = d, x
    curve = []
    best = Fraction(0)
    for r in range(radius + 1):
        best = max(best, per_radius.get(r, Fraction(0)))
        curve.append((r, float(best)))
    return DeviationReport(sup_dev=float(sup_dev), argmax=arg, curve=tuple(curve))


@dataclass(frozen=True)
class CoarseAffineReport:
    """Certificate that A(x) stays within C_hat of an affine map L x + v0.

    A finite certificate forces the defect bound 3 C_hat + |v0|; the
    measured in-ball defect is cross-checked against it.
    """

    C_hat: Fraction
    implied_defect_bound: Fraction
    measured_defect: int
    consistent: bool
    argmax: Optional[Element]


def check_coarsely_affine(
    psi: QiMapExpr,
    L,
    v0,
    radius: int,
    pair_cap: int = 10**6,
    seed: int = 0,
) -> CoarseAffineReport:
    """Measure the coarse-affinity constant of the pipeline on a ball.

    C_hat is the sup of |A(x) - (L pi(x) + v0)|; the implied defect bound is
    3 C_hat + |v0| and must dominate the measured defect over every in-ball
    pair whose product also stays in the ball.
    """
    L_rows = linalg.as_fraction_rows(L)
    v0 = tuple(Fraction(v) for v in v0)
    G = psi.source
    ball = groups.enumerate_ball(G, groups.standard_generators(G), radius)
    c_hat = Fraction(0)
    arg = None
    for x in ball:
        ax = ab_image(psi, x)
        pred = linalg.mat_vec(L_rows, tuple(Fraction(v) for v in groups.abelianize(G, x)))
        res = linalg.sup_norm([a - p - w for a, p, w in zip(ax, pred, v0)])
        if res > c_hat:
            c_hat, arg = res, x
    implied = 3 * c_hat + linalg.sup_norm(v0)

    elems = list(ball)
    measured = 0
    if len(elems) ** 2 <= pair_cap:
        pair_iter = ((x, y) for x in elems for y in elems)
    else:
        rng = measures.rng_stream(seed, 1)
        pair_iter = (
            (elems[rng.randrange(len(elems))], elems[rng.randrange(len(elems))])
            for _ in range(pair_cap)
        )
    for x, y in pair_iter:
        if groups.mul(G, x, y) not in ball:
            continue
        d = max((abs(c) for c in defect_at(psi, x, y)), default=0)
        measured = max(measured, d)
    return CoarseAffineReport(
        C_hat=c_hat,
        implied_defect_bound=implied,
        measured_defect=measured,
        consistent=Fraction(measured) <= implied,
        argmax=arg,
    )
