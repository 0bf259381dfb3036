"""Exact arithmetic on a fixed catalog of polynomial-growth groups.

Elements are canonical coordinate tuples, so equality is tuple equality:

* free abelian rank d      -- d-tuple of ints
* discrete Heisenberg      -- (x, y, z) with (x,y,z)(x',y',z') = (x+x', y+y', z+z'+x*y')
* infinite dihedral        -- (n, eps) with (n,eps)(m,delta) = (n + (-1)**eps * m, eps ^ delta)
* direct product           -- tuple of component elements

All operations are pure; descriptors, generating sets, subgroups and ball
indexes are immutable after construction.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Iterator, Optional

from .errors import ResourceCapError

FREE_ABELIAN = "free_abelian"
HEISENBERG3 = "heisenberg3"
DIHEDRAL_INFINITE = "dihedral_infinite"
DIRECT_PRODUCT = "direct_product"

#: Canonical coordinates; the concrete shape depends on the group kind.
Element = tuple

DEFAULT_BALL_CAP = 5_000_000


@dataclass(frozen=True)
class GroupDescriptor:
    """A member of the closed group catalog.

    ``d`` is only meaningful for the free abelian kind, ``factors`` only for
    direct products.
    """

    kind: str
    d: int = 0
    factors: tuple["GroupDescriptor", ...] = ()

    def __post_init__(self):
        if self.kind == FREE_ABELIAN:
            if self.d < 1:
                raise ValueError("free abelian rank must be a positive integer")
        elif self.kind == DIRECT_PRODUCT:
            if not self.factors:
                raise ValueError("direct product needs at least one factor")
        elif self.kind not in (HEISENBERG3, DIHEDRAL_INFINITE):
            raise ValueError(f"unknown group kind {self.kind!r}")

    @property
    def abelian_free_rank(self) -> int:
        """Rank of the free part of the Abelianization (dim of G_ab tensor R)."""
        if self.kind == FREE_ABELIAN:
            return self.d
        if self.kind == HEISENBERG3:
            return 2
        if self.kind == DIHEDRAL_INFINITE:
            return 0
        return sum(f.abelian_free_rank for f in self.factors)

    @property
    def is_nilpotent(self) -> bool:
        if self.kind == DIRECT_PRODUCT:
            return all(f.is_nilpotent for f in self.factors)
        return self.kind != DIHEDRAL_INFINITE

    def identity(self) -> Element:
        if self.kind == FREE_ABELIAN:
            return (0,) * self.d
        if self.kind == HEISENBERG3:
            return (0, 0, 0)
        if self.kind == DIHEDRAL_INFINITE:
            return (0, 0)
        return tuple(f.identity() for f in self.factors)

    def contains(self, g) -> bool:
        """Shallow structural check that ``g`` is a valid coordinate tuple."""
        if not isinstance(g, tuple):
            return False
        if self.kind == FREE_ABELIAN:
            return len(g) == self.d and all(isinstance(c, int) for c in g)
        if self.kind == HEISENBERG3:
            return len(g) == 3 and all(isinstance(c, int) for c in g)
        if self.kind == DIHEDRAL_INFINITE:
            return len(g) == 2 and isinstance(g[0], int) and g[1] in (0, 1)
        return len(g) == len(self.factors) and all(
            f.contains(c) for f, c in zip(self.factors, g)
        )

    def check_element(self, g) -> None:
        if not self.contains(g):
            raise TypeError(f"{g!r} is not a valid element for {self.describe()}")

    def describe(self) -> str:
        if self.kind == FREE_ABELIAN:
            return f"Z^{self.d}"
        if self.kind == HEISENBERG3:
            return "H3(Z)"
        if self.kind == DIHEDRAL_INFINITE:
            return "D_inf"
        return " x ".join(f.describe() for f in self.factors)


def free_abelian(d: int) -> GroupDescriptor:
    return GroupDescriptor(FREE_ABELIAN, d=d)


def heisenberg3() -> GroupDescriptor:
    return GroupDescriptor(HEISENBERG3)


def dihedral_infinite() -> GroupDescriptor:
    return GroupDescriptor(DIHEDRAL_INFINITE)


def direct_product(*factors: GroupDescriptor) -> GroupDescriptor:
    return GroupDescriptor(DIRECT_PRODUCT, factors=tuple(factors))


def mul(G: GroupDescriptor, g: Element, h: Element) -> Element:
    """Group product in canonical form."""
    kind = G.kind
    if kind == FREE_ABELIAN:
        return tuple(a + b for a, b in zip(g, h))
    if kind == HEISENBERG3:
        x, y, z = g
        xp, yp, zp = h
        return (x + xp, y + yp, z + zp + x * yp)
    if kind == DIHEDRAL_INFINITE:
        n, e = g
        m, d = h
        return (n + m if e == 0 else n - m, e ^ d)
    return tuple(mul(f, a, b) for f, a, b in zip(G.factors, g, h))


def inv(G: GroupDescriptor, g: Element) -> Element:
    kind = G.kind
    if kind == FREE_ABELIAN:
        return tuple(-a for a in g)
    if kind == HEISENBERG3:
        x, y, z = g
        return (-x, -y, -z + x * y)
    if kind == DIHEDRAL_INFINITE:
        n, e = g
        return (-n if e == 0 else n, e)
    return tuple(inv(f, a) for f, a in zip(G.factors, g))


def group_mul(G: GroupDescriptor, g: Element, h: Element) -> Element:
    """Checked product: validates both operands against the descriptor."""
    G.check_element(g)
    G.check_element(h)
    return mul(G, g, h)


def power(G: GroupDescriptor, g: Element, n: int) -> Element:
    """g**n by binary exponentiation (n may be negative)."""
    if n < 0:
        return power(G, inv(G, g), -n)
    acc = G.identity()
    base = g
    while n:
        if n & 1:
            acc = mul(G, acc, base)
        base = mul(G, base, base)
        n >>= 1
    return acc


def abelianize(G: GroupDescriptor, g: Element) -> tuple[int, ...]:
    """Image of g in the free part of the Abelianization, as an int vector.

    Additive: abelianize(gh) = abelianize(g) + abelianize(h).  For the
    infinite dihedral group the free rank is 0 and the result is empty (the
    torsion part is deliberately not represented).
    """
    kind = G.kind
    if kind == FREE_ABELIAN:
        return g
    if kind == HEISENBERG3:
        return (g[0], g[1])
    if kind == DIHEDRAL_INFINITE:
        return ()
    out: tuple[int, ...] = ()
    for f, c in zip(G.factors, g):
        out = out + abelianize(f, c)
    return out


def ab_basis_lift(G: GroupDescriptor, i: int) -> Element:
    """An element whose Abelianized image is the i-th standard basis vector."""
    rank = G.abelian_free_rank
    if not 0 <= i < rank:
        raise IndexError(f"basis index {i} out of range for rank {rank}")
    if G.kind == FREE_ABELIAN:
        return tuple(1 if j == i else 0 for j in range(G.d))
    if G.kind == HEISENBERG3:
        return (1, 0, 0) if i == 0 else (0, 1, 0)
    if G.kind == DIHEDRAL_INFINITE:
        raise IndexError("rank-0 Abelianization has no basis directions")
    offset = 0
    for j, f in enumerate(G.factors):
        r = f.abelian_free_rank
        if i < offset + r:
            return tuple(
                ab_basis_lift(f, i - offset) if m == j else G.factors[m].identity()
                for m in range(len(G.factors))
            )
        offset += r
    raise AssertionError("unreachable")


@dataclass(frozen=True)
class GeneratingSet:
    """A finite symmetric generating set with printable labels.

    Closed under inverse, deduplicated, and never contains the identity.
    """

    group: GroupDescriptor
    elements: tuple[Element, ...]
    names: tuple[str, ...]

    def __post_init__(self):
        if len(self.elements) != len(self.names):
            raise ValueError("elements and names must be parallel lists")
        seen = set()
        ident = self.group.identity()
        for g in self.elements:
            self.group.check_element(g)
            if g == ident:
                raise ValueError("generating sets must not contain the identity")
            if g in seen:
                raise ValueError(f"duplicate generator {g!r}")
            seen.add(g)
        for g in self.elements:
            if inv(self.group, g) not in seen:
                raise ValueError(f"generating set not symmetric: missing inverse of {g!r}")

    def __iter__(self) -> Iterator[Element]:
        return iter(self.elements)

    def __len__(self) -> int:
        return len(self.elements)

    def name_of(self, g: Element) -> str:
        return self.names[self.elements.index(g)]


def _symmetrize(group, gens: list[tuple[Element, str]]) -> GeneratingSet:
    elements: list[Element] = []
    names: list[str] = []
    for g, name in gens:
        if g not in elements:
            elements.append(g)
            names.append(name)
        gi = inv(group, g)
        if gi not in elements:
            elements.append(gi)
            names.append(name + "^-1")
    return GeneratingSet(group, tuple(elements), tuple(names))


def standard_generators(G: GroupDescriptor) -> GeneratingSet:
    """The default generating set bundled with each catalog kind."""
    if G.kind == FREE_ABELIAN:
        gens = []
        for i in range(G.d):
            e_i = tuple(1 if j == i else 0 for j in range(G.d))
            gens.append((e_i, f"x{i + 1}"))
        return _symmetrize(G, gens)
    if G.kind == HEISENBERG3:
        return _symmetrize(G, [((1, 0, 0), "a"), ((0, 1, 0), "b")])
    if G.kind == DIHEDRAL_INFINITE:
        return _symmetrize(G, [((1, 0), "r"), ((0, 1), "s")])
    # direct product: factor generators embedded coordinatewise
    gens = []
    for i, f in enumerate(G.factors):
        sub = standard_generators(f)
        for g, name in zip(sub.elements, sub.names):
            emb = tuple(
                g if j == i else G.factors[j].identity() for j in range(len(G.factors))
            )
            gens.append((emb, f"f{i + 1}.{name}"))
    return _symmetrize(G, gens)


def king_generators(G: GroupDescriptor) -> GeneratingSet:
    """All nonzero {-1,0,1} vectors; for Z^2 this is the king-move set."""
    if G.kind != FREE_ABELIAN:
        raise ValueError("king-move generators are only defined for free abelian groups")
    signs = {1: "p", 0: "o", -1: "m"}
    gens = []
    for vec in itertools.product((-1, 0, 1), repeat=G.d):
        if any(vec):
            gens.append((vec, "k" + "".join(signs[c] for c in vec)))
    elements = tuple(g for g, _ in gens)
    names = tuple(n for _, n in gens)
    return GeneratingSet(G, elements, names)


@dataclass(frozen=True)
class BallIndex:
    """Word-metric ball: every element of length <= radius with exact lengths.

    ``order`` is the deterministic BFS enumeration order (shells by length,
    sorted within each shell).
    """

    group: GroupDescriptor
    generating_set: GeneratingSet
    radius: int
    lengths: dict  # Element -> int
    order: tuple[Element, ...]

    def __contains__(self, g) -> bool:
        return g in self.lengths

    def __len__(self) -> int:
        return len(self.order)

    def __iter__(self) -> Iterator[Element]:
        return iter(self.order)

    def length(self, g: Element) -> int:
        return self.lengths[g]

    def elements_within(self, r: int) -> list[Element]:
        return [g for g in self.order if self.lengths[g] <= r]


def enumerate_ball(
    G: GroupDescriptor,
    S: GeneratingSet,
    radius: int,
    cap: int = DEFAULT_BALL_CAP,
) -> BallIndex:
    """Breadth-first enumeration of the ball of the given radius.

    Raises ResourceCapError when more than ``cap`` elements would be stored;
    the cap is an error, never a silent truncation.
    """
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    ident = G.identity()
    lengths = {ident: 0}
    order = [ident]
    frontier = [ident]
    for r in range(1, radius + 1):
        nxt = []
        for g in frontier:
            for s in S.elements:
                h = mul(G, g, s)
                if h not in lengths:
                    lengths[h] = r
                    nxt.append(h)
                    if len(lengths) > cap:
                        raise ResourceCapError(
                            f"ball enumeration exceeded cap of {cap} elements "
                            f"at radius {r}"
                        )
        nxt.sort()
        order.extend(nxt)
        frontier = nxt
    return BallIndex(G, S, radius, lengths, tuple(order))


def word_length(
    G: GroupDescriptor,
    g: Element,
    S: GeneratingSet,
    cap: int = 64,
    element_cap: int = DEFAULT_BALL_CAP,
) -> Optional[int]:
    """Exact geodesic word length of g, or None if |g| > cap.

    BFS from the identity; None ("not found") is a value, not a failure.
    """
    ident = G.identity()
    if g == ident:
        return 0
    seen = {ident}
    frontier = [ident]
    for r in range(1, cap + 1):
        nxt = []
        for x in frontier:
            for s in S.elements:
                h = mul(G, x, s)
                if h == g:
                    return r
                if h not in seen:
                    seen.add(h)
                    nxt.append(h)
                    if len(seen) > element_cap:
                        raise ResourceCapError(
                            f"word length search exceeded cap of {element_cap} elements"
                        )
        if not nxt:
            return None
        frontier = nxt
    return None


@dataclass(frozen=True, eq=False)
class MarkedSubgroup:
    """A finite-index subgroup with coset labels and a model group.

    Right-coset convention: G is the disjoint union of H*t over the
    transversal, transversal[0] is the identity, and every g factors as
    g = h * transversal[label(g)] with h in H.

    ``inclusion_ab`` is the integer matrix (rank(parent) rows x rank(model)
    columns) of the induced map on Abelianizations tensored with R.
    """

    parent: GroupDescriptor
    model: GroupDescriptor
    index: int
    transversal: tuple[Element, ...]
    label: Callable[[Element], int]
    to_model: Callable[[Element], Element]
    from_model: Callable[[Element], Element]
    inclusion_ab: tuple[tuple[int, ...], ...]
    name: str = "subgroup"

    def __post_init__(self):
        if len(self.transversal) != self.index:
            raise ValueError("transversal size must equal the index")
        if self.transversal[0] != self.parent.identity():
            raise ValueError("transversal[0] must be the identity")
        if len(self.inclusion_ab) != self.parent.abelian_free_rank:
            raise ValueError("inclusion_ab must have rank(parent) rows")
        for row in self.inclusion_ab:
            if len(row) != self.model.abelian_free_rank:
                raise ValueError("inclusion_ab must have rank(model) columns")

    def member(self, g: Element) -> bool:
        return self.label(g) == 0


def coset_decompose(H: MarkedSubgroup, g: Element) -> tuple[Element, int]:
    """Split g = from_model(h) * transversal[t]; returns (h in model coords, t)."""
    t_index = H.label(g)
    t = H.transversal[t_index]
    h = mul(H.parent, g, inv(H.parent, t))
    if H.label(h) != 0:
        raise ValueError(f"inconsistent subgroup labeling at {g!r}")
    return H.to_model(h), t_index


def subgroup_full(G: GroupDescriptor) -> MarkedSubgroup:
    """H = G with the identity marking (index 1)."""
    rank = G.abelian_free_rank
    eye = tuple(
        tuple(1 if i == j else 0 for j in range(rank)) for i in range(rank)
    )
    return MarkedSubgroup(
        parent=G,
        model=G,
        index=1,
        transversal=(G.identity(),),
        label=lambda g: 0,
        to_model=lambda g: g,
        from_model=lambda m: m,
        inclusion_ab=eye,
        name="full",
    )


def subgroup_mZ(m: int) -> MarkedSubgroup:
    """mZ inside Z, transversal (0, 1, ..., m-1), model Z via k <-> m*k."""
    if m < 1:
        raise ValueError("index must be a positive integer")
    Z = free_abelian(1)
    return MarkedSubgroup(
        parent=Z,
        model=Z,
        index=m,
        transversal=tuple((r,) for r in range(m)),
        label=lambda g: g[0] % m,
        to_model=lambda g: (g[0] // m,),
        from_model=lambda h: (h[0] * m,),
        inclusion_ab=((m,),),
        name=f"{m}Z",
    )


def subgroup_even_sum() -> MarkedSubgroup:
    """Index-2 subgroup {(x, y) : x + y even} of Z^2.

    Model Z^2 via the basis (1, 1), (1, -1); labeled by coordinate-sum parity.
    """
    Z2 = free_abelian(2)

    def to_model(g):
        x, y = g
        return ((x + y) // 2, (x - y) // 2)

    def from_model(h):
        a, b = h
        return (a + b, a - b)

    return MarkedSubgroup(
        parent=Z2,
        model=Z2,
        index=2,
        transversal=((0, 0), (1, 0)),
        label=lambda g: (g[0] + g[1]) % 2,
        to_model=to_model,
        from_model=from_model,
        inclusion_ab=((1, 1), (1, -1)),
        name="mod2_sum",
    )


def subgroup_rotation() -> MarkedSubgroup:
    """The rotation subgroup of the infinite dihedral group, modeled as Z."""
    Dinf = dihedral_infinite()
    return MarkedSubgroup(
        parent=Dinf,
        model=free_abelian(1),
        index=2,
        transversal=((0, 0), (0, 1)),
        label=lambda g: g[1],
        to_model=lambda g: (g[0],),
        from_model=lambda h: (h[0], 0),
        inclusion_ab=(),
        name="rotation",
    )


def nilpotent_core(G: GroupDescriptor) -> MarkedSubgroup:
    """The designated finite-index nilpotent core of a catalog group.

    For nilpotent kinds this is G itself; for the infinite dihedral group it
    is the rotation subgroup.  Direct products containing a dihedral factor
    are not supported.
    """
    if G.is_nilpotent:
        return subgroup_full(G)
    if G.kind == DIHEDRAL_INFINITE:
        return subgroup_rotation()
    raise NotImplementedError(
        "nilpotent core is only provided for nilpotent kinds and D_inf itself"
    )
