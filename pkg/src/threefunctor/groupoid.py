"""Finite groupoids, their unitary representations and Fell absorption.

A groupoid is stored by its arrows with source, target and a composition
table ``(a, b) -> a o b`` defined when ``s(a) == t(b)``. Functions on
objects, arrows and composable pairs form the algebras ``A0``, ``A1`` and
``A2``; the structure maps of the groupoid become homs between them. The
regular representation is assembled from two base change isomorphisms and
the absorption unitary from two projection isomorphisms.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from . import functors as fn
from . import hmod as hm
from . import mutations
from .cvna import Algebra, AtomBijection, FibreSquare, Hom, PreconditionError, fibre_product
from .hmod import Module, ModuleMap
from .linalg import derive_seed, direct_sum, frobenius, make_rng, permutation_matrix, random_unitary, unitarity_residual


class GroupoidError(ValueError):
    """Groupoid or representation data violates an axiom."""


class FaithfulnessError(GroupoidError):
    """A representation has a zero fiber."""


class ConsistencyError(GroupoidError):
    """Fiber rank changes along an arrow."""


@dataclass(frozen=True, eq=False)
class FiniteGroupoid:
    objects: tuple
    arrows: tuple
    source: tuple[int, ...]
    target: tuple[int, ...]
    table: dict
    object_weights: np.ndarray | None = None
    arrow_weights: np.ndarray | None = None
    perms: tuple | None = None  # acting permutation of each arrow, when there is one
    name: str = "groupoid"

    def __post_init__(self):
        n0, n1 = len(self.objects), len(self.arrows)
        if n0 < 1:
            raise GroupoidError("a groupoid needs at least one object")
        if len(self.source) != n1 or len(self.target) != n1:
            raise GroupoidError("source and target must be given for every arrow")
        ow = np.ones(n0) if self.object_weights is None else np.asarray(self.object_weights, dtype=float)
        aw = np.ones(n1) if self.arrow_weights is None else np.asarray(self.arrow_weights, dtype=float)
        if ow.shape != (n0,) or aw.shape != (n1,) or np.any(ow <= 0) or np.any(aw <= 0):
            raise GroupoidError("weights must be positive, one per object and per arrow")
        object.__setattr__(self, "object_weights", ow)
        object.__setattr__(self, "arrow_weights", aw)
        self._validate()

    def _validate(self):
        s, t, tab = self.source, self.target, self.table
        for a, b in self.g2:
            c = tab.get((a, b))
            if c is None:
                raise GroupoidError(f"composition of arrows {a} and {b} is missing")
            if s[c] != s[b] or t[c] != t[a]:
                raise GroupoidError(f"composite of {a} and {b} has wrong endpoints")
        for (a, b) in tab:
            if s[a] != t[b]:
                raise GroupoidError(f"arrows {a} and {b} are not composable")
        for a, b in self.g2:
            for c in range(len(self.arrows)):
                if t[c] == s[b] and tab[(tab[(a, b)], c)] != tab[(a, tab[(b, c)])]:
                    raise GroupoidError("composition is not associative")
        for x in range(len(self.objects)):
            self.identity(x)
        for a in range(len(self.arrows)):
            self.inverse(a)

    @cached_property
    def g2(self) -> tuple[tuple[int, int], ...]:
        """Composable pairs ``(a, b)`` with ``s(a) == t(b)``, in lexicographic order."""
        return tuple(
            (a, b) for a in range(len(self.arrows)) for b in range(len(self.arrows)) if self.source[a] == self.target[b]
        )

    def compose(self, a: int, b: int) -> int:
        return self.table[(a, b)]

    @cached_property
    def _identities(self) -> dict:
        out = {}
        for e in range(len(self.arrows)):
            x = self.source[e]
            if self.target[e] == x and all(
                self.table[(e, b)] == b for b in range(len(self.arrows)) if self.target[b] == x
            ):
                out[x] = e
        return out

    def identity(self, x: int) -> int:
        if x not in self._identities:
            raise GroupoidError(f"object {self.objects[x]!r} has no identity arrow")
        return self._identities[x]

    def inverse(self, a: int) -> int:
        for b in range(len(self.arrows)):
            if self.source[b] == self.target[a] and self.target[b] == self.source[a]:
                left = self.table[(b, a)] == self.identity(self.source[a])
                if left and self.table[(a, b)] == self.identity(self.target[a]):
                    return b
        raise GroupoidError(f"arrow {self.arrows[a]!r} has no inverse")

    def orbits(self) -> list[list[int]]:
        seen, out = set(), []
        for x in range(len(self.objects)):
            if x in seen:
                continue
            orb = sorted({self.target[a] for a in range(len(self.arrows)) if self.source[a] == x})
            seen.update(orb)
            out.append(orb)
        return out

    def with_weights(self, object_weights, arrow_weights) -> "FiniteGroupoid":
        return FiniteGroupoid(
            self.objects, self.arrows, self.source, self.target, self.table,
            object_weights, arrow_weights, self.perms, self.name,
        )

    @property
    def is_group(self) -> bool:
        return len(self.objects) == 1


@dataclass(frozen=True)
class Nerve:
    """Algebras and structure homs of a groupoid."""

    point: Algebra
    a0: Algebra
    a1: Algebra
    a2: Algebra
    s: Hom
    t: Hom
    p: Hom
    m: Hom
    q: Hom
    pi0: Hom
    pi1: Hom
    pi2: Hom


def object_algebra(g: FiniteGroupoid) -> Algebra:
    return Algebra(tuple(("obj", x) for x in range(len(g.objects))))


def nerve_homs(g: FiniteGroupoid) -> Nerve:
    pt = Algebra(("*",))
    a0 = object_algebra(g)
    a1 = Algebra(tuple(("arr", a) for a in range(len(g.arrows))))
    a2 = Algebra(tuple(("pair", a, b) for a, b in g.g2))
    return Nerve(
        pt, a0, a1, a2,
        s=Hom(a0, a1, g.source),
        t=Hom(a0, a1, g.target),
        p=Hom(a1, a2, tuple(a for a, _ in g.g2)),
        m=Hom(a1, a2, tuple(g.compose(a, b) for a, b in g.g2)),
        q=Hom(a1, a2, tuple(b for _, b in g.g2)),
        pi0=Hom(pt, a0, (0,) * a0.size),
        pi1=Hom(pt, a1, (0,) * a1.size),
        pi2=Hom(pt, a2, (0,) * a2.size),
    )


def translation_squares(g: FiniteGroupoid) -> tuple[FibreSquare, FibreSquare, AtomBijection]:
    """The squares over ``s, t`` and over ``t, t`` and the matching of their products.

    The first product is the set of composable pairs itself; the second
    consists of arrows with a common target, matched with composable pairs
    by ``(a, b) -> (a, a o b)``.
    """
    nv = nerve_homs(g)
    sq1 = fibre_product(nv.s, nv.t)
    sq2 = fibre_product(nv.t, nv.t)
    mapping = tuple(sq2.pair_index[(a, g.compose(a, b))] for a, b in sq1.pairs)
    return sq1, sq2, AtomBijection(sq1.product, sq2.product, mapping)


@dataclass(frozen=True, eq=False)
class GRepresentation:
    groupoid: FiniteGroupoid
    bundle: Module
    alpha: tuple[np.ndarray, ...]
    name: str = "representation"

    def validate(self, tol: float = 1e-10) -> None:
        g = self.groupoid
        if self.bundle.algebra.size != len(g.objects):
            raise GroupoidError(f"{self.name}: bundle needs one fiber per object")
        if len(self.alpha) != len(g.arrows):
            raise GroupoidError(f"{self.name}: one matrix per arrow is required")
        d = self.bundle.dims
        for a, mat in enumerate(self.alpha):
            if mat.shape != (d[g.target[a]], d[g.source[a]]):
                raise GroupoidError(f"{self.name}: arrow {g.arrows[a]!r} has a matrix of the wrong shape")
            if unitarity_residual(mat) > tol:
                raise GroupoidError(f"{self.name}: action of arrow {g.arrows[a]!r} is not unitary")
        if self.cocycle_residual() > tol:
            raise GroupoidError(f"{self.name}: action is not multiplicative")

    def cocycle_residual(self) -> float:
        g = self.groupoid
        worst = 0.0
        for a, b in g.g2:
            worst = max(worst, frobenius(self.alpha[g.compose(a, b)] - self.alpha[a] @ self.alpha[b]))
        for x in range(len(g.objects)):
            e = self.alpha[g.identity(x)]
            worst = max(worst, frobenius(e - np.eye(e.shape[0])))
        return worst

    def character(self) -> np.ndarray:
        return np.array([np.trace(a) for a in self.alpha])


def _as_alphas(mats) -> tuple[np.ndarray, ...]:
    return tuple(np.asarray(x, dtype=np.complex128) for x in mats)


def regular_rep(g: FiniteGroupoid) -> GRepresentation:
    """``t_! L2`` with translation ``e_h -> e_(g o h)``, from two base changes."""
    nv = nerve_homs(g)
    sq1, sq2, match = translation_squares(g)
    one = hm.l2(nv.a1)
    bc1 = fn.base_change_iso(sq1, one)  # ind_s res_t L2 -> res_p ind_q L2
    bc2 = fn.base_change_iso(sq2, one)  # ind_t res_t L2 -> res_gbar2 ind_fbar2 L2
    to_pairs = fn.restrict_map(sq1.gbar, fn.ind_unit_iso(sq1.fbar))
    move = fn.restrict_transport(match, sq1.gbar, sq2.gbar, hm.l2(sq1.product))
    from_pairs = fn.restrict_map(sq2.gbar, hm.inverse(fn.ind_unit_iso(sq2.fbar)))
    lam = hm.inverse(bc2) @ from_pairs @ move @ to_pairs @ bc1
    bundle = fn.restrict(nv.t, one)
    return GRepresentation(g, bundle, _as_alphas(lam.blocks), "regular")


def pullback_rep(g: FiniteGroupoid, v_dim: int, alphas: Sequence | None = None, tol: float = 1e-10) -> GRepresentation:
    """Constant-rank bundle ``V`` on every object, trivial action by default."""
    bundle = Module(object_algebra(g), (v_dim,) * len(g.objects))
    if alphas is None:
        alphas = [np.eye(v_dim)] * len(g.arrows)
    rep = GRepresentation(g, bundle, _as_alphas(alphas), "pullback")
    rep.validate(tol)
    return rep


def tensor_reps(r1: GRepresentation, r2: GRepresentation) -> GRepresentation:
    if r1.groupoid is not r2.groupoid:
        raise GroupoidError("representations live on different groupoids")
    bundle = Module(r1.bundle.algebra, tuple(a * b for a, b in zip(r1.bundle.dims, r2.bundle.dims)))
    return GRepresentation(r1.groupoid, bundle, tuple(np.kron(a, b) for a, b in zip(r1.alpha, r2.alpha)), "tensor")


def fell_iso(g: FiniteGroupoid, rep: GRepresentation) -> ModuleMap:
    """Unitary ``V_triv (x) t_! L2 -> V (x) t_! L2``, ``v (x) e_h -> alpha_h v (x) e_h``.

    Raises:
        PreconditionError: if the bundle does not have constant rank.
    """
    if len(set(rep.bundle.dims)) != 1:
        raise PreconditionError("absorption needs a constant-rank bundle; split it with decompose_by_rank")
    nv = nerve_homs(g)
    h = Module(nv.a0, rep.bundle.dims)
    one = hm.l2(nv.a1)
    t = nv.t
    ih = fn.induce(t, h)
    to_res = (
        fn.restrict_map(t, hm.unitor_r(ih))
        @ fn.restrict_map(t, hm.symmetry(one, ih))
        @ fn.projection_iso(t, one, h)
        @ hm.symmetry(h, fn.restrict(t, one))
    )
    alphas = list(rep.alpha)
    mut = mutations.current("cocycle-phase")
    if mut is not None:
        for a in range(len(g.arrows)):
            if a not in g._identities.values():
                alphas[a] = alphas[a] * np.exp(1j * mut.get("theta", 0.5))
                break
    act = ModuleMap(ih, ih, tuple(alphas))
    return hm.inverse(to_res) @ fn.restrict_map(t, act) @ to_res


@dataclass(frozen=True)
class FellReport:
    unitarity: float
    intertwiner: float
    character_match: bool | None


def fell_check(g: FiniteGroupoid, rep: GRepresentation) -> FellReport:
    """Unitarity and intertwining of the absorption unitary, plus characters for groups."""
    u = fell_iso(g, rep)
    reg = regular_rep(g)
    worst = 0.0
    for a in range(len(g.arrows)):
        x, y = g.source[a], g.target[a]
        lam = reg.alpha[a]
        lhs = np.kron(rep.alpha[a], lam) @ u.blocks[x]
        rhs = u.blocks[y] @ np.kron(np.eye(rep.bundle.dims[x]), lam)
        worst = max(worst, frobenius(lhs - rhs))
    match = None
    if g.is_group:
        d = rep.bundle.dims[0]
        oracle = np.array([d * fixed_points(g, a) for a in range(len(g.arrows))])
        twisted = np.array([np.trace(np.kron(rep.alpha[a], reg.alpha[a])) for a in range(len(g.arrows))])
        plain = np.array([np.trace(np.kron(np.eye(d), reg.alpha[a])) for a in range(len(g.arrows))])
        match = bool(
            np.all(np.abs(twisted - np.round(twisted.real)) < 1e-6)
            and np.array_equal(np.round(twisted.real).astype(int), oracle)
            and np.array_equal(np.round(plain.real).astype(int), oracle)
        )
    return FellReport(hm.unitary_residual(u), worst, match)


def fixed_points(g: FiniteGroupoid, a: int) -> int:
    """Number of ``h`` with ``a o h == h``, read off the composition table."""
    return sum(1 for b in range(len(g.arrows)) if g.target[b] == g.source[a] and g.compose(a, b) == b)


def restrict_groupoid(g: FiniteGroupoid, objects: Sequence[int]) -> tuple[FiniteGroupoid, list[int]]:
    """Full subgroupoid on ``objects`` and the arrows it keeps."""
    objs = sorted(objects)
    opos = {x: n for n, x in enumerate(objs)}
    keep = [a for a in range(len(g.arrows)) if g.source[a] in opos and g.target[a] in opos]
    apos = {a: n for n, a in enumerate(keep)}
    table = {(apos[a], apos[b]): apos[g.compose(a, b)] for a in keep for b in keep if g.source[a] == g.target[b]}
    sub = FiniteGroupoid(
        tuple(g.objects[x] for x in objs),
        tuple(g.arrows[a] for a in keep),
        tuple(opos[g.source[a]] for a in keep),
        tuple(opos[g.target[a]] for a in keep),
        table,
        g.object_weights[objs],
        g.arrow_weights[keep],
        None if g.perms is None else tuple(g.perms[a] for a in keep),
        g.name,
    )
    return sub, keep


def decompose_by_rank(g: FiniteGroupoid, rep: GRepresentation) -> list[tuple[FiniteGroupoid, GRepresentation]]:
    """Split objects by fiber rank into full subgroupoids of constant rank."""
    dims = rep.bundle.dims
    if any(d == 0 for d in dims):
        raise FaithfulnessError("every fiber must be nonzero")
    for a in range(len(g.arrows)):
        if dims[g.source[a]] != dims[g.target[a]]:
            raise ConsistencyError(f"rank changes along arrow {g.arrows[a]!r}")
    parts = []
    for d in sorted(set(dims)):
        objs = [x for x in range(len(dims)) if dims[x] == d]
        sub, keep = restrict_groupoid(g, objs)
        bundle = Module(object_algebra(sub), (d,) * len(objs))
        parts.append((sub, GRepresentation(sub, bundle, tuple(rep.alpha[a] for a in keep), rep.name)))
    return parts


# generators


def _close(gens: Sequence[tuple], n: int) -> list[tuple]:
    ident = tuple(range(n))
    elems, frontier = {ident}, [ident]
    while frontier:
        nxt = []
        for x in frontier:
            for gen in gens:
                y = tuple(gen[x[i]] for i in range(n))
                if y not in elems:
                    elems.add(y)
                    nxt.append(y)
        frontier = nxt
    return sorted(elems)


def _pcompose(a: tuple, b: tuple) -> tuple:
    return tuple(a[b[i]] for i in range(len(a)))


def permutation_group(gens: Sequence[Sequence[int]], n: int, name: str = "group") -> FiniteGroupoid:
    """One-object groupoid of the permutation group generated by ``gens``."""
    elems = _close([tuple(x) for x in gens], n)
    idx = {e: k for k, e in enumerate(elems)}
    table = {(a, b): idx[_pcompose(elems[a], elems[b])] for a in range(len(elems)) for b in range(len(elems))}
    k = len(elems)
    return FiniteGroupoid(("*",), tuple(elems), (0,) * k, (0,) * k, table, perms=tuple(elems), name=name)


def cyclic_group(n: int) -> FiniteGroupoid:
    return permutation_group([tuple((i + 1) % n for i in range(n))], n, f"C{n}")


def symmetric_group_3() -> FiniteGroupoid:
    return permutation_group([(1, 0, 2), (1, 2, 0)], 3, "S3")


def klein_group() -> FiniteGroupoid:
    return permutation_group([(1, 0, 3, 2), (2, 3, 0, 1)], 4, "Z2xZ2")


def trivial_groupoid(n: int) -> FiniteGroupoid:
    table = {(a, a): a for a in range(n)}
    pts = tuple(range(n))
    return FiniteGroupoid(pts, tuple(("id", x) for x in pts), pts, pts, table, name=f"trivial{n}")


def pair_groupoid(n: int) -> FiniteGroupoid:
    """All arrows ``x -> y`` between ``n`` points, one for each ordered pair."""
    arrows = [(y, x) for y in range(n) for x in range(n)]
    idx = {a: k for k, a in enumerate(arrows)}
    table = {}
    for (z, y), a in idx.items():
        for (y2, x), b in idx.items():
            if y2 == y:
                table[(a, b)] = idx[(z, x)]
    return FiniteGroupoid(
        tuple(range(n)), tuple(arrows), tuple(x for _, x in arrows), tuple(y for y, _ in arrows), table, name=f"pair{n}"
    )


def action_groupoid(gens: Sequence[Sequence[int]], n: int, name: str = "action") -> FiniteGroupoid:
    """Arrows ``(g, x): x -> g x`` for a permutation group on ``n`` points."""
    elems = _close([tuple(x) for x in gens], n)
    arrows = [(e, x) for e in elems for x in range(n)]
    idx = {a: k for k, a in enumerate(arrows)}
    table = {}
    for (h, y), a in idx.items():
        for (e, x), b in idx.items():
            if e[x] == y:
                table[(a, b)] = idx[(_pcompose(h, e), x)]
    return FiniteGroupoid(
        tuple(range(n)),
        tuple(arrows),
        tuple(x for _, x in arrows),
        tuple(e[x] for e, x in arrows),
        table,
        perms=tuple(e for e, _ in arrows),
        name=name,
    )


def corpus() -> list[FiniteGroupoid]:
    """Groupoids used by the absorption suite."""
    out = [cyclic_group(n) for n in range(1, 9)]
    out += [symmetric_group_3(), klein_group()]
    out += [pair_groupoid(n) for n in range(1, 6)]
    out += [
        action_groupoid([(1, 0)], 2, "C2 on 2"),
        action_groupoid([(1, 0, 2)], 3, "C2 on 3"),
        action_groupoid([(1, 2, 0)], 3, "C3 on 3"),
        action_groupoid([(1, 2, 3, 0)], 4, "C4 on 4"),
        action_groupoid([(1, 0, 3, 2), (2, 3, 0, 1)], 4, "Z2xZ2 on 4"),
        action_groupoid([(1, 0, 3, 2)], 4, "C2 on 4"),
    ]
    return out


def _isotropy_characters(g: FiniteGroupoid, arrows: list[int]) -> list[dict]:
    """All one-dimensional characters of the isotropy group on ``arrows``."""
    order = len(arrows)
    roots = [np.exp(2j * np.pi * k / order) for k in range(order)]
    # small generating set, chosen greedily
    gens = []
    ident = [a for a in arrows if all(g.compose(a, b) == b for b in arrows)][0]
    span = {ident}
    for a in arrows:
        if a in span:
            continue
        gens.append(a)
        frontier = list(span)
        while frontier:
            nxt = []
            for x in frontier:
                for y in gens:
                    z = g.compose(y, x)
                    if z not in span:
                        span.add(z)
                        nxt.append(z)
            frontier = nxt
    chars = []
    for vals in itertools.product(roots, repeat=len(gens)):
        chi = {ident: 1.0 + 0j}
        frontier, ok = [ident], True
        while frontier and ok:
            nxt = []
            for x in frontier:
                for gen, v in zip(gens, vals):
                    z = g.compose(gen, x)
                    val = v * chi[x]
                    if z in chi:
                        if abs(chi[z] - val) > 1e-9:
                            ok = False
                            break
                    else:
                        chi[z] = val
                        nxt.append(z)
                if not ok:
                    break
            frontier = nxt
        if ok and all(abs(chi[g.compose(a, b)] - chi[a] * chi[b]) < 1e-9 for a in arrows for b in arrows):
            chars.append(chi)
    return chars


def random_rep(g: FiniteGroupoid, rank: int, rng: np.random.Generator) -> GRepresentation:
    """Random unitary representation of constant rank.

    On each orbit the action is a random unitary conjugate of a sum of
    characters of the isotropy group (and its permutation action when it
    fits), transported along a spanning tree with random unitaries.
    """
    n1 = len(g.arrows)
    alphas: list = [None] * n1
    for orbit in g.orbits():
        x0 = orbit[0]
        tree = {y: next(a for a in range(n1) if g.source[a] == x0 and g.target[a] == y) for y in orbit}
        iso = [a for a in range(n1) if g.source[a] == x0 and g.target[a] == x0]
        chars = _isotropy_characters(g, iso)
        use_perm = g.perms is not None and len(g.perms[0]) <= rank and rng.random() < 0.5
        blocks_needed = rank - (len(g.perms[0]) if use_perm else 0)
        picks = [chars[int(rng.integers(len(chars)))] for _ in range(blocks_needed)]
        u0 = random_unitary(rank, rng)

        def rho(k: int) -> np.ndarray:
            diag = [chi[k] for chi in picks]
            parts = [np.diag(diag)] if diag else []
            if use_perm:
                parts.append(permutation_matrix(g.perms[k]))
            return u0 @ direct_sum(parts) @ u0.conj().T

        frames = {y: random_unitary(rank, rng) for y in orbit}
        for a in range(n1):
            x, y = g.source[a], g.target[a]
            if x not in frames:
                continue
            k = g.compose(g.inverse(tree[y]), g.compose(a, tree[x]))
            alphas[a] = frames[y] @ rho(k) @ frames[x].conj().T
    bundle = Module(object_algebra(g), (rank,) * len(g.objects))
    return GRepresentation(g, bundle, _as_alphas(alphas), "random")


@dataclass(frozen=True)
class FellResult:
    groupoid: str
    seed: int
    rank: int
    unitarity: float
    intertwiner: float
    cocycle: float
    character_match: bool | None


def run_fell_suite(seed: int = 0, reps_per_groupoid: int = 5, max_rank: int = 3, groupoids=None) -> list[FellResult]:
    out = []
    for n, g in enumerate(groupoids if groupoids is not None else corpus()):
        for k in range(reps_per_groupoid):
            sub = derive_seed(seed, 99, n, k)
            rng = make_rng(sub)
            rank = 1 + k % max_rank
            rep = random_rep(g, rank, rng)
            rep.validate()
            rep_check = fell_check(g, rep)
            out.append(
                FellResult(g.name, sub, rank, rep_check.unitarity, rep_check.intertwiner,
                           regular_rep(g).cocycle_residual(), rep_check.character_match)
            )
    return out
