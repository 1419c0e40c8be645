"""Restriction, induction and their structure isomorphisms.

For ``f: B -> A`` (a hom of algebras, stored as a map from A-atoms to
B-atoms) restriction views an A-module over B by summing fibers, and
induction pulls fibers back along ``f``. Every natural isomorphism here is
built once at the standard form and then extended to arbitrary modules by
:func:`extend_by_generator`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .cvna import (
    Algebra,
    AlgebraMismatch,
    AtomBijection,
    FibreSquare,
    Hom,
    StructureError,
    compose,
    identity_hom,
)
from .hmod import (
    Module,
    ModuleMap,
    dual_map,
    dual_module,
    fuse,
    fuse_maps,
    identity,
    inverse,
    l2,
    lambda_iso,
    map_residual,
    unitary_residual,
    unitor_r,
)
from .linalg import direct_sum


def restrict(f: Hom, m: Module) -> Module:
    if m.algebra != f.target:
        raise AlgebraMismatch("restriction needs a module over the hom's target")
    return Module(f.source, tuple(sum(m.dims[i] for i in fib) for fib in f.fibers))


def restrict_map(f: Hom, h: ModuleMap) -> ModuleMap:
    if h.source.algebra != f.target:
        raise AlgebraMismatch("restriction needs a map over the hom's target")
    blocks = tuple(direct_sum([h.blocks[i] for i in fib]) for fib in f.fibers)
    return ModuleMap(restrict(f, h.source), restrict(f, h.target), blocks)


def induce(f: Hom, n: Module) -> Module:
    if n.algebra != f.source:
        raise AlgebraMismatch("induction needs a module over the hom's source")
    return Module(f.target, tuple(n.dims[j] for j in f.spec))


def induce_map(f: Hom, h: ModuleMap) -> ModuleMap:
    if h.source.algebra != f.source:
        raise AlgebraMismatch("induction needs a map over the hom's source")
    return ModuleMap(induce(f, h.source), induce(f, h.target), tuple(h.blocks[j] for j in f.spec))


def _block_shuffle(algebra: Algebra, src: Sequence[Sequence[tuple]], tgt: Sequence[Sequence[tuple]]) -> list:
    """Blocks moving labelled summands between two orderings.

    ``src[c]`` and ``tgt[c]`` list ``(key, dim)`` summands of fiber ``c``;
    the summand with a given key is carried over unchanged.
    """
    blocks = []
    for c in range(algebra.size):
        s_off, off = {}, 0
        for key, d in src[c]:
            s_off[key] = (off, d)
            off += d
        n_src = off
        n_tgt = sum(d for _, d in tgt[c])
        b = np.zeros((n_tgt, n_src))
        off = 0
        for key, d in tgt[c]:
            so, sd = s_off[key]
            if sd != d:
                raise StructureError("summand dimensions disagree")
            b[off:off + d, so:so + d] = np.eye(d)
            off += d
        blocks.append(b)
    return blocks


def res_compositor(f: Hom, g: Hom, m: Module) -> ModuleMap:
    """``res_g res_f m -> res_(f g) m`` for ``g: C -> B``, ``f: B -> A``."""
    fg = compose(f, g)
    src = [[(a, m.dims[a]) for b in g.fibers[c] for a in f.fibers[b]] for c in range(g.source.size)]
    tgt = [[(a, m.dims[a]) for a in fg.fibers[c]] for c in range(g.source.size)]
    blocks = _block_shuffle(g.source, src, tgt)
    return ModuleMap(restrict(g, restrict(f, m)), restrict(fg, m), tuple(blocks))


def ind_compositor(f: Hom, g: Hom, n: Module) -> ModuleMap:
    """``ind_f ind_g n -> ind_(f g) n``."""
    fg = compose(f, g)
    src = induce(f, induce(g, n))
    tgt = induce(fg, n)
    return ModuleMap(src, tgt, tuple(np.eye(d) for d in tgt.dims))


def res_identitor(m: Module) -> ModuleMap:
    return ModuleMap(restrict(identity_hom(m.algebra), m), m, tuple(np.eye(d) for d in m.dims))


def ind_identitor(n: Module) -> ModuleMap:
    return ModuleMap(induce(identity_hom(n.algebra), n), n, tuple(np.eye(d) for d in n.dims))


def ind_unit_iso(f: Hom) -> ModuleMap:
    """``ind_f L2(B) -> L2(A)``."""
    return ModuleMap(induce(f, l2(f.source)), l2(f.target), tuple(np.eye(1) for _ in range(f.target.size)))


@dataclass(frozen=True)
class Bimodule:
    """A functor's value at the standard form, with its atom labels.

    ``module`` is ``F(L2(left))`` over the output algebra; ``labels[c]`` gives,
    for each basis vector of fiber ``c``, the atom of ``left`` it comes from.
    Then ``F(m)`` has fiber ``c`` equal to the sum over basis vectors ``v`` of
    ``m`` at ``labels[c][v]``.
    """

    left: Algebra
    module: Module
    labels: tuple[tuple[int, ...], ...]

    def apply(self, m: Module) -> Module:
        if m.algebra != self.left:
            raise AlgebraMismatch("module lives over the wrong algebra")
        return Module(self.module.algebra, tuple(sum(m.dims[a] for a in lab) for lab in self.labels))

    def apply_map(self, h: ModuleMap) -> ModuleMap:
        blocks = tuple(direct_sum([h.blocks[a] for a in lab]) for lab in self.labels)
        return ModuleMap(self.apply(h.source), self.apply(h.target), blocks)


def identity_bimodule(a: Algebra) -> Bimodule:
    return Bimodule(a, l2(a), tuple((i,) for i in range(a.size)))


def res_bimodule(f: Hom) -> Bimodule:
    return Bimodule(f.target, restrict(f, l2(f.target)), tuple(tuple(fib) for fib in f.fibers))


def ind_bimodule(f: Hom) -> Bimodule:
    return Bimodule(f.source, induce(f, l2(f.source)), tuple((j,) for j in f.spec))


def fuse_left_bimodule(x: Module) -> Bimodule:
    """The functor ``x (x) -``."""
    a = x.algebra
    return Bimodule(a, fuse(x, l2(a)), tuple((i,) * x.dims[i] for i in range(a.size)))


def compose_bimodules(outer: Bimodule, inner: Bimodule) -> Bimodule:
    """Generator of ``outer o inner``."""
    if outer.left != inner.module.algebra:
        raise AlgebraMismatch("bimodules are not composable")
    labels = tuple(
        tuple(a for b in lab for a in inner.labels[b]) for lab in outer.labels
    )
    return Bimodule(inner.left, outer.apply(inner.module), labels)


def extend_by_generator(
    eta0: ModuleMap, source: Bimodule, target: Bimodule, m: Module, tol: float = 1e-12
) -> ModuleMap:
    """Component at ``m`` of the transformation with generator component ``eta0``.

    Each entry of ``eta0`` between basis vectors labelled by the same atom
    ``a`` becomes that entry times the identity of ``m`` at ``a``.
    """
    if eta0.source != source.module or eta0.target != target.module:
        raise StructureError("generator component does not match the functors")
    if source.left != target.left:
        raise AlgebraMismatch("functors start from different algebras")
    src, tgt = source.apply(m), target.apply(m)
    blocks = []
    for c in range(eta0.source.algebra.size):
        e = eta0.blocks[c]
        sl = np.asarray(source.labels[c], dtype=int)
        tl = np.asarray(target.labels[c], dtype=int)
        if e.size and np.any(np.abs(e[tl[:, None] != sl[None, :]]) > tol):
            raise StructureError("generator component mixes atoms of the input algebra")
        s_off = np.concatenate([[0], np.cumsum([m.dims[a] for a in sl])]).astype(int)
        t_off = np.concatenate([[0], np.cumsum([m.dims[a] for a in tl])]).astype(int)
        b = np.zeros((tgt.dims[c], src.dims[c]), dtype=np.complex128)
        for a in set(sl.tolist()) & set(tl.tolist()):
            d = m.dims[a]
            if d == 0:
                continue
            cols = np.flatnonzero(sl == a)
            rows = np.flatnonzero(tl == a)
            rr = np.concatenate([t_off[w] + np.arange(d) for w in rows])
            cc = np.concatenate([s_off[v] + np.arange(d) for v in cols])
            b[np.ix_(rr, cc)] = np.kron(e[np.ix_(rows, cols)], np.eye(d))
        blocks.append(b)
    return ModuleMap(src, tgt, tuple(blocks))


def projection_source(f: Hom, m: Module) -> Bimodule:
    return fuse_left_bimodule(restrict(f, m))


def projection_target(f: Hom, m: Module) -> Bimodule:
    return compose_bimodules(res_bimodule(f), compose_bimodules(fuse_left_bimodule(m), ind_bimodule(f)))


def projection_at_generator(f: Hom, m: Module) -> ModuleMap:
    """``res_f m (x) L2(B) -> res_f(m (x) ind_f L2(B))`` built from unitors."""
    step1 = unitor_r(restrict(f, m))
    step2 = restrict_map(f, inverse(unitor_r(m)))
    step3 = restrict_map(f, fuse_maps(identity(m), inverse(ind_unit_iso(f))))
    return step3 @ step2 @ step1


def projection_iso(f: Hom, m: Module, n: Module) -> ModuleMap:
    """``res_f(m) (x)_B n -> res_f(m (x)_A ind_f n)``."""
    return extend_by_generator(projection_at_generator(f, m), projection_source(f, m), projection_target(f, m), n)


def ind_mult_at_generator(f: Hom, m: Module) -> ModuleMap:
    """``ind_f(m (x) L2(B)) -> ind_f m (x) ind_f L2(B)`` built from unitors."""
    im = induce(f, m)
    step1 = induce_map(f, unitor_r(m))
    step2 = inverse(unitor_r(im))
    step3 = fuse_maps(identity(im), inverse(ind_unit_iso(f)))
    return step3 @ step2 @ step1


def ind_mult_iso(f: Hom, m: Module, n: Module) -> ModuleMap:
    """``ind_f(m (x) n) -> ind_f m (x) ind_f n``."""
    src = compose_bimodules(ind_bimodule(f), fuse_left_bimodule(m))
    tgt = compose_bimodules(fuse_left_bimodule(induce(f, m)), ind_bimodule(f))
    return extend_by_generator(ind_mult_at_generator(f, m), src, tgt, n)


def descend(f: Hom, x: Module, y: Module, t: ModuleMap) -> tuple[ModuleMap, float]:
    """Read a map ``res_f x -> res_f y`` as a map ``x -> y``.

    Returns the diagonal part and the norm of what lies off it (zero exactly
    when ``t`` commutes with the larger algebra).
    """
    if t.source != restrict(f, x) or t.target != restrict(f, y):
        raise StructureError("map is not between restrictions")
    blocks = [None] * f.target.size
    off = 0.0
    for c, fib in enumerate(f.fibers):
        rs = np.concatenate([[0], np.cumsum([y.dims[a] for a in fib])]).astype(int)
        cs = np.concatenate([[0], np.cumsum([x.dims[a] for a in fib])]).astype(int)
        blk = t.blocks[c].copy()
        for n, a in enumerate(fib):
            sub = blk[rs[n]:rs[n + 1], cs[n]:cs[n + 1]]
            blocks[a] = sub.copy()
            blk[rs[n]:rs[n + 1], cs[n]:cs[n + 1]] = 0
        off += float(np.sum(np.abs(blk) ** 2))
    return ModuleMap(x, y, tuple(blocks)), float(np.sqrt(off))


def base_change_source(sq: FibreSquare) -> Bimodule:
    return compose_bimodules(ind_bimodule(sq.f), res_bimodule(sq.g))


def base_change_target(sq: FibreSquare) -> Bimodule:
    return compose_bimodules(res_bimodule(sq.gbar), ind_bimodule(sq.fbar))


def base_change_at_generator(sq: FibreSquare) -> ModuleMap:
    """``ind_f res_g L2(B) -> res_gbar ind_fbar L2(B)`` through the fibre product."""
    x = induce(sq.f, restrict(sq.g, l2(sq.b)))
    y = restrict(sq.gbar, l2(sq.product))
    lam, _ = descend(sq.f, x, y, _lambda_between_restrictions(sq, x, y))
    return restrict_map(sq.gbar, inverse(ind_unit_iso(sq.fbar))) @ lam


def _lambda_between_restrictions(sq: FibreSquare, x: Module, y: Module) -> ModuleMap:
    # the fusion over C is res_f x, and res_diagonal L2(P) is res_f res_gbar L2(P)
    lam = lambda_iso(sq)
    comp = res_compositor(sq.gbar, sq.f, l2(sq.product))
    if comp.target != lam.target or lam.source != restrict(sq.f, x):
        raise StructureError("fusion of standard forms has an unexpected layout")
    return ModuleMap(restrict(sq.f, x), restrict(sq.f, y), (inverse(comp) @ lam).blocks)


def base_change_iso(sq: FibreSquare, m: Module) -> ModuleMap:
    """``ind_f res_g m -> res_gbar ind_fbar m``."""
    return extend_by_generator(base_change_at_generator(sq), base_change_source(sq), base_change_target(sq), m)


def xi_iso(f: Hom, m: Module) -> ModuleMap:
    """``res_f D m -> D res_f m``."""
    src = restrict(f, dual_module(m))
    return ModuleMap(src, dual_module(restrict(f, m)), tuple(np.eye(d) for d in src.dims))


def zeta_iso(f: Hom, n: Module) -> ModuleMap:
    """``ind_f D n -> D ind_f n``."""
    src = induce(f, dual_module(n))
    return ModuleMap(src, dual_module(induce(f, n)), tuple(np.eye(d) for d in src.dims))


def xi_extended(f: Hom, m: Module) -> ModuleMap:
    """:func:`xi_iso` obtained from its value at the standard form."""
    b = res_bimodule(f)
    return extend_by_generator(xi_iso(f, l2(f.target)), b, b, m)


def zeta_extended(f: Hom, n: Module) -> ModuleMap:
    b = ind_bimodule(f)
    return extend_by_generator(zeta_iso(f, l2(f.source)), b, b, n)


def transport_module(u: AtomBijection, x: Module) -> Module:
    if x.algebra != u.source:
        raise AlgebraMismatch("module is not over the bijection's source")
    dims = [0] * u.target.size
    for p, q in enumerate(u.mapping):
        dims[q] = x.dims[p]
    return Module(u.target, tuple(dims))


def transport_map(u: AtomBijection, h: ModuleMap) -> ModuleMap:
    blocks = [None] * u.target.size
    for p, q in enumerate(u.mapping):
        blocks[q] = h.blocks[p]
    return ModuleMap(transport_module(u, h.source), transport_module(u, h.target), tuple(blocks))


def restrict_transport(u: AtomBijection, h_src: Hom, h_tgt: Hom, x: Module) -> ModuleMap:
    """``res_(h_src) x -> res_(h_tgt) (u_* x)`` when ``h_tgt o u = h_src``."""
    if h_src.target != u.source or h_tgt.target != u.target or h_src.source != h_tgt.source:
        raise AlgebraMismatch("homs do not match the bijection")
    for p, q in enumerate(u.mapping):
        if h_src.spec[p] != h_tgt.spec[q]:
            raise StructureError("bijection does not commute with the homs")
    y = transport_module(u, x)
    src = [[(p, x.dims[p]) for p in h_src.fibers[c]] for c in range(h_src.source.size)]
    inv = u.inverse().mapping
    tgt = [[(inv[q], y.dims[q]) for q in h_tgt.fibers[c]] for c in range(h_tgt.source.size)]
    return ModuleMap(restrict(h_src, x), restrict(h_tgt, y), tuple(_block_shuffle(h_src.source, src, tgt)))


@dataclass(frozen=True)
class NaturalIso:
    """A natural isomorphism ``F => G`` given by its components."""

    description: str
    component_at: Callable[[Module], ModuleMap]
    source_functor: Callable[[ModuleMap], ModuleMap]
    target_functor: Callable[[ModuleMap], ModuleMap]
    contravariant: bool = False

    def __call__(self, m: Module) -> ModuleMap:
        return self.component_at(m)

    def naturality_residual(self, h: ModuleMap) -> float:
        if self.contravariant:
            lhs = self.target_functor(h) @ self.component_at(h.target)
            rhs = self.component_at(h.source) @ self.source_functor(h)
        else:
            lhs = self.target_functor(h) @ self.component_at(h.source)
            rhs = self.component_at(h.target) @ self.source_functor(h)
        return map_residual(lhs, rhs)

    def unitarity_residual(self, m: Module) -> float:
        return unitary_residual(self.component_at(m))


def projection_natural(f: Hom, m: Module) -> NaturalIso:
    return NaturalIso(
        "projection in the second variable",
        lambda n: projection_iso(f, m, n),
        lambda h: fuse_maps(identity(restrict(f, m)), h),
        lambda h: restrict_map(f, fuse_maps(identity(m), induce_map(f, h))),
    )


def base_change_natural(sq: FibreSquare) -> NaturalIso:
    return NaturalIso(
        "base change",
        lambda m: base_change_iso(sq, m),
        lambda h: induce_map(sq.f, restrict_map(sq.g, h)),
        lambda h: restrict_map(sq.gbar, induce_map(sq.fbar, h)),
    )


def ind_mult_natural(f: Hom, m: Module) -> NaturalIso:
    return NaturalIso(
        "monoidality of induction",
        lambda n: ind_mult_iso(f, m, n),
        lambda h: induce_map(f, fuse_maps(identity(m), h)),
        lambda h: fuse_maps(identity(induce(f, m)), induce_map(f, h)),
    )


def xi_natural(f: Hom) -> NaturalIso:
    return NaturalIso(
        "restriction commutes with duality",
        lambda m: xi_iso(f, m),
        lambda h: restrict_map(f, dual_map(h)),
        lambda h: dual_map(restrict_map(f, h)),
        contravariant=True,
    )


def zeta_natural(f: Hom) -> NaturalIso:
    return NaturalIso(
        "induction commutes with duality",
        lambda n: zeta_iso(f, n),
        lambda h: induce_map(f, dual_map(h)),
        lambda h: dual_map(induce_map(f, h)),
        contravariant=True,
    )
