"""Randomised verification of every coherence diagram.

Each check draws an instance from a per-trial seed, evaluates the two
composites of a diagram as module maps and records the Frobenius distance.
Checks on the module-valued diagrams run twice on the same homs: once with
every module argument set to the standard form (the generator) and once with
random modules (the extension). A natural isomorphism is determined by its
generator component, so the two runs must agree on pass or fail.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import functors as fn
from . import hmod as hm
from .cvna import (
    AlgebraElement,
    AtomBijection,
    CondExp,
    FibreSquare,
    State,
    StructureError,
    ce_from_positive_map,
    ce_identity_check,
    compose,
    fibre_associator,
    fibre_map,
    fibre_product,
    fibre_swap,
    fibre_unitor,
    fibre_unitor_left,
    identity_bijection,
    identity_hom,
    mu_independence_check,
    random_algebra,
    random_hom,
    random_weights,
    sqrt_ce,
    sqrt_ce_via_state,
    transpose_square,
)
from .hmod import Module, ModuleMap, fuse, fuse_maps, identity, inverse, l2, map_residual
from .linalg import DimensionError, Tolerance, derive_seed, frobenius, make_rng


@dataclass(frozen=True)
class CheckResult:
    check_id: str
    instance_seed: int
    residual: float
    passed: bool
    dims: tuple[int, ...]
    level: str = "extended"


@dataclass(frozen=True)
class SuiteConfig:
    seed: int = 0
    trials: int = 200
    max_atoms: int = 5
    max_fiber_dim: int = 3
    tolerance: Tolerance = field(default_factory=lambda: Tolerance(1e-9))

    def __post_init__(self):
        if self.trials < 1 or self.max_atoms < 1 or self.max_fiber_dim < 1:
            raise ValueError("trials and size bounds must be at least 1")


@dataclass(frozen=True)
class Instance:
    rng: np.random.Generator
    cfg: SuiteConfig
    generator: bool

    def algebra(self):
        return random_algebra(self.rng, self.cfg.max_atoms)

    def hom(self, source, target):
        return random_hom(self.rng, source, target)

    def module(self, algebra) -> Module:
        # drawn in both modes so the two runs consume the same randomness
        m = hm.random_module(self.rng, algebra, self.cfg.max_fiber_dim)
        return l2(algebra) if self.generator else m


def _dims(*xs) -> tuple[int, ...]:
    out = []
    for x in xs:
        if isinstance(x, ModuleMap):
            out.extend([x.target.total, x.source.total])
        elif isinstance(x, Module):
            out.append(x.total)
        else:
            out.append(int(x))
    return tuple(out)


def _compare(h: ModuleMap, k: ModuleMap) -> tuple[float, tuple[int, ...]]:
    return map_residual(h, k), _dims(h)


def _retry(draw: Callable, tries: int = 200):
    for _ in range(tries):
        try:
            return draw()
        except StructureError:
            continue
    raise StructureError("could not draw an instance with a nonempty fibre product")


def _square(inst: Instance) -> FibreSquare:
    def draw():
        c, a, b = inst.algebra(), inst.algebra(), inst.algebra()
        return fibre_product(inst.hom(c, a), inst.hom(c, b))

    return _retry(draw)


# projection diagrams


def _projection_identity(inst: Instance):
    a = inst.algebra()
    ida = identity_hom(a)
    m, n = inst.module(a), inst.module(a)
    top = inverse(fn.res_identitor(fuse(m, n))) @ fuse_maps(fn.res_identitor(m), identity(n))
    left = fn.restrict_map(ida, fuse_maps(identity(m), fn.ind_identitor(n))) @ fn.projection_iso(ida, m, n)
    return _compare(top, left)


def _projection_composition(inst: Instance):
    a, b, c = inst.algebra(), inst.algebra(), inst.algebra()
    f, g = inst.hom(b, a), inst.hom(c, b)
    m, n = inst.module(a), inst.module(c)
    fg = compose(f, g)
    x = fuse(m, fn.induce(f, fn.induce(g, n)))
    path1 = (
        fn.restrict_map(fg, fuse_maps(identity(m), fn.ind_compositor(f, g, n)))
        @ fn.res_compositor(f, g, x)
        @ fn.restrict_map(g, fn.projection_iso(f, m, fn.induce(g, n)))
        @ fn.projection_iso(g, fn.restrict(f, m), n)
    )
    path2 = fn.projection_iso(fg, m, n) @ fuse_maps(fn.res_compositor(f, g, m), identity(n))
    return _compare(path1, path2)


def _projection_unit(inst: Instance):
    a, b = inst.algebra(), inst.algebra()
    f = inst.hom(b, a)
    m = inst.module(a)
    path1 = fn.restrict_map(f, inverse(hm.unitor_r(m))) @ hm.unitor_r(fn.restrict(f, m))
    path2 = fn.restrict_map(f, fuse_maps(identity(m), fn.ind_unit_iso(f))) @ fn.projection_iso(f, m, l2(b))
    return _compare(path1, path2)


def _projection_tensor(inst: Instance):
    a, b = inst.algebra(), inst.algebra()
    f = inst.hom(b, a)
    m, n, p = inst.module(a), inst.module(b), inst.module(b)
    rm, im, ip = fn.restrict(f, m), fn.induce(f, n), fn.induce(f, p)
    path1 = (
        fn.restrict_map(f, hm.associator(m, im, ip))
        @ fn.projection_iso(f, fuse(m, im), p)
        @ fuse_maps(fn.projection_iso(f, m, n), identity(p))
    )
    path2 = (
        fn.restrict_map(f, fuse_maps(identity(m), fn.ind_mult_iso(f, n, p)))
        @ fn.projection_iso(f, m, fuse(n, p))
        @ hm.associator(rm, n, p)
    )
    return _compare(path1, path2)


# base change diagrams


def _base_change_unit_right(inst: Instance):
    def draw():
        c, a = inst.algebra(), inst.algebra()
        return fibre_product(inst.hom(c, a), identity_hom(c))

    sq = _retry(draw)
    m = inst.module(sq.b)
    x = fn.induce(sq.fbar, m)
    u = fibre_unitor(sq)
    vertical = fn.res_identitor(fn.induce(sq.f, m)) @ fn.restrict_transport(u, sq.gbar, identity_hom(sq.a), x)
    diagonal = fn.induce_map(sq.f, fn.res_identitor(m))
    return _compare(vertical @ fn.base_change_iso(sq, m), diagonal)


def _base_change_unit_left(inst: Instance):
    def draw():
        c, b = inst.algebra(), inst.algebra()
        return fibre_product(identity_hom(c), inst.hom(c, b))

    sq = _retry(draw)
    m = inst.module(sq.b)
    x = fn.induce(sq.fbar, m)
    u = fibre_unitor_left(sq)
    vertical = fn.restrict_map(sq.g, fn.ind_identitor(m)) @ fn.restrict_transport(u, sq.gbar, sq.g, x)
    diagonal = fn.ind_identitor(fn.restrict(sq.g, m))
    return _compare(vertical @ fn.base_change_iso(sq, m), diagonal)


def _base_change_horizontal(inst: Instance):
    def draw():
        c, a1, a2, b = inst.algebra(), inst.algebra(), inst.algebra(), inst.algebra()
        f1, f2, g = inst.hom(c, a1), inst.hom(a1, a2), inst.hom(c, b)
        s1 = fibre_product(f1, g)
        s2 = fibre_product(f2, s1.gbar)
        glued = fibre_product(compose(f2, f1), g)
        return f1, f2, s1, s2, glued

    f1, f2, s1, s2, glued = _retry(draw)
    m = inst.module(s1.b)
    glue = AtomBijection(
        s2.product, glued.product, tuple(glued.pair_index[(i2, s1.pairs[p][1])] for i2, p in s2.pairs)
    )
    x = fn.induce(compose(s2.fbar, s1.fbar), m)
    path1 = (
        fn.restrict_transport(glue, s2.gbar, glued.gbar, x)
        @ fn.restrict_map(s2.gbar, fn.ind_compositor(s2.fbar, s1.fbar, m))
        @ fn.base_change_iso(s2, fn.induce(s1.fbar, m))
        @ fn.induce_map(f2, fn.base_change_iso(s1, m))
    )
    path2 = fn.base_change_iso(glued, m) @ fn.ind_compositor(f2, f1, fn.restrict(s1.g, m))
    return _compare(path1, path2)


def _base_change_vertical(inst: Instance):
    def draw():
        c, a, b1, b2 = inst.algebra(), inst.algebra(), inst.algebra(), inst.algebra()
        f, g1, g2 = inst.hom(c, a), inst.hom(c, b1), inst.hom(b1, b2)
        s1 = fibre_product(f, g1)
        s2 = fibre_product(s1.fbar, g2)
        glued = fibre_product(f, compose(g2, g1))
        return f, g1, g2, s1, s2, glued

    f, g1, g2, s1, s2, glued = _retry(draw)
    m = inst.module(g2.target)
    glue = AtomBijection(
        s2.product, glued.product, tuple(glued.pair_index[(s1.pairs[p][0], j2)] for p, j2 in s2.pairs)
    )
    x = fn.induce(s2.fbar, m)
    h = compose(s2.gbar, s1.gbar)
    path1 = (
        fn.restrict_transport(glue, h, glued.gbar, x)
        @ fn.res_compositor(s2.gbar, s1.gbar, x)
        @ fn.restrict_map(s1.gbar, fn.base_change_iso(s2, m))
        @ fn.base_change_iso(s1, fn.restrict(g2, m))
    )
    path2 = fn.base_change_iso(glued, m) @ fn.induce_map(f, fn.res_compositor(g2, g1, m))
    return _compare(path1, path2)


# mixed diagrams


def _projection_and_base_change(inst: Instance):
    sq = _square(inst)
    m, n = inst.module(sq.b), inst.module(sq.c)
    f, g, fbar, gbar = sq.f, sq.g, sq.fbar, sq.gbar
    rm = fn.restrict(g, m)
    im = fn.induce(fbar, m)
    top = (
        fn.restrict_map(gbar, fuse_maps(identity(im), fn.ind_compositor(gbar, f, n)))
        @ fn.projection_iso(gbar, im, fn.induce(f, n))
        @ fuse_maps(fn.base_change_iso(sq, m), identity(fn.induce(f, n)))
        @ fn.ind_mult_iso(f, rm, n)
    )
    ign = fn.induce(g, n)
    left = (
        fn.restrict_map(gbar, fuse_maps(identity(im), fn.ind_compositor(fbar, g, n)))
        @ fn.restrict_map(gbar, fn.ind_mult_iso(fbar, m, ign))
        @ fn.base_change_iso(sq, fuse(m, ign))
        @ fn.induce_map(f, fn.projection_iso(g, m, n))
    )
    return _compare(top, left)


def _swapped_projection(h, z: Module, other: Module) -> ModuleMap:
    """``other (x) res_h z -> res_h(ind_h other (x) z)`` via two symmetries."""
    return (
        fn.restrict_map(h, hm.symmetry(z, fn.induce(h, other)))
        @ fn.projection_iso(h, z, other)
        @ hm.symmetry(other, fn.restrict(h, z))
    )


def _two_projections(inst: Instance):
    sq = _square(inst)
    tr = transpose_square(sq)
    m, n = inst.module(sq.a), inst.module(sq.b)
    f, g, gbar = sq.f, sq.g, sq.gbar
    z = fn.induce(sq.fbar, n)
    left = (
        fn.res_compositor(gbar, f, fuse(fn.induce(gbar, m), z))
        @ fn.restrict_map(f, _swapped_projection(gbar, z, m))
        @ fn.restrict_map(f, fuse_maps(identity(m), fn.base_change_iso(sq, n)))
        @ fn.projection_iso(f, m, fn.restrict(g, n))
    )
    zt = fn.induce(tr.fbar, m)
    end = fuse(zt, fn.induce(tr.gbar, n))
    swap = fibre_swap(tr, sq)
    top = (
        fn.restrict_transport(swap, tr.diagonal, sq.diagonal, end)
        @ fn.res_compositor(tr.gbar, g, end)
        @ fn.restrict_map(g, fn.projection_iso(tr.gbar, zt, n) @ hm.symmetry(n, fn.restrict(tr.gbar, zt)))
        @ fn.restrict_map(g, fuse_maps(identity(n), fn.base_change_iso(tr, m)))
        @ fn.projection_iso(g, n, fn.restrict(f, m))
        @ hm.symmetry(fn.restrict(f, m), fn.restrict(g, n))
    )
    return _compare(top, left)


# lemma diagrams on standard forms, evaluated on plain vectors


def _fusion_labels(sq: FibreSquare) -> list:
    return [(i, j) for k in range(sq.c.size) for i in sq.f.fibers[k] for j in sq.g.fibers[k]]


def _relabel(src: list, tgt: list, rule: Callable) -> np.ndarray:
    pos = {lab: n for n, lab in enumerate(tgt)}
    out = np.zeros((len(tgt), len(src)))
    for n, lab in enumerate(src):
        out[pos[rule(lab)], n] = 1.0
    return out


def _on_factor(mat, mat_src, mat_tgt, src, tgt, split_src, split_tgt) -> np.ndarray:
    """``mat (x) id`` where ``split_*`` cut a label into (factor, rest)."""
    ms = {lab: n for n, lab in enumerate(mat_src)}
    mt = {lab: n for n, lab in enumerate(mat_tgt)}
    cols = [split_src(lab) for lab in src]
    out = np.zeros((len(tgt), len(src)), dtype=np.complex128)
    for r, lab in enumerate(tgt):
        part, rest = split_tgt(lab)
        for c, (cpart, crest) in enumerate(cols):
            if crest == rest:
                out[r, c] = mat[mt[part], ms[cpart]]
    return out


def _lambda_unitary(inst: Instance):
    sq = _square(inst)
    lam = hm.lambda_iso(sq)
    return hm.unitary_residual(lam), _dims(lam)


def _lambda_spanning(inst: Instance, count: int = 20):
    sq = _square(inst)
    lt = hm.lambda_total(sq)
    worst = 0.0
    for _ in range(count):
        phi = CondExp(sq.f, random_weights(inst.rng, sq.a.size))
        psi = CondExp(sq.g, random_weights(inst.rng, sq.b.size))
        mu = State(sq.c, random_weights(inst.rng, sq.c.size))
        v = hm.span_vector(phi, mu, psi, sq)
        worst = max(worst, frobenius((lt @ v.coords - hm.tensor_state_vector(phi, mu, psi, sq)).reshape(-1, 1)))
    return worst, _dims(lt.shape[0])


def _lambda_unitor(inst: Instance):
    def draw():
        c, a = inst.algebra(), inst.algebra()
        return fibre_product(inst.hom(c, a), identity_hom(c))

    sq = _retry(draw)
    u = fibre_unitor(sq)
    lhs = fn.restrict_transport(u, sq.diagonal, sq.f, l2(sq.product)) @ hm.lambda_iso(sq)
    return _compare(lhs, hm.unitor_r(fn.restrict(sq.f, l2(sq.a))))


def _lambda_unitor_left(inst: Instance):
    def draw():
        c, b = inst.algebra(), inst.algebra()
        return fibre_product(identity_hom(c), inst.hom(c, b))

    sq = _retry(draw)
    u = fibre_unitor_left(sq)
    lhs = fn.restrict_transport(u, sq.diagonal, sq.g, l2(sq.product)) @ hm.lambda_iso(sq)
    return _compare(lhs, hm.unitor_l(fn.restrict(sq.g, l2(sq.b))))


def _lambda_three_step(inst: Instance):
    def draw():
        a, b1, b2, b3 = inst.algebra(), inst.algebra(), inst.algebra(), inst.algebra()
        p1, p2, q = inst.hom(a, b1), inst.hom(a, b2), inst.hom(b2, b3)
        s13 = fibre_product(p1, compose(q, p2))
        s12 = fibre_product(p1, p2)
        s_out = fibre_product(s12.fbar, q)
        return p1, p2, q, s13, s12, s_out

    p1, p2, q, s13, s12, s_out = _retry(draw)
    s0 = _fusion_labels(s13)
    out = list(s_out.pairs)
    regroup = _relabel(list(s13.pairs), out, lambda lab: (s12.pair_index[(lab[0], q.spec[lab[1]])], lab[1]))
    top = regroup @ hm.lambda_total(s13)
    s1 = [(i, j, k) for j in range(p2.target.size) for i in p1.fibers[p2.spec[j]] for k in q.fibers[j]]
    s2 = _fusion_labels(s_out)
    step1 = _relabel(s0, s1, lambda lab: (lab[0], q.spec[lab[1]], lab[1]))
    step2 = _on_factor(
        hm.lambda_total(s12), _fusion_labels(s12), list(s12.pairs), s1, s2,
        lambda lab: ((lab[0], lab[1]), lab[2]), lambda lab: (s12.pairs[lab[0]], lab[1]),
    )
    bottom = hm.lambda_total(s_out) @ step2 @ step1
    return frobenius(top - bottom), _dims(top.shape[0])


def _w_diagram(inst: Instance):
    def draw():
        a1, a2 = inst.algebra(), inst.algebra()
        b1, b2, b3 = inst.algebra(), inst.algebra(), inst.algebra()
        maps = inst.hom(a1, b1), inst.hom(a1, b2), inst.hom(a2, b2), inst.hom(a2, b3)
        return maps, fibre_associator(*maps)

    return _retry(draw)


def _lambda_associator(inst: Instance):
    (p1, p2, q2, q3), assoc = _w_diagram(inst)
    left, right = assoc.left, assoc.right
    s12, s23 = assoc.inner_left, assoc.inner_right
    t0 = [
        (i, j, k)
        for a1 in range(p1.source.size)
        for i in p1.fibers[a1]
        for j in p2.fibers[a1]
        for k in q3.fibers[q2.spec[j]]
    ]
    t1 = _fusion_labels(right)
    top = (
        assoc.bijection.inverse().l2_matrix()
        @ hm.lambda_total(right)
        @ _on_factor(
            hm.lambda_total(s23), _fusion_labels(s23), list(s23.pairs), t0, t1,
            lambda lab: ((lab[1], lab[2]), lab[0]), lambda lab: (s23.pairs[lab[1]], lab[0]),
        )
    )
    u1 = [
        (i, j, k)
        for a2 in range(q2.source.size)
        for j in q2.fibers[a2]
        for i in p1.fibers[p2.spec[j]]
        for k in q3.fibers[a2]
    ]
    u2 = _fusion_labels(left)
    bottom = (
        hm.lambda_total(left)
        @ _on_factor(
            hm.lambda_total(s12), _fusion_labels(s12), list(s12.pairs), u1, u2,
            lambda lab: ((lab[0], lab[1]), lab[2]), lambda lab: (s12.pairs[lab[0]], lab[1]),
        )
        @ _relabel(t0, u1, lambda lab: lab)
    )
    return frobenius(top - bottom), _dims(top.shape[0])


def _fibre_pentagon(inst: Instance):
    def draw():
        a1, a2, a3 = inst.algebra(), inst.algebra(), inst.algebra()
        b1, b2, b3, b4 = inst.algebra(), inst.algebra(), inst.algebra(), inst.algebra()
        p1, p2 = inst.hom(a1, b1), inst.hom(a1, b2)
        q2, q3 = inst.hom(a2, b2), inst.hom(a2, b3)
        r3, r4 = inst.hom(a3, b3), inst.hom(a3, b4)
        x12, x23, x34 = fibre_product(p1, p2), fibre_product(q2, q3), fibre_product(r3, r4)
        a123 = fibre_associator(p1, p2, q2, q3)
        a234 = fibre_associator(q2, q3, r3, r4)
        al1 = fibre_associator(compose(x12.fbar, q2), q3, r3, r4)
        al2 = fibre_associator(p1, p2, q2, compose(x34.gbar, q3))
        be2 = fibre_associator(p1, compose(x23.gbar, p2), compose(x23.fbar, r3), r4)
        be1 = fibre_map(a123.bijection, identity_bijection(b4), al1.left, be2.left)
        be3 = fibre_map(identity_bijection(b1), a234.bijection, be2.right, al2.right)
        return al1, al2, be1, be2, be3

    al1, al2, be1, be2, be3 = _retry(draw)
    if al1.right.product != al2.left.product or al1.left.product != be1.source:
        raise StructureError("bracketings do not line up")
    path1 = al1.bijection.then(al2.bijection).l2_matrix()
    path2 = be1.then(be2.bijection).then(be3).l2_matrix()
    return frobenius(path1 - path2), _dims(path1.shape[0])


def _fusion_pentagon(inst: Instance):
    a = inst.algebra()
    m, n, p, q = (hm.random_module(inst.rng, a, inst.cfg.max_fiber_dim) for _ in range(4))
    path1 = hm.associator(m, n, fuse(p, q)) @ hm.associator(fuse(m, n), p, q)
    path2 = (
        fuse_maps(identity(m), hm.associator(n, p, q))
        @ hm.associator(m, fuse(n, p), q)
        @ fuse_maps(hm.associator(m, n, p), identity(q))
    )
    return _compare(path1, path2)


def _fusion_triangle(inst: Instance):
    a = inst.algebra()
    m, n = (hm.random_module(inst.rng, a, inst.cfg.max_fiber_dim) for _ in range(2))
    lhs = fuse_maps(identity(m), hm.unitor_l(n)) @ hm.associator(m, l2(a), n)
    rhs = fuse_maps(hm.unitor_r(m), identity(n))
    return _compare(lhs, rhs)


def _fusion_inner_product(inst: Instance):
    a = inst.algebra()
    m, n = (hm.random_module(inst.rng, a, inst.cfg.max_fiber_dim) for _ in range(2))
    rng = inst.rng

    def draw():
        xs = [rng.standard_normal(d) + 1j * rng.standard_normal(d) for d in m.dims]
        y = rng.standard_normal(n.total) + 1j * rng.standard_normal(n.total)
        return xs, y

    (x1, y1), (x2, y2) = draw(), draw()
    model = np.vdot(hm.fusion_vector(x2, n, y2, m), hm.fusion_vector(x1, n, y1, m))
    return abs(model - hm.fusion_inner(x1, y1, x2, y2, n)), _dims(fuse(m, n))


def _sqrt_roundtrip(inst: Instance):
    a, b = inst.algebra(), inst.algebra()
    f = inst.hom(b, a)
    phi = CondExp(f, random_weights(inst.rng, a.size, faithful=False))
    back = ce_from_positive_map(sqrt_ce(phi), f)
    eta = np.zeros((a.size, b.size))
    eta[np.arange(a.size), list(f.spec)] = inst.rng.uniform(0, 2, a.size)
    res = float(np.max(np.abs(back.weights - phi.weights), initial=0.0))
    res += frobenius(sqrt_ce(ce_from_positive_map(eta, f)) - eta)
    return res, _dims(a.size, b.size)


def _sqrt_identity(inst: Instance):
    a, b = inst.algebra(), inst.algebra()
    f = inst.hom(b, a)
    phi = CondExp(f, random_weights(inst.rng, a.size, faithful=False))
    x = AlgebraElement(a, inst.rng.standard_normal(a.size) + 1j * inst.rng.standard_normal(a.size))
    return ce_identity_check(phi, x), _dims(a.size, b.size)


def _sqrt_state_independence(inst: Instance):
    a, b = inst.algebra(), inst.algebra()
    f = inst.hom(b, a)
    phi = CondExp(f, random_weights(inst.rng, a.size, faithful=False))
    mu1 = State(b, random_weights(inst.rng, b.size))
    mu2 = State(b, random_weights(inst.rng, b.size))
    res = mu_independence_check(phi, mu1, mu2) + frobenius(sqrt_ce_via_state(phi, mu1) - sqrt_ce(phi))
    return res, _dims(a.size, b.size)


# duality and dagger


def _duality_instance(inst: Instance):
    a, b = inst.algebra(), inst.algebra()
    f = inst.hom(b, a)
    return f, inst.module(a), inst.module(b)


def _duality_double_dual(inst: Instance):
    _, m, _ = _duality_instance(inst)
    return _compare(hm.phi_iso(hm.dual_module(m)), inverse(hm.dual_map(hm.phi_iso(m))))


def _duality_unit(inst: Instance):
    a = inst.algebra()
    r = hm.r_iso(a)
    return _compare(hm.phi_iso(l2(a)), inverse(hm.dual_map(r)) @ r)


def _duality_tensor(inst: Instance):
    a = inst.algebra()
    m, n = inst.module(a), inst.module(a)
    dm, dn = hm.dual_module(m), hm.dual_module(n)
    rhs = inverse(hm.dual_map(hm.nu_iso(m, n))) @ hm.nu_iso(dm, dn) @ fuse_maps(hm.phi_iso(m), hm.phi_iso(n))
    return _compare(hm.phi_iso(fuse(m, n)), rhs)


def _duality_restriction(inst: Instance):
    f, m, _ = _duality_instance(inst)
    rhs = hm.dual_map(fn.xi_iso(f, m)) @ hm.phi_iso(fn.restrict(f, m)) @ inverse(fn.restrict_map(f, hm.phi_iso(m)))
    res, dims = _compare(fn.xi_iso(f, hm.dual_module(m)), rhs)
    return res + map_residual(fn.xi_iso(f, m), fn.xi_extended(f, m)), dims


def _duality_induction(inst: Instance):
    f, _, n = _duality_instance(inst)
    rhs = hm.dual_map(fn.zeta_iso(f, n)) @ hm.phi_iso(fn.induce(f, n)) @ inverse(fn.induce_map(f, hm.phi_iso(n)))
    res, dims = _compare(fn.zeta_iso(f, hm.dual_module(n)), rhs)
    return res + map_residual(fn.zeta_iso(f, n), fn.zeta_extended(f, n)), dims


def _duality_induction_unit(inst: Instance):
    a, b = inst.algebra(), inst.algebra()
    f = inst.hom(b, a)
    i = fn.ind_unit_iso(f)
    rhs = hm.dual_map(i) @ hm.r_iso(a) @ i @ inverse(fn.induce_map(f, hm.r_iso(b)))
    return _compare(fn.zeta_iso(f, l2(b)), rhs)


def _duality_induction_tensor(inst: Instance):
    a, b = inst.algebra(), inst.algebra()
    f = inst.hom(b, a)
    m, n = inst.module(b), inst.module(b)
    dm, dn = hm.dual_module(m), hm.dual_module(n)
    rhs = (
        hm.dual_map(fn.ind_mult_iso(f, m, n))
        @ hm.nu_iso(fn.induce(f, m), fn.induce(f, n))
        @ fuse_maps(fn.zeta_iso(f, m), fn.zeta_iso(f, n))
        @ fn.ind_mult_iso(f, dm, dn)
        @ inverse(fn.induce_map(f, hm.nu_iso(m, n)))
    )
    return _compare(fn.zeta_iso(f, fuse(m, n)), rhs)


def _duality_projection(inst: Instance):
    f, m, n = _duality_instance(inst)
    dm, dn = hm.dual_module(m), hm.dual_module(n)
    inm = fn.induce(f, n)
    path1 = (
        fn.xi_iso(f, fuse(m, inm))
        @ fn.restrict_map(f, hm.nu_iso(m, inm))
        @ fn.restrict_map(f, fuse_maps(identity(dm), fn.zeta_iso(f, n)))
        @ fn.projection_iso(f, dm, dn)
    )
    path2 = (
        hm.dual_map(inverse(fn.projection_iso(f, m, n)))
        @ hm.nu_iso(fn.restrict(f, m), n)
        @ fuse_maps(fn.xi_iso(f, m), identity(dn))
    )
    return _compare(path1, path2)


def _duality_base_change(inst: Instance):
    sq = _square(inst)
    m = inst.module(sq.b)
    dm = hm.dual_module(m)
    path1 = (
        fn.xi_iso(sq.gbar, fn.induce(sq.fbar, m))
        @ fn.restrict_map(sq.gbar, fn.zeta_iso(sq.fbar, m))
        @ fn.base_change_iso(sq, dm)
    )
    path2 = (
        inverse(hm.dual_map(fn.base_change_iso(sq, m)))
        @ fn.zeta_iso(sq.f, fn.restrict(sq.g, m))
        @ fn.induce_map(sq.f, fn.xi_iso(sq.g, m))
    )
    return _compare(path1, path2)


def _dagger_functoriality(inst: Instance):
    a, b = inst.algebra(), inst.algebra()
    f = inst.hom(b, a)
    rng = inst.rng
    dim = inst.cfg.max_fiber_dim
    m1, m2, m3 = (hm.random_module(rng, a, dim) for _ in range(3))
    n1, n2 = (hm.random_module(rng, b, dim) for _ in range(2))
    h, k = hm.random_map(rng, m1, m2), hm.random_map(rng, m2, m3)
    e = hm.random_map(rng, n1, n2)
    c = complex(rng.standard_normal(), rng.standard_normal())
    d = hm.dagger
    res = map_residual(d(k @ h), d(h) @ d(k))
    res += map_residual(d(d(h)), h)
    res += map_residual(d(c * h), np.conj(c) * d(h))
    res += map_residual(fn.restrict_map(f, d(h)), d(fn.restrict_map(f, h)))
    res += map_residual(fn.induce_map(f, d(e)), d(fn.induce_map(f, e)))
    res += map_residual(fuse_maps(d(h), d(k)), d(fuse_maps(h, k)))
    res += map_residual(hm.dual_map(d(h)), d(hm.dual_map(h)))
    res += map_residual(hm.dual_map(k @ h), hm.dual_map(h) @ hm.dual_map(k))
    return res, _dims(h)


def _structure_unitarity(inst: Instance):
    sq = _square(inst)
    f, _g = sq.f, sq.g
    rng, dim = inst.rng, inst.cfg.max_fiber_dim
    ma, ma2 = hm.random_module(rng, sq.a, dim), hm.random_module(rng, sq.a, dim)
    mb = hm.random_module(rng, sq.b, dim)
    mc, mc2 = hm.random_module(rng, sq.c, dim), hm.random_module(rng, sq.c, dim)
    isos = [
        fn.projection_iso(f, ma, mc),
        fn.base_change_iso(sq, mb),
        fn.ind_mult_iso(f, mc, mc2),
        fn.ind_unit_iso(f),
        fn.res_compositor(sq.gbar, f, fuse(fn.induce(sq.gbar, ma), fn.induce(sq.fbar, mb))),
        fn.xi_iso(f, ma),
        fn.zeta_iso(f, mc),
        hm.phi_iso(ma),
        hm.r_iso(sq.a),
        hm.nu_iso(ma, ma2),
        hm.associator(ma, ma2, ma),
        hm.symmetry(ma, ma2),
        hm.unitor_r(ma),
        hm.unitor_l(ma),
        hm.lambda_iso(sq),
        hm.random_unitary_map(rng, ma2),
    ]
    return max(hm.unitary_residual(u) for u in isos), _dims(ma2)


Check = Callable[[Instance], tuple[float, tuple[int, ...]]]


@dataclass(frozen=True)
class CheckSpec:
    check_id: str
    family: str
    run: Check
    summary: str
    module_valued: bool = True


CHECKS: tuple[CheckSpec, ...] = (
    CheckSpec("projection-identity-maps", "projection", _projection_identity,
              "Projection along an identity map agrees with the identitors of restriction and induction."),
    CheckSpec("projection-composition", "projection", _projection_composition,
              "Projection along a composite equals the two projections glued by the compositors."),
    CheckSpec("projection-unit", "projection", _projection_unit,
              "Projection against the standard form reduces to the unitors."),
    CheckSpec("projection-tensor", "projection", _projection_tensor,
              "Projection against a fusion of two modules agrees with projecting twice "
              "and with monoidality of induction."),
    CheckSpec("base-change-identity-right", "base_change", _base_change_unit_right,
              "Base change across a square with an identity vertical leg collapses to the identitor."),
    CheckSpec("base-change-identity-left", "base_change", _base_change_unit_left,
              "Base change across a square with an identity horizontal leg collapses to the identitor."),
    CheckSpec("base-change-horizontal", "base_change", _base_change_horizontal,
              "Base change across two squares placed side by side equals base change across the glued square."),
    CheckSpec("base-change-vertical", "base_change", _base_change_vertical,
              "Base change across two stacked squares equals base change across the glued square."),
    CheckSpec("projection-base-change", "mixed", _projection_and_base_change,
              "Inducing a projection and then changing base matches changing base and then projecting."),
    CheckSpec("two-projections", "mixed", _two_projections,
              "The two ways of fusing restrictions along both legs of a square agree through the fibre product."),
    CheckSpec("sqrt-roundtrip", "standard_form", _sqrt_roundtrip,
              "Square root and squaring are mutually inverse between expectations and positive linear maps.", False),
    CheckSpec("sqrt-identity", "standard_form", _sqrt_identity,
              "The adjoint of the square root sandwiches an element into its expectation.", False),
    CheckSpec("sqrt-state-independence", "standard_form", _sqrt_state_independence,
              "The square root built from a faithful state does not depend on the state.", False),
    CheckSpec("lambda-unitary", "standard_form", _lambda_unitary,
              "The map from a fusion of standard forms to the standard form of the fibre product is unitary.", False),
    CheckSpec("lambda-spanning-vectors", "standard_form", _lambda_spanning,
              "That map sends each spanning vector to the root of the product expectation.", False),
    CheckSpec("lambda-unitor", "standard_form", _lambda_unitor,
              "Composed with the fibre product unitor it is the fusion unitor on the right.", False),
    CheckSpec("lambda-unitor-left", "standard_form", _lambda_unitor_left,
              "Composed with the fibre product unitor it is the fusion unitor on the left.", False),
    CheckSpec("lambda-three-step", "standard_form", _lambda_three_step,
              "For a chain of four algebras, fusing directly or through an intermediate algebra "
              "yields the same vector.", False),
    CheckSpec("lambda-associator", "standard_form", _lambda_associator,
              "The fibre product associator matches the fusion associator.", False),
    CheckSpec("fibre-pentagon", "standard_form", _fibre_pentagon,
              "Associators of iterated fibre products satisfy the pentagon.", False),
    CheckSpec("fusion-pentagon", "standard_form", _fusion_pentagon,
              "Fusion associators satisfy the pentagon.", False),
    CheckSpec("fusion-triangle", "standard_form", _fusion_triangle,
              "Fusion associator and unitors satisfy the triangle.", False),
    CheckSpec("fusion-inner-product", "standard_form", _fusion_inner_product,
              "The inner product on the algebraic fusion matches the Kronecker model.", False),
    CheckSpec("duality-double-dual", "involutive", _duality_double_dual,
              "The double dual identification of a dual is the inverse dual of the identification."),
    CheckSpec("duality-unit", "involutive", _duality_unit,
              "Double dual of the standard form factors through its self-duality."),
    CheckSpec("duality-tensor", "involutive", _duality_tensor,
              "Double dual of a fusion is assembled from the monoidal duality maps."),
    CheckSpec("duality-restriction", "involutive", _duality_restriction,
              "Restriction commutes with duality compatibly with the double dual."),
    CheckSpec("duality-induction", "involutive", _duality_induction,
              "Induction commutes with duality compatibly with the double dual."),
    CheckSpec("duality-induction-unit", "involutive", _duality_induction_unit,
              "Duality of induction on the standard form is the unit self-duality."),
    CheckSpec("duality-induction-tensor", "involutive", _duality_induction_tensor,
              "Duality of induction is monoidal."),
    CheckSpec("duality-projection", "involutive", _duality_projection,
              "Duality is compatible with projection."),
    CheckSpec("duality-base-change", "involutive", _duality_base_change,
              "Duality is compatible with base change."),
    CheckSpec("dagger-functoriality", "involutive", _dagger_functoriality,
              "Dagger is an antilinear involution respected by restriction, induction, fusion and duality.", False),
    CheckSpec("structure-unitarity", "involutive", _structure_unitarity,
              "Every structure isomorphism is unitary for the dagger.", False),
)

CHECK_INDEX = {c.check_id: c for c in CHECKS}
FAMILIES = ("projection", "base_change", "mixed", "standard_form", "involutive")
CONSISTENCY_ID = "generator-extension-consistency"


def _seed_key(spec: CheckSpec) -> tuple[int, int]:
    members = [c for c in CHECKS if c.family == spec.family]
    return FAMILIES.index(spec.family), members.index(spec)


def run_checks(check_ids, cfg: SuiteConfig) -> list[CheckResult]:
    """Run the named checks for ``cfg.trials`` trials.

    Each check sees the same instances it would see inside its family run.
    """
    specs = [CHECK_INDEX[c] for c in check_ids]
    keys = [_seed_key(s) for s in specs]
    results = []
    for trial in range(cfg.trials):
        for spec, (fam_no, n) in zip(specs, keys):
            results.extend(_run_check(spec, derive_seed(cfg.seed, fam_no, n, trial), cfg))
    return results


def run_family(family: str, cfg: SuiteConfig) -> list[CheckResult]:
    """Run every check of one family for ``cfg.trials`` trials."""
    if family not in FAMILIES:
        raise KeyError(family)
    return run_checks([c.check_id for c in CHECKS if c.family == family], cfg)


def _evaluate(spec: CheckSpec, seed: int, cfg: SuiteConfig, generator: bool):
    # a structure map that breaks its own invariants is a failed check
    try:
        return spec.run(Instance(make_rng(seed), cfg, generator))
    except (StructureError, DimensionError, np.linalg.LinAlgError):
        return float("inf"), ()


def _run_check(spec: CheckSpec, seed: int, cfg: SuiteConfig) -> list[CheckResult]:
    tol = cfg.tolerance
    res, dims = _evaluate(spec, seed, cfg, False)
    ext = CheckResult(spec.check_id, seed, float(res), tol.accepts(res), dims)
    if not spec.module_valued:
        return [ext]
    gres, gdims = _evaluate(spec, seed, cfg, True)
    gen = CheckResult(spec.check_id, seed, float(gres), tol.accepts(gres), gdims, "generator")
    agree = gen.passed == ext.passed
    cons = CheckResult(CONSISTENCY_ID, seed, 0.0 if agree else 1.0, agree, dims, spec.check_id)
    return [gen, ext, cons]


def check_projection_coherences(cfg: SuiteConfig) -> list[CheckResult]:
    return run_family("projection", cfg)


def check_base_change_coherences(cfg: SuiteConfig) -> list[CheckResult]:
    return run_family("base_change", cfg)


def check_mixed_coherences(cfg: SuiteConfig) -> list[CheckResult]:
    return run_family("mixed", cfg)


def check_standard_form(cfg: SuiteConfig) -> list[CheckResult]:
    return run_family("standard_form", cfg)


def _is_dagger_check(check_id: str) -> bool:
    return check_id.startswith("dagger") or check_id == "structure-unitarity"


def check_involutive(cfg: SuiteConfig) -> list[CheckResult]:
    return [r for r in run_family("involutive", cfg) if not _is_dagger_check(r.check_id)]


def check_bi_involutive(cfg: SuiteConfig) -> list[CheckResult]:
    return [r for r in run_family("involutive", cfg) if _is_dagger_check(r.check_id)]


@dataclass
class CoherenceReport:
    config: SuiteConfig
    results: list[CheckResult]
    timings: dict[str, float] = field(default_factory=dict)

    def family_of(self, result: CheckResult) -> str:
        if result.check_id in CHECK_INDEX:
            return CHECK_INDEX[result.check_id].family
        if result.check_id == CONSISTENCY_ID:
            return CHECK_INDEX[result.level].family
        return result.check_id.split("-")[0]

    def families(self) -> list[str]:
        seen = []
        for r in self.results:
            fam = self.family_of(r)
            if fam not in seen:
                seen.append(fam)
        return seen

    def max_residual(self, family: str) -> float:
        vals = [r.residual for r in self.results if self.family_of(r) == family]
        return max(vals, default=0.0)

    def failures(self) -> list[CheckResult]:
        return [r for r in self.results if not r.passed]

    @property
    def passed(self) -> bool:
        return not self.failures()

    def summary(self, include_timings: bool = True) -> dict:
        """Machine-readable summary; timings are the only nondeterministic part."""
        fams = {}
        for fam in self.families():
            rs = [r for r in self.results if self.family_of(r) == fam]
            worst = max(rs, key=lambda r: r.residual)
            fams[fam] = {
                "checks": len(rs),
                "failures": sum(not r.passed for r in rs),
                "max_residual": _finite(worst.residual),
                "worst_check": worst.check_id,
                "worst_seed": worst.instance_seed,
            }
        out = {
            "seed": self.config.seed,
            "trials": self.config.trials,
            "max_atoms": self.config.max_atoms,
            "max_fiber_dim": self.config.max_fiber_dim,
            "tolerance": self.config.tolerance.abs_eps,
            "passed": self.passed,
            "families": fams,
            "failures": [
                {"check": r.check_id, "seed": r.instance_seed, "residual": _finite(r.residual),
                 "level": r.level, "dims": list(r.dims)}
                for r in self.failures()[:50]
            ],
        }
        if include_timings:
            out["timings"] = dict(self.timings)
        return out


def _finite(x: float):
    return x if np.isfinite(x) else "inf"


def run_all(cfg: SuiteConfig, families=FAMILIES) -> CoherenceReport:
    results, timings = [], {}
    for fam in families:
        t0 = time.perf_counter()
        results.extend(run_family(fam, cfg))
        timings[fam] = time.perf_counter() - t0
    return CoherenceReport(cfg, results, timings)
