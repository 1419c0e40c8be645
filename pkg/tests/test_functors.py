import numpy as np
from hypothesis import given
from hypothesis import strategies as st

from threefunctor import functors as fn
from threefunctor import hmod as hm
from threefunctor.cvna import (
    Algebra,
    Hom,
    StructureError,
    compose,
    fibre_product,
    identity_hom,
    random_algebra,
    random_hom,
)
from threefunctor.hmod import Module
from threefunctor.linalg import frobenius


def is_permutation(mat) -> bool:
    mat = np.asarray(mat)
    ok = np.isclose(mat, 0) | np.isclose(mat, 1)
    return bool(ok.all() and np.allclose(mat.sum(0), 1) and np.allclose(mat.sum(1), 1))


def rand_hom(rng, max_atoms=4):
    a, b = random_algebra(rng, max_atoms), random_algebra(rng, max_atoms)
    return random_hom(rng, b, a)


def rand_square(rng, max_atoms=4):
    while True:
        c, a, b = (random_algebra(rng, max_atoms) for _ in range(3))
        try:
            return fibre_product(random_hom(rng, c, a), random_hom(rng, c, b))
        except StructureError:
            continue


def test_restrict_examples():
    a = Algebra.of_size(3)
    m = Module(a, (1, 2, 3))
    assert fn.restrict(identity_hom(a), m).dims == m.dims
    f = Hom(Algebra.of_size(2), a, (0, 0, 1))
    assert fn.restrict(f, m).dims == (3, 3)


def test_induce_examples():
    b = Algebra.of_size(2)
    n = Module(b, (2, 5))
    assert fn.induce(identity_hom(b), n).dims == n.dims
    f = Hom(b, Algebra.of_size(3), (0, 0, 1))
    assert fn.induce(f, n).dims == (2, 2, 5)


def test_restrict_map_preserves_dagger():
    rng = np.random.default_rng(0)
    f = Hom(Algebra.of_size(2), Algebra.of_size(3), (0, 0, 1))
    m, n = Module(f.target, (1, 2, 3)), Module(f.target, (2, 2, 1))
    h = hm.random_map(rng, m, n)
    assert hm.map_residual(fn.restrict_map(f, hm.dagger(h)), hm.dagger(fn.restrict_map(f, h))) == 0


def test_induce_along_composite():
    rng = np.random.default_rng(1)
    c, b, a = Algebra.of_size(2), Algebra.of_size(3), Algebra.of_size(4)
    g, f = Hom(c, b, (0, 1, 1)), Hom(b, a, (2, 0, 1, 1))
    n, n2 = Module(c, (2, 3)), Module(c, (1, 1))
    comp = fn.ind_compositor(f, g, n)
    assert comp.source.dims == fn.induce(compose(f, g), n).dims
    h = hm.random_map(rng, n, n2)
    lhs = fn.ind_compositor(f, g, n2) @ fn.induce_map(f, fn.induce_map(g, h))
    assert hm.map_residual(lhs, fn.induce_map(compose(f, g), h) @ comp) == 0


def test_res_compositor_is_natural_permutation():
    rng = np.random.default_rng(2)
    c, b, a = Algebra.of_size(2), Algebra.of_size(3), Algebra.of_size(4)
    g, f = Hom(c, b, (0, 1, 1)), Hom(b, a, (2, 0, 1, 1))
    m, m2 = Module(a, (1, 2, 1, 3)), Module(a, (2, 1, 1, 1))
    comp = fn.res_compositor(f, g, m)
    assert all(is_permutation(b) for b in comp.blocks)
    h = hm.random_map(rng, m, m2)
    lhs = fn.res_compositor(f, g, m2) @ fn.restrict_map(g, fn.restrict_map(f, h))
    assert hm.map_residual(lhs, fn.restrict_map(compose(f, g), h) @ comp) < 1e-12


def test_identitors():
    m = Module(Algebra.of_size(2), (3, 1))
    assert hm.map_residual(fn.res_identitor(m), hm.identity(m)) == 0
    assert hm.map_residual(fn.ind_identitor(m), hm.identity(m)) == 0


def test_extension_of_identity_is_identity():
    a = Algebra.of_size(3)
    m = Module(a, (2, 0, 3))
    ext = fn.extend_by_generator(hm.identity(hm.l2(a)), fn.identity_bimodule(a), fn.identity_bimodule(a), m)
    assert hm.map_residual(ext, hm.identity(m)) == 0


def test_projection_block_permutation_example():
    f = Hom(Algebra.of_size(1), Algebra.of_size(2), (0, 0))
    m, n = Module(f.target, (2, 3)), Module(f.source, (4,))
    p = fn.projection_iso(f, m, n)
    assert p.source.dims == (20,) and p.target.dims == (20,)
    # (m_0 + m_1) (x) n  ->  (m_0 (x) n) + (m_1 (x) n), both row-major
    expect = np.zeros((20, 20))
    for k in range(5):
        for ll in range(4):
            tgt = k * 4 + ll if k < 2 else 8 + (k - 2) * 4 + ll
            expect[tgt, k * 4 + ll] = 1
    assert frobenius(p.blocks[0] - expect) < 1e-12


def test_projection_along_identity_is_identity():
    a = Algebra.of_size(3)
    m, n = Module(a, (1, 2, 0)), Module(a, (2, 1, 2))
    p = fn.projection_iso(identity_hom(a), m, n)
    assert all(is_permutation(b) and np.allclose(b, np.eye(b.shape[0])) for b in p.blocks if b.size)


def test_base_change_fibers_and_permutation():
    rng = np.random.default_rng(5)
    for _ in range(20):
        sq = rand_square(rng)
        m = hm.random_module(rng, sq.b, 3)
        bc = fn.base_change_iso(sq, m)
        for i in range(sq.a.size):
            matched = [j for (i2, j) in sq.pairs if i2 == i]
            assert bc.source.dims[i] == sum(m.dims[j] for j in matched)
        assert all(is_permutation(b) for b in bc.blocks if b.size)


def test_base_change_with_identity_leg():
    c = Algebra.of_size(2)
    f = Hom(c, Algebra.of_size(3), (0, 1, 1))
    sq = fibre_product(f, identity_hom(c))
    m = Module(c, (2, 1))
    bc = fn.base_change_iso(sq, m)
    assert all(np.allclose(b, np.eye(b.shape[0])) for b in bc.blocks)


def test_duality_maps_along_identity():
    a = Algebra.of_size(2)
    m = Module(a, (2, 3))
    assert hm.map_residual(fn.xi_iso(identity_hom(a), m), hm.identity(hm.dual_module(m))) == 0
    assert hm.map_residual(fn.zeta_iso(identity_hom(a), m), hm.identity(hm.dual_module(m))) == 0


@given(st.integers(0, 2**31))
def test_natural_isos_are_natural_and_unitary(seed):
    rng = np.random.default_rng(seed)
    f = rand_hom(rng)
    m = hm.random_module(rng, f.target, 3)
    n1, n2 = hm.random_module(rng, f.source, 3), hm.random_module(rng, f.source, 3)
    h = hm.random_map(rng, n1, n2)
    for iso in (fn.projection_natural(f, m), fn.ind_mult_natural(f, n1), fn.zeta_natural(f)):
        assert iso.naturality_residual(h) < 1e-10
        assert iso.unitarity_residual(n1) < 1e-12
    m1, m2 = hm.random_module(rng, f.target, 3), hm.random_module(rng, f.target, 3)
    k = hm.random_map(rng, m1, m2)
    assert fn.xi_natural(f).naturality_residual(k) < 1e-10
    sq = rand_square(rng)
    p1, p2 = hm.random_module(rng, sq.b, 3), hm.random_module(rng, sq.b, 3)
    bc = fn.base_change_natural(sq)
    assert bc.naturality_residual(hm.random_map(rng, p1, p2)) < 1e-10
    assert bc.unitarity_residual(p1) < 1e-12


@given(st.integers(0, 2**31))
def test_extension_agrees_with_generator(seed):
    rng = np.random.default_rng(seed)
    sq = rand_square(rng)
    at_l2 = fn.base_change_iso(sq, hm.l2(sq.b))
    assert hm.map_residual(at_l2, fn.base_change_at_generator(sq)) < 1e-12
    f = rand_hom(rng)
    m = hm.random_module(rng, f.target, 2)
    assert hm.map_residual(fn.projection_iso(f, m, hm.l2(f.source)), fn.projection_at_generator(f, m)) < 1e-12
