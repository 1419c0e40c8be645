import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from threefunctor import groupoid as gp
from threefunctor import mutations
from threefunctor.cvna import PreconditionError
from threefunctor.hmod import Module
from threefunctor.linalg import frobenius


def regular_oracle(g: gp.FiniteGroupoid, a: int) -> np.ndarray:
    """Translation by arrow ``a`` built straight from the composition table.

    The fiber over ``x`` has basis the arrows ending at ``x`` in arrow order.
    """
    x, y = g.source[a], g.target[a]
    into_x = [h for h in range(len(g.arrows)) if g.target[h] == x]
    into_y = [h for h in range(len(g.arrows)) if g.target[h] == y]
    out = np.zeros((len(into_y), len(into_x)))
    for col, h in enumerate(into_x):
        out[into_y.index(g.compose(a, h)), col] = 1
    return out


def test_nerve_counts():
    z2 = gp.cyclic_group(2)
    assert len(z2.arrows) == 2 and len(z2.g2) == 4
    p3 = gp.pair_groupoid(3)
    assert len(p3.arrows) == 9 and len(p3.g2) == 27
    t = gp.trivial_groupoid(3)
    nv = gp.nerve_homs(t)
    assert nv.s.spec == nv.t.spec == (0, 1, 2)


def test_group_orders():
    assert [len(gp.cyclic_group(n).arrows) for n in range(1, 9)] == list(range(1, 9))
    assert len(gp.symmetric_group_3().arrows) == 6
    assert len(gp.klein_group().arrows) == 4
    assert gp.symmetric_group_3().is_group and not gp.pair_groupoid(2).is_group


def test_groupoid_validation():
    with pytest.raises(gp.GroupoidError):
        gp.FiniteGroupoid(("x",), ("e", "a"), (0, 0), (0, 0), {(0, 0): 0, (0, 1): 1, (1, 0): 1, (1, 1): 1})
    with pytest.raises(gp.GroupoidError):
        gp.FiniteGroupoid((), (), (), (), {})


def test_inverse_and_identity():
    g = gp.action_groupoid([(1, 2, 0)], 3)
    for a in range(len(g.arrows)):
        assert g.compose(a, g.inverse(a)) == g.identity(g.target[a])


def test_regular_rep_examples():
    triv = gp.regular_rep(gp.trivial_groupoid(2))
    assert triv.bundle.dims == (1, 1)
    assert all(np.allclose(a, [[1]]) for a in triv.alpha)
    for n in (1, 3, 5):
        g = gp.cyclic_group(n)
        chi = gp.regular_rep(g).character()
        expect = [n if a == g.identity(0) else 0 for a in range(n)]
        assert np.allclose(chi, expect)
    assert gp.regular_rep(gp.pair_groupoid(4)).bundle.dims == (4,) * 4


@pytest.mark.parametrize("g", gp.corpus(), ids=lambda g: g.name)
def test_regular_rep_matches_table(g):
    reg = gp.regular_rep(g)
    for a in range(len(g.arrows)):
        assert frobenius(reg.alpha[a] - regular_oracle(g, a)) < 1e-12
    assert reg.cocycle_residual() < 1e-12


def test_pullback_rep_examples():
    g = gp.cyclic_group(2)
    triv = gp.pullback_rep(g, 1)
    assert all(np.allclose(a, 1) for a in triv.alpha)
    sign = gp.pullback_rep(g, 1, [np.eye(1), -np.eye(1)])
    assert np.allclose(sign.character(), [1, -1])
    with pytest.raises(gp.GroupoidError, match="pullback"):
        gp.pullback_rep(g, 1, [np.eye(1), 2 * np.eye(1)])


def test_invalid_rep_names_itself():
    g = gp.cyclic_group(2)
    rep = gp.GRepresentation(g, Module(gp.object_algebra(g), (1,)), (np.eye(1), np.array([[1j]])), "bad-one")
    with pytest.raises(gp.GroupoidError, match="bad-one"):
        rep.validate()


@given(st.integers(0, 2**31), st.integers(1, 3))
def test_random_reps_on_action_groupoids_are_valid(seed, rank):
    rng = np.random.default_rng(seed)
    g = gp.corpus()[-1 - seed % 6]
    rep = gp.random_rep(g, rank, rng)
    rep.validate()
    assert rep.cocycle_residual() < 1e-10


def test_tensor_reps():
    rng = np.random.default_rng(0)
    g = gp.symmetric_group_3()
    r1, r2 = gp.random_rep(g, 2, rng), gp.random_rep(g, 3, rng)
    t = gp.tensor_reps(r1, r2)
    assert t.bundle.dims == (6,)
    assert np.allclose(t.character(), r1.character() * r2.character())
    one = gp.tensor_reps(r1, gp.pullback_rep(g, 1))
    assert all(np.allclose(a, b) for a, b in zip(one.alpha, r1.alpha))


def test_fell_trivial_action_is_identity():
    g = gp.action_groupoid([(1, 0, 2)], 3)
    rep = gp.pullback_rep(g, 2)
    u = gp.fell_iso(g, rep)
    assert all(np.allclose(b, np.eye(b.shape[0])) for b in u.blocks)


def test_fell_z2_sign():
    g = gp.cyclic_group(2)
    sign = gp.pullback_rep(g, 1, [np.eye(1), -np.eye(1)])
    reg = gp.regular_rep(g)
    twisted = [np.trace(np.kron(sign.alpha[a], reg.alpha[a])) for a in range(2)]
    assert np.allclose(twisted, [2, 0])
    report = gp.fell_check(g, sign)
    assert report.unitarity < 1e-12 and report.intertwiner < 1e-12
    assert report.character_match is True


def test_fell_needs_constant_rank():
    g = gp.trivial_groupoid(2)
    rep = gp.GRepresentation(g, Module(gp.object_algebra(g), (1, 2)), (np.eye(1), np.eye(2)))
    with pytest.raises(PreconditionError):
        gp.fell_iso(g, rep)


def test_decompose_by_rank():
    g = gp.trivial_groupoid(2)
    rep = gp.GRepresentation(g, Module(gp.object_algebra(g), (1, 2)), (np.eye(1), np.eye(2)))
    parts = gp.decompose_by_rank(g, rep)
    assert [p.bundle.dims for _, p in parts] == [(1,), (2,)]
    for sub, part in parts:
        assert gp.fell_check(sub, part).intertwiner < 1e-12
    const = gp.pullback_rep(gp.pair_groupoid(3), 2)
    assert len(gp.decompose_by_rank(const.groupoid, const)) == 1
    zero = gp.GRepresentation(g, Module(gp.object_algebra(g), (0, 1)), (np.zeros((0, 0)), np.eye(1)))
    with pytest.raises(gp.FaithfulnessError):
        gp.decompose_by_rank(g, zero)


def test_fixed_points_of_regular_action():
    g = gp.cyclic_group(4)
    assert [gp.fixed_points(g, a) for a in range(4)] == [4, 0, 0, 0]


def test_cocycle_phase_mutation_is_detected():
    g = gp.cyclic_group(3)
    rep = gp.random_rep(g, 2, np.random.default_rng(1))
    with mutations.active("cocycle-phase"):
        report = gp.fell_check(g, rep)
    assert report.intertwiner > 1e-3


def test_fell_suite_small():
    results = gp.run_fell_suite(seed=1, reps_per_groupoid=2, groupoids=[gp.klein_group(), gp.pair_groupoid(2)])
    assert len(results) == 4
    assert all(r.unitarity < 1e-10 and r.intertwiner < 1e-9 for r in results)
    assert results[0].character_match is True and results[-1].character_match is None
