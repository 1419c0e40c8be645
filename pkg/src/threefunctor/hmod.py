"""Modules over finite commutative algebras and their fusion.

A module is a Hilbert space graded by the atoms of its algebra, given by one
fiber dimension per atom; its basis is ordered by atom and then by fiber
index. A module map is block diagonal, one block per atom. Fusion over the
algebra is the fiberwise Kronecker product, so unitors and associators are
identity permutations and the symmetry is the fiberwise swap.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from . import mutations
from .cvna import (
    Algebra,
    AlgebraMismatch,
    CondExp,
    FibreSquare,
    Hom,
    State,
    StructureError,
    compose_state,
    sqrt_ce,
)
from .linalg import DimensionError, direct_sum, frobenius, permutation_matrix


@dataclass(frozen=True)
class Module:
    algebra: Algebra
    dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        object.__setattr__(self, "dims", dims)
        if len(dims) != self.algebra.size:
            raise AlgebraMismatch("one fiber dimension per atom is required")
        if any(d < 0 for d in dims):
            raise StructureError("fiber dimensions must be nonnegative")

    @property
    def total(self) -> int:
        return sum(self.dims)

    @cached_property
    def offsets(self) -> tuple[int, ...]:
        return tuple(int(x) for x in np.concatenate([[0], np.cumsum(self.dims)[:-1]]))


@dataclass(frozen=True, eq=False)
class ModuleMap:
    """Bounded linear map commuting with the atom grading."""

    source: Module
    target: Module
    blocks: tuple[np.ndarray, ...]

    def __post_init__(self):
        if self.source.algebra != self.target.algebra:
            raise AlgebraMismatch("module maps must stay over one algebra")
        blocks = tuple(np.asarray(b, dtype=np.complex128) for b in self.blocks)
        object.__setattr__(self, "blocks", blocks)
        if len(blocks) != self.source.algebra.size:
            raise DimensionError("one block per atom is required")
        for i, b in enumerate(blocks):
            if b.shape != (self.target.dims[i], self.source.dims[i]):
                raise DimensionError(
                    f"block {i} has shape {b.shape}, expected {(self.target.dims[i], self.source.dims[i])}"
                )

    @classmethod
    def identity(cls, m: Module) -> "ModuleMap":
        return cls(m, m, tuple(np.eye(d) for d in m.dims))

    @classmethod
    def from_matrix(cls, source: Module, target: Module, mat: np.ndarray, tol: float = 1e-12) -> "ModuleMap":
        """Cut a full matrix into blocks, rejecting entries across atoms."""
        mat = np.asarray(mat, dtype=np.complex128)
        if mat.shape != (target.total, source.total):
            raise DimensionError(f"expected shape {(target.total, source.total)}, got {mat.shape}")
        blocks = []
        for i in range(source.algebra.size):
            r0, c0 = target.offsets[i], source.offsets[i]
            blocks.append(mat[r0:r0 + target.dims[i], c0:c0 + source.dims[i]])
        out = cls(source, target, tuple(blocks))
        if frobenius(out.matrix() - mat) > tol:
            raise StructureError("matrix is not linear over the algebra")
        return out

    def matrix(self) -> np.ndarray:
        return direct_sum(self.blocks)

    def __matmul__(self, other: "ModuleMap") -> "ModuleMap":
        if other.target != self.source:
            raise DimensionError("module maps are not composable")
        return ModuleMap(other.source, self.target, tuple(a @ b for a, b in zip(self.blocks, other.blocks)))

    def __add__(self, other: "ModuleMap") -> "ModuleMap":
        if other.source != self.source or other.target != self.target:
            raise DimensionError("module maps have different types")
        return ModuleMap(self.source, self.target, tuple(a + b for a, b in zip(self.blocks, other.blocks)))

    def __sub__(self, other: "ModuleMap") -> "ModuleMap":
        return self + (-1.0) * other

    def __rmul__(self, c: complex) -> "ModuleMap":
        return ModuleMap(self.source, self.target, tuple(c * b for b in self.blocks))

    def norm(self) -> float:
        return float(np.sqrt(sum(frobenius(b) ** 2 for b in self.blocks)))


def map_residual(h: ModuleMap, k: ModuleMap) -> float:
    """Frobenius distance between two maps of the same type."""
    if h.source != k.source or h.target != k.target:
        raise DimensionError("maps have different sources or targets")
    return float(np.sqrt(sum(frobenius(a - b) ** 2 for a, b in zip(h.blocks, k.blocks))))


def identity(m: Module) -> ModuleMap:
    return ModuleMap.identity(m)


def inverse(h: ModuleMap) -> ModuleMap:
    return ModuleMap(h.target, h.source, tuple(np.linalg.inv(b) if b.size else b.T for b in h.blocks))


def l2(a: Algebra) -> Module:
    """The standard form: every fiber one-dimensional."""
    return Module(a, (1,) * a.size)


def fuse(m: Module, n: Module) -> Module:
    if m.algebra != n.algebra:
        raise AlgebraMismatch("fusion needs modules over the same algebra")
    return Module(m.algebra, tuple(a * b for a, b in zip(m.dims, n.dims)))


def fuse_maps(h: ModuleMap, k: ModuleMap) -> ModuleMap:
    if h.source.algebra != k.source.algebra:
        raise AlgebraMismatch("fusion needs maps over the same algebra")
    return ModuleMap(
        fuse(h.source, k.source),
        fuse(h.target, k.target),
        tuple(np.kron(a, b) for a, b in zip(h.blocks, k.blocks)),
    )


def _reindex(dims_in: Sequence[int], axes: Sequence[int]) -> np.ndarray:
    """Permutation matrix reordering a row-major tensor index by ``axes``."""
    n = int(np.prod(dims_in)) if len(dims_in) else 1
    idx = np.arange(n).reshape(tuple(dims_in)).transpose(axes).reshape(-1)
    # new position q holds old index idx[q]
    perm = np.empty(n, dtype=int)
    perm[idx] = np.arange(n)
    return permutation_matrix(perm)


def unitor_r(m: Module) -> ModuleMap:
    """``m (x) L2 -> m``."""
    src = fuse(m, l2(m.algebra))
    return ModuleMap(src, m, tuple(_reindex((d, 1), (0, 1)) for d in m.dims))


def unitor_l(m: Module) -> ModuleMap:
    """``L2 (x) m -> m``."""
    src = fuse(l2(m.algebra), m)
    return ModuleMap(src, m, tuple(_reindex((1, d), (0, 1)) for d in m.dims))


def associator(m: Module, n: Module, p: Module) -> ModuleMap:
    """``(m (x) n) (x) p -> m (x) (n (x) p)``."""
    src = fuse(fuse(m, n), p)
    tgt = fuse(m, fuse(n, p))
    blocks = [_reindex((a, b, c), (0, 1, 2)) for a, b, c in zip(m.dims, n.dims, p.dims)]
    if mutations.current("associator") is not None:
        for i, blk in enumerate(blocks):
            if blk.shape[0] >= 2:
                blocks[i] = blk[[1, 0] + list(range(2, blk.shape[0]))]
                break
    return ModuleMap(src, tgt, tuple(blocks))


def symmetry(m: Module, n: Module) -> ModuleMap:
    """``m (x) n -> n (x) m``, swapping tensor factors in each fiber."""
    return ModuleMap(fuse(m, n), fuse(n, m), tuple(_reindex((a, b), (1, 0)) for a, b in zip(m.dims, n.dims)))


def restricted_l2(h: Hom) -> Module:
    """``L2`` of ``h.target`` viewed over ``h.source``."""
    return Module(h.source, tuple(len(x) for x in h.fibers))


def fusion_of_l2(sq: FibreSquare) -> Module:
    """``L2(A) (x)_C L2(B)`` as a module over the base of the square."""
    return fuse(restricted_l2(sq.f), restricted_l2(sq.g))


def _pair_order_matrix(sq: FibreSquare) -> np.ndarray:
    """Reorder ``L2(A *_C B)`` viewed over ``C`` into plain pair order."""
    order = [p for k in range(sq.c.size) for p in sq.diagonal.fibers[k]]
    return permutation_matrix(order)


@dataclass(frozen=True, eq=False)
class FusionVector:
    """A vector of ``L2(A) (x)_C L2(B)`` in the basis of :func:`fusion_of_l2`."""

    space: Module
    coords: np.ndarray


def fusion_vector(xs: Sequence[np.ndarray], n: Module, y: np.ndarray, m: Module) -> np.ndarray:
    """Image of ``x (x) y`` in ``m (x) n``.

    ``xs[i]`` is the value at atom ``i`` of a map ``L2 -> m``, ``y`` a vector
    of ``n``.
    """
    out = []
    for i in range(m.algebra.size):
        yi = y[n.offsets[i]:n.offsets[i] + n.dims[i]]
        out.append(np.kron(np.asarray(xs[i]).reshape(-1), yi))
    return np.concatenate(out) if out else np.zeros(0, dtype=np.complex128)


def fusion_inner(xs1, y1, xs2, y2, n: Module) -> complex:
    """Inner product ``<(x2* x1) y1, y2>`` on the algebraic fusion."""
    total = 0j
    for i in range(n.algebra.size):
        c = np.vdot(np.asarray(xs2[i]).reshape(-1), np.asarray(xs1[i]).reshape(-1))
        a = y1[n.offsets[i]:n.offsets[i] + n.dims[i]]
        b = y2[n.offsets[i]:n.offsets[i] + n.dims[i]]
        total += c * np.vdot(b, a)
    return complex(total)


def span_vector(phi: CondExp, mu: State, psi: CondExp, sq: FibreSquare) -> FusionVector:
    """The vector ``sqrt(phi) (x)_mu sqrt(psi)``.

    It is ``sqrt(phi) (x) sqrt(mu psi)`` with ``sqrt(phi)`` read as a map
    ``L2(C) -> L2(A)``.
    """
    if phi.hom != sq.f or psi.hom != sq.g or mu.algebra != sq.c:
        raise AlgebraMismatch("data does not sit over the square")
    s = sqrt_ce(phi)
    right = compose_state(mu, psi).sqrt_vector()
    space = fusion_of_l2(sq)
    parts = []
    for k in range(sq.c.size):
        col = s[list(sq.f.fibers[k]), k]
        parts.append(np.kron(col, right[list(sq.g.fibers[k])]))
    coords = np.concatenate(parts) if parts else np.zeros(0, dtype=np.complex128)
    return FusionVector(space, coords)


def lambda_iso(sq: FibreSquare) -> ModuleMap:
    """``L2(A) (x)_C L2(B) -> L2(A *_C B)`` as a map over ``C``.

    Basis vector ``(i, j)`` of the fusion goes to the atom ``(i, j)`` of the
    fibre product.
    """
    src = fusion_of_l2(sq)
    tgt = restricted_l2(sq.diagonal)
    blocks = []
    for k in range(sq.c.size):
        src_pairs = [(i, j) for i in sq.f.fibers[k] for j in sq.g.fibers[k]]
        tgt_pos = {p: n for n, p in enumerate(sq.diagonal.fibers[k])}
        blocks.append(permutation_matrix([tgt_pos[sq.pair_index[p]] for p in src_pairs], len(tgt_pos)))
    if mutations.current("lambda-order") is not None:
        blocks = _misorder(sq, blocks)
    theta = mutations.current("lambda-phase")
    if theta is not None:
        # column 1 is not the mirror image of itself under swapping the legs
        cands = [k for k, b in enumerate(blocks) if b.shape[1] >= 2] or [k for k, b in enumerate(blocks) if b.shape[1]]
        if cands:
            k = cands[0]
            b = blocks[k].copy()
            b[:, min(1, b.shape[1] - 1)] *= np.exp(1j * theta.get("theta", 0.5))
            blocks[k] = b
    return ModuleMap(src, tgt, tuple(blocks))


def _misorder(sq: FibreSquare, blocks: list) -> list:
    # swap two targets sharing their first coordinate, else any two
    for k in range(sq.c.size):
        pos = list(sq.diagonal.fibers[k])
        for a in range(len(pos)):
            for b in range(a + 1, len(pos)):
                if sq.pairs[pos[a]][0] == sq.pairs[pos[b]][0]:
                    blk = blocks[k].copy()
                    blk[[a, b]] = blk[[b, a]]
                    blocks[k] = blk
                    return blocks
    for k, blk in enumerate(blocks):
        if blk.shape[0] >= 2:
            blk = blk.copy()
            blk[[0, 1]] = blk[[1, 0]]
            blocks[k] = blk
            return blocks
    return blocks


def lambda_total(sq: FibreSquare) -> np.ndarray:
    """:func:`lambda_iso` as a plain matrix into ``L2(A *_C B)`` in pair order."""
    return _pair_order_matrix(sq) @ lambda_iso(sq).matrix()


def tensor_state_vector(phi: CondExp, mu: State, psi: CondExp, sq: FibreSquare) -> np.ndarray:
    """``sqrt(mu (phi (x) psi))`` in pair order."""
    from .cvna import tensor_ce

    return compose_state(mu, tensor_ce(phi, psi, sq)).sqrt_vector()


def dual_module(m: Module) -> Module:
    """Conjugate module, identified with ``m`` through its real basis."""
    return Module(m.algebra, m.dims)


def dual_map(h: ModuleMap) -> ModuleMap:
    """``D h : D(target) -> D(source)``, the conjugate of the adjoint."""
    return ModuleMap(dual_module(h.target), dual_module(h.source), tuple(b.T for b in h.blocks))


def dagger(h: ModuleMap) -> ModuleMap:
    if mutations.current("dagger-conjugation") is not None:
        return ModuleMap(h.target, h.source, tuple(b.T for b in h.blocks))
    return ModuleMap(h.target, h.source, tuple(b.conj().T for b in h.blocks))


def phi_iso(m: Module) -> ModuleMap:
    """``m -> D D m``."""
    return ModuleMap(m, dual_module(dual_module(m)), tuple(np.eye(d) for d in m.dims))


def r_iso(a: Algebra) -> ModuleMap:
    """``L2 -> D L2``."""
    return ModuleMap(l2(a), dual_module(l2(a)), tuple(np.eye(1) for _ in range(a.size)))


def nu_iso(m: Module, n: Module) -> ModuleMap:
    """``D m (x) D n -> D (m (x) n)``."""
    src = fuse(dual_module(m), dual_module(n))
    return ModuleMap(src, dual_module(fuse(m, n)), tuple(np.eye(d) for d in src.dims))


def unitary_residual(h: ModuleMap) -> float:
    """``|| h^dagger h - 1 || + || h h^dagger - 1 ||`` using :func:`dagger`."""
    d = dagger(h)
    return map_residual(d @ h, identity(h.source)) + map_residual(h @ d, identity(h.target))


def random_module(rng: np.random.Generator, a: Algebra, max_dim: int, allow_zero: bool = True) -> Module:
    lo = 0 if allow_zero else 1
    return Module(a, tuple(int(x) for x in rng.integers(lo, max_dim + 1, a.size)))


def random_map(rng: np.random.Generator, source: Module, target: Module) -> ModuleMap:
    blocks = []
    for ds, dt in zip(source.dims, target.dims):
        blocks.append(rng.standard_normal((dt, ds)) + 1j * rng.standard_normal((dt, ds)))
    return ModuleMap(source, target, tuple(blocks))


def random_unitary_map(rng: np.random.Generator, m: Module) -> ModuleMap:
    from .linalg import random_unitary

    return ModuleMap(m, m, tuple(random_unitary(d, rng) for d in m.dims))
