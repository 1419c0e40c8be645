"""Finite commutative von Neumann algebras and their fibre products.

An algebra is ``C^n`` given by an ordered list of atoms. A homomorphism
``f: B -> A`` is stored as its spectral map, a total function from the atoms
of ``A`` to the atoms of ``B``. Conditional expectations ``A -> B`` are
nonnegative weights on the atoms of ``A`` summed along that map.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .linalg import frobenius, permutation_matrix


class AlgebraMismatch(ValueError):
    """Raised when an object lives over the wrong algebra."""


class StructureError(ValueError):
    """Raised when data violates a required block or diagram structure."""


class PreconditionError(ValueError):
    """Raised when an operation's precondition does not hold."""


@dataclass(frozen=True)
class Algebra:
    """The algebra of functions on a finite set of atoms."""

    atoms: tuple

    def __post_init__(self):
        atoms = tuple(self.atoms)
        object.__setattr__(self, "atoms", atoms)
        if len(atoms) < 1:
            raise StructureError("an algebra needs at least one atom")
        if len(set(atoms)) != len(atoms):
            raise StructureError("atom labels must be distinct")

    @classmethod
    def of_size(cls, n: int) -> "Algebra":
        return cls(tuple(range(n)))

    @property
    def size(self) -> int:
        return len(self.atoms)

    def index(self, label) -> int:
        return self.atoms.index(label)


@dataclass(frozen=True, eq=False)
class AlgebraElement:
    algebra: Algebra
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.complex128).reshape(-1)
        if v.shape[0] != self.algebra.size:
            raise AlgebraMismatch("one value per atom is required")
        object.__setattr__(self, "values", v)

    @classmethod
    def unit(cls, algebra: Algebra) -> "AlgebraElement":
        return cls(algebra, np.ones(algebra.size))


@dataclass(frozen=True)
class Hom:
    """Unital normal *-homomorphism ``source -> target``.

    ``spec[i]`` is the source atom that target atom ``i`` lies over.
    """

    source: Algebra
    target: Algebra
    spec: tuple[int, ...]

    def __post_init__(self):
        spec = tuple(int(s) for s in self.spec)
        object.__setattr__(self, "spec", spec)
        if len(spec) != self.target.size:
            raise StructureError("spectral map must be defined on every target atom")
        if any(s < 0 or s >= self.source.size for s in spec):
            raise StructureError("spectral map points outside the source algebra")

    @cached_property
    def fibers(self) -> tuple[tuple[int, ...], ...]:
        """Target atoms over each source atom, ascending."""
        out = [[] for _ in range(self.source.size)]
        for i, j in enumerate(self.spec):
            out[j].append(i)
        return tuple(tuple(x) for x in out)

    def is_identity(self) -> bool:
        return self.source == self.target and self.spec == tuple(range(self.target.size))


def identity_hom(a: Algebra) -> Hom:
    return Hom(a, a, tuple(range(a.size)))


def compose(f: Hom, g: Hom) -> Hom:
    """The composite ``f o g`` of ``g: C -> B`` and ``f: B -> A``."""
    if f.source != g.target:
        raise AlgebraMismatch("homomorphisms are not composable")
    return Hom(g.source, f.target, tuple(g.spec[j] for j in f.spec))


@dataclass(frozen=True, eq=False)
class State:
    """Non-normalised positive functional, one weight per atom."""

    algebra: Algebra
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if w.shape[0] != self.algebra.size:
            raise AlgebraMismatch("one weight per atom is required")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise StructureError("state weights must be finite and nonnegative")
        object.__setattr__(self, "weights", w)

    @property
    def faithful(self) -> bool:
        return bool(np.all(self.weights > 0))

    def sqrt_vector(self) -> np.ndarray:
        """The positive vector in the standard form representing this state."""
        return np.sqrt(self.weights).astype(np.complex128)


@dataclass(frozen=True, eq=False)
class CondExp:
    """Non-normalised conditional expectation ``hom.target -> hom.source``."""

    hom: Hom
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if w.shape[0] != self.hom.target.size:
            raise AlgebraMismatch("one weight per atom of the larger algebra is required")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise StructureError("weights must be finite and nonnegative")
        object.__setattr__(self, "weights", w)

    @property
    def faithful(self) -> bool:
        return bool(np.all(self.weights > 0))


def apply_ce(phi: CondExp, a: AlgebraElement) -> AlgebraElement:
    """Evaluate ``phi(a)``: sum of ``w_i a_i`` over each fiber."""
    if a.algebra != phi.hom.target:
        raise AlgebraMismatch("element is not in the domain of the expectation")
    out = np.zeros(phi.hom.source.size, dtype=np.complex128)
    np.add.at(out, np.asarray(phi.hom.spec, dtype=int), phi.weights * a.values)
    return AlgebraElement(phi.hom.source, out)


def compose_state(mu: State, phi: CondExp) -> State:
    """The state ``mu o phi`` on the larger algebra."""
    if mu.algebra != phi.hom.source:
        raise AlgebraMismatch("state and expectation do not compose")
    return State(phi.hom.target, mu.weights[list(phi.hom.spec)] * phi.weights)


def sqrt_ce(phi: CondExp) -> np.ndarray:
    """Positive B-linear map ``L2(B) -> L2(A)`` squaring to ``phi``."""
    f = phi.hom
    out = np.zeros((f.target.size, f.source.size), dtype=np.complex128)
    out[np.arange(f.target.size), list(f.spec)] = np.sqrt(phi.weights)
    return out


def sqrt_ce_via_state(phi: CondExp, mu: State) -> np.ndarray:
    """Build the square root from ``b sqrt(mu) -> b sqrt(mu phi)``.

    Column ``j`` is ``sqrt(mu phi)`` restricted to the fiber over ``j``,
    divided by ``sqrt(mu_j)``.
    """
    if mu.algebra != phi.hom.source:
        raise AlgebraMismatch("state must live on the smaller algebra")
    if not mu.faithful:
        raise PreconditionError("the recipe needs a faithful state")
    f = phi.hom
    target_vec = compose_state(mu, phi).sqrt_vector()
    out = np.zeros((f.target.size, f.source.size), dtype=np.complex128)
    for j, fiber in enumerate(f.fibers):
        for i in fiber:
            out[i, j] = target_vec[i] / np.sqrt(mu.weights[j])
    return out


def ce_from_positive_map(eta: np.ndarray, f: Hom, tol: float = 1e-12) -> CondExp:
    """Inverse of :func:`sqrt_ce` on the positive cone: ``a -> <eta, a eta>``.

    Raises:
        StructureError: if ``eta`` has entries off the pattern ``(i, spec(i))``.
    """
    eta = np.asarray(eta, dtype=np.complex128)
    if eta.shape != (f.target.size, f.source.size):
        raise StructureError(f"expected shape {(f.target.size, f.source.size)}, got {eta.shape}")
    mask = np.zeros(eta.shape, dtype=bool)
    mask[np.arange(f.target.size), list(f.spec)] = True
    off = np.abs(eta[~mask])
    if off.size and off.max() > tol:
        raise StructureError("map is not B-linear: entries outside the fiber pattern")
    diag = eta[np.arange(f.target.size), list(f.spec)]
    return CondExp(f, np.abs(diag) ** 2)


def ce_identity_check(phi: CondExp, a: AlgebraElement) -> float:
    """Residual of ``sqrt(phi)* a sqrt(phi) = phi(a)``."""
    if a.algebra != phi.hom.target:
        raise AlgebraMismatch("element is not in the domain of the expectation")
    s = sqrt_ce(phi)
    lhs = s.conj().T @ np.diag(a.values) @ s
    rhs = np.diag(apply_ce(phi, a).values)
    return frobenius(lhs - rhs)


def mu_independence_check(phi: CondExp, mu1: State, mu2: State) -> float:
    """Distance between the square roots built from two faithful states."""
    return frobenius(sqrt_ce_via_state(phi, mu1) - sqrt_ce_via_state(phi, mu2))


@dataclass(frozen=True)
class FibreSquare:
    """Fibre product square of ``f: C -> A`` and ``g: C -> B``.

    Atoms of ``product`` are the pairs ``(i, j)`` with ``f.spec[i] ==
    g.spec[j]`` in lexicographic order; ``gbar: A -> product`` and
    ``fbar: B -> product`` project onto the two coordinates.
    """

    c: Algebra
    a: Algebra
    b: Algebra
    f: Hom
    g: Hom
    product: Algebra
    fbar: Hom
    gbar: Hom
    pairs: tuple[tuple[int, int], ...]

    @cached_property
    def diagonal(self) -> Hom:
        """The common composite ``C -> product``."""
        return compose(self.gbar, self.f)

    @cached_property
    def pair_index(self) -> dict:
        return {p: n for n, p in enumerate(self.pairs)}

    def base_atom(self, n: int) -> int:
        return self.f.spec[self.pairs[n][0]]


def fibre_product(f: Hom, g: Hom) -> FibreSquare:
    """Fibre product ``A *_C B`` of ``f: C -> A`` and ``g: C -> B``.

    Raises:
        AlgebraMismatch: if ``f`` and ``g`` have different sources.
        StructureError: if no atoms match (the zero algebra is excluded).
    """
    if f.source != g.source:
        raise AlgebraMismatch("fibre product needs a common source algebra")
    a, b = f.target, g.target
    pairs = tuple(
        (i, j) for i in range(a.size) for j in g.fibers[f.spec[i]]
    )
    if not pairs:
        raise StructureError("fibre product has no atoms")
    product = Algebra(tuple((a.atoms[i], b.atoms[j]) for i, j in pairs))
    gbar = Hom(a, product, tuple(i for i, _ in pairs))
    fbar = Hom(b, product, tuple(j for _, j in pairs))
    return FibreSquare(f.source, a, b, f, g, product, fbar, gbar, pairs)


def transpose_square(sq: FibreSquare) -> FibreSquare:
    """The square with the roles of ``f`` and ``g`` exchanged."""
    return fibre_product(sq.g, sq.f)


def tensor_ce(phi: CondExp, psi: CondExp, sq: FibreSquare) -> CondExp:
    """The expectation ``phi (x) psi`` from the fibre product down to ``C``."""
    if phi.hom != sq.f or psi.hom != sq.g:
        raise AlgebraMismatch("expectations do not sit over the square's legs")
    w = np.array([phi.weights[i] * psi.weights[j] for i, j in sq.pairs])
    return CondExp(sq.diagonal, w)


@dataclass(frozen=True)
class AtomBijection:
    """Isomorphism of algebras, recorded as a bijection of atoms.

    ``mapping[p]`` is the target atom matched with source atom ``p``; the
    induced unitary ``L2(source) -> L2(target)`` is a permutation matrix.
    """

    source: Algebra
    target: Algebra
    mapping: tuple[int, ...]

    def __post_init__(self):
        m = tuple(int(x) for x in self.mapping)
        object.__setattr__(self, "mapping", m)
        if len(m) != self.source.size or sorted(m) != list(range(self.target.size)):
            raise StructureError("atom map is not a bijection")

    def l2_matrix(self) -> np.ndarray:
        return permutation_matrix(self.mapping)

    def inverse(self) -> "AtomBijection":
        inv = [0] * len(self.mapping)
        for p, q in enumerate(self.mapping):
            inv[q] = p
        return AtomBijection(self.target, self.source, tuple(inv))

    def then(self, other: "AtomBijection") -> "AtomBijection":
        """``other o self``."""
        if other.source != self.target:
            raise AlgebraMismatch("bijections are not composable")
        return AtomBijection(self.source, other.target, tuple(other.mapping[q] for q in self.mapping))

    def transports(self, h_source: Hom, h_target: Hom) -> bool:
        """Whether ``h_target`` corresponds to ``h_source`` under this bijection."""
        if h_source.target != self.source or h_target.target != self.target:
            return False
        return all(h_source.spec[p] == h_target.spec[q] for p, q in enumerate(self.mapping))


def identity_bijection(a: Algebra) -> AtomBijection:
    return AtomBijection(a, a, tuple(range(a.size)))


def fibre_unitor(sq: FibreSquare) -> AtomBijection:
    """The isomorphism ``A *_C C -> A``, atom ``(i, spec(i)) -> i``.

    Raises:
        StructureError: if the second leg is not the identity.
    """
    if not sq.g.is_identity():
        raise StructureError("the unitor needs the identity as second leg")
    return AtomBijection(sq.product, sq.a, tuple(i for i, _ in sq.pairs))


def fibre_unitor_left(sq: FibreSquare) -> AtomBijection:
    """The isomorphism ``C *_C B -> B``, atom ``(spec(j), j) -> j``."""
    if not sq.f.is_identity():
        raise StructureError("the left unitor needs the identity as first leg")
    return AtomBijection(sq.product, sq.b, tuple(j for _, j in sq.pairs))


def fibre_swap(sq: FibreSquare, swapped: FibreSquare) -> AtomBijection:
    """The isomorphism ``A *_C B -> B *_C A``, ``(i, j) -> (j, i)``."""
    if swapped.f != sq.g or swapped.g != sq.f:
        raise StructureError("squares are not transposes of each other")
    return AtomBijection(sq.product, swapped.product, tuple(swapped.pair_index[(j, i)] for i, j in sq.pairs))


def fibre_map(u: AtomBijection, v: AtomBijection, src: FibreSquare, tgt: FibreSquare) -> AtomBijection:
    """The isomorphism ``X *_C Y -> X' *_C Y'`` induced by ``u`` and ``v``."""
    if u.source != src.a or v.source != src.b or u.target != tgt.a or v.target != tgt.b:
        raise AlgebraMismatch("bijections do not match the squares")
    mapping = []
    for i, j in src.pairs:
        key = (u.mapping[i], v.mapping[j])
        if key not in tgt.pair_index:
            raise StructureError("bijections are not compatible with the base")
        mapping.append(tgt.pair_index[key])
    return AtomBijection(src.product, tgt.product, tuple(mapping))


@dataclass(frozen=True)
class FibreAssociator:
    """Associator of a W-shaped diagram ``B1 <- A1 -> B2 <- A2 -> B3``."""

    inner_left: FibreSquare  # B1 *_{A1} B2
    left: FibreSquare  # (B1 *_{A1} B2) *_{A2} B3
    inner_right: FibreSquare  # B2 *_{A2} B3
    right: FibreSquare  # B1 *_{A1} (B2 *_{A2} B3)
    bijection: AtomBijection


def fibre_associator(p1: Hom, p2: Hom, q2: Hom, q3: Hom) -> FibreAssociator:
    """The isomorphism ``(B1 * B2) * B3 -> B1 * (B2 * B3)``.

    Args:
        p1: ``A1 -> B1``.
        p2: ``A1 -> B2``.
        q2: ``A2 -> B2``.
        q3: ``A2 -> B3``.

    Raises:
        StructureError: if the four maps do not form the W-shaped diagram.
    """
    if p1.source != p2.source or q2.source != q3.source or p2.target != q2.target:
        raise StructureError("maps do not form a diagram B1 <- A1 -> B2 <- A2 -> B3")
    inner_left = fibre_product(p1, p2)
    left = fibre_product(compose(inner_left.fbar, q2), q3)
    inner_right = fibre_product(q2, q3)
    right = fibre_product(p1, compose(inner_right.gbar, p2))
    mapping = []
    for x, k in left.pairs:
        i, j = inner_left.pairs[x]
        y = inner_right.pair_index[(j, k)]
        mapping.append(right.pair_index[(i, y)])
    bij = AtomBijection(left.product, right.product, tuple(mapping))
    return FibreAssociator(inner_left, left, inner_right, right, bij)


def associator_leg_mismatches(assoc: FibreAssociator) -> int:
    """Number of atoms on which the associator fails to respect a leg."""
    L, R = assoc.left, assoc.right
    legs = [
        (compose(L.gbar, assoc.inner_left.gbar), R.gbar),
        (compose(L.gbar, assoc.inner_left.fbar), compose(R.fbar, assoc.inner_right.gbar)),
        (L.fbar, compose(R.fbar, assoc.inner_right.fbar)),
    ]
    bad = 0
    for hl, hr in legs:
        bad += sum(hl.spec[p] != hr.spec[q] for p, q in enumerate(assoc.bijection.mapping))
    return bad


def random_algebra(rng: np.random.Generator, max_atoms: int) -> Algebra:
    return Algebra.of_size(int(rng.integers(1, max_atoms + 1)))


def random_hom(rng: np.random.Generator, source: Algebra, target: Algebra) -> Hom:
    return Hom(source, target, tuple(int(x) for x in rng.integers(0, source.size, target.size)))


def random_weights(rng: np.random.Generator, n: int, faithful: bool = True) -> np.ndarray:
    w = rng.uniform(0.1, 3.0, n)
    if not faithful:
        w[rng.random(n) < 0.3] = 0.0
    return w
