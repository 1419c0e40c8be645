"""Dense complex linear algebra shared by every other module.

Index conventions are fixed here once: Kronecker products are row-major
(row ``(i, k)`` of ``kron(a, b)`` is ``i * rb + k``) and direct sums stack
blocks in list order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


class DimensionError(ValueError):
    """Raised when matrix shapes are incompatible with an operation."""


def as_matrix(a) -> np.ndarray:
    """Coerce ``a`` to a finite 2-d complex128 array."""
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2:
        raise DimensionError(f"expected a 2-d matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.kron(as_matrix(a), as_matrix(b))


def direct_sum(blocks: Sequence[np.ndarray]) -> np.ndarray:
    """Block-diagonal matrix with ``blocks`` in list order."""
    blocks = [as_matrix(b) for b in blocks]
    rows = sum(b.shape[0] for b in blocks)
    cols = sum(b.shape[1] for b in blocks)
    out = np.zeros((rows, cols), dtype=np.complex128)
    r = c = 0
    for b in blocks:
        out[r:r + b.shape[0], c:c + b.shape[1]] = b
        r += b.shape[0]
        c += b.shape[1]
    return out


def adjoint(a: np.ndarray) -> np.ndarray:
    return as_matrix(a).conj().T


def frobenius(a: np.ndarray) -> float:
    a = np.asarray(a)
    if a.size == 0:
        return 0.0
    return float(np.linalg.norm(a))


def residual(a: np.ndarray, b: np.ndarray) -> float:
    """Frobenius norm of ``a - b``; shapes must agree."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch {a.shape} vs {b.shape}")
    return frobenius(a - b)


def unitarity_residual(u: np.ndarray) -> float:
    """Frobenius norm of ``u* u - I``.

    Raises:
        DimensionError: if ``u`` is not square.
    """
    u = as_matrix(u)
    if u.shape[0] != u.shape[1]:
        raise DimensionError(f"unitarity needs a square matrix, got {u.shape}")
    return frobenius(adjoint(u) @ u - np.eye(u.shape[0]))


def permutation_matrix(perm: Sequence[int], size: int | None = None) -> np.ndarray:
    """Matrix sending basis vector ``j`` to basis vector ``perm[j]``."""
    n = len(perm) if size is None else size
    out = np.zeros((n, len(perm)), dtype=np.complex128)
    for j, i in enumerate(perm):
        out[i, j] = 1.0
    return out


def make_rng(seed) -> np.random.Generator:
    """Seeded generator; accepts an int, a SeedSequence or a Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def derive_seed(*key: int) -> int:
    """Deterministic 63-bit sub-seed for a tuple of nonnegative integers."""
    state = np.random.SeedSequence([int(k) for k in key]).generate_state(2, np.uint32)
    return int((int(state[0]) << 31) ^ int(state[1]))


def random_unitary(n: int, seed) -> np.ndarray:
    """Haar-random ``n x n`` unitary.

    QR of a complex Ginibre matrix, with the phases of ``diag(R)`` moved into
    ``Q`` so the result is Haar distributed.

    Args:
        n: Dimension, at least 0.
        seed: Anything accepted by :func:`make_rng`.
    """
    if n < 0:
        raise ValueError("dimension must be nonnegative")
    if n == 0:
        return np.zeros((0, 0), dtype=np.complex128)
    rng = make_rng(seed)
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def random_matrix(rows: int, cols: int, seed) -> np.ndarray:
    rng = make_rng(seed)
    return rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))


@dataclass(frozen=True)
class Tolerance:
    """Residual threshold used by every check.

    With ``scale_mode`` set, residuals are divided by ``sqrt(rows * cols)``
    before comparison.
    """

    abs_eps: float = 1e-10
    scale_mode: bool = False

    def __post_init__(self):
        if not self.abs_eps > 0:
            raise ValueError("abs_eps must be positive")

    def normalize(self, res: float, shape: tuple[int, int] | None = None) -> float:
        if self.scale_mode and shape is not None and shape[0] * shape[1] > 0:
            return res / np.sqrt(shape[0] * shape[1])
        return res

    def accepts(self, res: float, shape: tuple[int, int] | None = None) -> bool:
        return bool(self.normalize(res, shape) <= self.abs_eps)


def approx_eq(a: np.ndarray, b: np.ndarray, tol: Tolerance | None = None) -> bool:
    tol = tol or Tolerance()
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        return False
    return tol.accepts(residual(a, b), a.shape if a.ndim == 2 else None)
