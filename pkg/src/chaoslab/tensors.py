"""Symmetric tensors over a Gaussian space's raw basis, and contractions.

A :class:`SymTensor` of order q over a d-dimensional space stores a dense
coefficient array indexed by {0..d−1}^q plus a symmetry flag.  Symmetric
tensors additionally round-trip through a packed representation over
non-decreasing multi-indices (canonical ordering with multiplicity
bookkeeping), whose flat size is C(d+q−1, q).

Contractions pair the *last* r slots of both tensors through the space's Gram
matrix (not the Euclidean dot product); the result is not symmetrized unless
requested.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

MAX_ORDER = 6
_MAX_DENSE = 1 << 24  # guard on d**q dense storage


def _dense_shape(dim: int, order: int) -> tuple[int, ...]:
    return (dim,) * order


class SymTensor:
    """Order-q tensor over a space's raw basis (dense storage)."""

    __slots__ = ("space", "order", "coeffs", "symmetric")

    def __init__(self, space, coeffs, symmetric: bool | None = None):
        order_arr = np.asarray(coeffs, dtype=float)
        q = order_arr.ndim
        if q > MAX_ORDER:
            raise ValueError(f"tensor order {q} exceeds cap {MAX_ORDER}")
        d = space.dim
        if order_arr.shape != _dense_shape(d, q):
            raise ValueError(
                f"coefficient shape {order_arr.shape} does not match dimension {d}, order {q}"
            )
        if d ** q > _MAX_DENSE:
            raise ValueError("tensor too large for dense storage")
        self.space = space
        self.order = q
        self.coeffs = order_arr
        if symmetric is None:
            symmetric = q <= 1 or self._symmetry_error() <= 1e-12
        self.symmetric = bool(symmetric)

    # -- constructors ------------------------------------------------------

    @classmethod
    def zeros(cls, space, order: int) -> "SymTensor":
        return cls(space, np.zeros(_dense_shape(space.dim, order)), symmetric=True)

    @classmethod
    def basis_vector(cls, space, i: int) -> "SymTensor":
        e = np.zeros(space.dim)
        e[i] = 1.0
        return cls(space, e, symmetric=True)

    @classmethod
    def from_packed(cls, space, order: int, packed) -> "SymTensor":
        """Inverse of :meth:`packed_coeffs` (symmetric tensors only)."""
        packed = np.asarray(packed, dtype=float)
        d = space.dim
        idxs = list(itertools.combinations_with_replacement(range(d), order))
        if packed.shape != (len(idxs),):
            raise ValueError(
                f"packed length {packed.shape} != C(d+q-1,q) = {len(idxs)}"
            )
        dense = np.zeros(_dense_shape(d, order))
        for value, idx in zip(packed, idxs):
            for perm in set(itertools.permutations(idx)):
                dense[perm] = value
        return cls(space, dense, symmetric=True)

    # -- symmetry ----------------------------------------------------------

    def _symmetry_error(self) -> float:
        if self.order <= 1:
            return 0.0
        err = 0.0
        base = self.coeffs
        for perm in itertools.permutations(range(self.order)):
            err = max(err, float(np.abs(np.transpose(base, perm) - base).max()))
        return err

    def symmetrize(self) -> "SymTensor":
        """Average over all slot permutations."""
        if self.order <= 1 or self.symmetric:
            return SymTensor(self.space, self.coeffs.copy(), symmetric=True)
        perms = list(itertools.permutations(range(self.order)))
        acc = np.zeros_like(self.coeffs)
        for perm in perms:
            acc += np.transpose(self.coeffs, perm)
        return SymTensor(self.space, acc / len(perms), symmetric=True)

    def packed_coeffs(self) -> np.ndarray:
        """Canonical non-decreasing multi-index storage; length C(d+q−1, q)."""
        if not self.symmetric:
            raise ValueError("packed storage is defined for symmetric tensors")
        idxs = itertools.combinations_with_replacement(range(self.space.dim), self.order)
        return np.array([self.coeffs[idx] for idx in idxs])

    @staticmethod
    def packed_size(dim: int, order: int) -> int:
        return math.comb(dim + order - 1, order)

    # -- algebra -----------------------------------------------------------

    def __add__(self, other: "SymTensor") -> "SymTensor":
        self._check_compatible(other, self.order)
        return SymTensor(
            self.space,
            self.coeffs + other.coeffs,
            symmetric=self.symmetric and other.symmetric,
        )

    def __mul__(self, scalar: float) -> "SymTensor":
        return SymTensor(self.space, self.coeffs * float(scalar), symmetric=self.symmetric)

    __rmul__ = __mul__

    def _check_compatible(self, other: "SymTensor", r: int) -> None:
        if self.space is not other.space and not np.array_equal(
            self.space.gram, other.space.gram
        ):
            raise ValueError("space mismatch: tensors live over different spaces")
        if not 0 <= r <= min(self.order, other.order):
            raise ValueError(
                f"contraction order r={r} out of range 0..{min(self.order, other.order)}"
            )

    def __repr__(self):
        return (
            f"SymTensor(dim={self.space.dim}, order={self.order}, "
            f"symmetric={self.symmetric})"
        )


def contract(f: SymTensor, g: SymTensor, r: int, symmetrize: bool = False):
    """r-th contraction f ⊗_r g, pairing the last r slots through the Gram matrix.

    Returns a SymTensor of order p+q−2r, or a float when the result is a
    scalar (r = p = q), in which case it equals ⟨f, g⟩ over the tensor-power
    inner product.
    """
    f._check_compatible(g, r)
    p, q = f.order, g.order
    gram = f.space.gram
    A = f.coeffs
    # Apply the Gram matrix to each of f's last r slots (positions p−r..p−1).
    # Each tensordot removes the slot and appends its transform at the end, so
    # after r passes the transformed slots sit, in order, at the tail.
    for _ in range(r):
        A = np.tensordot(A, gram, axes=([p - r], [0]))
    if r == 0:
        out = np.tensordot(A, g.coeffs, axes=0)
    else:
        out = np.tensordot(
            A,
            g.coeffs,
            axes=([p - r + t for t in range(r)], [q - r + t for t in range(r)]),
        )
    if out.ndim == 0:
        return float(out)
    result = SymTensor(f.space, out, symmetric=False)
    if symmetrize:
        result = result.symmetrize()
    return result
