"""Affine and linear subspace geometry in finite-dimensional coordinate spaces.

An affine subspace is stored as an offset vector plus an orthonormal basis of
its linear part, over either the real or the complex field.  All distances are
Euclidean (Hermitian in the complex case); the exact minimizer of
``||x - xi||`` over the subspace is the orthogonal projection, so point-to-
subspace distances here are exact up to roundoff.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

ORTHO_TOL = 1e-12
DROP_TOL = 1e-10


def _as_vector(x) -> np.ndarray:
    x = np.asarray(x)
    if x.ndim != 1 or x.size == 0:
        raise ValueError(f"expected a 1-d vector, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("vector has non-finite entries")
    if not np.iscomplexobj(x):
        x = x.astype(np.float64)
    return x


def orthonormal_columns(columns: np.ndarray, drop_tol: float = DROP_TOL) -> np.ndarray:
    """Orthonormal basis of the column span, dropping near-dependent directions.

    Rank decisions are made via SVD: singular values at or below
    ``drop_tol * sigma_max`` are treated as numerically dependent and dropped,
    so repeated joins and sums cannot inflate dimension through roundoff.
    Returns a ``(dim, r)`` array with exactly orthonormal columns (``r`` may
    be 0).
    """
    columns = np.asarray(columns)
    if columns.ndim != 2:
        raise ValueError(f"expected a (dim, k) array, got shape {columns.shape}")
    dim = columns.shape[0]
    dtype = np.complex128 if np.iscomplexobj(columns) else np.float64
    if columns.shape[1] == 0:
        return np.zeros((dim, 0), dtype=dtype)
    u, s, _ = np.linalg.svd(columns.astype(dtype), full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((dim, 0), dtype=dtype)
    rank = int(np.sum(s > drop_tol * s[0]))
    return u[:, :rank]


@dataclass(frozen=True)
class AffineSubspace:
    """An affine subspace ``offset + span(basis)`` with orthonormal basis.

    ``basis`` has shape ``(ambient_dim, k)`` with mutually orthonormal
    columns; ``k = 0`` encodes a single point.  A zero offset makes this a
    linear subspace.
    """

    offset: np.ndarray
    basis: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        offset = _as_vector(self.offset)
        basis = self.basis
        if basis is None:
            basis = np.zeros((offset.size, 0))
        basis = np.asarray(basis)
        if basis.ndim != 2 or basis.shape[0] != offset.size:
            raise ValueError(
                f"basis shape {basis.shape} does not match ambient dimension {offset.size}"
            )
        if basis.shape[1] > offset.size:
            raise ValueError("basis cannot have more vectors than the ambient dimension")
        if basis.size and not np.all(np.isfinite(basis)):
            raise ValueError("basis has non-finite entries")
        if np.iscomplexobj(basis) or np.iscomplexobj(offset):
            offset = offset.astype(np.complex128)
            basis = basis.astype(np.complex128)
        else:
            basis = basis.astype(np.float64)
        if basis.shape[1]:
            gram = basis.conj().T @ basis
            if np.max(np.abs(gram - np.eye(basis.shape[1]))) > ORTHO_TOL:
                raise ValueError("basis columns are not orthonormal")
        offset.setflags(write=False)
        basis.setflags(write=False)
        object.__setattr__(self, "offset", offset)
        object.__setattr__(self, "basis", basis)

    @classmethod
    def from_span(cls, offset, directions, drop_tol: float = DROP_TOL) -> "AffineSubspace":
        """Build a subspace from raw (not necessarily independent) directions."""
        offset = _as_vector(offset)
        directions = np.asarray(directions, dtype=np.complex128 if np.iscomplexobj(offset) else None)
        if directions.size == 0:
            directions = np.zeros((offset.size, 0))
        return cls(offset, orthonormal_columns(directions, drop_tol))

    @classmethod
    def point(cls, offset) -> "AffineSubspace":
        offset = _as_vector(offset)
        return cls(offset, np.zeros((offset.size, 0), dtype=offset.dtype))

    @property
    def ambient_dim(self) -> int:
        return self.offset.size

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @property
    def is_linear(self) -> bool:
        return not np.any(self.offset)

    def project(self, x) -> np.ndarray:
        """Closest point of the subspace to ``x``."""
        x = _as_vector(x)
        if x.size != self.ambient_dim:
            raise ValueError(f"dimension mismatch: {x.size} vs {self.ambient_dim}")
        rel = x - self.offset
        if self.dim:
            rel = self.basis @ (self.basis.conj().T @ rel)
        else:
            rel = np.zeros_like(rel)
        return self.offset + rel


def point_distance(x, subspace: AffineSubspace) -> float:
    """Distance from a point to an affine subspace (exact orthogonal residual)."""
    x = _as_vector(x)
    if x.size != subspace.ambient_dim:
        raise ValueError(f"dimension mismatch: {x.size} vs {subspace.ambient_dim}")
    rel = x - subspace.offset
    if subspace.dim:
        rel = rel - subspace.basis @ (subspace.basis.conj().T @ rel)
    return float(np.linalg.norm(rel))


def set_distance(points, subspace: AffineSubspace) -> float:
    """Sup over the point set of the distance to the subspace.

    ``points`` is a nonempty sequence of vectors or a ``(count, dim)`` array.
    """
    pts = np.asarray(points)
    if pts.ndim == 1:
        pts = pts[None, :]
    if pts.size == 0:
        raise ValueError("empty point set")
    if pts.ndim != 2 or pts.shape[1] != subspace.ambient_dim:
        raise ValueError(
            f"dimension mismatch: points of shape {pts.shape} vs ambient {subspace.ambient_dim}"
        )
    rel = pts - subspace.offset[None, :]
    if subspace.dim:
        coeff = rel @ subspace.basis.conj()
        rel = rel - coeff @ subspace.basis.T
    return float(np.max(np.linalg.norm(rel, axis=1)))


def affine_join(w1: AffineSubspace, w2: AffineSubspace) -> AffineSubspace:
    """Affine span of the union of two affine subspaces.

    The linear part is the orthonormalized span of both bases together with
    the offset difference, so the result contains both inputs and its
    dimension is at most ``dim(w1) + dim(w2) + 1``.
    """
    if w1.ambient_dim != w2.ambient_dim:
        raise ValueError(
            f"dimension mismatch: {w1.ambient_dim} vs {w2.ambient_dim}"
        )
    diff = (w2.offset - w1.offset)[:, None]
    directions = np.hstack([w1.basis, w2.basis, diff])
    return AffineSubspace(w1.offset, orthonormal_columns(directions))


def subspace_sum(w1: AffineSubspace, w2_linear: AffineSubspace) -> AffineSubspace:
    """Minkowski sum of an affine subspace with a linear subspace.

    ``w2_linear`` must have zero offset; the result keeps ``w1``'s offset and
    spans the union of both linear parts.
    """
    if w1.ambient_dim != w2_linear.ambient_dim:
        raise ValueError(
            f"dimension mismatch: {w1.ambient_dim} vs {w2_linear.ambient_dim}"
        )
    if not w2_linear.is_linear:
        raise ValueError("second operand must be a linear subspace (zero offset)")
    directions = np.hstack([w1.basis, w2_linear.basis])
    return AffineSubspace(w1.offset, orthonormal_columns(directions))
