"""Dense float64 vector arithmetic and thresholded Gram-Schmidt.

Inner products accumulate strictly left to right (``np.add.accumulate`` is
sequential by definition), so every result here is independent of BLAS build
and thread count. That keeps whole training runs bitwise reproducible from a
seed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimensionError, NumericError, ConfigurationError

__all__ = [
    "as_vector",
    "dot",
    "norm",
    "OrthonormalBasis",
    "gram_schmidt",
    "project_complement",
    "angle_between",
]


def as_vector(x, name: str = "vector") -> np.ndarray:
    """Coerce to a finite 1-D float64 array, validating on the way in."""
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1:
        raise DimensionError(f"{name} must be 1-D, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise NumericError(f"{name} contains non-finite entries")
    return v


def _seqdot(a: np.ndarray, b: np.ndarray) -> float:
    # Left-to-right accumulation; callers guarantee matching finite inputs.
    p = a * b
    if p.size == 0:
        return 0.0
    return float(np.add.accumulate(p)[-1])


def dot(a, b) -> float:
    """Inner product with a fixed left-to-right accumulation order."""
    av = as_vector(a, "a")
    bv = as_vector(b, "b")
    if av.size != bv.size:
        raise DimensionError(f"length mismatch: {av.size} vs {bv.size}")
    return _seqdot(av, bv)


def norm(a) -> float:
    """Euclidean norm built on the same fixed-order accumulation as dot."""
    av = as_vector(a, "a")
    return float(np.sqrt(_seqdot(av, av)))


def _remove_components(g: np.ndarray, rows: Sequence[np.ndarray]) -> np.ndarray:
    # One classical pass: all coefficients taken from the incoming vector,
    # then subtracted in basis order.
    coeffs = [_seqdot(g, u) for u in rows]
    out = g.copy()
    for c, u in zip(coeffs, rows):
        out -= c * u
    return out


@dataclass(frozen=True)
class OrthonormalBasis:
    """Orthonormal set stored row-wise: ``vectors[j]`` is the j-th direction.

    Invariants (guaranteed by :func:`gram_schmidt` with epsilon=0): every row
    has unit norm to 1e-10 and distinct rows have inner products below 1e-10
    in magnitude.
    """

    vectors: np.ndarray  # (rank, dim) float64

    def __post_init__(self):
        v = np.asarray(self.vectors, dtype=np.float64)
        if v.ndim != 2:
            raise DimensionError(f"basis must be 2-D, got shape {v.shape}")
        if v.size and not np.all(np.isfinite(v)):
            raise NumericError("basis contains non-finite entries")
        object.__setattr__(self, "vectors", v)

    @classmethod
    def empty(cls, dim: int = 0) -> "OrthonormalBasis":
        return cls(np.zeros((0, dim)))

    @property
    def rank(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def gram(self) -> np.ndarray:
        """Explicit Gram matrix U U^T, used by orthonormality checks."""
        return self.vectors @ self.vectors.T

    def orthonormality_defect(self) -> float:
        """max |U U^T - I|, zero rank gives 0."""
        if self.rank == 0:
            return 0.0
        return float(np.abs(self.gram() - np.eye(self.rank)).max())


def gram_schmidt(candidates, delta: float, epsilon: float = 0.0) -> OrthonormalBasis:
    """Orthonormalize candidates in order, discarding near-collinear ones.

    A candidate is accepted iff the norm of its residual, after removing
    projections onto the previously accepted directions, is at least
    ``delta``. Accepted residuals get one extra re-orthogonalization pass
    before normalizing by (norm + epsilon); a single classical pass loses
    orthogonality on nearly collinear inputs, and the extra pass does not
    change which candidates are accepted.

    ``delta`` is an absolute threshold here. Callers that want the
    scale-invariant default should pass ``delta_rel * max(candidate norms)``
    as :func:`orthoproj.subspace.estimate_subspace` does. A zero candidate is
    always discarded by the threshold, never normalized.
    """
    if not np.isfinite(delta) or delta <= 0:
        raise ConfigurationError(f"delta must be positive and finite, got {delta}")
    if not np.isfinite(epsilon) or epsilon < 0:
        raise ConfigurationError(f"epsilon must be non-negative, got {epsilon}")
    vs = [as_vector(c, f"candidate {i}") for i, c in enumerate(candidates)]
    if not vs:
        return OrthonormalBasis.empty(0)
    dim = vs[0].size
    for i, v in enumerate(vs):
        if v.size != dim:
            raise DimensionError(f"candidate {i} has length {v.size}, expected {dim}")

    accepted: list[np.ndarray] = []
    for g in vs:
        residual = _remove_components(g, accepted)
        if norm(residual) < delta:
            continue
        residual = _remove_components(residual, accepted)
        n = norm(residual)
        if n + epsilon <= 0.0:
            raise NumericError("residual collapsed to zero during re-orthogonalization")
        accepted.append(residual / (n + epsilon))
    if not accepted:
        return OrthonormalBasis.empty(dim)
    return OrthonormalBasis(np.array(accepted))


def project_complement(g, basis: OrthonormalBasis) -> np.ndarray:
    """Component of g orthogonal to the basis span.

    Coefficients are taken from g itself, so
    ``g == result + sum_j dot(g, u_j) * u_j`` holds to rounding, the result
    never exceeds g in norm, and re-projecting is idempotent. An empty basis
    returns g unchanged (as a copy).
    """
    gv = as_vector(g, "g")
    if basis.rank == 0:
        return gv.copy()
    if basis.dim != gv.size:
        raise DimensionError(f"g has length {gv.size}, basis dimension is {basis.dim}")
    return _remove_components(gv, basis.vectors)


def angle_between(a, b) -> float:
    """Angle in radians between two nonzero vectors.

    Uses atan2 of the transverse and parallel components, which stays
    accurate near 0 and pi where acos(cos) loses half the digits.
    """
    av = as_vector(a, "a")
    bv = as_vector(b, "b")
    if av.size != bv.size:
        raise DimensionError(f"length mismatch: {av.size} vs {bv.size}")
    na = norm(av)
    nb = norm(bv)
    if na == 0.0 or nb == 0.0:
        raise NumericError("angle undefined for zero vectors")
    ua = av / na
    parallel = _seqdot(ua, bv)
    transverse = norm(bv - parallel * ua)
    return float(np.arctan2(transverse, parallel))
