"""Two-component PCA used to draw the d-dimensional state in the plane.

The basis is fit once on the starting positions and reused for every frame,
so successive frames share axes.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DimensionMismatch, InvalidValue


class DegenerateData(InvalidValue):
    pass


def jacobi_eigh(a: np.ndarray, tol: float = 1e-12, max_sweeps: int = 100) -> tuple:
    """Eigenvalues and eigenvectors of a symmetric matrix by cyclic Jacobi rotations.

    Sweeps stop once the off-diagonal Frobenius norm falls below
    ``tol * ||a||_F``. Returns ``(values, vectors)`` sorted by descending
    eigenvalue, eigenvectors in columns.
    """
    a = np.array(a, dtype=float)
    n = a.shape[0]
    if a.ndim != 2 or a.shape[1] != n:
        raise InvalidValue(f"expected a square matrix, got shape {a.shape}")
    if not np.allclose(a, a.T, rtol=0, atol=1e-12 * max(1.0, np.abs(a).max())):
        raise InvalidValue("matrix is not symmetric")
    a = (a + a.T) / 2
    v = np.eye(n)
    scale = np.linalg.norm(a)
    threshold = tol * scale if scale > 0 else 0.0

    def off(m):
        return np.linalg.norm(m - np.diag(np.diag(m)))

    for _ in range(max_sweeps):
        if off(a) <= threshold:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-18 * (abs(a[p, p]) + abs(a[q, q])):
                    # below rounding of the diagonal; rotating would overflow theta
                    a[p, q] = a[q, p] = 0.0
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0)) if theta != 0 else 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                # A <- J^T A J with J the (p, q) rotation
                ap = a[:, p].copy()
                aq = a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                rp = a[p, :].copy()
                rq = a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                a[p, q] = a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    values = np.diag(a).copy()
    order = np.argsort(-values, kind="stable")
    return values[order], v[:, order]


def _canonical_sign(vec: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    nz = np.flatnonzero(np.abs(vec) > tol)
    if nz.size and vec[nz[0]] < 0:
        return -vec
    return vec


@dataclass(frozen=True, eq=False)
class PcaBasis:
    mean: np.ndarray
    components: np.ndarray  # (2, d), rows orthonormal
    explained_variance: np.ndarray  # (2,), descending

    @property
    def dimension(self) -> int:
        return self.mean.shape[0]


def fit_pca(positions) -> PcaBasis:
    x = np.asarray(positions, dtype=float)
    if x.ndim != 2 or x.shape[0] < 2:
        raise InvalidValue("PCA needs at least two points")
    if x.shape[1] < 2:
        raise InvalidValue("PCA to the plane needs dimension >= 2")
    mean = x.mean(axis=0)
    centered = x - mean
    if not np.any(centered):
        raise DegenerateData("all points are identical; principal axes are undefined")
    cov = centered.T @ centered / (x.shape[0] - 1)
    values, vectors = jacobi_eigh(cov)
    comps = np.array([_canonical_sign(vectors[:, i]) for i in range(2)])
    variance = np.maximum(values[:2], 0.0)
    return PcaBasis(mean, comps, variance)


def project(basis: PcaBasis, p) -> np.ndarray:
    """Coordinates of ``p`` (a point or an (n, d) array) in the fitted plane."""
    p = np.asarray(p, dtype=float)
    if p.shape[-1] != basis.dimension:
        raise DimensionMismatch(p.shape[-1], basis.dimension)
    return (p - basis.mean) @ basis.components.T
