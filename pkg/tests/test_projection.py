import math

import numpy as np
import pytest

from itervote.projection import DegenerateData, fit_pca, jacobi_eigh, project


def sym3_eigen_oracle(a):
    """Eigenpairs of a symmetric 3x3 matrix from the characteristic cubic.

    Roots by the trigonometric formula; eigenvectors as the cross product of
    two independent rows of (A - lambda I).
    """
    p1 = a[0, 1] ** 2 + a[0, 2] ** 2 + a[1, 2] ** 2
    q = np.trace(a) / 3
    p2 = (a[0, 0] - q) ** 2 + (a[1, 1] - q) ** 2 + (a[2, 2] - q) ** 2 + 2 * p1
    p = math.sqrt(p2 / 6)
    b = (a - q * np.eye(3)) / p
    r = np.linalg.det(b) / 2
    phi = math.acos(min(1.0, max(-1.0, r))) / 3
    lams = [q + 2 * p * math.cos(phi), q + 2 * p * math.cos(phi + 2 * math.pi / 3)]
    lams.insert(1, 3 * q - lams[0] - lams[1])
    vecs = []
    for lam in lams:
        m = a - lam * np.eye(3)
        crosses = [np.cross(m[0], m[1]), np.cross(m[0], m[2]), np.cross(m[1], m[2])]
        v = max(crosses, key=np.linalg.norm)
        vecs.append(v / np.linalg.norm(v))
    return np.array(lams), np.array(vecs).T


def principal_angles(q1, q2):
    s = np.linalg.svd(q1.T @ q2, compute_uv=False)
    return np.arccos(np.clip(s, -1, 1))


def test_jacobi_matches_cubic_oracle(rng):
    for _ in range(200):
        m = rng.normal(size=(3, 3)) * rng.uniform(0.1, 50)
        a = m @ m.T
        vals, vecs = jacobi_eigh(a)
        want_vals, want_vecs = sym3_eigen_oracle(a)
        np.testing.assert_allclose(vals, want_vals, rtol=1e-8, atol=1e-8 * np.abs(want_vals).max())
        for k in range(3):
            # eigenvectors are defined up to sign
            dot = abs(vecs[:, k] @ want_vecs[:, k])
            assert dot == pytest.approx(1.0, abs=1e-8)


def test_jacobi_reconstructs(rng):
    for d in (2, 5, 11, 20):
        m = rng.normal(size=(d, d))
        a = m + m.T
        vals, vecs = jacobi_eigh(a)
        np.testing.assert_allclose(vecs @ np.diag(vals) @ vecs.T, a, atol=1e-10)
        np.testing.assert_allclose(vecs.T @ vecs, np.eye(d), atol=1e-12)
        assert np.all(np.diff(vals) <= 0)


def test_jacobi_rejects_asymmetric():
    with pytest.raises(ValueError):
        jacobi_eigh(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_line_along_first_axis():
    pts = np.zeros((10, 4))
    pts[:, 0] = np.arange(10)
    basis = fit_pca(pts)
    np.testing.assert_allclose(basis.components[0], [1, 0, 0, 0], atol=1e-12)
    assert basis.explained_variance[1] == 0.0
    assert basis.explained_variance[0] == pytest.approx(np.var(np.arange(10), ddof=1))


def test_recovers_known_plane(rng):
    d, n = 11, 10_000
    q, _ = np.linalg.qr(rng.normal(size=(d, 2)))
    coeffs = rng.normal(scale=7.0, size=(n, 2))
    pts = 50.0 + coeffs @ q.T
    basis = fit_pca(pts)
    assert np.max(principal_angles(q, basis.components.T)) < 1e-6
    assert basis.explained_variance[0] == pytest.approx(49.0, rel=0.05)


def test_components_orthonormal_and_signed(rng):
    for _ in range(20):
        pts = rng.normal(size=(200, 11)) @ rng.normal(size=(11, 11))
        b = fit_pca(pts)
        np.testing.assert_allclose(b.components @ b.components.T, np.eye(2), atol=1e-9)
        assert b.explained_variance[0] >= b.explained_variance[1] >= 0
        for comp in b.components:
            first = comp[np.flatnonzero(np.abs(comp) > 1e-12)[0]]
            assert first > 0


def test_fit_is_order_free(rng):
    pts = rng.uniform(0, 100, size=(500, 11))
    a = fit_pca(pts)
    b = fit_pca(pts[rng.permutation(500)])
    np.testing.assert_allclose(a.components, b.components, atol=1e-10)
    np.testing.assert_allclose(a.mean, b.mean, atol=1e-12)


def test_fit_errors():
    with pytest.raises(DegenerateData):
        fit_pca(np.ones((5, 3)))
    with pytest.raises(ValueError):
        fit_pca(np.ones((1, 3)))
    with pytest.raises(ValueError):
        fit_pca(np.arange(5.0).reshape(5, 1))


def test_project_examples(rng):
    pts = rng.uniform(0, 100, size=(300, 6))
    b = fit_pca(pts)
    np.testing.assert_allclose(project(b, b.mean), [0, 0], atol=1e-12)
    np.testing.assert_allclose(project(b, b.mean + b.components[0]), [1, 0], atol=1e-12)
    xy = project(b, pts)
    np.testing.assert_allclose(xy.mean(axis=0), project(b, pts.mean(axis=0)), atol=1e-9)
    with pytest.raises(ValueError):
        project(b, np.zeros(5))
