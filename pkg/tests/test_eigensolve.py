import numpy as np
from scipy.optimize import linear_sum_assignment

from stabopf.eigensolve import real_eigenvalues


def charpoly_coefficients(A):
    """Faddeev-LeVerrier characteristic polynomial (independent of any
    eigenvalue machinery): returns [1, c1, ..., cn] for det(sI - A)."""
    n = A.shape[0]
    coeffs = np.zeros(n + 1)
    coeffs[0] = 1.0
    M = np.zeros_like(A)
    for k in range(1, n + 1):
        M = A @ M + coeffs[k - 1] * np.eye(n)
        coeffs[k] = -np.trace(A @ M) / k
    return coeffs


def matched_error(mine, ref):
    C = np.abs(mine[:, None] - ref[None, :])
    r, c = linear_sum_assignment(C)
    return float(C[r, c].max())


def test_against_characteristic_polynomial_roots():
    """Independent oracle: Faddeev-LeVerrier coefficients + companion roots."""
    rng = np.random.default_rng(1234)
    for _ in range(120):
        n = int(rng.integers(2, 9))
        A = rng.standard_normal((n, n)) * rng.uniform(0.2, 3.0)
        lam = real_eigenvalues(A)
        roots = np.roots(charpoly_coefficients(A))
        scale = max(1.0, float(np.abs(roots).max()))
        assert matched_error(lam, roots) / scale < 1e-8


def test_structured_matrices():
    assert np.allclose(np.sort_complex(real_eigenvalues(np.diag([3.0, -1.0, 2.0]))),
                       [-1.0, 2.0, 3.0])
    # rotation block: pure imaginary pair
    A = np.array([[0.0, 1.0], [-1.0, 0.0]])
    lam = np.sort_complex(real_eigenvalues(A))
    assert np.allclose(lam, [-1j, 1j])
    # nilpotent (defective): all zeros
    N = np.triu(np.ones((4, 4)), 1)
    assert np.max(np.abs(real_eigenvalues(N))) < 1e-6
    # empty-ish sizes
    assert real_eigenvalues(np.array([[2.5]]))[0] == 2.5


def test_companion_form_matches_roots():
    rng = np.random.default_rng(77)
    for _ in range(30):
        coeffs = rng.standard_normal(6)
        C = np.zeros((6, 6))
        C[0, :] = -coeffs
        C[1:, :-1] = np.eye(5)
        lam = real_eigenvalues(C)
        ref = np.roots(np.concatenate([[1.0], coeffs]))
        assert matched_error(lam, ref) < 1e-8 * max(1.0, np.abs(ref).max())


def test_similarity_invariance():
    rng = np.random.default_rng(5)
    A = rng.standard_normal((7, 7))
    Q, _ = np.linalg.qr(rng.standard_normal((7, 7)))
    lam1 = real_eigenvalues(A)
    lam2 = real_eigenvalues(Q @ A @ Q.T)
    assert matched_error(lam1, lam2) < 1e-9 * max(1.0, np.abs(lam1).max())


def test_state_matrix_scale():
    """Matrices with the magnitude spread the droop models produce."""
    rng = np.random.default_rng(9)
    for _ in range(40):
        A = np.zeros((6, 6))
        A[:2, 2:4] = np.eye(2) * 377.0
        A[2:4, :2] = -rng.uniform(10, 500, (2, 2))
        A[2:4, 2:4] = -np.eye(2) * 10
        A[4:, 4:] = -np.eye(2) * 10 - rng.uniform(0, 300, (2, 2))
        A[2:4, 4:] = -rng.uniform(0, 200, (2, 2))
        A[4:, :2] = -rng.uniform(0, 200, (2, 2))
        lam = real_eigenvalues(A)
        roots = np.roots(charpoly_coefficients(A))
        assert matched_error(lam, roots) / max(1.0, np.abs(roots).max()) < 1e-7
