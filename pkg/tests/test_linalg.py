import numpy as np
import pytest
import scipy.linalg as sla
import scipy.sparse as sp

from galbrun2d.linalg import (NonConvergenceError, SingularMatrixError,
                              smallest_generalized_eigenvalue, sparse_solve)


def test_identity_solve():
    A = sp.identity(5, format="csc", dtype=complex)
    b = np.arange(5, dtype=complex) + 1j
    x, rep = sparse_solve(A, b, 1e-10)
    assert np.array_equal(x, b)
    assert rep.residual == 0.0
    assert rep.iterations == 0


def test_diagonal_complex_solve():
    A = sp.diags([np.array([2.0, 1.0 + 1.0j])], [0], format="csc")
    b = np.array([2.0, 1.0 + 1.0j])
    x, rep = sparse_solve(A, b, 1e-10)
    assert np.abs(x - 1.0).max() < 1e-14
    assert rep.method == "splu"


def test_random_system_residual_report():
    rng = np.random.default_rng(0)
    n = 50
    spd = rng.standard_normal((n, n))
    spd = spd @ spd.T + n * np.eye(n)
    skew = rng.standard_normal((n, n))
    A = sp.csc_matrix(spd + 0.5 * (skew - skew.T) * 1j)
    b = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    x, rep = sparse_solve(A, b, 1e-9)
    # dense oracle
    x_ref = sla.solve(A.toarray(), b)
    assert np.abs(x - x_ref).max() < 1e-9 * np.abs(x_ref).max()
    assert rep.residual <= 1e-9
    recomputed = np.linalg.norm(A @ x - b) / np.linalg.norm(b)
    assert rep.residual == pytest.approx(recomputed, abs=1e-16)


def test_zero_rhs_returns_zero():
    A = sp.identity(4, format="csc")
    x, rep = sparse_solve(A, np.zeros(4), 1e-8)
    assert np.abs(x).max() == 0.0
    assert rep.residual == 0.0


def test_singular_matrix_raises():
    A = sp.csc_matrix(np.array([[1.0, 1.0], [1.0, 1.0]]))
    with pytest.raises((SingularMatrixError, NonConvergenceError)):
        sparse_solve(A, np.array([1.0, 0.0]), 1e-8)


def test_tol_validation():
    A = sp.identity(2, format="csc")
    with pytest.raises(ValueError):
        sparse_solve(A, np.ones(2), 1.0)
    with pytest.raises(ValueError):
        sparse_solve(A, np.ones(2), 0.0)


def test_solve_roundtrip_accuracy():
    # Hermitian input: solving A x = A y recovers y
    rng = np.random.default_rng(1)
    n = 80
    H = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    A = sp.csc_matrix(H @ H.conj().T + n * np.eye(n))
    y = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    x, _ = sparse_solve(A, A @ y, 1e-10)
    assert np.linalg.norm(x - y) / np.linalg.norm(y) <= 10 * 1e-10


# ---------------------------------------------------------------------------
# generalized eigenvalues
# ---------------------------------------------------------------------------

def test_diag_pencils():
    S = sp.diags([np.array([3.0, 5.0])], [0])
    M = sp.identity(2)
    assert smallest_generalized_eigenvalue(S, M) == pytest.approx(3.0, abs=1e-12)
    S2 = sp.diags([np.array([4.0, 8.0])], [0])
    M2 = sp.diags([np.array([2.0, 2.0])], [0])
    assert smallest_generalized_eigenvalue(S2, M2) == pytest.approx(2.0, abs=1e-12)


def test_random_pencil_vs_dense_oracle():
    rng = np.random.default_rng(3)
    n = 40
    R = rng.standard_normal((n, n))
    S = R @ R.T
    Q = rng.standard_normal((n, n))
    M = Q @ Q.T + n * np.eye(n)
    got = smallest_generalized_eigenvalue(sp.csr_matrix(S), sp.csr_matrix(M))
    ref = sla.eigh(S, M, eigvals_only=True)[0]
    assert got == pytest.approx(ref, rel=1e-8)


def test_permutation_invariance():
    rng = np.random.default_rng(4)
    n = 30
    R = rng.standard_normal((n, n))
    S = R @ R.T
    M = np.eye(n) * 2.0
    perm = rng.permutation(n)
    got1 = smallest_generalized_eigenvalue(S, M)
    got2 = smallest_generalized_eigenvalue(S[np.ix_(perm, perm)],
                                           M[np.ix_(perm, perm)])
    assert got1 == pytest.approx(got2, rel=1e-9)


def test_deflation_removes_known_mode():
    # S has a zero mode along the all-ones vector; deflation must return the
    # smallest eigenvalue on the complement
    n = 12
    rng = np.random.default_rng(5)
    R = rng.standard_normal((n, n - 1))
    S = R @ R.T  # rank n-1
    ones = np.ones(n)
    S = S - np.outer(S @ ones, ones) / n - np.outer(ones, ones @ S) / n \
        + np.outer(ones, ones) * (ones @ S @ ones) / n**2  # ones in kernel
    M = np.eye(n)
    lam0 = smallest_generalized_eigenvalue(S, M)
    assert lam0 == pytest.approx(0.0, abs=1e-10)
    lam1 = smallest_generalized_eigenvalue(S, M, deflate=ones.reshape(-1, 1))
    w = np.linalg.eigvalsh(S)
    assert lam1 == pytest.approx(w[1], rel=1e-8)


def test_operator_path_matches_dense():
    # force the LOBPCG path with a large sparse pencil
    rng = np.random.default_rng(6)
    n = 1200
    main = rng.uniform(1.0, 3.0, n)
    off = rng.uniform(-0.4, 0.4, n - 1)
    S = sp.diags([off, main, off], [-1, 0, 1], format="csr")
    M = sp.diags([np.full(n, 2.0)], [0], format="csc")
    import scipy.sparse.linalg as spla
    S_op = spla.aslinearoperator(S)
    got = smallest_generalized_eigenvalue(S_op, M, tol=1e-10)
    ref = sla.eigh(S.toarray(), M.toarray(), eigvals_only=True,
                   subset_by_index=[0, 0])[0]
    assert got == pytest.approx(ref, rel=1e-6)
