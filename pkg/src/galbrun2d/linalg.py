"""Complex sparse solves and symmetric generalized eigenvalue extraction."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla


class SingularMatrixError(RuntimeError):
    pass


class NonConvergenceError(RuntimeError):
    pass


@dataclass
class SolveReport:
    residual: float          # ||Ax - b|| / ||b||, recomputed after the solve
    iterations: int          # 0 for direct
    method: str


def _as_csc(A):
    return A.tocsc() if sp.issparse(A) else sp.csc_matrix(A)


def nested_dissection_order(A, coords, leaf: int = 64) -> np.ndarray:
    """Fill-reducing permutation by recursive coordinate bisection with
    graph separators; effective for mesh matrices, periodic wrap included.

    `coords` holds one 2D location per unknown; ties and non-mesh rows are
    fine (they land in whatever half the median assigns)."""
    A = sp.csr_matrix(A)
    pattern = sp.csr_matrix((np.ones(A.nnz), A.indices, A.indptr), shape=A.shape)
    graph = (pattern + pattern.T).tocsr()
    coords = np.asarray(coords, dtype=float)
    out = []

    def rec(idx):
        if len(idx) <= leaf:
            out.append(idx)
            return
        c = coords[idx]
        axis = int(np.ptp(c[:, 0]) < np.ptp(c[:, 1]))
        med = np.median(c[:, axis])
        mask0 = c[:, axis] <= med
        side0, side1 = idx[mask0], idx[~mask0]
        if len(side0) == 0 or len(side1) == 0:
            out.append(idx)
            return
        sep_mask = np.diff(graph[side0][:, side1].indptr) > 0
        rec(side0[~sep_mask])
        rec(side1)
        out.append(side0[sep_mask])

    rec(np.arange(A.shape[0]))
    order = np.concatenate([o for o in out if len(o)])
    return order


_SINGLE_PRECISION_N = 200_000


def _permuted(A, order):
    return A[order][:, order].tocsc()


def _direct_solve(A, b, order=None):
    """LU solve; ND-ordered symmetric-mode factorization when an ordering is
    supplied, single-precision factor plus iterative polish for very large
    systems (memory), COLAMD otherwise."""
    n = A.shape[0]
    if order is not None:
        inv = np.empty_like(order)
        inv[order] = np.arange(n)
        kw = dict(permc_spec="NATURAL", diag_pivot_thresh=0.1,
                  options=dict(SymmetricMode=True))
    else:
        kw = dict(permc_spec="COLAMD")
    if n > _SINGLE_PRECISION_N:
        # factor in single precision (halves the fill storage), then polish
        # with preconditioned GMRES against the double-precision operator
        A32 = A.astype(np.complex64)
        Ap32 = A32 if order is None else _permuted(A32, order)
        del A32
        lu = spla.splu(Ap32, **kw)
        del Ap32
        if order is None:
            def apply_prec(v):
                return lu.solve(v.astype(np.complex64)).astype(complex)
        else:
            def apply_prec(v):
                return lu.solve(v[order].astype(np.complex64)).astype(complex)[inv]
        prec = spla.LinearOperator(A.shape, dtype=complex, matvec=apply_prec)
        x, _ = spla.gmres(A, b, rtol=1e-12, atol=0.0, restart=30,
                          maxiter=4, M=prec)
        return x, "splu32+gmres"
    Ap = A if order is None else _permuted(A, order)
    lu = spla.splu(Ap, **kw)
    x = lu.solve(b if order is None else b[order])
    if order is not None:
        x = x[inv]
    return x, "splu"


def sparse_solve(A, b, tol: float = 1e-8, order=None):
    """Solve Ax = b; sparse LU first, ILU-preconditioned GMRES as fallback.

    `order` is an optional fill-reducing permutation (see
    nested_dissection_order).  Returns (x, SolveReport).  Raises
    SingularMatrixError for a singular-to-tolerance factorization and
    NonConvergenceError if no method reaches the requested residual.
    """
    if not (0 < tol <= 1e-2):
        raise ValueError(f"tol={tol} outside (0, 1e-2]")
    A = _as_csc(A)
    n, m = A.shape
    if n != m or len(b) != n:
        raise ValueError("matrix/vector shape mismatch")
    b = np.asarray(b, dtype=complex)
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        return np.zeros(n, dtype=complex), SolveReport(0.0, 0, "trivial")

    def residual(x):
        return float(np.linalg.norm(A @ x - b)) / bnorm

    lu_error = None
    try:
        x, method = _direct_solve(A, b, order)
        if np.all(np.isfinite(x)):
            r = residual(x)
            if r <= tol:
                return x, SolveReport(r, 0, method)
            lu_error = f"{method} residual {r:.2e} above tol"
        else:
            lu_error = "direct solve produced non-finite solution"
    except MemoryError:
        lu_error = "direct solve out of memory"
    except RuntimeError as exc:
        if "singular" in str(exc).lower():
            raise SingularMatrixError(str(exc)) from exc
        lu_error = str(exc)

    try:
        ilu = spla.spilu(A, drop_tol=1e-5, fill_factor=10.0)
    except (RuntimeError, MemoryError) as exc:
        raise NonConvergenceError(f"{lu_error}; ILU failed: {exc}") from exc
    prec = spla.LinearOperator(A.shape, matvec=ilu.solve, dtype=complex)
    iters = 0

    def count(_):
        nonlocal iters
        iters += 1

    x, info = spla.gmres(A, b, rtol=0.1 * tol, atol=0.0, restart=200,
                         maxiter=40, M=prec, callback=count,
                         callback_type="pr_norm")
    r = residual(x)
    if info != 0 or r > tol:
        raise NonConvergenceError(
            f"{lu_error}; GMRES stalled at residual {r:.2e} after {iters} iterations")
    return x, SolveReport(r, iters, "gmres+ilu")


# ---------------------------------------------------------------------------
# generalized symmetric eigenvalues
# ---------------------------------------------------------------------------

def _dense(A):
    if sp.issparse(A):
        return A.toarray()
    return np.asarray(A)


def _deflated_dense_smallest(S, M, deflate):
    if deflate is not None:
        Z = sla.null_space(deflate.conj().T @ M)
        S = Z.conj().T @ S @ Z
        M = Z.conj().T @ M @ Z
    vals = sla.eigh(S, M, eigvals_only=True, subset_by_index=[0, 0])
    return float(vals[0])


def smallest_generalized_eigenvalue(S, M, tol: float = 1e-9, deflate=None,
                                    seed: int = 0, maxiter: int = 4000) -> float:
    """Smallest eigenvalue of S x = lambda M x (S symmetric/Hermitian PSD,
    M SPD).

    `S` may be a sparse matrix, dense array, or LinearOperator; `deflate`
    is an optional (n, m) block of known modes to project out (M-orthogonal
    constraint).  Dense pencils are solved directly; larger ones run
    preconditioned LOBPCG with a deterministic seeded start.
    """
    n = S.shape[0]
    is_operator = isinstance(S, spla.LinearOperator) and not sp.issparse(S)
    if deflate is not None:
        deflate = np.atleast_2d(np.asarray(deflate, dtype=float))
        if deflate.shape[0] != n:
            deflate = deflate.T
    if not is_operator and n <= 900:
        return _deflated_dense_smallest(_dense(S), _dense(M), deflate)

    M = _as_csc(M)
    lu_m = spla.splu(M)
    prec = spla.LinearOperator(M.shape, matvec=lu_m.solve, dtype=float)
    rng = np.random.default_rng(seed)
    bs = min(n - 1, 6 + (0 if deflate is None else deflate.shape[1]))
    X0 = rng.standard_normal((n, bs))
    with np.errstate(all="ignore"):
        vals, vecs = spla.lobpcg(S, X0, B=M, M=prec, Y=deflate, tol=tol,
                                 maxiter=maxiter, largest=False)
    order = np.argsort(vals)
    lam = float(vals[order[0]])
    x = vecs[:, order[0]]
    res = np.linalg.norm(S @ x - lam * (M @ x)) / max(np.linalg.norm(S @ x), 1e-300)
    if not np.isfinite(lam) or (res > 1e-5 and abs(lam) > 1e-12):
        raise NonConvergenceError(
            f"LOBPCG pencil residual {res:.2e} for eigenvalue {lam:.6e}")
    return lam
