"""Solver for the 2x2 block systems

    [A11  A12] [u]   [r_u]
    [A21  A22] [q] = [r_q]

produced by every time stepper.  The (2,2) block is a negative multiple of the
mass matrix, which is diagonal for the orthogonal modal basis, so q is
eliminated exactly and the Schur complement S = A11 - A12 A22^{-1} A21 is
solved by Krylov iteration preconditioned with a cached sparse LU of a
recent S.  The LU is refreshed whenever the iteration count degrades.
Small systems go to a dense solve, and a full sparse LU backs up the Schur
path when elimination round-off keeps it above the tolerance.  Every accepted solution is checked
against the relative residual of the full block system.
"""
import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import SolverError

log = logging.getLogger(__name__)

DENSE_LIMIT = 600


@dataclass
class BlockSystem:
    A11: sp.spmatrix
    A12: sp.spmatrix
    A21: sp.spmatrix
    A22: sp.spmatrix
    rhs_u: np.ndarray
    rhs_q: np.ndarray
    tol: float = 1e-12
    # optional precomputed A12 A22^{-1} A21 (constant across steps) and symmetry hint
    coupling: Optional[sp.spmatrix] = None
    symmetric: Optional[bool] = None

    @property
    def n(self):
        return self.A11.shape[0] + self.A22.shape[0]

    def full_matrix(self):
        return sp.bmat([[self.A11, self.A12], [self.A21, self.A22]], format="csr")

    def rhs(self):
        return np.concatenate([self.rhs_u, self.rhs_q])


@dataclass
class SolveReport:
    iterations: int
    residual: float
    method: str
    refactored: bool = False


@dataclass
class FactorCache:
    """Holds the LU used to precondition successive, slowly varying Schur complements."""
    refactor_after: int = 12
    lu: object = None
    shape: tuple = None
    factorizations: int = 0
    extra: dict = field(default_factory=dict)

    def factor(self, S, symmetric=False):
        S = _nonempty(S)
        if symmetric:
            self.lu = spla.splu(S.tocsc(), permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0,
                                options={"SymmetricMode": True})
        else:
            self.lu = spla.splu(S.tocsc(), permc_spec="COLAMD")
        self.shape = S.shape
        self.factorizations += 1


def _nonempty(K):
    """CSC copy of K; SuperLU can crash on empty rows or columns, so reject them first."""
    K = sp.csc_matrix(K)
    K.eliminate_zeros()
    if np.any(np.diff(K.indptr) == 0) or np.unique(K.indices).size < K.shape[0]:
        raise SolverError("matrix is structurally singular (empty row or column)")
    return K


def _check(system):
    n1, n2 = system.A11.shape[0], system.A22.shape[0]
    shapes = [system.A11.shape == (n1, n1), system.A12.shape == (n1, n2),
              system.A21.shape == (n2, n1), system.A22.shape == (n2, n2),
              np.shape(system.rhs_u) == (n1,), np.shape(system.rhs_q) == (n2,)]
    if not all(shapes):
        raise SolverError("block system has inconsistent dimensions")
    if not (0 < system.tol <= 1e-4):
        raise SolverError(f"tolerance must lie in (0, 1e-4], got {system.tol}")


def residual_norm(system, u, q):
    """Relative residual ||b - Kx|| / ||b|| computed block by block."""
    ru = system.rhs_u - system.A11 @ u - system.A12 @ q
    rq = system.rhs_q - system.A21 @ u - system.A22 @ q
    b = np.sqrt(np.dot(system.rhs_u, system.rhs_u) + np.dot(system.rhs_q, system.rhs_q))
    r = np.sqrt(np.dot(ru, ru) + np.dot(rq, rq))
    return r / b if b > 0 else r


def _diagonal(A):
    A = sp.csr_matrix(A)
    d = A.diagonal()
    off = A - sp.diags(d)
    if off.count_nonzero() or np.any(d == 0):
        return None
    return d


def solve_block(system: BlockSystem, method: str = "auto", cache: FactorCache = None,
                max_iter: int = None):
    """Solve the block system to relative residual ``system.tol``.

    Returns ``(u, q, SolveReport)``.  ``method`` is one of ``auto``,
    ``dense``, ``direct`` (sparse LU of the full system) or ``schur``.
    """
    _check(system)
    n1 = system.A11.shape[0]
    b = system.rhs()
    if not np.any(b):
        return np.zeros(n1), np.zeros(system.A22.shape[0]), SolveReport(0, 0.0, "zero")

    if method == "auto":
        if system.n < DENSE_LIMIT:
            method = "dense"
        elif _diagonal(system.A22) is not None:
            try:
                return solve_block(system, "schur", cache, max_iter)
            except SolverError as exc:
                # eliminating q can cost accuracy when the coupling dominates; the
                # full-system factorization does not have that floor
                log.debug("schur path failed (%s); falling back to direct", exc)
                method = "direct"
        else:
            method = "direct"

    try:
        u, q, report = _dispatch(system, method, cache, max_iter, b, n1)
    except (RuntimeError, np.linalg.LinAlgError, ValueError) as exc:
        if isinstance(exc, SolverError):
            raise
        raise SolverError(f"linear solve ({method}) broke down: {exc}") from exc

    if not np.isfinite(report.residual) or report.residual > system.tol:
        raise SolverError(f"linear solve ({report.method}) reached relative residual "
                          f"{report.residual:.3e} > tol {system.tol:.1e}", report.residual)
    return u, q, report


def _dispatch(system, method, cache, max_iter, b, n1):
    if method == "dense":
        x = sla.solve(system.full_matrix().toarray(), b)
        u, q = x[:n1], x[n1:]
        report = SolveReport(1, residual_norm(system, u, q), "dense")
    elif method == "direct":
        lu = spla.splu(_nonempty(system.full_matrix()), permc_spec="COLAMD")
        x = lu.solve(b)
        u, q = x[:n1], x[n1:]
        res = residual_norm(system, u, q)
        it = 1
        while res > system.tol and it < 5:
            x = x + lu.solve(b - system.full_matrix() @ x)
            u, q = x[:n1], x[n1:]
            res = residual_norm(system, u, q)
            it += 1
        report = SolveReport(it, res, "direct")
    elif method == "schur":
        u, q, report = _solve_schur(system, cache, max_iter)
    else:
        raise SolverError(f"unknown solver method {method!r}")
    return u, q, report


def _solve_schur(system, cache, max_iter):
    d = _diagonal(system.A22)
    if d is None:
        raise SolverError("schur method needs a diagonal (2,2) block")
    A11, A12, A21 = (sp.csr_matrix(m) for m in (system.A11, system.A12, system.A21))
    if system.coupling is None:
        S = (A11 - A12 @ sp.diags(1.0 / d) @ A21).tocsr()
    else:
        S = (A11 - system.coupling).tocsr()
    rhs = system.rhs_u - A12 @ (system.rhs_q / d)
    bnorm = np.linalg.norm(system.rhs())
    atol = 0.25 * system.tol * bnorm
    n = S.shape[0]
    max_iter = max_iter or min(10 * n, 500)
    symmetric = system.symmetric
    if symmetric is None:
        symmetric = abs(S - S.T).max() <= 1e-13 * abs(S).max()

    if cache is None:
        cache = FactorCache()
    refactored = False
    if cache.lu is None or cache.shape != S.shape:
        cache.factor(S, symmetric)
        refactored = True

    def krylov(x0, atol):
        return krylov_rhs(rhs, atol, x0)

    def krylov_rhs(b, atol, x0=None):
        count = [0]

        def cb(*_):
            count[0] += 1

        P = spla.LinearOperator(S.shape, matvec=cache.lu.solve, dtype=float)
        if symmetric:
            x, info = spla.cg(S, b, x0=x0, rtol=0.0, atol=atol, maxiter=max_iter, M=P,
                              callback=cb)
        else:
            x, info = spla.gmres(S, b, x0=x0, rtol=0.0, atol=atol, restart=50,
                                 maxiter=max_iter, M=P, callback=cb, callback_type="pr_norm")
        return x, info, count[0]

    x, info, its = krylov(cache.lu.solve(rhs), atol)
    if (info != 0 or its > cache.refactor_after) and not refactored:
        # preconditioner is stale: refactor on the current matrix and retry
        cache.factor(S, symmetric)
        refactored = True
        x, info, more = krylov(x if np.all(np.isfinite(x)) else None, atol)
        its += more
    u = x
    q = (system.rhs_q - A21 @ u) / d
    res = residual_norm(system, u, q)
    # Iterative refinement on the full block residual, with u and q corrected
    # independently: eliminating q loses accuracy when the coupling dominates.
    for _ in range(4):
        if res <= system.tol or not np.isfinite(res):
            break
        ru = system.rhs_u - A11 @ u - A12 @ q
        rq = system.rhs_q - A21 @ u - d * q
        rc = ru - A12 @ (rq / d)
        du, info, more = krylov_rhs(rc, 1e-3 * np.linalg.norm(rc))
        its += more
        u = u + du
        q = q + (rq - A21 @ du) / d
        res = residual_norm(system, u, q)
    return u, q, SolveReport(max(its, 1), res, "schur", refactored)
