"""Eigensolvers for the generalized problem S x = lambda M x.

The mass matrix is diagonal and strictly positive, so the problem is reduced
to an ordinary symmetric one via D = M^-1/2 S M^-1/2 and back-transformed
with phi = M^-1/2 y.  That keeps the spectrum real and makes the computed
eigenvectors orthogonal in the m-inner product, which a nonsymmetric solve
of M^-1 S would not guarantee.

Normalization and ordering are deterministic so that exported files are
byte-identical across runs: eigenvalues ascending, each eigenvector scaled
to <phi, phi>_m = 1, and the sign chosen so the entry of largest absolute
value is positive (ties within 1e-12 of the max resolved to the lowest
index).  Tiny negative eigenvalues from roundoff are clamped to zero; the
operators are positive semidefinite by construction.

The dense path (scipy.linalg.eigh on D) is the reference for dimensions up
to the guard; the Krylov path (ARPACK with full reorthogonalization of the
restarted basis) covers extremal windows at larger sizes and is validated
against the dense path on overlap.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg
import scipy.sparse.linalg
from scipy import sparse
from scipy.sparse.linalg import ArpackNoConvergence

from .operators import OperatorBundle

DENSE_GUARD_DEFAULT = 6000
RESIDUAL_TOL_DEFAULT = 1e-8
SIGN_TIE_TOL = 1e-12

SIGN_RULE = "largest-abs-entry-positive; ties within 1e-12 -> lowest index"
NORMALIZATION = "m-inner-product unit norm"


class SolverError(Exception):
    """Base class for solver failures."""


class DenseGuardError(SolverError):
    """Problem too large for the dense path; use eig_partial."""


class NumericalError(SolverError):
    """Residuals above tolerance or iteration did not converge."""


@dataclass(frozen=True)
class Spectrum:
    """Ordered eigenpairs of one operator.

    eigenvalues ascending with repeats; eigenvectors[:, j] is the j-th
    eigenvector on the operator's vertex set, m-normalized and sign-fixed;
    residuals[j] = ||S phi - lambda M phi||_inf.
    """

    kind: str
    level: int
    c0: float
    eigenvalues: np.ndarray   # (k,)
    eigenvectors: np.ndarray  # (d, k)
    residuals: np.ndarray     # (k,)
    vertex_map: np.ndarray    # (d,) mesh vertex index per row
    solver: str

    def __post_init__(self):
        for arr in (self.eigenvalues, self.eigenvectors, self.residuals,
                    self.vertex_map):
            arr.setflags(write=False)

    @property
    def dimension(self) -> int:
        return self.eigenvectors.shape[0]

    @property
    def count(self) -> int:
        return len(self.eigenvalues)

    def truncated(self, k: int) -> "Spectrum":
        """First k eigenpairs as a new Spectrum (low end of this one)."""
        if not 1 <= k <= self.count:
            raise ValueError(f"k must be in 1..{self.count}, got {k}")
        return replace(
            self,
            eigenvalues=self.eigenvalues[:k].copy(),
            eigenvectors=self.eigenvectors[:, :k].copy(),
            residuals=self.residuals[:k].copy())


def symmetrize(op: OperatorBundle) -> sparse.csr_matrix:
    """D = M^-1/2 S M^-1/2, exactly symmetric entrywise.

    Each entry is scaled by the single product d_i * d_j (commutative, so
    the (i, j) and (j, i) entries round identically).
    """
    d = np.sqrt(op.inv_m)
    C = op.S.tocoo()
    vals = C.data * (d[C.row] * d[C.col])
    return sparse.coo_matrix(
        (vals, (C.row, C.col)), shape=C.shape).tocsr()


def _finalize(op: OperatorBundle, w: np.ndarray, Y: np.ndarray,
              solver: str, residual_tol: float,
              block: int = 1024) -> Spectrum:
    """Back-transform, normalize, sign-fix, clamp, and check residuals."""
    d_back = np.sqrt(op.inv_m)

    scale = max(1.0, float(np.max(np.abs(w))) if len(w) else 1.0)
    neg_tol = residual_tol * scale
    if np.any(w < -neg_tol):
        worst = float(np.min(w))
        raise NumericalError(
            f"eigenvalue {worst} below -{neg_tol:.3e}; operator should be PSD")
    w = np.where(w < 0.0, 0.0, w)

    k = Y.shape[1]
    Phi = np.empty_like(Y)
    residuals = np.empty(k)
    m = op.m
    S = op.S
    for lo in range(0, k, block):
        hi = min(lo + block, k)
        P = d_back[:, None] * Y[:, lo:hi]
        # back-transform preserves the m-norm of unit vectors; renormalize
        # to absorb roundoff
        nrm = np.sqrt(np.sum(m[:, None] * P * P, axis=0))
        P /= nrm
        A = np.abs(P)
        mx = A.max(axis=0)
        lead = np.argmax(A >= (mx[None, :] - SIGN_TIE_TOL), axis=0)
        signs = np.where(P[lead, np.arange(hi - lo)] < 0.0, -1.0, 1.0)
        P *= signs
        R = S @ P - (m[:, None] * P) * w[lo:hi]
        residuals[lo:hi] = np.max(np.abs(R), axis=0)
        Phi[:, lo:hi] = P

    bound = residual_tol * np.maximum(1.0, w)
    bad = np.flatnonzero(residuals > bound)
    if bad.size:
        j = int(bad[0])
        raise NumericalError(
            f"{bad.size} residuals above tolerance; first at pair {j}: "
            f"residual {residuals[j]:.3e} > {bound[j]:.3e}")

    return Spectrum(kind=op.kind, level=op.level, c0=op.c0,
                    eigenvalues=w, eigenvectors=Phi, residuals=residuals,
                    vertex_map=op.vertex_map, solver=solver)


def eig_full(op: OperatorBundle, dense_guard: int = DENSE_GUARD_DEFAULT,
             residual_tol: float = RESIDUAL_TOL_DEFAULT) -> Spectrum:
    """Full spectrum by dense symmetric eigendecomposition of D."""
    n = op.dimension
    if n > dense_guard:
        raise DenseGuardError(
            f"dimension {n} exceeds dense guard {dense_guard}; "
            f"use eig_partial for extremal windows")
    A = symmetrize(op).toarray()
    w, Y = scipy.linalg.eigh(A, overwrite_a=True, check_finite=False)
    del A
    return _finalize(op, w, Y, "dense", residual_tol)


def eig_partial(op: OperatorBundle, k: int, which: str = "smallest",
                seed: int = 0, maxiter: int | None = None,
                residual_tol: float = RESIDUAL_TOL_DEFAULT) -> Spectrum:
    """k extremal eigenpairs by a Krylov scheme on D.

    which="smallest" runs shift-invert at sigma = -1 (D + I is positive
    definite, so the factorization is safe and the smallest eigenvalues of D
    map to the largest of the inverse); which="largest" runs plain Lanczos.
    A fixed seed for the start vector keeps runs reproducible.  Windows of
    size >= dimension - 1 fall through to the dense path (ARPACK needs
    k < dimension) and are sliced from it.
    """
    n = op.dimension
    if not 1 <= k <= n:
        raise ValueError(f"k must be in 1..{n}, got {k}")
    if which not in ("smallest", "largest"):
        raise ValueError(f"which must be 'smallest' or 'largest', got {which!r}")

    if k >= n - 1 or n <= 32:
        full = eig_full(op, dense_guard=max(DENSE_GUARD_DEFAULT, n),
                        residual_tol=residual_tol)
        sl = slice(0, k) if which == "smallest" else slice(n - k, n)
        return Spectrum(kind=op.kind, level=op.level, c0=op.c0,
                        eigenvalues=full.eigenvalues[sl].copy(),
                        eigenvectors=full.eigenvectors[:, sl].copy(),
                        residuals=full.residuals[sl].copy(),
                        vertex_map=op.vertex_map,
                        solver="iterative-dense-fallback")

    D = symmetrize(op)
    rng = np.random.default_rng(seed)
    v0 = rng.standard_normal(n)
    try:
        if which == "smallest":
            w, Y = scipy.sparse.linalg.eigsh(
                D, k=k, sigma=-1.0, which="LM", v0=v0, maxiter=maxiter)
        else:
            w, Y = scipy.sparse.linalg.eigsh(
                D, k=k, which="LA", v0=v0, maxiter=maxiter)
    except ArpackNoConvergence as exc:
        got = len(exc.eigenvalues)
        raise NumericalError(
            f"ARPACK converged {got}/{k} pairs (which={which}); "
            f"increase maxiter or reduce k") from exc
    order = np.argsort(w)
    return _finalize(op, w[order], Y[:, order], "iterative", residual_tol)


def trace_identity(op: OperatorBundle) -> float:
    """Sum of the diagonal of L = M^-1 S; equals the eigenvalue sum for
    full solves (exact row-sum formula)."""
    return float(np.sum(op.inv_m * op.S.diagonal()))
