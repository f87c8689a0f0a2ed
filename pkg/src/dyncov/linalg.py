"""Dense complex linear algebra kernels for small matrices.

Everything here operates on plain complex numpy arrays of modest size
(channel matrices and transmit covariances, n <= 8 in practice).  The
Hermitian eigensolver is a cyclic Jacobi iteration with a closed-form
2x2 fast path; log-determinants go through a Cholesky factor.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

HERMITIAN_ATOL = 1e-12

_JACOBI_MAX_SWEEPS = 100


class ConvergenceError(RuntimeError):
    """An iterative routine ran out of iterations; carries the residual."""

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


def as_matrix(a) -> np.ndarray:
    """Coerce input to a 2-D complex128 array (copying only if needed)."""
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got ndim={m.ndim}")
    return m


def frobenius(a) -> float:
    """Frobenius norm: sqrt of the summed squared moduli, = sqrt(tr(A^H A))."""
    m = np.asarray(a, dtype=np.complex128)
    return float(np.sqrt((m.real * m.real + m.imag * m.imag).sum()))


def trace_real(a) -> float:
    """Real part of the trace (the trace of any Hermitian matrix is real)."""
    return float(np.trace(np.asarray(a)).real)


def symmetrize(a) -> np.ndarray:
    """Hermitian part (A + A^H) / 2; absorbs round-off before eig/Cholesky."""
    m = as_matrix(a)
    return 0.5 * (m + m.conj().T)


def is_hermitian(a, atol: float = HERMITIAN_ATOL) -> bool:
    m = as_matrix(a)
    if m.shape[0] != m.shape[1]:
        return False
    return bool(np.max(np.abs(m - m.conj().T), initial=0.0) <= atol)


def require_hermitian(a, what: str = "matrix") -> np.ndarray:
    """Validate Hermitian-ness (entrywise 1e-12) and return the symmetrized copy."""
    m = as_matrix(a)
    if m.shape[0] != m.shape[1]:
        raise ValueError(f"{what} must be square, got shape {m.shape}")
    dev = float(np.max(np.abs(m - m.conj().T), initial=0.0))
    if dev > HERMITIAN_ATOL:
        raise ValueError(f"{what} is not Hermitian (max deviation {dev:.3e})")
    return symmetrize(m)


@dataclass(frozen=True)
class HermEigen:
    """Eigendecomposition A = U^H diag(sigma) U of a Hermitian matrix.

    Rows of ``u`` are the eigenvectors (so ``u @ a @ u.conj().T`` is
    diagonal); ``sigma`` is real, in the order produced by the solver.
    """

    u: np.ndarray
    sigma: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return self.u.conj().T @ np.diag(self.sigma) @ self.u

    def compose(self, loading: np.ndarray) -> np.ndarray:
        """Assemble U^H diag(loading) U, re-symmetrized against round-off."""
        q = self.u.conj().T @ (loading[:, None] * self.u)
        return 0.5 * (q + q.conj().T)


def _offdiag_mass(m: np.ndarray) -> float:
    od = m.copy()
    np.fill_diagonal(od, 0.0)
    return frobenius(od)


def _eig2(app: float, aqq: float, apq: complex) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form eigensystem of [[app, apq], [conj(apq), aqq]].

    Returns (w, V) with columns of V the orthonormal eigenvectors and
    w = (lambda_hi, lambda_lo).  The branch choice avoids cancellation.
    """
    half_diff = 0.5 * (app - aqq)
    r = float(np.hypot(half_diff, abs(apq)))
    mean = 0.5 * (app + aqq)
    w = np.array([mean + r, mean - r])
    if r == 0.0:
        return w, np.eye(2, dtype=np.complex128)
    if half_diff >= 0.0:
        v1 = np.array([half_diff + r, np.conj(apq)], dtype=np.complex128)
    else:
        v1 = np.array([apq, r - half_diff], dtype=np.complex128)
    v1 /= np.sqrt((v1.real**2 + v1.imag**2).sum())
    # orthogonal complement in C^2: (-conj(b), conj(a))
    v2 = np.array([-np.conj(v1[1]), np.conj(v1[0])])
    return w, np.column_stack([v1, v2])


def herm_eig(a) -> HermEigen:
    """Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.

    The input must be Hermitian to 1e-12 entrywise; it is symmetrized
    before iterating.  Convergence: off-diagonal Frobenius mass below
    1e-12 (relative to the matrix norm), at most 100 sweeps.
    """
    m = require_hermitian(a, "eigensolver input")
    n = m.shape[0]
    if n == 1:
        return HermEigen(u=np.eye(1, dtype=np.complex128), sigma=m.real[:1, 0].copy())

    scale = frobenius(m)
    tol = 1e-12 * max(1.0, scale)
    if n == 2:
        w, vcols = _eig2(m[0, 0].real, m[1, 1].real, m[0, 1])
        return HermEigen(u=vcols.conj().T, sigma=w)

    v = np.eye(n, dtype=np.complex128)
    pivot_tol = tol / (n * n)
    for _ in range(_JACOBI_MAX_SWEEPS):
        off = _offdiag_mass(m)
        if off < tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(m[p, q]) <= pivot_tol:
                    continue
                _, w2 = _eig2(m[p, p].real, m[q, q].real, m[p, q])
                cols = [p, q]
                m[:, cols] = m[:, cols] @ w2
                m[cols, :] = w2.conj().T @ m[cols, :]
                m[p, q] = 0.0
                m[q, p] = 0.0
                m[p, p] = m[p, p].real
                m[q, q] = m[q, q].real
                v[:, cols] = v[:, cols] @ w2
    else:
        off = _offdiag_mass(m)
        raise ConvergenceError(
            f"Jacobi eigensolver did not converge in {_JACOBI_MAX_SWEEPS} sweeps "
            f"(off-diagonal mass {off:.3e})",
            residual=off,
        )
    return HermEigen(u=v.conj().T, sigma=np.diag(m).real.copy())


def _gram_plus_identity(h: np.ndarray, q: np.ndarray) -> np.ndarray:
    """I + H Q H^H, symmetrized."""
    m = h @ q @ h.conj().T
    m = 0.5 * (m + m.conj().T)
    return np.eye(h.shape[0], dtype=np.complex128) + m


def _check_dims(h: np.ndarray, q: np.ndarray) -> None:
    if q.shape[0] != q.shape[1]:
        raise ValueError(f"covariance must be square, got shape {q.shape}")
    if h.shape[1] != q.shape[0]:
        raise ValueError(
            f"dimension mismatch: channel is {h.shape}, covariance is {q.shape}"
        )


def capacity(h, q) -> float:
    """log det(I + H Q H^H) in nats, via Cholesky of the positive definite argument.

    Nonnegative for any PSD Q.  A Cholesky failure means the argument was
    numerically indefinite, which valid inputs cannot produce.
    """
    hm = as_matrix(h)
    qm = as_matrix(q)
    _check_dims(hm, qm)
    m = _gram_plus_identity(hm, qm)
    try:
        chol = np.linalg.cholesky(m)
    except np.linalg.LinAlgError as exc:
        raise ValueError(
            "capacity argument I + H Q H^H is numerically indefinite; "
            "is the covariance PSD?"
        ) from exc
    return float(2.0 * np.log(np.diag(chol).real).sum())


def capacity_gradient(h, q) -> np.ndarray:
    """Gradient of Q -> log det(I + H Q H^H): H^H (I + H Q H^H)^{-1} H.

    The result is Hermitian PSD (symmetrized against round-off).
    """
    hm = as_matrix(h)
    qm = as_matrix(q)
    _check_dims(hm, qm)
    m = _gram_plus_identity(hm, qm)
    x = np.linalg.solve(m, hm)
    d = hm.conj().T @ x
    return 0.5 * (d + d.conj().T)


def min_eigenvalue(a) -> float:
    """Smallest eigenvalue of a Hermitian matrix (PSD check helper)."""
    return float(herm_eig(a).sigma.min())
