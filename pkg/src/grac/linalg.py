"""Dense complex linear algebra used by every other module.

Matrices are plain ``numpy`` arrays of dtype ``complex128``.  The
validators below enforce the invariants of the matrix kinds the rest of
the package passes around (Hermitian operators, density matrices, pure
states, dichotomic observables) and raise ``ValueError`` when violated.

The Hermitian eigensolver is a cyclic Jacobi method with round-robin
("parallel") ordering, vectorised over disjoint index pairs and over a
leading batch axis, so a stack of small matrices is diagonalised in one
call.
"""
from __future__ import annotations

from typing import Literal

import numpy as np

HERMITIAN_TOL = 1e-12
PSD_TOL = 1e-9
STATE_EQ_TOL = 1e-9
TRACE_TOL = 1e-9
NORM_TOL = 1e-12
INVOLUTION_TOL = 1e-10

JACOBI_MAX_SWEEPS = 100
JACOBI_TOL = 1e-12
# "lapack" (numpy.linalg.eigh) or "jacobi" (jacobi_eigh below)
DEFAULT_EIG_METHOD = "lapack"


class ConvergenceError(RuntimeError):
    """Raised when the Jacobi iteration hits its sweep cap."""


# -- validators -------------------------------------------------------------

def as_matrix(m) -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2:
        raise ValueError(f"expected a 2-d matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a


def check_hermitian(m, tol: float = HERMITIAN_TOL) -> np.ndarray:
    a = as_matrix(m)
    if a.shape[0] != a.shape[1]:
        raise ValueError(f"matrix is not square: {a.shape}")
    dev = np.max(np.abs(a - a.conj().T), initial=0.0)
    if dev > tol:
        raise ValueError(f"matrix is not Hermitian (deviation {dev:.3g})")
    return a


def check_density(rho, tol: float = PSD_TOL) -> np.ndarray:
    """Validate a density matrix: Hermitian, unit trace, PSD up to ``tol``."""
    a = check_hermitian(rho)
    tr = np.trace(a).real
    if abs(tr - 1.0) > TRACE_TOL:
        raise ValueError(f"trace {tr!r} differs from 1")
    lam = min_eigenvalue(a)
    if lam < -tol:
        raise ValueError(f"density matrix has negative eigenvalue {lam:.3g}")
    return a


def check_pure(psi, tol: float = NORM_TOL) -> np.ndarray:
    v = np.asarray(psi, dtype=complex).reshape(-1)
    dev = abs(np.linalg.norm(v) - 1.0)
    if dev > tol:
        raise ValueError(f"state vector norm deviates from 1 by {dev:.3g}")
    return v


def check_dichotomic(m, tol: float = INVOLUTION_TOL) -> np.ndarray:
    """Validate a +/-1 observable: Hermitian and squaring to the identity."""
    a = check_hermitian(m, tol=tol)
    dev = np.max(np.abs(a @ a - np.eye(a.shape[0])), initial=0.0)
    if dev > tol:
        raise ValueError(f"observable does not square to I (deviation {dev:.3g})")
    return a


# -- basic constructions ----------------------------------------------------

def kron(a, b) -> np.ndarray:
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def kron_all(*ms) -> np.ndarray:
    out = np.eye(1, dtype=complex)
    for m in ms:
        out = kron(out, m)
    return out


def partial_trace(rho, dims: tuple[int, int], keep: Literal["A", "B"]) -> np.ndarray:
    """Reduced state of a bipartite operator on ``dims = (dA, dB)``.

    ``keep="A"`` traces out B and vice versa.  Works on any square operator
    of matching size; trace is preserved.
    """
    da, db = dims
    a = as_matrix(rho)
    if a.shape != (da * db, da * db):
        raise ValueError(f"operator of shape {a.shape} does not match dims {dims}")
    t = a.reshape(da, db, da, db)
    if keep == "A":
        return np.einsum("ijkj->ik", t)
    if keep == "B":
        return np.einsum("ijil->jl", t)
    raise ValueError(f"keep must be 'A' or 'B', got {keep!r}")


def max_entangled(d: int) -> np.ndarray:
    """Maximally entangled vector ``sum_j |j>|j> / sqrt(d)`` of length d*d."""
    if d < 1:
        raise ValueError("local dimension must be >= 1")
    psi = np.zeros(d * d, dtype=complex)
    psi[np.arange(d) * (d + 1)] = 1.0 / np.sqrt(d)
    return psi


def projector(psi) -> np.ndarray:
    v = np.asarray(psi, dtype=complex).reshape(-1)
    return np.outer(v, v.conj())


# -- Jacobi eigensolver -----------------------------------------------------

def _round_robin(m: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Circle-method pairings for even ``m``: m-1 rounds of m/2 disjoint pairs."""
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        half = m // 2
        ps = np.array(players[:half], dtype=int)
        qs = np.array(players[half:][::-1], dtype=int)
        rounds.append((ps, qs))
        players = [players[0]] + [players[-1]] + players[1:-1]
    return rounds


def _offdiag_norm(a: np.ndarray) -> np.ndarray:
    off = a * (1.0 - np.eye(a.shape[-1]))
    return np.sqrt(np.sum(np.abs(off) ** 2, axis=(-2, -1)))


def jacobi_eigh(
    m,
    tol: float = JACOBI_TOL,
    max_sweeps: int = JACOBI_MAX_SWEEPS,
) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decompose a Hermitian matrix (or a stack of them).

    Parameters
    ----------
    m : array_like, shape (..., N, N)
        Hermitian input; only Hermiticity of each slice is assumed.
    tol : float
        Stop once the off-diagonal Frobenius norm of every slice is at most
        ``tol * max(1, ||m||_F)``.
    max_sweeps : int
        Sweep cap; exceeding it raises :class:`ConvergenceError`.

    Returns
    -------
    w : ndarray, shape (..., N)
        Eigenvalues, descending.
    v : ndarray, shape (..., N, N)
        Unitary whose columns are the matching eigenvectors.

    Notes
    -----
    Each round rotates N/2 disjoint (p, q) pairs at once.  The working
    matrix is kept permuted so the p indices occupy the first half and the
    q indices the second half, which turns every update into slice
    arithmetic.  Odd N is padded with one decoupled zero row/column.
    """
    a = np.array(m, dtype=complex, copy=True)
    if a.ndim < 2 or a.shape[-1] != a.shape[-2]:
        raise ValueError(f"expected square matrices, got shape {a.shape}")
    n = a.shape[-1]
    a = 0.5 * (a + np.swapaxes(a.conj(), -1, -2))
    scale = np.maximum(1.0, np.sqrt(np.sum(np.abs(a) ** 2, axis=(-2, -1))))
    size = n + (n % 2)
    if size != n:
        pad = [(0, 0)] * (a.ndim - 2) + [(0, 1), (0, 1)]
        a = np.pad(a, pad)
    v = np.broadcast_to(np.eye(size, dtype=complex), a.shape).copy()
    h = size // 2
    rounds = _round_robin(size) if size > 1 else []
    inv = np.arange(size)  # inv[i] = current position of original index i

    for _ in range(max_sweeps + 1):
        if np.all(_offdiag_norm(a) <= tol * scale):
            break
        for P, Q in rounds:
            want = np.concatenate([P, Q])
            idx = inv[want]
            a = a[..., idx, :][..., :, idx]
            v = v[..., :, idx]
            inv[want] = np.arange(size)

            apq = np.diagonal(a[..., :h, h:], axis1=-2, axis2=-1)
            diag = np.diagonal(a, axis1=-2, axis2=-1).real
            app, aqq = diag[..., :h], diag[..., h:]
            r = np.abs(apq)
            active = r > 0
            safe_r = np.where(active, r, 1.0)
            phase = np.where(active, apq / safe_r, 1.0)
            theta = (aqq - app) / (2.0 * safe_r)
            t = np.sign(theta) / (np.abs(theta) + np.hypot(theta, 1.0))
            t = np.where(theta == 0, 1.0, t)
            t = np.where(active, t, 0.0)
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c
            # J restricted to (p, q): [[c, s], [-s e^{-i phi}, c e^{-i phi}]]
            ph = phase.conj()
            jpp, jpq, jqp, jqq = c, s, -s * ph, c * ph

            cp, cq = jpp[..., None, :], jpq[..., None, :]
            dp, dq = jqp[..., None, :], jqq[..., None, :]
            left, right = a[..., :, :h], a[..., :, h:]
            a = np.concatenate([left * cp + right * dp, left * cq + right * dq], axis=-1)
            left, right = v[..., :, :h], v[..., :, h:]
            v = np.concatenate([left * cp + right * dp, left * cq + right * dq], axis=-1)
            top, bottom = a[..., :h, :], a[..., h:, :]
            rp, rq = np.conj(jpp)[..., :, None], np.conj(jpq)[..., :, None]
            sp, sq = np.conj(jqp)[..., :, None], np.conj(jqq)[..., :, None]
            a = np.concatenate([top * rp + bottom * sp, top * rq + bottom * sq], axis=-2)
    else:
        raise ConvergenceError(f"Jacobi did not converge in {max_sweeps} sweeps")

    keep = inv[:n]
    w = np.diagonal(a, axis1=-2, axis2=-1).real[..., keep]
    v = v[..., :n, :][..., :, keep]
    order = np.argsort(-w, axis=-1, kind="stable")
    w = np.take_along_axis(w, order, axis=-1)
    v = np.take_along_axis(v, order[..., None, :], axis=-1)
    return w, v


def _eigh(a, method: str | None):
    method = method or DEFAULT_EIG_METHOD
    if method == "jacobi":
        return jacobi_eigh(a)
    if method == "lapack":
        w, v = np.linalg.eigh(a)
        return w[..., ::-1], v[..., ::-1]
    raise ValueError(f"unknown eigensolver {method!r}")


def eig_hermitian(m, method: str | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (descending) and unitary eigenvector matrix of a Hermitian operator.

    ``method`` is ``"lapack"`` or ``"jacobi"``; ``None`` uses
    :data:`DEFAULT_EIG_METHOD`.
    """
    return _eigh(check_hermitian(m), method)


def eigvals_hermitian(m, method: str | None = None) -> np.ndarray:
    """Eigenvalues of a Hermitian matrix or stack, descending."""
    a = np.asarray(m, dtype=complex)
    if (method or DEFAULT_EIG_METHOD) == "lapack":
        return np.linalg.eigvalsh(a)[..., ::-1]
    return _eigh(a, method)[0]


def trace_norm(m, method: str | None = None) -> float:
    return float(np.sum(np.abs(eigvals_hermitian(check_hermitian(m), method))))


def trace_norms(stack, method: str | None = None) -> np.ndarray:
    """Trace norms of a stack of Hermitian matrices, shape (k, N, N) -> (k,)."""
    stack = np.asarray(stack, dtype=complex)
    if stack.shape[0] == 0:
        return np.zeros(0)
    return np.sum(np.abs(eigvals_hermitian(stack, method)), axis=-1)


def trace_distance(rho, sigma) -> float:
    return 0.5 * trace_norm(np.asarray(rho) - np.asarray(sigma))


def min_eigenvalue(m, method: str | None = None) -> float:
    return float(eigvals_hermitian(check_hermitian(m, tol=1e-9), method)[-1])


def sqrtm_psd(m) -> np.ndarray:
    w, v = eig_hermitian(m)
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T
