"""Dense complex linear-algebra kernels.

Tensors are plain ``numpy.ndarray`` objects of dtype ``complex128`` stored in
C (row-major) order: the last axis varies fastest. Every reshape in the
package relies on that linearization, so a multi-qubit vector with sites
``s_1 ... s_M`` is indexed as ``s_1 * 2**(M-1) + ... + s_M`` (the first site
is the most significant bit, matching ``np.kron`` ordering).
"""

from __future__ import annotations

from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ConvergenceError, DimensionError, NumericError

DENSE_THRESHOLD = 512


def as_tensor(x) -> np.ndarray:
    """Return ``x`` as a C-contiguous complex128 array, rejecting NaN/Inf."""
    t = np.ascontiguousarray(x, dtype=np.complex128)
    if not np.all(np.isfinite(t)):
        raise NumericError("tensor contains non-finite entries")
    return t


def contract(a, b, pairs: Sequence[tuple[int, int]]) -> np.ndarray:
    """Sum over paired axes of ``a`` and ``b``.

    The result carries the unpaired axes of ``a`` followed by the unpaired
    axes of ``b``, each in their original order.

    Parameters
    ----------
    a, b : array_like
        Input tensors.
    pairs : sequence of (int, int)
        ``(axis_of_a, axis_of_b)`` pairs to contract.
    """
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    axes_a = [int(p[0]) for p in pairs]
    axes_b = [int(p[1]) for p in pairs]
    if len(set(axes_a)) != len(axes_a) or len(set(axes_b)) != len(axes_b):
        raise ValueError(f"axis paired more than once in {list(pairs)}")
    for i, j in zip(axes_a, axes_b):
        if not (-a.ndim <= i < a.ndim and -b.ndim <= j < b.ndim):
            raise ValueError(f"axis pair ({i}, {j}) out of range")
        if a.shape[i] != b.shape[j]:
            raise DimensionError(
                f"extent mismatch on pair ({i}, {j}): {a.shape[i]} vs {b.shape[j]}"
            )
    return np.tensordot(a, b, axes=(axes_a, axes_b))


def _svd(m: np.ndarray):
    try:
        return np.linalg.svd(m, full_matrices=False)
    except np.linalg.LinAlgError:
        # gesdd occasionally fails to converge on ill-conditioned blocks
        import scipy.linalg

        return scipy.linalg.svd(m, full_matrices=False, lapack_driver="gesvd")


def svd_split(t, n_left: int, max_rank: int, cutoff: float = 0.0):
    """Truncated SVD of ``t`` viewed as a matrix.

    The first ``n_left`` axes index rows, the rest index columns.

    Returns
    -------
    u : ndarray, shape ``t.shape[:n_left] + (r,)``
    s : ndarray of float, shape ``(r,)``, descending
    v : ndarray, shape ``(r,) + t.shape[n_left:]``
    discarded_weight : float
        Sum of squared dropped singular values.

    Notes
    -----
    ``r = min(max_rank, #{k : s_k >= cutoff * s_1})``, but never below 1.
    Ties at the rank boundary keep the earlier index.
    """
    if max_rank < 1:
        raise ValueError("max_rank must be >= 1")
    if cutoff < 0:
        raise ValueError("cutoff must be nonnegative")
    t = as_tensor(t)
    left_shape, right_shape = t.shape[:n_left], t.shape[n_left:]
    m = t.reshape(int(np.prod(left_shape)), int(np.prod(right_shape)))
    u, s, vh = _svd(m)
    if s.size and s[0] > 0:
        keep = int(np.count_nonzero(s >= cutoff * s[0]))
    else:
        keep = 1
    r = max(1, min(max_rank, keep, s.size))
    discarded = float(np.sum(s[r:] ** 2))
    u = u[:, :r].reshape(left_shape + (r,))
    v = vh[:r].reshape((r,) + right_shape)
    return u, s[:r].copy(), v, discarded


def hermitize(h, tol: float = 1e-10) -> np.ndarray:
    """Return ``(h + h^dagger) / 2`` after checking ``h`` is Hermitian to ``tol`` (relative)."""
    h = as_tensor(h)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {h.shape}")
    dev = np.linalg.norm(h - h.conj().T)
    if dev > tol * max(1.0, np.linalg.norm(h)):
        raise ValueError(f"matrix is not Hermitian (deviation {dev:.3e})")
    return 0.5 * (h + h.conj().T)


def eigh_smallest(h) -> tuple[float, np.ndarray]:
    """Smallest eigenpair of a Hermitian matrix."""
    h = hermitize(h)
    w, v = np.linalg.eigh(h)
    return float(w[0]), v[:, 0].copy()


def lanczos_smallest(
    apply: Callable[[np.ndarray], np.ndarray],
    n: int,
    tol: float = 1e-10,
    max_iter: int = 300,
    guess: Optional[np.ndarray] = None,
    krylov_dim: int = 40,
    dense_threshold: int = DENSE_THRESHOLD,
    rng: Optional[np.random.Generator] = None,
) -> tuple[float, np.ndarray]:
    """Smallest eigenpair of a Hermitian linear map given only its action.

    Restarted Lanczos with full reorthogonalization; each restart begins from
    the current best Ritz vector. Convergence is declared when the residual
    ``||A v - theta v||`` drops below ``tol``. Maps of dimension at most
    ``dense_threshold`` are materialized and handed to :func:`eigh_smallest`.

    Raises
    ------
    ConvergenceError
        After ``max_iter`` matrix-vector products without convergence. The best
        ``(value, vector)`` pair is attached as ``err.best``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if n <= dense_threshold:
        mat = np.empty((n, n), dtype=np.complex128)
        eye = np.eye(n, dtype=np.complex128)
        for k in range(n):
            mat[:, k] = apply(eye[:, k])
        return eigh_smallest(mat)

    if guess is None or not np.any(guess):
        rng = rng if rng is not None else np.random.default_rng(0)
        guess = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    v = np.asarray(guess, dtype=np.complex128).reshape(n)
    v = v / np.linalg.norm(v)

    k_max = min(krylov_dim, n)
    matvecs = 0
    best = (np.inf, v)
    while matvecs < max_iter:
        basis = np.zeros((k_max, n), dtype=np.complex128)
        alpha = np.zeros(k_max)
        beta = np.zeros(k_max)
        basis[0] = v
        k_used = 0
        for j in range(k_max):
            w = apply(basis[j])
            matvecs += 1
            alpha[j] = np.vdot(basis[j], w).real
            w = w - basis[: j + 1].T @ (basis[: j + 1].conj() @ w)
            w = w - basis[: j + 1].T @ (basis[: j + 1].conj() @ w)
            k_used = j + 1
            b = np.linalg.norm(w)
            if j + 1 == k_max or b < 1e-14 or matvecs >= max_iter:
                break
            beta[j] = b
            basis[j + 1] = w / b
        tri = np.diag(alpha[:k_used]) + np.diag(beta[: k_used - 1], 1) + np.diag(beta[: k_used - 1], -1)
        theta, y = np.linalg.eigh(tri)
        v = y[:, 0] @ basis[:k_used]
        v /= np.linalg.norm(v)
        residual_vec = apply(v) - theta[0] * v
        matvecs += 1
        res = np.linalg.norm(residual_vec)
        if theta[0] < best[0] or res <= tol:
            best = (float(theta[0]), v)
        if res <= tol:
            return float(theta[0]), v
    raise ConvergenceError(
        f"Lanczos did not converge within {max_iter} matrix-vector products",
        best=best,
    )
