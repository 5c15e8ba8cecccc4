"""Brute-force state-vector implementations used as independent test oracles.

Nothing here imports the MPS code paths; only plain numpy on full 2**N vectors.
"""

from functools import reduce

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

I2 = np.eye(2)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
PLUS = np.array([1, 1], dtype=complex) / np.sqrt(2)


def kron_all(items):
    return reduce(np.kron, items)


def site_op(op, k, n):
    return kron_all([op if j == k else I2 for j in range(n)])


def ising_sparse(couplings, g):
    """-sum J_k Z_k Z_{k+1} - g sum X_k as a sparse matrix; ``couplings`` has N-1 entries."""
    n = len(couplings) + 1
    dim = 2**n
    idx = np.arange(dim)
    # Z eigenvalue of site k on basis state idx (site 0 is the most significant bit)
    z = [1 - 2 * ((idx >> (n - 1 - k)) & 1) for k in range(n)]
    diag = np.zeros(dim)
    for k, j in enumerate(couplings):
        diag -= j * z[k] * z[k + 1]
    rows = np.concatenate([idx] * n)
    cols = np.concatenate([idx ^ (1 << (n - 1 - k)) for k in range(n)])
    flips = scipy.sparse.csr_matrix((np.full(rows.size, -g, dtype=complex), (rows, cols)), shape=(dim, dim))
    return (scipy.sparse.diags(diag.astype(complex)) + flips).tocsr()


def ising_matrix(couplings, g):
    return ising_sparse(couplings, g).toarray()


def ghz(n):
    v = np.zeros(2**n, dtype=complex)
    v[0] = v[-1] = 1 / np.sqrt(2)
    return v


def _lowest(h):
    if scipy.sparse.issparse(h):
        if h.shape[0] > 512:
            w, v = scipy.sparse.linalg.eigsh(h, k=1, which="SA", tol=1e-14)
            return w[0], v[:, 0]
        h = h.toarray()
    w, v = np.linalg.eigh(h)
    return w[0], v[:, 0]


def ground_energy(h):
    return _lowest(h)[0]


def ground_vector(h):
    return _lowest(h)[1]


def partial_trace(psi, start, m):
    """Reduced density matrix of sites [start, start+m) from a full state vector."""
    n = int(np.log2(psi.size))
    t = psi.reshape(2**start, 2**m, 2 ** (n - start - m))
    rho = np.einsum("awb,avb->wv", t, t.conj())
    return rho / np.trace(rho)


def project_outside(psi, start, m, directions):
    """Unnormalized window vector (prod_k <d_k|) |psi> over outside sites k."""
    n = int(np.log2(psi.size))
    t = psi.reshape((2,) * n)
    outside = [k for k in range(n) if not start <= k < start + m]
    # contract from the last outside site backwards so axis labels stay valid
    for k, d in sorted(zip(outside, directions), reverse=True):
        t = np.tensordot(t, np.conj(d), axes=([k], [0]))
    return t.reshape(-1)


def projected_window_operator(psi, start, m, entries):
    """Tr_out[(P_out x I_w)|psi><psi|] with entries either None (identity) or (scale, direction).

    Works on amplitudes: projector sites are contracted into the state vector
    first, identity sites stay open and are traced at the end. Forming the
    full density matrix instead loses all precision once the surviving weight
    drops near machine epsilon.
    """
    n = int(np.log2(psi.size))
    t = psi.reshape((2,) * n)
    outside = [k for k in range(n) if not start <= k < start + m]
    keep = list(range(n))
    for k, e in sorted(zip(outside, entries), reverse=True):
        if e is not None:
            scale, d = e
            t = np.sqrt(scale) * np.tensordot(t, np.conj(d), axes=([k], [0]))
            keep.remove(k)
    window_axes = [keep.index(k) for k in range(start, start + m)]
    rest = [a for a in range(t.ndim) if a not in window_axes]
    a = np.transpose(t, window_axes + rest).reshape(2**m, -1)
    return a @ a.conj().T


def dense_probe(psi, q, start, m, entries):
    """(raw, alpha, normalized) for W = P_out x Q on a full state vector."""
    psi = psi / np.linalg.norm(psi)
    rho_w = projected_window_operator(psi, start, m, entries)
    alpha = np.trace(rho_w).real
    raw = np.trace(q @ rho_w).real
    return raw, alpha, raw / alpha


def dense_optimize_contrast(psi, q, start, m, directions, sweeps=200, tol=1e-14):
    """Alternating site-wise minimization of the normalized value on a full vector.

    Each site solves its 2x2 problem by brute-force diagonalization on the span
    of the two partial projections.
    """
    n = int(np.log2(psi.size))
    outside = [k for k in range(n) if not start <= k < start + m]
    dirs = [np.asarray(d, dtype=complex) for d in directions]

    def value(ds):
        phi = project_outside(psi, start, m, ds)
        nrm = np.linalg.norm(phi)
        if nrm < 1e-10 * np.linalg.norm(psi):
            return np.inf  # projection annihilated the state; what remains is rounding noise
        phi = phi / nrm
        return np.vdot(phi, q @ phi).real

    current = value(dirs)
    order = list(range(len(outside))) + list(range(len(outside) - 1, -1, -1))
    for _ in range(sweeps):
        before = current
        for i in order:
            cols = []
            for basis in (np.array([1, 0], complex), np.array([0, 1], complex)):
                trial = list(dirs)
                trial[i] = basis
                cols.append(project_outside(psi, start, m, trial))
            v = np.stack(cols, axis=1)
            a = v.conj().T @ q @ v
            b = v.conj().T @ v
            # QZ handles a singular B; infinite eigenvalues belong to null vectors of B
            w, x = scipy.linalg.eig(a, b)
            finite = np.flatnonzero(np.isfinite(w))
            if finite.size == 0:
                continue
            j = finite[np.argmin(w[finite].real)]
            cand = x[:, j] / np.linalg.norm(x[:, j])
            trial = list(dirs)
            # v maps conj(direction) to the window vector
            trial[i] = np.conj(cand)
            val = value(trial)
            if val < current:
                dirs, current = trial, val
        if before - current < tol:
            break
    return dirs, current
