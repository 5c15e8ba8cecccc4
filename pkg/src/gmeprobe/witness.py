"""Projector witnesses for genuine multipartite entanglement in a small window.

A witness here is ``Q = c I - |t><t|`` with ``c`` the largest squared overlap
of ``|t>`` with any pure state that is a product across some bipartition of
the window. ``Tr(Q sigma) >= 0`` then holds for every biseparable ``sigma``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .errors import CapabilityError

MAX_WITNESS_SITES = 6
MAX_REFINE_SITES = 4


@dataclass(frozen=True)
class WindowWitness:
    m: int
    q: np.ndarray
    offset: float
    target: np.ndarray

    def value(self, state: np.ndarray) -> float:
        """Tr(Q rho) for a pure vector or a density matrix."""
        state = np.asarray(state)
        if state.ndim == 1:
            return float(np.vdot(state, self.q @ state).real / np.vdot(state, state).real)
        return float(np.trace(self.q @ state).real / np.trace(state).real)


def ghz_vector(m: int) -> np.ndarray:
    v = np.zeros(2**m, dtype=np.complex128)
    v[0] = v[-1] = 1 / np.sqrt(2)
    return v


def bipartitions(m: int) -> Iterator[tuple[int, ...]]:
    """Site subsets A (containing site 0) with nonempty complement: 2**(m-1) - 1 of them."""
    rest = range(1, m)
    for r in range(0, m - 1):
        for extra in itertools.combinations(rest, r):
            yield (0,) + extra


def _as_unit_state(target, m_max: int) -> tuple[np.ndarray, int]:
    t = np.asarray(target, dtype=np.complex128).reshape(-1)
    m = int(round(np.log2(t.size)))
    if 2**m != t.size:
        raise ValueError("state length is not a power of two")
    if m > m_max:
        raise CapabilityError(f"window of {m} sites exceeds limit {m_max}")
    if abs(np.linalg.norm(t) - 1) > 1e-10:
        raise ValueError("target state must be normalized")
    return t, m


def biseparable_bound(target) -> float:
    """Max over bipartitions of the largest squared Schmidt coefficient of ``target``."""
    t, m = _as_unit_state(target, MAX_WITNESS_SITES)
    if m < 2:
        return 1.0
    tensor = t.reshape((2,) * m)
    best = 0.0
    for part in bipartitions(m):
        comp = tuple(k for k in range(m) if k not in part)
        mat = tensor.transpose(part + comp).reshape(2 ** len(part), -1)
        s = np.linalg.svd(mat, compute_uv=False)
        best = max(best, float(s[0] ** 2))
    return min(best, 1.0)


def projector_witness(target) -> WindowWitness:
    """``Q = c I - |target><target|`` with ``c = biseparable_bound(target)``."""
    t, m = _as_unit_state(target, MAX_WITNESS_SITES)
    if m < 2:
        raise ValueError("genuine multipartite witnesses need at least two sites")
    c = biseparable_bound(t)
    q = c * np.eye(2**m, dtype=np.complex128) - np.outer(t, t.conj())
    return WindowWitness(m=m, q=q, offset=c, target=t)


def ghz_witness(m: int) -> WindowWitness:
    return projector_witness(ghz_vector(m))


def apply_local(unitaries, state: np.ndarray) -> np.ndarray:
    """(U_1 x ... x U_M) |state>."""
    m = len(unitaries)
    t = np.asarray(state, dtype=np.complex128).reshape((2,) * m)
    for k, u in enumerate(unitaries):
        t = np.moveaxis(np.tensordot(u, t, axes=(1, k)), 0, k)
    return t.reshape(-1)


def _polar_unitary(env: np.ndarray) -> np.ndarray:
    # argmax_U |Tr(U env)| over unitaries, for a stack of 2x2 environments
    w, _, vh = np.linalg.svd(env)
    return np.conj(np.swapaxes(vh, -1, -2)) @ np.conj(np.swapaxes(w, -1, -2))


def _ascend(psi: np.ndarray, m: int, us: np.ndarray, iterations: int, tol: float = 1e-13):
    """Site-by-site polar ascent of ``|<psi| U_1 x ... x U_M |GHZ>|`` for a batch of starts.

    ``us`` has shape ``(starts, m, 2, 2)``. Since ``U|GHZ>`` is the sum of two
    product vectors (the columns of each ``U_j``), the overlap environment of
    one site is ``psi`` contracted with those product vectors elsewhere.
    """
    us = us.copy()
    bra = psi.conj().reshape((2,) * m)
    sites = "abcdef"[:m]

    def environment(k):
        # (start, ghz branch x, psi index of site k)
        operands = [us[:, j] for j in range(m) if j != k]
        spec = ",".join(f"s{sites[j]}x" for j in range(m) if j != k)
        return np.einsum(f"{sites},{spec}->sx{sites[k]}", bra, *operands) / np.sqrt(2)

    def overlap_of(u, env):
        return np.abs(np.einsum("sac,sca->s", u, env))

    overlap = overlap_of(us[:, 0], environment(0))
    for _ in range(iterations):
        previous = overlap.copy()
        for k in range(m):
            env = environment(k)
            candidate = _polar_unitary(env)
            new = overlap_of(candidate, env)
            better = new > overlap + tol
            us[better, k] = candidate[better]
            overlap = np.where(better, new, overlap)
        if np.all(overlap - previous <= tol):
            break
    return us, overlap


def _refine_starts(m: int, restarts: int) -> np.ndarray:
    hadamard = np.array([[1, 1], [1, -1]], dtype=np.complex128) / np.sqrt(2)
    starts = [np.broadcast_to(np.eye(2), (m, 2, 2)), np.broadcast_to(hadamard, (m, 2, 2))]
    # fixed seed: the witness must be a deterministic function of the state
    rng = np.random.default_rng(20240)
    z = rng.standard_normal((restarts, m, 2, 2)) + 1j * rng.standard_normal((restarts, m, 2, 2))
    starts.extend(np.linalg.qr(z)[0])
    return np.array(starts, dtype=np.complex128)


def refine_target(window_state, iterations: int = 50, restarts: int = 6) -> WindowWitness:
    """Projector witness on the local-unitary GHZ orbit member closest to ``window_state``.

    Local unitaries are updated one site at a time to the polar factor of the
    single-site overlap environment, which never decreases
    ``|<window_state| U_1 x ... x U_M |GHZ>|``. The ascent is local, so it is
    started from the identity, from Hadamards on every site, and from
    ``restarts`` fixed pseudo-random unitaries; the best end point is kept.
    The identity start makes the result never worse than the plain GHZ
    witness.
    """
    psi, m = _as_unit_state(window_state, MAX_REFINE_SITES)
    if m < 2:
        raise ValueError("genuine multipartite witnesses need at least two sites")
    us, overlap = _ascend(psi, m, _refine_starts(m, restarts), iterations)
    best = int(np.argmax(overlap))  # first maximum: ties go to the earlier start
    target = apply_local(list(us[best]), ghz_vector(m))
    target /= np.linalg.norm(target)
    # c = 1/2 on the whole GHZ orbit, no Schmidt decompositions needed
    q = 0.5 * np.eye(2**m, dtype=np.complex128) - np.outer(target, target.conj())
    return WindowWitness(m=m, q=q, offset=0.5, target=target)


def witnessed_entanglement(value: float) -> float:
    return max(0.0, -float(value))


def random_biseparable_states(m: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random pure states, each a product across a randomly chosen bipartition.

    Returns an array of shape ``(count, 2**m)``.
    """
    parts = list(bipartitions(m))
    choice = rng.integers(len(parts), size=count)
    out = np.empty((count, 2**m), dtype=np.complex128)
    for idx, part in enumerate(parts):
        rows = np.flatnonzero(choice == idx)
        if rows.size == 0:
            continue
        comp = tuple(k for k in range(m) if k not in part)
        da, db = 2 ** len(part), 2 ** len(comp)
        a = rng.standard_normal((rows.size, da)) + 1j * rng.standard_normal((rows.size, da))
        b = rng.standard_normal((rows.size, db)) + 1j * rng.standard_normal((rows.size, db))
        a /= np.linalg.norm(a, axis=1, keepdims=True)
        b /= np.linalg.norm(b, axis=1, keepdims=True)
        prod = np.einsum("ni,nj->nij", a, b).reshape((rows.size,) + (2,) * m)
        order = part + comp
        inverse = np.argsort(order)
        prod = prod.transpose((0,) + tuple(1 + i for i in inverse))
        out[rows] = prod.reshape(rows.size, -1)
    return out


def dump_matrix(q: np.ndarray) -> str:
    """Row-major text dump: one row per line, entries ``re,im`` separated by spaces."""
    return "\n".join(" ".join(f"{float(z.real)!r},{float(z.imag)!r}" for z in row) for row in np.asarray(q, dtype=complex)) + "\n"


def parse_matrix(text: str) -> np.ndarray:
    rows = []
    for line in text.strip().splitlines():
        rows.append([complex(float(re), float(im)) for re, im in (e.split(",") for e in line.split())])
    return np.array(rows, dtype=np.complex128)
