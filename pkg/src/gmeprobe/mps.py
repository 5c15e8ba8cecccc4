"""Matrix product states and operators for open spin-1/2 chains.

Axis conventions
----------------
* MPS site tensor: ``(left bond, physical, right bond)``.
* MPO site tensor: ``(left bond, physical out, physical in, right bond)``.
* Local basis: ``|0>`` is spin up, ``sigma_z |0> = +|0>``.
* Dense vectors put site 0 in the most significant position (``np.kron`` order).

Library functions index sites from 0. Only :class:`IsingChainSpec` takes the
1-based bond labels ``i = 1 .. N-1`` used for coupling profiles.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .errors import CapabilityError, DimensionError
from .tensor import as_tensor

ID2 = np.eye(2, dtype=np.complex128)
SX = np.array([[0, 1], [1, 0]], dtype=np.complex128)
SY = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
SZ = np.array([[1, 0], [0, -1]], dtype=np.complex128)

KET0 = np.array([1, 0], dtype=np.complex128)
KET1 = np.array([0, 1], dtype=np.complex128)
KET_PLUS = np.array([1, 1], dtype=np.complex128) / np.sqrt(2)
KET_MINUS = np.array([1, -1], dtype=np.complex128) / np.sqrt(2)

MAX_DENSE_WINDOW = 6


@dataclass(frozen=True)
class MatrixProductState:
    """Pure chain state as a train of rank-3 tensors.

    ``center`` is the orthogonality center, or ``None`` when no gauge is known.
    """

    tensors: tuple
    center: Optional[int] = None

    def __post_init__(self):
        ts = tuple(as_tensor(t) for t in self.tensors)
        object.__setattr__(self, "tensors", ts)
        if not ts:
            raise ValueError("an MPS needs at least one site")
        for i, t in enumerate(ts):
            if t.ndim != 3:
                raise DimensionError(f"site {i} tensor has {t.ndim} axes, expected 3")
        if ts[0].shape[0] != 1 or ts[-1].shape[2] != 1:
            raise DimensionError("boundary bonds must have extent 1")
        for i in range(len(ts) - 1):
            if ts[i].shape[2] != ts[i + 1].shape[0]:
                raise DimensionError(f"bond mismatch between sites {i} and {i + 1}")
        if self.center is not None and not 0 <= self.center < len(ts):
            raise ValueError(f"center {self.center} outside chain of length {len(ts)}")

    def __len__(self):
        return len(self.tensors)

    @property
    def bond_dims(self) -> list[int]:
        return [t.shape[2] for t in self.tensors[:-1]]

    def norm_squared(self) -> float:
        env = np.ones((1, 1), dtype=np.complex128)
        for a in self.tensors:
            env = np.tensordot(env, a, axes=(1, 0))
            env = np.tensordot(a.conj(), env, axes=([0, 1], [0, 1]))
        return float(env[0, 0].real)

    def overlap(self, other: "MatrixProductState") -> complex:
        """<self|other>."""
        if len(self) != len(other):
            raise ValueError("length mismatch")
        env = np.ones((1, 1), dtype=np.complex128)
        for a, b in zip(self.tensors, other.tensors):
            env = np.tensordot(env, b, axes=(1, 0))
            env = np.tensordot(a.conj(), env, axes=([0, 1], [0, 1]))
        return complex(env[0, 0])

    def to_dense(self) -> np.ndarray:
        if len(self) > 20:
            raise CapabilityError("dense reconstruction limited to 20 sites")
        v = self.tensors[0][0]
        for a in self.tensors[1:]:
            v = np.tensordot(v, a, axes=(-1, 0))
        return v.reshape(-1)


@dataclass(frozen=True)
class MatrixProductOperator:
    tensors: tuple

    def __post_init__(self):
        ts = tuple(as_tensor(t) for t in self.tensors)
        object.__setattr__(self, "tensors", ts)
        for i, t in enumerate(ts):
            if t.ndim != 4:
                raise DimensionError(f"site {i} tensor has {t.ndim} axes, expected 4")
        if ts[0].shape[0] != 1 or ts[-1].shape[3] != 1:
            raise DimensionError("boundary bonds must have extent 1")
        for i in range(len(ts) - 1):
            if ts[i].shape[3] != ts[i + 1].shape[0]:
                raise DimensionError(f"bond mismatch between sites {i} and {i + 1}")

    def __len__(self):
        return len(self.tensors)

    def to_dense(self) -> np.ndarray:
        if len(self) > 12:
            raise CapabilityError("dense reconstruction limited to 12 sites")
        # running operator with axes (out..., in..., right bond)
        op = self.tensors[0][0]  # (out, in, r)
        dim = 2
        for w in self.tensors[1:]:
            op = np.tensordot(op, w, axes=(-1, 0))  # (O, I, o, i, r)
            op = op.transpose(0, 2, 1, 3, 4).reshape(dim * 2, dim * 2, w.shape[3])
            dim *= 2
        return op[:, :, 0]


# --------------------------------------------------------------------- builders


def make_ghz(n: int) -> MatrixProductState:
    """(|0...0> + |1...1>)/sqrt(2) with bond dimension 2."""
    if n < 1:
        raise ValueError("GHZ state needs at least one site")
    if n == 1:
        return MatrixProductState((np.array([1, 1]).reshape(1, 2, 1) / np.sqrt(2),), center=0)
    bulk = np.zeros((2, 2, 2))
    bulk[0, 0, 0] = bulk[1, 1, 1] = 1.0
    first = np.zeros((1, 2, 2))
    first[0, 0, 0] = first[0, 1, 1] = 1 / np.sqrt(2)
    last = np.zeros((2, 2, 1))
    last[0, 0, 0] = last[1, 1, 0] = 1.0
    return MatrixProductState((first,) + (bulk,) * (n - 2) + (last,), center=0)


def make_product(states: Sequence) -> MatrixProductState:
    """Product state from a list of normalized single-qubit vectors."""
    tensors = []
    for i, s in enumerate(states):
        s = np.asarray(s, dtype=np.complex128).reshape(-1)
        if s.shape != (2,):
            raise DimensionError(f"local state {i} is not a qubit vector")
        if abs(np.linalg.norm(s) - 1) > 1e-10:
            raise ValueError(f"local state {i} is not normalized")
        tensors.append(s.reshape(1, 2, 1))
    if not tensors:
        raise ValueError("need at least one site")
    return MatrixProductState(tuple(tensors), center=0)


def random_mps(n: int, chi: int, rng: np.random.Generator, normalize: bool = True) -> MatrixProductState:
    """Gaussian random MPS with bond dimension capped at ``chi``."""
    dims = [1] + [min(chi, 2 ** min(k, n - k)) for k in range(1, n)] + [1]
    tensors = [
        rng.standard_normal((dims[k], 2, dims[k + 1])) + 1j * rng.standard_normal((dims[k], 2, dims[k + 1]))
        for k in range(n)
    ]
    psi = MatrixProductState(tuple(tensors))
    return canonicalize(psi, 0) if normalize else psi


def from_dense(vec, max_bond: Optional[int] = None) -> MatrixProductState:
    """Exact (or bond-truncated) MPS of a dense state vector via sequential SVD."""
    vec = np.asarray(vec, dtype=np.complex128).reshape(-1)
    n = int(round(np.log2(vec.size)))
    if 2**n != vec.size:
        raise DimensionError("vector length is not a power of two")
    tensors = []
    rest = vec.reshape(1, -1)
    for _ in range(n - 1):
        chi_l = rest.shape[0]
        m = rest.reshape(chi_l * 2, -1)
        u, s, vh = np.linalg.svd(m, full_matrices=False)
        r = int(np.count_nonzero(s > 1e-14 * max(s[0], 1e-300))) or 1
        if max_bond is not None:
            r = min(r, max_bond)
        tensors.append(u[:, :r].reshape(chi_l, 2, r))
        rest = s[:r, None] * vh[:r]
    tensors.append(rest.reshape(rest.shape[0], 2, 1))
    return MatrixProductState(tuple(tensors), center=n - 1)


# ----------------------------------------------------------------- gauge fixing


def canonicalize(psi: MatrixProductState, center: int, normalize: bool = True) -> MatrixProductState:
    """Mixed-canonical form with orthogonality center at ``center``.

    Sites left of ``center`` become left isometries, sites right of it right
    isometries; by default the center tensor is rescaled to unit norm.
    """
    n = len(psi)
    if not 0 <= center < n:
        raise ValueError(f"center {center} outside [0, {n})")
    ts = list(psi.tensors)
    for k in range(center):
        a = ts[k]
        q, r = np.linalg.qr(a.reshape(-1, a.shape[2]))
        ts[k] = q.reshape(a.shape[0], 2, q.shape[1])
        ts[k + 1] = np.tensordot(r, ts[k + 1], axes=(1, 0))
    for k in range(n - 1, center, -1):
        a = ts[k]
        q, r = np.linalg.qr(a.reshape(a.shape[0], -1).T)
        ts[k] = q.T.reshape(q.shape[1], 2, a.shape[2])
        ts[k - 1] = np.tensordot(ts[k - 1], r.T, axes=(2, 0))
    if normalize:
        nrm = np.linalg.norm(ts[center])
        if nrm == 0:
            raise ValueError("cannot normalize the zero state")
        ts[center] = ts[center] / nrm
    return MatrixProductState(tuple(ts), center=center)


def is_left_isometry(a: np.ndarray, tol: float = 1e-10) -> bool:
    m = a.reshape(-1, a.shape[2])
    return np.allclose(m.conj().T @ m, np.eye(m.shape[1]), atol=tol)


def is_right_isometry(a: np.ndarray, tol: float = 1e-10) -> bool:
    m = a.reshape(a.shape[0], -1)
    return np.allclose(m @ m.conj().T, np.eye(m.shape[0]), atol=tol)


# ---------------------------------------------------------------- observables


def mpo_env_step_left(env: np.ndarray, a: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Grow a left environment ``(bra, mpo, ket)`` by one site."""
    t = np.tensordot(env, a, axes=(2, 0))  # (a', l, s, b)
    t = np.tensordot(t, w, axes=([1, 2], [0, 2]))  # (a', b, s', r)
    t = np.tensordot(a.conj(), t, axes=([0, 1], [0, 2]))  # (b', b, r)
    return t.transpose(0, 2, 1)


def mpo_env_step_right(env: np.ndarray, a: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Grow a right environment ``(bra, mpo, ket)`` by one site."""
    t = np.tensordot(a, env, axes=(2, 2))  # (a, s, b', r)
    t = np.tensordot(t, w, axes=([1, 3], [2, 3]))  # (a, b', l, s')
    t = np.tensordot(a.conj(), t, axes=([1, 2], [3, 1]))  # (a', a, l)
    return t.transpose(0, 2, 1)


def expectation_mpo(psi: MatrixProductState, op: MatrixProductOperator) -> float:
    """<psi|op|psi> for a Hermitian ``op``; the state is not renormalized."""
    if len(psi) != len(op):
        raise ValueError(f"length mismatch: state {len(psi)}, operator {len(op)}")
    env = np.ones((1, 1, 1), dtype=np.complex128)
    for a, w in zip(psi.tensors, op.tensors):
        env = mpo_env_step_left(env, a, w)
    val = complex(env[0, 0, 0])
    if abs(val.imag) > 1e-10 * max(1.0, abs(val.real)):
        raise ValueError(f"expectation has imaginary part {val.imag:.3e}; operator not Hermitian?")
    return val.real


def window_tensor(psi: MatrixProductState, start: int, m: int) -> np.ndarray:
    """Contract sites ``start .. start+m-1`` into ``(left bond, 2**m, right bond)``."""
    t = psi.tensors[start]
    for k in range(start + 1, start + m):
        t = np.tensordot(t, psi.tensors[k], axes=(-1, 0))
    return t.reshape(t.shape[0], 2**m, t.shape[-1])


def reduced_density_matrix(psi: MatrixProductState, start: int, m: int) -> np.ndarray:
    """Reduced density matrix of the window ``[start, start + m)``.

    Returned as a ``2**m x 2**m`` matrix normalized to unit trace.
    """
    n = len(psi)
    if m > MAX_DENSE_WINDOW:
        raise CapabilityError(f"window of {m} sites exceeds dense limit {MAX_DENSE_WINDOW}")
    if m < 1 or start < 0 or start + m > n:
        raise ValueError(f"window [{start}, {start + m}) does not fit a chain of {n}")
    psi = canonicalize(psi, start)
    t = window_tensor(psi, start, m)
    rho = np.einsum("asb,atb->st", t, t.conj())
    rho = 0.5 * (rho + rho.conj().T)
    return rho / np.trace(rho).real


# ------------------------------------------------------------------ Ising MPO


@dataclass(frozen=True)
class Uniform:
    j: float = 1.0

    def coupling(self, i: int) -> float:
        return self.j


@dataclass(frozen=True)
class DoubleGaussian:
    """``J_i = exp(-(i-xa)^2 / 2a^2) + exp(-(i-xb)^2 / 2b^2) / 2`` with 1-based ``i``."""

    xa: float = 10.0
    a: float = 3.0
    xb: float = 30.0
    b: float = 5.0

    def __post_init__(self):
        if self.a <= 0 or self.b <= 0:
            raise ValueError("Gaussian widths must be positive")

    def coupling(self, i: int) -> float:
        return float(
            np.exp(-((i - self.xa) ** 2) / (2 * self.a**2))
            + 0.5 * np.exp(-((i - self.xb) ** 2) / (2 * self.b**2))
        )


@dataclass(frozen=True)
class IsingChainSpec:
    """H = -sum_i J_{i,i+1} Z_i Z_{i+1} - g sum_i X_i on an open chain."""

    n: int
    g: float
    coupling: Union[Uniform, DoubleGaussian] = field(default_factory=Uniform)

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("Ising chain needs N >= 2")

    def couplings(self) -> np.ndarray:
        """Bond couplings for bonds i = 1 .. N-1 (entry k is bond k+1)."""
        return np.array([self.coupling.coupling(i) for i in range(1, self.n)])


def ising_mpo(spec: IsingChainSpec) -> MatrixProductOperator:
    """Bond-dimension-3 MPO of the transverse-field Ising chain."""
    js = spec.couplings()
    tensors = []
    for k in range(spec.n):
        w = np.zeros((3, 2, 2, 3), dtype=np.complex128)
        w[0, :, :, 0] = ID2
        w[0, :, :, 2] = -spec.g * SX
        w[1, :, :, 2] = SZ
        w[2, :, :, 2] = ID2
        if k < spec.n - 1:
            w[0, :, :, 1] = -js[k] * SZ
        if k == 0:
            w = w[:1]
        if k == spec.n - 1:
            w = w[..., 2:]
        tensors.append(w)
    return MatrixProductOperator(tuple(tensors))



# ------------------------------------------------------------ parity sectors


def add_states(psi: MatrixProductState, phi: MatrixProductState, coeff: complex = 1.0) -> MatrixProductState:
    """Unnormalized ``|psi> + coeff |phi>`` with block-diagonal bonds."""
    if len(psi) != len(phi):
        raise ValueError("length mismatch")
    n = len(psi)
    if n == 1:
        return MatrixProductState((psi.tensors[0] + coeff * phi.tensors[0],))
    out = []
    for k, (a, b) in enumerate(zip(psi.tensors, phi.tensors)):
        if k == 0:
            t = np.concatenate([a, coeff * b], axis=2)
        elif k == n - 1:
            t = np.concatenate([a, b], axis=0)
        else:
            t = np.zeros((a.shape[0] + b.shape[0], 2, a.shape[2] + b.shape[2]), dtype=np.complex128)
            t[: a.shape[0], :, : a.shape[2]] = a
            t[a.shape[0]:, :, a.shape[2]:] = b
        out.append(t)
    return MatrixProductState(tuple(out))


def apply_single_site(psi: MatrixProductState, op: np.ndarray) -> MatrixProductState:
    """``(op x op x ... x op) |psi>``."""
    return MatrixProductState(
        tuple(np.tensordot(op, a, axes=(1, 1)).transpose(1, 0, 2) for a in psi.tensors), psi.center
    )


def compress(psi: MatrixProductState, max_bond: int, cutoff: float = 1e-10) -> MatrixProductState:
    """SVD truncation sweep; returns a normalized state with center 0."""
    from .tensor import svd_split

    ts = list(canonicalize(psi, len(psi) - 1).tensors)
    for k in range(len(ts) - 1, 0, -1):
        u, s, v, _ = svd_split(ts[k], 1, max_bond, cutoff)
        ts[k] = v
        ts[k - 1] = np.tensordot(ts[k - 1], u * s, axes=(2, 0))
    ts[0] = ts[0] / np.linalg.norm(ts[0])
    return MatrixProductState(tuple(ts), center=0)


def parity_project(psi: MatrixProductState, parity: int = 1, max_bond: int = 128, cutoff: float = 1e-10) -> MatrixProductState:
    """Normalized projection onto the ``prod_k sigma_x`` eigenspace with eigenvalue ``parity``.

    Raises ``ValueError`` if ``psi`` has no weight in that sector.
    """
    if parity not in (1, -1):
        raise ValueError("parity must be +1 or -1")
    flipped = apply_single_site(psi, SX)
    total = add_states(psi, flipped, parity)
    weight = total.norm_squared() / (4 * psi.norm_squared())
    if weight < 1e-12:
        raise ValueError(f"state has no weight in parity sector {parity:+d}")
    return compress(total, max_bond, cutoff)
