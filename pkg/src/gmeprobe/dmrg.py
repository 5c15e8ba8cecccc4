"""Two-site DMRG for MPO Hamiltonians."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, NumericError
from .mps import (
    MatrixProductOperator,
    MatrixProductState,
    canonicalize,
    expectation_mpo,
    mpo_env_step_left,
    mpo_env_step_right,
)
from .tensor import DENSE_THRESHOLD, eigh_smallest, lanczos_smallest, svd_split

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class DmrgConfig:
    max_bond: int = 64
    cutoff: float = 1e-10
    max_sweeps: int = 20
    energy_tol: float = 1e-10
    seed: int = 7
    init_bond: int = 4
    noise: float = 1e-2
    local_tol: float = 1e-12

    def __post_init__(self):
        if self.max_bond < 2:
            raise ValueError("max_bond must be >= 2")
        if self.cutoff < 0:
            raise ValueError("cutoff must be >= 0")
        if self.max_sweeps < 1:
            raise ValueError("max_sweeps must be >= 1")
        if self.energy_tol <= 0:
            raise ValueError("energy_tol must be > 0")
        if self.local_tol <= 0:
            raise ValueError("local_tol must be > 0")


@dataclass
class GroundStateResult:
    state: MatrixProductState
    energy: float
    sweeps_used: int
    converged: bool
    energy_history: list = field(default_factory=list)
    max_discarded_weight: float = 0.0


def initial_state(n: int, cfg: DmrgConfig) -> MatrixProductState:
    """Random product state plus small random bond-``init_bond`` noise, seeded by ``cfg.seed``."""
    rng = np.random.default_rng(cfg.seed)
    chi = min(cfg.init_bond, cfg.max_bond)
    tensors = []
    for k in range(n):
        dl = 1 if k == 0 else chi
        dr = 1 if k == n - 1 else chi
        local = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        t = cfg.noise * (rng.standard_normal((dl, 2, dr)) + 1j * rng.standard_normal((dl, 2, dr)))
        t[0, :, 0] += local / np.linalg.norm(local)
        tensors.append(t)
    return canonicalize(MatrixProductState(tuple(tensors)), 0)


class _TwoSiteHamiltonian:
    """Effective Hamiltonian on a two-site block ``(a, s1, s2, b)``."""

    def __init__(self, left, w1, w2, right):
        self.left, self.w1, self.w2, self.right = left, w1, w2, right
        self.shape = (left.shape[2], 2, 2, right.shape[2])
        self.dim = int(np.prod(self.shape))

    def apply(self, x: np.ndarray) -> np.ndarray:
        t = np.tensordot(self.left, x.reshape(self.shape), axes=(2, 0))  # (a', l, s1, s2, b)
        t = np.tensordot(t, self.w1, axes=([1, 2], [0, 2]))  # (a', s2, b, s1', m)
        t = np.tensordot(t, self.w2, axes=([4, 1], [0, 2]))  # (a', b, s1', s2', r)
        t = np.tensordot(t, self.right, axes=([1, 4], [2, 1]))  # (a', s1', s2', b')
        return t.reshape(-1)

    def dense(self) -> np.ndarray:
        lw = np.tensordot(self.left, self.w1, axes=(1, 0))  # (a', a, s1', s1, m)
        lww = np.tensordot(lw, self.w2, axes=(4, 0))  # (a', a, s1', s1, s2', s2, r)
        h = np.tensordot(lww, self.right, axes=(6, 1))  # (a', a, s1', s1, s2', s2, b', b)
        h = h.transpose(0, 2, 4, 6, 1, 3, 5, 7)
        return h.reshape(self.dim, self.dim)


def _solve_local(heff: _TwoSiteHamiltonian, guess: np.ndarray, tol: float):
    if heff.dim <= DENSE_THRESHOLD:
        return eigh_smallest(heff.dense())
    return lanczos_smallest(heff.apply, heff.dim, tol=tol, max_iter=2000, guess=guess.reshape(-1))


def ground_state(h: MatrixProductOperator, cfg: DmrgConfig = DmrgConfig(), psi0: MatrixProductState | None = None) -> GroundStateResult:
    """Minimize <psi|h|psi> over MPS with bond dimension at most ``cfg.max_bond``.

    Each sweep runs left-to-right then right-to-left over all bonds. The local
    eigenvalue at the end of a sweep is appended to ``energy_history``;
    convergence is declared when two consecutive sweep energies differ by less
    than ``cfg.energy_tol``.
    """
    n = len(h)
    if n < 2:
        raise ValueError("DMRG needs at least two sites")
    psi = canonicalize(psi0, 0) if psi0 is not None else initial_state(n, cfg)
    ts = list(psi.tensors)
    ws = h.tensors

    lenv = [None] * (n + 1)
    renv = [None] * (n + 1)
    lenv[0] = np.ones((1, 1, 1), dtype=np.complex128)
    renv[n] = np.ones((1, 1, 1), dtype=np.complex128)
    for k in range(n - 1, 0, -1):
        renv[k] = mpo_env_step_right(renv[k + 1], ts[k], ws[k])

    history: list[float] = []
    converged = False
    max_dw = 0.0
    energy = np.inf
    sweeps = 0

    def update(i: int, sweep_right: bool):
        nonlocal energy, max_dw
        theta = np.tensordot(ts[i], ts[i + 1], axes=(2, 0))
        heff = _TwoSiteHamiltonian(lenv[i], ws[i], ws[i + 1], renv[i + 2])
        try:
            e, vec = _solve_local(heff, theta, cfg.local_tol)
        except ConvergenceError as err:
            e, vec = err.best
            log.warning("local eigensolver did not converge at bond %d; using best iterate", i)
        if not np.isfinite(e) or not np.all(np.isfinite(vec)):
            raise NumericError(f"non-finite local solution at bond {i}")
        energy = e
        theta = vec.reshape(heff.shape)
        u, s, v, dw = svd_split(theta, 2, cfg.max_bond, cfg.cutoff)
        max_dw = max(max_dw, dw)
        s = s / np.linalg.norm(s)
        if sweep_right:
            ts[i] = u
            ts[i + 1] = s[:, None, None] * v
            lenv[i + 1] = mpo_env_step_left(lenv[i], ts[i], ws[i])
        else:
            ts[i] = u * s
            ts[i + 1] = v
            renv[i + 1] = mpo_env_step_right(renv[i + 2], ts[i + 1], ws[i + 1])

    for sweep in range(cfg.max_sweeps):
        for i in range(n - 1):
            update(i, True)
        for i in range(n - 2, -1, -1):
            update(i, False)
        sweeps = sweep + 1
        history.append(float(energy))
        log.debug("sweep %d energy %.14f bonds %s", sweeps, energy, [t.shape[2] for t in ts[:-1]])
        if len(history) >= 2 and abs(history[-1] - history[-2]) < cfg.energy_tol:
            converged = True
            break

    state = MatrixProductState(tuple(ts), center=0)
    final = expectation_mpo(state, h) / state.norm_squared()
    return GroundStateResult(
        state=state,
        energy=final,
        sweeps_used=sweeps,
        converged=converged,
        energy_history=history,
        max_discarded_weight=max_dw,
    )
