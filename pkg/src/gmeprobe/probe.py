"""Padded witness ``W = P_L x Q x P_R`` evaluated on MPS chain states.

Sites outside the window carry contrast operators. The common case is a
rank-1 operator ``lambda |phi><phi|`` on each site, for which the state left
after projecting every outside site is a pure window vector. The value of
interest is then

    normalized = <phi_w| Q |phi_w> / <phi_w|phi_w>,   raw = alpha * normalized,

with ``alpha = prod(lambda) * <phi_w|phi_w>`` the weight surviving the
projections. On long chains ``alpha`` underflows, so contractions renormalize
after each site and carry ``log(alpha)`` separately.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence, Union

import numpy as np
import scipy.linalg
import scipy.optimize

from .errors import ConvergenceError, DegenerateProjectionError
from .mps import KET_PLUS, MAX_DENSE_WINDOW, MatrixProductState
from .witness import WindowWitness

log = logging.getLogger(__name__)

_TINY = 1e-300
PENCIL_EPS = 1e-12


# ------------------------------------------------------------------ contrasts


@dataclass(frozen=True)
class Identity:
    """Trace out the site."""


@dataclass(frozen=True)
class ScaledProjector:
    """``scale * |direction><direction|`` on a single site."""

    direction: np.ndarray
    scale: float = 1.0

    def __post_init__(self):
        d = np.asarray(self.direction, dtype=np.complex128).reshape(-1)
        if d.shape != (2,):
            raise ValueError("direction must be a single-qubit vector")
        if abs(np.linalg.norm(d) - 1) > 1e-10:
            raise ValueError("direction must be normalized")
        if not self.scale > 0:
            raise ValueError("scale must be positive")
        object.__setattr__(self, "direction", d)


Entry = Union[Identity, ScaledProjector]


@dataclass(frozen=True)
class ContrastFamily:
    """Per-site contrast operators for every site outside ``[start, start + m)``."""

    n: int
    start: int
    m: int
    entries: tuple
    translational_symmetric: bool = False

    def __post_init__(self):
        if not (0 <= self.start and self.start + self.m <= self.n and self.m >= 1):
            raise ValueError(f"window [{self.start}, {self.start + self.m}) does not fit N={self.n}")
        entries = tuple(self.entries)
        if len(entries) != self.n - self.m:
            raise ValueError(f"need {self.n - self.m} contrast entries, got {len(entries)}")
        for e in entries:
            if not isinstance(e, (Identity, ScaledProjector)):
                raise TypeError(f"unsupported contrast entry {e!r}")
        if self.translational_symmetric and len(set(_entry_key(e) for e in entries)) > 1:
            raise ValueError("translationally symmetric family needs identical entries")
        object.__setattr__(self, "entries", entries)

    @property
    def outside_sites(self) -> list[int]:
        return [k for k in range(self.n) if not self.start <= k < self.start + self.m]

    def entry_at(self, site: int) -> Entry:
        if self.start <= site < self.start + self.m:
            raise KeyError(f"site {site} is inside the window")
        return self.entries[site if site < self.start else site - self.m]

    @property
    def all_projectors(self) -> bool:
        return all(isinstance(e, ScaledProjector) for e in self.entries)

    def with_directions(self, directions: Sequence[np.ndarray]) -> "ContrastFamily":
        entries = tuple(replace(e, direction=np.asarray(d)) for e, d in zip(self.entries, directions))
        return replace(self, entries=entries)

    def with_scales(self, scales: Sequence[float]) -> "ContrastFamily":
        return replace(self, entries=tuple(replace(e, scale=float(s)) for e, s in zip(self.entries, scales)))

    @classmethod
    def uniform(cls, n, start, m, direction=KET_PLUS, scale=1.0, symmetric=False) -> "ContrastFamily":
        e = ScaledProjector(np.asarray(direction, dtype=np.complex128), scale)
        return cls(n, start, m, (e,) * (n - m), symmetric)

    @classmethod
    def identity(cls, n, start, m) -> "ContrastFamily":
        return cls(n, start, m, (Identity(),) * (n - m))


def _entry_key(e: Entry):
    if isinstance(e, Identity):
        return ("I",)
    return ("P", e.scale) + tuple(np.round(e.direction, 14))


@dataclass(frozen=True)
class StateContrast:
    """``scale * |chi><chi|`` for an MPS ``chi`` living on all outside sites.

    Sites of ``chi`` are the outside sites in chain order. This covers the
    entangled padding ``|GHZ_{N-M}><GHZ_{N-M}|``, which does not factor into
    per-site operators.
    """

    n: int
    start: int
    m: int
    state: MatrixProductState
    scale: float = 1.0

    def __post_init__(self):
        if len(self.state) != self.n - self.m:
            raise ValueError("contrast state must cover exactly the outside sites")
        if not self.scale > 0:
            raise ValueError("scale must be positive")


Contrast = Union[ContrastFamily, StateContrast]


@dataclass(frozen=True)
class PlacedWitness:
    witness: WindowWitness
    window_start: int
    contrast: Contrast

    def __post_init__(self):
        c = self.contrast
        if c.start != self.window_start or c.m != self.witness.m:
            raise ValueError("contrast does not match the witness window")


@dataclass(frozen=True)
class ProbeResult:
    """Probe outcome at one window position (0-based ``window_start``).

    ``log_scale`` is ``log(alpha)``; ``alpha`` itself may underflow to zero.
    """

    window_start: int
    raw: float
    alpha: float
    normalized: float
    log_scale: float


# --------------------------------------------------------------- contractions


def _contrast_bra_tensors(contrast: Contrast):
    """Per outside site bra tensor ``(c_left, s, c_right)`` (not conjugated) and total log scale."""
    if isinstance(contrast, StateContrast):
        return list(contrast.state.tensors), math.log(contrast.scale)
    tensors, log_lambda = [], 0.0
    for e in contrast.entries:
        if isinstance(e, Identity):
            raise ValueError("identity entries have no pure projection; use probe()")
        tensors.append(e.direction.reshape(1, 2, 1))
        log_lambda += math.log(e.scale)
    return tensors, log_lambda


def projected_window_state(psi: MatrixProductState, placed: PlacedWitness | Contrast):
    """Window vector left after projecting all outside sites of ``psi``.

    Returns
    -------
    phi_w : ndarray, shape ``(2**m,)``
        Unit-norm window state.
    alpha : float
        Surviving weight ``prod(lambda) * ||phi_w_unnormalized||^2 / <psi|psi>``.
    log_scale : float
        ``log(alpha)``, valid even when ``alpha`` underflows.
    """
    contrast = placed.contrast if isinstance(placed, PlacedWitness) else placed
    n, start, m = contrast.n, contrast.start, contrast.m
    if len(psi) != n:
        raise ValueError(f"contrast built for N={n}, state has N={len(psi)}")
    bras, log_alpha = _contrast_bra_tensors(contrast)
    t = np.ones((1, 1, 1), dtype=np.complex128)  # (contrast bond, window, psi bond)
    o = 0
    for k, a in enumerate(psi.tensors):
        if start <= k < start + m:
            t = np.tensordot(t, a, axes=(2, 0))  # (c, w, s, b)
            t = t.reshape(t.shape[0], -1, t.shape[3])
        else:
            x = bras[o].conj()
            o += 1
            t = np.tensordot(t, a, axes=(2, 0))  # (c, w, s, b)
            t = np.tensordot(x, t, axes=([0, 1], [0, 2]))  # (c', w, b)
        nrm = np.linalg.norm(t)
        if not nrm > _TINY:
            raise DegenerateProjectionError(f"projection vanished at site {k}")
        t = t / nrm
        log_alpha += 2 * math.log(nrm)
    phi = t.reshape(-1)
    log_alpha -= math.log(psi.norm_squared())
    return phi, math.exp(log_alpha), log_alpha


def _window_operator(psi: MatrixProductState, contrast: ContrastFamily):
    """Unnormalized window operator ``Tr_out[(P_out x I_w) |psi><psi|]`` and its log scale."""
    n, start, m = contrast.n, contrast.start, contrast.m
    if m > MAX_DENSE_WINDOW:
        raise ValueError("window too large for a dense operator")
    e = np.ones((1, 1, 1, 1), dtype=np.complex128)  # (w, a, w', a')
    log_scale = 0.0
    for k, a in enumerate(psi.tensors):
        if start <= k < start + m:
            e = np.tensordot(e, a, axes=(1, 0))  # (w, w', a', s, b)
            e = np.tensordot(e, a.conj(), axes=(2, 0))  # (w, w', s, b, s', b')
            e = e.transpose(0, 2, 3, 1, 4, 5)
            sh = e.shape
            e = e.reshape(sh[0] * sh[1], sh[2], sh[3] * sh[4], sh[5])
        else:
            entry = contrast.entry_at(k)
            if isinstance(entry, Identity):
                e = np.tensordot(e, a, axes=(1, 0))  # (w, w', a', s, b)
                e = np.tensordot(e, a.conj(), axes=([2, 3], [0, 1]))  # (w, w', b, b')
                e = e.transpose(0, 2, 1, 3)
            else:
                k_mat = np.tensordot(a, entry.direction.conj(), axes=(1, 0))  # (a, b)
                e = np.tensordot(e, k_mat, axes=(1, 0))  # (w, w', a', b)
                e = np.tensordot(e, k_mat.conj(), axes=(2, 0))  # (w, w', b, b')
                e = e.transpose(0, 2, 1, 3)
                log_scale += math.log(entry.scale)
        nrm = np.linalg.norm(e)
        if not nrm > _TINY:
            raise DegenerateProjectionError(f"projection vanished at site {k}")
        e = e / nrm
        log_scale += math.log(nrm)
    rho = e[:, 0, :, 0]
    rho = 0.5 * (rho + rho.conj().T)
    return rho, log_scale - math.log(psi.norm_squared())


def probe(psi: MatrixProductState, placed: PlacedWitness) -> ProbeResult:
    """Evaluate ``raw = <psi|W|psi>``, ``alpha`` and ``normalized = raw / alpha``."""
    c = placed.contrast
    q = placed.witness
    if isinstance(c, StateContrast) or c.all_projectors:
        phi, alpha, log_alpha = projected_window_state(psi, placed)
        normalized = q.value(phi)
    else:
        rho, log_s = _window_operator(psi, c)
        tr = float(np.trace(rho).real)
        if not tr > _TINY:
            raise DegenerateProjectionError("projected window operator has zero trace")
        normalized = float(np.trace(q.q @ rho).real) / tr
        log_alpha = log_s + math.log(tr)
        alpha = math.exp(log_alpha)
    raw = normalized * math.exp(log_alpha)
    return ProbeResult(placed.window_start, raw, alpha, normalized, log_alpha)


def rdm_probe(psi: MatrixProductState, witness: WindowWitness, window_start: int) -> float:
    """``Tr(Q rho_w)`` with ``rho_w`` the reduced density matrix of the window."""
    from .mps import reduced_density_matrix

    rho = reduced_density_matrix(psi, window_start, witness.m)
    return float(np.trace(witness.q @ rho).real)


# ------------------------------------------------------------------ optimizer


class _Sweeper:
    """Cached left/right partial contractions for per-site pencil updates.

    ``left[k]`` contracts sites ``< k`` into shape ``(w, bond_k)`` and
    ``right[k]`` contracts sites ``>= k`` into ``(bond_k, w)``, with outside
    sites projected onto their current directions. Both are kept at unit norm.
    """

    def __init__(self, psi: MatrixProductState, start: int, m: int, directions: list):
        self.ts = psi.tensors
        self.n = len(psi)
        self.start, self.m = start, m
        self.dirs = {k: d for k, d in zip(self._outside(), directions)}
        self.left = [None] * (self.n + 1)
        self.right = [None] * (self.n + 1)
        self.left[0] = np.ones((1, 1), dtype=np.complex128)
        self.right[self.n] = np.ones((1, 1), dtype=np.complex128)
        for k in range(self.n):
            self.push_left(k)
        for k in range(self.n - 1, -1, -1):
            self.push_right(k)

    def _outside(self):
        return [k for k in range(self.n) if not self.start <= k < self.start + self.m]

    def inside(self, k):
        return self.start <= k < self.start + self.m

    def push_left(self, k):
        a = self.ts[k]
        t = np.tensordot(self.left[k], a, axes=(1, 0))  # (w, s, b)
        if self.inside(k):
            t = t.reshape(-1, a.shape[2])
        else:
            t = np.tensordot(self.dirs[k].conj(), t, axes=(0, 1))
        self.left[k + 1] = _unit(t, k)

    def push_right(self, k):
        a = self.ts[k]
        t = np.tensordot(a, self.right[k + 1], axes=(2, 0))  # (a, s, w)
        if self.inside(k):
            t = t.reshape(a.shape[0], -1)
        else:
            t = np.tensordot(t, self.dirs[k].conj(), axes=(1, 0))
        self.right[k] = _unit(t, k)

    def site_map(self, k) -> np.ndarray:
        """Matrix ``V`` with ``phi_w = V @ conj(direction_k)`` (up to scale)."""
        t = np.tensordot(self.left[k], self.ts[k], axes=(1, 0))  # (wl, s, b)
        t = np.tensordot(t, self.right[k + 1], axes=(2, 0))  # (wl, s, wr)
        return t.transpose(0, 2, 1).reshape(-1, 2)

    def window_vector(self) -> np.ndarray:
        phi = (self.left[self.n] @ self.right[self.n]).reshape(-1)
        return phi / np.linalg.norm(phi)


def _unit(t, k):
    nrm = np.linalg.norm(t)
    if not nrm > _TINY:
        raise DegenerateProjectionError(f"projection vanished at site {k}")
    return t / nrm


def _site_minimizer(q: np.ndarray, v: np.ndarray):
    """Minimize ``x^H (V^H Q V) x / x^H (V^H V) x`` over site vectors ``x``.

    Equivalent to the generalized pencil ``(V^H Q V, V^H V)``, solved in the
    column span of ``V``: columns are equilibrated, orthonormalized by QR, the
    window witness is diagonalized on that span, and ``x`` is recovered by back
    substitution. Equilibration keeps branches whose weights differ by many
    orders of magnitude (e.g. the two GHZ branches after tilted projections).
    Returns ``None`` when ``V`` vanishes.
    """
    norms = np.linalg.norm(v, axis=0)
    live = norms > _TINY
    if not live.any():
        return None
    vl = v[:, live] / norms[live]
    qr_q, qr_r = np.linalg.qr(vl)
    diag = np.abs(np.diag(qr_r))
    rank = int(np.count_nonzero(diag > PENCIL_EPS * diag.max()))
    rank = max(rank, 1)
    basis = qr_q[:, :rank]
    c = basis.conj().T @ q @ basis
    _, cv = np.linalg.eigh(0.5 * (c + c.conj().T))
    y = cv[:, 0]
    xl = np.zeros(vl.shape[1], dtype=np.complex128)
    xl[:rank] = scipy.linalg.solve_triangular(qr_r[:rank, :rank], y)
    x = np.zeros(v.shape[1], dtype=np.complex128)
    x[live] = xl / norms[live]
    return x / np.linalg.norm(x)


def _rayleigh(q: np.ndarray, v: np.ndarray, x: np.ndarray) -> Optional[float]:
    phi = v @ x
    den = np.vdot(phi, phi).real
    if not den > _TINY:
        return None
    phi = phi / np.sqrt(den)
    return float(np.vdot(phi, q @ phi).real)


def optimize_contrast(
    psi: MatrixProductState,
    witness: WindowWitness,
    window_start: int,
    init: Optional[ContrastFamily] = None,
    max_sweeps: int = 50,
    tol: float = 1e-10,
):
    """Lower the normalized probe value by alternating single-site direction updates.

    For one outside site the normalized value is the generalized Rayleigh
    quotient ``x^H A x / x^H B x`` in ``x = conj(phi_site)``, with
    ``A = V^H Q V`` and ``B = V^H V`` built from the rest of the network.
    Each update takes the minimal generalized eigenvector of ``(A, B)``
    (see :func:`_site_minimizer`) and is kept only if it lowers the objective.
    Sweeps go left to right, then right to left, over the outside sites.
    Scales are left untouched since ``normalized`` does not depend on them.

    For a ``translational_symmetric`` family all sites share one direction:
    each step averages the per-site optimal directions (phase aligned), applies
    the average with backtracking, and a final two-angle Nelder-Mead polish is
    accepted only if it lowers the objective.

    Returns
    -------
    family : ContrastFamily
    result : ProbeResult
    history : list of float
        Objective after the initial evaluation and after every accepted update.
    """
    n = len(psi)
    m = witness.m
    if init is None:
        init = ContrastFamily.uniform(n, window_start, m)
    if not init.all_projectors:
        raise ValueError("optimization needs a ScaledProjector at every outside site")
    if init.start != window_start or init.m != m or init.n != n:
        raise ValueError("initial family does not match the window")
    if tol <= 0:
        raise ValueError("tol must be positive")
    if n == m:
        res = probe(psi, PlacedWitness(witness, window_start, init))
        return init, res, [res.normalized]

    directions = [e.direction.copy() for e in init.entries]
    try:
        sweeper = _Sweeper(psi, window_start, m, directions)
    except DegenerateProjectionError:
        directions = [_blend_plus(d) for d in directions]
        sweeper = _Sweeper(psi, window_start, m, directions)

    if init.translational_symmetric:
        family, history = _optimize_symmetric(psi, witness, init, sweeper, max_sweeps, tol)
    else:
        history = _optimize_sitewise(witness, sweeper, max_sweeps, tol)
        outside = init.outside_sites
        family = init.with_directions([sweeper.dirs[k] for k in outside])
    result = probe(psi, PlacedWitness(witness, window_start, family))
    return family, result, history


def _blend_plus(d):
    x = 0.5 * d + 0.5 * KET_PLUS
    nrm = np.linalg.norm(x)
    return x / nrm if nrm > 1e-12 else KET_PLUS.copy()


def _update_site(sweeper: _Sweeper, q: np.ndarray, k: int, current: float) -> float:
    v = sweeper.site_map(k)
    old = sweeper.dirs[k]
    x = _site_minimizer(q, v)
    if x is not None:
        value = _rayleigh(q, v, x)
        if value is not None and value < current:
            sweeper.dirs[k] = x.conj()
            return value
        if value is not None:
            return current
    # degenerate site environment
    retry = _blend_plus(old)
    value = _rayleigh(q, v, retry.conj())
    if value is None:
        raise ConvergenceError(f"projection degenerate at site {k}", best=sweeper.dirs)
    if value < current:
        sweeper.dirs[k] = retry
        return value
    return current


def _optimize_sitewise(witness, sweeper: _Sweeper, max_sweeps: int, tol: float) -> list:
    q = witness.q
    current = witness.value(sweeper.window_vector())
    history = [current]
    for _ in range(max_sweeps):
        before = current
        for k in range(sweeper.n):
            if k in sweeper.dirs:
                current = _update_site(sweeper, q, k, current)
                history.append(current)
            sweeper.push_left(k)
        for k in range(sweeper.n - 1, -1, -1):
            if k in sweeper.dirs:
                current = _update_site(sweeper, q, k, current)
                history.append(current)
            sweeper.push_right(k)
        if before - current < tol:
            break
    return history


def _uniform_value(psi, witness, family, direction) -> Optional[float]:
    fam = family.with_directions([direction] * len(family.entries))
    try:
        phi, _, _ = projected_window_state(psi, fam)
    except DegenerateProjectionError:
        return None
    return witness.value(phi)


def _optimize_symmetric(psi, witness, init, sweeper: _Sweeper, max_sweeps, tol):
    q = witness.q
    direction = init.entries[0].direction.copy()
    current = witness.value(sweeper.window_vector())
    history = [current]
    for _ in range(max_sweeps):
        before = current
        proposals = []
        for k in sweeper.dirs:
            v = sweeper.site_map(k)
            x = _site_minimizer(q, v)
            if x is None:
                continue
            d = x.conj()
            ov = np.vdot(direction, d)
            proposals.append(d * (np.conj(ov) / abs(ov) if abs(ov) > 1e-14 else 1.0))
        if not proposals:
            break
        target = np.mean(proposals, axis=0)
        if np.linalg.norm(target) < 1e-12:
            break
        target /= np.linalg.norm(target)
        step = 1.0
        while step > 1e-4:
            cand = (1 - step) * direction + step * target
            cand /= np.linalg.norm(cand)
            value = _uniform_value(psi, witness, init, cand)
            if value is not None and value < current:
                direction, current = cand, value
                history.append(current)
                break
            step *= 0.5
        if before - current < tol:
            break
        sweeper = _Sweeper(psi, init.start, init.m, [direction] * len(init.entries))

    # two-angle polish on the Bloch sphere
    def objective(angles):
        th, ph = angles
        d = np.array([np.cos(th / 2), np.exp(1j * ph) * np.sin(th / 2)])
        value = _uniform_value(psi, witness, init, d)
        return 1.0 if value is None else value

    th0 = 2 * np.arccos(min(1.0, abs(direction[0])))
    ph0 = np.angle(direction[1]) - np.angle(direction[0]) if abs(direction[0]) > 1e-14 else 0.0
    res = scipy.optimize.minimize(objective, [th0, ph0], method="Nelder-Mead", options={"xatol": 1e-9, "fatol": 1e-13, "maxiter": 2000})
    if res.fun < current:
        th, ph = res.x
        direction = np.array([np.cos(th / 2), np.exp(1j * ph) * np.sin(th / 2)])
        current = float(res.fun)
        history.append(current)
    family = init.with_directions([direction] * len(init.entries))
    return family, history


# ---------------------------------------------------------------------- scans


def scan_positions(
    psi: MatrixProductState,
    witness: WindowWitness,
    policy: str = "fixed",
    stride: int = 1,
    direction=KET_PLUS,
    scale: float = 1.0,
    symmetric: bool = False,
    max_sweeps: int = 50,
    tol: float = 1e-10,
) -> list[ProbeResult]:
    """Probe every window start ``0, stride, 2*stride, ... <= N - M``.

    ``policy`` is ``"fixed"`` (uniform ``scale * |direction><direction|``
    padding) or ``"optimize"`` (:func:`optimize_contrast` started from that
    uniform family at every position).
    """
    if stride < 1:
        raise ValueError("stride must be >= 1")
    if policy not in ("fixed", "optimize"):
        raise ValueError(f"unknown contrast policy {policy!r}")
    n, m = len(psi), witness.m
    results = []
    for start in range(0, n - m + 1, stride):
        fam = ContrastFamily.uniform(n, start, m, direction, scale, symmetric)
        if policy == "fixed":
            results.append(probe(psi, PlacedWitness(witness, start, fam)))
        else:
            results.append(optimize_contrast(psi, witness, start, fam, max_sweeps, tol)[1])
    return results
