import math

import numpy as np
import pytest

import oracles
from gmeprobe.dmrg import DmrgConfig, ground_state, initial_state
from gmeprobe.mps import DoubleGaussian, IsingChainSpec, expectation_mpo, ising_mpo


def test_config_validation():
    for bad in (dict(max_bond=1), dict(cutoff=-1.0), dict(max_sweeps=0), dict(energy_tol=0.0)):
        with pytest.raises(ValueError):
            DmrgConfig(**bad)


def test_initial_state_is_seeded():
    a = initial_state(6, DmrgConfig(seed=3)).to_dense()
    b = initial_state(6, DmrgConfig(seed=3)).to_dense()
    c = initial_state(6, DmrgConfig(seed=4)).to_dense()
    np.testing.assert_array_equal(a, b)
    assert not np.allclose(a, c)
    assert np.linalg.norm(a) == pytest.approx(1.0)


@pytest.mark.parametrize("g", [0.0, 0.5, 1.0, 1.1, 3.0])
def test_two_site_closed_form(g):
    res = ground_state(ising_mpo(IsingChainSpec(2, g)))
    assert res.energy == pytest.approx(-math.sqrt(1 + 4 * g * g), abs=1e-10)
    assert res.converged


@pytest.mark.parametrize("n", [3, 6, 8])
@pytest.mark.parametrize("g", [0.0, 0.5, 1.0, 1.1])
def test_energy_matches_exact_diagonalization(n, g):
    spec = IsingChainSpec(n, g)
    res = ground_state(ising_mpo(spec), DmrgConfig(seed=n))
    exact = oracles.ground_energy(oracles.ising_matrix(spec.couplings(), g))
    assert res.energy == pytest.approx(exact, abs=1e-9)


def test_inhomogeneous_chain_and_state_quality():
    spec = IsingChainSpec(8, 0.8, DoubleGaussian(2, 1.5, 6, 2))
    h = oracles.ising_matrix(spec.couplings(), spec.g)
    res = ground_state(ising_mpo(spec))
    exact = oracles.ground_vector(h)
    assert res.energy == pytest.approx(oracles.ground_energy(h), abs=1e-9)
    assert abs(np.vdot(exact, res.state.to_dense())) == pytest.approx(1.0, abs=1e-6)


def test_history_and_reported_energy():
    spec = IsingChainSpec(10, 1.0)
    res = ground_state(ising_mpo(spec), DmrgConfig(max_bond=16))
    assert res.sweeps_used == len(res.energy_history)
    assert all(b <= a + 1e-9 for a, b in zip(res.energy_history, res.energy_history[1:]))
    state_energy = expectation_mpo(res.state, ising_mpo(spec)) / res.state.norm_squared()
    assert res.energy == pytest.approx(state_energy, abs=1e-12)
    assert max(res.state.bond_dims) <= 16


def test_truncation_is_reported():
    res = ground_state(ising_mpo(IsingChainSpec(12, 1.0)), DmrgConfig(max_bond=2, max_sweeps=4))
    assert max(res.state.bond_dims) <= 2
    assert res.max_discarded_weight > 0


def test_nonconvergence_flagged():
    res = ground_state(ising_mpo(IsingChainSpec(12, 1.0)), DmrgConfig(max_sweeps=1))
    assert not res.converged and res.sweeps_used == 1


def test_deterministic_for_equal_seed():
    mpo = ising_mpo(IsingChainSpec(10, 0.7))
    a = ground_state(mpo, DmrgConfig(seed=11))
    b = ground_state(mpo, DmrgConfig(seed=11))
    assert a.energy == b.energy
    np.testing.assert_array_equal(a.state.to_dense(), b.state.to_dense())
