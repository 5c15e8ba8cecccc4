import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from gmeprobe.errors import CapabilityError
from gmeprobe.witness import (
    apply_local,
    biseparable_bound,
    bipartitions,
    dump_matrix,
    ghz_vector,
    ghz_witness,
    parse_matrix,
    projector_witness,
    random_biseparable_states,
    refine_target,
    witnessed_entanglement,
)


def haar_unitary(rng):
    z = (rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / abs(np.diag(r)))


def brute_bound(t, m):
    """Largest squared Schmidt coefficient over every (unordered) bipartition, via explicit index sets."""
    tensor = t.reshape((2,) * m)
    best = 0.0
    for mask in range(1, 2**m - 1):
        a = [k for k in range(m) if mask >> k & 1]
        b = [k for k in range(m) if not mask >> k & 1]
        mat = np.transpose(tensor, a + b).reshape(2 ** len(a), -1)
        best = max(best, np.linalg.norm(mat, 2) ** 2)
    return best


@pytest.mark.parametrize("m", [2, 3, 4, 5, 6])
def test_bipartition_count(m):
    parts = list(bipartitions(m))
    assert len(parts) == 2 ** (m - 1) - 1
    assert len(set(parts)) == len(parts)


@pytest.mark.parametrize("m", [2, 3, 4, 5])
def test_ghz_witness(m):
    w = ghz_witness(m)
    assert w.offset == pytest.approx(0.5, abs=1e-14)
    assert w.value(oracles.ghz(m)) == pytest.approx(-0.5, abs=1e-14)
    np.testing.assert_allclose(w.q, w.q.conj().T)


@settings(max_examples=40, deadline=None)
@given(m=st.integers(2, 5), seed=st.integers(0, 10_000))
def test_bound_matches_brute_force(m, seed):
    rng = np.random.default_rng(seed)
    t = rng.standard_normal(2**m) + 1j * rng.standard_normal(2**m)
    t /= np.linalg.norm(t)
    assert biseparable_bound(t) == pytest.approx(brute_bound(t, m), abs=1e-12)


def test_bound_of_product_state_is_one():
    t = oracles.kron_all([oracles.PLUS, np.array([1, 0]), oracles.PLUS])
    assert biseparable_bound(t) == pytest.approx(1.0)


def test_witness_input_validation():
    with pytest.raises(ValueError):
        projector_witness(np.ones(8))
    with pytest.raises(ValueError):
        projector_witness(np.ones(3) / np.sqrt(3))
    with pytest.raises(CapabilityError):
        projector_witness(ghz_vector(7))
    with pytest.raises(ValueError):
        projector_witness(np.array([1.0, 0.0]))


def test_certification_on_random_biseparable_states():
    rng = np.random.default_rng(2024)
    w = ghz_witness(3)
    states = random_biseparable_states(3, 100_000, rng)
    norms = np.linalg.norm(states, axis=1)
    np.testing.assert_allclose(norms, 1.0, atol=1e-12)
    values = np.einsum("ni,ij,nj->n", states.conj(), w.q, states).real
    assert values.min() >= -1e-10


def test_random_biseparable_states_are_biseparable():
    rng = np.random.default_rng(1)
    for s in random_biseparable_states(4, 50, rng):
        assert brute_bound(s, 4) == pytest.approx(1.0, abs=1e-10)


@settings(max_examples=30, deadline=None)
@given(m=st.integers(2, 4), seed=st.integers(0, 10_000))
def test_bound_invariant_under_local_unitaries(m, seed):
    rng = np.random.default_rng(seed)
    t = rng.standard_normal(2**m) + 1j * rng.standard_normal(2**m)
    t /= np.linalg.norm(t)
    us = [haar_unitary(rng) for _ in range(m)]
    assert biseparable_bound(apply_local(us, t)) == pytest.approx(biseparable_bound(t), abs=1e-10)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_refine_recovers_rotated_ghz(seed):
    rng = np.random.default_rng(seed)
    state = apply_local([haar_unitary(rng) for _ in range(3)], ghz_vector(3))
    w = refine_target(state)
    assert w.offset == 0.5
    assert biseparable_bound(w.target) == pytest.approx(0.5, abs=1e-10)
    assert w.value(state) == pytest.approx(-0.5, abs=1e-6)


@settings(max_examples=30, deadline=None)
@given(m=st.integers(2, 4), seed=st.integers(0, 10_000))
def test_refine_never_worse_than_ghz_and_stays_valid(m, seed):
    rng = np.random.default_rng(seed)
    state = rng.standard_normal(2**m) + 1j * rng.standard_normal(2**m)
    state /= np.linalg.norm(state)
    w = refine_target(state)
    assert w.value(state) <= ghz_witness(m).value(state) + 1e-12
    assert biseparable_bound(w.target) == pytest.approx(0.5, abs=1e-10)


def test_refine_on_product_state_is_nonnegative():
    w = refine_target(oracles.kron_all([np.array([1, 0])] * 3))
    assert w.value(oracles.kron_all([np.array([1, 0])] * 3)) >= -1e-12


def test_value_of_density_matrix_matches_vector():
    rng = np.random.default_rng(0)
    v = rng.standard_normal(8) + 1j * rng.standard_normal(8)
    w = ghz_witness(3)
    assert w.value(np.outer(v, v.conj())) == pytest.approx(w.value(v), abs=1e-14)


def test_witnessed_entanglement_clamps():
    assert witnessed_entanglement(-0.3) == 0.3
    assert witnessed_entanglement(0.2) == 0.0


def test_dump_round_trip():
    q = ghz_witness(3).q
    text = dump_matrix(q)
    assert len(text.splitlines()) == 8
    assert all(len(line.split()) == 8 for line in text.splitlines())
    np.testing.assert_array_equal(parse_matrix(text), q)
