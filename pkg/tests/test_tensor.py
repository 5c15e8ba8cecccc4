import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gmeprobe.errors import ConvergenceError, DimensionError, NumericError
from gmeprobe.tensor import as_tensor, contract, eigh_smallest, hermitize, lanczos_smallest, svd_split


def rand_c(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def random_hermitian(rng, n):
    a = rand_c(rng, n, n)
    return a + a.conj().T


def test_contract_matches_einsum():
    rng = np.random.default_rng(0)
    a, b = rand_c(rng, 3, 4, 5), rand_c(rng, 5, 2, 4)
    out = contract(a, b, [(1, 2), (2, 0)])
    assert out.shape == (3, 2)
    np.testing.assert_allclose(out, np.einsum("ijk,klj->il", a, b), atol=1e-12)


def test_contract_rejects_bad_pairs():
    a, b = np.ones((2, 3)), np.ones((3, 2))
    with pytest.raises(DimensionError):
        contract(a, b, [(0, 0)])
    with pytest.raises(ValueError):
        contract(a, b, [(1, 0), (1, 1)])


def test_as_tensor_rejects_nan():
    with pytest.raises(NumericError):
        as_tensor([1.0, np.nan])


def test_svd_split_reconstructs_and_truncates():
    rng = np.random.default_rng(1)
    t = rand_c(rng, 2, 3, 4, 2)
    u, s, v, disc = svd_split(t, 2, max_rank=100)
    np.testing.assert_allclose(np.tensordot(u * s, v, axes=1), t, atol=1e-12)
    assert disc == pytest.approx(0.0, abs=1e-24)

    u, s, v, disc = svd_split(t, 2, max_rank=3)
    full = np.linalg.svd(t.reshape(6, 8), compute_uv=False)
    assert s.shape == (3,)
    assert disc == pytest.approx(np.sum(full[3:] ** 2), rel=1e-12)
    err = np.linalg.norm(np.tensordot(u * s, v, axes=1) - t) ** 2
    assert err == pytest.approx(disc, rel=1e-8)


def test_svd_split_cutoff_and_zero_tensor():
    t = np.diag([1.0, 1e-3, 1e-12]).astype(complex)
    _, s, _, _ = svd_split(t, 1, max_rank=10, cutoff=1e-6)
    assert s.size == 2
    _, s, _, disc = svd_split(np.zeros((2, 2)), 1, max_rank=4)
    assert s.size == 1 and disc == 0.0
    with pytest.raises(ValueError):
        svd_split(t, 1, max_rank=0)


def test_hermitize_checks():
    with pytest.raises(ValueError):
        hermitize(np.array([[0, 1], [0, 0]]))
    with pytest.raises(DimensionError):
        hermitize(np.ones((2, 3)))


@settings(max_examples=30, deadline=None)
@given(n=st.integers(1, 20), seed=st.integers(0, 10_000))
def test_eigh_smallest_is_minimum(n, seed):
    h = random_hermitian(np.random.default_rng(seed), n)
    w, v = eigh_smallest(h)
    assert w == pytest.approx(np.linalg.eigvalsh(h)[0], abs=1e-10)
    np.testing.assert_allclose(h @ v, w * v, atol=1e-9)


def test_lanczos_iterative_path():
    rng = np.random.default_rng(2)
    n = 300
    h = random_hermitian(rng, n)
    w, v = lanczos_smallest(lambda x: h @ x, n, tol=1e-9, max_iter=5000, dense_threshold=10, rng=rng)
    assert w == pytest.approx(np.linalg.eigvalsh(h)[0], abs=1e-8)
    assert np.linalg.norm(h @ v - w * v) < 1e-8
    assert np.linalg.norm(v) == pytest.approx(1.0)


def test_lanczos_dense_path_and_guess():
    rng = np.random.default_rng(3)
    h = random_hermitian(rng, 40)
    exact = np.linalg.eigh(h)
    w, _ = lanczos_smallest(lambda x: h @ x, 40, guess=exact[1][:, 0])
    assert w == pytest.approx(exact[0][0], abs=1e-10)


def test_lanczos_reports_nonconvergence():
    rng = np.random.default_rng(4)
    h = random_hermitian(rng, 200)
    with pytest.raises(ConvergenceError) as info:
        lanczos_smallest(lambda x: h @ x, 200, tol=1e-14, max_iter=5, krylov_dim=5, dense_threshold=1, rng=rng)
    value, vec = info.value.best
    assert vec.shape == (200,)
    assert value >= np.linalg.eigvalsh(h)[0] - 1e-9
