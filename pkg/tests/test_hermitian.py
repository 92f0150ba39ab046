import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as hst

from lipmed import hermitian as hm
from lipmed.errors import NotPositive

from oracles import REF_D, REF_DELTA_NORM, random_hermitian


def test_eig_identity():
    w, v = hm.eig_hermitian(np.eye(3))
    np.testing.assert_allclose(w, [1, 1, 1])
    np.testing.assert_allclose(v.conj().T @ v, np.eye(3), atol=1e-12)


def test_eig_diagonal_ascending():
    w, v = hm.eig_hermitian(np.diag([2.0, 1.0]))
    np.testing.assert_allclose(w, [1, 2])
    np.testing.assert_allclose(np.abs(v), [[0, 1], [1, 0]], atol=1e-15)


@pytest.mark.parametrize("n", [2, 3, 5, 8])
def test_eig_reconstruction(n, rng):
    h = random_hermitian(n, rng)
    w, v = hm.eig_hermitian(h)
    scale = np.linalg.norm(h, 2)
    assert np.linalg.norm(h @ v - v * w, 2) <= 1e-10 * scale
    np.testing.assert_allclose(v.conj().T @ v, np.eye(n), atol=1e-12)
    assert np.all(np.diff(w) >= 0)


def test_psd_sqrt_scalar_and_diagonal():
    np.testing.assert_allclose(hm.psd_sqrt(np.eye(4) / 4), np.eye(4) / 2, atol=1e-15)
    np.testing.assert_allclose(hm.psd_sqrt(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]), atol=1e-15)


def test_psd_sqrt_ref_gram(ref_gram):
    r = hm.psd_sqrt(ref_gram)
    assert hm.min_eig(r) > 0
    np.testing.assert_allclose(r @ r, ref_gram, atol=1e-10)


def test_psd_sqrt_rejects_indefinite():
    with pytest.raises(NotPositive):
        hm.psd_sqrt(np.diag([1.0, -1e-3]))


def test_psd_sqrt_tolerates_roundoff():
    r = hm.psd_sqrt(np.diag([1.0, -1e-14]))
    np.testing.assert_allclose(r, np.diag([1.0, 0.0]))


@given(seed=hst.integers(0, 2**32 - 1), n=hst.integers(2, 6), logcond=hst.floats(0, 8))
@settings(max_examples=60, deadline=None)
def test_psd_sqrt_squares_back(seed, n, logcond):
    rng = np.random.default_rng(seed)
    u, _ = np.linalg.qr(rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
    lam = np.logspace(-logcond, 0, n)
    h = (u * lam) @ u.conj().T
    r = hm.psd_sqrt(h)
    assert np.linalg.norm(r @ r - h, 2) <= 1e-9 * np.linalg.norm(h, 2)


def test_gellmann_n2_is_scaled_pauli():
    b = hm.gellmann_basis(2) * np.sqrt(2)
    sx = np.array([[0, 1], [1, 0]])
    sy = np.array([[0, -1j], [1j, 0]])
    sz = np.array([[1, 0], [0, -1]])
    found = [np.eye(2), sx, sy, sz]
    for m in found:
        assert any(np.allclose(m, s * bi) for bi in b for s in (1, -1))


def test_gellmann_n3_traceless():
    b = hm.gellmann_basis(3)
    traces = np.abs(np.trace(b, axis1=1, axis2=2))
    assert np.sum(traces > 1e-14) == 1
    np.testing.assert_allclose(b[-1], np.eye(3) / np.sqrt(3))


@pytest.mark.parametrize("n", range(2, 9))
def test_gellmann_orthonormal(n):
    b = hm.gellmann_basis(n)
    assert b.shape == (n * n, n, n)
    for m in b:
        np.testing.assert_array_equal(m, m.conj().T)
    gram = np.einsum("aij,bji->ab", b, b)
    np.testing.assert_allclose(gram, np.eye(n * n), atol=1e-12)


def test_gellmann_bad_n():
    with pytest.raises(ValueError):
        hm.gellmann_basis(1)


@pytest.mark.parametrize("n", [2, 4, 6])
def test_gellmann_reconstruction(n, rng):
    h = random_hermitian(n, rng)
    c = hm.gellmann_coeffs(h)
    np.testing.assert_allclose(hm.from_gellmann(c), h, atol=1e-13)


def test_pack_identity():
    x = hm.pack(np.eye(3) / 3)
    np.testing.assert_allclose(x.reshape(3, 3), np.eye(3) / np.sqrt(3))


def test_pack_offdiagonal_layout():
    x = np.array([[0.5, 0.1 + 0.2j], [0.1 - 0.2j, 0.5]])
    c = hm.pack(x)
    assert c[1] == 0.1 and c[2] == 0.2


def test_pack_negative_diagonal():
    with pytest.raises(NotPositive):
        hm.pack(np.diag([1.0, -0.5]))


def test_pack_ref_solution_diagonal(ref_gram):
    from lipmed.newton import solve_newton

    sol = solve_newton(ref_gram)
    np.testing.assert_allclose(hm.pack(sol.X)[::6], REF_D, atol=5e-6)


@pytest.mark.parametrize("n", [2, 3, 5])
def test_pack_unpack_roundtrip(n, rng):
    h = random_hermitian(n, rng)
    h[np.diag_indices(n)] = np.abs(h.diagonal())
    c = hm.pack(h)
    back = hm.unpack(c)
    off = ~np.eye(n, dtype=bool)
    np.testing.assert_array_equal(back[off], h[off])
    np.testing.assert_allclose(back.diagonal(), h.diagonal(), rtol=1e-15)


def test_unpack_squares_negative_coordinates():
    c = np.array([-0.5, 0.1, 0.2, 0.3])
    assert np.all(hm.unpack(c).diagonal().real >= 0)


def test_hs_values(ref_gram):
    from lipmed.taylor import starting_point

    assert hm.hs_norm(np.eye(2)) == pytest.approx(np.sqrt(2))
    sx = np.array([[0, 1], [1, 0]])
    sy = np.array([[0, -1j], [1j, 0]])
    assert hm.hs_inner(sx, sy) == 0
    g0, _ = starting_point(ref_gram)
    assert hm.hs_norm(ref_gram - g0) == pytest.approx(REF_DELTA_NORM, abs=5e-6)


def test_hs_dimension_mismatch():
    with pytest.raises(ValueError):
        hm.hs_inner(np.eye(2), np.eye(3))


def test_grid_roundtrip(rng):
    h = random_hermitian(4, rng)
    np.testing.assert_array_equal(hm.from_grid(hm.to_grid(h)), h)
