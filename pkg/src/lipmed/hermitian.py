"""Dense Hermitian-matrix primitives.

Hermitian matrices are plain ``numpy`` complex arrays; functions that accept
them symmetrize on entry via :func:`hermitize`. Two real n*n "grid" layouts are
used throughout the package, both row-major over (k, l):

* the *plain* grid (:func:`to_grid` / :func:`from_grid`): ``grid[k, l] = Re H[k, l]``
  and ``grid[l, k] = Im H[k, l]`` for ``k < l``, ``grid[i, i] = H[i, i]``;
* the *packed* X layout (:func:`pack` / :func:`unpack`): as above except the
  diagonal stores ``sqrt(X[i, i])`` and is squared on unpacking.
"""

import numpy as np

from .errors import EigenNonConvergence, NotPositive

NEG_EIG_RTOL = 1e-12


def hermitize(a):
    """Return ``(a + a^H) / 2`` as a complex array."""
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    return 0.5 * (a + a.conj().T)


def spectral_norm(h):
    return float(np.linalg.norm(h, 2))


def eig_hermitian(h):
    """Eigendecomposition ``h = V diag(w) V^H`` with ascending real ``w``."""
    h = hermitize(h)
    try:
        w, v = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:
        raise EigenNonConvergence(f"eigh failed for {h.shape[0]}x{h.shape[0]} input: {exc}") from exc
    return w, v


def _check_not_negative(w, h):
    scale = max(float(np.max(np.abs(w))), np.finfo(float).tiny)
    if w[0] < -NEG_EIG_RTOL * scale:
        raise NotPositive(
            f"eigenvalue {w[0]:.3e} below -{NEG_EIG_RTOL:g}*||H||_2 ({scale:.3e})"
        )


def psd_sqrt(h, floor=0.0):
    """Positive square root ``V diag(sqrt(max(w, floor))) V^H``.

    Raises NotPositive when an eigenvalue lies below ``-1e-12 * ||h||_2``,
    which is taken to mean genuine indefiniteness rather than round-off.
    """
    w, v = eig_hermitian(h)
    _check_not_negative(w, h)
    root = np.sqrt(np.maximum(w, max(floor, 0.0)))
    return hermitize((v * root) @ v.conj().T)


def psd_inv_sqrt(h):
    """Inverse positive square root of a positive definite matrix."""
    w, v = eig_hermitian(h)
    if w[0] <= 0:
        raise NotPositive(f"matrix is not positive definite (min eigenvalue {w[0]:.3e})")
    return hermitize((v / np.sqrt(w)) @ v.conj().T)


def hermitian_inv(h):
    w, v = eig_hermitian(h)
    if w[0] == 0:
        raise NotPositive("matrix is singular")
    return hermitize((v / w) @ v.conj().T)


def min_eig(h):
    return float(eig_hermitian(h)[0][0])


def hs_inner(a, b):
    """Hilbert-Schmidt inner product ``Tr(a^H b)``."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return complex(np.vdot(a, b))


def hs_norm(h):
    return float(np.linalg.norm(np.asarray(h), "fro"))


def gellmann_basis(n):
    """Hilbert-Schmidt orthonormal Hermitian basis of n x n matrices.

    Returns an array of shape ``(n*n, n, n)`` indexed row-major by (l, k):

    * ``l < k``: ``(|l><k| + |k><l|) / sqrt(2)``
    * ``l > k``: ``(i|l><k| - i|k><l|) / sqrt(2)``
    * ``l == k < n-1``: diagonal generalized Gell-Mann matrix over ``sqrt(2)``
    * ``l == k == n-1``: ``I / sqrt(n)``

    so the identity element is last (index ``n*n - 1``).
    """
    if int(n) != n or n < 2:
        raise ValueError(f"Gell-Mann basis needs n >= 2, got {n}")
    n = int(n)
    basis = np.zeros((n * n, n, n), dtype=complex)
    s2 = np.sqrt(2.0)
    for l in range(n):
        for k in range(n):
            b = basis[l * n + k]
            if l < k:
                b[l, k] = b[k, l] = 1 / s2
            elif l > k:
                b[l, k] = 1j / s2
                b[k, l] = -1j / s2
            elif l < n - 1:
                m = l + 1
                coef = np.sqrt(2.0 / (m * (m + 1))) / s2
                b[np.arange(m), np.arange(m)] = coef
                b[m, m] = -m * coef
            else:
                b[np.arange(n), np.arange(n)] = 1 / np.sqrt(n)
    return basis


def gellmann_coeffs(h, basis=None):
    """Real coordinates of Hermitian ``h`` in :func:`gellmann_basis`."""
    h = np.asarray(h, dtype=complex)
    if basis is None:
        basis = gellmann_basis(h.shape[0])
    return np.einsum("aij,ij->a", basis.conj(), h).real


def from_gellmann(coeffs, basis=None, n=None):
    coeffs = np.asarray(coeffs, dtype=float)
    if basis is None:
        n = n or int(round(np.sqrt(coeffs.size)))
        basis = gellmann_basis(n)
    return np.tensordot(coeffs, basis, axes=1)


def to_grid(h):
    """Plain real grid layout of a Hermitian matrix, flattened row-major."""
    h = np.asarray(h, dtype=complex)
    n = h.shape[0]
    iu = np.triu_indices(n, 1)
    g = np.zeros((n, n))
    g[iu] = h[iu].real
    g[iu[1], iu[0]] = h[iu].imag
    g[np.diag_indices(n)] = h.diagonal().real
    return g.ravel()


def from_grid(vec, n=None):
    """Inverse of :func:`to_grid`."""
    vec = np.asarray(vec, dtype=float)
    n = n or int(round(np.sqrt(vec.size)))
    g = vec.reshape(n, n)
    iu = np.triu_indices(n, 1)
    h = np.zeros((n, n), dtype=complex)
    h[iu] = g[iu] + 1j * g[iu[1], iu[0]]
    h[iu[1], iu[0]] = g[iu] - 1j * g[iu[1], iu[0]]
    h[np.diag_indices(n)] = g.diagonal()
    return h


def pack(x):
    """Real n*n coordinates of Hermitian ``x`` with ``sqrt`` of the diagonal."""
    x = np.asarray(x, dtype=complex)
    d = x.diagonal().real
    if np.any(d < 0):
        raise NotPositive(f"cannot pack negative diagonal entry {d.min():.3e}")
    n = x.shape[0]
    vec = to_grid(x)
    vec[:: n + 1] = np.sqrt(d)
    return vec


def unpack(vec, n=None):
    """Hermitian matrix from packed coordinates; diagonal coordinates are squared."""
    vec = np.asarray(vec, dtype=float)
    n = n or int(round(np.sqrt(vec.size)))
    if vec.size != n * n:
        raise ValueError(f"coordinate vector of length {vec.size} is not n*n for n={n}")
    h = from_grid(vec, n)
    h[np.diag_indices(n)] = vec[:: n + 1] ** 2
    return h


def diag_coords(vec, n=None):
    """The diagonal coordinates x_ii of a packed vector."""
    vec = np.asarray(vec, dtype=float)
    n = n or int(round(np.sqrt(vec.size)))
    return vec[:: n + 1].copy()
