"""The rotationally invariant condition ``F(G, X) = X^2 - D G D = 0``.

``X`` is parametrized by its packed real coordinates ``x`` (see
:func:`lipmed.hermitian.pack`) and ``D = diag(x_11, ..., x_nn)``. Residuals use
the plain grid layout of :func:`lipmed.hermitian.to_grid`, so row ``(i, j)`` of
the Jacobian lines up with column ``(i, j)``.
"""

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import hermitian as hm
from .errors import NotOptimalBranch, SingularDiagonal, ValidationError

RESIDUAL_TOL = 1e-8


def _n_of(x):
    n = int(round(np.sqrt(np.size(x))))
    if n * n != np.size(x):
        raise ValueError(f"coordinate vector length {np.size(x)} is not a square")
    return n


def residual_matrix(g, x):
    """``X^2 - D G D`` as a complex n x n matrix."""
    n = _n_of(x)
    xm = hm.unpack(x, n)
    d = np.asarray(x, dtype=float)[:: n + 1]
    return xm @ xm - (d[:, None] * g) * d[None, :]


def residual(g, x):
    """Real n*n residual vector ``to_grid(X^2 - D G D)``."""
    return hm.to_grid(residual_matrix(g, x))


def residual_norm(g, x):
    """Hilbert-Schmidt norm of ``X^2 - D G D``."""
    return hm.hs_norm(residual_matrix(g, x))


@lru_cache(maxsize=64)
def _coordinate_directions(n):
    """Unit perturbations ``dX`` per coordinate and the matching diagonal ``D_delta``.

    Diagonal directions carry a 1 here and are scaled by ``2 x_ii`` at use.
    """
    e = np.zeros((n * n, n, n), dtype=complex)
    dd = np.zeros((n * n, n), dtype=float)
    for k in range(n):
        for l in range(n):
            c = k * n + l
            if k < l:
                e[c, k, l] = e[c, l, k] = 1.0
            elif k > l:
                # coordinate (k, l) with k > l is Im X[l, k]
                e[c, l, k] = 1j
                e[c, k, l] = -1j
            else:
                e[c, k, k] = 1.0
                dd[c, k] = 1.0
    e.setflags(write=False)
    dd.setflags(write=False)
    return e, dd


def _grid_batch(h):
    """:func:`to_grid` applied to a stack of Hermitian matrices, returned as columns."""
    m, n, _ = h.shape
    iu = np.triu_indices(n, 1)
    out = np.zeros((m, n, n))
    out[:, iu[0], iu[1]] = h[:, iu[0], iu[1]].real
    out[:, iu[1], iu[0]] = h[:, iu[0], iu[1]].imag
    idx = np.arange(n)
    out[:, idx, idx] = h[:, idx, idx].real
    return out.reshape(m, n * n).T


def jacobian(g, x):
    """Exact n*n x n*n Jacobian ``d residual / d x`` at any point.

    Column ``(k, l)`` is the grid image of ``dX X + X dX - D_d G D - D G D_d``
    for the unit perturbation of coordinate ``(k, l)``.
    """
    n = _n_of(x)
    x = np.asarray(x, dtype=float)
    xm = hm.unpack(x, n)
    d = x[:: n + 1]
    e, dd = _coordinate_directions(n)
    dx = e * np.where(dd.any(axis=1), 2.0 * (dd @ d), 1.0)[:, None, None]
    gd = g * d[None, :]
    dg = d[:, None] * g
    img = dx @ xm + xm @ dx - dd[:, :, None] * gd[None] - dg[None] * dd[:, None, :]
    return _grid_batch(img)


def jacobian_solution_form(g, x):
    """Jacobian in the form valid only on the solution manifold.

    Uses ``D G D = X^2`` to write the image of ``dX`` as
    ``(dX X - D_d D^-1 X^2) + h.c.``. Equals :func:`jacobian` when
    ``residual(g, x) = 0``; elsewhere it differs by terms of the residual size.
    """
    n = _n_of(x)
    x = np.asarray(x, dtype=float)
    d = x[:: n + 1]
    if np.any(d == 0):
        raise SingularDiagonal(f"x_ii = 0 at index {int(np.argmin(np.abs(d)))}; D^-1 undefined")
    xm = hm.unpack(x, n)
    x2 = xm @ xm
    e, dd = _coordinate_directions(n)
    dx = e * np.where(dd.any(axis=1), 2.0 * (dd @ d), 1.0)[:, None, None]
    half = dx @ xm - (dd / d)[:, :, None] * x2[None]
    return _grid_batch(half + half.conj().transpose(0, 2, 1))


def apply_jacobian(g, x, dx_coords):
    """Action of :func:`jacobian` on a coordinate perturbation, without forming it."""
    n = _n_of(x)
    x = np.asarray(x, dtype=float)
    dxc = np.asarray(dx_coords, dtype=float)
    xm = hm.unpack(x, n)
    d = x[:: n + 1]
    dx = hm.from_grid(dxc, n)
    dd = dxc[:: n + 1]
    dx[np.diag_indices(n)] = 2.0 * d * dd
    img = dx @ xm + xm @ dx - (dd[:, None] * g) * d[None, :] - (d[:, None] * g) * dd[None, :]
    return hm.to_grid(img)


def identity_start(n):
    """Packed coordinates ``x_ij = delta_ij / sqrt(n)``, the solution for ``G = I/n``."""
    x = np.zeros(n * n)
    x[:: n + 1] = 1.0 / np.sqrt(n)
    return x


@dataclass
class Solution:
    """A converged positive definite root of ``X^2 = D G D``.

    ``success_probability`` is ``sum_i X_ii``; ``r_image`` is the Gram matrix
    ``D G D / Tr(D^2 G)`` of the ensemble whose pretty good measurement is optimal.
    """

    x: np.ndarray
    X: np.ndarray
    d: np.ndarray
    success_probability: float
    r_image: np.ndarray
    residual: float
    method: str = ""
    iterations: int = 0
    trace: list = field(default_factory=list)
    error_estimate: float = None
    start: str = None
    info: dict = field(default_factory=dict)

    @property
    def n(self):
        return self.d.size

    def to_dict(self):
        return {
            "method": self.method,
            "n": int(self.n),
            "Ps": float(self.success_probability),
            "d": [float(v) for v in self.d],
            "X": [[[float(z.real), float(z.imag)] for z in row] for row in self.X],
            "residual": float(self.residual),
            "iterations": int(self.iterations),
            "error_estimate": None if self.error_estimate is None else float(self.error_estimate),
        }


def extract_solution(g, x, residual_tol=RESIDUAL_TOL, method="", iterations=0, trace=None):
    """Turn converged coordinates into a :class:`Solution`.

    Raises ValidationError if the residual exceeds ``residual_tol`` and
    NotOptimalBranch if ``X`` is not positive definite.
    """
    n = _n_of(x)
    x = np.asarray(x, dtype=float).copy()
    res = residual_norm(g, x)
    if not res <= residual_tol:
        raise ValidationError("residual", f"||X^2 - DGD|| = {res:.3e} > {residual_tol:.1e}")
    xm = hm.hermitize(hm.unpack(x, n))
    lam = hm.min_eig(xm)
    if lam <= 0:
        raise NotOptimalBranch(f"X has non-positive eigenvalue {lam:.3e}")
    # negative x_ii with X > 0 is the same root as S X S with D -> |D|, S = sign(D)
    s = np.where(x[:: n + 1] < 0, -1.0, 1.0)
    xm = hm.hermitize(s[:, None] * xm * s[None, :])
    x = hm.pack(xm)
    d = x[:: n + 1].copy()
    dgd = hm.hermitize((d[:, None] * g) * d[None, :])
    return Solution(
        x=x,
        X=xm,
        d=d,
        success_probability=float(np.sum(d**2)),
        r_image=dgd / np.trace(dgd).real,
        residual=res,
        method=method,
        iterations=iterations,
        trace=list(trace or []),
    )
