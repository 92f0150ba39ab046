"""Ensembles of linearly independent pure states and their derived objects."""

import json
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import hermitian as hm
from .errors import LinearDependence, ParseError, Unsatisfiable, ValidationError

LI_THRESHOLD = 1e-10
PROB_TOL = 1e-12
NORM_TOL = 1e-12
ORTHO_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class Ensemble:
    """Prior probabilities ``probs[i]`` and unit state vectors ``states[i]``.

    ``states`` has shape ``(n, n)``; row ``i`` is the vector psi_i. The states
    must be linearly independent: the smallest eigenvalue of the Gram matrix of
    ``sqrt(p_i) psi_i`` has to exceed ``li_threshold``.
    """

    probs: np.ndarray
    states: np.ndarray
    li_threshold: float = field(default=LI_THRESHOLD)

    def __post_init__(self):
        probs = np.array(self.probs, dtype=float).reshape(-1)
        states = np.array(self.states, dtype=complex)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "states", states)
        n = probs.size
        if n < 1:
            raise ValidationError("probabilities", "empty ensemble")
        if states.shape != (n, n):
            raise ValidationError(
                "dimension", f"expected {n} states of dimension {n}, got shape {states.shape}"
            )
        if not np.all(np.isfinite(probs)) or not np.all(np.isfinite(states)):
            raise ValidationError("finite", "non-finite entries")
        if np.any(probs <= 0):
            raise ValidationError("probabilities", f"p_i must be > 0, min is {probs.min():.3e}")
        if abs(probs.sum() - 1.0) > PROB_TOL:
            raise ValidationError("probabilities", f"sum p_i = {probs.sum():.15f} != 1")
        norms = np.linalg.norm(states, axis=1)
        bad = np.abs(norms - 1.0) > NORM_TOL
        if np.any(bad):
            i = int(np.argmax(bad))
            raise ValidationError("normalization", f"||psi_{i}|| = {norms[i]:.15f} != 1")
        probs.setflags(write=False)
        states.setflags(write=False)

    @property
    def n(self):
        return self.probs.size

    @property
    def weighted_states(self):
        """Rows ``sqrt(p_i) psi_i``."""
        return np.sqrt(self.probs)[:, None] * self.states

    def rotated(self, u):
        """Same ensemble with every state mapped to ``u @ psi_i``."""
        return Ensemble(self.probs, self.states @ np.asarray(u).T, self.li_threshold)

    def with_probs(self, probs):
        return Ensemble(probs, self.states, self.li_threshold)

    def density(self):
        """Average state ``sum_i p_i |psi_i><psi_i|``."""
        t = self.weighted_states
        return hm.hermitize(t.T @ t.conj())


@dataclass(frozen=True, eq=False)
class Povm:
    """Rank-one projective measurement given by orthonormal rows ``vectors[i]``."""

    vectors: np.ndarray

    def __post_init__(self):
        v = np.array(self.vectors, dtype=complex)
        object.__setattr__(self, "vectors", v)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValidationError("dimension", f"POVM needs n vectors of dimension n, got {v.shape}")
        defect = self.orthonormality_defect()
        if defect > ORTHO_TOL:
            raise ValidationError("orthonormality", f"max |<w_i|w_j> - delta_ij| = {defect:.3e}")
        v.setflags(write=False)

    @property
    def n(self):
        return self.vectors.shape[0]

    def orthonormality_defect(self):
        v = self.vectors
        return float(np.max(np.abs(v.conj() @ v.T - np.eye(v.shape[0]))))

    def projectors(self):
        v = self.vectors
        return np.einsum("ia,ib->iab", v, v.conj())

    def success_probability(self, ens):
        """``sum_i p_i <psi_i|E_i|psi_i>``."""
        overlaps = np.einsum("ia,ia->i", self.vectors.conj(), ens.states)
        return float(np.sum(ens.probs * np.abs(overlaps) ** 2))


def _check_li(g, threshold):
    lam = hm.min_eig(g)
    if lam <= threshold:
        raise LinearDependence(lam, threshold)
    return lam


def gram(ens):
    """``G_ij = sqrt(p_i p_j) <psi_i|psi_j>``; raises LinearDependence if singular."""
    t = ens.weighted_states
    g = hm.hermitize(t.conj() @ t.T)
    _check_li(g, ens.li_threshold)
    return g


def validate_gram(g, threshold=LI_THRESHOLD, trace_tol=1e-12):
    """Check Hermiticity, unit trace and positive definiteness; return hermitized ``g``."""
    g = np.asarray(g, dtype=complex)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise ValidationError("dimension", f"Gram matrix must be square, got {g.shape}")
    if np.max(np.abs(g - g.conj().T)) > 1e-12:
        raise ValidationError("hermitian", "Gram matrix is not Hermitian")
    g = hm.hermitize(g)
    tr = float(np.trace(g).real)
    if abs(tr - 1.0) > trace_tol:
        raise ValidationError("trace", f"Tr(G) = {tr:.15f} != 1")
    _check_li(g, threshold)
    return g


def dual_basis(ens):
    """Vectors ``u_j`` (rows) with ``<psi~_i|u_j> = delta_ij``."""
    gram(ens)
    v = ens.weighted_states.conj()
    u = np.linalg.solve(v, np.eye(ens.n, dtype=complex))
    return u.T.copy()


def pgm(ens):
    """Pretty good measurement ``w_i = rho^{-1/2} psi~_i``.

    With ``M`` the matrix whose columns are ``psi~_i``, ``rho^{-1/2} M`` is the
    unitary factor of the polar decomposition ``M = U P``; computing it by SVD
    keeps the basis orthonormal to working precision even when ``rho`` is
    poorly conditioned.
    """
    gram(ens)
    u, _ = scipy.linalg.polar(ens.weighted_states.T)
    return Povm(u.T)


def r_inverse(q):
    """Ensemble with the same states and ``p_i = C q_i / (G_q^{1/2})_ii``.

    Its optimal measurement is the pretty good measurement of ``q``.
    """
    root = hm.psd_sqrt(gram(q))
    p = q.probs / root.diagonal().real
    return q.with_probs(p / p.sum())


def random_unitary(n, rng):
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / math.sqrt(2)
    qmat, r = np.linalg.qr(z)
    return qmat * (r.diagonal() / np.abs(r.diagonal()))


def random_ensemble(n, seed=0, min_gram_eig=1e-6, min_prob=1e-3, max_attempts=100, mix=1.0):
    """Seeded random ensemble of ``n`` linearly independent states.

    A Haar-random orthonormal basis ``Q`` is mixed as ``Q (I + mix N / sqrt(2n))``
    with ``N`` a standard complex Gaussian matrix, and the resulting columns are
    normalized. Probabilities come from a flat Dirichlet draw clipped to
    ``min_prob`` and renormalized. Draws whose Gram matrix has smallest
    eigenvalue below ``min_gram_eig`` are rejected.
    """
    if n < 2:
        raise ValueError(f"random_ensemble needs n >= 2, got {n}")
    if mix < 0:
        raise ValueError(f"mix must be >= 0, got {mix}")
    rng = np.random.default_rng(seed)
    for _ in range(max_attempts):
        q = random_unitary(n, rng)
        noise = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        states = (q @ (np.eye(n) + mix * noise / math.sqrt(2 * n))).T
        states /= np.linalg.norm(states, axis=1)[:, None]
        probs = np.maximum(rng.dirichlet(np.ones(n)), min_prob)
        probs /= probs.sum()
        try:
            ens = Ensemble(probs, states)
            if hm.min_eig(gram(ens)) >= min_gram_eig:
                return ens
        except ValidationError:
            continue
    raise Unsatisfiable(
        f"no ensemble with min Gram eigenvalue >= {min_gram_eig:g} in {max_attempts} draws (n={n})"
    )


def two_state_ensemble(p1, overlap):
    """Two states with real inner product ``overlap`` and priors ``(p1, 1 - p1)``."""
    s = float(overlap)
    states = np.array([[1.0, 0.0], [s, math.sqrt(1.0 - s * s)]], dtype=complex)
    return Ensemble([p1, 1.0 - p1], states)


# --- file I/O -------------------------------------------------------------

def to_dict(ens):
    return {
        "n": int(ens.n),
        "probs": [float(p) for p in ens.probs],
        "states": [[[float(z.real), float(z.imag)] for z in row] for row in ens.states],
    }


def from_dict(data):
    if not isinstance(data, dict):
        raise ParseError("top-level value must be an object")
    for key in ("n", "probs", "states"):
        if key not in data:
            raise ParseError("missing key", field=key)
    n = data["n"]
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise ParseError(f"n must be a positive integer, got {n!r}", field="n")
    try:
        probs = np.array(data["probs"], dtype=float)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"not a list of numbers ({exc})", field="probs") from None
    if probs.shape != (n,):
        raise ParseError(f"expected {n} probabilities, got shape {probs.shape}", field="probs")
    rows = data["states"]
    if not isinstance(rows, list) or len(rows) != n:
        raise ParseError(f"expected {n} state vectors", field="states")
    states = np.zeros((n, n), dtype=complex)
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != n:
            raise ParseError(f"state {i} must have {n} components", field=f"states[{i}]")
        for j, z in enumerate(row):
            if (
                not isinstance(z, list)
                or len(z) != 2
                or not all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in z)
            ):
                raise ParseError("component must be [re, im]", field=f"states[{i}][{j}]")
            states[i, j] = complex(z[0], z[1])
    return Ensemble(probs, states)


def _loads(text, source):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON in {source}: {exc.msg}", line=exc.lineno) from None


def save(ens, path):
    """Write the ensemble as JSON with 17 significant digits (repr round-trips)."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(to_dict(ens), fh, indent=1)
        fh.write("\n")


def load(path):
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return from_dict(_loads(text, str(path)))
