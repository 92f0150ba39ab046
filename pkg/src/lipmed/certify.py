"""Optimality certificates for a measurement of an ensemble.

Given an orthonormal basis ``{w_i}`` the operator ``Z = sum_i p_i rho_i E_i``
(``E_i = |w_i><w_i|``) is Hermitian exactly when the stationarity condition
holds, and the basis is optimal when in addition ``Z - p_i rho_i >= 0`` for all
``i``. Both are checked numerically, together with the pretty-good-measurement
relation between the solution and its R-image ensemble.
"""

import json
from dataclasses import dataclass

import numpy as np

from . import hermitian as hm
from .ensemble import Povm, gram, pgm
from .errors import InconsistentSolution

ORTHO_TOL = 1e-6
SLACK_TOL = 1e-8
HERMITICITY_TOL = 1e-8  # per dimension
PGM_TOL = 1e-6


@dataclass
class Certificate:
    P_s: float
    z_hermiticity_defect: float
    min_slack_eigs: np.ndarray
    residual: float = None
    pgm_defect: float = None

    @property
    def n(self):
        return len(self.min_slack_eigs)

    @property
    def hermiticity_ok(self):
        return bool(self.z_hermiticity_defect <= HERMITICITY_TOL * self.n)

    @property
    def slacks_ok(self):
        return bool(np.all(np.asarray(self.min_slack_eigs) >= -SLACK_TOL))

    @property
    def pgm_ok(self):
        return self.pgm_defect is None or bool(self.pgm_defect <= PGM_TOL)

    @property
    def passed(self):
        finite = all(np.isfinite(v) for v in self._numbers())
        return finite and self.hermiticity_ok and self.slacks_ok and self.pgm_ok

    def _numbers(self):
        vals = [self.P_s, self.z_hermiticity_defect, *np.asarray(self.min_slack_eigs)]
        vals += [v for v in (self.residual, self.pgm_defect) if v is not None]
        return vals

    def to_dict(self):
        def opt(v):
            return None if v is None else float(v)

        return {
            "P_s": float(self.P_s),
            "z_hermiticity_defect": float(self.z_hermiticity_defect),
            "min_slack_eigs": [float(v) for v in self.min_slack_eigs],
            "residual": opt(self.residual),
            "pgm_defect": opt(self.pgm_defect),
            "hermiticity_ok": self.hermiticity_ok,
            "slacks_ok": self.slacks_ok,
            "pgm_ok": self.pgm_ok,
            "pass": self.passed,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=1)


def reconstruct_povm(ens, sol):
    """Optimal basis ``w_i = sum_j (D X^-1)_ji psi~_j`` from a solution.

    With this formula ``<w_i|psi~_i> = d_ii`` is real and positive, which fixes
    the phase of each ``w_i``. Raises InconsistentSolution when the vectors
    are not orthonormal to within 1e-6, which means ``sol`` does not belong to
    ``ens``.
    """
    t = ens.weighted_states
    if sol.n != ens.n:
        raise InconsistentSolution(f"solution has n={sol.n}, ensemble has n={ens.n}")
    m = sol.d[:, None] * hm.hermitian_inv(sol.X)
    w = m.T @ t
    defect = float(np.max(np.abs(w.conj() @ w.T - np.eye(ens.n))))
    if defect > ORTHO_TOL:
        raise InconsistentSolution(f"reconstructed basis has orthonormality defect {defect:.3e}")
    # re-orthonormalize the last bits of round-off without moving the phases
    u, _, vh = np.linalg.svd(w.T)
    return Povm((u @ vh).T)


def build_Z(ens, povm):
    """``Z = sum_i |psi~_i><psi~_i|w_i><w_i|`` (not symmetrized)."""
    t = ens.weighted_states
    w = povm.vectors
    overlaps = np.einsum("ij,ij->i", t.conj(), w)  # <psi~_i|w_i>
    return np.einsum("ia,i,ib->ab", t, overlaps, w.conj())


def hermiticity_defect(z):
    """``||Z - Z^H||_HS / 2``."""
    z = np.asarray(z)
    return 0.5 * hm.hs_norm(z - z.conj().T)


def slack_min_eigs(ens, z):
    """Smallest eigenvalue of ``herm(Z) - p_i rho_i`` for each ``i``."""
    zh = hm.hermitize(z)
    t = ens.weighted_states
    return np.array([hm.min_eig(zh - np.outer(ti, ti.conj())) for ti in t])


def r_image(ens, sol):
    """Ensemble with the same states and ``q_i`` proportional to ``d_ii^2 p_i``."""
    q = sol.d**2 * ens.probs
    return ens.with_probs(q / q.sum())


def pgm_defect(ens, sol, povm):
    """``max_i ||w_i - w'_i||`` with ``w'`` the PGM of the R-image ensemble."""
    ref = pgm(r_image(ens, sol)).vectors
    return float(np.max(np.linalg.norm(povm.vectors - ref, axis=1)))


def certify(ens, povm, sol=None):
    """Evaluate every optimality check for ``povm`` on ``ens``."""
    gram(ens)
    z = build_Z(ens, povm)
    return Certificate(
        P_s=float(np.trace(z).real),
        z_hermiticity_defect=hermiticity_defect(z),
        min_slack_eigs=slack_min_eigs(ens, z),
        residual=None if sol is None else float(sol.residual),
        pgm_defect=None if sol is None else pgm_defect(ens, sol, povm),
    )


def certify_solution(ens, sol):
    """Reconstruct the basis from ``sol`` and certify it."""
    return certify(ens, reconstruct_povm(ens, sol), sol)


def certify_dual(ens, z):
    """Certificate for a dual point ``Z`` alone (e.g. from the barrier solver).

    Only feasibility is checked: ``P_s`` is ``Tr(Z)``, an upper bound on the
    optimum, and there is no basis or PGM relation to test.
    """
    return Certificate(
        P_s=float(np.trace(z).real),
        z_hermiticity_defect=hermiticity_defect(z),
        min_slack_eigs=slack_min_eigs(ens, z),
    )
