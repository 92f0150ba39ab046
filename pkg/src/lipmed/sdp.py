"""Barrier interior-point baseline for the dual problem ``min Tr(Z)`` s.t. ``Z >= p_i rho_i``.

``Z`` is expanded in the Hilbert-Schmidt orthonormal Gell-Mann basis of
:func:`lipmed.hermitian.gellmann_basis`, so the barrier objective

    f_w(y) = Tr(Z) - (1/w) sum_i log det(Z - p_i |psi_i><psi_i|)

is a function of a real vector ``y`` with a real symmetric Hessian. Each outer
iteration minimizes ``f_w`` by Newton's method, then multiplies ``w`` by ``mu``.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import hermitian as hm
from .errors import InfeasibleIterate, NonConvergence

log = logging.getLogger(__name__)

MAX_HALVINGS = 60
ARMIJO = 0.25


@dataclass(frozen=True)
class BarrierOptions:
    mu: float = 10.0
    w0: float = 10.0
    eps: float = 1e-9
    inner_tol: float = 1e-10
    max_inner: int = 100

    def __post_init__(self):
        if not self.mu > 1:
            raise ValueError(f"mu must be > 1, got {self.mu}")
        if not self.w0 > 0:
            raise ValueError(f"w0 must be > 0, got {self.w0}")
        if not self.eps > 0:
            raise ValueError(f"eps must be > 0, got {self.eps}")
        if self.max_inner < 1:
            raise ValueError(f"max_inner must be >= 1, got {self.max_inner}")


@dataclass
class SdpResult:
    Z: np.ndarray
    y: np.ndarray
    success_probability: float
    outer_iterations: int
    trace: list = field(default_factory=list)
    hessian_min_eigs: list = field(default_factory=list)

    @property
    def n(self):
        return self.Z.shape[0]


class BarrierProblem:
    """Ensemble data and cached basis for evaluating the barrier at ``(y, w)``."""

    def __init__(self, ens):
        self.ens = ens
        self.n = ens.n
        self.basis = hm.gellmann_basis(self.n)
        nn = self.n * self.n
        self._bconj = self.basis.conj().reshape(nn, nn)
        t = ens.weighted_states
        self.rank_one = np.einsum("ia,ib->iab", t, t.conj())
        self.ident = nn - 1

    def Z(self, y):
        return hm.hermitize(np.tensordot(y, self.basis, axes=1))

    def identity_start(self):
        y = np.zeros(self.n * self.n)
        y[self.ident] = math.sqrt(self.n)
        return y

    def slacks(self, y):
        return self.Z(y)[None] - self.rank_one

    def slack_inverses(self, y):
        """``(Z - p_i rho_i)^-1`` for every i; raises InfeasibleIterate if any slack is not PD."""
        out = np.empty_like(self.rank_one)
        for i, s in enumerate(self.slacks(y)):
            try:
                c = scipy.linalg.cho_factor(s)
            except np.linalg.LinAlgError:
                raise InfeasibleIterate(f"slack {i} is not positive definite") from None
            out[i] = hm.hermitize(scipy.linalg.cho_solve(c, np.eye(self.n)))
        return out

    def is_feasible(self, y):
        try:
            self.slack_inverses(y)
        except InfeasibleIterate:
            return False
        return True

    def objective(self, y, w):
        total = 0.0
        for i, s in enumerate(self.slacks(y)):
            try:
                c = scipy.linalg.cho_factor(s)
            except np.linalg.LinAlgError:
                raise InfeasibleIterate(f"slack {i} is not positive definite") from None
            total += 2.0 * float(np.sum(np.log(np.abs(np.diag(c[0])))))
        return math.sqrt(self.n) * y[self.ident] - total / w

    def gradient(self, y, w, inverses=None):
        """``h_a = sqrt(n) [a is identity] - (1/w) sum_i Tr(S_i^-1 B_a)``."""
        inv = self.slack_inverses(y) if inverses is None else inverses
        m = inv.sum(axis=0)
        g = -(self._bconj @ m.ravel()).real / w
        g[self.ident] += math.sqrt(self.n)
        return g

    def hessian(self, y, w, inverses=None):
        """``H_ab = (1/w) sum_i Tr(S_i^-1 B_a S_i^-1 B_b)``."""
        inv = self.slack_inverses(y) if inverses is None else inverses
        nn = self.n * self.n
        h = np.zeros((nn, nn))
        for m in inv:
            c = (m[None] @ self.basis @ m[None]).reshape(nn, nn)
            h += (c @ self._bconj.T).real
        h = 0.5 * (h + h.T)
        return h / w


def barrier_gradient(ens, y, w):
    return BarrierProblem(ens).gradient(np.asarray(y, dtype=float), w)


def barrier_hessian(ens, y, w):
    return BarrierProblem(ens).hessian(np.asarray(y, dtype=float), w)


def _center(prob, y, w, opts, outer, trace, hess_eigs):
    """Newton minimization of the barrier objective at fixed ``w``."""
    f = prob.objective(y, w)
    for inner in range(opts.max_inner + 1):
        inv = prob.slack_inverses(y)
        g = prob.gradient(y, w, inv)
        gnorm = float(np.linalg.norm(g))
        h = prob.hessian(y, w, inv)
        try:
            cf = scipy.linalg.cho_factor(h)
        except np.linalg.LinAlgError:
            raise NonConvergence(f"barrier Hessian not positive definite (outer {outer}, inner {inner})",
                                 trace=trace) from None
        hess_eigs.append(float(np.min(np.diag(cf[0])) ** 2))
        step = -scipy.linalg.cho_solve(cf, g)
        decrement2 = float(-g @ step)
        trace.append({"outer": outer, "inner": inner, "w": w,
                      "objective": math.sqrt(prob.n) * y[prob.ident], "grad_norm": gnorm})
        if gnorm <= opts.inner_tol or decrement2 / 2.0 <= opts.inner_tol:
            return y
        if inner == opts.max_inner:
            break
        s = 1.0
        for _ in range(MAX_HALVINGS):
            y_new = y + s * step
            if prob.is_feasible(y_new):
                f_new = prob.objective(y_new, w)
                if f_new <= f - ARMIJO * s * decrement2 or decrement2 < 1e-14:
                    break
            s *= 0.5
        else:
            raise NonConvergence(
                f"line search failed after {MAX_HALVINGS} halvings (outer {outer}, inner {inner})",
                trace=trace,
            )
        y, f = y_new, f_new
    raise NonConvergence(f"inner Newton did not converge in {opts.max_inner} steps (outer {outer})",
                         trace=trace)


def solve_sdp(ens, opts=None):
    """Minimize ``Tr(Z)`` over ``Z >= p_i rho_i`` by the barrier method from ``Z = I``.

    Weights run ``w0, w0 mu, w0 mu^2, ...``; the loop ends after the centering
    step whose weight is at least ``n / eps``.
    """
    opts = opts or BarrierOptions()
    prob = BarrierProblem(ens)
    y = prob.identity_start()
    # Z = I is strictly feasible: p_i |psi_i><psi_i| has top eigenvalue p_i < 1
    if not prob.is_feasible(y):
        raise InfeasibleIterate("Z = I is not strictly feasible (some p_i >= 1?)")
    trace, hess_eigs = [], []
    w = opts.w0
    stop = ens.n / opts.eps
    outer = 0
    while True:
        outer += 1
        y = _center(prob, y, w, opts, outer, trace, hess_eigs)
        log.debug("outer %d w=%.3e Tr(Z)=%.12f", outer, w, math.sqrt(prob.n) * y[prob.ident])
        if w >= stop:
            break
        w *= opts.mu
    z = prob.Z(y)
    return SdpResult(
        Z=z,
        y=y,
        success_probability=float(np.trace(z).real),
        outer_iterations=outer,
        trace=trace,
        hessian_min_eigs=hess_eigs,
    )


def trace_csv(res):
    lines = ["outer,inner,w,objective,grad_norm"]
    lines += [
        f"{r['outer']},{r['inner']},{r['w']:.17g},{r['objective']:.17g},{r['grad_norm']:.17g}"
        for r in res.trace
    ]
    return "\n".join(lines) + "\n"
