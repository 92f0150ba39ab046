"""Taylor-series continuation of the optimal X along a straight Gram path.

Along ``G(t) = (1 - t) G0 + t G1`` the packed coordinates ``x(t)`` of the
positive definite root are analytic in ``t``. At a node ``t_l`` all Taylor
coefficients are obtained order by order: the coefficient of ``s^m`` in
``X(s)^2 - D(s) G(t_l + s) D(s) = 0`` is linear in the unknown m-th coefficient,
with the stationarity Jacobian at the node as operator, so one LU factorization
serves every order.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import hermitian as hm
from . import stationarity as st
from .errors import NodeDrift, SingularJacobian, StartingPointFailed

log = logging.getLogger(__name__)

NODE_TOL = 1e-9
POLISH_MAX = 1e-7
L_THRESHOLD = 1.5
START_MIN_EIG = 1e-12
MAX_DOUBLINGS = 8


@dataclass
class HomotopyPath:
    G0: np.ndarray
    G1: np.ndarray
    L: int = 1
    K: int = 10

    def __post_init__(self):
        self.G0 = np.asarray(self.G0, dtype=complex)
        self.G1 = np.asarray(self.G1, dtype=complex)
        if self.L < 1 or self.K < 1:
            raise ValueError(f"need L >= 1 and K >= 1, got L={self.L}, K={self.K}")
        if abs(np.trace(self.delta)) > 1e-12:
            raise ValueError("G0 and G1 must have equal trace")

    @property
    def delta(self):
        return self.G1 - self.G0

    def at(self, t):
        return (1.0 - t) * self.G0 + t * self.G1


@dataclass
class DerivStack:
    """Taylor coefficients ``coeffs[k] = x^(k)(t) / k!`` at node ``t``."""

    t: float
    coeffs: np.ndarray

    @property
    def order(self):
        return self.coeffs.shape[0] - 1

    @property
    def derivatives(self):
        fact = np.array([math.factorial(k) for k in range(self.order + 1)], dtype=float)
        return self.coeffs * fact[:, None]

    def evaluate(self, h):
        """Truncated series ``sum_k coeffs[k] h^k`` (Horner)."""
        out = self.coeffs[-1].copy()
        for c in self.coeffs[-2::-1]:
            out = out * h + c
        return out


def starting_point(g1):
    """Gram matrix ``G0`` near ``G1`` whose square root has a constant diagonal.

    The traceless diagonal Gell-Mann components of ``G1^{1/2}`` are dropped and
    their weight is moved onto the identity component, which preserves the
    Hilbert-Schmidt norm and hence ``Tr(G0) = 1``. For such ``G0`` the root is
    ``X0 = (kappa / sqrt(n)) G0^{1/2}``.

    Returns ``(G0, x0)``; raises StartingPointFailed when ``G0^{1/2}`` is not
    positive definite.
    """
    g1 = np.asarray(g1, dtype=complex)
    n = g1.shape[0]
    basis = hm.gellmann_basis(n)
    c = hm.gellmann_coeffs(hm.psd_sqrt(g1), basis)
    ident = n * n - 1
    diag_idx = [l * n + l for l in range(n - 1)]
    kappa = math.sqrt(c[ident] ** 2 + float(np.sum(c[diag_idx] ** 2)))
    c[diag_idx] = 0.0
    c[ident] = kappa
    root0 = hm.hermitize(hm.from_gellmann(c, basis))
    lam = hm.min_eig(root0)
    if lam <= START_MIN_EIG:
        raise StartingPointFailed(f"constructed G0^(1/2) has eigenvalue {lam:.3e}")
    g0 = hm.hermitize(root0 @ root0)
    x0 = hm.pack((kappa / math.sqrt(n)) * root0)
    return g0, x0


def derivative_cascade(path, t, x, K=None, node_tol=NODE_TOL, lu=None):
    """Taylor coefficients of ``x(t + s)`` up to order ``K`` at node ``t``.

    ``x`` must solve the stationarity equation at ``G(t)`` to within
    ``node_tol`` (HS norm) or NodeDrift is raised.
    """
    K = path.K if K is None else K
    x = np.asarray(x, dtype=float)
    n = path.G0.shape[0]
    gt = path.at(t)
    delta = path.delta
    res = st.residual_norm(gt, x)
    if res > node_tol:
        raise NodeDrift(f"node t={t:.6g} residual {res:.3e} > {node_tol:.1e}", residual=res)
    if lu is None:
        jac = st.jacobian(gt, x)
        lu = scipy.linalg.lu_factor(jac)
        if np.any(np.abs(np.diag(lu[0])) == 0.0):
            raise SingularJacobian(f"singular Jacobian at node t={t:.6g}")

    coeffs = np.zeros((K + 1, n * n))
    coeffs[0] = x
    dg = [x[:: n + 1].copy()]             # D_j as vectors
    xs = [hm.unpack(x, n)]                # X_j
    for m in range(1, K + 1):
        # diagonal of X_m without the unknown 2 D_0 D_m term
        p_known = np.zeros(n)
        for a in range(1, m):
            p_known += dg[a] * dg[m - a]
        known = xs[0] * p_known[None, :] + p_known[:, None] * xs[0]
        for j in range(1, m):
            known += xs[j] @ xs[m - j]
        for a in range(1, m):
            known -= (dg[a][:, None] * gt) * dg[m - a][None, :]
        for a in range(0, m):
            known -= (dg[a][:, None] * delta) * dg[m - 1 - a][None, :]
        am = -scipy.linalg.lu_solve(lu, hm.to_grid(known))
        coeffs[m] = am
        dm = am[:: n + 1].copy()
        dg.append(dm)
        xm = hm.from_grid(am, n)
        xm[np.diag_indices(n)] = 2.0 * dg[0] * dm + p_known
        xs.append(xm)
    return DerivStack(t=t, coeffs=coeffs)


def subinterval_count(n, delta):
    """``1`` when ``n^2 ||delta||_2 <= 1.5``, else ``ceil(n^2 ||delta||_2)``."""
    s = n * n * hm.hs_norm(delta)
    return 1 if s <= L_THRESHOLD else int(math.ceil(s))


@dataclass
class TaylorOptions:
    K: int = 10
    L_override: int = None
    node_tol: float = NODE_TOL
    polish_max: float = POLISH_MAX
    residual_tol: float = st.RESIDUAL_TOL
    record_trace: bool = True
    max_doublings: int = MAX_DOUBLINGS
    refine: bool = True

    def __post_init__(self):
        if self.K < 1:
            raise ValueError(f"Taylor order K must be >= 1, got {self.K}")
        if self.L_override is not None and self.L_override < 1:
            raise ValueError(f"subinterval count must be >= 1, got {self.L_override}")
        if self.max_doublings < 0:
            raise ValueError(f"max_doublings must be >= 0, got {self.max_doublings}")


def _accept_node(g, x, opts, node, t, trace):
    """Check (and if slightly off, polish once) the iterate at a node."""
    res = st.residual_norm(g, x)
    polished = False
    if opts.node_tol < res <= opts.polish_max:
        x = _one_newton_step(g, x)
        polished = True
        res_after = st.residual_norm(g, x)
    else:
        res_after = res
    if res_after > opts.polish_max or not np.isfinite(res_after):
        raise NodeDrift(
            f"node {node} (t={t:.6g}) residual {res_after:.3e}; retry with more subintervals "
            f"(e.g. --subintervals {2 * max(1, round(node / t)) if t else 2})",
            node=node,
            residual=res_after,
        )
    trace.append({"node_index": node, "t": t, "residual_norm": res, "polished": polished,
                  "residual_after": res_after})
    return x


def _one_newton_step(g, x):
    jac = st.jacobian(g, x)
    return x - scipy.linalg.solve(jac, st.residual(g, x))


def _continue(path, x, opts):
    """Step from ``t = 0`` to ``t = 1`` over ``path.L`` equal subintervals."""
    L = path.L
    res0 = st.residual_norm(path.G0, x)
    trace = [{"node_index": 0, "t": 0.0, "residual_norm": res0, "polished": False,
              "residual_after": res0}]
    for l in range(L):
        stack = derivative_cascade(path, l / L, x, K=path.K,
                                   node_tol=max(opts.node_tol, trace[-1]["residual_after"]))
        x = stack.evaluate(1.0 / L)
        t_next = (l + 1) / L
        x = _accept_node(path.at(t_next), x, opts, l + 1, t_next, trace)
    return x, trace


def solve_taylor(g1, opts=None):
    """Continue the known solution at a nearby ``G0`` to ``G1`` by Taylor steps.

    ``G0`` comes from :func:`starting_point`, falling back to ``I/n`` (whose
    root is known) when that construction fails. The returned solution's
    ``iterations`` is the number of subintervals and ``trace`` holds one record
    per node: ``node_index, t, residual_norm`` (before any polishing step).

    Every node after ``t = 0`` is accepted as is when its residual is at most
    ``node_tol``, polished by one Newton step when it is at most
    ``polish_max``, and rejected with NodeDrift otherwise. When ``L`` comes
    from :func:`subinterval_count` a NodeDrift restarts the continuation with
    ``L`` doubled, at most ``max_doublings`` times; an explicit ``L_override``
    is never changed. The unpolished residual at ``t = 1`` is kept as
    ``error_estimate``; with ``opts.refine`` the final point is then passed
    through :func:`lipmed.newton.refine`.
    """
    from .newton import refine

    opts = opts or TaylorOptions()
    g1 = np.asarray(g1, dtype=complex)
    n = g1.shape[0]
    try:
        g0, x0 = starting_point(g1)
        start = "constant-diagonal"
    except StartingPointFailed as exc:
        log.info("starting point failed (%s); falling back to I/n", exc)
        g0, x0 = np.eye(n, dtype=complex) / n, st.identity_start(n)
        start = "identity"
    L = opts.L_override or subinterval_count(n, g1 - g0)
    doublings = 0 if opts.L_override else opts.max_doublings
    tried = []
    while True:
        tried.append(L)
        try:
            x, trace = _continue(HomotopyPath(g0, g1, L=L, K=opts.K), x0, opts)
            break
        except NodeDrift as exc:
            if len(tried) > doublings:
                raise
            log.info("L=%d: %s; doubling", L, exc)
            L *= 2
    raw = trace[-1]["residual_norm"]
    refine_steps = 0
    if opts.refine:
        x, extra = refine(g1, x)
        refine_steps = len(extra)
    sol = st.extract_solution(
        g1, x, residual_tol=opts.residual_tol, method="taylor", iterations=L,
        trace=trace if opts.record_trace else [],
    )
    sol.error_estimate = raw
    sol.start = start
    sol.info.update(subintervals_tried=tried, refine_steps=refine_steps)
    return sol


def trace_csv(sol):
    lines = ["node_index,t,residual_norm"]
    lines += [f"{r['node_index']},{r['t']:.17g},{r['residual_norm']:.17g}" for r in sol.trace]
    return "\n".join(lines) + "\n"
