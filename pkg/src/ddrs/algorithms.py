"""
Optimization engines.

The decentralized Douglas-Rachford iteration with gradient tracking (exact
prox: ``ddrs_step``; certified inexact prox: ``iddrs_step``), a minimal
decentralized Riemannian gradient-tracking baseline, the geometric
inexactness schedule, and the theory-driven parameter advisor.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .manifold import (
    RankDeficientError,
    StiefelPoint,
    _as_matrix,
    _tangent_dir,
    project_stiefel,
)
from .network import mix


class ConfigurationWarning(UserWarning):
    """A run is outside the certified parameter regime; it still proceeds."""


@dataclass
class AgentStack:
    """
    Full per-agent splitting state: arrays of shape (n, d, r).

    ``s`` is the splitting variable, ``x`` the prox output, ``y = 2x - s``,
    ``z`` the mixed-and-projected consensus estimate (always on the
    manifold), and ``d`` the tracker whose block mean equals
    ``mean(x) - mean(s)`` exactly.  ``mu_sq`` holds the realized squared
    prox residuals of the last inexact step, when there was one.
    """

    s: np.ndarray
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    d: np.ndarray
    k: int = 0
    mu_sq: np.ndarray = None

    @property
    def n(self):
        return self.s.shape[0]


@dataclass(frozen=True)
class SolverParams:
    """Step size, communication rounds per iteration, and run limits."""

    alpha: float
    t: int = 1
    max_iters: int = 500
    eps0: float = 1e-6
    rho: float = 0.9

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("step size must be positive, got %r" % (self.alpha,))
        if self.t < 1:
            raise ValueError("communication rounds must be >= 1, got %d" % self.t)
        if self.eps0 < 0:
            raise ValueError("eps0 must be >= 0, got %r" % (self.eps0,))
        if not (0.0 < self.rho < 1.0):
            raise ValueError("rho must lie in (0, 1), got %r" % (self.rho,))


def epsilon_schedule(eps0, rho, k):
    """Geometric inexactness schedule ``eps0 * rho**k`` (summable)."""
    return eps0 * rho ** k


# Tube radius of the Stiefel manifold; fixes delta1 = gamma/4 and
# delta2 = delta1/12 used in the certified-regime checks.
_GAMMA = 0.5
_DELTA1 = _GAMMA / 4.0
_DELTA2 = _DELTA1 / 12.0


def _stack_blocks(x0, n_expected=None):
    blocks = [StiefelPoint(_as_matrix(b)).mat for b in x0]
    if n_expected is not None and len(blocks) != n_expected:
        raise ValueError(
            "got %d initial blocks for %d agents" % (len(blocks), n_expected)
        )
    return np.stack(blocks)


def ddrs_init(problem, W, params, x0):
    """
    Build the initial stack from on-manifold per-agent points.

    Sets ``s = y = z = x`` and a zero tracker.  The consensus quality of the
    start is checked against the certified neighborhood and a
    ConfigurationWarning (not an error) is emitted when it is too spread
    out.
    """
    x = _stack_blocks(x0, W.n)
    if len(problem) != W.n:
        raise ValueError(
            "got %d local objectives for %d agents" % (len(problem), W.n)
        )
    try:
        xbar = project_stiefel(x.mean(axis=0)).mat
        spread = float(np.linalg.norm(x.mean(axis=0) - xbar))
    except RankDeficientError:
        spread = math.inf
    if spread > _DELTA1:
        warnings.warn(
            "initial consensus error %.3e exceeds the certified bound %.3e"
            % (spread, _DELTA1),
            ConfigurationWarning,
        )
    return AgentStack(s=x.copy(), x=x.copy(), y=x.copy(), z=x.copy(),
                      d=np.zeros_like(x), k=0)


def _advance(stack, problem, W, params, prox_blocks):
    """Shared splitting step; ``prox_blocks(s_new) -> (x_new, mu_sq)``."""
    s_new = stack.s + stack.z - stack.x
    x_new, mu_sq = prox_blocks(s_new)
    y_new = 2.0 * x_new - s_new
    d_new = mix(W, params.t, stack.d) + (x_new - s_new) - (stack.x - stack.s)
    mixed_x = mix(W, params.t, x_new)
    z_new = np.stack(
        [project_stiefel(mixed_x[i] + d_new[i]).mat for i in range(stack.n)]
    )
    return AgentStack(s=s_new, x=x_new, y=y_new, z=z_new, d=d_new,
                      k=stack.k + 1, mu_sq=mu_sq)


def ddrs_step(stack, problem, W, params):
    """
    One synchronous exact-prox splitting iteration.

    Per agent: ``s += z - x``; ``x = prox(alpha, s)``; ``y = 2x - s``; the
    tracker is gossip-mixed over t rounds and corrected by the local
    increment of ``x - s``; finally ``z`` projects the mixed iterates plus
    tracker back onto the manifold.  A RankDeficientError from that
    projection means the iterates left the certified tube (step size or t
    misconfigured).
    """

    def prox_blocks(s_new):
        x_new = np.stack(
            [problem[i].prox(params.alpha, s_new[i]) for i in range(stack.n)]
        )
        return x_new, None

    return _advance(stack, problem, W, params, prox_blocks)


def iddrs_step(stack, problem, W, params, k):
    """
    One splitting iteration with certified-inexact prox.

    The prox tolerance is ``epsilon_schedule(params.eps0, params.rho, k)``;
    each agent's realized squared residual is recorded in ``mu_sq``.
    """
    eps_k = epsilon_schedule(params.eps0, params.rho, k)
    if k == 0 and params.eps0 >= _DELTA2:
        warnings.warn(
            "eps0 = %.3e is not below delta2 = %.3e; the inexactness "
            "assumption is violated" % (params.eps0, _DELTA2),
            ConfigurationWarning,
        )

    def prox_blocks(s_new):
        xs, mus = [], []
        for i in range(stack.n):
            xi, mui = problem[i].prox_inexact(params.alpha, s_new[i], eps_k)
            xs.append(xi)
            mus.append(float(np.vdot(mui, mui)))
        return np.stack(xs), np.asarray(mus)

    return _advance(stack, problem, W, params, prox_blocks)


@dataclass
class BaselineStack:
    """State of the gradient-tracking baseline: iterates, tracker, gradients."""

    x: np.ndarray
    v: np.ndarray
    grad: np.ndarray
    k: int = 0

    @property
    def n(self):
        return self.x.shape[0]


def baseline_gt_init(problem, W, params, x0):
    """Tracker starts at the local gradients so its mean tracks theirs."""
    x = _stack_blocks(x0, W.n)
    grad = np.stack([problem[i].egrad(x[i]) for i in range(len(problem))])
    return BaselineStack(x=x, v=grad.copy(), grad=grad, k=0)


def baseline_gt_step(stack, problem, W, params):
    """
    One step of a deliberately minimal Riemannian gradient-tracking scheme.

    ``x_i`` moves along the tangent projection of the tracker from the mixed
    iterate and is projected back; the tracker is then mixed and refreshed
    with the local gradient increment.  The block mean of the tracker equals
    the mean gradient at every iteration.  This is a plumbing baseline, not
    a faithful reimplementation of any published method.
    """
    mixed_x = mix(W, params.t, stack.x)
    x_new = np.stack(
        [
            project_stiefel(
                mixed_x[i] - params.alpha * _tangent_dir(stack.x[i], stack.v[i])
            ).mat
            for i in range(stack.n)
        ]
    )
    grad_new = np.stack([problem[i].egrad(x_new[i]) for i in range(stack.n)])
    v_new = mix(W, params.t, stack.v) + grad_new - stack.grad
    return BaselineStack(x=x_new, v=v_new, grad=grad_new, k=stack.k + 1)


@dataclass(frozen=True)
class ParameterAdvice:
    """
    Certified-regime constants for a given problem and network.

    ``t_clauses`` spells out each lower bound whose maximum is ``t_min``.
    ``c2``, ``c4_shape`` and ``c5_shape`` need initial-state norms, so they
    are None unless a stack was provided.  ``notes`` records where the
    implemented formulas deviate from their stated form.
    """

    delta1: float
    delta2: float
    delta3: float
    alpha_max: float
    t_min: int
    t_clauses: tuple
    c1: float
    c2: float
    c3: float
    c4_shape: float
    c5_shape: float
    notes: tuple = ()


def _ceil_log(sigma2, arg):
    """Smallest integer t with sigma2**t <= arg, for 0 < arg < 1."""
    if sigma2 <= 0.0:
        return 1
    return max(1, math.ceil(math.log(arg) / math.log(sigma2)))


def advise_parameters(L, gamma, zeta, sigma2, n, grad0_norm,
                      initial_state=None, eps0=1e-6, rho=0.9):
    """
    Evaluate the certified step-size bound, round count, and rate constants.

    Parameters
    ----------
    L : float
        Gradient Lipschitz constant of the worst local objective.
    gamma, zeta : float
        Tube radius and diameter of the manifold.
    sigma2 : float
        Second-largest singular value of the mixing matrix, in [0, 1).
    n : int
        Number of agents.
    grad0_norm : float
        Norm of the stacked Euclidean gradient at zero.
    initial_state : AgentStack, optional
        Supplies the initial-state norms entering ``c2``/``c4_shape``.
    eps0, rho : float
        Inexactness schedule; its sum ``eps0 / (1 - rho)`` enters the
        inexact-rate constants.

    Notes
    -----
    Two stated bounds are implemented in corrected form and flagged in
    ``notes``: the round-count clause is used with the argument orientation
    that makes the logarithm positive, and the run-dependent sum of
    tolerances is replaced by its limit.
    """
    if not (0.0 <= sigma2 < 1.0):
        raise ValueError("sigma2 must lie in [0, 1), got %r" % (sigma2,))
    if not L > 0:
        raise ValueError("L must be positive, got %r" % (L,))
    delta1 = gamma / 4.0
    delta2 = delta1 / 12.0
    delta3 = 2.0 * delta2 + zeta
    notes = []

    sqrt_n = math.sqrt(n)
    clause_track = _ceil_log(sigma2, 1.0 / (4.0 * sqrt_n))
    # Stated as log of delta3/(delta2 sqrt(n)) > 1, which would be negative;
    # the contraction actually needed is sigma2^t <= delta2/(sqrt(n) delta3).
    clause_tube = _ceil_log(sigma2, delta2 / (sqrt_n * delta3))
    notes.append("round-count clause uses delta2/(sqrt(n)*delta3) as the "
                 "log argument (stated form is its reciprocal)")
    clause_rate = _ceil_log(sigma2, 1.0 / (12.0 * sqrt_n))
    # Inexact-rate clause: doubling the log is the same as squaring the
    # argument, already oriented below one.
    clause_inexact = _ceil_log(sigma2, 1.0 / n ** 2)
    t_clauses = (clause_track, clause_tube, clause_rate, clause_inexact)
    t_min = max(t_clauses)

    sig_t = sigma2 ** t_min
    c1 = 32.0 / (1.0 - 4.0 * sig_t) ** 2 * (4.0 * sig_t + 4.0 / (1.0 - sig_t) ** 2)
    alpha_curv = 1.0 / (2.0 * (1.0 + 2.0 * L + c1 * L ** 2))
    alpha_tube = delta2 / (3.0 * grad0_norm + 2.0 * L * (zeta + delta2))
    alpha_max = min(alpha_curv, alpha_tube)

    big_d = eps0 / (1.0 - rho)
    notes.append("c3/c4_shape use the schedule limit %.6g in place of the "
                 "run-dependent partial sums" % big_d)
    c3 = (128.0 / (1.0 - 4.0 * sig_t) ** 2
          * (sig_t ** 2 * alpha_max ** 2 * L ** 2
             + alpha_max ** 2 * L ** 2 / (1.0 - sig_t) ** 2)
          * big_d)

    c2 = c4_shape = c5_shape = None
    if initial_state is not None:
        st = initial_state
        zy_sq = _consensus_gap_sq(st)
        dmean = st.d - (st.x.mean(axis=0) - st.s.mean(axis=0))
        dd_sq = float(np.vdot(dmean, dmean))
        c2 = (4.0 / (1.0 - 16.0 * sig_t ** 2) * zy_sq
              + 128.0 / ((1.0 - 4.0 * sig_t) ** 2 * (1.0 - sig_t ** 2)) * dd_sq)
        c4_shape = ((512.0 * n + 128.0 * n * (1.0 - sig_t) ** 2)
                    / ((1.0 - 4.0 * sig_t) ** 2 * (1.0 - sig_t) ** 2) * big_d
                    + 128.0 / ((1.0 - 4.0 * sig_t) ** 2 * (1.0 - sig_t ** 2)) * dd_sq
                    + 4.0 / (1.0 - 16.0 * sig_t ** 2) * zy_sq)
        c5_shape = c4_shape + 2.0 * sqrt_n * big_d

    return ParameterAdvice(
        delta1=delta1, delta2=delta2, delta3=delta3,
        alpha_max=alpha_max, t_min=t_min, t_clauses=t_clauses,
        c1=c1, c2=c2, c3=c3, c4_shape=c4_shape, c5_shape=c5_shape,
        notes=tuple(notes),
    )


def _consensus_gap_sq(stack):
    """Squared distance from z to the replicated projected mean of y."""
    yhat = stack.y.mean(axis=0)
    ybar = project_stiefel(yhat).mat
    diff = stack.z - ybar
    return float(np.vdot(diff, diff))
