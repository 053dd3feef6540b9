"""Discretized minimum-effort solvers for integrator chains.

Controls are held constant over ``N`` equal steps (zero-order hold), which is
exact for the piecewise-constant optima these problems have. Each solver
returns a :class:`SolveReport`.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import lsq_linear

from .core import IntegratorChain, MovementTask, SampledSeries, ValidationError, check_duration
from .simplex import OPTIMAL, solve_bounded_lp

log = logging.getLogger(__name__)

DEFAULT_STEPS = 400


class SolverError(RuntimeError):
    """A numeric solve failed (infeasible, singular or did not converge)."""


class StructureError(ValueError):
    """A control sequence is not bang-bang within tolerance."""


@dataclass(frozen=True, eq=False)
class DiscreteSystem:
    """Zero-order-hold discretization ``x[k+1] = phi @ x[k] + gamma * u[k]``."""

    order: int
    duration: float
    steps: int
    phi: np.ndarray
    gamma: np.ndarray

    @property
    def step(self) -> float:
        return self.duration / self.steps

    @property
    def times(self) -> np.ndarray:
        """Start time of each hold interval."""
        return np.arange(self.steps) * self.step

    def input_matrix(self) -> np.ndarray:
        """``G`` with ``x[N] = phi**N @ x[0] + G @ u``; shape ``(order, steps)``."""
        n, h, N = self.order, self.step, self.steps
        m = np.arange(N - 1, -1, -1, dtype=float)  # remaining steps after step k
        G = np.empty((n, N))
        for j in range(n):
            p = n - j
            G[j] = ((m + 1) ** p - m**p) * h**p / math.factorial(p)
        return G

    def free_response(self, x0) -> np.ndarray:
        return _transition(self.order, self.duration) @ np.asarray(x0, dtype=float)

    def propagate(self, x0, u) -> np.ndarray:
        """State at every grid point, shape ``(steps + 1, order)``."""
        u = np.asarray(u, dtype=float)
        x = np.empty((u.size + 1, self.order))
        x[0] = x0
        for k, uk in enumerate(u):
            x[k + 1] = self.phi @ x[k] + self.gamma * uk
        return x


def _transition(n: int, h: float) -> np.ndarray:
    phi = np.zeros((n, n))
    for j in range(n):
        for k in range(j, n):
            phi[j, k] = h ** (k - j) / math.factorial(k - j)
    return phi


def discretize(chain: IntegratorChain, T: float, N: int) -> DiscreteSystem:
    n = chain.order
    T = check_duration(T)
    if int(N) != N or N < 2 * (n + 1):
        raise ValidationError(f"need at least {2 * (n + 1)} steps for order {n}, got {N}")
    N = int(N)
    h = T / N
    gamma = np.array([h ** (n - j) / math.factorial(n - j) for j in range(n)])
    return DiscreteSystem(n, T, N, _transition(n, h), gamma)


@dataclass(frozen=True, eq=False)
class SolveReport:
    control: SampledSeries
    bound: float
    terminal_state: np.ndarray
    target_state: np.ndarray
    iterations: int
    status: str
    method: str
    # soft-terminal decomposition of the optimum: K = K1 + K2
    k1: float | None = None
    k2: float | None = None
    extra: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status == OPTIMAL

    @property
    def terminal_error(self) -> float:
        """Squared Euclidean distance between reached and target terminal state."""
        d = self.terminal_state - self.target_state
        return float(d @ d)

    def rows(self):
        return [(k, t, u) for k, (t, u) in enumerate(zip(self.control.times, self.control.values))]

    def summary(self) -> str:
        parts = [f"method={self.method}", f"K={self.bound!r}"]
        if self.k1 is not None:
            parts += [f"K1={self.k1!r}", f"K2={self.k2!r}"]
        parts += [f"status={self.status}", f"iterations={self.iterations}"]
        return " ".join(parts)


def _rest_states(chain: IntegratorChain, task: MovementTask):
    n = chain.order
    xi = np.zeros(n)
    xf = np.zeros(n)
    xi[0], xf[0] = task.x_start, task.x_end
    return xi, xf


def _normalized_rows(n: int, T: float, N: int):
    """Input matrix on unit time scaled so every row is O(1), plus the state scaling.

    With ``tau = t / T`` the j-th state scales by ``T**j`` and the control by
    ``T**n``; multiplying rows by ``N`` undoes the step-size factor.
    """
    G = discretize(IntegratorChain(n), 1.0, N).input_matrix() * N
    state_scale = np.array([T**j for j in range(n)]) * N
    return G, state_scale


def min_linf_control(n: int, T: float, N: int, target) -> tuple[np.ndarray, float, int, str]:
    """Smallest-peak control sequence reaching ``target`` (= x[N] - phi**N x[0]).

    Solved as ``max s  s.t.  G v = s * target, |v| <= 1``; the control is
    then ``v / s`` and its peak ``1 / s``. Returns ``(u, K, iterations, status)``.
    """
    target = np.asarray(target, dtype=float)
    if not np.any(target):
        return np.zeros(N), 0.0, 0, OPTIMAL
    G, scale = _normalized_rows(n, T, N)
    rhs = target * scale
    norm = np.abs(rhs).max()
    rhs = rhs / norm
    A = np.hstack([G, -rhs[:, None]])
    c = np.zeros(N + 1)
    c[-1] = -1.0
    lo = np.concatenate([-np.ones(N), [0.0]])
    hi = np.concatenate([np.ones(N), [np.inf]])
    res = solve_bounded_lp(c, A, np.zeros(n), lo, hi)
    s = res.x[-1]
    if res.status != OPTIMAL or s <= 0:
        return np.zeros(N), math.inf, res.iterations, res.status
    u = res.x[:N] * (norm / s) / T**n
    return u, norm / (s * T**n), res.iterations, OPTIMAL


def solve_min_effort_linf(chain: IntegratorChain, task: MovementTask, N: int = DEFAULT_STEPS) -> SolveReport:
    """Minimize the peak control magnitude subject to reaching the target at rest."""
    system = discretize(chain, task.duration, N)
    xi, xf = _rest_states(chain, task)
    target = xf - system.free_response(xi)
    u, K, iters, status = min_linf_control(chain.order, task.duration, N, target)
    if status != OPTIMAL:
        raise SolverError(f"L-infinity LP failed: {status}")
    return _report(system, xi, xf, u, K, iters, status, "linf")


def solve_min_effort_l2(chain: IntegratorChain, task: MovementTask, N: int = DEFAULT_STEPS) -> SolveReport:
    """Minimum Euclidean-norm control satisfying the terminal equality."""
    n = chain.order
    system = discretize(chain, task.duration, N)
    xi, xf = _rest_states(chain, task)
    target = xf - system.free_response(xi)
    G, scale = _normalized_rows(n, task.duration, N)
    gram = G @ G.T
    if np.linalg.cond(gram) > 1e14:
        raise SolverError("reachability Gram matrix is singular")
    u_tau = G.T @ np.linalg.solve(gram, target * scale)
    u = u_tau / task.duration**n
    return _report(system, xi, xf, u, float(np.abs(u).max(initial=0.0)), 1, OPTIMAL, "l2")


def _report(system, xi, xf, u, K, iters, status, method, **kw) -> SolveReport:
    G = system.input_matrix()
    terminal = system.free_response(xi) + G @ u
    return SolveReport(SampledSeries(system.times, u), float(K), terminal, np.asarray(xf, float),
                       int(iters), status, method, **kw)


# box-constrained least squares ---------------------------------------------


def largest_eigenvalue(M: np.ndarray, iters: int = 1000, rtol: float = 1e-12) -> float:
    """Power iteration for the dominant eigenvalue of a symmetric PSD matrix."""
    v = np.ones(M.shape[0]) / math.sqrt(M.shape[0])
    lam = 0.0
    for _ in range(iters):
        w = M @ v
        nrm = np.linalg.norm(w)
        if nrm == 0:
            return 0.0
        v = w / nrm
        new = float(v @ M @ v)
        if abs(new - lam) <= rtol * abs(new):
            return new
        lam = new
    return lam


def projected_gradient(G, b, K, u0=None, max_iter: int = 100_000, rtol: float = 1e-10):
    """``min |G u - b|^2`` over ``|u| <= K`` by projected gradient with step ``1/L``.

    Returns ``(u, objective, iterations, converged)``.
    """
    L = 2.0 * largest_eigenvalue(G @ G.T)
    u = np.zeros(G.shape[1]) if u0 is None else np.clip(u0, -K, K)
    if L == 0:
        r = G @ u - b
        return u, float(r @ r), 0, True
    r = G @ u - b
    f = float(r @ r)
    for it in range(1, max_iter + 1):
        u = np.clip(u - (2.0 * (G.T @ r)) / L, -K, K)
        r = G @ u - b
        fn = float(r @ r)
        if abs(f - fn) <= rtol * max(f, 1e-300):
            return u, fn, it, True
        f = fn
    return u, f, max_iter, False


def box_least_squares(G, b, K, method: str = "bvls"):
    """``phi(K) = min |G u - b|^2`` over ``|u| <= K``; returns ``(u, phi, iterations, converged)``."""
    if K <= 0:
        u = np.zeros(G.shape[1])
        return u, float(b @ b), 0, True
    if method == "pg":
        return projected_gradient(G, b, K)
    if method != "bvls":
        raise ValueError(f"unknown inner method {method!r}")
    res = lsq_linear(G, b, bounds=(-K, K), method="bvls", tol=1e-14)
    u = np.clip(res.x, -K, K)
    r = G @ u - b
    return u, float(r @ r), int(res.nit), res.status >= 0


GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def _golden_section(f, a, b, xtol, max_iter=200):
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a <= xtol:
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    return (c, fc) if fc <= fd else (d, fd)


def solve_soft_terminal(chain: IntegratorChain, x_i, x_f, w_effort: float, T: float,
                        N: int = DEFAULT_STEPS, inner: str = "bvls") -> SolveReport:
    """Minimize ``|x(T) - x_f|^2 + w_effort * max|u|`` from the fixed start ``x_i``.

    Outer golden-section search over the bound K on ``[0, K_hard]`` where
    ``K_hard`` is the smallest bound that reaches ``x_f`` exactly; the inner
    problem at fixed K is box-constrained least squares.
    """
    n = chain.order
    w = float(w_effort)
    if not w >= 0 or not math.isfinite(w):
        raise ValueError(f"w_effort must be finite and >= 0, got {w_effort}")
    system = discretize(chain, T, N)
    xi = np.asarray(x_i, dtype=float).reshape(n)
    xf = np.asarray(x_f, dtype=float).reshape(n)
    target = xf - system.free_response(xi)
    G = system.input_matrix()

    u_hard, K_hard, lp_iters, lp_status = min_linf_control(n, T, N, target)
    if lp_status != OPTIMAL:
        raise SolverError(f"could not find the hard-constraint bound: {lp_status}")
    r = G @ u_hard - target
    phi_hard = float(r @ r)

    evaluations = {}
    total_iters = [lp_iters]
    converged = [True]

    def outer(K):
        if K not in evaluations:
            u, phi, it, ok = box_least_squares(G, target, K, inner)
            total_iters[0] += it
            converged[0] &= ok
            evaluations[K] = (u, phi)
        return evaluations[K][1] + w * K

    candidates = [(phi_hard + w * K_hard, K_hard, u_hard, phi_hard)]
    zero_phi = float(target @ target)
    candidates.append((zero_phi, 0.0, np.zeros(N), zero_phi))
    if K_hard > 0:
        K_best, _ = _golden_section(outer, 0.0, K_hard, xtol=1e-10 * K_hard)
        u_best, phi_best = evaluations[K_best]
        candidates.append((phi_best + w * K_best, K_best, u_best, phi_best))
    # ties resolve toward the smaller bound
    f_opt, K_opt, u_opt, phi_opt = min(candidates, key=lambda c: (c[0], c[1]))
    status = OPTIMAL if converged[0] else "inner_not_converged"
    if not converged[0]:
        log.warning("inner box least squares hit its iteration cap; returning best iterate")
    return _report(system, xi, xf, u_opt, K_opt, total_iters[0], status, f"soft-{inner}",
                   k1=phi_opt, k2=w * K_opt, extra={"objective": f_opt, "K_hard": K_hard})


def phi_curve(chain: IntegratorChain, x_i, x_f, T: float, N: int, bounds, inner: str = "bvls") -> np.ndarray:
    """Terminal-error function ``phi(K)`` evaluated at each bound in ``bounds``."""
    system = discretize(chain, T, N)
    target = np.asarray(x_f, float) - system.free_response(np.asarray(x_i, float))
    G = system.input_matrix()
    return np.array([box_least_squares(G, target, K, inner)[1] for K in bounds])


# structure checks ----------------------------------------------------------


def count_switches(control, K: float, tol: float = 1e-3) -> int:
    """Number of switch instants of a sampled bang-bang control, entry and exit included.

    Samples with ``|u| >= (1 - tol) K`` are classified by sign; runs of equal
    sign merge into blocks. Up to two dead-zone samples per interior switch
    are tolerated.
    """
    if not K > 0:
        raise ValueError(f"bound must be positive, got {K}")
    u = np.asarray(control.values if isinstance(control, SampledSeries) else control, dtype=float)
    saturated = np.abs(u) >= (1.0 - tol) * K
    signs = np.sign(u[saturated])
    if signs.size == 0:
        raise StructureError("no sample reaches the bound")
    boundaries = int(np.count_nonzero(signs[1:] != signs[:-1]))
    dead = int(np.count_nonzero(~saturated))
    if dead > 2 * boundaries:
        raise StructureError(
            f"{dead} samples lie inside the dead zone, at most {2 * boundaries} allowed"
        )
    return boundaries + 2


def sign_change_times(control: SampledSeries) -> np.ndarray:
    """Grid times at which a held control changes sign (exact zeros skipped)."""
    t = np.asarray(control.times)
    u = np.asarray(control.values)
    nz = np.flatnonzero(u != 0)
    s = np.sign(u[nz])
    flips = np.flatnonzero(s[1:] != s[:-1])
    return t[nz[flips + 1]]
