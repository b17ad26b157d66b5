"""Shared test oracles: independent implementations that tests check against."""

import numpy as np

from ddrs.manifold import project_stiefel


def random_stiefel_mat(rng, d, r):
    return project_stiefel(rng.standard_normal((d, r))).mat


def random_orthogonal(rng, r):
    q, _ = np.linalg.qr(rng.standard_normal((r, r)))
    return q


def centralized_drs(problem, s0, x0, z0, alpha, iters):
    """Direct single-agent splitting recursion; trajectory of (s, x, z)."""
    s, x, z = s0.copy(), x0.copy(), z0.copy()
    traj = []
    for _ in range(iters):
        s = s + z - x
        x = problem.prox(alpha, s)
        y = 2.0 * x - s
        z = project_stiefel(y).mat
        traj.append((s.copy(), x.copy(), z.copy()))
    return traj


def global_average_drs(problem, s0, x0, z0, alpha, iters):
    """
    Stacked splitting recursion with an exact consensus projection:
    the z-update replicates the manifold projection of the mean of y.
    """
    s, x, z = s0.copy(), x0.copy(), z0.copy()
    n = len(problem)
    traj = []
    for _ in range(iters):
        s = s + z - x
        x = np.stack([problem[i].prox(alpha, s[i]) for i in range(n)])
        y = 2.0 * x - s
        ybar = project_stiefel(y.mean(axis=0)).mat
        z = np.stack([ybar] * n)
        traj.append((s.copy(), x.copy(), z.copy()))
    return traj


def projected_gradient_descent(problem, x0, alpha, iters):
    """Single-agent Riemannian gradient descent with polar retraction."""
    from ddrs.manifold import tangent_project, StiefelPoint

    x = x0.copy()
    traj = []
    for _ in range(iters):
        g = tangent_project(StiefelPoint(x), problem.egrad(x)).dir
        x = project_stiefel(x - alpha * g).mat
        traj.append(x.copy())
    return traj


def prox_by_gradient_descent(inst, alpha, s, tol=1e-12, max_iters=200000):
    """
    Minimize f(y) + ||y - s||^2 / (2 alpha) by plain gradient descent.

    The objective is strongly convex (curvature at least 1/alpha), so this
    converges from any start; used as an independent check of the linear
    solve inside the prox.
    """
    lip = inst.smoothness() + 1.0 / alpha
    step = 1.0 / lip
    y = s.copy()
    for _ in range(max_iters):
        g = inst.egrad(y) + (y - s) / alpha
        y_new = y - step * g
        if np.linalg.norm(y_new - y) <= tol:
            return y_new
        y = y_new
    return y


def finite_difference_egrad(fn, x, h=1e-6):
    """Central finite differences of a matrix-input scalar function."""
    g = np.zeros_like(x)
    for idx in np.ndindex(*x.shape):
        e = np.zeros_like(x)
        e[idx] = h
        g[idx] = (fn(x + e) - fn(x - e)) / (2.0 * h)
    return g


def procrustes_min_by_sampling(rng, x, xstar, samples=10000):
    """Brute-force min over sampled orthogonal Q of ||x Q - xstar||."""
    r = x.shape[1]
    best = np.inf
    for _ in range(samples):
        q = random_orthogonal(rng, r)
        best = min(best, float(np.linalg.norm(x @ q - xstar)))
    return best


def procrustes_min_by_rotation_sweep(x, xstar, grid=200001):
    """
    Exact 1-D sweep for r = 2: orthogonal 2x2 matrices are rotations and
    reflections of a single angle.
    """
    thetas = np.linspace(0.0, 2.0 * np.pi, grid)
    best = np.inf
    for theta in thetas:
        c, s = np.cos(theta), np.sin(theta)
        for q in (np.array([[c, -s], [s, c]]), np.array([[c, s], [s, -c]])):
            best = min(best, float(np.linalg.norm(x @ q - xstar)))
    return best


def dense_tv_bound_holds(W, t_max, tol=0.0):
    """
    Check max_i sum_j |(W^t)_ij - 1/n| <= sqrt(n) * sigma2^t by forming the
    dense powers (small n only).
    """
    M = W.W
    n = M.shape[0]
    P = np.eye(n)
    for t in range(1, t_max + 1):
        P = P @ M
        lhs = np.abs(P - 1.0 / n).sum(axis=1).max()
        rhs = np.sqrt(n) * W.sigma2 ** t
        if lhs > rhs + tol:
            return False, t, lhs, rhs
    return True, None, None, None


def analytic_dpca_optimum(dataset):
    """
    Optimal consensus value and basis from the assembled covariance.

    Independent of the solver path: eigendecomposition of sum_i A_i^T A_i.
    """
    gram = sum(b.T @ b for b in dataset.blocks)
    evals, evecs = np.linalg.eigh(gram)
    r = dataset.ground_truth.shape[1] if dataset.ground_truth is not None else None
    if r is None:
        raise ValueError("dataset has no target rank")
    shifts = [float(np.linalg.eigvalsh(b.T @ b)[-1]) for b in dataset.blocks]
    top = evals[::-1][:r]
    fstar = -0.5 * float(np.sum(top)) + 0.5 * r * float(np.sum(shifts))
    vstar = evecs[:, ::-1][:, :r]
    return fstar, vstar
