"""Neural-tangent-kernel oracles: empirical kernels, kernel regression,
and the closed-form infinite-frequency limit of the composed feature kernel.
"""

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from . import models
from .errors import ContractError, SolverError

RIDGE_COND_LIMIT = 1e12


@dataclass
class KernelMatrix:
    """An N x N kernel over `points` plus a row function for fresh queries."""
    points: np.ndarray           # (N, d)
    matrix: np.ndarray           # (N, N)
    row_fn: object               # callable(query) -> (N,) kernel row
    provenance: str = "unknown"
    stderr: np.ndarray | None = None


def _param_gradient(spec, params, x):
    """Flattened d(output)/d(theta) at a single input point."""
    out = models.forward(spec, params, x[None, :])
    ad.backward(ad.tsum(out))
    return np.concatenate([p.grad.ravel() for p in params.trainables])


def empirical_ntk(spec, points, samples, seed):
    """Monte Carlo estimate of E<dphi(x_i)/dtheta, dphi(x_j)/dtheta>.

    Averages over `samples` fresh initializations; per-sample seeds are
    spawned deterministically from the master seed.
    """
    if samples < 1:
        raise ContractError("samples must be >= 1")
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    n = len(points)
    acc = np.zeros((n, n))
    acc2 = np.zeros((n, n))
    seeds = np.random.SeedSequence(seed).generate_state(samples)
    for s in range(samples):
        params = models.init_network(spec, int(seeds[s]))
        g = np.stack([_param_gradient(spec, params, x) for x in points])
        k = g @ g.T
        acc += k
        acc2 += k * k
    mean = acc / samples
    var = np.maximum(acc2 / samples - mean * mean, 0.0)
    stderr = np.sqrt(var / samples)

    def row_fn(query):
        raise ContractError("empirical kernel has no closed row function; "
                            "re-estimate with the query included")

    return KernelMatrix(points, mean, row_fn, provenance=f"empirical(samples={samples})",
                        stderr=stderr)


def composed_kernel(B, h, xi, xj):
    """h evaluated at the mean cosine feature (1/D) sum cos(B(xi - xj))."""
    B = np.asarray(B, dtype=np.float64)
    delta = np.asarray(xi, dtype=np.float64) - np.asarray(xj, dtype=np.float64)
    inner = float(np.mean(np.cos(B @ delta)))
    return float(h(inner))


def composed_kernel_matrix(points, B, h):
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    B = np.asarray(B, dtype=np.float64)
    proj = points @ B.T     # (N, D)
    # cos(B(x_i - x_j)) summed over rows of B, via the angle difference
    c, s = np.cos(proj), np.sin(proj)
    inner = (c @ c.T + s @ s.T) / B.shape[0]
    k = np.vectorize(h)(inner)

    def row_fn(query):
        q = np.asarray(query, dtype=np.float64)
        pq = B @ q
        row = (c @ np.cos(pq) + s @ np.sin(pq)) / B.shape[0]
        return np.array([h(v) for v in row])

    return KernelMatrix(points, np.asarray(k, dtype=np.float64), row_fn,
                        provenance="composed")


def limit_kernel_matrix(points, delta, h):
    """The D -> infinity composed kernel: h(exp(-delta^2 |xi - xj|^2 / 2)).

    This is the Gaussian limit of the mean cosine feature for B with i.i.d.
    N(0, delta^2) entries; for huge delta the off-diagonal inner underflows
    to exactly 0 and the matrix degenerates to the closed form.
    """
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if delta <= 0:
        raise ContractError("delta must be positive")

    def inner_of(sq_dists):
        return np.exp(-0.5 * delta * delta * sq_dists)

    sq = np.sum((points[:, None, :] - points[None, :, :]) ** 2, axis=2)
    k = np.vectorize(h)(inner_of(sq))

    def row_fn(query):
        q = np.asarray(query, dtype=np.float64)
        d2 = np.sum((points - q) ** 2, axis=1)
        return np.array([h(v) for v in inner_of(d2)])

    return KernelMatrix(points, np.asarray(k, dtype=np.float64), row_fn,
                        provenance=f"limit(delta={delta})")


def closed_form_kernel(points, h0, h1):
    """The infinite-frequency limit kernel: h1 on the diagonal, h0 elsewhere."""
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    n = len(points)
    k = np.full((n, n), h0)
    np.fill_diagonal(k, h1)

    def row_fn(query):
        q = np.asarray(query, dtype=np.float64)
        row = np.full(n, h0)
        for i, p in enumerate(points):
            if np.array_equal(p, q):
                row[i] = h1
        return row

    return KernelMatrix(points, k, row_fn, provenance=f"closed_form({h0},{h1})")


def _solve_weights(km, z):
    k = km.matrix
    n = len(k)
    cond = np.linalg.cond(k)
    if cond > RIDGE_COND_LIMIT or not np.isfinite(cond):
        k = k + (1e-8 * np.trace(k) / n) * np.eye(n)
        cond = np.linalg.cond(k)
        if cond > 1e15 or not np.isfinite(cond):
            raise SolverError("kernel matrix is numerically singular", cond)
    return np.linalg.solve(k, z)


def kernel_regression(km, z, query):
    """Kernel-weighted interpolation sum_i (K^-1 z)_i k(x_i, query)."""
    z = np.asarray(z, dtype=np.float64)
    alpha = _solve_weights(km, z)
    return float(km.row_fn(query) @ alpha)


def kernel_regression_batch(km, z, queries):
    z = np.asarray(z, dtype=np.float64)
    alpha = _solve_weights(km, z)
    return np.array([km.row_fn(q) @ alpha for q in np.atleast_2d(queries)])


def corollary1_prediction(h0, h1, z, on_training=None):
    """Infinite-frequency limit prediction of the composed-kernel regression.

    Training queries interpolate exactly; off-training queries collapse to
    the weighted average h0 * sum(z) / ((N-1) h0 + h1).
    """
    if h1 == h0 or h1 == 0:
        raise ContractError("degenerate limit kernel: need h1 != h0 and h1 != 0")
    z = np.asarray(z, dtype=np.float64)
    n = len(z)
    if on_training is not None:
        return float(z[on_training])
    return float(h0 * z.sum() / ((n - 1) * h0 + h1))


def fit_h(spec, rho_grid=None, samples=200, seed=0):
    """Empirically fit the scalar kernel map h(rho) for unit-norm inputs.

    Embeds pairs of unit vectors with inner product rho in the network's
    input space and Monte Carlo estimates their NTK entry; returns a linear
    interpolator over the grid.
    """
    if rho_grid is None:
        rho_grid = np.linspace(-1.0, 1.0, 21)
    rho_grid = np.asarray(rho_grid, dtype=np.float64)
    d = spec.net_in_dim
    if d < 2:
        raise ContractError("fitting h needs input dimension >= 2")
    vals = np.empty_like(rho_grid)
    for i, rho in enumerate(rho_grid):
        u = np.zeros(d)
        v = np.zeros(d)
        u[0] = 1.0
        v[0] = rho
        v[1] = np.sqrt(max(0.0, 1.0 - rho * rho))
        km = empirical_ntk(spec, np.stack([u, v]), samples, seed + i)
        vals[i] = km.matrix[0, 1]

    def h(rho):
        return float(np.interp(rho, rho_grid, vals))

    return h
