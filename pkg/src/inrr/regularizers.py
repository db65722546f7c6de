"""Penalty family: Dirichlet energy with learned adjacency, TV, and L2.

The learned-adjacency penalties come in two flavors: a free trainable
adjacency-source matrix, and one generated by a tiny coordinate network,
which smooths the resulting Laplacian implicitly.  Both share the same
normalized elementwise-exponential Gram construction.
"""

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from . import models
from .errors import ContractError, ShapeError
from .linalg import check_finite

EXP_CAP = 30.0  # Gram entries are clamped here before exponentiation


# ---------------------------------------------------------------------------
# adjacency sources

class FreeSource:
    """Freely trainable r x m' adjacency-source matrix."""

    def __init__(self, matrix):
        self.matrix = matrix if isinstance(matrix, ad.Tensor) else ad.param(matrix)
        self.size = self.matrix.value.shape[1]

    def gram_source(self):
        return self.matrix

    @property
    def trainables(self):
        return [self.matrix]

    @staticmethod
    def random(r, size, seed, scale=1e-1):
        rng = np.random.default_rng(seed)
        return FreeSource(rng.normal(0.0, scale, size=(r, size)))


class TinyInrSource:
    """Adjacency source generated by a small 1-D sine network g: R -> R^r."""

    def __init__(self, spec, params, size):
        if spec.in_dim != 1:
            raise ContractError("tiny network must take a scalar coordinate")
        if size < 2:
            raise ContractError("adjacency size must be >= 2")
        self.spec = spec
        self.params = params
        self.size = size
        self._u = (np.arange(1, size + 1, dtype=np.float64) / size)[:, None]

    def gram_source(self):
        out = models.forward(self.spec, self.params, self._u)   # (m', r)
        return out.T

    @property
    def trainables(self):
        return self.params.trainables

    @staticmethod
    def default(size, r=None, width=32, depth=5, omega0=30.0, seed=0):
        r = r or size
        spec = models.NetworkSpec(1, r, (width,) * depth, "sine", omega0)
        return TinyInrSource(spec, models.init_network(spec, seed), size)


def build_adjacency(source):
    """Globally normalized elementwise-exp Gram adjacency, as a Tensor.

    A = exp(G^T G) / grand_sum; symmetric, positive, entries sum to 1.
    """
    g = source.gram_source()                      # (r, m')
    gram = g.T @ g                                # (m', m')
    e = ad.exp_clip(gram, EXP_CAP)
    total = ad.tsum(e)
    a = e * ad.power(total, -1.0)
    check_finite(a.value, "adjacency matrix")
    return a


def build_laplacian(a):
    """L = diag(row sums of A) - A for a symmetric nonnegative adjacency."""
    av = a.value if isinstance(a, ad.Tensor) else np.asarray(a, dtype=np.float64)
    if av.ndim != 2 or av.shape[0] != av.shape[1]:
        raise ShapeError(f"adjacency must be square, got {av.shape}")
    if not np.allclose(av, av.T, atol=1e-10):
        raise ContractError("adjacency must be symmetric")
    a = ad.as_tensor(a)
    rowsums = ad.tsum(a, axis=1).reshape(-1)
    return ad.diag(rowsums) - a


def dirichlet_energy(laplacian, m):
    """tr(M^T L M): smoothness of the rows of M under the graph L."""
    laplacian = ad.as_tensor(laplacian)
    m = ad.as_tensor(m)
    if laplacian.value.shape[0] != laplacian.value.shape[1]:
        raise ShapeError(f"Laplacian must be square, got {laplacian.value.shape}")
    if laplacian.value.shape[1] != m.value.shape[0]:
        raise ShapeError(
            f"Laplacian {laplacian.value.shape} does not act on rows of {m.value.shape}")
    return ad.tsum(m * (laplacian @ m))


# ---------------------------------------------------------------------------
# the row/column Laplacian pair

class LaplacianPair:
    """Row and column graph Laplacians with their adjacency sources.

    After ``freeze`` the Laplacians are held at their current values and the
    source parameters receive no further gradient.
    """

    def __init__(self, row_source, col_source):
        self.row_source = row_source
        self.col_source = col_source
        self.frozen = False
        self.freeze_step = None
        self._frozen_lr = None
        self._frozen_lc = None

    @property
    def trainables(self):
        if self.frozen:
            return []
        return self.row_source.trainables + self.col_source.trainables

    def laplacians(self):
        """Current (L_r, L_c) as Tensors; constants once frozen."""
        if self.frozen:
            return ad.const(self._frozen_lr), ad.const(self._frozen_lc)
        lr = build_laplacian(build_adjacency(self.row_source))
        lc = build_laplacian(build_adjacency(self.col_source))
        return lr, lc

    def freeze(self, at_step):
        if self.frozen:
            raise ContractError("Laplacian pair is already frozen")
        if at_step < 0:
            raise ContractError("freeze step must be >= 0")
        lr, lc = self.laplacians()
        self._frozen_lr = lr.value.copy()
        self._frozen_lc = lc.value.copy()
        self.frozen = True
        self.freeze_step = at_step


def pair_penalty(pair, grid, lam_r, lam_c):
    """lam_r tr(X^T L_r X) + lam_c tr(X L_c X^T) on the predicted grid."""
    if lam_r < 0 or lam_c < 0:
        raise ContractError("penalty weights must be nonnegative")
    grid = ad.as_tensor(grid)
    if lam_r == 0.0 and lam_c == 0.0:
        return ad.const(0.0)
    lr, lc = pair.laplacians()
    m, n = grid.value.shape
    if lr.value.shape[0] != m or lc.value.shape[0] != n:
        raise ShapeError(
            f"grid {grid.value.shape} mismatches Laplacians "
            f"{lr.value.shape}/{lc.value.shape}")
    out = ad.const(0.0)
    if lam_r:
        out = out + lam_r * dirichlet_energy(lr, grid)
    if lam_c:
        out = out + lam_c * dirichlet_energy(lc, grid.T)
    return out


# ---------------------------------------------------------------------------
# classical penalties

def tv_penalty(grid):
    """Anisotropic discrete total variation of the predicted grid."""
    grid = ad.as_tensor(grid)
    m, n = grid.value.shape
    if m < 2 or n < 2:
        raise ShapeError("TV needs at least a 2x2 grid")
    dr = grid[1:, :] - grid[:-1, :]
    dc = grid[:, 1:] - grid[:, :-1]
    return ad.tsum(ad.absolute(dr)) + ad.tsum(ad.absolute(dc))


def l2_penalty(params, mode="frobenius"):
    """Sum of weight-matrix norms; Frobenius by default, spectral optional."""
    out = ad.const(0.0)
    for w in params.weights:
        if mode == "frobenius":
            out = out + ad.power(ad.tsum(w * w), 0.5)
        elif mode == "spectral":
            # sigma_max = u^T W v with u, v the (detached) top singular pair;
            # gives the correct value and subgradient u v^T.
            u_mat, s, vt = np.linalg.svd(w.value)
            u = ad.const(u_mat[:, :1].T)
            v = ad.const(vt[:1, :].T)
            out = out + ad.tsum(u @ w @ v)
        else:
            raise ContractError(f"unknown l2 mode {mode!r}")
    return out
