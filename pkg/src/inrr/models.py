"""Coordinate networks and matrix factorizations.

Covers sine (SIREN-style) and ReLU MLPs, the random Fourier feature lifting,
deep matrix factorization, and the neighborhood-augmented coordinate network
(``inrz``) that feeds observed neighbor pixels alongside the coordinate.
"""

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .errors import ContractError, ShapeError


@dataclass(frozen=True)
class FeatureMapSpec:
    """Random Fourier feature lifting x -> (1/sqrt(D))[cos(Bx), sin(Bx)]."""
    size: int          # D, number of random frequencies
    scale: float       # std of the Gaussian frequency entries
    seed: int = 0

    def __post_init__(self):
        if self.size < 1:
            raise ContractError("feature map size must be >= 1")
        if self.scale < 0:
            raise ContractError("feature map scale must be >= 0")


@dataclass(frozen=True)
class NetworkSpec:
    in_dim: int
    out_dim: int
    hidden: tuple
    activation: str = "sine"     # sine | relu | linear
    omega0: float = 30.0
    feature_map: FeatureMapSpec | None = None
    use_bias: bool = True

    def __post_init__(self):
        if self.activation not in ("sine", "relu", "linear"):
            raise ContractError(f"unknown activation {self.activation!r}")
        if any(w < 1 for w in self.hidden) or self.in_dim < 1 or self.out_dim < 1:
            raise ContractError("all widths must be >= 1")
        if self.activation == "sine" and self.omega0 <= 0:
            raise ContractError("omega0 must be > 0 for sine networks")
        object.__setattr__(self, "hidden", tuple(self.hidden))

    @property
    def net_in_dim(self):
        return 2 * self.feature_map.size if self.feature_map else self.in_dim

    @property
    def layer_dims(self):
        return (self.net_in_dim,) + self.hidden + (self.out_dim,)


class ParamSet:
    """Trainable weights/biases plus the frozen feature matrix, if any."""

    def __init__(self, weights, biases, feature_matrix=None, use_bias=True):
        self.weights = weights          # list of Tensors, shape (n_out, n_in)
        self.biases = biases            # list of Tensors, shape (n_out,)
        self.feature_matrix = feature_matrix   # plain ndarray (D, d), never trained
        self.use_bias = use_bias

    @property
    def trainables(self):
        return self.weights + (self.biases if self.use_bias else [])


def init_network(spec, seed):
    """Initialize parameters; sine nets follow the standard SIREN scheme."""
    rng = np.random.default_rng(seed)
    dims = spec.layer_dims
    weights, biases = [], []
    for layer, (n_in, n_out) in enumerate(zip(dims[:-1], dims[1:])):
        if spec.activation == "sine":
            if layer == 0:
                bound = 1.0 / n_in
            else:
                bound = np.sqrt(6.0 / n_in) / spec.omega0
        else:
            bound = np.sqrt(6.0 / n_in)
        w = rng.uniform(-bound, bound, size=(n_out, n_in))
        weights.append(ad.param(w, name=f"W{layer}"))
        biases.append(ad.param(np.zeros(n_out), name=f"b{layer}"))
    feature_matrix = None
    if spec.feature_map is not None:
        fm = spec.feature_map
        frng = np.random.default_rng(fm.seed)
        feature_matrix = frng.normal(0.0, fm.scale, size=(fm.size, spec.in_dim))
    return ParamSet(weights, biases, feature_matrix, use_bias=spec.use_bias)


def fourier_features(B, x):
    """(1/sqrt(D)) [cos(Bx), sin(Bx)] for a batch of points (rows of x)."""
    B = np.asarray(B, dtype=np.float64)
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if B.shape[1] != x.shape[1]:
        raise ShapeError(f"feature matrix expects dim {B.shape[1]}, got {x.shape[1]}")
    proj = x @ B.T
    scale = 1.0 / np.sqrt(B.shape[0])
    return scale * np.concatenate([np.cos(proj), np.sin(proj)], axis=1)


def forward(spec, params, coords):
    """Batched network evaluation; returns a Tensor of shape (k, out_dim).

    `coords` may be a plain array or a Tensor (for gradient checks through
    the input).
    """
    if isinstance(coords, ad.Tensor):
        x = coords
    else:
        c = np.atleast_2d(np.asarray(coords, dtype=np.float64))
        if c.shape[1] != spec.in_dim:
            raise ShapeError(f"coords dim {c.shape[1]} != network in_dim {spec.in_dim}")
        if spec.feature_map is not None:
            c = fourier_features(params.feature_matrix, c)
        x = ad.const(c, name="coords")
    n_layers = len(params.weights)
    for layer, (w, b) in enumerate(zip(params.weights, params.biases)):
        z = x @ w.T
        if params.use_bias:
            z = z + b
        if layer == n_layers - 1:
            x = z
        elif spec.activation == "sine":
            x = ad.sine(z, spec.omega0 if layer == 0 else 1.0)
        elif spec.activation == "relu":
            x = ad.relu(z)
        else:
            x = z
    return x


# ---------------------------------------------------------------------------
# deep matrix factorization

@dataclass(frozen=True)
class DmfSpec:
    shapes: tuple          # ((m, k1), (k1, k2), ..., (kL, n))
    init_scale: float = 1e-2

    def __post_init__(self):
        shapes = tuple(tuple(s) for s in self.shapes)
        for (a, b) in zip(shapes[:-1], shapes[1:]):
            if a[1] != b[0]:
                raise ShapeError(f"factor shapes do not conform: {a} then {b}")
        object.__setattr__(self, "shapes", shapes)


def init_dmf(spec, seed):
    rng = np.random.default_rng(seed)
    return [ad.param(rng.normal(0.0, spec.init_scale, size=s), name=f"F{i}")
            for i, s in enumerate(spec.shapes)]


def dmf_product(factors):
    """Ordered product of the factor tensors."""
    out = factors[0]
    for f in factors[1:]:
        out = out @ f
    return out


# ---------------------------------------------------------------------------
# neighborhood-augmented coordinate network

PATCH = 3  # neighborhood side length; inputs are [x, y] + PATCH*PATCH pixels


def grid_coords(m, n):
    """The (i/m, j/n) training grid, flattened row-major to (m*n, 2)."""
    ii = (np.arange(1, m + 1) / m)
    jj = (np.arange(1, n + 1) / n)
    return np.stack(np.meshgrid(ii, jj, indexing="ij"), axis=-1).reshape(-1, 2)


def grid_coords_centered(m, n):
    """Grid coordinates affinely mapped to [-1, 1]^2 (sine-net convention)."""
    c = grid_coords(m, n)
    lo = 1.0 / np.array([m, n])
    return (2.0 * c - (1.0 + lo)) / (1.0 - lo)


def neighborhood_inputs(image, patch=PATCH):
    """Per-pixel inputs [x, y, observed neighborhood values], zeros elsewhere.

    Out-of-bounds and unobserved neighbors contribute 0.
    """
    m, n = image.pixels.shape
    observed = image.pixels * image.mask
    half = patch // 2
    padded = np.zeros((m + 2 * half, n + 2 * half))
    padded[half:m + half, half:n + half] = observed
    feats = np.empty((m * n, patch * patch))
    k = 0
    for di in range(patch):
        for dj in range(patch):
            feats[:, k] = padded[di:di + m, dj:dj + n].reshape(-1)
            k += 1
    return np.concatenate([grid_coords(m, n), feats], axis=1)


def inrz_forward(spec, params, image, pixel_index):
    """Evaluate the neighborhood-augmented network at one pixel (i, j)."""
    patch_sq = spec.in_dim - 2
    if patch_sq != PATCH * PATCH:
        raise ContractError(
            f"in_dim {spec.in_dim} inconsistent with {PATCH}x{PATCH} neighborhood")
    m, n = image.pixels.shape
    i, j = pixel_index
    inputs = neighborhood_inputs(image)
    row = inputs[i * n + j][None, :]
    return forward(spec, params, row)
