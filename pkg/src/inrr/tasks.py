"""Data plane: PGM image I/O, observation masks, noise, synthetic data,
and reconstruction metrics (PSNR, effective rank, covariance).
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, PgmParseError, ShapeError
from .linalg import singular_values


@dataclass
class MaskedImage:
    """Grayscale image in [0, 1] plus a boolean observation mask."""
    pixels: np.ndarray
    mask: np.ndarray
    name: str = ""

    def __post_init__(self):
        self.pixels = np.asarray(self.pixels, dtype=np.float64)
        self.mask = np.asarray(self.mask, dtype=bool)
        if self.pixels.shape != self.mask.shape:
            raise ShapeError(f"mask shape {self.mask.shape} != pixels {self.pixels.shape}")
        if self.pixels.min() < 0.0 or self.pixels.max() > 1.0:
            raise ContractError("pixel values must lie in [0, 1]")
        if not self.mask.any():
            raise ContractError("at least one pixel must be observed")

    @property
    def shape(self):
        return self.pixels.shape


# ---------------------------------------------------------------------------
# PGM (P2 / P5) reading and writing

def _next_token(data, pos):
    """Skip whitespace/comments and return (token, position after it)."""
    n = len(data)
    while pos < n:
        ch = data[pos:pos + 1]
        if ch == b"#":
            while pos < n and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif ch.isspace():
            pos += 1
        else:
            break
    if pos >= n:
        raise PgmParseError("unexpected end of header", pos)
    start = pos
    while pos < n and not data[pos:pos + 1].isspace():
        pos += 1
    return data[start:pos], pos


def load_pgm(path):
    """Read a P2/P5 PGM with maxval 255 into a fully observed MaskedImage."""
    with open(path, "rb") as f:
        data = f.read()
    magic, pos = _next_token(data, 0)
    if magic not in (b"P2", b"P5"):
        raise PgmParseError(f"not a PGM file (magic {magic!r})", 0)
    fields = []
    for _ in range(3):
        tok, pos = _next_token(data, pos)
        try:
            fields.append(int(tok))
        except ValueError:
            raise PgmParseError(f"non-numeric header token {tok!r}", pos) from None
    width, height, maxval = fields
    if maxval != 255:
        raise PgmParseError(f"unsupported maxval {maxval}", pos)
    if width < 1 or height < 1:
        raise PgmParseError(f"bad dimensions {width}x{height}", pos)
    count = width * height
    if magic == b"P5":
        pos += 1  # single whitespace byte after maxval
        raster = data[pos:pos + count]
        if len(raster) < count:
            raise PgmParseError(
                f"truncated raster: expected {count} bytes, got {len(raster)}", pos)
        values = np.frombuffer(raster, dtype=np.uint8).astype(np.float64)
    else:
        values = np.empty(count)
        for i in range(count):
            tok, pos = _next_token(data, pos)
            try:
                v = int(tok)
            except ValueError:
                raise PgmParseError(f"non-numeric sample {tok!r}", pos) from None
            if not 0 <= v <= maxval:
                raise PgmParseError(f"sample {v} out of range", pos)
            values[i] = v
    pixels = values.reshape(height, width) / 255.0
    return MaskedImage(pixels, np.ones((height, width), dtype=bool), name=str(path))


def quantize(pixels):
    """Clamp to [0, 1] and quantize round-half-up to 0..255."""
    clamped = np.clip(np.asarray(pixels, dtype=np.float64), 0.0, 1.0)
    return np.floor(clamped * 255.0 + 0.5).astype(np.uint8)


def save_pgm(image, path, ascii_format=False):
    """Write pixels (a MaskedImage or raw array) as P5 (or P2) PGM."""
    pixels = image.pixels if isinstance(image, MaskedImage) else image
    q = quantize(pixels)
    h, w = q.shape
    header = f"{'P2' if ascii_format else 'P5'}\n{w} {h}\n255\n"
    with open(path, "wb") as f:
        f.write(header.encode("ascii"))
        if ascii_format:
            lines = "\n".join(" ".join(str(v) for v in row) for row in q)
            f.write(lines.encode("ascii"))
            f.write(b"\n")
        else:
            f.write(q.tobytes())


# ---------------------------------------------------------------------------
# observation masks

@dataclass(frozen=True)
class RandomMask:
    p: float  # missing rate: each pixel unobserved with probability p

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ContractError(f"missing rate {self.p} outside [0, 1]")


@dataclass(frozen=True)
class PatchMask:
    rects: tuple  # half-open (r0, r1, c0, c1) rectangles, unobserved inside

    def __post_init__(self):
        object.__setattr__(self, "rects", tuple(tuple(r) for r in self.rects))


@dataclass(frozen=True)
class FileMask:
    path: str  # PGM thresholded at 0.5; dark = unobserved


@dataclass(frozen=True)
class MixtureMask:
    components: tuple  # union of the components' unobserved sets

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))


def gen_mask(kind, m, n, seed=0):
    """Boolean observation mask (True = observed), deterministic given seed."""
    if isinstance(kind, RandomMask):
        rng = np.random.default_rng(seed)
        return rng.random((m, n)) >= kind.p
    if isinstance(kind, PatchMask):
        mask = np.ones((m, n), dtype=bool)
        for (r0, r1, c0, c1) in kind.rects:
            if not (0 <= r0 <= r1 <= m and 0 <= c0 <= c1 <= n):
                raise ContractError(f"rectangle {(r0, r1, c0, c1)} outside {m}x{n}")
            mask[r0:r1, c0:c1] = False
        return mask
    if isinstance(kind, FileMask):
        img = load_pgm(kind.path)
        if img.shape != (m, n):
            raise ShapeError(f"mask file shape {img.shape} != image shape {(m, n)}")
        return img.pixels >= 0.5
    if isinstance(kind, MixtureMask):
        mask = np.ones((m, n), dtype=bool)
        for i, comp in enumerate(kind.components):
            mask &= gen_mask(comp, m, n, seed + i)
        return mask
    raise ContractError(f"unknown mask kind {kind!r}")


# ---------------------------------------------------------------------------
# noise

@dataclass(frozen=True)
class NoiseSpec:
    variant: str          # gaussian | salt_pepper | poisson
    level: float          # sigma on the 0-255 scale / kept fraction / lambda
    seed: int = 0

    def __post_init__(self):
        if self.variant == "gaussian" and self.level < 0:
            raise ContractError("gaussian sigma must be >= 0")
        if self.variant == "salt_pepper" and not 0.0 < self.level <= 1.0:
            raise ContractError("salt & pepper kept fraction must be in (0, 1]")
        if self.variant == "poisson" and self.level <= 0:
            raise ContractError("poisson rate must be > 0")
        if self.variant not in ("gaussian", "salt_pepper", "poisson"):
            raise ContractError(f"unknown noise variant {self.variant!r}")


def add_noise(pixels, spec):
    """Corrupt a clean [0, 1] image; deterministic given the spec's seed."""
    pixels = np.asarray(pixels, dtype=np.float64)
    rng = np.random.default_rng(spec.seed)
    if spec.variant == "gaussian":
        noisy = pixels + rng.normal(0.0, spec.level / 255.0, size=pixels.shape)
    elif spec.variant == "salt_pepper":
        keep = rng.random(pixels.shape) < spec.level
        extremes = (rng.random(pixels.shape) < 0.5).astype(np.float64)
        noisy = np.where(keep, pixels, extremes)
    else:  # poisson
        noisy = rng.poisson(spec.level * pixels).astype(np.float64) / spec.level
    return np.clip(noisy, 0.0, 1.0)


# ---------------------------------------------------------------------------
# synthetic data

def synthetic_ring(m, n, rescaled=True):
    """Concentric-ring test pattern s(x,y) = sin(25 pi sin(pi/3 sqrt(x^2+y^2)))
    on a uniform [-1, 1]^2 grid; rescaled to [0, 1] unless `rescaled=False`.
    """
    if m < 2 or n < 2:
        raise ContractError("grid must be at least 2x2")
    x = np.linspace(-1.0, 1.0, m)[:, None]
    y = np.linspace(-1.0, 1.0, n)[None, :]
    s = np.sin(25.0 * np.pi * np.sin(np.pi / 3.0 * np.sqrt(x * x + y * y)))
    return (s + 1.0) / 2.0 if rescaled else s


def synthetic_waves(m, n, seed=0):
    """Smooth self-similar pattern: a few low-frequency separable sinusoids.

    Rows and columns carry strong long-range correlations, which makes the
    pattern a good target for graph-smoothness regularizers.
    """
    rng = np.random.default_rng(seed)
    x = np.linspace(0.0, 1.0, m)[:, None]
    y = np.linspace(0.0, 1.0, n)[None, :]
    img = np.zeros((m, n))
    for fx, fy in ((2, 0), (0, 3), (3, 2), (5, 5)):
        phase = rng.uniform(0, 2 * np.pi, size=2)
        img += np.sin(2 * np.pi * fx * x + phase[0]) * np.cos(2 * np.pi * fy * y + phase[1])
    img -= img.min()
    img /= img.max()
    return img


# ---------------------------------------------------------------------------
# metrics

def psnr(a, b, over_mask=None):
    """10 log10(1 / MSE) with peak 1.0; +inf when the selection matches exactly."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch {a.shape} vs {b.shape}")
    if over_mask is not None:
        sel = np.asarray(over_mask, dtype=bool)
        if not sel.any():
            raise ContractError("PSNR mask selects no pixels")
        a, b = a[sel], b[sel]
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / mse)


def effective_rank(m):
    """exp of the entropy of the normalized singular-value distribution."""
    sv = singular_values(m)
    total = sv.sum()
    if total == 0.0:
        raise ContractError("effective rank of the zero matrix is undefined")
    p = sv / total
    entropy = -np.sum(p[p > 0] * np.log(p[p > 0]))
    return float(np.exp(entropy))


def covariance_matrix(x, axis="cols"):
    """Sample covariance between columns (default) or rows of x."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ShapeError(f"expected a matrix, got shape {x.shape}")
    if axis == "rows":
        x = x.T
    elif axis != "cols":
        raise ContractError(f"axis must be 'rows' or 'cols', got {axis!r}")
    if x.shape[0] < 2:
        raise ContractError("need >= 2 samples along the reduced axis")
    centered = x - x.mean(axis=0, keepdims=True)
    return centered.T @ centered / (x.shape[0] - 1)
