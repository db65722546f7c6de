"""Config-driven experiment runner: inpainting/denoising/fitting with the
penalty family, kernel-regression sweeps, implicit-bias studies, and the
fixed-Laplacian ablation.  See README for the config-file grammar.
"""

import configparser
import csv
import hashlib
import io
import os
import time
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from . import autodiff as ad
from . import models, ntk, regularizers, tasks
from .errors import ConfigError, ContractError, NumericRangeError
from .optim import Adam

TASKS = ("inpaint", "denoise", "fit", "ntk_sweep", "implicit_bias")
MODEL_KINDS = ("siren", "relu", "fourier", "inrz", "dmf")
REG_KINDS = ("none", "tv", "l2", "air", "inrr")

CSV_FIELDS = ("step", "observed_mse", "unobserved_mse", "psnr_unobserved",
              "penalty", "effective_rank")


# ---------------------------------------------------------------------------
# configuration

@dataclass
class ExperimentConfig:
    task: str = "inpaint"
    seed: int = 0
    steps: int = 2000
    log_every: int = 100
    out: str = "runs/out"
    # data
    image: str = "waves:64x64"
    mask: str = "random:0.5"
    noise: str = "none"
    # model
    model_kind: str = "siren"
    width: int = 64
    depth: int = 5
    omega0: float = 30.0
    feature_dim: int = 256
    feature_scale: float = 4.0
    factors: int = 3
    lr: float = 1e-4
    dmf_lr: float = 1e-2        # factor matrices tolerate a larger step size
    # regularizer
    reg_kind: str = "none"
    lam: float = 1e-4
    lam_r: float = 1e-2
    lam_c: float = 1e-2
    tiny_width: int = 32
    tiny_depth: int = 5
    tiny_omega0: float = 30.0
    tiny_rank: int = 0          # 0 -> max(m, n)
    freeze_step: int | None = None
    heatmap_steps: tuple = ()
    # sweep
    sweep_param: str = "delta"
    sweep_values: tuple = (1.0, 10.0, 100.0, 900.0)
    sweep_missing: tuple = (0.3, 0.5, 0.8)
    # implicit bias
    families: tuple = ("dmf1", "dmf3", "relu", "siren")

    def validate(self):
        if self.task not in TASKS:
            raise ConfigError(f"unknown task {self.task!r}")
        if self.model_kind not in MODEL_KINDS:
            raise ConfigError(f"unknown model kind {self.model_kind!r}")
        if self.reg_kind not in REG_KINDS:
            raise ConfigError(f"unknown regularizer kind {self.reg_kind!r}")
        if self.steps < 1:
            raise ConfigError("steps must be >= 1")
        if self.log_every < 1:
            raise ConfigError("log_every must be >= 1")
        if self.lam < 0 or self.lam_r < 0 or self.lam_c < 0:
            raise ConfigError("penalty weights must be nonnegative")
        if self.freeze_step is not None and self.freeze_step < 0:
            raise ConfigError("freeze_step must be >= 0")
        for source in (self.image, self.mask):
            if source.startswith("file:") and not os.path.exists(source[5:]):
                raise ConfigError(f"referenced file does not exist: {source[5:]}")
        if self.mask.startswith("mixture:"):
            for part in self.mask[8:].split("|"):
                if part.startswith("file:") and not os.path.exists(part[5:]):
                    raise ConfigError(f"referenced file does not exist: {part[5:]}")
        return self


_SECTION_KEYS = {
    "experiment": {"task": str, "seed": int, "steps": int, "log_every": int, "out": str},
    "data": {"image": str, "mask": str, "noise": str},
    "model": {"kind": ("model_kind", str), "width": int, "depth": int,
              "omega0": float, "feature_dim": int, "feature_scale": float,
              "factors": int, "lr": float, "dmf_lr": float},
    "regularizer": {"kind": ("reg_kind", str), "lam": float, "lam_r": float,
                    "lam_c": float, "tiny_width": int, "tiny_depth": int,
                    "tiny_omega0": float, "tiny_rank": int,
                    "freeze_step": int, "heatmap_steps": "intlist"},
    "sweep": {"param": ("sweep_param", str), "values": ("sweep_values", "floatlist"),
              "missing_rates": ("sweep_missing", "floatlist")},
    "bias": {"families": ("families", "strlist")},
}


def load_config(path, overrides=None):
    """Parse an INI-style config file into an ExperimentConfig."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path}")
    cfg = ExperimentConfig()
    for section in parser.sections():
        if section not in _SECTION_KEYS:
            raise ConfigError(f"unknown config section [{section}]")
        keys = _SECTION_KEYS[section]
        for key, raw in parser.items(section):
            if key not in keys:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")
            spec = keys[key]
            attr, conv = spec if isinstance(spec, tuple) else (key, spec)
            if raw == "":
                continue
            try:
                if conv == "floatlist":
                    value = tuple(float(v) for v in raw.split(","))
                elif conv == "intlist":
                    value = tuple(int(v) for v in raw.split(","))
                elif conv == "strlist":
                    value = tuple(v.strip() for v in raw.split(","))
                else:
                    value = conv(raw)
            except ValueError as exc:
                raise ConfigError(f"bad value for {section}.{key}: {raw!r}") from exc
            setattr(cfg, attr, value)
    if overrides:
        for attr, value in overrides.items():
            setattr(cfg, attr, value)
    return cfg.validate()


# ---------------------------------------------------------------------------
# builders

def _parse_size(text):
    try:
        m, n = text.lower().split("x")
        return int(m), int(n)
    except ValueError as exc:
        raise ConfigError(f"bad size spec {text!r} (want MxN)") from exc


def build_image(spec_text, seed=0):
    kind, _, arg = spec_text.partition(":")
    if kind == "file":
        return tasks.load_pgm(arg).pixels
    if kind == "ring":
        return tasks.synthetic_ring(*_parse_size(arg))
    if kind == "waves":
        return tasks.synthetic_waves(*_parse_size(arg), seed=seed)
    raise ConfigError(f"unknown image source {spec_text!r}")


def parse_mask_spec(spec_text):
    kind, _, arg = spec_text.partition(":")
    if kind == "none":
        return tasks.RandomMask(0.0)
    if kind == "random":
        return tasks.RandomMask(float(arg))
    if kind == "patch":
        rects = []
        for rect in arg.split(","):
            try:
                rows, cols = rect.split(":")
                r0, r1 = (int(v) for v in rows.split("-"))
                c0, c1 = (int(v) for v in cols.split("-"))
            except ValueError as exc:
                raise ConfigError(f"bad patch rect {rect!r} (want R0-R1:C0-C1)") from exc
            rects.append((r0, r1, c0, c1))
        return tasks.PatchMask(tuple(rects))
    if kind == "file":
        return tasks.FileMask(arg)
    if kind == "mixture":
        return tasks.MixtureMask(tuple(parse_mask_spec(p) for p in arg.split("|")))
    raise ConfigError(f"unknown mask spec {spec_text!r}")


def parse_noise_spec(spec_text, seed=0):
    kind, _, arg = spec_text.partition(":")
    if kind == "none":
        return None
    if kind in ("gaussian", "salt_pepper", "poisson"):
        return tasks.NoiseSpec(kind, float(arg), seed=seed)
    raise ConfigError(f"unknown noise spec {spec_text!r}")


class GridModel:
    """Uniform interface: predict the full m x n grid as a Tensor."""

    def __init__(self, kind, cfg, image, seed):
        self.kind = kind
        m, n = image.shape
        self.shape = (m, n)
        hidden = (cfg.width,) * cfg.depth
        if kind == "siren":
            self.spec = models.NetworkSpec(2, 1, hidden, "sine", cfg.omega0)
            self.params = models.init_network(self.spec, seed)
            self.inputs = models.grid_coords_centered(m, n)
        elif kind == "relu":
            self.spec = models.NetworkSpec(2, 1, hidden, "relu")
            self.params = models.init_network(self.spec, seed)
            self.inputs = models.grid_coords(m, n)
        elif kind == "fourier":
            fm = models.FeatureMapSpec(cfg.feature_dim, cfg.feature_scale, seed=seed + 7)
            self.spec = models.NetworkSpec(2, 1, hidden, "sine", cfg.omega0, feature_map=fm)
            self.params = models.init_network(self.spec, seed)
            self.inputs = models.fourier_features(self.params.feature_matrix,
                                                  models.grid_coords(m, n))
        elif kind == "inrz":
            self.spec = models.NetworkSpec(2 + models.PATCH ** 2, 1, hidden,
                                           "sine", cfg.omega0)
            self.params = models.init_network(self.spec, seed)
            self.inputs = models.neighborhood_inputs(image)
        elif kind == "dmf":
            k = max(2, cfg.factors)
            shapes = [(m, m)] * (k - 1) + [(m, n)] if cfg.factors > 1 else [(m, n)]
            self.dmf = models.DmfSpec(tuple(shapes))
            self.factors = models.init_dmf(self.dmf, seed)
        else:
            raise ConfigError(f"unknown model kind {kind!r}")

    @property
    def trainables(self):
        if self.kind == "dmf":
            return list(self.factors)
        return self.params.trainables

    def predict_grid(self):
        if self.kind == "dmf":
            return models.dmf_product(self.factors)
        out = models.forward(self.spec, self.params, ad.const(self.inputs))
        return out.reshape(self.shape)


def build_regularizer(cfg, m, n, seed):
    """Returns (pair_or_None, penalty_fn(model, grid) -> Tensor)."""
    kind = cfg.reg_kind
    if kind == "none":
        return None, lambda model, grid: ad.const(0.0)
    if kind == "tv":
        return None, lambda model, grid: cfg.lam * regularizers.tv_penalty(grid)
    if kind == "l2":
        def l2(model, grid):
            if not hasattr(model, "params"):
                raise ConfigError("l2 penalty needs a network model")
            return cfg.lam * regularizers.l2_penalty(model.params)
        return None, l2
    rank = cfg.tiny_rank or max(m, n)
    if kind == "air":
        row = regularizers.FreeSource.random(rank, m, seed + 11)
        col = regularizers.FreeSource.random(rank, n, seed + 12)
    else:  # inrr
        row = regularizers.TinyInrSource.default(
            m, r=rank, width=cfg.tiny_width, depth=cfg.tiny_depth,
            omega0=cfg.tiny_omega0, seed=seed + 11)
        col = regularizers.TinyInrSource.default(
            n, r=rank, width=cfg.tiny_width, depth=cfg.tiny_depth,
            omega0=cfg.tiny_omega0, seed=seed + 12)
    pair = regularizers.LaplacianPair(row, col)
    return pair, lambda model, grid: regularizers.pair_penalty(
        pair, grid, cfg.lam_r, cfg.lam_c)


# ---------------------------------------------------------------------------
# output helpers

def atomic_write_bytes(path, data):
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "wb") as f:
        f.write(data)
    os.replace(tmp, path)


def write_trajectory_csv(path, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_FIELDS)
    for row in rows:
        writer.writerow([row[0]] + [format(v, ".17g") for v in row[1:]])
    atomic_write_bytes(path, buf.getvalue().encode("ascii"))


def export_heatmap(matrix, path, scale="linear"):
    """Min-max normalized grayscale PGM of a matrix (log scale on |entries|)."""
    m = np.asarray(matrix, dtype=np.float64)
    if not np.all(np.isfinite(m)):
        raise NumericRangeError("heatmap input contains non-finite entries")
    if scale == "log":
        m = np.log10(np.maximum(np.abs(m), 1e-12))
    elif scale != "linear":
        raise ContractError(f"unknown heatmap scale {scale!r}")
    lo, hi = m.min(), m.max()
    if hi == lo:
        warnings.warn("constant matrix; exporting uniform mid-gray heatmap")
        norm = np.full_like(m, 0.5)
    else:
        norm = (m - lo) / (hi - lo)
    buf = io.BytesIO()
    q = tasks.quantize(norm)
    h, w = q.shape
    buf.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
    buf.write(q.tobytes())
    atomic_write_bytes(path, buf.getvalue())


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as f:
        h.update(f.read())
    return h.hexdigest()


def write_manifest(path, cfg, extra):
    lines = ["# run manifest"]
    for attr in sorted(vars(cfg)):
        lines.append(f"{attr} = {getattr(cfg, attr)}")
    for source in (cfg.image, cfg.mask):
        if source.startswith("file:"):
            lines.append(f"sha256[{source[5:]}] = {_sha256(source[5:])}")
    for k, v in extra.items():
        lines.append(f"{k} = {v}")
    atomic_write_bytes(path, ("\n".join(lines) + "\n").encode())


# ---------------------------------------------------------------------------
# training

@dataclass
class RunResult:
    rows: list                  # logged metric rows (CSV_FIELDS order)
    wall_times: list            # per logged step, seconds since run start
    recovered: np.ndarray
    reference: np.ndarray
    mask: np.ndarray
    final: dict
    paths: dict = field(default_factory=dict)


def _metrics(step, pred, reference, mask, penalty_value):
    obs = float(np.mean((pred[mask] - reference[mask]) ** 2))
    unobs_mask = ~mask
    if unobs_mask.any():
        unobs = float(np.mean((pred[unobs_mask] - reference[unobs_mask]) ** 2))
        p = tasks.psnr(np.clip(pred, 0, 1), reference, over_mask=unobs_mask)
    else:
        unobs = obs
        p = tasks.psnr(np.clip(pred, 0, 1), reference)
    if not np.isfinite(p):
        p = 99.0  # exact-match sentinel kept finite for the log
    er = 0.0
    if np.any(pred):
        er = tasks.effective_rank(pred)
    return (step, obs, unobs, p, penalty_value, er)


def train(cfg, out_dir=None):
    """Train one configured model; returns a RunResult.

    The per-step objective is fidelity + weighted penalties, differentiated
    once and applied as a single Adam update over the joint parameter set.
    """
    seed = cfg.seed
    clean = build_image(cfg.image, seed=seed + 5)
    m, n = clean.shape
    mask = tasks.gen_mask(parse_mask_spec(cfg.mask), m, n, seed=seed + 1)
    if cfg.task == "fit":
        mask = np.ones((m, n), dtype=bool)
    target = clean
    noise_spec = parse_noise_spec(cfg.noise, seed=seed + 2)
    if noise_spec is not None:
        target = tasks.add_noise(clean, noise_spec)
    image = tasks.MaskedImage(target, mask, name=cfg.image)

    model = GridModel(cfg.model_kind, cfg, image, seed)
    pair, penalty_fn = build_regularizer(cfg, m, n, seed)

    all_params = model.trainables + (pair.trainables if pair else [])
    lr = cfg.dmf_lr if cfg.model_kind == "dmf" else cfg.lr
    opt = Adam(all_params, lr=lr)
    target_t = ad.const(target)
    mask_f = mask.astype(np.float64)
    mask_t = ad.const(mask_f)
    n_obs = float(mask_f.sum())

    heatmap_steps = set(cfg.heatmap_steps)
    rows, wall_times = [], []
    t0 = time.perf_counter()
    last_good = None

    for step in range(cfg.steps):
        if pair is not None and cfg.freeze_step is not None \
                and step == cfg.freeze_step and not pair.frozen:
            pair.freeze(step)
        grid = model.predict_grid()
        resid = (grid - target_t) * mask_t
        fidelity = ad.tsum(resid * resid) * (1.0 / n_obs)
        penalty = penalty_fn(model, grid)
        loss = fidelity + penalty
        if not np.isfinite(loss.value):
            if out_dir and last_good is not None:
                tasks.save_pgm(np.clip(last_good, 0, 1),
                               os.path.join(out_dir, "checkpoint.pgm"))
            raise NumericRangeError(f"non-finite loss at step {step}")
        ad.backward(loss)
        active = model.trainables + (pair.trainables if pair else [])
        opt.step(active=active)
        last_good = grid.value

        if step % cfg.log_every == 0 or step == cfg.steps - 1:
            rows.append(_metrics(step, grid.value, clean, mask, float(penalty.value)))
            wall_times.append(time.perf_counter() - t0)
        if out_dir and pair is not None and step in heatmap_steps:
            lr_t, lc_t = pair.laplacians()
            export_heatmap(lr_t.value, os.path.join(out_dir, f"laplacian_row_{step}.pgm"))
            export_heatmap(lc_t.value, os.path.join(out_dir, f"laplacian_col_{step}.pgm"))

    recovered = model.predict_grid().value
    final = dict(zip(CSV_FIELDS, rows[-1]))
    return RunResult(rows, wall_times, recovered, clean, mask, final)


def run_experiment(cfg, out_dir=None):
    """Run one experiment and write its artifact files."""
    cfg.validate()
    out_dir = out_dir or cfg.out
    os.makedirs(out_dir, exist_ok=True)
    if cfg.task == "ntk_sweep":
        return ntk_sweep(cfg, out_dir)
    if cfg.task == "implicit_bias":
        return implicit_bias_study(cfg, out_dir)
    result = train(cfg, out_dir=out_dir)
    recovered = np.clip(result.recovered, 0.0, 1.0)
    paths = {
        "recovered": os.path.join(out_dir, "recovered.pgm"),
        "residual": os.path.join(out_dir, "residual.pgm"),
        "trajectory": os.path.join(out_dir, "trajectory.csv"),
        "timing": os.path.join(out_dir, "timing.csv"),
        "manifest": os.path.join(out_dir, "manifest.txt"),
    }
    tasks.save_pgm(recovered, paths["recovered"])
    tasks.save_pgm(np.abs(result.reference - recovered), paths["residual"])
    write_trajectory_csv(paths["trajectory"], result.rows)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("step", "wall_time_s"))
    for row, t in zip(result.rows, result.wall_times):
        w.writerow((row[0], f"{t:.6f}"))
    atomic_write_bytes(paths["timing"], buf.getvalue().encode("ascii"))
    write_manifest(paths["manifest"], cfg,
                   {f"final_{k}": v for k, v in result.final.items()})
    result.paths = paths
    return result


# ---------------------------------------------------------------------------
# sweeps and studies

def kernel_inpaint(clean, mask, delta, h):
    """Kernel-regression inpainting with the limiting composed kernel.

    Uses the D -> infinity Gaussian-limit kernel rather than sampled Fourier
    features, matching the theory the delta sweep is meant to probe.
    """
    m, n = clean.shape
    coords = models.grid_coords(m, n)
    flat_mask = mask.reshape(-1)
    km = ntk.limit_kernel_matrix(coords[flat_mask], delta, h)
    z = clean.reshape(-1)[flat_mask]
    pred = np.full(m * n, np.nan)
    pred[flat_mask] = z  # training points interpolate by construction
    unobs = np.where(~flat_mask)[0]
    if len(unobs):
        pred[unobs] = ntk.kernel_regression_batch(km, z, coords[unobs])
    return pred.reshape(m, n)


def default_h(samples=150, seed=0):
    """Scalar kernel map fitted from a small sine network on unit inputs."""
    spec = models.NetworkSpec(8, 1, (32, 32), "sine", 30.0)
    return ntk.fit_h(spec, np.linspace(-1, 1, 9), samples=samples, seed=seed)


def ntk_sweep(cfg, out_dir):
    """Grid sweep (delta via kernel regression, omega0 via training) x missing
    rates; writes one PSNR row per cell, continuing past per-cell failures.
    """
    os.makedirs(out_dir, exist_ok=True)
    clean = build_image(cfg.image, seed=cfg.seed + 5)
    m, n = clean.shape
    h = default_h(seed=cfg.seed) if cfg.sweep_param == "delta" else None
    cells = []
    for rate in cfg.sweep_missing:
        mask = tasks.gen_mask(tasks.RandomMask(rate), m, n, seed=cfg.seed + 1)
        for value in cfg.sweep_values:
            try:
                if cfg.sweep_param == "delta":
                    pred = kernel_inpaint(clean, mask, value, h)
                elif cfg.sweep_param == "omega0":
                    sub = replace(cfg, task="inpaint", omega0=value,
                                  mask=f"random:{rate}")
                    pred = train(sub).recovered
                else:
                    raise ConfigError(f"unknown sweep parameter {cfg.sweep_param!r}")
                p = tasks.psnr(np.clip(pred, 0, 1), clean, over_mask=~mask)
                cells.append((rate, value, p, ""))
            except (ConfigError, ContractError):
                raise
            except Exception as exc:  # per-cell failure: record and continue
                cells.append((rate, value, float("nan"), type(exc).__name__))
    path = os.path.join(out_dir, "sweep.csv")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("missing_rate", cfg.sweep_param, "psnr_unobserved", "error"))
    for row in cells:
        w.writerow(row)
    atomic_write_bytes(path, buf.getvalue().encode("ascii"))
    return {"cells": cells, "path": path}


def implicit_bias_study(cfg, out_dir):
    """Effective-rank trajectories and snapshots for several model families.

    The rank CSVs start at the first post-update log point: the step-0 row
    measures the random initialization, not the optimization path, and its
    spectrum is an init artifact rather than part of the complexity curve.
    """
    os.makedirs(out_dir, exist_ok=True)
    results = {}
    for family in cfg.families:
        if family not in ("dmf1", "dmf3", "relu", "siren"):
            raise ConfigError(f"unknown model family {family!r}")
        sub = replace(cfg, task="inpaint", reg_kind="none")
        if family.startswith("dmf"):
            sub.model_kind = "dmf"
            sub.factors = int(family[3:])
        else:
            sub.model_kind = family
        result = train(sub)
        results[family] = result
        logged = result.rows[1:] if len(result.rows) > 1 else result.rows
        write_trajectory_csv(os.path.join(out_dir, f"rank_{family}.csv"), logged)
        tasks.save_pgm(np.clip(result.recovered, 0, 1),
                       os.path.join(out_dir, f"snapshot_{family}.pgm"))
    return results
