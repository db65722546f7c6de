"""Elementwise hot kernels with numba-jitted and pure-numpy implementations.

The jitted path is the default; set INRR_DISABLE_NUMBA=1 to force the numpy
fallback (useful on platforms where numba is unavailable or for debugging).
Matrix products are deliberately left to BLAS via numpy — numba only wins on
the fused elementwise loops below.
"""

import os

import numpy as np


# ---------------------------------------------------------------------------
# numpy reference implementations

def _np_sine(z, omega):
    zw = omega * z
    return np.sin(zw), np.cos(zw)


def _np_relu(z):
    mask = z > 0.0
    return z * mask, mask.astype(np.float64)


def _np_exp_clip(z, cap):
    zc = np.minimum(z, cap)
    y = np.exp(zc)
    return y, y * (z < cap)


def _np_abs(z):
    return np.abs(z), np.sign(z)


def _np_adam_update(p, g, m, v, lr, b1, b2, eps, t):
    m *= b1
    m += (1.0 - b1) * g
    v *= b2
    v += (1.0 - b2) * (g * g)
    mhat = m / (1.0 - b1 ** t)
    vhat = v / (1.0 - b2 ** t)
    p -= lr * mhat / (np.sqrt(vhat) + eps)


# ---------------------------------------------------------------------------
# numba implementations (fused flat loops, no temporaries)

def _build_numba():
    from numba import njit

    @njit(cache=True)
    def nb_sine(z, omega):
        s = np.empty_like(z)
        c = np.empty_like(z)
        zf = z.ravel()
        sf = s.ravel()
        cf = c.ravel()
        for i in range(zf.size):
            t = omega * zf[i]
            sf[i] = np.sin(t)
            cf[i] = np.cos(t)
        return s, c

    @njit(cache=True)
    def nb_relu(z):
        y = np.empty_like(z)
        mask = np.empty_like(z)
        zf = z.ravel()
        yf = y.ravel()
        mf = mask.ravel()
        for i in range(zf.size):
            if zf[i] > 0.0:
                yf[i] = zf[i]
                mf[i] = 1.0
            else:
                yf[i] = 0.0
                mf[i] = 0.0
        return y, mask

    @njit(cache=True)
    def nb_exp_clip(z, cap):
        y = np.empty_like(z)
        dy = np.empty_like(z)
        zf = z.ravel()
        yf = y.ravel()
        df = dy.ravel()
        for i in range(zf.size):
            if zf[i] < cap:
                yf[i] = np.exp(zf[i])
                df[i] = yf[i]
            else:
                yf[i] = np.exp(cap)
                df[i] = 0.0
        return y, dy

    @njit(cache=True)
    def nb_abs(z):
        y = np.empty_like(z)
        sg = np.empty_like(z)
        zf = z.ravel()
        yf = y.ravel()
        sf = sg.ravel()
        for i in range(zf.size):
            if zf[i] > 0.0:
                yf[i] = zf[i]
                sf[i] = 1.0
            elif zf[i] < 0.0:
                yf[i] = -zf[i]
                sf[i] = -1.0
            else:
                yf[i] = 0.0
                sf[i] = 0.0
        return y, sg

    @njit(cache=True)
    def nb_adam_update(p, g, m, v, lr, b1, b2, eps, t):
        c1 = 1.0 - b1 ** t
        c2 = 1.0 - b2 ** t
        pf = p.ravel()
        gf = g.ravel()
        mf = m.ravel()
        vf = v.ravel()
        for i in range(pf.size):
            mf[i] = b1 * mf[i] + (1.0 - b1) * gf[i]
            vf[i] = b2 * vf[i] + (1.0 - b2) * gf[i] * gf[i]
            pf[i] -= lr * (mf[i] / c1) / (np.sqrt(vf[i] / c2) + eps)

    return nb_sine, nb_relu, nb_exp_clip, nb_abs, nb_adam_update


_DISABLED = os.environ.get("INRR_DISABLE_NUMBA", "0").lower() in ("1", "true", "yes")
NUMBA_ACTIVE = False

if not _DISABLED:
    try:
        sine, relu, exp_clip, abs_, adam_update = _build_numba()
        NUMBA_ACTIVE = True
    except ImportError:
        _DISABLED = True

if _DISABLED:
    sine, relu, exp_clip, abs_, adam_update = (
        _np_sine, _np_relu, _np_exp_clip, _np_abs, _np_adam_update,
    )
