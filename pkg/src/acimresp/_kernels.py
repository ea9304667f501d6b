"""Hot numerical kernels.

Each kernel exists twice: a numba ``@njit`` loop and a vectorised numpy
fallback.  The numba path is used when numba imports and the environment
variable ``ACIMRESP_NUMBA`` is not set to ``0``.
"""
import os

import numpy as np

try:
    from numba import njit
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and os.environ.get("ACIMRESP_NUMBA", "1") != "0"

_EPS = np.finfo(float).eps
_MAXIT = 200


# --------------------------------------------------------------------------
# barycentric interpolation matrix
# --------------------------------------------------------------------------

def bary_matrix_numpy(nodes, weights, z):
    z = np.asarray(z)
    diff = z[:, None] - nodes[None, :]
    hit = diff == 0
    diff = np.where(hit, 1.0, diff)
    c = weights[None, :] / diff
    out = c / c.sum(axis=1, keepdims=True)
    rows = hit.any(axis=1)
    if rows.any():
        out[rows] = hit[rows].astype(out.dtype)
    return out


if HAVE_NUMBA:
    @njit(cache=True)
    def _bary_matrix_nb(nodes, weights, z):
        n = nodes.shape[0]
        out = np.zeros((z.shape[0], n), dtype=z.dtype)
        for i in range(z.shape[0]):
            exact = -1
            for k in range(n):
                if z[i] == nodes[k]:
                    exact = k
                    break
            if exact >= 0:
                out[i, exact] = 1.0
                continue
            s = 0.0 * z[i]
            for k in range(n):
                c = weights[k] / (z[i] - nodes[k])
                out[i, k] = c
                s += c
            for k in range(n):
                out[i, k] /= s
        return out


def bary_matrix(nodes, weights, z):
    """Rows of the barycentric interpolation operator at the points ``z``."""
    z = np.ascontiguousarray(z)
    if not np.iscomplexobj(z):
        z = z.astype(float)
    if USE_NUMBA:
        return _bary_matrix_nb(nodes, weights, z)
    return bary_matrix_numpy(nodes, weights, z)


# --------------------------------------------------------------------------
# monotone polynomial root on a bracket
#
# Solves  sum_{k>=1} a_k t^k = target  for t in [lo, hi], one problem per
# row.  The constant term is absent by construction, which keeps the
# residual accurate relative to |target| near the anchor t = 0.
# --------------------------------------------------------------------------

def _horner(a, t):
    # p(t) = sum_k a[k] t^(k+1), dp/dt
    p = np.zeros_like(t)
    dp = np.zeros_like(t)
    for k in range(a.shape[1] - 1, -1, -1):
        dp = dp * t + (k + 1) * a[:, k]
        p = p * t + a[:, k]
    return p * t, dp


def solve_monotone_numpy(a, target, lo, hi):
    a = np.asarray(a, dtype=float)
    lo = np.asarray(lo, dtype=float).copy()
    hi = np.asarray(hi, dtype=float).copy()
    target = np.asarray(target, dtype=float)
    plo, _ = _horner(a, lo)
    phi, _ = _horner(a, hi)
    plo = plo - target
    phi = phi - target
    # orient so that h(xl) <= 0 <= h(xh)
    up = (plo < 0) | ((plo == 0) & (phi > 0))
    xl = np.where(up, lo, hi)
    xh = np.where(up, hi, lo)
    t = np.where(plo == 0, lo, np.where(phi == 0, hi, 0.5 * (lo + hi)))
    done = (plo == 0) | (phi == 0)
    for _ in range(_MAXIT):
        p, dp = _horner(a, t)
        h = p - target
        done |= h == 0
        xl = np.where((h < 0) & ~done, t, xl)
        xh = np.where((h > 0) & ~done, t, xh)
        with np.errstate(divide="ignore", invalid="ignore"):
            tn = t - h / dp
        inside = (tn - xl) * (tn - xh) <= 0
        tn = np.where(inside & np.isfinite(tn), tn, 0.5 * (xl + xh))
        small = np.abs(tn - t) <= 2 * _EPS * np.maximum(np.abs(tn), 1e-300)
        narrow = np.abs(xh - xl) <= 2 * _EPS * np.maximum(np.abs(xl), np.abs(xh))
        tn = np.where(done, t, tn)
        t = tn
        done |= small | narrow
        if done.all():
            break
    _, dp = _horner(a, t)
    return t, dp, done


if HAVE_NUMBA:
    @njit(cache=True)
    def _solve_monotone_nb(a, target, lo, hi):
        npts = a.shape[0]
        deg = a.shape[1]
        tout = np.empty(npts)
        dout = np.empty(npts)
        ok = np.zeros(npts, dtype=np.bool_)
        for i in range(npts):
            # h(lo)
            p = 0.0
            q = 0.0
            for k in range(deg - 1, -1, -1):
                p = p * lo[i] + a[i, k]
                q = q * hi[i] + a[i, k]
            hlo = p * lo[i] - target[i]
            hhi = q * hi[i] - target[i]
            if hlo < 0 or (hlo == 0 and hhi > 0):
                xl = lo[i]
                xh = hi[i]
            else:
                xl = hi[i]
                xh = lo[i]
            t = 0.5 * (lo[i] + hi[i])
            if hlo == 0.0:
                t = lo[i]
                ok[i] = True
            elif hhi == 0.0:
                t = hi[i]
                ok[i] = True
            dp = 0.0
            for _ in range(_MAXIT):
                if ok[i]:
                    break
                p = 0.0
                dp = 0.0
                for k in range(deg - 1, -1, -1):
                    dp = dp * t + (k + 1) * a[i, k]
                    p = p * t + a[i, k]
                h = p * t - target[i]
                if h == 0.0:
                    ok[i] = True
                    break
                if h < 0:
                    xl = t
                else:
                    xh = t
                if dp != 0.0:
                    tn = t - h / dp
                else:
                    tn = 0.5 * (xl + xh)
                if (tn - xl) * (tn - xh) > 0 or not np.isfinite(tn):
                    tn = 0.5 * (xl + xh)
                step = abs(tn - t)
                t = tn
                if step <= 2 * _EPS * max(abs(t), 1e-300):
                    ok[i] = True
                    break
                if abs(xh - xl) <= 2 * _EPS * max(abs(xl), abs(xh)):
                    ok[i] = True
                    break
            dp = 0.0
            for k in range(deg - 1, -1, -1):
                dp = dp * t + (k + 1) * a[i, k]
            tout[i] = t
            dout[i] = dp
        return tout, dout, ok


def solve_monotone(a, target, lo, hi):
    """Safeguarded Newton for ``sum_k a[:, k] t^(k+1) = target`` on [lo, hi].

    Returns ``(t, dp/dt at t, converged)`` arrays.
    """
    a = np.ascontiguousarray(a, dtype=float)
    target = np.ascontiguousarray(target, dtype=float)
    lo = np.ascontiguousarray(lo, dtype=float)
    hi = np.ascontiguousarray(hi, dtype=float)
    if USE_NUMBA:
        return _solve_monotone_nb(a, target, lo, hi)
    return solve_monotone_numpy(a, target, lo, hi)


def warmup():
    """Trigger JIT compilation of every kernel on tiny inputs."""
    x = np.array([0.5, -0.5])
    w = np.array([1.0, -1.0])
    bary_matrix(x, w, np.array([0.1]))
    bary_matrix(x, w, np.array([0.1 + 0.1j]))
    solve_monotone(np.array([[1.0, 0.5]]), np.array([0.2]),
                   np.array([0.0]), np.array([1.0]))
