"""Hot inner loops, each in two flavours.

Every kernel exists as a numba ``@njit`` loop and as a vectorised numpy
function with the same signature. The module-level names dispatch to the
numba version unless ``COVELM_DISABLE_NUMBA`` is set to a truthy value
(or numba cannot be imported). Both flavours are importable directly as
``NUMBA_KERNELS`` / ``NUMPY_KERNELS`` for testing and benchmarking.
"""
import os

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

_FLAG = os.environ.get("COVELM_DISABLE_NUMBA", "").strip().lower()
USE_NUMBA = HAVE_NUMBA and _FLAG not in ("1", "true", "yes", "on")

# rows per chunk in the numpy RBF path; bounds the (chunk, L, n) temporary
_RBF_CHUNK = 64


# --------------------------------------------------------------------------
# numpy implementations
# --------------------------------------------------------------------------

def tile_histograms_np(bin_idx, row_edges, col_edges, bins):
    ty = len(row_edges) - 1
    tx = len(col_edges) - 1
    h, w = bin_idx.shape
    tile_r = np.repeat(np.arange(ty), np.diff(row_edges))
    tile_c = np.repeat(np.arange(tx), np.diff(col_edges))
    tile_id = tile_r[:, None] * tx + tile_c[None, :]
    flat = (tile_id * bins + bin_idx).ravel()
    counts = np.bincount(flat, minlength=ty * tx * bins)
    return counts.reshape(ty, tx, bins).astype(np.float64)


def clahe_interpolate_np(bin_idx, maps, y0, y1, wy, x0, x1, wx):
    r0 = y0[:, None]
    r1 = y1[:, None]
    c0 = x0[None, :]
    c1 = x1[None, :]
    fy = wy[:, None]
    fx = wx[None, :]
    top = (1.0 - fx) * maps[r0, c0, bin_idx] + fx * maps[r0, c1, bin_idx]
    bot = (1.0 - fx) * maps[r1, c0, bin_idx] + fx * maps[r1, c1, bin_idx]
    return (1.0 - fy) * top + fy * bot


def cooccurrence_np(q, dy, dx, levels):
    h, w = q.shape
    r_lo, r_hi = max(0, -dy), min(h, h - dy)
    c_lo, c_hi = max(0, -dx), min(w, w - dx)
    src = q[r_lo:r_hi, c_lo:c_hi]
    dst = q[r_lo + dy:r_hi + dy, c_lo + dx:c_hi + dx]
    flat = (src * levels + dst).ravel()
    counts = np.bincount(flat, minlength=levels * levels)
    return counts.reshape(levels, levels).astype(np.float64)


def cell_histograms_np(mag, bin_lo, frac, cell_h, cell_w, n_cy, n_cx, bins):
    h = n_cy * cell_h
    w = n_cx * cell_w
    mag = mag[:h, :w]
    bin_lo = bin_lo[:h, :w]
    frac = frac[:h, :w]
    bin_hi = (bin_lo + 1) % bins
    cell = (np.arange(h) // cell_h)[:, None] * n_cx + (np.arange(w) // cell_w)[None, :]
    base = cell * bins
    idx = np.concatenate(((base + bin_lo).ravel(), (base + bin_hi).ravel()))
    wts = np.concatenate(((mag * (1.0 - frac)).ravel(), (mag * frac).ravel()))
    hist = np.bincount(idx, weights=wts, minlength=n_cy * n_cx * bins)
    return hist.reshape(n_cy, n_cx, bins)


def rbf_hidden_np(X, A, b):
    n_rows = X.shape[0]
    out = np.empty((n_rows, A.shape[0]))
    for start in range(0, n_rows, _RBF_CHUNK):
        stop = min(start + _RBF_CHUNK, n_rows)
        diff = X[start:stop, None, :] - A[None, :, :]
        d2 = np.einsum("ijk,ijk->ij", diff, diff)
        out[start:stop] = np.exp(-b[None, :] * d2)
    return out


NUMPY_KERNELS = {
    "tile_histograms": tile_histograms_np,
    "clahe_interpolate": clahe_interpolate_np,
    "cooccurrence": cooccurrence_np,
    "cell_histograms": cell_histograms_np,
    "rbf_hidden": rbf_hidden_np,
}


# --------------------------------------------------------------------------
# numba implementations
# --------------------------------------------------------------------------

if HAVE_NUMBA:

    @njit(cache=True, nogil=True)
    def tile_histograms_nb(bin_idx, row_edges, col_edges, bins):
        ty = row_edges.shape[0] - 1
        tx = col_edges.shape[0] - 1
        out = np.zeros((ty, tx, bins))
        for ti in range(ty):
            for tj in range(tx):
                for r in range(row_edges[ti], row_edges[ti + 1]):
                    for c in range(col_edges[tj], col_edges[tj + 1]):
                        out[ti, tj, bin_idx[r, c]] += 1.0
        return out

    @njit(cache=True, nogil=True)
    def clahe_interpolate_nb(bin_idx, maps, y0, y1, wy, x0, x1, wx):
        h, w = bin_idx.shape
        out = np.empty((h, w))
        for r in range(h):
            fy = wy[r]
            a = y0[r]
            b = y1[r]
            for c in range(w):
                k = bin_idx[r, c]
                fx = wx[c]
                top = (1.0 - fx) * maps[a, x0[c], k] + fx * maps[a, x1[c], k]
                bot = (1.0 - fx) * maps[b, x0[c], k] + fx * maps[b, x1[c], k]
                out[r, c] = (1.0 - fy) * top + fy * bot
        return out

    @njit(cache=True, nogil=True)
    def cooccurrence_nb(q, dy, dx, levels):
        h, w = q.shape
        out = np.zeros((levels, levels))
        r_lo, r_hi = max(0, -dy), min(h, h - dy)
        c_lo, c_hi = max(0, -dx), min(w, w - dx)
        for r in range(r_lo, r_hi):
            for c in range(c_lo, c_hi):
                out[q[r, c], q[r + dy, c + dx]] += 1.0
        return out

    @njit(cache=True, nogil=True)
    def cell_histograms_nb(mag, bin_lo, frac, cell_h, cell_w, n_cy, n_cx, bins):
        hist = np.zeros((n_cy, n_cx, bins))
        # two passes to keep accumulation order equal to the numpy path
        for r in range(n_cy * cell_h):
            for c in range(n_cx * cell_w):
                hist[r // cell_h, c // cell_w, bin_lo[r, c]] += mag[r, c] * (1.0 - frac[r, c])
        for r in range(n_cy * cell_h):
            for c in range(n_cx * cell_w):
                k = (bin_lo[r, c] + 1) % bins
                hist[r // cell_h, c // cell_w, k] += mag[r, c] * frac[r, c]
        return hist

    @njit(cache=True, nogil=True)
    def rbf_hidden_nb(X, A, b):
        n_rows, n_feat = X.shape
        n_hidden = A.shape[0]
        out = np.empty((n_rows, n_hidden))
        for j in range(n_rows):
            for i in range(n_hidden):
                acc = 0.0
                for k in range(n_feat):
                    d = X[j, k] - A[i, k]
                    acc += d * d
                out[j, i] = np.exp(-b[i] * acc)
        return out

    NUMBA_KERNELS = {
        "tile_histograms": tile_histograms_nb,
        "clahe_interpolate": clahe_interpolate_nb,
        "cooccurrence": cooccurrence_nb,
        "cell_histograms": cell_histograms_nb,
        "rbf_hidden": rbf_hidden_nb,
    }
else:  # pragma: no cover
    NUMBA_KERNELS = {}

ACTIVE = NUMBA_KERNELS if USE_NUMBA else NUMPY_KERNELS
BACKEND = "numba" if USE_NUMBA else "numpy"

tile_histograms = ACTIVE["tile_histograms"]
clahe_interpolate = ACTIVE["clahe_interpolate"]
cooccurrence = ACTIVE["cooccurrence"]
cell_histograms = ACTIVE["cell_histograms"]
rbf_hidden = ACTIVE["rbf_hidden"]
