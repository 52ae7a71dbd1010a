"""Stage two: the 168-element texture + frequency feature vector.

Layout (0-based offsets, 14 statistics per block)::

    [  0: 14)  spatial image
    [ 14: 70)  GLCM at 0, 45, 90, 135 degrees
    [ 70:126)  GLDM along (0,1), (1,1), (1,0), (1,-1)
    [126:140)  HOG descriptor
    [140:154)  FFT log-magnitude
    [154:168)  Haar DWT level-3 approximation
"""
import hashlib
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from . import _kernels
from .errors import InvalidInput
from .preprocess import GrayImage, ImageLike, as_gray, quantize

STAT_NAMES = (
    "area",
    "mean",
    "standard_deviation",
    "skewness",
    "kurtosis",
    "energy",
    "entropy",
    "max",
    "min",
    "mean_absolute_deviation",
    "median",
    "range",
    "root_mean_square",
    "uniformity",
)
N_STATS = len(STAT_NAMES)
HIST_BINS = 256

GLCM_LEVELS = 32
GLCM_DISTANCE = 1
GLCM_ANGLES = (0, 45, 90, 135)
GLDM_DIRECTIONS = ((0, 1), (1, 1), (1, 0), (1, -1))

HOG_CELL = (16, 16)
HOG_BLOCK = (2, 2)
HOG_BINS = 9
HOG_EPS = 1e-5
HOG_CLIP = 0.2

N_TEXTURE = 140
N_FREQUENCY = 28
N_FEATURES = N_TEXTURE + N_FREQUENCY
SUBSETS = ("texture", "frequency", "combined")


@dataclass(frozen=True)
class StatBlock:
    area: float
    mean: float
    standard_deviation: float
    skewness: float
    kurtosis: float
    energy: float
    entropy: float
    max: float
    min: float
    mean_absolute_deviation: float
    median: float
    range: float
    root_mean_square: float
    uniformity: float

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in STAT_NAMES])


def histogram_probabilities(v: np.ndarray, bins: int = HIST_BINS) -> np.ndarray:
    """Occupancy fractions of ``bins`` equal-width bins spanning [min, max]."""
    lo, hi = v.min(), v.max()
    if hi == lo:
        return np.array([1.0])
    idx = np.floor((v - lo) * (bins / (hi - lo))).astype(np.int64)
    np.clip(idx, 0, bins - 1, out=idx)
    return np.bincount(idx, minlength=bins) / v.size


def stat_block(values) -> StatBlock:
    """The 14 first-order statistics of a collection of reals.

    Population moments are used throughout; skewness and kurtosis of a
    zero-variance input are defined as 0. Entropy (bits) and uniformity
    come from a 256-bin histogram over the observed value range.
    """
    v = np.asarray(values, dtype=np.float64).ravel()
    if v.size == 0:
        raise InvalidInput("stat_block needs at least one value")
    if not np.all(np.isfinite(v)):
        raise InvalidInput("stat_block input contains non-finite values")
    n = v.size
    mean = v.mean()
    d = v - mean
    m2 = np.mean(d * d)
    vmax, vmin = v.max(), v.min()
    if vmax == vmin:
        std = skew = kurt = 0.0
    else:
        std = np.sqrt(m2)
        skew = np.mean(d**3) / m2**1.5
        kurt = np.mean(d**4) / m2**2
    p = histogram_probabilities(v)
    p = p[p > 0]
    entropy = float(-np.sum(p * np.log2(p))) if p.size > 1 else 0.0
    energy = float(np.dot(v, v))
    return StatBlock(
        area=float(np.count_nonzero(v > 0)),
        mean=float(mean),
        standard_deviation=float(std),
        skewness=float(skew),
        kurtosis=float(kurt),
        energy=energy,
        entropy=entropy,
        max=float(vmax),
        min=float(vmin),
        mean_absolute_deviation=float(np.mean(np.abs(d))),
        median=float(np.median(v)),
        range=float(vmax - vmin),
        root_mean_square=float(np.sqrt(energy / n)),
        uniformity=float(np.sum(p * p)),
    )


def _angle_offset(angle: int, distance: int) -> Tuple[int, int]:
    # row offsets point up the image for the diagonal/vertical angles
    offsets = {0: (0, 1), 45: (-1, 1), 90: (-1, 0), 135: (-1, -1)}
    if angle not in offsets:
        raise InvalidInput(f"angle must be one of {sorted(offsets)}, got {angle}")
    dy, dx = offsets[angle]
    return dy * distance, dx * distance


def glcm(img: ImageLike, quant_levels: int = GLCM_LEVELS, distance: int = GLCM_DISTANCE, angle: int = 0) -> np.ndarray:
    """Normalised symmetric grey-level co-occurrence matrix."""
    px = as_gray(img).pixels
    if quant_levels < 2:
        raise InvalidInput("quant_levels must be at least 2")
    if distance < 1:
        raise InvalidInput("distance must be at least 1")
    if px.min() < 0.0 or px.max() > 1.0:
        raise InvalidInput("glcm expects intensities in [0, 1]")
    dy, dx = _angle_offset(angle, distance)
    h, w = px.shape
    if abs(dy) >= h or abs(dx) >= w:
        raise InvalidInput(f"{h}x{w} image is too small for displacement ({dy}, {dx})")
    q = quantize(px, quant_levels)
    counts = _kernels.cooccurrence(q, dy, dx, quant_levels)
    counts = counts + counts.T
    return counts / counts.sum()


def gldm(img: ImageLike, direction: Tuple[int, int] = (0, 1)) -> np.ndarray:
    """Absolute grey-level difference map |I(p) - I(p + direction)|."""
    px = as_gray(img).pixels
    dy, dx = int(direction[0]), int(direction[1])
    if (dy, dx) not in GLDM_DIRECTIONS:
        raise InvalidInput(f"direction must be one of {GLDM_DIRECTIONS}")
    h, w = px.shape
    if h < 2 or w < 2:
        raise InvalidInput("gldm needs an image of at least 2x2")
    c_lo, c_hi = max(0, -dx), w - max(0, dx)
    a = px[0:h - dy, c_lo:c_hi]
    b = px[dy:h, c_lo + dx:c_hi + dx]
    return np.abs(a - b)


def _gradients(px):
    gx = np.zeros_like(px)
    gy = np.zeros_like(px)
    gx[:, 1:-1] = px[:, 2:] - px[:, :-2]
    gy[1:-1, :] = px[2:, :] - px[:-2, :]
    return gx, gy


def hog_descriptor(
    img: ImageLike,
    cell: Tuple[int, int] = HOG_CELL,
    block: Tuple[int, int] = HOG_BLOCK,
    bins: int = HOG_BINS,
) -> np.ndarray:
    """Histogram of oriented gradients with L2-Hys block normalisation.

    Gradients are ``[-1, 0, 1]`` central differences (zero on the border).
    Orientation is unsigned in [0, 180); bin ``k`` is centred on
    ``k * 180 / bins`` degrees and each pixel splits its magnitude linearly
    between the two nearest centres, wrapping at 180. Blocks slide one cell
    at a time.
    """
    px = as_gray(img).pixels
    if bins < 2:
        raise InvalidInput("bins must be at least 2")
    ch, cw = int(cell[0]), int(cell[1])
    by, bx = int(block[0]), int(block[1])
    h, w = px.shape
    n_cy, n_cx = h // ch, w // cw
    if n_cy < by or n_cx < bx:
        raise InvalidInput(f"{h}x{w} image is smaller than one {by}x{bx}-cell block of {ch}x{cw} cells")

    gx, gy = _gradients(px)
    mag = np.hypot(gx, gy)
    theta = np.rad2deg(np.arctan2(gy, gx)) % 180.0
    pos = theta * (bins / 180.0)
    bin_lo = np.floor(pos).astype(np.int64)
    frac = pos - bin_lo
    bin_lo %= bins
    cells = _kernels.cell_histograms(mag, bin_lo, frac, ch, cw, n_cy, n_cx, bins)

    n_by, n_bx = n_cy - by + 1, n_cx - bx + 1
    blocks = np.empty((n_by, n_bx, by, bx, bins))
    for i in range(by):
        for j in range(bx):
            blocks[:, :, i, j, :] = cells[i:i + n_by, j:j + n_bx, :]
    blocks = blocks.reshape(n_by, n_bx, -1)
    eps2 = HOG_EPS**2
    blocks = blocks / np.sqrt(np.sum(blocks**2, axis=-1, keepdims=True) + eps2)
    np.minimum(blocks, HOG_CLIP, out=blocks)
    blocks = blocks / np.sqrt(np.sum(blocks**2, axis=-1, keepdims=True) + eps2)
    return blocks.ravel()


def hog_length(shape, cell=HOG_CELL, block=HOG_BLOCK, bins=HOG_BINS) -> int:
    n_cy, n_cx = shape[0] // cell[0], shape[1] // cell[1]
    return (n_cy - block[0] + 1) * (n_cx - block[1] + 1) * block[0] * block[1] * bins


def fft_spectrum(img: ImageLike) -> np.ndarray:
    """Centred complex 2D DFT (DC at index ``(H // 2, W // 2)``)."""
    px = as_gray(img).pixels
    return np.fft.fftshift(np.fft.fft2(px))


def fft_magnitude(img: ImageLike, log: bool = True) -> np.ndarray:
    """Centred magnitude spectrum, ``log(1 + |F|)`` unless ``log=False``."""
    mag = np.abs(fft_spectrum(img))
    return np.log1p(mag) if log else mag


def haar_dwt2(x: np.ndarray):
    """One level of the orthonormal 2D Haar transform.

    Returns ``(LL, (LH, HL, HH))``, each half the size of ``x`` per axis.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape[0] % 2 or x.shape[1] % 2:
        raise InvalidInput(f"haar_dwt2 needs even dimensions, got {x.shape}")
    a = x[0::2, 0::2]
    b = x[0::2, 1::2]
    c = x[1::2, 0::2]
    d = x[1::2, 1::2]
    ll = (a + b + c + d) / 2.0
    lh = (a + b - c - d) / 2.0
    hl = (a - b + c - d) / 2.0
    hh = (a - b - c + d) / 2.0
    return ll, (lh, hl, hh)


def haar_wavedec2(x: np.ndarray, levels: int = 3):
    """Multi-level decomposition ``[LL_n, details_n, ..., details_1]``."""
    details = []
    approx = np.asarray(x, dtype=np.float64)
    for _ in range(levels):
        approx, det = haar_dwt2(approx)
        details.append(det)
    return [approx] + details[::-1]


def dwt_ll3(img: ImageLike) -> np.ndarray:
    px = as_gray(img).pixels
    if px.shape[0] % 8 or px.shape[1] % 8:
        raise InvalidInput(f"dwt_ll3 needs dimensions divisible by 8, got {px.shape}")
    return haar_wavedec2(px, 3)[0]


def feature_maps(img: ImageLike) -> List[Tuple[str, np.ndarray]]:
    """The twelve (family, map) pairs whose StatBlocks form the vector."""
    img = as_gray(img)
    maps = [("spatial", img.pixels)]
    for angle in GLCM_ANGLES:
        maps.append((f"glcm{angle}", glcm(img, angle=angle)))
    for dy, dx in GLDM_DIRECTIONS:
        maps.append((f"gldm{dy}{dx}", gldm(img, (dy, dx))))
    maps.append(("hog", hog_descriptor(img)))
    maps.append(("fft", fft_magnitude(img)))
    maps.append(("dwt_ll3", dwt_ll3(img)))
    return maps


def extract_features(img: ImageLike) -> np.ndarray:
    """168-element feature vector in the documented layout."""
    blocks = [stat_block(m).as_array() for _, m in feature_maps(img)]
    vec = np.concatenate(blocks)
    if vec.shape != (N_FEATURES,):
        raise AssertionError(f"feature layout produced {vec.shape[0]} values")
    if not np.all(np.isfinite(vec)):
        raise InvalidInput("feature extraction produced non-finite values")
    return vec


def select_subset(v: np.ndarray, subset: str) -> np.ndarray:
    """Slice the last axis: texture (140), frequency (28) or combined (168)."""
    v = np.asarray(v)
    if subset == "texture":
        return v[..., :N_TEXTURE]
    if subset == "frequency":
        return v[..., N_TEXTURE:]
    if subset == "combined":
        return v
    raise InvalidInput(f"unknown subset {subset!r}; expected one of {SUBSETS}")


def subset_indices(subset: str) -> np.ndarray:
    return select_subset(np.arange(N_FEATURES), subset)


def _family_labels():
    fams = [("spatial", "none")]
    fams += [("glcm", f"{a}deg") for a in GLCM_ANGLES]
    fams += [("gldm", f"d{dy}_{dx}".replace("-", "m")) for dy, dx in GLDM_DIRECTIONS]
    fams += [("hog", "none"), ("fft", "none"), ("dwt_ll3", "none")]
    return fams


def feature_names() -> List[str]:
    """Column names ``family.orientation.statistic`` in vector order."""
    return [f"{fam}.{orient}.{stat}" for fam, orient in _family_labels() for stat in STAT_NAMES]


def _layout_signature() -> str:
    params = (
        f"glcm:levels={GLCM_LEVELS},distance={GLCM_DISTANCE};"
        f"hog:cell={HOG_CELL},block={HOG_BLOCK},bins={HOG_BINS},eps={HOG_EPS};"
        f"hist_bins={HIST_BINS};fft=log1p;dwt=haar3"
    )
    return params + "\n" + "\n".join(feature_names())


LAYOUT_DIGEST = hashlib.sha256(_layout_signature().encode("utf-8")).hexdigest()[:16]
