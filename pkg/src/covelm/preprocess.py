"""Stage one: resize, min-max normalisation and CLAHE."""
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np

from . import _kernels
from .errors import InvalidInput

TARGET_SIZE = (512, 512)
DEFAULT_CLIP_LIMIT = 2.0
DEFAULT_TILES = (8, 8)
DEFAULT_BINS = 256
MIN_SIDE = 8


@dataclass(frozen=True)
class GrayImage:
    """A 2D float64 intensity matrix with a declared value range.

    Minimum sizes are operation specific (resize targets, CLAHE tiling,
    HOG blocks), so only non-emptiness is enforced here.
    """

    pixels: np.ndarray
    value_range: Tuple[float, float]

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=np.float64)
        if px.ndim != 2 or px.size == 0:
            raise InvalidInput(f"expected a non-empty 2D array, got shape {px.shape}")
        if not np.all(np.isfinite(px)):
            raise InvalidInput("image contains non-finite values")
        lo, hi = float(self.value_range[0]), float(self.value_range[1])
        if lo > hi:
            raise InvalidInput(f"invalid value range [{lo}, {hi}]")
        if px.min() < lo or px.max() > hi:
            raise InvalidInput(
                f"pixel values [{px.min()}, {px.max()}] fall outside declared range [{lo}, {hi}]"
            )
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)
        object.__setattr__(self, "value_range", (lo, hi))

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def shape(self) -> Tuple[int, int]:
        return self.pixels.shape


ImageLike = Union[GrayImage, np.ndarray]


def as_gray(img: ImageLike) -> GrayImage:
    """Wrap a bare array as a GrayImage whose range is its own [min, max]."""
    if isinstance(img, GrayImage):
        return img
    px = np.asarray(img, dtype=np.float64)
    if px.ndim != 2 or px.size == 0:
        raise InvalidInput(f"expected a non-empty 2D array, got shape {px.shape}")
    if not np.all(np.isfinite(px)):
        raise InvalidInput("image contains non-finite values")
    return GrayImage(px, (float(px.min()), float(px.max())))


def _axis_coords(n_in, n_out):
    """Corner-aligned source coordinates for bilinear sampling along one axis."""
    if n_out == 1 or n_in == 1:
        pos = np.zeros(n_out)
    else:
        pos = np.arange(n_out) * ((n_in - 1) / (n_out - 1))
    i0 = np.floor(pos).astype(np.int64)
    i0 = np.clip(i0, 0, n_in - 1)
    i1 = np.minimum(i0 + 1, n_in - 1)
    frac = pos - i0
    return i0, i1, frac


def resize(img: ImageLike, target_h: int, target_w: int) -> GrayImage:
    """Bilinear resize with corner-aligned sampling.

    The corner pixels of the output coincide with the corner pixels of the
    input, so resizing to the same shape is the identity map.
    """
    img = as_gray(img)
    if target_h < MIN_SIDE or target_w < MIN_SIDE:
        if (target_h, target_w) != img.shape:
            raise InvalidInput(f"target size {target_h}x{target_w} is below {MIN_SIDE}")
    if (target_h, target_w) == img.shape:
        return GrayImage(img.pixels.copy(), img.value_range)
    src = img.pixels
    r0, r1, fy = _axis_coords(img.height, target_h)
    c0, c1, fx = _axis_coords(img.width, target_w)
    rows = (1.0 - fy)[:, None] * src[r0, :] + fy[:, None] * src[r1, :]
    out = (1.0 - fx)[None, :] * rows[:, c0] + fx[None, :] * rows[:, c1]
    lo, hi = img.value_range
    # convex combinations can overshoot the range by an ulp
    np.clip(out, lo, hi, out=out)
    return GrayImage(out, img.value_range)


def min_max_normalize(img: ImageLike) -> GrayImage:
    """Map intensities affinely onto [0, 1]; a constant image maps to zeros."""
    img = as_gray(img)
    px = img.pixels
    lo, hi = px.min(), px.max()
    if hi == lo:
        return GrayImage(np.zeros_like(px), (0.0, 1.0))
    out = (px - lo) / (hi - lo)
    np.clip(out, 0.0, 1.0, out=out)
    return GrayImage(out, (0.0, 1.0))


def _tile_edges(n, tiles):
    size = n // tiles
    edges = np.arange(tiles + 1, dtype=np.int64) * size
    edges[-1] = n  # last tile absorbs the remainder
    return edges


def _interp_weights(n, edges):
    """Per-pixel (lower tile, upper tile, weight) along one axis."""
    centers = (edges[:-1] + edges[1:] - 1) / 2.0
    pos = np.arange(n, dtype=np.float64)
    last = len(centers) - 1
    hi = np.searchsorted(centers, pos, side="right")
    lo = np.clip(hi - 1, 0, last)
    hi = np.clip(hi, 0, last)
    span = centers[hi] - centers[lo]
    with np.errstate(invalid="ignore", divide="ignore"):
        w = np.where(span > 0, (pos - centers[lo]) / np.where(span > 0, span, 1.0), 0.0)
    return lo.astype(np.int64), hi.astype(np.int64), w


def quantize(px: np.ndarray, levels: int) -> np.ndarray:
    """floor(v * levels) clamped into [0, levels - 1]."""
    q = np.floor(px * levels).astype(np.int64)
    return np.clip(q, 0, levels - 1)


def equalization_maps(hist: np.ndarray, clip: float = None) -> np.ndarray:
    """Turn per-tile histograms (..., bins) into [0, 1] lookup tables.

    With ``clip`` set, counts above it are cut and the excess is spread
    evenly over all bins before the cumulative sum. The CDF is rebased at
    the lowest occupied bin so that the darkest level maps to 0; a tile
    whose mass sits in a single bin maps everything to 0.
    """
    hist = np.array(hist, dtype=np.float64)
    bins = hist.shape[-1]
    if clip is not None:
        excess = np.maximum(hist - clip, 0.0).sum(axis=-1, keepdims=True)
        hist = np.minimum(hist, clip) + excess / bins
    total = hist.sum(axis=-1, keepdims=True)
    cdf = np.cumsum(hist, axis=-1) / total
    first = np.argmax(hist > 0, axis=-1)[..., None]
    cdf_min = np.take_along_axis(cdf, first, axis=-1)
    denom = 1.0 - cdf_min
    safe = np.where(denom > 0, denom, 1.0)
    maps = np.where(denom > 0, (cdf - cdf_min) / safe, 0.0)
    return np.clip(maps, 0.0, 1.0)


def clahe(
    img: ImageLike,
    clip_limit: float = DEFAULT_CLIP_LIMIT,
    tiles: Tuple[int, int] = DEFAULT_TILES,
    bins: int = DEFAULT_BINS,
) -> GrayImage:
    """Contrast-limited adaptive histogram equalisation on a [0, 1] image.

    Parameters
    ----------
    clip_limit : float
        Clip height as a multiple of the uniform bin count
        ``tile_pixels / bins``.
    tiles : (int, int)
        Tile grid (rows, cols). Edge tiles absorb any remainder.
    bins : int
        Histogram resolution.
    """
    img = as_gray(img)
    px = img.pixels
    if px.min() < 0.0 or px.max() > 1.0:
        raise InvalidInput("clahe expects intensities in [0, 1]")
    if clip_limit <= 0:
        raise InvalidInput("clip_limit must be positive")
    if bins < 2:
        raise InvalidInput("bins must be at least 2")
    ty, tx = int(tiles[0]), int(tiles[1])
    if ty < 1 or tx < 1:
        raise InvalidInput("tile counts must be positive")
    h, w = px.shape
    if ty > h or tx > w:
        raise InvalidInput(f"{ty}x{tx} tiles do not fit a {h}x{w} image")

    bin_idx = quantize(px, bins)
    row_edges = _tile_edges(h, ty)
    col_edges = _tile_edges(w, tx)
    hist = _kernels.tile_histograms(bin_idx, row_edges, col_edges, bins)
    tile_pixels = np.diff(row_edges)[:, None, None] * np.diff(col_edges)[None, :, None]
    maps = equalization_maps(hist, clip=clip_limit * tile_pixels / bins)

    y0, y1, wy = _interp_weights(h, row_edges)
    x0, x1, wx = _interp_weights(w, col_edges)
    out = _kernels.clahe_interpolate(bin_idx, maps, y0, y1, wy, x0, x1, wx)
    np.clip(out, 0.0, 1.0, out=out)
    return GrayImage(out, (0.0, 1.0))


def preprocess_pipeline(
    img: ImageLike,
    clip_limit: float = DEFAULT_CLIP_LIMIT,
    tiles: Tuple[int, int] = DEFAULT_TILES,
    bins: int = DEFAULT_BINS,
    size: Tuple[int, int] = TARGET_SIZE,
) -> GrayImage:
    """resize -> min_max_normalize -> clahe."""
    out = resize(img, size[0], size[1])
    out = min_max_normalize(out)
    return clahe(out, clip_limit=clip_limit, tiles=tiles, bins=bins)


def to_gray_array(raw: np.ndarray) -> np.ndarray:
    """Decode a raster array to float intensities.

    Integer types are divided by their type maximum. Colour (H, W, 3|4)
    inputs are reduced to luminance with Rec. 601 weights; alpha is dropped.
    """
    arr = np.asarray(raw)
    if np.issubdtype(arr.dtype, np.integer):
        scale = float(np.iinfo(arr.dtype).max)
        # 16-bit rasters often arrive widened to int32 by the decoder
        if arr.dtype.itemsize > 2 and arr.size and arr.max() <= 65535 and arr.min() >= 0:
            scale = 65535.0
        data = arr.astype(np.float64) / scale
    elif arr.dtype == np.bool_:
        data = arr.astype(np.float64)
    else:
        data = arr.astype(np.float64)
    if data.ndim == 3:
        if data.shape[2] == 1:
            data = data[:, :, 0]
        elif data.shape[2] in (3, 4):
            data = 0.299 * data[:, :, 0] + 0.587 * data[:, :, 1] + 0.114 * data[:, :, 2]
        else:
            raise InvalidInput(f"unsupported channel count {data.shape[2]}")
    if data.ndim != 2:
        raise InvalidInput(f"cannot interpret array of shape {arr.shape} as an image")
    return data
