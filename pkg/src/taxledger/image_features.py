"""Image branch: 2560-d two-scale cell statistics, or precomputed vectors.

The baseline replaces a pretrained convolutional backbone while keeping
its 2,560-dimensional interface. Features are exact area averages over a
16x16 cell grid computed at two scales (full frame and center crop), five
statistics per cell:

    mean R, mean G, mean B, luminance std, mean gradient magnitude

2 scales x 16 x 16 cells x 5 stats = 2560 values. Each of the 10 feature
planes is standardised to zero mean / unit variance within the image, so
global brightness and contrast cancel out.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from . import sidecar
from .rng import CounterStream

IMAGE_DIM = 2560
GRID = 16
_PLANES_PER_SCALE = 5
_NOISE_SIZE = 64

# Rec. 601 luma weights
_LUMA = np.array([0.299, 0.587, 0.114])


class ImageDecodeError(ValueError):
    pass


class TooSmall(ValueError):
    def __init__(self, height: int, width: int):
        super().__init__(f"image must be at least 2x2, got {height}x{width}")
        self.height = height
        self.width = width


class ImageSource(Enum):
    BASELINE_STATS = "baseline_stats"
    PRECOMPUTED = "precomputed"
    NOISE_PLACEHOLDER = "noise_placeholder"


@dataclass(frozen=True)
class ImageVector:
    values: np.ndarray
    source: ImageSource

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.shape != (IMAGE_DIM,):
            raise sidecar.DimensionError(int(vals.size), IMAGE_DIM)
        if not np.all(np.isfinite(vals)):
            raise ValueError("image feature vector contains non-finite values")
        object.__setattr__(self, "values", vals)


def decode_image(data: bytes) -> np.ndarray:
    """PNG/BMP (or anything Pillow reads) to an HxWx3 uint8 RGB array."""
    try:
        with Image.open(io.BytesIO(data)) as img:
            rgb = img.convert("RGB")
            return np.asarray(rgb, dtype=np.uint8)
    except (UnidentifiedImageError, OSError, ValueError) as exc:
        raise ImageDecodeError(f"cannot decode image bytes: {exc}") from exc


def encode_png(pixels: np.ndarray) -> bytes:
    """Deterministic PNG encoding of an HxWx3 uint8 array."""
    img = Image.fromarray(np.asarray(pixels, dtype=np.uint8), mode="RGB")
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


def _area_weights(n_src: int, n_cells: int) -> np.ndarray:
    """(n_cells, n_src) fractional-overlap weights for exact area averaging.

    Cell k covers [k*n_src/n_cells, (k+1)*n_src/n_cells); pixel r covers
    [r, r+1). Entry (k, r) is their overlap length, so rows sum to the
    cell width and W @ values / width is an exact area average.
    """
    scale = n_src / n_cells
    weights = np.zeros((n_cells, n_src))
    for k in range(n_cells):
        lo = k * scale
        hi = (k + 1) * scale
        r0 = int(np.floor(lo))
        r1 = min(int(np.ceil(hi)), n_src)
        for r in range(r0, r1):
            weights[k, r] = min(hi, r + 1) - max(lo, r)
    return weights


def _cell_average(plane: np.ndarray, wy: np.ndarray, wx: np.ndarray, inv_area: float) -> np.ndarray:
    return (wy @ plane @ wx.T) * inv_area


def _gradient_magnitude(lum: np.ndarray) -> np.ndarray:
    # central differences inside, one-sided at borders; 0 along axes of size 1
    if lum.shape[0] >= 2:
        gy = np.gradient(lum, axis=0)
    else:
        gy = np.zeros_like(lum)
    if lum.shape[1] >= 2:
        gx = np.gradient(lum, axis=1)
    else:
        gx = np.zeros_like(lum)
    return np.sqrt(gx * gx + gy * gy)


def _scale_planes(pixels: np.ndarray) -> np.ndarray:
    """The five 16x16 stat planes for one scale; shape (5, 16, 16)."""
    h, w = pixels.shape[:2]
    wy = _area_weights(h, GRID)
    wx = _area_weights(w, GRID)
    inv_area = 1.0 / ((h / GRID) * (w / GRID))

    lum = pixels @ _LUMA
    planes = np.empty((_PLANES_PER_SCALE, GRID, GRID))
    for c in range(3):
        planes[c] = _cell_average(pixels[:, :, c], wy, wx, inv_area)
    mean_l = _cell_average(lum, wy, wx, inv_area)
    mean_l2 = _cell_average(lum * lum, wy, wx, inv_area)
    planes[3] = np.sqrt(np.maximum(mean_l2 - mean_l * mean_l, 0.0))
    planes[4] = _cell_average(_gradient_magnitude(lum), wy, wx, inv_area)
    return planes


def _standardize(plane: np.ndarray) -> np.ndarray:
    mean = plane.mean()
    std = plane.std()
    if std == 0.0:
        return np.zeros_like(plane)
    return (plane - mean) / std


def image_to_features(pixels: np.ndarray) -> ImageVector:
    """Two-scale cell statistics of an HxWx3 RGB image (H, W >= 2).

    Scale 1 is the full frame, scale 2 the centered crop of half the
    height and width. Plane order per scale: mean R, mean G, mean B,
    luminance std, gradient magnitude; cells row-major; full-frame planes
    precede crop planes.
    """
    arr = np.asarray(pixels)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ImageDecodeError(f"expected HxWx3 RGB array, got shape {arr.shape}")
    h, w = arr.shape[:2]
    if h < 2 or w < 2:
        raise TooSmall(h, w)
    img = arr.astype(np.float64) / 255.0 if arr.dtype == np.uint8 else arr.astype(np.float64)

    ch, cw = h // 2, w // 2
    top, left = (h - ch) // 2, (w - cw) // 2
    crop = img[top : top + ch, left : left + cw]

    planes = np.concatenate([_scale_planes(img), _scale_planes(crop)])
    out = np.empty(IMAGE_DIM)
    for p in range(planes.shape[0]):
        out[p * GRID * GRID : (p + 1) * GRID * GRID] = _standardize(planes[p]).ravel()
    return ImageVector(values=out, source=ImageSource.BASELINE_STATS)


def noise_pixels(seed: int, size: int = _NOISE_SIZE) -> np.ndarray:
    """Seeded uniform-noise RGB image used in place of video frames."""
    stream = CounterStream(seed)
    values = stream.uniform((size, size, 3))
    return (values * 256.0).clip(0, 255).astype(np.uint8)


def video_placeholder_features(seed: int) -> ImageVector:
    """Features of the seeded noise substitute for a video post."""
    feats = image_to_features(noise_pixels(seed))
    return ImageVector(values=feats.values, source=ImageSource.NOISE_PLACEHOLDER)


def zeroed_placeholder_features() -> ImageVector:
    """All-zero image branch; the alternative video policy to noise."""
    return ImageVector(values=np.zeros(IMAGE_DIM), source=ImageSource.NOISE_PLACEHOLDER)


def load_image_embedding(path: Path | str, post_id: str) -> ImageVector:
    """A precomputed 2560-d vector from a sidecar file."""
    values = sidecar.load_vector(path, post_id, IMAGE_DIM)
    return ImageVector(values=values, source=ImageSource.PRECOMPUTED)
