"""Ground-truth density maps from point annotations.

Each annotated point contributes one small Gaussian stamp.  Stamps are
renormalized to sum to exactly 1 after border truncation, so the integral
of the map always equals the number of points; the full-resolution map is
then block-summed down to the network's output stride, which preserves the
integral exactly.
"""

import struct
import zlib
from dataclasses import dataclass

import numpy as np

from .errors import ShapeError, ValidationError

DEFAULT_KERNEL_SIZE = 4
DEFAULT_SIGMA = 1.0
DEFAULT_STRIDE = 32

_DMAP_MAGIC = b"SDMP"
_DMAP_VERSION = 1


@dataclass
class DensityMap:
    """Spatial grid whose cell values integrate to an object count.

    ``stride`` records how many input pixels each cell covers per axis.
    Ground-truth maps are elementwise non-negative; predicted maps carry
    whatever the network emitted.
    """

    values: np.ndarray
    stride: int = DEFAULT_STRIDE

    @property
    def shape(self):
        return self.values.shape


def _gaussian_stamp(size, sigma):
    """size x size Gaussian on integer offsets, normalized to sum 1.

    For even sizes the center sits at index ``size // 2 - 1``, i.e. the
    stamp extends one row/column further down-right than up-left (half-pixel
    bias of the even grid; documented behaviour).
    """
    center = (size - 1) // 2
    offs = np.arange(size) - center
    d2 = offs[:, None] ** 2 + offs[None, :] ** 2
    k = np.exp(-d2 / (2.0 * sigma * sigma))
    return k / k.sum(), center


def _full_resolution_density(points, image_h, image_w, s, sigma):
    full = np.zeros((image_h, image_w), dtype=np.float64)
    kernel, center = _gaussian_stamp(s, sigma)
    for x, y in points:
        cy = min(max(int(np.floor(y + 0.5)), 0), image_h - 1)
        cx = min(max(int(np.floor(x + 0.5)), 0), image_w - 1)
        y0, y1 = cy - center, cy - center + s
        x0, x1 = cx - center, cx - center + s
        ky0, kx0 = max(0, -y0), max(0, -x0)
        ky1 = s - max(0, y1 - image_h)
        kx1 = s - max(0, x1 - image_w)
        patch = kernel[ky0:ky1, kx0:kx1]
        # renormalize the truncated stamp so each point contributes mass 1
        full[max(0, y0):min(y1, image_h), max(0, x0):min(x1, image_w)] += (
            patch / patch.sum()
        )
    return full


def make_density(points, image_h, image_w, s=DEFAULT_KERNEL_SIZE,
                 sigma=DEFAULT_SIGMA, stride=DEFAULT_STRIDE):
    """Build the ground-truth density map for a set of point annotations.

    The map is produced at ``(image_h // stride, image_w // stride)``
    resolution by block-summing the full-resolution stamp accumulation, so
    ``integrate_count`` of the result equals ``len(points)`` up to float
    accumulation error.
    """
    if s < 1:
        raise ValidationError(f"kernel size must be >= 1, got {s}",
                              module="densitymap")
    if sigma <= 0:
        raise ValidationError(f"sigma must be > 0, got {sigma}",
                              module="densitymap")
    if image_h % stride or image_w % stride:
        raise ShapeError(
            f"stride {stride} does not divide image size "
            f"{image_h}x{image_w}", module="densitymap")
    full = _full_resolution_density(points, image_h, image_w, s, sigma)
    hs, ws = image_h // stride, image_w // stride
    values = full.reshape(hs, stride, ws, stride).sum(axis=(1, 3))
    return DensityMap(values=values, stride=stride)


def integrate_count(dmap):
    """Total count represented by a density map (sum of all cells)."""
    values = dmap.values if isinstance(dmap, DensityMap) else np.asarray(dmap)
    return float(values.sum())


# ---------------------------------------------------------------------------
# Binary map files ("densify" output): little-endian header + f32 grid + CRC
# ---------------------------------------------------------------------------

def save_density(dmap, path):
    """Write a density map as magic/version/H'/W' header plus f32 cells."""
    values = np.ascontiguousarray(dmap.values, dtype="<f4")
    h, w = values.shape
    payload = values.tobytes()
    with open(path, "wb") as fh:
        fh.write(_DMAP_MAGIC)
        fh.write(struct.pack("<III", _DMAP_VERSION, h, w))
        fh.write(payload)
        fh.write(struct.pack("<I", zlib.crc32(payload)))


def load_density(path, stride=DEFAULT_STRIDE):
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != _DMAP_MAGIC:
        raise ValidationError(f"{path}: not a density map file",
                              module="densitymap")
    version, h, w = struct.unpack_from("<III", blob, 4)
    if version != _DMAP_VERSION:
        raise ValidationError(
            f"{path}: unsupported density map version {version}",
            module="densitymap")
    payload = blob[16:16 + 4 * h * w]
    (crc,) = struct.unpack_from("<I", blob, 16 + 4 * h * w)
    if zlib.crc32(payload) != crc:
        raise ValidationError(f"{path}: density map payload corrupt",
                              module="densitymap")
    values = np.frombuffer(payload, dtype="<f4").reshape(h, w).astype(np.float64)
    return DensityMap(values=values, stride=stride)
