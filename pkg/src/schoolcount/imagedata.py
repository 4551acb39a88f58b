"""Image/annotation ingestion, geometric preprocessing, and dataset splits.

Conventions used throughout the package:

* point coordinates are pixel-center positions: a point at ``x = j`` sits
  on the center of pixel column ``j``; valid range is ``[0, W)``;
* noise boxes are edge coordinates in continuous pixel space:
  ``[x0, x1) x [y0, y1)`` with ``0 <= x0 < x1 <= W``;
* crops keep points with ``0 <= x < crop_w`` (closed lower bound, open
  upper bound) and keep boxes that overlap the crop, clipped to it.
"""

import json
from dataclasses import dataclass, field, replace

import numpy as np

from .densitymap import integrate_count  # noqa: F401  (re-exported for demos)
from .errors import AnnotationError, ValidationError
from .seeding import rng_for

NOISE_KINDS = ("dolphin", "net", "other")


@dataclass
class RawImage:
    """8-bit 3-channel image plus physical metadata."""

    pixels: np.ndarray
    meters_per_pixel: float = 0.0125
    source_id: str = ""

    def __post_init__(self):
        p = np.asarray(self.pixels)
        if p.ndim != 3 or p.shape[2] != 3 or p.shape[0] < 1 or p.shape[1] < 1:
            raise ValidationError(
                f"image must be HxWx3, got shape {p.shape}", module="imagedata")
        if p.dtype != np.uint8:
            if p.min() < 0 or p.max() > 255:
                raise ValidationError("channel values must lie in [0, 255]",
                                      module="imagedata")
            p = p.astype(np.uint8)
        if self.meters_per_pixel <= 0:
            raise ValidationError("meters_per_pixel must be > 0",
                                  module="imagedata")
        self.pixels = p

    @property
    def height(self):
        return self.pixels.shape[0]

    @property
    def width(self):
        return self.pixels.shape[1]


@dataclass(frozen=True)
class PointAnnotation:
    """Pixel-center coordinate marking one object."""

    x: float
    y: float


@dataclass(frozen=True)
class NoiseBox:
    """Rectangle drawn around a non-target object."""

    x0: float
    y0: float
    x1: float
    y1: float
    kind: str = "other"

    def __post_init__(self):
        if not (self.x0 < self.x1 and self.y0 < self.y1):
            raise ValidationError(
                f"degenerate noise box ({self.x0},{self.y0},{self.x1},{self.y1})",
                module="imagedata")
        if self.kind not in NOISE_KINDS:
            raise ValidationError(f"unknown noise kind {self.kind!r}",
                                  module="imagedata")

    @property
    def area(self):
        return (self.x1 - self.x0) * (self.y1 - self.y0)


@dataclass
class LabeledSample:
    """An image with its point annotations and noise boxes."""

    image: RawImage
    points: list = field(default_factory=list)
    noise: list = field(default_factory=list)

    def __post_init__(self):
        h, w = self.image.height, self.image.width
        for i, p in enumerate(self.points):
            if not (0 <= p.x < w and 0 <= p.y < h):
                raise ValidationError(
                    f"point {i} at ({p.x}, {p.y}) outside {h}x{w} image",
                    module="imagedata")
        for i, b in enumerate(self.noise):
            if not (0 <= b.x0 and b.x1 <= w and 0 <= b.y0 and b.y1 <= h):
                raise ValidationError(
                    f"noise box {i} outside {h}x{w} image", module="imagedata")

    @property
    def count(self):
        return len(self.points)


@dataclass
class DatasetSplit:
    """Disjoint train/val/test id lists produced by a seeded shuffle."""

    train: list
    val: list
    test: list
    seed: int

    def all_ids(self):
        return list(self.train) + list(self.val) + list(self.test)


# ---------------------------------------------------------------------------
# VIA annotation documents (subset: point + rect region shapes)
# ---------------------------------------------------------------------------

def parse_annotations(document, image):
    """Parse a VIA-style annotation JSON document for one image.

    Accepts either a single entry (an object with ``regions``) or a VIA
    project export mapping one key to such an entry.  Only ``point`` and
    ``rect`` region shapes are understood; anything else is rejected.
    """
    if isinstance(document, (bytes, str)):
        try:
            doc = json.loads(document)
        except json.JSONDecodeError as e:
            raise AnnotationError(
                f"malformed annotation JSON at byte offset {e.pos}: {e.msg}"
            ) from e
    else:
        doc = document

    if isinstance(doc, dict) and "regions" in doc:
        entry = doc
    elif isinstance(doc, dict) and len(doc) == 1:
        entry = next(iter(doc.values()))
        if not isinstance(entry, dict) or "regions" not in entry:
            raise AnnotationError("annotation entry carries no 'regions' list")
    else:
        raise AnnotationError(
            "expected a single-image annotation document "
            "(an object with 'regions', or a one-entry VIA export)")

    h, w = image.height, image.width
    points, noise = [], []
    for i, region in enumerate(entry.get("regions") or []):
        shape = region.get("shape_attributes", {})
        name = shape.get("name")
        if name == "point":
            cx, cy = shape.get("cx"), shape.get("cy")
            if cx is None or cy is None:
                raise AnnotationError(f"region {i}: point without cx/cy")
            if not (0 <= cx < w and 0 <= cy < h):
                raise AnnotationError(
                    f"region {i}: point ({cx}, {cy}) outside {h}x{w} image")
            points.append(PointAnnotation(float(cx), float(cy)))
        elif name == "rect":
            try:
                x, y = float(shape["x"]), float(shape["y"])
                bw, bh = float(shape["width"]), float(shape["height"])
            except KeyError as e:
                raise AnnotationError(
                    f"region {i}: rect missing field {e}") from e
            kind = (region.get("region_attributes") or {}).get("kind", "other")
            if kind not in NOISE_KINDS:
                kind = "other"
            if not (0 <= x and x + bw <= w and 0 <= y and y + bh <= h):
                raise AnnotationError(
                    f"region {i}: rect ({x},{y},{bw},{bh}) outside "
                    f"{h}x{w} image")
            if bw <= 0 or bh <= 0:
                raise AnnotationError(f"region {i}: rect has no area")
            noise.append(NoiseBox(x, y, x + bw, y + bh, kind))
        else:
            raise AnnotationError(
                f"region {i}: unsupported shape {name!r} "
                "(only point and rect are accepted)")
    return LabeledSample(image=image, points=points, noise=noise)


def serialize_annotations(sample, filename="image.png", file_size=0):
    """Render a sample's annotations as a VIA-subset JSON string."""
    regions = []
    for p in sample.points:
        regions.append({
            "shape_attributes": {"name": "point", "cx": p.x, "cy": p.y},
            "region_attributes": {},
        })
    for b in sample.noise:
        regions.append({
            "shape_attributes": {
                "name": "rect", "x": b.x0, "y": b.y0,
                "width": b.x1 - b.x0, "height": b.y1 - b.y0,
            },
            "region_attributes": {"kind": b.kind},
        })
    doc = {
        f"{filename}{file_size}": {
            "filename": filename,
            "size": file_size,
            "regions": regions,
            "file_attributes": {},
        }
    }
    return json.dumps(doc, indent=1, sort_keys=True)


# ---------------------------------------------------------------------------
# Geometry: physical-window crop and bilinear resize
# ---------------------------------------------------------------------------

def crop_to_area(image, points, noise, area_w_m, area_h_m):
    """Crop to a physical window anchored at the image's top-left corner.

    The window spans ``area_h_m / meters_per_pixel`` rows by
    ``area_w_m / meters_per_pixel`` columns.  Points outside the window are
    dropped; boxes are clipped to it (and dropped when disjoint from it).
    """
    mpp = image.meters_per_pixel
    crop_h = int(round(area_h_m / mpp))
    crop_w = int(round(area_w_m / mpp))
    if crop_h > image.height or crop_w > image.width or crop_h < 1 or crop_w < 1:
        avail_h = image.height * mpp
        avail_w = image.width * mpp
        raise ValidationError(
            f"requested area {area_h_m}x{area_w_m} m exceeds image extent "
            f"{avail_h:.4g}x{avail_w:.4g} m", module="imagedata")
    pixels = image.pixels[:crop_h, :crop_w].copy()
    kept_points = [p for p in points if p.x < crop_w and p.y < crop_h]
    kept_noise = []
    for b in noise:
        x0, y0 = max(b.x0, 0.0), max(b.y0, 0.0)
        x1, y1 = min(b.x1, float(crop_w)), min(b.y1, float(crop_h))
        if x0 < x1 and y0 < y1:
            kept_noise.append(NoiseBox(x0, y0, x1, y1, b.kind))
    out = RawImage(pixels, meters_per_pixel=mpp, source_id=image.source_id)
    return LabeledSample(image=out, points=kept_points, noise=kept_noise)


def _bilinear_resize_u8(pixels, target_h, target_w):
    """Half-pixel-center bilinear resample of an HxWxC uint8 array."""
    h, w = pixels.shape[:2]
    src = pixels.astype(np.float64)
    ys = (np.arange(target_h) + 0.5) * (h / target_h) - 0.5
    xs = (np.arange(target_w) + 0.5) * (w / target_w) - 0.5
    y0 = np.floor(ys)
    x0 = np.floor(xs)
    fy = (ys - y0)[:, None, None]
    fx = (xs - x0)[None, :, None]
    y0 = y0.astype(np.int64)
    x0 = x0.astype(np.int64)
    y0c = np.clip(y0, 0, h - 1)
    y1c = np.clip(y0 + 1, 0, h - 1)
    x0c = np.clip(x0, 0, w - 1)
    x1c = np.clip(x0 + 1, 0, w - 1)
    top = src[y0c][:, x0c] * (1 - fx) + src[y0c][:, x1c] * fx
    bot = src[y1c][:, x0c] * (1 - fx) + src[y1c][:, x1c] * fx
    out = top * (1 - fy) + bot * fy
    return np.clip(np.floor(out + 0.5), 0, 255).astype(np.uint8)


def resize_bilinear(image, points, target_h, target_w, noise=()):
    """Resample the image and rescale annotations by the same map.

    Point count is preserved for any target size >= 1x1.  Noise boxes, when
    provided, are scaled with the same per-axis factors.
    """
    if target_h < 1 or target_w < 1:
        raise ValidationError("target size must be >= 1x1", module="imagedata")
    h, w = image.height, image.width
    pixels = _bilinear_resize_u8(image.pixels, target_h, target_w)
    sy, sx = target_h / h, target_w / w
    scaled = [
        PointAnnotation(min(p.x * sx, np.nextafter(target_w, 0)),
                        min(p.y * sy, np.nextafter(target_h, 0)))
        for p in points
    ]
    boxes = [NoiseBox(b.x0 * sx, b.y0 * sy, min(b.x1 * sx, float(target_w)),
                      min(b.y1 * sy, float(target_h)), b.kind)
             for b in noise]
    out = RawImage(pixels, meters_per_pixel=image.meters_per_pixel / sx,
                   source_id=image.source_id)
    return LabeledSample(image=out, points=scaled, noise=boxes)


# ---------------------------------------------------------------------------
# Dataset split
# ---------------------------------------------------------------------------

def split_sizes(n, ratios):
    """Apply the split rounding rule: floor train, floor val, rest to test."""
    total = sum(ratios)
    n_train = int(np.floor(n * ratios[0] / total))
    n_val = int(np.floor(n * ratios[1] / total))
    return n_train, n_val, n - n_train - n_val


def split_dataset(ids, ratios=(350, 70, 80), seed=0, strata=None):
    """Deterministic, optionally stratified, disjoint train/val/test split.

    ``ratios`` may be counts or proportions; sizes follow the rounding rule
    of :func:`split_sizes`.  When ``strata`` (one hashable label per id) is
    given, each stratum is spread across the three partitions in proportion,
    so train and test class distributions differ by at most one sample per
    stratum beyond the proportional allotment.
    """
    ids = list(ids)
    n = len(ids)
    if n < 3:
        raise ValidationError(f"need at least 3 ids to split, got {n}",
                              module="imagedata")
    targets = split_sizes(n, ratios)
    if min(targets) < 0:
        raise ValidationError(f"ratios {ratios} infeasible for {n} ids",
                              module="imagedata")
    if strata is None:
        strata = [0] * n
    if len(strata) != n:
        raise ValidationError("strata must align with ids", module="imagedata")

    rng = rng_for(seed, "split")
    order = rng.permutation(n)
    by_stratum = {}
    for idx in order:
        by_stratum.setdefault(strata[idx], []).append(ids[idx])

    # Largest-remainder apportionment per stratum, then a global fix-up pass
    # so the three partitions hit their target sizes exactly.
    parts = ([], [], [])
    props = [t / n for t in targets]
    for label in sorted(by_stratum, key=repr):
        members = by_stratum[label]
        m = len(members)
        quota = [m * p for p in props]
        base = [int(np.floor(q)) for q in quota]
        rem = m - sum(base)
        frac_order = sorted(range(3), key=lambda i: (-(quota[i] - base[i]), i))
        for i in range(rem):
            base[frac_order[i]] += 1
        pos = 0
        for part_i in range(3):
            parts[part_i].extend(members[pos:pos + base[part_i]])
            pos += base[part_i]

    sizes = [len(p) for p in parts]
    for i in range(3):
        while sizes[i] > targets[i]:
            j = min(k for k in range(3) if sizes[k] < targets[k])
            parts[j].append(parts[i].pop())
            sizes[i] -= 1
            sizes[j] += 1
    return DatasetSplit(train=parts[0], val=parts[1], test=parts[2],
                        seed=int(seed))
