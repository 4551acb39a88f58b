"""Seeded synthetic sonar-like imagery with exact ground truth.

Scenes are dark, speckled, low-resolution frames containing small bright
elongated blobs (the counted objects), optional large noise objects (an
ellipse "dolphin", an arc "net"), and multiplicative/additive grain.  Every
sample is a pure function of ``(spec.seed, index)``, so datasets are
reproducible byte-for-byte and ground truth (one point per blob centroid)
is exact by construction.
"""

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ValidationError
from .imagedata import LabeledSample, NoiseBox, PointAnnotation, RawImage
from .seeding import rng_for

REFERENCE_SIZE = (320, 576)


@dataclass(frozen=True)
class CountDistribution:
    """Per-sample count law: 'log-uniform' over [lo, hi] or 'fixed' at n."""

    kind: str = "log-uniform"
    lo: int = 0
    hi: int = 438
    n: int = 0

    def __post_init__(self):
        if self.kind not in ("log-uniform", "fixed"):
            raise ValidationError(f"unknown count distribution {self.kind!r}",
                                  module="synthgen")
        if self.kind == "log-uniform" and not (0 <= self.lo <= self.hi <= 500):
            raise ValidationError(
                f"log-uniform bounds must satisfy 0 <= lo <= hi <= 500, "
                f"got ({self.lo}, {self.hi})", module="synthgen")
        if self.kind == "fixed" and not (0 <= self.n <= 500):
            raise ValidationError(f"fixed count must lie in [0, 500], "
                                  f"got {self.n}", module="synthgen")

    def sample(self, rng):
        if self.kind == "fixed":
            return self.n
        u = rng.uniform(np.log(self.lo + 1), np.log(self.hi + 2))
        return min(int(np.floor(np.exp(u))) - 1, self.hi)

    def cdf_below(self, c):
        """P(count < c); the analytic law the histogram tests check against."""
        if self.kind == "fixed":
            return 1.0 if self.n < c else 0.0
        lo, hi = np.log(self.lo + 1), np.log(self.hi + 2)
        return float(np.clip((np.log(c + 1) - lo) / (hi - lo), 0.0, 1.0))


@dataclass(frozen=True)
class SynthSpec:
    """Parameters of the synthetic scene generator."""

    count_distribution: CountDistribution = field(
        default_factory=CountDistribution)
    noise_rate: float = 0.25
    speckle_level: float = 0.3
    speckle_jitter: bool = False
    image_size: tuple = REFERENCE_SIZE
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.noise_rate <= 1.0:
            raise ValidationError("noise_rate must lie in [0, 1]",
                                  module="synthgen")
        if not 0.0 <= self.speckle_level <= 1.0:
            raise ValidationError("speckle_level must lie in [0, 1]",
                                  module="synthgen")
        h, w = self.image_size
        if h < 16 or w < 16:
            raise ValidationError("image_size must be at least 16x16",
                                  module="synthgen")
        object.__setattr__(self, "image_size", (int(h), int(w)))

    @property
    def blob_scale(self):
        h, w = self.image_size
        return np.sqrt((h * w) / (REFERENCE_SIZE[0] * REFERENCE_SIZE[1]))


def spec_to_json(spec):
    return json.dumps(asdict(spec), indent=1, sort_keys=True)


def spec_from_json(text):
    doc = json.loads(text)
    doc["count_distribution"] = CountDistribution(**doc["count_distribution"])
    doc["image_size"] = tuple(doc["image_size"])
    return SynthSpec(**doc)


# ---------------------------------------------------------------------------
# Rendering primitives (all draw additively onto a float intensity canvas)
# ---------------------------------------------------------------------------

def _draw_blob(canvas, cx, cy, sa, sb, theta, intensity):
    """Anisotropic Gaussian blob; peak lands on the centroid pixel."""
    h, w = canvas.shape
    r = int(np.ceil(3 * max(sa, sb))) + 1
    x0, x1 = max(0, int(cx) - r), min(w, int(cx) + r + 1)
    y0, y1 = max(0, int(cy) - r), min(h, int(cy) + r + 1)
    if x0 >= x1 or y0 >= y1:
        return
    ys, xs = np.mgrid[y0:y1, x0:x1]
    dx, dy = xs - cx, ys - cy
    ct, st = np.cos(theta), np.sin(theta)
    u = dx * ct + dy * st
    v = -dx * st + dy * ct
    canvas[y0:y1, x0:x1] += intensity * np.exp(
        -(u * u / (2 * sa * sa) + v * v / (2 * sb * sb)))


def _draw_ellipse(canvas, cx, cy, a, b, theta, intensity):
    """Filled soft-edged ellipse (the 'dolphin' noise object)."""
    h, w = canvas.shape
    r = int(np.ceil(max(a, b))) + 2
    x0, x1 = max(0, int(cx) - r), min(w, int(cx) + r + 1)
    y0, y1 = max(0, int(cy) - r), min(h, int(cy) + r + 1)
    if x0 >= x1 or y0 >= y1:
        return
    ys, xs = np.mgrid[y0:y1, x0:x1]
    dx, dy = xs - cx, ys - cy
    ct, st = np.cos(theta), np.sin(theta)
    u = dx * ct + dy * st
    v = -dx * st + dy * ct
    d = np.sqrt((u / a) ** 2 + (v / b) ** 2)
    canvas[y0:y1, x0:x1] += intensity * np.clip(1.2 - d, 0, 1)


def _draw_arc(canvas, cx, cy, radius, theta0, span, thickness, intensity):
    """Partial ring (the 'net' noise object)."""
    h, w = canvas.shape
    r = int(np.ceil(radius + thickness)) + 2
    x0, x1 = max(0, int(cx) - r), min(w, int(cx) + r + 1)
    y0, y1 = max(0, int(cy) - r), min(h, int(cy) + r + 1)
    if x0 >= x1 or y0 >= y1:
        return
    ys, xs = np.mgrid[y0:y1, x0:x1]
    dx, dy = xs - cx, ys - cy
    dist = np.sqrt(dx * dx + dy * dy)
    ang = np.mod(np.arctan2(dy, dx) - theta0, 2 * np.pi)
    ring = np.clip(1.0 - np.abs(dist - radius) / thickness, 0, 1)
    ring[ang > span] = 0.0
    canvas[y0:y1, x0:x1] += intensity * ring


def _support_box(canvas, threshold=18.0, pad=1.0):
    """Axis-aligned bounding box of the bright support in ``canvas``."""
    mask = canvas > threshold
    if not mask.any():
        return None
    ys, xs = np.nonzero(mask)
    h, w = canvas.shape
    return (max(0.0, xs.min() - pad), max(0.0, ys.min() - pad),
            min(float(w), xs.max() + 1 + pad), min(float(h), ys.max() + 1 + pad))


def _colorize(intensity):
    """Map a float intensity canvas to the bluish-green sonar palette."""
    g = np.clip(intensity, 0, 255)
    rgb = np.empty(g.shape + (3,), dtype=np.float64)
    rgb[..., 0] = 8 + 0.22 * g
    rgb[..., 1] = 12 + 0.72 * g
    rgb[..., 2] = 16 + 0.95 * g
    return np.clip(rgb, 0, 255).astype(np.uint8)


# ---------------------------------------------------------------------------
# Sample / dataset generation
# ---------------------------------------------------------------------------

def generate_sample(spec, index):
    """Render one labelled sample; deterministic per (spec.seed, index)."""
    rng = rng_for(spec.seed, "sample", index)
    h, w = spec.image_size
    scale = spec.blob_scale

    # per-sample degradation: with jitter on, amplitude varies in [0, 1]
    # and dims the counted blobs, so harder samples are visibly noisier
    amp = rng.uniform(0.0, 1.0) if spec.speckle_jitter else 1.0
    grain_level = spec.speckle_level * amp
    fish_contrast = 1.0 - 0.55 * amp if spec.speckle_jitter else 1.0

    base = np.zeros((h, w), dtype=np.float64)
    # slowly varying background bands
    coarse = rng.uniform(0.0, 26.0 * spec.speckle_level,
                         size=(max(1, h // 16), max(1, w // 16)))
    base += np.kron(coarse, np.ones((16, 16)))[:h, :w]

    noise_boxes = []
    if spec.noise_rate > 0 and rng.random() < spec.noise_rate:
        n_obj = int(rng.integers(1, 3))
        for _ in range(n_obj):
            obj = np.zeros_like(base)
            if rng.random() < 0.6:
                frac = rng.uniform(0.055, 0.115)
                ratio = rng.uniform(0.28, 0.42)
                a = np.sqrt(frac * h * w / (4.0 * ratio))
                b = a * ratio
                cx = rng.uniform(a, w - a)
                cy = rng.uniform(b, h - b)
                _draw_ellipse(obj, cx, cy, a, b, rng.uniform(0, np.pi),
                              rng.uniform(150, 235))
                kind = "dolphin"
            else:
                radius = rng.uniform(0.22, 0.4) * min(h, w)
                cx = rng.uniform(0.25 * w, 0.75 * w)
                cy = rng.uniform(0.25 * h, 0.75 * h)
                _draw_arc(obj, cx, cy, radius, rng.uniform(0, 2 * np.pi),
                          rng.uniform(2.0, 4.8),
                          max(1.5, 0.022 * min(h, w)),
                          rng.uniform(120, 200))
                kind = "net"
            box = _support_box(obj)
            if box is not None:
                noise_boxes.append(NoiseBox(*box, kind=kind))
                base += obj

    count = spec.count_distribution.sample(rng)
    points = []
    margin = 2.0
    sa_lo = max(0.9, 1.6 * scale)
    sa_hi = max(1.2, 2.6 * scale)
    sb_lo = max(0.5, 0.55 * scale)
    sb_hi = max(0.7, 0.95 * scale)
    for _ in range(count):
        cx = rng.uniform(margin, w - 1 - margin)
        cy = rng.uniform(margin, h - 1 - margin)
        theta = rng.uniform(0, np.pi)
        sa = rng.uniform(sa_lo, sa_hi)
        sb = rng.uniform(sb_lo, sb_hi)
        peak = rng.uniform(130, 250) * fish_contrast
        _draw_blob(base, cx, cy, sa, sb, theta, peak)
        points.append(PointAnnotation(float(cx), float(cy)))

    base += rng.exponential(scale=max(1e-9, 42.0 * grain_level),
                            size=(h, w))
    pixels = _colorize(base)
    image = RawImage(pixels, meters_per_pixel=0.0125 / max(scale, 1e-9),
                     source_id=f"synth-{spec.seed}-{index}")
    return LabeledSample(image=image, points=points, noise=noise_boxes)


def generate_dataset(spec, n_labelled, n_unlabelled):
    """Generate labelled and unlabelled pools from one spec.

    The 'unlabelled' list still carries generator ground truth (points and
    boxes); training code must use only the pixels, while tests may use the
    hidden truth to verify ordering invariants.
    """
    if n_labelled < 0 or n_unlabelled < 0:
        raise ValidationError("dataset sizes must be >= 0", module="synthgen")
    labelled = [generate_sample(spec, i) for i in range(n_labelled)]
    unlabelled = [generate_sample(spec, n_labelled + j)
                  for j in range(n_unlabelled)]
    return labelled, unlabelled
