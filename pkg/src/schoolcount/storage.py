"""On-disk dataset layout.

A dataset directory holds::

    images/<id>.png            8-bit RGB pixels
    images/<id>.meta.json      {"meters_per_pixel": ..., "source_id": ...}
    annotations/<id>.json      VIA-subset document (point + rect regions)
    splits/<seed>.json         {"seed", "ratios", "train", "val", "test"}
    unlabelled/<id>.png        images for the self-supervised task
    unlabelled/hidden_truth.json   generator ground truth; test-only, never
                                   read by training code

Augmented copies of a dataset live under ``augmented/<seed>/`` in the same
layout.
"""

import json
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import ValidationError
from .imagedata import DatasetSplit, LabeledSample, RawImage, \
    parse_annotations, serialize_annotations


def write_png(path, pixels):
    Image.fromarray(np.asarray(pixels, dtype=np.uint8)).save(path, format="PNG")


def read_png(path):
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"), dtype=np.uint8)


def sample_id(index):
    return f"im{index:05d}"


def save_dataset(root, samples, ids=None):
    """Materialize labelled samples in the standard layout; returns ids."""
    root = Path(root)
    (root / "images").mkdir(parents=True, exist_ok=True)
    (root / "annotations").mkdir(parents=True, exist_ok=True)
    if ids is None:
        ids = [sample_id(i) for i in range(len(samples))]
    for sid, sample in zip(ids, samples):
        img_path = root / "images" / f"{sid}.png"
        write_png(img_path, sample.image.pixels)
        size = img_path.stat().st_size
        meta = {
            "meters_per_pixel": sample.image.meters_per_pixel,
            "source_id": sample.image.source_id or sid,
        }
        (root / "images" / f"{sid}.meta.json").write_text(
            json.dumps(meta, indent=1, sort_keys=True))
        (root / "annotations" / f"{sid}.json").write_text(
            serialize_annotations(sample, filename=f"{sid}.png",
                                  file_size=size))
    return list(ids)


def load_dataset(root):
    """Load all labelled samples; returns (ids, samples) sorted by id."""
    root = Path(root)
    img_dir = root / "images"
    if not img_dir.is_dir():
        raise ValidationError(f"{root}: no images/ directory",
                              module="storage")
    ids, samples = [], []
    for img_path in sorted(img_dir.glob("*.png")):
        sid = img_path.stem
        pixels = read_png(img_path)
        meta_path = img_dir / f"{sid}.meta.json"
        meta = json.loads(meta_path.read_text()) if meta_path.exists() else {}
        image = RawImage(pixels,
                         meters_per_pixel=meta.get("meters_per_pixel", 0.0125),
                         source_id=meta.get("source_id", sid))
        ann_path = root / "annotations" / f"{sid}.json"
        if ann_path.exists():
            sample = parse_annotations(ann_path.read_text(), image)
        else:
            sample = LabeledSample(image=image)
        ids.append(sid)
        samples.append(sample)
    return ids, samples


def save_split(root, split, ratios=None):
    root = Path(root)
    (root / "splits").mkdir(parents=True, exist_ok=True)
    doc = {
        "seed": split.seed,
        "ratios": list(ratios) if ratios is not None else None,
        "train": list(split.train),
        "val": list(split.val),
        "test": list(split.test),
    }
    path = root / "splits" / f"{split.seed}.json"
    path.write_text(json.dumps(doc, indent=1, sort_keys=True))
    return path


def load_split(root, seed):
    path = Path(root) / "splits" / f"{seed}.json"
    if not path.exists():
        raise ValidationError(f"{path}: split file not found",
                              module="storage")
    doc = json.loads(path.read_text())
    return DatasetSplit(train=doc["train"], val=doc["val"],
                        test=doc["test"], seed=doc["seed"])


def save_unlabelled(root, samples):
    """Write unlabelled images; generator truth goes to a test-only sidecar."""
    root = Path(root)
    udir = root / "unlabelled"
    udir.mkdir(parents=True, exist_ok=True)
    hidden = {}
    ids = []
    for i, sample in enumerate(samples):
        sid = f"un{i:05d}"
        write_png(udir / f"{sid}.png", sample.image.pixels)
        hidden[sid] = {
            "count": sample.count,
            "points": [[p.x, p.y] for p in sample.points],
        }
        ids.append(sid)
    (udir / "hidden_truth.json").write_text(
        json.dumps(hidden, indent=1, sort_keys=True))
    return ids


def load_unlabelled(root, with_hidden=False):
    """Load unlabelled images as arrays; optionally the hidden ground truth.

    The hidden truth exists so tests can verify pair-order invariants; the
    trainer never consumes it.
    """
    udir = Path(root) / "unlabelled"
    if not udir.is_dir():
        raise ValidationError(f"{root}: no unlabelled/ directory",
                              module="storage")
    ids = sorted(p.stem for p in udir.glob("*.png"))
    images = [read_png(udir / f"{sid}.png") for sid in ids]
    if not with_hidden:
        return ids, images
    truth_path = udir / "hidden_truth.json"
    hidden = json.loads(truth_path.read_text()) if truth_path.exists() else {}
    return ids, images, hidden
