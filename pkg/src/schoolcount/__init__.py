"""schoolcount: density-map object counting for noisy low-resolution imagery.

The package provides the full desk-scale pipeline: synthetic data
generation with exact ground truth, annotation ingestion and geometry,
density-map construction, seeded augmentation, ranked-pair generation for
self-supervised training, a small stride-32 convolutional counting network
with exact gradients, the loss family used by the ablation grid, a
deterministic trainer, and the evaluation/reporting harness.
"""

__version__ = "0.1.0"
