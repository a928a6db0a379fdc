"""Synthetic weight-tensor generators.

Ship with the CLI so every experiment runs without downloading model
checkpoints.  All generators are deterministic given a seed.
"""

from __future__ import annotations

import numpy as np

DISTRIBUTIONS = ("gaussian", "laplacian", "outlier_mixture")
DEFAULT_SEED = 20250823


def sample(dist: str, shape, seed: int = DEFAULT_SEED,
           rng: np.random.Generator | None = None) -> np.ndarray:
    """Draw a float32 tensor from one of the bundled distributions.

    ``outlier_mixture`` is Gaussian bulk with ~1% of entries scaled by 6,
    mimicking weight groups with one-sided outliers.
    """
    if rng is None:
        rng = np.random.default_rng(seed)
    if dist == "gaussian":
        x = rng.standard_normal(shape)
    elif dist == "laplacian":
        x = rng.laplace(0.0, 1.0, size=shape)
    elif dist == "outlier_mixture":
        x = rng.standard_normal(shape)
        mask = rng.random(shape) < 0.01
        x = np.where(mask, 6.0 * x, x)
    else:
        raise ValueError(f"unknown distribution {dist!r}; "
                         f"choose from {DISTRIBUTIONS}")
    return x.astype(np.float32)


def sample_groups(dist: str, n_groups: int, group_size: int,
                  seed: int = DEFAULT_SEED) -> np.ndarray:
    return sample(dist, (n_groups, group_size), seed=seed)


def single_outlier_groups(n_groups: int, group_size: int, sigma_mult: float = 6.0,
                          seed: int = DEFAULT_SEED) -> np.ndarray:
    """Gaussian groups with one entry forced to +sigma_mult standard deviations."""
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n_groups, group_size))
    cols = rng.integers(0, group_size, size=n_groups)
    x[np.arange(n_groups), cols] = sigma_mult
    return x.astype(np.float32)
