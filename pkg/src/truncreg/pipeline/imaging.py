"""8-bit grayscale I/O, degradation and PSNR.

Intensities live on [0, 1]. Noise levels are given on the 0-255 scale, as is
customary for 8-bit images, and divided by 255 before use.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np
from PIL import Image

from ..errors import ConfigurationError
from ..grid_ops import BlurKernel, convolve


def load_image(path) -> np.ndarray:
    """Read an image as 8-bit grayscale and scale it to [0, 1]."""
    with Image.open(path) as im:
        arr = np.asarray(im.convert("L"), dtype=float)
    return arr / 255.0


def to_uint8(u: np.ndarray) -> np.ndarray:
    """Clamp to [0, 1] and quantize with round-half-up."""
    u = np.clip(np.asarray(u, dtype=float), 0.0, 1.0)
    return np.floor(u * 255.0 + 0.5).astype(np.uint8)


def save_image(u: np.ndarray, path) -> Path:
    path = Path(path)
    fmt = "PPM" if path.suffix.lower() in (".pgm", ".pnm") else None
    Image.fromarray(to_uint8(u), mode="L").save(path, format=fmt)
    return path


def psnr(u: np.ndarray, ref: np.ndarray) -> float:
    """``10 log10(1 / MSE)`` for images on [0, 1]; ``inf`` when they coincide."""
    u = np.asarray(u, dtype=float)
    ref = np.asarray(ref, dtype=float)
    if u.shape != ref.shape:
        raise ConfigurationError(f"shape mismatch {u.shape} vs {ref.shape}")
    mse = float(np.mean((u - ref) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / mse)


def degrade(u: np.ndarray, blur: BlurKernel = None, sigma: float = 0.0, seed: int = 0) -> np.ndarray:
    """Blur (periodically) then add N(0, (sigma/255)^2) noise. The result is not clipped."""
    if sigma < 0:
        raise ConfigurationError("sigma must be nonnegative")
    f = np.array(u, dtype=float)
    if blur is not None:
        f = convolve(f, blur)
    if sigma > 0:
        rng = np.random.default_rng(seed)
        f = f + rng.normal(0.0, sigma / 255.0, size=f.shape)
    return f
