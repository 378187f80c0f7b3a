"""Synthetic test images with known piecewise-constant structure."""

from __future__ import annotations

import numpy as np

# (intensity, semi-axis a, semi-axis b, x0, y0, angle in degrees); the
# high-contrast "modified" variant used by most imaging toolboxes.
SHEPP_LOGAN_ELLIPSES = (
    (1.00, 0.6900, 0.9200, 0.00, 0.0000, 0.0),
    (-0.80, 0.6624, 0.8740, 0.00, -0.0184, 0.0),
    (-0.20, 0.1100, 0.3100, 0.22, 0.0000, -18.0),
    (-0.20, 0.1600, 0.4100, -0.22, 0.0000, 18.0),
    (0.10, 0.2100, 0.2500, 0.00, 0.3500, 0.0),
    (0.10, 0.0460, 0.0460, 0.00, 0.1000, 0.0),
    (0.10, 0.0460, 0.0460, 0.00, -0.1000, 0.0),
    (0.10, 0.0460, 0.0230, -0.08, -0.6050, 0.0),
    (0.10, 0.0230, 0.0230, 0.00, -0.6060, 0.0),
    (0.10, 0.0230, 0.0460, 0.06, -0.6050, 0.0),
)


def _grid(n: int):
    x = np.linspace(-1.0, 1.0, n)
    # row 0 is the top of the image (y = +1)
    return np.meshgrid(x, x[::-1])


def shepp_logan(n: int = 256) -> np.ndarray:
    """Modified Shepp-Logan head phantom on an n x n grid spanning [-1, 1]^2, values in [0, 1]."""
    xx, yy = _grid(n)
    img = np.zeros((n, n))
    for val, a, b, x0, y0, deg in SHEPP_LOGAN_ELLIPSES:
        phi = np.deg2rad(deg)
        c, s = np.cos(phi), np.sin(phi)
        dx, dy = xx - x0, yy - y0
        inside = ((dx * c + dy * s) / a) ** 2 + ((-dx * s + dy * c) / b) ** 2 <= 1.0
        img[inside] += val
    return np.clip(img, 0.0, 1.0)


def satellite(n: int = 135) -> np.ndarray:
    """A cartoon satellite: bus, two ribbed solar panels, dish and boom.

    Stands in for real satellite imagery in deblurring experiments; it has
    both large flat regions and thin low-contrast structures.
    """
    xx, yy = _grid(n)
    img = np.zeros((n, n))
    # solar panels with darker ribs
    for sign in (-1.0, 1.0):
        px = sign * xx
        panel = (px > 0.22) & (px < 0.92) & (np.abs(yy) < 0.17)
        img[panel] = 0.45
        ribs = panel & (np.abs(((px - 0.22) / 0.14) - np.round((px - 0.22) / 0.14)) < 0.09)
        img[ribs] = 0.30
        strut = (px > 0.16) & (px <= 0.22) & (np.abs(yy) < 0.025)
        img[strut] = 0.6
    # central bus, with a brighter instrument deck
    bus = (np.abs(xx) <= 0.16) & (np.abs(yy) < 0.30)
    img[bus] = 0.80
    deck = (np.abs(xx) < 0.10) & (yy > 0.05) & (yy < 0.22)
    img[deck] = 0.95
    # dish below the bus and a boom above it
    dish = ((xx / 0.22) ** 2 + ((yy + 0.45) / 0.12) ** 2 <= 1.0) & (yy < -0.30)
    img[dish] = 0.70
    boom = (np.abs(xx - 0.03) < 0.018) & (yy >= 0.30) & (yy < 0.70)
    img[boom] = 0.65
    tip = (xx - 0.03) ** 2 + (yy - 0.74) ** 2 <= 0.05**2
    img[tip] = 1.0
    return img


def checkerboard(n: int = 64, cell: int = 8) -> np.ndarray:
    idx = np.arange(n) // cell
    return ((idx[:, None] + idx[None, :]) % 2).astype(float)


BUILTIN = {
    "shepp_logan": shepp_logan,
    "satellite": satellite,
    "checkerboard": checkerboard,
}
