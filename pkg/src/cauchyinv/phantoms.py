"""Ground-truth test objects."""

import numpy as np

from .grids import Grid1D, Lattice2D

# (intensity, semi-axis a, semi-axis b, x0, y0, rotation in degrees)
SHEPP_LOGAN_CLASSIC = (
    (2.00, 0.6900, 0.9200, 0.00, 0.0000, 0.0),
    (-0.98, 0.6624, 0.8740, 0.00, -0.0184, 0.0),
    (-0.02, 0.1100, 0.3100, 0.22, 0.0000, -18.0),
    (-0.02, 0.1600, 0.4100, -0.22, 0.0000, 18.0),
    (0.01, 0.2100, 0.2500, 0.00, 0.3500, 0.0),
    (0.01, 0.0460, 0.0460, 0.00, 0.1000, 0.0),
    (0.01, 0.0460, 0.0460, 0.00, -0.1000, 0.0),
    (0.01, 0.0460, 0.0230, -0.08, -0.6050, 0.0),
    (0.01, 0.0230, 0.0230, 0.00, -0.6060, 0.0),
    (0.01, 0.0230, 0.0460, 0.06, -0.6050, 0.0),
)

# Toft's higher-contrast intensities on the same ellipses
SHEPP_LOGAN_MODIFIED = tuple(
    (v,) + e[1:] for v, e in zip((1.0, -0.8, -0.2, -0.2, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1), SHEPP_LOGAN_CLASSIC)
)

# piecewise-constant 1D truth on [0, 1]: level k holds on [BREAKS[k-1], BREAKS[k])
SIGNAL_BREAKS = (0.15, 0.35, 0.6, 0.85)
SIGNAL_LEVELS = (0.0, 1.0, 0.3, -0.5, 0.0)


def pixel_centers(nx, ny, half_width=1.0):
    """Pixel-centre coordinates ``(X, Y)`` with row 0 at the top (y = +half_width)."""
    px, py = 2.0 * half_width / nx, 2.0 * half_width / ny
    x = -half_width + (np.arange(nx) + 0.5) * px
    y = half_width - (np.arange(ny) + 0.5) * py
    return np.meshgrid(x, y)


def shepp_logan(nx, ny=None, modified=True):
    """Point-sampled Shepp-Logan phantom on [-1, 1]^2.

    A pixel receives the summed intensity of every ellipse containing its
    centre.  ``modified=True`` uses Toft's intensities (values in [0, 1]).
    """
    ny = nx if ny is None else ny
    table = SHEPP_LOGAN_MODIFIED if modified else SHEPP_LOGAN_CLASSIC
    X, Y = pixel_centers(nx, ny)
    img = np.zeros((ny, nx))
    for value, a, b, x0, y0, phi in table:
        th = np.deg2rad(phi)
        c, s = np.cos(th), np.sin(th)
        xr = (X - x0) * c + (Y - y0) * s
        yr = -(X - x0) * s + (Y - y0) * c
        img[(xr / a) ** 2 + (yr / b) ** 2 <= 1.0] += value
    # drop float residue from cancelling intensities (e.g. 1 - 0.8)
    img = np.round(img, 12)
    return Lattice2D(nx, ny, 2.0 / nx, 2.0 / ny, img.ravel())


def piecewise_value(t):
    t = np.asarray(t, dtype=float)
    return np.asarray(SIGNAL_LEVELS)[np.searchsorted(SIGNAL_BREAKS, t, side="right")]


def piecewise_signal_1d(n):
    """Default piecewise-constant truth sampled at ``t_j = j/(n-1)``."""
    if n < 2:
        raise ValueError("need at least two samples")
    t = np.arange(n) / (n - 1)
    return Grid1D(n, 1.0 / (n - 1), piecewise_value(t))
