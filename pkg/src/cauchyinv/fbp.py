"""Filtered back-projection for the flat-detector fan-beam geometry."""

from __future__ import annotations

import math

import numpy as np

from .exceptions import DimensionError, ParameterError
from .grids import Lattice2D
from .phantoms import pixel_centers

FILTERS = ("ram-lak", "hann")


def ramp_filter_response(n_pad, du, window="ram-lak"):
    """Frequency response of the band-limited spatial ramp kernel.

    Built from the sampled impulse response ``h(0) = 1/(4 du^2)``,
    ``h(k) = -1/(pi k du)^2`` for odd ``k`` and 0 otherwise, which avoids the
    DC offset of a naively sampled ``|f|``.
    """
    if window not in FILTERS:
        raise ParameterError(f"unknown filter {window!r}; expected one of {FILTERS}")
    k = np.fft.fftfreq(n_pad) * n_pad  # signed integer lags
    h = np.zeros(n_pad)
    h[0] = 1.0 / (4.0 * du * du)
    odd = (np.abs(k) % 2) == 1
    h[odd] = -1.0 / (math.pi * k[odd] * du) ** 2
    resp = np.real(np.fft.fft(h)) * du
    if window == "hann":
        f = np.abs(np.fft.fftfreq(n_pad))  # cycles/sample, Nyquist at 0.5
        resp = resp * 0.5 * (1.0 + np.cos(2.0 * math.pi * f))
    return resp


def redundancy_weights(geom):
    """Short-scan weights for every (angle, detector pixel) sample.

    A ray at source angle ``b`` and fan angle ``g`` is measured again as
    ``(b + pi - 2 g, -g)``.  Each sample gets ``c(b) / (c(b) + c(b'))`` where
    ``c`` tapers smoothly (sin^2) to 0 over the overscan at both scan ends and
    ``c(b') = 0`` when the conjugate lies outside the scan.  On a full circle
    every weight is 1/2.  For spans between pi + 2*max|g| and 2 pi this is the
    Parker weighting.
    """
    beta = np.deg2rad(np.asarray(geom.angles, dtype=float))
    gam = geom.fan_angles()
    n_ang = beta.size
    if n_ang > 1:
        step = float(np.median(np.diff(beta)))
    else:
        step = 2.0 * math.pi
    b0, b1 = beta.min(), beta.max()
    if (b1 - b0) + abs(step) >= 2.0 * math.pi - 1e-9:
        return np.full((n_ang, gam.size), 0.5)

    taper = max(b1 - b0 - math.pi, abs(step))

    def c(b):
        inside = (b >= b0 - 1e-12) & (b <= b1 + 1e-12)
        u = np.clip(np.minimum(b - b0, b1 - b) / taper, 0.0, 1.0)
        return np.where(inside, np.sin(0.5 * math.pi * u) ** 2, 0.0)

    B = beta[:, None]
    G = gam[None, :]
    conj = B + math.pi - 2.0 * G
    # the conjugate may sit one turn away from the scan interval
    conj = np.where(conj > b1 + 1e-12, conj - 2.0 * math.pi, conj)
    conj = np.where(conj < b0 - 1e-12, conj + 2.0 * math.pi, conj)
    cb = c(np.broadcast_to(B, conj.shape))
    cc = c(conj)
    den = cb + cc
    return np.where(den > 0, cb / np.where(den > 0, den, 1.0), 1.0)


def fbp_reconstruct(sinogram, geom, nx, ny=None, filter="ram-lak", fov=1.0):
    """Fan-beam FBP onto ``[-fov, fov]^2``.

    ``sinogram`` is shaped ``(n_angles, n_detector_pixels)`` (or flat in that
    order).  Steps: rebin detector coordinates to the isocentre, weight by
    ``R / sqrt(R^2 + u^2)`` and the redundancy weights, ramp-filter each
    projection, then back-project with ``R^2 / U^2`` distance weighting and
    linear interpolation along the detector.
    """
    ny = nx if ny is None else ny
    p = np.asarray(sinogram, dtype=float)
    if p.size != geom.n_rays:
        raise DimensionError(
            f"sinogram has {p.size} samples, geometry expects {geom.n_angles}x{geom.n_detector_pixels}"
        )
    p = p.reshape(geom.n_angles, geom.n_detector_pixels)
    R = geom.source_radius
    mag = R / geom.source_detector_distance
    u = geom.detector_offsets() * mag
    du = (geom.detector_width / geom.n_detector_pixels) * mag
    beta = np.deg2rad(np.asarray(geom.angles, dtype=float))
    if beta.size > 1:
        dbeta = abs(float(np.median(np.diff(beta))))
    else:
        dbeta = 2.0 * math.pi

    weighted = p * (R / np.sqrt(R * R + u * u))[None, :] * redundancy_weights(geom)
    n_det = u.size
    n_pad = int(2 ** math.ceil(math.log2(max(2 * n_det, 64))))
    resp = ramp_filter_response(n_pad, du, filter)
    q = np.real(np.fft.ifft(np.fft.fft(weighted, n=n_pad, axis=1) * resp[None, :], axis=1))[:, :n_det]

    X, Y = pixel_centers(nx, ny, fov)
    img = np.zeros((ny, nx))
    for k, b in enumerate(beta):
        cb, sb = math.cos(b), math.sin(b)
        dist = R - (X * cb + Y * sb)
        ustar = R * (-X * sb + Y * cb) / dist
        vals = np.interp(ustar, u, q[k], left=0.0, right=0.0)
        img += (R * R / (dist * dist)) * vals
    img *= dbeta
    return Lattice2D(nx, ny, 2.0 * fov / nx, 2.0 * fov / ny, img.ravel())
