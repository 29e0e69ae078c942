"""Discretized linear forward maps and the additive Gaussian noise model."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from .exceptions import DegenerateSignalError, DimensionError, ParameterError

log = logging.getLogger(__name__)


class SparseOperator:
    """Linear map stored column-major so one column costs O(nnz(column)).

    Backed by a ``scipy.sparse.csc_matrix``; ``col_ptr``, ``row_idx`` and
    ``vals`` expose the raw CSC arrays for compiled inner loops.
    """

    def __init__(self, matrix, warnings=()):
        m = sparse.csc_matrix(matrix, dtype=float)
        m.sum_duplicates()
        m.sort_indices()
        if not np.all(np.isfinite(m.data)):
            raise ParameterError("operator entries must be finite")
        self.matrix = m
        self.col_ptr = m.indptr.astype(np.int64)
        self.row_idx = m.indices.astype(np.int64)
        self.vals = m.data
        self.warnings = list(warnings)

    @property
    def n_rows(self):
        return self.matrix.shape[0]

    @property
    def n_cols(self):
        return self.matrix.shape[1]

    @property
    def shape(self):
        return self.matrix.shape

    @property
    def nnz(self):
        return self.matrix.nnz

    def column(self, j):
        """(rows, values) of column ``j``."""
        lo, hi = self.col_ptr[j], self.col_ptr[j + 1]
        return self.row_idx[lo:hi], self.vals[lo:hi]

    def transpose(self):
        return SparseOperator(self.matrix.T)

    @property
    def T(self):
        return self.transpose()

    def toarray(self):
        return self.matrix.toarray()

    def __repr__(self):
        return f"SparseOperator({self.n_rows}x{self.n_cols}, nnz={self.nnz})"


def apply(op, x):
    x = np.asarray(x, dtype=float)
    if x.shape[0] != op.n_cols:
        raise DimensionError(f"operator has {op.n_cols} columns, vector has length {x.shape[0]}")
    return op.matrix @ x


def apply_transpose(op, y):
    y = np.asarray(y, dtype=float)
    if y.shape[0] != op.n_rows:
        raise DimensionError(f"operator has {op.n_rows} rows, vector has length {y.shape[0]}")
    return op.matrix.T @ y


@dataclass(frozen=True)
class NoiseModel:
    """Independent zero-mean Gaussian noise with a common standard deviation."""

    stddev: float
    structure: str = "diagonal"

    def __post_init__(self):
        if not (self.stddev > 0 and math.isfinite(self.stddev)):
            raise ParameterError(f"noise stddev must be positive, got {self.stddev!r}")
        if self.structure != "diagonal":
            raise ParameterError("only diagonal noise covariance is supported")

    @property
    def inv_var(self):
        return 1.0 / (self.stddev * self.stddev)


def add_noise(m_clean, level, rng):
    """Add white noise with ``stddev = level * max|m_clean|``.

    Returns ``(m, NoiseModel)``.
    """
    m_clean = np.asarray(m_clean, dtype=float)
    if not level > 0:
        raise ParameterError(f"noise level must be positive, got {level!r}")
    peak = float(np.max(np.abs(m_clean))) if m_clean.size else 0.0
    if peak == 0.0:
        raise DegenerateSignalError("cannot scale noise to an all-zero signal")
    noise = NoiseModel(level * peak)
    return m_clean + noise.stddev * rng.standard_normal(m_clean.shape), noise


# -- 1D convolution ---------------------------------------------------------


def cosine_kernel(s, width):
    """Cosine bump ``cos(pi s / width)`` on ``|s| <= width/2`` (unnormalized)."""
    s = np.asarray(s, dtype=float)
    return np.where(np.abs(s) <= 0.5 * width, np.cos(np.pi * s / width), 0.0)


def build_convolution_operator(n, kernel_width=0.04):
    """Convolution with a cosine kernel on ``n`` points ``t_j = j/(n-1)`` of [0, 1].

    Entry ``(i, j) = k(t_i - t_j) * h`` where the kernel is scaled so that its
    quadrature sum ``sum_j k(j h) h`` equals one; rows away from the ends of
    the interval therefore sum to one exactly.
    """
    if n < 2:
        raise ParameterError("convolution operator needs n >= 2")
    if not 0.0 < kernel_width < 1.0:
        raise ParameterError("kernel_width must lie in (0, 1)")
    h = 1.0 / (n - 1)
    half = int(math.floor(0.5 * kernel_width / h + 1e-12))
    offsets = np.arange(-half, half + 1)
    taps = cosine_kernel(offsets * h, kernel_width)
    taps = taps / (taps.sum() * h)
    diags = [np.full(n - abs(o), taps[k] * h) for k, o in enumerate(offsets)]
    mat = sparse.diags(diags, offsets=list(-offsets), shape=(n, n), format="csc")
    return SparseOperator(mat)


# -- fan-beam tomography ----------------------------------------------------


@dataclass(frozen=True)
class FanBeamGeometry:
    """Flat-detector fan-beam geometry; angles are source positions in degrees.

    The source sits at ``source_radius * (cos b, sin b)``; the detector centre
    is diametrically opposite at ``detector_radius`` with its axis along
    ``(-sin b, cos b)``.
    """

    source_radius: float = 4.0
    detector_radius: float = 2.0
    detector_width: float = 3.0
    n_detector_pixels: int = 200
    angles: tuple = field(default_factory=lambda: tuple(np.linspace(-10.0, 190.0, 41)))

    def __post_init__(self):
        object.__setattr__(self, "angles", tuple(float(a) for a in self.angles))
        for name in ("source_radius", "detector_radius", "detector_width"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ParameterError(f"{name} must be positive, got {v!r}")
        if int(self.n_detector_pixels) < 1:
            raise ParameterError("need at least one detector pixel")
        if len(self.angles) < 1:
            raise ParameterError("need at least one projection angle")

    @property
    def n_angles(self):
        return len(self.angles)

    @property
    def n_rays(self):
        return self.n_angles * self.n_detector_pixels

    @property
    def source_detector_distance(self):
        return self.source_radius + self.detector_radius

    def detector_offsets(self):
        """Pixel-centre positions along the detector axis."""
        w, n = self.detector_width, self.n_detector_pixels
        return -0.5 * w + (np.arange(n) + 0.5) * (w / n)

    def fan_angles(self):
        return np.arctan(self.detector_offsets() / self.source_detector_distance)

    def field_of_view_radius(self):
        return self.source_radius * math.sin(float(np.max(np.abs(self.fan_angles()))))

    def ray_endpoints(self):
        """Source and detector-pixel points, each shaped ``(n_angles, n_det, 2)``."""
        beta = np.deg2rad(np.asarray(self.angles))
        c, s = np.cos(beta)[:, None], np.sin(beta)[:, None]
        t = self.detector_offsets()[None, :]
        src = np.stack(np.broadcast_arrays(self.source_radius * c, self.source_radius * s), axis=-1)
        det = np.stack(
            (-self.detector_radius * c - t * s, -self.detector_radius * s + t * c), axis=-1
        )
        return np.broadcast_to(src, det.shape).copy(), det


def siddon_ray(p0, p1, nx, ny, half_width):
    """Pixels crossed by the segment p0 -> p1 and the length inside each.

    Pixels tile ``[-w, w]^2`` with ``w = half_width``; pixel ``(i, j)`` has
    row ``i`` counted from the top (``y = w``) and column ``j`` from the left.
    Returns ``(flat_index, lengths)``.
    """
    x0, y0 = p0
    dx, dy = p1[0] - x0, p1[1] - y0
    length = math.hypot(dx, dy)
    w = half_width
    px, py = 2.0 * w / nx, 2.0 * w / ny

    # parametric range inside the square
    lo, hi = 0.0, 1.0
    for d, o in ((dx, x0), (dy, y0)):
        if d == 0.0:
            if o < -w or o > w:
                return np.empty(0, dtype=np.int64), np.empty(0)
            continue
        a1, a2 = (-w - o) / d, (w - o) / d
        lo, hi = max(lo, min(a1, a2)), min(hi, max(a1, a2))
    if hi <= lo:
        return np.empty(0, dtype=np.int64), np.empty(0)

    parts = [np.array([lo, hi])]
    if dx != 0.0:
        ax = (-w + px * np.arange(nx + 1) - x0) / dx
        parts.append(ax[(ax > lo) & (ax < hi)])
    if dy != 0.0:
        ay = (-w + py * np.arange(ny + 1) - y0) / dy
        parts.append(ay[(ay > lo) & (ay < hi)])
    alpha = np.unique(np.concatenate(parts))
    seg = np.diff(alpha)
    mid = 0.5 * (alpha[1:] + alpha[:-1])
    xm, ym = x0 + mid * dx, y0 + mid * dy
    col = np.clip(np.floor((xm + w) / px).astype(np.int64), 0, nx - 1)
    row = np.clip(np.floor((w - ym) / py).astype(np.int64), 0, ny - 1)
    keep = seg > 0.0
    return (row * nx + col)[keep], (seg * length)[keep]


def build_fanbeam_operator(geom, nx, ny, fov=1.0):
    """System matrix of exact ray-pixel intersection lengths.

    Rows are ordered angle-major: ``row = angle_index * n_det + pixel_index``.
    Rays missing the image leave empty rows and are listed in ``op.warnings``.
    """
    if nx < 1 or ny < 1:
        raise ParameterError("image must have at least one pixel per axis")
    if not fov > 0:
        raise ParameterError("fov half-width must be positive")
    src, det = geom.ray_endpoints()
    src = src.reshape(-1, 2)
    det = det.reshape(-1, 2)
    rows, cols, vals = [], [], []
    empty = 0
    for r in range(src.shape[0]):
        idx, seg = siddon_ray(src[r], det[r], nx, ny, fov)
        if idx.size == 0:
            empty += 1
            continue
        rows.append(np.full(idx.size, r))
        cols.append(idx)
        vals.append(seg)
    warnings = []
    if empty:
        msg = f"{empty} of {src.shape[0]} rays miss the image domain"
        log.warning(msg)
        warnings.append(msg)
    if rows:
        mat = sparse.csc_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(src.shape[0], nx * ny),
        )
    else:
        mat = sparse.csc_matrix((src.shape[0], nx * ny))
    return SparseOperator(mat, warnings=warnings)


# -- triplet export ---------------------------------------------------------


def export_triplets(op, path):
    """Write ``op`` as text: a header line ``n_rows n_cols nnz`` then ``row col value`` lines."""
    coo = op.matrix.tocoo()
    order = np.lexsort((coo.col, coo.row))
    with open(path, "w") as fh:
        fh.write("# sparse operator triplets: row col value (0-based)\n")
        fh.write(f"{op.n_rows} {op.n_cols} {coo.nnz}\n")
        for k in order:
            fh.write(f"{coo.row[k]} {coo.col[k]} {coo.data[k]:.17g}\n")


def load_triplets(path):
    with open(path) as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    n_rows, n_cols, nnz = (int(v) for v in lines[0].split())
    if nnz:
        data = np.loadtxt(lines[1:], ndmin=2)
        r, c, v = data[:, 0].astype(np.int64), data[:, 1].astype(np.int64), data[:, 2]
    else:
        r = c = np.empty(0, dtype=np.int64)
        v = np.empty(0)
    if r.size != nnz:
        raise DimensionError(f"header announces {nnz} entries, file holds {r.size}")
    return SparseOperator(sparse.csc_matrix((v, (r, c)), shape=(n_rows, n_cols)))
