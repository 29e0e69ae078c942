"""Plain-text output formats: CSV with fixed precision and ASCII PGM (P2)."""

import numpy as np

FLOAT_FMT = "{:.12g}"


def format_value(v):
    if isinstance(v, (str, bytes)):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return FLOAT_FMT.format(float(v))


def write_csv(path, header, rows):
    """Write rows with 12 significant digits for floats and a header line."""
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(format_value(v) for v in row) + "\n")


def write_columns(path, columns):
    """Write a dict of equal-length 1D arrays as CSV columns."""
    names = list(columns)
    arrays = [np.asarray(columns[k]) for k in names]
    write_csv(path, names, zip(*arrays))


def read_csv(path):
    """Return ``(header, array)`` for a numeric CSV written by :func:`write_csv`."""
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return header, data


def write_pgm(path, image, vmin=None, vmax=None, maxval=255):
    """Write a 2D array as ASCII PGM.

    Values are mapped linearly from ``[vmin, vmax]`` (default: the image
    range) to ``[0, maxval]`` and clipped.  The header reads ``P2 <nx> <ny>``,
    a comment recording the window, then ``maxval``.
    """
    img = np.asarray(image, dtype=float)
    ny, nx = img.shape
    lo = float(np.min(img)) if vmin is None else float(vmin)
    hi = float(np.max(img)) if vmax is None else float(vmax)
    span = hi - lo if hi > lo else 1.0
    q = np.clip(np.rint((img - lo) / span * maxval), 0, maxval).astype(int)
    with open(path, "w", newline="\n") as fh:
        fh.write(f"P2 {nx} {ny}\n")
        fh.write(f"# window {FLOAT_FMT.format(lo)} {FLOAT_FMT.format(hi)}\n")
        fh.write(f"{maxval}\n")
        for row in q:
            fh.write(" ".join(str(v) for v in row) + "\n")


def read_pgm(path):
    """Read an ASCII PGM; returns ``(image, maxval, window)`` (window may be None)."""
    tokens, window = [], None
    with open(path) as fh:
        text = fh.read()
    for line in text.splitlines():
        if line.startswith("#"):
            parts = line[1:].split()
            if parts and parts[0] == "window":
                window = (float(parts[1]), float(parts[2]))
            continue
        tokens.extend(line.split())
    if tokens[0] != "P2":
        raise ValueError(f"{path} is not an ASCII PGM")
    nx, ny, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    img = np.array(tokens[4:4 + nx * ny], dtype=int).reshape(ny, nx)
    return img, maxval, window
