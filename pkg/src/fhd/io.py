"""Deterministic writers: 8-bit PGM (always), PNG (when Pillow imports), 17-digit CSV, sorted JSON."""

import csv
import json
import math

import numpy as np

try:
    from PIL import Image
except ImportError:  # pragma: no cover - Pillow is a declared dependency
    Image = None


def to_gray(values, lo=None, hi=None):
    """Linear map of finite values onto 0..255; non-finite cells become 0."""
    v = np.asarray(values, dtype=float)
    finite = np.isfinite(v)
    if not finite.any():
        return np.zeros(v.shape, dtype=np.uint8)
    lo = float(v[finite].min()) if lo is None else lo
    hi = float(v[finite].max()) if hi is None else hi
    span = hi - lo if hi > lo else 1.0
    g = np.clip((np.where(finite, v, lo) - lo) / span, 0.0, 1.0)
    return np.where(finite, np.round(255 * g), 0).astype(np.uint8)


def write_pgm(path, gray):
    gray = np.ascontiguousarray(gray, dtype=np.uint8)
    if gray.ndim != 2:
        raise ValueError("PGM needs a 2-d array")
    rows, cols = gray.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{cols} {rows}\n255\n".encode("ascii"))
        fh.write(gray.tobytes())


def read_pgm(path):
    with open(path, "rb") as fh:
        data = fh.read()
    parts = data.split(maxsplit=4)
    if parts[0] != b"P5" or int(parts[3]) != 255:
        raise ValueError(f"{path}: not an 8-bit binary PGM")
    cols, rows = int(parts[1]), int(parts[2])
    return np.frombuffer(parts[4], dtype=np.uint8, count=rows * cols).reshape(rows, cols)


def write_image(out_dir, stem, gray):
    """Write stem.pgm and, when possible, stem.png; returns the file names written."""
    names = [f"{stem}.pgm"]
    write_pgm(out_dir / names[0], gray)
    if Image is not None:
        names.append(f"{stem}.png")
        # no timestamps or text chunks, so bytes are reproducible
        Image.fromarray(np.ascontiguousarray(gray, dtype=np.uint8), mode="L").save(out_dir / names[1], optimize=False)
    return names


def fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    if isinstance(x, complex):
        return f"{x.real:.17g}{x.imag:+.17g}j"
    return str(x)


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(x) for x in row])


def jsonable(obj):
    """Plain JSON types; complex becomes [re, im], non-finite floats become strings."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    if isinstance(obj, complex):
        return [jsonable(obj.real), jsonable(obj.imag)]
    return obj


def write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(jsonable(obj), fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")
