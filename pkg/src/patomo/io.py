"""Raw float images with text headers, PNG previews, and YAML configs.

An array ``name.raw`` holds little-endian values in row-major order and
``name.hdr`` describes it with ``key = value`` lines (``shape``,
``dtype``, ``kind``, ...).  Sinograms are written angle-major so the
byte stream is detector-fastest; :func:`read_array` undoes this.
"""
from pathlib import Path

import numpy as np
import yaml
from PIL import Image

from . import __version__


def _paths(stem):
    stem = Path(stem)
    if stem.suffix in (".raw", ".hdr", ".png"):
        stem = stem.with_suffix("")
    return stem.with_suffix(".raw"), stem.with_suffix(".hdr"), stem.with_suffix(".png")


def write_array(stem, array, kind="image", dtype="<f4", preview=True, **meta):
    """Write ``stem.raw`` + ``stem.hdr`` (+ ``stem.png``) and return the raw path.

    ``kind="sinogram"`` expects a ``(detector, angle)`` array.
    """
    raw, hdr, png = _paths(stem)
    raw.parent.mkdir(parents=True, exist_ok=True)
    array = np.asarray(array)
    stored = array.T if kind == "sinogram" else array
    np.ascontiguousarray(stored, dtype=np.dtype(dtype)).tofile(raw)
    lines = {
        "shape": " ".join(str(s) for s in stored.shape),
        "dtype": np.dtype(dtype).str,
        "order": "C",
        "kind": kind,
        "layout": "angle detector" if kind == "sinogram" else "row column",
        "generator": f"patomo {__version__}",
    }
    lines.update({k: str(v) for k, v in meta.items()})
    hdr.write_text("".join(f"{k} = {v}\n" for k, v in lines.items()))
    if preview:
        write_png(png, array)
    return raw


def read_header(stem):
    _, hdr, _ = _paths(stem)
    out = {}
    for line in hdr.read_text().splitlines():
        if "=" in line:
            key, value = line.split("=", 1)
            out[key.strip()] = value.strip()
    return out


def read_array(stem):
    """Load an array written by :func:`write_array` as float64 (labels keep their integer dtype)."""
    raw, _, _ = _paths(stem)
    header = read_header(stem)
    shape = tuple(int(s) for s in header["shape"].split())
    dtype = np.dtype(header["dtype"])
    data = np.fromfile(raw, dtype=dtype)
    if data.size != int(np.prod(shape)):
        raise ValueError(f"{raw}: expected {np.prod(shape)} values, found {data.size}")
    data = data.reshape(shape)
    if header.get("kind") == "sinogram":
        data = data.T
    if dtype.kind == "f":
        data = data.astype(np.float64)
    return np.ascontiguousarray(data)


def write_png(path, array):
    """8-bit greyscale preview, min-max windowed."""
    a = np.asarray(array, dtype=np.float64)
    lo, hi = float(a.min()), float(a.max())
    scaled = np.zeros_like(a) if hi <= lo else (a - lo) / (hi - lo)
    Image.fromarray(np.round(255 * scaled).astype(np.uint8)).save(path)


def load_yaml(path):
    with open(path) as fh:
        data = yaml.safe_load(fh) or {}
    if not isinstance(data, dict):
        raise ValueError(f"{path}: config must be a mapping of key: value pairs")
    return data


def dump_yaml(path, data):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        yaml.safe_dump(data, fh, sort_keys=False, default_flow_style=None)
