"""Dense raster data model: discrete boundaries, connected components, file I/O.

Conventions used throughout the package:

* arrays are row-major with shape ``(height, width)`` and are indexed
  ``[y, x]``; pixel centers sit at integer coordinates ``(x, y)``,
* scalar fields are float arrays, label fields are non-negative integer
  arrays (0 = background, k >= 1 = instance id), pixel sets are boolean
  masks,
* vector fields are stored as ``(2, height, width)`` arrays with the x
  component in plane 0 and the y component in plane 1,
* inter-pixel edges are ``(n, 4)`` integer arrays with columns
  ``(x1, y1, x2, y2)``, endpoints 4-adjacent and the lexicographically
  smaller pixel first, rows sorted by ``(y1, x1, y2, x2)``.

The image border is not a boundary by default: objects may continue
outside the crop. ``region_boundary`` can optionally emit border
pseudo-edges whose outer endpoint lies one pixel outside the domain.
"""

from __future__ import annotations

import io
import os
import struct

import numpy as np
from PIL import Image
from scipy import ndimage

__all__ = [
    "SkfError",
    "SkfBadMagic",
    "SkfBadDtype",
    "SkfTruncated",
    "SkfDimOverflow",
    "PngFormatError",
    "boundary_edges",
    "region_boundary",
    "canonical_edges",
    "connected_components",
    "compact_labels",
    "read_array",
    "write_array",
    "read_label_png",
    "write_label_png",
    "read_stroke_png",
    "write_stroke_png",
    "STROKE_UNLABELED",
    "STROKE_BACKGROUND",
    "STROKE_FOREGROUND",
    "STROKE_BOUNDARY",
]

STROKE_UNLABELED = 0
STROKE_BACKGROUND = 1
STROKE_FOREGROUND = 2
STROKE_BOUNDARY = 3

_SKF_MAGIC = b"SKF1"
_SKF_DTYPES = {
    1: np.dtype("<f4"),
    2: np.dtype("<f8"),
    3: np.dtype("<u1"),
    4: np.dtype("<u2"),
    5: np.dtype("<i4"),
}
_SKF_CODES = {v: k for k, v in _SKF_DTYPES.items()}
# element-count cap; keeps dims * itemsize well inside addressable range
_SKF_MAX_ELEMS = 2**31


class SkfError(ValueError):
    """Malformed SKF container."""


class SkfBadMagic(SkfError):
    pass


class SkfBadDtype(SkfError):
    pass


class SkfTruncated(SkfError):
    pass


class SkfDimOverflow(SkfError):
    pass


class PngFormatError(ValueError):
    """PNG content outside the supported single-channel formats/codes."""


def _atomic_write_bytes(path, data):
    """Write via a temp name in the same directory, then rename into place."""
    tmp = f"{path}.tmp{os.getpid()}"
    try:
        with open(tmp, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def canonical_edges(edges):
    """Return edges as a canonical (n, 4) int64 array.

    Within each row the lexicographically smaller pixel comes first;
    rows are deduplicated and sorted by (y1, x1, y2, x2) so that equal
    edge sets serialize to identical bytes.
    """
    e = np.asarray(edges, dtype=np.int64).reshape(-1, 4)
    if e.shape[0] == 0:
        return np.zeros((0, 4), dtype=np.int64)
    first = e[:, :2]
    second = e[:, 2:]
    swap = (second[:, 1] < first[:, 1]) | (
        (second[:, 1] == first[:, 1]) & (second[:, 0] < first[:, 0])
    )
    e = e.copy()
    e[swap] = e[swap][:, [2, 3, 0, 1]]
    e = np.unique(e, axis=0)
    order = np.lexsort((e[:, 2], e[:, 3], e[:, 0], e[:, 1]))
    return np.ascontiguousarray(e[order])


def boundary_edges(labels):
    """All inter-pixel edges whose endpoints carry different labels.

    Background-instance and instance-instance label changes alike; this
    is the discrete realization of the full object-boundary set of a
    label field.
    """
    lab = np.asarray(labels)
    if lab.ndim != 2:
        raise ValueError("label field must be 2-D")
    h, w = lab.shape
    parts = []
    dh = lab[:, :-1] != lab[:, 1:]
    ys, xs = np.nonzero(dh)
    parts.append(np.stack([xs, ys, xs + 1, ys], axis=1))
    dv = lab[:-1, :] != lab[1:, :]
    ys, xs = np.nonzero(dv)
    parts.append(np.stack([xs, ys, xs, ys + 1], axis=1))
    if not parts:
        return np.zeros((0, 4), dtype=np.int64)
    return canonical_edges(np.concatenate(parts, axis=0))


def region_boundary(region, border_is_boundary=False):
    """Edges between in-region pixels and out-of-region in-domain pixels.

    With ``border_is_boundary`` the image-border sides of in-region
    pixels are additionally emitted as pseudo-edges whose outer endpoint
    lies one pixel outside the domain (the derived site then sits at the
    outward half-pixel offset).
    """
    m = np.asarray(region, dtype=bool)
    if m.ndim != 2:
        raise ValueError("pixel set must be 2-D")
    h, w = m.shape
    parts = []
    dh = m[:, :-1] != m[:, 1:]
    ys, xs = np.nonzero(dh)
    parts.append(np.stack([xs, ys, xs + 1, ys], axis=1))
    dv = m[:-1, :] != m[1:, :]
    ys, xs = np.nonzero(dv)
    parts.append(np.stack([xs, ys, xs, ys + 1], axis=1))
    if border_is_boundary:
        ys = np.nonzero(m[:, 0])[0]
        parts.append(np.stack([np.full_like(ys, -1), ys, np.zeros_like(ys), ys], axis=1))
        ys = np.nonzero(m[:, w - 1])[0]
        parts.append(np.stack([np.full_like(ys, w - 1), ys, np.full_like(ys, w), ys], axis=1))
        xs = np.nonzero(m[0, :])[0]
        parts.append(np.stack([xs, np.full_like(xs, -1), xs, np.zeros_like(xs)], axis=1))
        xs = np.nonzero(m[h - 1, :])[0]
        parts.append(np.stack([xs, np.full_like(xs, h - 1), xs, np.full_like(xs, h)], axis=1))
    return canonical_edges(np.concatenate(parts, axis=0)) if parts else np.zeros((0, 4), np.int64)


_CROSS = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)


def connected_components(mask):
    """4-connected components, numbered 1..K in first-encounter raster order."""
    m = np.asarray(mask, dtype=bool)
    lab, _ = ndimage.label(m, structure=_CROSS)
    return compact_labels(lab)


def compact_labels(labels):
    """Renumber positive labels to 1..K in first-encounter raster order."""
    lab = np.asarray(labels)
    flat = lab.ravel()
    nz = np.nonzero(flat)[0]
    if nz.size == 0:
        return np.zeros(lab.shape, dtype=np.int32)
    ids, first = np.unique(flat[nz], return_index=True)
    order = np.argsort(first, kind="stable")
    lut = np.zeros(int(ids.max()) + 1, dtype=np.int32)
    lut[ids[order]] = np.arange(1, len(ids) + 1, dtype=np.int32)
    return lut[lab]


def write_array(value, path):
    """Write an array to the SKF container (bit-exact round trip).

    Layout: magic ``SKF1``, one dtype-code byte (1=f32, 2=f64, 3=u8,
    4=u16, 5=i32), one rank byte, rank little-endian u32 dims (outermost
    first), then the row-major little-endian payload.
    """
    a = np.asarray(value)
    base = a.dtype.newbyteorder("<")
    if base not in _SKF_CODES:
        raise SkfBadDtype(f"dtype {a.dtype} has no SKF code")
    code = _SKF_CODES[base]
    le_dtype = _SKF_DTYPES[code]
    if a.ndim < 1 or a.ndim > 8:
        raise SkfDimOverflow(f"rank {a.ndim} outside supported range 1..8")
    if a.size > _SKF_MAX_ELEMS:
        raise SkfDimOverflow(f"{a.size} elements exceed the container limit")
    header = _SKF_MAGIC + struct.pack("<BB", code, a.ndim)
    header += struct.pack(f"<{a.ndim}I", *a.shape)
    payload = np.ascontiguousarray(a, dtype=le_dtype).tobytes()
    _atomic_write_bytes(path, header + payload)


def read_array(path):
    """Read an SKF container; returns the array with its stored shape."""
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 6:
        raise SkfTruncated("file shorter than the fixed header")
    if data[:4] != _SKF_MAGIC:
        raise SkfBadMagic(f"bad magic {data[:4]!r}")
    code, rank = data[4], data[5]
    if code not in _SKF_DTYPES:
        raise SkfBadDtype(f"unknown dtype code {code}")
    if rank < 1 or rank > 8:
        raise SkfDimOverflow(f"rank {rank} outside supported range 1..8")
    dim_end = 6 + 4 * rank
    if len(data) < dim_end:
        raise SkfTruncated("file ends inside the dimension list")
    dims = struct.unpack(f"<{rank}I", data[6:dim_end])
    n = 1
    for d in dims:
        n *= d
    if n > _SKF_MAX_ELEMS:
        raise SkfDimOverflow(f"{n} elements exceed the container limit")
    dtype = _SKF_DTYPES[code]
    expected = n * dtype.itemsize
    if len(data) - dim_end != expected:
        raise SkfTruncated(
            f"payload holds {len(data) - dim_end} bytes, dims require {expected}"
        )
    arr = np.frombuffer(data[dim_end:], dtype=dtype).reshape(dims)
    return arr.astype(dtype.newbyteorder("="), copy=True)


def _open_single_channel(path):
    img = Image.open(path)
    if img.mode not in ("L", "I", "I;16"):
        raise PngFormatError(f"expected single-channel grayscale PNG, got mode {img.mode}")
    arr = np.asarray(img)
    if arr.ndim != 2:
        raise PngFormatError("expected a single-channel image")
    return arr


def read_label_png(path):
    """Read an 8- or 16-bit single-channel PNG as a label field (values verbatim)."""
    arr = _open_single_channel(path)
    return arr.astype(np.int32)


def write_label_png(labels, path):
    lab = np.asarray(labels)
    if lab.min() < 0 or lab.max() > 0xFFFF:
        raise ValueError("labels must fit in uint16 for PNG export")
    buf = io.BytesIO()
    Image.fromarray(lab.astype(np.uint16)).save(buf, format="PNG")
    _atomic_write_bytes(path, buf.getvalue())


def read_stroke_png(path):
    """Read a stroke raster: 0=unlabeled, 1=background, 2=foreground, 3=manual boundary."""
    arr = _open_single_channel(path)
    bad = arr > STROKE_BOUNDARY
    if bad.any():
        codes = sorted(np.unique(arr[bad]).tolist())
        raise PngFormatError(f"unknown stroke codes {codes}")
    return arr.astype(np.uint8)


def write_stroke_png(codes, path):
    arr = np.asarray(codes)
    if arr.min() < 0 or arr.max() > STROKE_BOUNDARY:
        raise ValueError("stroke codes must be in {0, 1, 2, 3}")
    buf = io.BytesIO()
    Image.fromarray(arr.astype(np.uint8), mode="L").save(buf, format="PNG")
    _atomic_write_bytes(path, buf.getvalue())
