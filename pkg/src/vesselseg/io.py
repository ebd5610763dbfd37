"""File formats: graph documents, PGM/PNG images, raw volumes, CSV tables."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .graph import NO_PARENT, ShapeMismatchError, VesselGraph, validate
from .raster import Mask, RasterImage2D, Volume3D


class GraphFormatError(ValueError):
    pass


class GraphValidationError(ValueError):
    pass


class ImageFormatError(ValueError):
    pass


# -- graphs --------------------------------------------------------------------


def graph_to_dict(g: VesselGraph) -> dict:
    parent = g.parent.tolist()
    nodes = [
        {
            "id": int(i), "x": float(p[0]), "y": float(p[1]), "z": float(p[2]),
            "r": float(r), "parent": None if par == NO_PARENT else int(par),
        }
        for i, p, r, par in zip(g.ids.tolist(), g.xyz, g.r.tolist(), parent)
    ]
    doc = {"fov_mm": g.fov_mm, "root": g.root, "nodes": nodes}
    if g.extra_edges.size:
        doc["edges"] = [{"from": int(a), "to": int(b)} for a, b in g.extra_edges.tolist()]
    return doc


def _field(obj, key, where):
    if not isinstance(obj, dict):
        raise GraphFormatError(f"{where}: expected an object")
    if key not in obj:
        raise GraphFormatError(f"{where}: missing field {key!r}")
    return obj[key]


def _number(v, where):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise GraphFormatError(f"{where}: expected a number, got {v!r}")
    return float(v)


def _int(v, where):
    if isinstance(v, bool) or not isinstance(v, int):
        raise GraphFormatError(f"{where}: expected an integer id, got {v!r}")
    return v


def graph_from_dict(doc, check=True) -> VesselGraph:
    nodes = _field(doc, "nodes", "document")
    if not isinstance(nodes, list):
        raise GraphFormatError("document: field 'nodes' must be a list")
    fov = _number(_field(doc, "fov_mm", "document"), "fov_mm")
    root = doc.get("root")
    if root is not None:
        root = _int(root, "root")
    ids, xyz, r, parent = [], [], [], []
    for k, node in enumerate(nodes):
        where = f"nodes[{k}]"
        ids.append(_int(_field(node, "id", where), f"{where}.id"))
        xyz.append([_number(_field(node, c, where), f"{where}.{c}") for c in "xyz"])
        r.append(_number(_field(node, "r", where), f"{where}.r"))
        p = node.get("parent")
        parent.append(NO_PARENT if p is None else _int(p, f"{where}.parent"))
    edges = []
    for k, e in enumerate(doc.get("edges", []) or []):
        where = f"edges[{k}]"
        edges.append([_int(_field(e, "from", where), f"{where}.from"),
                      _int(_field(e, "to", where), f"{where}.to")])
    g = VesselGraph(
        np.array(ids, dtype=np.int64), np.array(xyz, dtype=np.float64).reshape(-1, 3),
        np.array(r, dtype=np.float64), np.array(parent, dtype=np.int64),
        np.array(edges, dtype=np.int64).reshape(-1, 2), root, fov,
    )
    if check:
        problems = validate(g)
        if problems:
            shown = "; ".join(f"{v.kind}({v.detail})" for v in problems[:5])
            raise GraphValidationError(f"invalid graph: {shown}")
    return g


def export_graph(g: VesselGraph, path):
    Path(path).write_text(json.dumps(graph_to_dict(g), indent=1) + "\n")


def import_graph(path, check=True) -> VesselGraph:
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GraphFormatError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return graph_from_dict(doc, check=check)


# -- images --------------------------------------------------------------------


def _to_uint(data, bits):
    top = 255 if bits == 8 else 65535
    return np.round(np.clip(data, 0.0, 1.0) * top).astype(np.uint8 if bits == 8 else ">u2")


def write_pgm(path, data, bits=8, normalized=True):
    """Write a binary (P5) PGM. ``data`` in [0, 1] unless ``normalized=False``."""
    if bits not in (8, 16):
        raise ValueError("bits must be 8 or 16")
    arr = np.asarray(getattr(data, "data", data))
    if arr.ndim != 2:
        raise ValueError("PGM data must be 2D")
    if normalized:
        raw = _to_uint(arr.astype(np.float64), bits)
    else:
        raw = arr.astype(np.uint8 if bits == 8 else ">u2")
    h, w = arr.shape
    maxval = 255 if bits == 8 else 65535
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n{maxval}\n".encode("ascii"))
        fh.write(raw.tobytes())


def write_mask_pgm(path, mask):
    m = np.asarray(getattr(mask, "data", mask)).astype(bool)
    write_pgm(path, m.astype(np.uint8) * 255, bits=8, normalized=False)


def _pgm_tokens(buf):
    tokens, pos = [], 0
    while len(tokens) < 4:
        while pos < len(buf) and buf[pos:pos + 1].isspace():
            pos += 1
        if buf[pos:pos + 1] == b"#":
            while pos < len(buf) and buf[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(buf) and not buf[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ImageFormatError("truncated PGM header")
        tokens.append(buf[start:pos])
    return tokens, pos + 1


def read_pgm(path):
    """Read a P5 PGM; returns ``(uint array, maxval)``."""
    buf = Path(path).read_bytes()
    if buf[:2] != b"P5":
        raise ImageFormatError(f"{path}: not a binary PGM (P5)")
    (magic, w, h, maxval), pos = _pgm_tokens(buf)
    w, h, maxval = int(w), int(h), int(maxval)
    dtype = np.uint8 if maxval < 256 else np.dtype(">u2")
    count = w * h
    need = count * np.dtype(dtype).itemsize
    if len(buf) - pos < need:
        raise ImageFormatError(f"{path}: truncated pixel data")
    data = np.frombuffer(buf, dtype=dtype, count=count, offset=pos).reshape(h, w)
    return data.astype(np.uint16 if maxval >= 256 else np.uint8), maxval


def read_gray(path):
    """Read a grayscale PGM or PNG as ``(array, maxval)``."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"unreadable file: {path}")
    if path.suffix.lower() in (".pgm", ".pnm"):
        return read_pgm(path)
    from PIL import Image

    try:
        im = Image.open(path)
    except Exception as exc:  # PIL raises assorted types
        raise ImageFormatError(f"{path}: unreadable image ({exc})") from None
    if im.mode == "L":
        return np.asarray(im, dtype=np.uint8), 255
    if im.mode in ("I;16", "I;16B", "I"):
        arr = np.asarray(im)
        return arr.astype(np.uint16), 65535
    raise ImageFormatError(f"{path}: non-grayscale image (mode {im.mode})")


def load_image(path) -> RasterImage2D:
    data, maxval = read_gray(path)
    return RasterImage2D(data.astype(np.float64) / maxval)


def load_mask(path) -> Mask:
    data, _ = read_gray(path)
    top = data.max()
    if top == 0:
        return Mask(np.zeros(data.shape, dtype=np.uint8))
    return Mask((data >= 0.5 * top).astype(np.uint8))


@dataclass(frozen=True)
class DatasetPair:
    image_path: str
    mask_path: str
    fov_mm: float = 3.0
    source: str = "external-octa"


def ingest_external(pair: DatasetPair):
    """Load an image/mask pair: image normalized to [0, 1], mask binarized at
    half its maximum."""
    img = load_image(pair.image_path)
    mask = load_mask(pair.mask_path)
    if img.data.shape != mask.data.shape:
        raise ShapeMismatchError(
            f"shape-mismatch: image {img.data.shape} vs mask {mask.data.shape}"
        )
    h, w = img.data.shape
    img = RasterImage2D(img.data, pair.fov_mm / w)
    return img, mask


# -- volumes -------------------------------------------------------------------


def write_volume(path, vol: Volume3D):
    """Raw little-endian uint16 voxels plus a ``.json`` sidecar header."""
    path = Path(path)
    raw = np.round(np.clip(vol.data, 0.0, 1.0) * 65535).astype("<u2")
    path.write_bytes(raw.tobytes())
    header = {"dims": list(vol.dims), "voxel_size": list(vol.voxel_size), "dtype": "uint16le",
              "order": "z,y,x"}
    path.with_suffix(path.suffix + ".json").write_text(json.dumps(header) + "\n")


def read_volume(path) -> Volume3D:
    path = Path(path)
    header = json.loads(path.with_suffix(path.suffix + ".json").read_text())
    w, h, d = header["dims"]
    raw = np.frombuffer(path.read_bytes(), dtype="<u2").reshape(d, h, w)
    return Volume3D(raw.astype(np.float64) / 65535, tuple(header["voxel_size"]))


# -- tables --------------------------------------------------------------------


def write_csv(path, rows, fields):
    with open(path, "w", newline="") as fh:
        wr = csv.DictWriter(fh, fieldnames=fields, extrasaction="ignore")
        wr.writeheader()
        for row in rows:
            wr.writerow({k: _fmt(row[k]) for k in fields})


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return repr(v) if math.isfinite(v) else str(v)
    if isinstance(v, np.integer):
        return int(v)
    return v


def read_feature_csv(path) -> np.ndarray:
    """Numeric CSV (optional header row) as a 2D float array."""
    rows = []
    with open(path, newline="") as fh:
        for k, rec in enumerate(csv.reader(fh)):
            if not rec or all(not c.strip() for c in rec):
                continue
            try:
                rows.append([float(c) for c in rec])
            except ValueError:
                if k == 0:
                    continue  # header
                raise ValueError(f"{path}: row {k + 1} is not numeric") from None
    if not rows:
        raise ValueError(f"{path}: no numeric rows")
    return np.array(rows, dtype=np.float64)


def image_stats(img, mask=None) -> dict:
    x = np.asarray(getattr(img, "data", img), dtype=np.float64)
    out = {"height": x.shape[0], "width": x.shape[1], "mean": float(x.mean()),
           "std": float(x.std()), "min": float(x.min()), "max": float(x.max())}
    if mask is not None:
        m = np.asarray(getattr(mask, "data", mask)).astype(bool)
        out["mean_inside"] = float(x[m].mean()) if m.any() else float("nan")
        out["mean_outside"] = float(x[~m].mean()) if (~m).any() else float("nan")
    return out
