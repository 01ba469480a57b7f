"""File formats: JSON inputs and reports, PGM rasters and SVG contour plots.

Complex numbers are stored as ``[re, im]`` pairs everywhere.  Every writer
goes through ``atomic_write`` (temporary file in the target directory, then
rename) and JSON is emitted with sorted keys, so equal inputs give equal bytes.
"""

import json
import os
import tempfile

import numpy as np
from skimage.measure import find_contours

from .exceptions import InputFormatError
from .polynomials import GeneralPolynomial, MonicPolynomial
from .pseudospectrum import PROVENANCE_NAMES
from .structure import StructurePattern


def atomic_write(path, data):
    """Write ``data`` (bytes or str) to ``path`` via a temp file and rename."""
    if isinstance(data, str):
        data = data.encode("utf-8")
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def dumps(obj):
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_json(path, obj):
    return atomic_write(path, dumps(obj))


def load_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise InputFormatError(f"{path}: cannot read ({exc.strerror})") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputFormatError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None


def cpair(x):
    x = complex(x)
    return [float(x.real), float(x.imag)]


def _number(v, where):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise InputFormatError(f"{where}: expected a number, got {json.dumps(v)}")
    if not np.isfinite(v):
        raise InputFormatError(f"{where}: non-finite value")
    return float(v)


def _complex_list(obj, key, source):
    if key not in obj:
        raise InputFormatError(f"{source}: missing field '{key}'")
    items = obj[key]
    if not isinstance(items, list):
        raise InputFormatError(f"{source}: field '{key}' must be a list of [re, im] pairs")
    out = []
    for k, item in enumerate(items):
        where = f"{source}: {key}[{k}]"
        if not isinstance(item, list) or len(item) != 2:
            raise InputFormatError(f"{where}: expected [re, im], got {json.dumps(item)}")
        out.append(complex(_number(item[0], where), _number(item[1], where)))
    return np.array(out, dtype=complex)


def _require_object(obj, source):
    if not isinstance(obj, dict):
        raise InputFormatError(f"{source}: top-level value must be a JSON object")


def _int_field(obj, key, source):
    if key not in obj:
        raise InputFormatError(f"{source}: missing field '{key}'")
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise InputFormatError(f"{source}: field '{key}' must be an integer")
    return v


# matrices: {"n": int, "entries": [[re, im], ...]} row-major

def parse_matrix(obj, source="matrix"):
    _require_object(obj, source)
    n = _int_field(obj, "n", source)
    if n < 1:
        raise InputFormatError(f"{source}: field 'n' must be positive")
    entries = _complex_list(obj, "entries", source)
    if entries.size != n * n:
        raise InputFormatError(f"{source}: 'entries' has {entries.size} values, expected n*n = {n * n}")
    return entries.reshape(n, n)


def matrix_to_json(A):
    A = np.asarray(A, dtype=complex)
    return {"n": int(A.shape[0]), "entries": [cpair(x) for x in A.ravel()]}


def read_matrix(path):
    return parse_matrix(load_json(path), str(path))


def write_matrix(path, A):
    return write_json(path, matrix_to_json(A))


# structures: {"n": int, "positions": [[i, j], ...]} 1-based

def parse_structure(obj, source="structure"):
    _require_object(obj, source)
    n = _int_field(obj, "n", source)
    pos = obj.get("positions")
    if not isinstance(pos, list):
        raise InputFormatError(f"{source}: field 'positions' must be a list of [i, j] pairs")
    out = []
    for k, p in enumerate(pos):
        if (not isinstance(p, list) or len(p) != 2
                or any(isinstance(v, bool) or not isinstance(v, int) for v in p)):
            raise InputFormatError(f"{source}: positions[{k}]: expected [i, j] integers, got {json.dumps(p)}")
        out.append(tuple(p))
    return StructurePattern(n, out)


def structure_to_json(S):
    return {"n": S.n, "positions": [list(p) for p in S.positions]}


def read_structure(path):
    return parse_structure(load_json(path), str(path))


def write_structure(path, S):
    return write_json(path, structure_to_json(S))


# polynomials: {"monic": bool, "coeffs": [[re, im], ...]}

def parse_polynomial(obj, source="polynomial"):
    """Monic files list a_1..a_n; general files list all coefficients, highest first."""
    _require_object(obj, source)
    monic = obj.get("monic")
    if not isinstance(monic, bool):
        raise InputFormatError(f"{source}: field 'monic' must be true or false")
    coeffs = _complex_list(obj, "coeffs", source)
    if monic:
        return MonicPolynomial(coeffs)
    if coeffs.size == 0:
        raise InputFormatError(f"{source}: 'coeffs' is empty")
    return GeneralPolynomial(coeffs)


def polynomial_to_json(p):
    if isinstance(p, MonicPolynomial):
        return {"monic": True, "coeffs": [cpair(x) for x in p.a]}
    return {"monic": False, "coeffs": [cpair(x) for x in p.coeffs]}


def read_polynomial(path):
    return parse_polynomial(load_json(path), str(path))


# perturbation vectors: {"z": [[re, im], ...]}

def parse_z(obj, source="z"):
    _require_object(obj, source)
    z = _complex_list(obj, "z", source)
    if z.size == 0:
        raise InputFormatError(f"{source}: 'z' is empty")
    return z


def read_z(path):
    return parse_z(load_json(path), str(path))


# reports

def region_report(region):
    """JSON-ready summary of a GridRegion (cell counts, not the raster itself)."""
    comps = []
    for c in range(1, region.component_count + 1):
        mask = region.labels == c
        ii, jj = np.nonzero(mask)
        centroid = complex(region.box[0] + (ii.mean() + 0.5) * region.dx,
                           region.box[2] + (jj.mean() + 0.5) * region.dy)
        comps.append({"id": c, "cells": int(mask.sum()),
                      "area": float(mask.sum() * region.cell_area), "centroid": cpair(centroid)})
    prov = {}
    if region.provenance is not None:
        codes, counts = np.unique(region.provenance, return_counts=True)
        prov = {PROVENANCE_NAMES[int(k)]: int(v) for k, v in zip(codes, counts)}
    return {
        "box": [float(b) for b in region.box],
        "resolution": [int(r) for r in region.resolution],
        "epsilon": float(region.epsilon),
        "mode": region.mode,
        "structure": None if region.structure is None else structure_to_json(region.structure),
        "component_count": int(region.component_count),
        "truncated": bool(region.truncated),
        "area": region.area,
        "cell_diagonal": region.cell_diagonal,
        "provenance_counts": prov,
        "stats": {k: v for k, v in sorted(region.stats.items())},
        "components": comps,
    }


# rasters

def pgm_bytes(region):
    """Binary PGM of the region.

    Image columns follow the real axis and rows the imaginary axis with the
    largest imaginary part on top.  Outside cells are 0; a cell of component
    ``c`` is ``128 + c * step`` with ``step = max(1, 127 // component_count)``
    (clipped at 255).
    """
    n_re, n_im = region.resolution
    labels = region.labels if region.labels is not None else np.zeros((n_re, n_im), dtype=int)
    step = max(1, 127 // max(region.component_count, 1))
    img = np.where(labels > 0, np.minimum(128 + labels.astype(np.int64) * step, 255), 0).astype(np.uint8)
    img = img.T[::-1]
    header = f"P5\n{n_re} {n_im}\n255\n".encode("ascii")
    return header + np.ascontiguousarray(img).tobytes()


def write_pgm(path, region):
    return atomic_write(path, pgm_bytes(region))


def _fmt(x):
    s = f"{x:.6f}".rstrip("0").rstrip(".")
    return "0" if s in ("", "-0") else s


def component_contours(region, c):
    """Closed boundary curves of component ``c`` as arrays of complex points."""
    mask = np.pad(region.labels == c, 1).astype(float)
    out = []
    for curve in find_contours(mask, 0.5):
        re = region.box[0] + (curve[:, 0] - 0.5) * region.dx
        im = region.box[2] + (curve[:, 1] - 0.5) * region.dy
        out.append(re + 1j * im)
    return out


_PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"]


def svg_text(region, record=None, size=600):
    """SVG 1.1 drawing: one closed path per component, one polyline per tracked eigenvalue.

    Coordinates are complex-plane units with the imaginary axis flipped.
    """
    x0, x1, y0, y1 = region.box
    w, h = x1 - x0, y1 - y0
    px_w = size
    px_h = max(1, int(round(size * h / w)))
    stroke = _fmt(max(w, h) / 400.0)
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{px_w}" height="{px_h}" '
        f'viewBox="{_fmt(x0)} {_fmt(-y1)} {_fmt(w)} {_fmt(h)}">',
        f'<rect x="{_fmt(x0)}" y="{_fmt(-y1)}" width="{_fmt(w)}" height="{_fmt(h)}" fill="white"/>',
    ]
    for c in range(1, region.component_count + 1):
        parts = []
        for curve in component_contours(region, c):
            pts = " L ".join(f"{_fmt(p.real)} {_fmt(-p.imag)}" for p in curve)
            parts.append(f"M {pts} Z")
        color = _PALETTE[(c - 1) % len(_PALETTE)]
        lines.append(f'<path id="component-{c}" d="{" ".join(parts)}" fill="{color}" fill-opacity="0.25" '
                     f'stroke="{color}" stroke-width="{stroke}" fill-rule="evenodd"/>')
    if record is not None:
        for i, path in enumerate(record.paths):
            pts = " ".join(f"{_fmt(p.real)},{_fmt(-p.imag)}" for p in path)
            lines.append(f'<polyline id="path-{i + 1}" points="{pts}" fill="none" stroke="black" '
                         f'stroke-width="{stroke}"/>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def write_svg(path, region, record=None):
    return atomic_write(path, svg_text(region, record))
