"""Plain-text inputs and outputs: key=value configs, CSV tables, VTK dumps."""

import math
import os

import numpy as np

NAN_SENTINEL = "—"


class ConfigError(ValueError):
    """Malformed configuration file or override."""


def parse_assignment(text, source="override"):
    if "=" not in text:
        raise ConfigError(f"{source}: expected key=value, got {text!r}")
    key, value = text.split("=", 1)
    key = key.strip()
    if not key:
        raise ConfigError(f"{source}: empty key in {text!r}")
    return key, value.strip()


def read_config(path=None, overrides=()):
    """Read a flat ``key = value`` file, then apply ``key=value`` overrides.

    Blank lines and ``#`` comments are ignored.  Values stay strings; typing
    happens in the consumer.
    """
    values = {}
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                lines = fh.readlines()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        for lineno, raw in enumerate(lines, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, value = parse_assignment(line, f"{path}:{lineno}")
            if key in values:
                raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
            values[key] = value
    for item in overrides:
        key, value = parse_assignment(item)
        values[key] = value
    return values


def format_number(x):
    """17 significant digits; NaN becomes the dash sentinel."""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    x = float(x)
    if math.isnan(x):
        return NAN_SENTINEL
    return f"{x:.17g}"


def parse_number(text):
    text = text.strip()
    if text == NAN_SENTINEL:
        return math.nan
    return float(text)


def write_csv(path, columns, rows, comments=()):
    """Write a comma separated table with ``#`` comment lines on top."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for c in comments:
            fh.write(f"# {c}\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            if len(row) != len(columns):
                raise ValueError("row length does not match the header")
            fh.write(",".join(format_number(v) for v in row) + "\n")


def read_csv(path):
    """Inverse of :func:`write_csv`: ``(columns, float array)``."""
    with open(path, encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh if not ln.startswith("#") and ln.strip()]
    columns = lines[0].split(",")
    data = np.array([[parse_number(v) for v in ln.split(",")] for ln in lines[1:]], dtype=float)
    return columns, data.reshape(-1, len(columns))


def write_polyline(path, points, comments=()):
    pts = np.asarray(points, dtype=float)
    write_csv(path, ["x", "y"], pts.tolist(), comments)


def read_polyline(path):
    return read_csv(path)[1]


def write_vtk(path, mesh, cell_data=None, point_data=None, title="hdg_shapeopt field"):
    """Legacy ASCII VTK unstructured grid of the active triangles.

    Only vertices used by the mesh are written.  ``cell_data`` and
    ``point_data`` map names to arrays of scalars (or 2-vectors).
    """
    used, inverse = np.unique(mesh.elements, return_inverse=True)
    tris = inverse.reshape(-1, 3)
    pts = mesh.vertices[used]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("# vtk DataFile Version 3.0\n")
        fh.write(title.replace("\n", " ")[:255] + "\n")
        fh.write("ASCII\nDATASET UNSTRUCTURED_GRID\n")
        fh.write(f"POINTS {len(pts)} double\n")
        for x, y in pts:
            fh.write(f"{x:.17g} {y:.17g} 0\n")
        fh.write(f"CELLS {len(tris)} {4 * len(tris)}\n")
        for a, b, c in tris:
            fh.write(f"3 {a} {b} {c}\n")
        fh.write(f"CELL_TYPES {len(tris)}\n")
        fh.write("5\n" * len(tris))
        _vtk_block(fh, "CELL_DATA", len(tris), cell_data)
        if point_data:
            point_data = {k: np.asarray(v)[used] for k, v in point_data.items()}
        _vtk_block(fh, "POINT_DATA", len(pts), point_data)


def _vtk_block(fh, kind, n, data):
    if not data:
        return
    fh.write(f"{kind} {n}\n")
    for name, values in data.items():
        v = np.asarray(values, dtype=float)
        if v.shape[0] != n:
            raise ValueError(f"{name}: expected {n} values, got {v.shape[0]}")
        if v.ndim == 1:
            fh.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
            for x in v:
                fh.write(f"{x:.17g}\n")
        else:
            fh.write(f"VECTORS {name} double\n")
            for x in v:
                fh.write(f"{x[0]:.17g} {x[1]:.17g} 0\n")


def ensure_dir(path):
    os.makedirs(path, exist_ok=True)
    return path
