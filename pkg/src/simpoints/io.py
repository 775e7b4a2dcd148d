"""JSON body files and polyline CSV dumps."""

import json
from pathlib import Path

import numpy as np

from .body import convex_hull
from .errors import ParseError


def body_to_dict(body):
    verts = sorted(body.vertices.tolist())
    return {"dim": body.dim, "vertices": verts}


def dumps_body(body):
    return json.dumps(body_to_dict(body), indent=2) + "\n"


def dump_body(body, path):
    Path(path).write_text(dumps_body(body))


def parse_body(data, source="<body>"):
    """Build a body from the decoded JSON object ``{"dim": n, "vertices": [...]}``."""
    if not isinstance(data, dict):
        raise ParseError(f"{source}: top level must be an object")
    for key in ("dim", "vertices"):
        if key not in data:
            raise ParseError(f"{source}: missing field '{key}'")
    dim = data["dim"]
    if not isinstance(dim, int) or isinstance(dim, bool) or dim < 1:
        raise ParseError(f"{source}: field 'dim' must be a positive integer")
    verts = data["vertices"]
    if not isinstance(verts, list):
        raise ParseError(f"{source}: field 'vertices' must be a list")
    for i, v in enumerate(verts):
        if not isinstance(v, list) or len(v) != dim or not all(
            isinstance(x, (int, float)) and not isinstance(x, bool) for x in v
        ):
            raise ParseError(f"{source}: field 'vertices[{i}]' must be a list of {dim} numbers")
    return convex_hull(np.array(verts, dtype=float).reshape(-1, dim), dim)


def load_body(path):
    """Read a body file; redundant points are dropped by the hull."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"{path}: cannot read file ({exc.strerror})") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return parse_body(data, str(path))


def polygon_loop(body):
    """Vertices of a 2D body in counter-clockwise order, closed."""
    if body.dim != 2:
        raise ValueError("polyline loops are only defined for 2D bodies")
    d = body.vertices - body.centroid
    order = np.argsort(np.arctan2(d[:, 1], d[:, 0]))
    loop = body.vertices[order]
    return np.vstack([loop, loop[:1]])


def polyline_csv(loops):
    """``x,y`` rows; loops separated by a blank line."""
    blocks = []
    for loop in loops:
        blocks.append("\n".join(f"{x!r},{y!r}" for x, y in np.asarray(loop, dtype=float)))
    return "x,y\n" + "\n\n".join(blocks) + "\n"
