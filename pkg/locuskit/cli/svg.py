""" svg v0.1
Deterministic SVG 1.1 plots for the task drivers
"""

# Imports
import xml.etree.ElementTree as ET

import numpy as np

from locuskit.cli.io import write_text
from locuskit.errors import InvalidParameter
from locuskit.mylog import get_logger

logger = get_logger(__name__)

KINDS = ("scatter", "line", "curve+argmin", "trajectories")
# key each kind draws from; the plot is empty when it holds nothing
REQUIRED = {
    "scatter": "points",
    "line": "series",
    "curve+argmin": "y",
    "trajectories": "trajectories",
}
WIDTH = 480
HEIGHT = 360
MARGIN = 30
PALETTE = (
    "#1f77b4",
    "#ff7f0e",
    "#2ca02c",
    "#d62728",
    "#9467bd",
    "#8c564b",
    "#e377c2",
    "#7f7f7f",
)


def _fmt(v):
    return "%.6g" % float(v)


class _Frame(object):
    """Maps data coordinates into the drawing box; y grows upwards"""

    def __init__(self, points):
        P = np.vstack(points)
        lo, hi = P.min(axis=0), P.max(axis=0)
        span = np.where(hi - lo > 0, hi - lo, 1.0)
        self.lo, self.span = lo, span

    def __call__(self, P):
        P = np.atleast_2d(P)
        u = (P - self.lo) / self.span
        x = MARGIN + u[:, 0] * (WIDTH - 2 * MARGIN)
        y = HEIGHT - MARGIN - u[:, 1] * (HEIGHT - 2 * MARGIN)
        return np.column_stack([x, y])


def _root():
    return ET.Element(
        "svg",
        {
            "xmlns": "http://www.w3.org/2000/svg",
            "version": "1.1",
            "width": str(WIDTH),
            "height": str(HEIGHT),
            "viewBox": f"0 0 {WIDTH} {HEIGHT}",
        },
    )


def _polyline(parent, P, color):
    ET.SubElement(
        parent,
        "polyline",
        {
            "points": " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in P),
            "fill": "none",
            "stroke": color,
            "stroke-width": "1.5",
        },
    )


def _circle(parent, x, y, color, r=3):
    ET.SubElement(
        parent,
        "circle",
        {"cx": _fmt(x), "cy": _fmt(y), "r": str(r), "fill": color},
    )


def _as_xy(values):
    P = np.asarray(values, dtype=float)
    if P.ndim == 1:
        P = np.column_stack([np.arange(P.size), P])
    if P.ndim != 2 or P.shape[1] < 2 or P.shape[0] == 0:
        raise InvalidParameter(f"cannot plot an array of shape {P.shape}")
    return P[:, :2]


def _scatter(root, data):
    P = _as_xy(data["points"])
    labels = data.get("labels")
    labels = np.zeros(P.shape[0], dtype=int) if labels is None else np.asarray(labels)
    frame = _Frame([P])
    for (x, y), c in zip(frame(P), labels):
        _circle(root, x, y, PALETTE[int(c) % len(PALETTE)])


def _lines(root, data):
    series = [_as_xy(s) for s in data["series"]]
    frame = _Frame(series)
    for i, S in enumerate(series):
        _polyline(root, frame(S), PALETTE[i % len(PALETTE)])
    return frame


def _curve_argmin(root, data):
    C = _as_xy(np.column_stack([data["x"], data["y"]]))
    finite = np.isfinite(C).all(axis=1)
    if not finite.any():
        raise InvalidParameter("the curve has no finite values")
    C = C[finite]
    frame = _Frame([C])
    _polyline(root, frame(C), PALETTE[0])
    x, y = frame(C[int(np.argmin(C[:, 1]))])[0]
    _circle(root, x, y, PALETTE[3], r=4)


def _trajectories(root, data):
    paths = [_as_xy(t) for t in data["trajectories"]]
    background = data.get("points")
    boxes = paths + ([] if background is None else [_as_xy(background)])
    frame = _Frame(boxes)
    for i, T in enumerate(paths):
        _polyline(root, frame(T), PALETTE[i % len(PALETTE)])


def emit_svg(kind, data, path):
    """(str, dict, path) -> path

    scatter: {"points", "labels"?} one circle per point.  line: {"series"}
    one polyline per series.  curve+argmin: {"x", "y"} the curve plus a
    marker at its minimum.  trajectories: {"trajectories"} one polyline per
    query path.  Output depends only on the data.
    """
    if kind not in KINDS:
        raise InvalidParameter(f"unknown plot kind {kind!r}")
    if not data or len(data.get(REQUIRED[kind], ())) == 0:
        raise InvalidParameter("nothing to plot")
    root = _root()
    if kind == "scatter":
        _scatter(root, data)
    elif kind == "line":
        _lines(root, data)
    elif kind == "curve+argmin":
        _curve_argmin(root, data)
    else:
        _trajectories(root, data)
    ET.indent(root)
    body = ET.tostring(root, encoding="unicode")
    text = '<?xml version="1.0" encoding="UTF-8" standalone="no"?>\n' + body + "\n"
    write_text(path, text)
    logger.debug(f"wrote {kind} plot to {path}")
    return path
