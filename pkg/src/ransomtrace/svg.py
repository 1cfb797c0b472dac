# Copyright 2026 The ransomtrace Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
#
"""Minimal SVG views of report data: axes, polylines, rects and labels.

Data values are written with ``repr`` so they match the sibling JSON/CSV
exactly: ROC points sit in a data-space group, bar and cell values are
carried by ``<title>`` elements and ``fill-opacity``. Pixel geometry is
derived from those values.
"""

import xml.etree.ElementTree as ET
from collections.abc import Sequence

import numpy as np

from .data_model import SIGN_CONVENTION, TokenWeight

SVG_NS = "http://www.w3.org/2000/svg"
MARGIN = 60
PLOT = 400
BAR_HEIGHT = 18
CELL = 24


def _num(x: float) -> str:
    return repr(float(x))


def _px(x: float) -> str:
    return f"{x:.2f}"


def _root(width: float, height: float) -> ET.Element:
    return ET.Element(
        "svg",
        {
            "xmlns": SVG_NS,
            "width": _px(width),
            "height": _px(height),
            "viewBox": f"0 0 {_px(width)} {_px(height)}",
        },
    )


def _text(parent: ET.Element, x: float, y: float, content: str, **attrs: str) -> ET.Element:
    el = ET.SubElement(parent, "text", {"x": _px(x), "y": _px(y), "font-size": "12", **attrs})
    el.text = content
    return el


def _render(root: ET.Element) -> str:
    return ET.tostring(root, encoding="unicode") + "\n"


def roc_svg(points: Sequence[Sequence[float]], auc: float) -> str:
    """ROC polyline drawn in data coordinates (fpr right, tpr up)."""
    root = _root(PLOT + 2 * MARGIN, PLOT + 2 * MARGIN)
    _text(root, MARGIN, MARGIN / 2, f"ROC (AUC {_num(auc)})")
    _text(root, MARGIN + PLOT / 2, PLOT + 1.7 * MARGIN, "false positive rate", **{"text-anchor": "middle"})
    _text(root, 12, MARGIN + PLOT / 2, "true positive rate")
    plot = ET.SubElement(
        root,
        "g",
        {"id": "plot", "transform": f"translate({MARGIN},{MARGIN + PLOT}) scale({PLOT},-{PLOT})"},
    )
    line = {"fill": "none", "vector-effect": "non-scaling-stroke"}
    ET.SubElement(plot, "polyline", {"class": "axes", "points": "0,1 0,0 1,0", "stroke": "black", **line})
    ET.SubElement(
        plot, "polyline", {"class": "chance", "points": "0,0 1,1", "stroke": "grey", "stroke-dasharray": "4", **line}
    )
    ET.SubElement(
        plot,
        "polyline",
        {
            "class": "roc",
            "points": " ".join(f"{_num(f)},{_num(t)}" for f, t in points),
            "stroke": "steelblue",
            **line,
        },
    )
    return _render(root)


def importance_svg(weights: Sequence[TokenWeight], title: str) -> str:
    """Signed horizontal bars: positive weights extend right of the zero line."""
    rows = max(len(weights), 1)
    height = 2 * MARGIN + rows * BAR_HEIGHT
    width = 2 * MARGIN + PLOT + 160
    root = _root(width, height)
    _text(root, MARGIN, MARGIN / 2, title)
    _text(root, MARGIN, height - MARGIN / 3, SIGN_CONVENTION, **{"font-size": "10"})
    zero = MARGIN + 160 + PLOT / 2
    limit = max((abs(tw.weight) for tw in weights), default=0.0)
    scale = (PLOT / 2) / limit if limit > 0 else 0.0
    ET.SubElement(
        root,
        "line",
        {
            "class": "zero",
            "x1": _px(zero),
            "x2": _px(zero),
            "y1": _px(MARGIN),
            "y2": _px(MARGIN + rows * BAR_HEIGHT),
            "stroke": "black",
        },
    )
    for i, tw in enumerate(weights):
        y = MARGIN + i * BAR_HEIGHT
        length = abs(tw.weight) * scale
        x = zero if tw.weight >= 0 else zero - length
        bar = ET.SubElement(
            root,
            "rect",
            {
                "class": "bar positive" if tw.weight >= 0 else "bar negative",
                "x": _px(x),
                "y": _px(y + 2),
                "width": _px(length),
                "height": _px(BAR_HEIGHT - 4),
                "fill": "firebrick" if tw.weight >= 0 else "seagreen",
            },
        )
        ET.SubElement(bar, "title").text = f"{tw.token} {_num(tw.weight)}"
        _text(root, MARGIN + 150, y + BAR_HEIGHT - 5, tw.token, **{"text-anchor": "end"})
    return _render(root)


def attention_svg(matrix, tokens: Sequence[str], title: str) -> str:
    """L x L heatmap; a cell's opacity is its attention weight."""
    values = np.asarray(matrix, dtype=np.float64)
    n = values.shape[0]
    side = 2 * MARGIN + 100 + n * CELL
    root = _root(side, side)
    _text(root, MARGIN, MARGIN / 2, title)
    origin = MARGIN + 100
    for i, token in enumerate(tokens):
        _text(root, origin - 4, origin + i * CELL + CELL * 0.7, token, **{"text-anchor": "end", "font-size": "9"})
    grid = ET.SubElement(root, "g", {"id": "cells"})
    for i in range(n):
        for j in range(n):
            cell = ET.SubElement(
                grid,
                "rect",
                {
                    "class": "cell",
                    "x": _px(origin + j * CELL),
                    "y": _px(origin + i * CELL),
                    "width": _px(CELL),
                    "height": _px(CELL),
                    "fill": "navy",
                    "fill-opacity": _num(values[i, j]),
                },
            )
            ET.SubElement(cell, "title").text = f"{tokens[i]} -> {tokens[j]} {_num(values[i, j])}"
    return _render(root)
