# SPDX-FileCopyrightText: 2024 ganalyzer contributors
#
# SPDX-License-Identifier: BSD-3-Clause

"""The report module writes balance reports as JSON and renders them as static SVG files.

SVG documents are built as lxml element trees and serialized with attributes in insertion order, so the same
report always produces the same bytes.

Functions:
    render_heatmap_svg: Render a labelled square matrix.
    render_histogram_svg: Render the class fractions of one group as bars.
    build_report: Assemble the JSON report of one or two label tables.
    write_report: Write the JSON report and its SVG figures.
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import TYPE_CHECKING, Any

import numpy as np
from lxml import etree

from ganalyzer.entanglement import entanglement_degree
from ganalyzer.planner import balance_report
from ganalyzer.taxonomy import TAXONOMY
from ganalyzer.utils import atomic_write_bytes, atomic_write_text, canonical_json

if TYPE_CHECKING:
    import os
    from collections.abc import Mapping, Sequence

    from ganalyzer.models import LabelTable

logger = logging.getLogger(__name__)

SVG_NS = "http://www.w3.org/2000/svg"

CELL = 48
MARGIN = 80
BAR_WIDTH = 56
BAR_HEIGHT = 200

WHITE = (255, 255, 255)
BLUE = (33, 102, 172)
RED = (178, 24, 43)


def _element(parent: etree._Element, tag: str, text: str | None = None, **attributes: Any) -> etree._Element:
    names = {key.replace("_", "-"): str(value) for key, value in attributes.items()}
    node = etree.SubElement(parent, f"{{{SVG_NS}}}{tag}", names)
    if text is not None:
        node.text = text
    return node


def _document(width: int, height: int, title: str) -> etree._Element:
    root = etree.Element(
        f"{{{SVG_NS}}}svg",
        {"width": str(width), "height": str(height), "viewBox": f"0 0 {width} {height}"},
        nsmap={None: SVG_NS},
    )
    _element(root, "title", title)
    _element(root, "rect", x=0, y=0, width=width, height=height, fill="#ffffff")
    _label(root, title, x=width // 2, y=24, size=16)
    return root


def _label(parent: etree._Element, text: str, x: int, y: int, size: int, anchor: str = "middle", **extra: Any) -> None:
    _element(parent, "text", text, x=x, y=y, text_anchor=anchor, font_size=size, font_family="sans-serif", **extra)


def _blend(target: tuple[int, int, int], weight: float) -> str:
    weight = min(max(weight, 0.0), 1.0)
    channels = (round(w + (t - w) * weight) for w, t in zip(WHITE, target))
    return "#" + "".join(f"{channel:02x}" for channel in channels)


def _serialize(root: etree._Element) -> bytes:
    return etree.tostring(root, pretty_print=True, xml_declaration=True, encoding="UTF-8")


def render_heatmap_svg(classes: Sequence[str], matrix: np.ndarray, title: str, diverging: bool = False) -> bytes:
    """Render a square matrix as an SVG heatmap.

    Cells show their value as a percentage with two decimals. The sequential palette runs from white (0) to blue
    (1); the diverging palette maps negative values to red and positive values to blue, scaled by the largest
    magnitude in the matrix.

    Args:
        classes: The row and column labels.
        matrix: The values, one row and column per class.
        title: The figure title.
        diverging: Use the diverging palette.

    Returns:
        The UTF-8 encoded SVG document.
    """
    size = len(classes)
    width = height = MARGIN + CELL * size + 20
    root = _document(width, height, title)
    scale = float(abs(matrix).max()) if diverging else 1.0
    for index, name in enumerate(classes):
        center = MARGIN + CELL * index + CELL // 2
        _label(root, name, x=MARGIN - 6, y=center + 4, size=11, anchor="end")
        rotation = f"rotate(-45 {center} {MARGIN - 6})"
        _label(root, name, x=center, y=MARGIN - 6, size=11, anchor="start", transform=rotation)
    for row in range(size):
        for column in range(size):
            value = float(matrix[row, column])
            if diverging:
                fill = _blend(BLUE if value >= 0 else RED, abs(value) / scale if scale else 0.0)
            else:
                fill = _blend(BLUE, value)
            x = MARGIN + CELL * column
            y = MARGIN + CELL * row
            _element(root, "rect", x=x, y=y, width=CELL, height=CELL, fill=fill, stroke="#cccccc")
            _label(root, f"{value * 100:.2f}", x=x + CELL // 2, y=y + CELL // 2 + 4, size=10)
    return _serialize(root)


def render_histogram_svg(fractions: Mapping[str, float], title: str) -> bytes:
    """Render class fractions as an SVG bar chart with percentage labels.

    Returns:
        The UTF-8 encoded SVG document.
    """
    width = MARGIN + BAR_WIDTH * len(fractions) + 20
    height = MARGIN + BAR_HEIGHT + 40
    root = _document(width, height, title)
    baseline = MARGIN + BAR_HEIGHT
    _element(root, "line", x1=MARGIN - 10, y1=baseline, x2=width - 10, y2=baseline, stroke="#333333")
    for index, (name, fraction) in enumerate(fractions.items()):
        bar = round(BAR_HEIGHT * fraction)
        x = MARGIN + BAR_WIDTH * index + 8
        _element(root, "rect", x=x, y=baseline - bar, width=BAR_WIDTH - 16, height=bar, fill=_blend(BLUE, 0.8))
        label_x = x + (BAR_WIDTH - 16) // 2
        _label(root, f"{fraction * 100:.2f}%", x=label_x, y=baseline - bar - 4, size=10)
        _label(root, name, x=label_x, y=baseline + 16, size=11)
    return _serialize(root)


def build_report(before: LabelTable, after: LabelTable | None = None) -> dict[str, Any]:
    """Assemble the JSON report of a label table.

    When a second table is given, the report gains an "after" section with its balance report and an
    "entanglement" section holding the entanglement degree after − before.

    Raises:
        InsufficientSamples: If a table is empty.
    """
    first = balance_report(before)
    report = first.to_dict()
    if after is not None:
        second = balance_report(after)
        report["after"] = second.to_dict()
        report["entanglement"] = entanglement_degree(first.co_occurrence, second.co_occurrence).matrix.tolist()
    return report


def write_report(prefix: str | os.PathLike[str], before: LabelTable, after: LabelTable | None = None) -> list[Path]:
    """Write the JSON report of one or two label tables together with its SVG figures.

    Files written, for prefix "out":

    - out.json: the report of build_report
    - out-cooccurrence.svg: the co-occurrence heatmap of the first table
    - out-<group>.svg: one class histogram per group
    - out-entanglement.svg: the entanglement degree heatmap, when a second table is given

    Returns:
        The written paths in the order above.
    """
    base = Path(prefix)
    report = build_report(before, after)
    written = []

    def emit(suffix: str, data: bytes) -> None:
        path = base.with_name(base.name + suffix)
        atomic_write_bytes(path, data)
        written.append(path)

    json_path = base.with_name(base.name + ".json")
    atomic_write_text(json_path, canonical_json(report) + "\n")
    written.append(json_path)
    classes = list(TAXONOMY.class_names)
    emit(
        "-cooccurrence.svg",
        render_heatmap_svg(classes, np.array(report["matrix"]), "Co-occurrence of hard labels (n=%d)" % report["n"]),
    )
    for group, fractions in report["histograms"].items():
        emit("-%s.svg" % group, render_histogram_svg(fractions, "%s (n=%d)" % (group.capitalize(), report["n"])))
    if after is not None:
        emit(
            "-entanglement.svg",
            render_heatmap_svg(classes, np.array(report["entanglement"]), "Entanglement degree", diverging=True),
        )
    logger.info("Wrote report with %d files to %s", len(written), base.parent)
    return written
