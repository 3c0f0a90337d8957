"""SVG heatmap of an N2O matrix, rendered byte-deterministically.

Higher overlap maps to a darker cell (every color channel decreases
monotonically with the value).  No timestamps, generated ids, or other
run-varying content appear in the output, so identical inputs yield
identical bytes.
"""

from __future__ import annotations

import numpy as np

from .errors import InvariantError

_CELL = 54
_PAD = 20
_FONT = "font-family=\"Menlo, Consolas, monospace\" font-size=\"13\""


def _fill_rgb(value: float) -> tuple[int, int, int]:
    v = min(1.0, max(0.0, value))
    r = 248 - int(round(198 * v))
    g = 250 - int(round(180 * v))
    b = 255 - int(round(135 * v))
    return r, g, b


def _escape(text: str) -> str:
    return (text.replace("&", "&amp;").replace("<", "&lt;")
            .replace(">", "&gt;"))


def render_heatmap(names: list[str], values: np.ndarray,
                   annotate: bool = False) -> str:
    values = np.asarray(values, dtype=np.float64)
    m = len(names)
    if values.shape != (m, m):
        raise InvariantError(
            f"matrix shape {values.shape} does not match {m} labels"
        )
    if m == 0:
        raise InvariantError("empty matrix")
    gutter = max(96, 14 + 8 * max(len(n) for n in names))
    width = gutter + m * _CELL + _PAD
    height = gutter + m * _CELL + _PAD
    lines = [
        f"<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" "
        f"height=\"{height}\" viewBox=\"0 0 {width} {height}\">",
        f"<rect x=\"0\" y=\"0\" width=\"{width}\" height=\"{height}\" "
        f"fill=\"#ffffff\"/>",
    ]
    for i, name in enumerate(names):
        cy = gutter + i * _CELL + _CELL // 2 + 4
        lines.append(
            f"<text x=\"{gutter - 8}\" y=\"{cy}\" text-anchor=\"end\" "
            f"{_FONT} fill=\"#222222\">{_escape(name)}</text>"
        )
        cx = gutter + i * _CELL + _CELL // 2
        lines.append(
            f"<text x=\"{cx}\" y=\"{gutter - 10}\" text-anchor=\"start\" "
            f"transform=\"rotate(-45 {cx} {gutter - 10})\" {_FONT} "
            f"fill=\"#222222\">{_escape(name)}</text>"
        )
    for i in range(m):
        for j in range(m):
            v = float(values[i, j])
            r, g, b = _fill_rgb(v)
            x = gutter + j * _CELL
            y = gutter + i * _CELL
            lines.append(
                f"<rect x=\"{x}\" y=\"{y}\" width=\"{_CELL}\" "
                f"height=\"{_CELL}\" fill=\"rgb({r},{g},{b})\" "
                f"stroke=\"#ffffff\" stroke-width=\"1\"/>"
            )
            if annotate:
                tx = x + _CELL // 2
                ty = y + _CELL // 2 + 4
                color = "#f5f5f5" if v > 0.55 else "#1c1c1c"
                lines.append(
                    f"<text x=\"{tx}\" y=\"{ty}\" text-anchor=\"middle\" "
                    f"{_FONT} fill=\"{color}\">{v:.3f}</text>"
                )
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def write_heatmap(names: list[str], values: np.ndarray, path,
                  annotate: bool = False) -> None:
    svg = render_heatmap(names, values, annotate=annotate)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(svg)
