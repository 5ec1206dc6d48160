"""Self-contained SVG rendering of a single spectrum.

Dispersion (Re<a>) as a solid polyline, absorption (-Im<a>) as a dashed
one, framed axes with tick labels.  No external fonts, styles or scripts;
every float is printed with a fixed format, so identical spectra yield
byte-identical files.
"""

from __future__ import annotations

import math

from .spectra import Spectrum

_W, _H = 720, 480
_ML, _MR, _MT, _MB = 72, 24, 24, 56
_SOLID = "#1f77b4"
_DASHED = "#d62728"


def _nice_step(span: float, target: int = 6) -> float:
    raw = span / target
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        if mult * mag >= raw:
            return mult * mag
    return 10.0 * mag


def _ticks(lo: float, hi: float) -> list[float]:
    step = _nice_step(hi - lo)
    i0 = math.ceil(lo / step - 1e-9)
    i1 = math.floor(hi / step + 1e-9)
    return [i * step for i in range(i0, i1 + 1)]


def _fmt(x: float) -> str:
    return f"{x:.3f}"


def _label(v: float) -> str:
    return f"{v:.6g}"


def emit_svg(spectrum: Spectrum) -> str:
    """Render the spectrum; returns the SVG document as a string."""
    d = spectrum.detunings
    xlo, xhi = float(d[0]), float(d[-1])
    ylo = min(float(spectrum.a_re.min()), float(spectrum.absorption.min()))
    yhi = max(float(spectrum.a_re.max()), float(spectrum.absorption.max()))
    if yhi == ylo:
        yhi = ylo + 1.0
    pad = 0.05 * (yhi - ylo)
    ylo -= pad
    yhi += pad

    px_w = _W - _ML - _MR
    px_h = _H - _MT - _MB

    def sx(x: float) -> float:
        return _ML + (x - xlo) / (xhi - xlo) * px_w

    def sy(y: float) -> float:
        return _H - _MB - (y - ylo) / (yhi - ylo) * px_h

    def polyline(values, color: str, dashed: bool) -> str:
        pts = " ".join(
            f"{_fmt(sx(xx))},{_fmt(sy(yy))}" for xx, yy in zip(d, values)
        )
        dash = ' stroke-dasharray="6,4"' if dashed else ""
        return (
            f'<polyline fill="none" stroke="{color}" stroke-width="1.5"'
            f'{dash} points="{pts}"/>'
        )

    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        f'<rect x="0" y="0" width="{_W}" height="{_H}" fill="white"/>',
        f'<rect x="{_ML}" y="{_MT}" width="{px_w}" height="{px_h}" '
        'fill="none" stroke="black" stroke-width="1"/>',
    ]

    for tx in _ticks(xlo, xhi):
        if not xlo <= tx <= xhi:
            continue
        x = sx(tx)
        parts.append(
            f'<line x1="{_fmt(x)}" y1="{_H - _MB}" x2="{_fmt(x)}" '
            f'y2="{_H - _MB + 5}" stroke="black" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{_fmt(x)}" y="{_H - _MB + 18}" font-family="sans-serif" '
            f'font-size="11" text-anchor="middle">{_label(tx)}</text>'
        )
    for ty in _ticks(ylo, yhi):
        if not ylo <= ty <= yhi:
            continue
        y = sy(ty)
        parts.append(
            f'<line x1="{_ML - 5}" y1="{_fmt(y)}" x2="{_ML}" y2="{_fmt(y)}" '
            'stroke="black" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{_ML - 8}" y="{_fmt(y + 4)}" font-family="sans-serif" '
            f'font-size="11" text-anchor="end">{_label(ty)}</text>'
        )

    parts.append(polyline(spectrum.a_re, _SOLID, dashed=False))
    parts.append(polyline(spectrum.absorption, _DASHED, dashed=True))

    parts.append(
        f'<text x="{_ML + px_w // 2}" y="{_H - 12}" font-family="sans-serif" '
        'font-size="13" text-anchor="middle">Δp/κa</text>'
    )
    parts.append(
        f'<text x="18" y="{_MT + px_h // 2}" font-family="sans-serif" '
        f'font-size="13" text-anchor="middle" '
        f'transform="rotate(-90 18 {_MT + px_h // 2})">amplitude</text>'
    )

    lx, ly = _ML + 12, _MT + 16
    parts.append(
        f'<line x1="{lx}" y1="{ly}" x2="{lx + 28}" y2="{ly}" '
        f'stroke="{_SOLID}" stroke-width="1.5"/>'
    )
    parts.append(
        f'<text x="{lx + 34}" y="{ly + 4}" font-family="sans-serif" '
        'font-size="12">dispersion Re⟨a⟩</text>'
    )
    parts.append(
        f'<line x1="{lx}" y1="{ly + 18}" x2="{lx + 28}" y2="{ly + 18}" '
        f'stroke="{_DASHED}" stroke-width="1.5" stroke-dasharray="6,4"/>'
    )
    parts.append(
        f'<text x="{lx + 34}" y="{ly + 22}" font-family="sans-serif" '
        'font-size="12">absorption −Im⟨a⟩</text>'
    )
    parts.append(
        f'<text x="{_W - _MR}" y="{_MT - 8}" font-family="sans-serif" '
        f'font-size="11" text-anchor="end">{spectrum.backend} backend, '
        f'{spectrum.n_points} points</text>'
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
