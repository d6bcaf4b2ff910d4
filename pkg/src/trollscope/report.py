"""Run-directory plumbing: manifests, CSV/JSON artifact helpers, and
minimal self-contained SVG renderings of the plot data."""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path
from typing import Iterable, Sequence


def sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(run_dir: str | Path, exclude: tuple[str, ...] = ("MANIFEST.json",)) -> dict:
    """Hash every file under the run directory into MANIFEST.json."""
    run_dir = Path(run_dir)
    entries = {}
    for path in sorted(run_dir.rglob("*")):
        if path.is_file() and path.name not in exclude:
            entries[str(path.relative_to(run_dir))] = sha256_file(path)
    manifest = {"files": entries}
    (run_dir / "MANIFEST.json").write_text(json.dumps(manifest, indent=2), encoding="utf-8")
    return manifest


def write_json(path: str | Path, payload: dict) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, default=float), encoding="utf-8")


def read_json(path: str | Path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


# ---------------------------------------------------------------------------
# tiny SVG renderers (no plotting dependency; files are self-contained)
# ---------------------------------------------------------------------------

_W, _H, _PAD = 640, 400, 50


def _svg_header(title: str) -> list[str]:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}" font-family="sans-serif" font-size="12">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W/2}" y="20" text-anchor="middle" font-size="14">{title}</text>',
    ]


def _scale(v, lo, hi, out_lo, out_hi):
    if hi == lo:
        return (out_lo + out_hi) / 2.0
    return out_lo + (v - lo) * (out_hi - out_lo) / (hi - lo)


def svg_lines(path: str | Path, title: str, x: Sequence[float],
              series: dict[str, Sequence[float]]) -> None:
    """Polyline chart of one or more named series over shared x values."""
    all_y = [v for ys in series.values() for v in ys]
    lo_x, hi_x = min(x), max(x)
    lo_y, hi_y = min(all_y), max(all_y)
    parts = _svg_header(title)
    parts.append(
        f'<rect x="{_PAD}" y="{_PAD}" width="{_W-2*_PAD}" height="{_H-2*_PAD}" '
        'fill="none" stroke="black"/>'
    )
    colors = ["#c0392b", "#2980b9", "#27ae60", "#8e44ad", "#d68910"]
    for i, (name, ys) in enumerate(series.items()):
        pts = " ".join(
            f"{_scale(xv, lo_x, hi_x, _PAD, _W-_PAD):.1f},"
            f"{_scale(yv, lo_y, hi_y, _H-_PAD, _PAD):.1f}"
            for xv, yv in zip(x, ys)
        )
        color = colors[i % len(colors)]
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="2"/>')
        parts.append(
            f'<text x="{_W-_PAD-4}" y="{_PAD+16+14*i}" text-anchor="end" '
            f'fill="{color}">{name}</text>'
        )
    for frac in (0.0, 0.5, 1.0):
        xv = lo_x + frac * (hi_x - lo_x)
        yv = lo_y + frac * (hi_y - lo_y)
        parts.append(
            f'<text x="{_scale(xv, lo_x, hi_x, _PAD, _W-_PAD):.1f}" y="{_H-_PAD+16}" '
            f'text-anchor="middle">{xv:.3g}</text>'
        )
        parts.append(
            f'<text x="{_PAD-6}" y="{_scale(yv, lo_y, hi_y, _H-_PAD, _PAD):.1f}" '
            f'text-anchor="end">{yv:.3g}</text>'
        )
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts), encoding="utf-8")


def svg_histogram(path: str | Path, title: str, edges: Sequence[float],
                  counts_by_name: dict[str, Sequence[float]]) -> None:
    """Overlaid outline histograms on shared bin edges."""
    hi_y = max(max(c) for c in counts_by_name.values()) or 1
    lo_x, hi_x = edges[0], edges[-1]
    parts = _svg_header(title)
    parts.append(
        f'<rect x="{_PAD}" y="{_PAD}" width="{_W-2*_PAD}" height="{_H-2*_PAD}" '
        'fill="none" stroke="black"/>'
    )
    colors = ["#c0392b", "#2980b9"]
    for i, (name, counts) in enumerate(counts_by_name.items()):
        color = colors[i % len(colors)]
        pts = [f"{_scale(edges[0], lo_x, hi_x, _PAD, _W-_PAD):.1f},{_H-_PAD}"]
        for j, c in enumerate(counts):
            x0 = _scale(edges[j], lo_x, hi_x, _PAD, _W - _PAD)
            x1 = _scale(edges[j + 1], lo_x, hi_x, _PAD, _W - _PAD)
            y = _scale(c, 0, hi_y, _H - _PAD, _PAD)
            pts.append(f"{x0:.1f},{y:.1f}")
            pts.append(f"{x1:.1f},{y:.1f}")
        pts.append(f"{_scale(edges[-1], lo_x, hi_x, _PAD, _W-_PAD):.1f},{_H-_PAD}")
        parts.append(
            f'<polyline points="{" ".join(pts)}" fill="none" stroke="{color}" stroke-width="1.5"/>'
        )
        parts.append(
            f'<text x="{_W-_PAD-4}" y="{_PAD+16+14*i}" text-anchor="end" '
            f'fill="{color}">{name}</text>'
        )
    for frac in (0.0, 0.5, 1.0):
        xv = lo_x + frac * (hi_x - lo_x)
        parts.append(
            f'<text x="{_scale(xv, lo_x, hi_x, _PAD, _W-_PAD):.1f}" y="{_H-_PAD+16}" '
            f'text-anchor="middle">{xv:.3g}</text>'
        )
    parts.append(f'<text x="{_PAD-6}" y="{_PAD}" text-anchor="end">{hi_y}</text>')
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts), encoding="utf-8")
