"""Projected scatter frames, written as CSV and as a small standalone SVG."""
from __future__ import annotations

import csv
import io
from typing import Sequence
from xml.sax.saxutils import escape, quoteattr

import numpy as np

from .core import CandidateSet

FRAME_HEADER = ("kind", "id", "x", "y")

PALETTE = (
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
    "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#393b79", "#e7ba52",
)
ABSTAIN_COLOR = "#c8c8c8"


def color(j: int) -> str:
    return ABSTAIN_COLOR if j < 0 else PALETTE[j % len(PALETTE)]


def frame_csv(voter_ids: Sequence[str], voter_xy: np.ndarray, candidates: CandidateSet, cand_xy: np.ndarray) -> str:
    buf = io.StringIO()
    out = csv.writer(buf, lineterminator="\n")
    out.writerow(FRAME_HEADER)
    for i, (x, y) in zip(voter_ids, voter_xy):
        out.writerow(["voter", i, repr(float(x)), repr(float(y))])
    for name, (x, y) in zip(candidates.names, cand_xy):
        out.writerow(["candidate", name, repr(float(x)), repr(float(y))])
    return buf.getvalue()


def parse_frame_csv(text: str) -> list:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(rows[0]) != FRAME_HEADER:
        raise ValueError(f"frame header must be {','.join(FRAME_HEADER)}")
    out = []
    for row in rows[1:]:
        kind, ident, x, y = row
        if kind not in ("voter", "candidate"):
            raise ValueError(f"unknown row kind {kind!r}")
        out.append((kind, ident, float(x), float(y)))
    return out


def frame_svg(
    voter_xy: np.ndarray,
    choices: np.ndarray,
    candidates: CandidateSet,
    cand_xy: np.ndarray,
    title: str = "",
    size: int = 640,
    margin: int = 40,
) -> str:
    """Voters as dots colored by their current vote, candidates as labeled squares."""
    pts = np.vstack([voter_xy.reshape(-1, 2), cand_xy.reshape(-1, 2)])
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    span = np.where(hi - lo > 0, hi - lo, 1.0)
    scale = (size - 2 * margin) / span.max()

    def sx(x, y):
        # SVG y grows downwards
        return margin + (x - lo[0]) * scale, size - margin - (y - lo[1]) * scale

    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}" style="background:white">',
    ]
    if title:
        lines.append(f'<text x="{margin}" y="{margin // 2}" font-size="14">{escape(title)}</text>')
    lines.append('<g class="voters">')
    for (x, y), j in zip(voter_xy, choices):
        px, py = sx(x, y)
        lines.append(f'<circle cx="{px:.2f}" cy="{py:.2f}" r="2" fill="{color(int(j))}" fill-opacity="0.6"/>')
    lines.append("</g>")
    lines.append('<g class="candidates">')
    for j, (name, (x, y)) in enumerate(zip(candidates.names, cand_xy)):
        px, py = sx(x, y)
        lines.append(
            f'<rect x="{px - 5:.2f}" y="{py - 5:.2f}" width="10" height="10" '
            f'fill="{color(j)}" stroke="black" data-candidate={quoteattr(name)}/>'
        )
        lines.append(f'<text x="{px + 7:.2f}" y="{py - 7:.2f}" font-size="11">{escape(name)}</text>')
    lines.append("</g>")
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
