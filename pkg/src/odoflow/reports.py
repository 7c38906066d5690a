"""CSV, JSON and SVG writers for the report tables.

Rationals are written as ``p/q`` and big integers as plain decimal strings.
Files are written to a temporary sibling and renamed into place.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from fractions import Fraction
from pathlib import Path

from .space import format_fraction, parse_fraction

DECAY_HEADER = ["label", "lo", "hi", "forward", "backward", "union", "envelope"]
BOUNDS_HEADER = ["n", "m", "forward", "backward", "corrected_bound", "printed_bound",
                 "forward_ok_corrected", "forward_ok_printed"]
VIOLATIONS_HEADER = ["prefix", "k", "n", "variant", "expected_index", "expected_value", "observed_value"]
KTABLE_HEADER = ["n", "K_n"]


def atomic_write(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, Fraction):
        return format_fraction(value)
    if isinstance(value, tuple):
        return " ".join(str(v) for v in value)
    return str(value)


def to_csv(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def read_csv(text: str) -> list:
    return list(csv.DictReader(io.StringIO(text)))


def parse_cell(text: str):
    """Inverse of the cell formatting for numbers: ``p/q`` to Fraction, digits to int."""
    if text == "":
        return None
    if text in ("true", "false"):
        return text == "true"
    if "/" in text:
        return parse_fraction(text)
    return int(text)


def k_table_csv(rows) -> str:
    return to_csv(KTABLE_HEADER, rows)


def decay_csv(rows) -> str:
    return to_csv(DECAY_HEADER, (
        (r.label, r.window.lo, r.window.hi, r.forward, r.backward, r.union, r.envelope) for r in rows
    ))


def bounds_csv(rows) -> str:
    return to_csv(BOUNDS_HEADER, (
        (r.n, r.m, r.forward, r.backward, r.corrected_bound, r.printed_bound,
         r.forward_ok_corrected, r.forward_ok_printed) for r in rows
    ))


def violations_csv(records) -> str:
    # k is signed: negative for sums taken backward along the orbit
    return to_csv(VIOLATIONS_HEADER, (
        (r.prefix, r.signed_k, r.n, r.variant, r.expected_index, r.expected_value, r.observed_value)
        for r in records
    ))


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _log2(q: Fraction) -> float:
    return math.log2(q.numerator) - math.log2(q.denominator)


def decay_svg(rows, title: str = "return-set measure") -> str:
    """Line plot of ``log2(union measure)`` per row, with the envelope dashed.

    Rows of measure zero sit on a floor one unit below the smallest plotted
    value and are marked with a cross.
    """
    width, height, pad = 640, 360, 56
    values = [r.union for r in rows]
    envs = [r.envelope for r in rows]
    logs = [_log2(v) for v in values if v > 0] + [_log2(e) for e in envs if e]
    top = max(logs, default=0.0)
    floor = min(logs, default=-1.0) - 1.0
    if top <= floor:
        top = floor + 1.0
    n = max(len(rows), 1)

    def x(i):
        return pad + (width - 2 * pad) * (i / (n - 1) if n > 1 else 0.5)

    def y(v):
        return height - pad - (height - 2 * pad) * (v - floor) / (top - floor)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<text x="{width / 2:.1f}" y="20" text-anchor="middle" font-size="14">{title}</text>',
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
        f'<text x="14" y="{height / 2:.1f}" font-size="12" transform="rotate(-90 14 {height / 2:.1f})" '
        f'text-anchor="middle">log2(measure)</text>',
    ]
    tick = math.floor(floor)
    while tick <= math.ceil(top):
        if floor <= tick <= top:
            out.append(f'<text x="{pad - 6}" y="{y(tick) + 4:.1f}" font-size="10" text-anchor="end">{tick}</text>')
        tick += 1
    env_pts = [(x(i), y(_log2(e))) for i, e in enumerate(envs) if e]
    if len(env_pts) > 1:
        pts = " ".join(f"{px:.1f},{py:.1f}" for px, py in env_pts)
        out.append(f'<polyline points="{pts}" fill="none" stroke="gray" stroke-dasharray="4 3"/>')
    pts = []
    for i, v in enumerate(values):
        px = x(i)
        if v > 0:
            py = y(_log2(v))
            pts.append(f"{px:.1f},{py:.1f}")
            out.append(f'<circle cx="{px:.1f}" cy="{py:.1f}" r="3" fill="steelblue"/>')
        else:
            py = y(floor)
            out.append(f'<path d="M{px - 4:.1f},{py - 4:.1f} L{px + 4:.1f},{py + 4:.1f} '
                       f'M{px - 4:.1f},{py + 4:.1f} L{px + 4:.1f},{py - 4:.1f}" stroke="firebrick"/>')
    if len(pts) > 1:
        out.append(f'<polyline points="{" ".join(pts)}" fill="none" stroke="steelblue"/>')
    for i, r in enumerate(rows):
        out.append(f'<text x="{x(i):.1f}" y="{height - pad + 16}" font-size="10" '
                   f'text-anchor="middle">{r.label}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
