"""Generate crates/core/data/templates.json from block-letter polygons.

Coordinates are in the unit em box with y pointing down. Each outline is resampled to
equally spaced endpoints by arc length; each control point is placed so the quadratic
passes through the polygon point halfway (by arc length) between its endpoints.
"""

import json
import math
import pathlib

OUTER = 15
INNER = 4

LETTERS = {
    "A": [[(0.1, 0.9), (0.42, 0.1), (0.58, 0.1), (0.9, 0.9), (0.72, 0.9), (0.64, 0.68), (0.36, 0.68), (0.28, 0.9)],
          [(0.5, 0.32), (0.58, 0.54), (0.42, 0.54)]],
    "B": [[(0.2, 0.1), (0.65, 0.1), (0.8, 0.2), (0.8, 0.4), (0.72, 0.5), (0.82, 0.6), (0.82, 0.8), (0.67, 0.9), (0.2, 0.9)],
          [(0.36, 0.24), (0.64, 0.24), (0.64, 0.42), (0.36, 0.42)],
          [(0.36, 0.58), (0.66, 0.58), (0.66, 0.76), (0.36, 0.76)]],
    "C": [[(0.8, 0.1), (0.3, 0.1), (0.15, 0.25), (0.15, 0.75), (0.3, 0.9), (0.8, 0.9), (0.8, 0.75), (0.36, 0.75),
           (0.32, 0.7), (0.32, 0.3), (0.36, 0.25), (0.8, 0.25)]],
    "D": [[(0.2, 0.1), (0.6, 0.1), (0.8, 0.3), (0.8, 0.7), (0.6, 0.9), (0.2, 0.9)],
          [(0.36, 0.25), (0.55, 0.25), (0.64, 0.38), (0.64, 0.62), (0.55, 0.75), (0.36, 0.75)]],
    "E": [[(0.2, 0.1), (0.8, 0.1), (0.8, 0.25), (0.37, 0.25), (0.37, 0.42), (0.7, 0.42), (0.7, 0.58), (0.37, 0.58),
           (0.37, 0.75), (0.8, 0.75), (0.8, 0.9), (0.2, 0.9)]],
    "F": [[(0.2, 0.1), (0.8, 0.1), (0.8, 0.25), (0.37, 0.25), (0.37, 0.42), (0.7, 0.42), (0.7, 0.58), (0.37, 0.58),
           (0.37, 0.9), (0.2, 0.9)]],
    "G": [[(0.8, 0.1), (0.3, 0.1), (0.15, 0.25), (0.15, 0.75), (0.3, 0.9), (0.82, 0.9), (0.82, 0.5), (0.55, 0.5),
           (0.55, 0.62), (0.66, 0.62), (0.66, 0.75), (0.36, 0.75), (0.32, 0.7), (0.32, 0.3), (0.36, 0.25), (0.8, 0.25)]],
    "H": [[(0.15, 0.1), (0.32, 0.1), (0.32, 0.42), (0.68, 0.42), (0.68, 0.1), (0.85, 0.1), (0.85, 0.9), (0.68, 0.9),
           (0.68, 0.58), (0.32, 0.58), (0.32, 0.9), (0.15, 0.9)]],
    "I": [[(0.3, 0.1), (0.7, 0.1), (0.7, 0.24), (0.58, 0.24), (0.58, 0.76), (0.7, 0.76), (0.7, 0.9), (0.3, 0.9),
           (0.3, 0.76), (0.42, 0.76), (0.42, 0.24), (0.3, 0.24)]],
    "J": [[(0.45, 0.1), (0.8, 0.1), (0.8, 0.7), (0.62, 0.9), (0.32, 0.9), (0.18, 0.75), (0.18, 0.6), (0.34, 0.6),
           (0.34, 0.7), (0.4, 0.76), (0.58, 0.76), (0.63, 0.7), (0.63, 0.24), (0.45, 0.24)]],
    "K": [[(0.18, 0.1), (0.35, 0.1), (0.35, 0.42), (0.64, 0.1), (0.84, 0.1), (0.5, 0.48), (0.86, 0.9), (0.65, 0.9),
           (0.38, 0.56), (0.35, 0.6), (0.35, 0.9), (0.18, 0.9)]],
    "L": [[(0.2, 0.1), (0.37, 0.1), (0.37, 0.75), (0.8, 0.75), (0.8, 0.9), (0.2, 0.9)]],
    "M": [[(0.12, 0.9), (0.12, 0.1), (0.3, 0.1), (0.5, 0.45), (0.7, 0.1), (0.88, 0.1), (0.88, 0.9), (0.72, 0.9),
           (0.72, 0.4), (0.54, 0.7), (0.46, 0.7), (0.28, 0.4), (0.28, 0.9)]],
    "N": [[(0.17, 0.9), (0.17, 0.1), (0.34, 0.1), (0.66, 0.62), (0.66, 0.1), (0.83, 0.1), (0.83, 0.9), (0.66, 0.9),
           (0.34, 0.38), (0.34, 0.9)]],
    "O": [[(0.35, 0.1), (0.65, 0.1), (0.85, 0.3), (0.85, 0.7), (0.65, 0.9), (0.35, 0.9), (0.15, 0.7), (0.15, 0.3)],
          [(0.4, 0.25), (0.6, 0.25), (0.69, 0.36), (0.69, 0.64), (0.6, 0.75), (0.4, 0.75), (0.31, 0.64), (0.31, 0.36)]],
    "P": [[(0.2, 0.1), (0.65, 0.1), (0.82, 0.25), (0.82, 0.45), (0.65, 0.6), (0.37, 0.6), (0.37, 0.9), (0.2, 0.9)],
          [(0.37, 0.24), (0.6, 0.24), (0.66, 0.3), (0.66, 0.4), (0.6, 0.46), (0.37, 0.46)]],
    "Q": [[(0.35, 0.1), (0.65, 0.1), (0.85, 0.3), (0.85, 0.7), (0.78, 0.78), (0.88, 0.88), (0.78, 0.95), (0.68, 0.88),
           (0.65, 0.9), (0.35, 0.9), (0.15, 0.7), (0.15, 0.3)],
          [(0.4, 0.25), (0.6, 0.25), (0.69, 0.36), (0.69, 0.64), (0.6, 0.75), (0.4, 0.75), (0.31, 0.64), (0.31, 0.36)]],
    "R": [[(0.2, 0.1), (0.65, 0.1), (0.82, 0.25), (0.82, 0.45), (0.68, 0.58), (0.85, 0.9), (0.66, 0.9), (0.5, 0.6),
           (0.37, 0.6), (0.37, 0.9), (0.2, 0.9)],
          [(0.37, 0.24), (0.6, 0.24), (0.66, 0.3), (0.66, 0.4), (0.6, 0.46), (0.37, 0.46)]],
    "S": [[(0.82, 0.1), (0.3, 0.1), (0.16, 0.22), (0.16, 0.45), (0.3, 0.57), (0.64, 0.57), (0.66, 0.6), (0.66, 0.73),
           (0.64, 0.76), (0.18, 0.76), (0.18, 0.9), (0.7, 0.9), (0.84, 0.78), (0.84, 0.55), (0.7, 0.43), (0.36, 0.43),
           (0.34, 0.4), (0.34, 0.27), (0.36, 0.24), (0.82, 0.24)]],
    "T": [[(0.15, 0.1), (0.85, 0.1), (0.85, 0.25), (0.58, 0.25), (0.58, 0.9), (0.42, 0.9), (0.42, 0.25), (0.15, 0.25)]],
    "U": [[(0.17, 0.1), (0.34, 0.1), (0.34, 0.7), (0.4, 0.76), (0.6, 0.76), (0.66, 0.7), (0.66, 0.1), (0.83, 0.1),
           (0.83, 0.75), (0.68, 0.9), (0.32, 0.9), (0.17, 0.75)]],
    "V": [[(0.12, 0.1), (0.3, 0.1), (0.5, 0.68), (0.7, 0.1), (0.88, 0.1), (0.59, 0.9), (0.41, 0.9)]],
    "W": [[(0.05, 0.1), (0.21, 0.1), (0.32, 0.62), (0.43, 0.1), (0.57, 0.1), (0.68, 0.62), (0.79, 0.1), (0.95, 0.1),
           (0.77, 0.9), (0.61, 0.9), (0.5, 0.42), (0.39, 0.9), (0.23, 0.9)]],
    "X": [[(0.14, 0.1), (0.33, 0.1), (0.5, 0.38), (0.67, 0.1), (0.86, 0.1), (0.6, 0.5), (0.86, 0.9), (0.67, 0.9),
           (0.5, 0.62), (0.33, 0.9), (0.14, 0.9), (0.4, 0.5)]],
    "Y": [[(0.12, 0.1), (0.31, 0.1), (0.5, 0.42), (0.69, 0.1), (0.88, 0.1), (0.58, 0.56), (0.58, 0.9), (0.42, 0.9),
           (0.42, 0.56)]],
    "Z": [[(0.18, 0.1), (0.82, 0.1), (0.82, 0.24), (0.4, 0.76), (0.82, 0.76), (0.82, 0.9), (0.18, 0.9), (0.18, 0.76),
           (0.6, 0.24), (0.18, 0.24)]],
}


def point_at(poly, s):
    """Point at arc length s along the closed polygon."""
    n = len(poly)
    for i in range(n):
        a, b = poly[i], poly[(i + 1) % n]
        seg = math.dist(a, b)
        if s <= seg or i == n - 1:
            t = min(max(s / seg, 0.0), 1.0)
            return (a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]))
        s -= seg
    raise AssertionError


def resample(poly, curves):
    perimeter = sum(math.dist(poly[i], poly[(i + 1) % len(poly)]) for i in range(len(poly)))
    step = perimeter / curves
    ends = [point_at(poly, j * step) for j in range(curves)]
    out = []
    for j in range(curves):
        a, c = ends[j], ends[(j + 1) % curves]
        m = point_at(poly, (j + 0.5) * step)
        b = (2 * m[0] - 0.5 * (a[0] + c[0]), 2 * m[1] - 0.5 * (a[1] + c[1]))
        b = (min(max(b[0], 0.0), 1.0), min(max(b[1], 0.0), 1.0))
        out += [a, b]
    return [[round(x, 6), round(y, 6)] for x, y in out]


def main():
    templates = []
    for label, loops in sorted(LETTERS.items()):
        sizes = [OUTER] + [INNER] * (len(loops) - 1)
        templates.append({"label": label, "loops": [resample(p, n) for p, n in zip(loops, sizes)]})
    rows = ",\n".join("    " + json.dumps(t) for t in templates)
    text = '{\n  "format": "sdfit-templates",\n  "version": 1,\n  "templates": [\n' + rows + "\n  ]\n}\n"
    json.loads(text)
    out = pathlib.Path(__file__).resolve().parent.parent / "crates" / "core" / "data" / "templates.json"
    out.write_text(text)
    print(f"wrote {len(templates)} templates to {out}")


if __name__ == "__main__":
    main()
