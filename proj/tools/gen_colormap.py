#!/usr/bin/env python3
"""Regenerates data/colormap.rgb: 256 entries x (R, G, B), entry 0 first.

Piecewise-linear blue -> cyan -> yellow -> red in three equal segments.
"""
import pathlib
import sys

STOPS = [(0, 0, 255), (0, 255, 255), (255, 255, 0), (255, 0, 0)]


def entry(i):
    t = i / 255 * (len(STOPS) - 1)
    seg = min(int(t), len(STOPS) - 2)
    f = t - seg
    a, b = STOPS[seg], STOPS[seg + 1]
    return bytes(int(round(a[c] + (b[c] - a[c]) * f)) for c in range(3))


def main():
    out = pathlib.Path(sys.argv[1] if len(sys.argv) > 1 else "data/colormap.rgb")
    out.write_bytes(b"".join(entry(i) for i in range(256)))


if __name__ == "__main__":
    main()
