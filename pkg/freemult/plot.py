#!/usr/bin/env python
# -*- encoding: utf-8 -*-
"""
SVG overlay of a computed density (polyline) and a Monte Carlo
histogram (bars).
"""
import logging

import numpy as np
from freemult.elements import svg

log = logging.getLogger("freemult")

WIDTH = 800
HEIGHT = 500
MARGIN = 50
TICKS = 5


class _Frame(object):
    """Maps data coordinates to pixels"""

    def __init__(self, t_min, t_max, f_max):
        self.t_min = t_min
        self.t_max = t_max
        self.f_max = f_max if f_max > 0 else 1.0

    def x(self, t):
        return MARGIN + (t - self.t_min) / (self.t_max - self.t_min) * (WIDTH - 2 * MARGIN)

    def y(self, f):
        return HEIGHT - MARGIN - f / self.f_max * (HEIGHT - 2 * MARGIN)


def _axes(frame):
    axes = svg.Group(stroke="black", stroke_width=1, font_size=12)
    axes += svg.Line(MARGIN, HEIGHT - MARGIN, WIDTH - MARGIN, HEIGHT - MARGIN)
    axes += svg.Line(MARGIN, MARGIN, MARGIN, HEIGHT - MARGIN)
    for t in np.linspace(frame.t_min, frame.t_max, TICKS):
        axes += svg.Text("%.3g" % t, frame.x(t), HEIGHT - MARGIN + 18, text_anchor="middle", stroke="none")
    for f in np.linspace(0, frame.f_max, TICKS):
        axes += svg.Text("%.3g" % f, MARGIN - 6, frame.y(f) + 4, text_anchor="end", stroke="none")
    return axes


def overlay(curve=None, spectrum=None, title=None):
    """
    Builds the Svg element.  Either input may be None; at least one is
    needed to fix the axes.
    """
    if curve is None and spectrum is None:
        raise ValueError("nothing to plot")
    lows, highs, tops = [], [], [0.0]
    if curve is not None:
        lows.append(curve.grid[0])
        highs.append(curve.grid[-1])
        tops.append(float(curve.values.max()))
    if spectrum is not None:
        lows.append(spectrum.edges[0])
        highs.append(spectrum.edges[-1])
        tops.append(float(spectrum.heights.max()))
    frame = _Frame(float(min(lows)), float(max(highs)), 1.05 * max(tops))

    root = svg.Svg(WIDTH, HEIGHT)
    root += svg.Rect(0, 0, WIDTH, HEIGHT, fill="white")
    if title:
        root += svg.Title(title)
        root += svg.Text(title, WIDTH / 2, MARGIN / 2, text_anchor="middle", font_size=14)
    if spectrum is not None:
        bars = svg.Group(fill="#9db4d6", stroke="none")
        for left, right, height in zip(spectrum.edges[:-1], spectrum.edges[1:], spectrum.heights):
            if height <= 0:
                continue
            top = frame.y(height)
            bars += svg.Rect(frame.x(left), top, frame.x(right) - frame.x(left), frame.y(0) - top)
        root += bars
    if curve is not None:
        points = [(frame.x(t), frame.y(f)) for t, f in zip(curve.grid, curve.values)]
        root += svg.Polyline(points, fill="none", stroke="#c0392b", stroke_width=1.5)
    root += _axes(frame)
    return root


def write_overlay(path, curve=None, spectrum=None, title=None):
    with open(path, "w") as f:
        f.write(str(overlay(curve, spectrum, title)))
    log.debug("plot: wrote %s" % path)
