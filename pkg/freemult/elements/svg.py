#!/usr/bin/env python
# -*- encoding: utf-8 -*-
from freemult.lib.namespace import ns
from freemult.lib.python_utilities import svg_number

from .base import BaseElement
from .base import ValuedBaseElement


# Containers
class Svg(BaseElement):
    tag = ns("S", "svg")

    def __init__(self, width, height, **attributes):
        super(Svg, self).__init__(width=width, height=height, **attributes)
        self.set("viewBox", "0 0 %s %s" % (svg_number(width), svg_number(height)))


class Group(BaseElement):
    tag = ns("S", "g")


# Shapes
class Rect(BaseElement):
    tag = ns("S", "rect")

    def __init__(self, x, y, width, height, **attributes):
        super(Rect, self).__init__(x=x, y=y, width=width, height=height, **attributes)


class Line(BaseElement):
    tag = ns("S", "line")

    def __init__(self, x1, y1, x2, y2, **attributes):
        super(Line, self).__init__(x1=x1, y1=y1, x2=x2, y2=y2, **attributes)


class Polyline(BaseElement):
    tag = ns("S", "polyline")

    def __init__(self, points, **attributes):
        super(Polyline, self).__init__(**attributes)
        self.set(
            "points",
            " ".join("%s,%s" % (svg_number(x), svg_number(y)) for x, y in points),
        )


# Text
class Text(ValuedBaseElement):
    tag = ns("S", "text")

    def __init__(self, value, x, y, **attributes):
        super(Text, self).__init__(value=value, x=x, y=y, **attributes)


class Title(ValuedBaseElement):
    tag = ns("S", "title")
