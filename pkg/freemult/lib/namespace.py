#!/usr/bin/env python
# -*- encoding: utf-8 -*-

SVG = "http://www.w3.org/2000/svg"

## plots are written with SVG as the default namespace
nsmap = {
    None: SVG,
}

prefixes = {
    "S": SVG,
}


def ns(prefix, tag=None):
    name = "{%s}" % prefixes[prefix]
    if tag is not None:
        name = "%s%s" % (name, tag)
    return name
