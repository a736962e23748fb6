#!/usr/bin/env python
# -*- encoding: utf-8 -*-
from freemult.lib.namespace import nsmap
from freemult.lib.python_utilities import svg_number
from freemult.lib.python_utilities import to_unicode
from lxml import etree


def _attribute(value):
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return svg_number(value)
    return str(value)


class BaseElement(object):
    children = None
    tag = None
    value = None
    attributes = None

    def __init__(self, value=None, **attributes):
        self.children = []
        self.attributes = {}
        value = to_unicode(value)
        self.value = None
        if value is not None:
            self.value = value
        for k, v in attributes.items():
            self.set(k, v)

    def set(self, key, value):
        ## python keywords can't hold dashes, stroke_width -> stroke-width
        self.attributes[key.replace("_", "-")] = _attribute(value)
        return self

    def __add__(self, other):
        return self.append(other)

    def __str__(self):
        utf8 = etree.tostring(
            self.xmlelement(), encoding="utf-8", xml_declaration=True, pretty_print=True
        )
        return str(utf8, "utf-8")

    def xmlelement(self):
        root = etree.Element(self.tag, nsmap=nsmap)
        if self.value is not None:
            root.text = self.value
        if len(self.attributes) > 0:
            for k in list(self.attributes.keys()):
                root.set(k, self.attributes[k])
        self.xmlchildren(root)
        return root

    def xmlchildren(self, root):
        for c in self.children:
            root.append(c.xmlelement())

    def append(self, element):
        try:
            iter(element)
            self.children.extend(element)
        except TypeError:
            self.children.append(element)
        return self


class ValuedBaseElement(BaseElement):
    def __init__(self, value=None, **attributes):
        if value is None:
            raise ValueError("%s needs a value" % self.__class__.__name__)
        super(ValuedBaseElement, self).__init__(value=value, **attributes)
