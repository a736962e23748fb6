import numpy as np


def to_normal_str(text):
    """
    Make sure we return a normal string
    """
    if text is None:
        return text
    if not isinstance(text, str):
        text = text.decode("utf-8")
    text = text.replace("\r\n", "\n")
    return text


def to_unicode(text):
    if text and isinstance(text, bytes):
        return text.decode("utf-8")
    return text


def decimal_str(value, digits=12):
    """
    Positional notation with the given number of significant digits,
    trailing zeros trimmed.  Identical input gives identical output, which
    keeps exported files byte-reproducible.
    """
    return np.format_float_positional(
        float(value), precision=digits, unique=False, fractional=False, trim="-"
    )


def svg_number(value):
    """Short coordinate string for plot output"""
    return decimal_str(value, digits=6)
