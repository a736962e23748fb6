# -*- coding: utf-8 -*-
#
# freemult documentation build configuration file.
#
# This file is execfile()d with the current directory set to its containing dir.
import os
import sys

# The package is importable from the repository root.
sys.path.append(os.path.abspath("../"))
from freemult import __version__ as version

# -- General configuration -----------------------------------------------------

extensions = [
    "sphinx.ext.autodoc",
    "sphinx.ext.coverage",
    "sphinx.ext.doctest",
    "sphinx.ext.mathjax",
]

templates_path = ["_templates"]
source_suffix = ".rst"
master_doc = "index"

project = "freemult"
copyright = "2024, the freemult contributors"

release = version

exclude_trees = []

pygments_style = "sphinx"

# -- Options for HTML output ---------------------------------------------------

html_theme = "default"
htmlhelp_basename = "freemultdoc"

# -- Options for LaTeX output --------------------------------------------------

latex_documents = [
    (
        "index",
        "freemult.tex",
        "freemult Documentation",
        "the freemult contributors",
        "manual",
    ),
]
