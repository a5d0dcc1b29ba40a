#!/usr/bin/env python3
# -*- coding: utf-8 -*-
#
# pyquermass documentation build configuration file.

import os  # isort:skip
import sys  # isort:skip

sys.path.insert(0, os.path.abspath(".."))
import pyquermass  # isort:skip


# -- General configuration ------------------------------------------------

extensions = [
    "sphinx.ext.autodoc",
    "sphinx.ext.doctest",
    "sphinx.ext.intersphinx",
    "sphinx.ext.mathjax",
    "sphinx.ext.coverage",
]

templates_path = ["_templates"]
source_suffix = ".rst"
master_doc = "index"

project = "pyquermass"
copyright = "2026, pyquermass developers"
author = "pyquermass developers"

version = pyquermass.__version__
release = pyquermass.__version__

language = "en"
exclude_patterns = ["_build"]
pygments_style = "sphinx"

# members are documented in source order, which follows the derivation
autodoc_member_order = "bysource"


# -- Options for HTML output ----------------------------------------------

html_theme = "sphinx_rtd_theme"
html_static_path = ["_static"]
htmlhelp_basename = "pyquermassdoc"


# -- Options for LaTeX and manual page output -----------------------------

latex_documents = [
    (master_doc, "pyquermass.tex", "pyquermass Documentation", author, "manual"),
]

man_pages = [(master_doc, "pyquermass", "pyquermass Documentation", [author], 1)]

intersphinx_mapping = {
    "python": ("https://docs.python.org/3", None),
    "numpy": ("https://numpy.org/doc/stable/", None),
    "scipy": ("https://docs.scipy.org/doc/scipy/", None),
}
