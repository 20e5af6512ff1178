# -*- coding: utf-8 -*-
# Sphinx configuration of the sembandit docs.

from pathlib import Path

# The version lives in a single place: src/sembandit/version.py
version_file = Path(__file__).absolute().parents[2] / 'src' / 'sembandit' / 'version.py'
with version_file.open(encoding='utf-8') as fid:
    version = next(line.split("'")[1] for line in fid.readlines() if 'VERSION' in line)

project = 'sembandit'
copyright = '2024, sembandit contributors'
author = 'sembandit contributors'

extensions = [
    'sphinx.ext.napoleon',
    'sphinx.ext.autosectionlabel',
    'sphinx.ext.autodoc',
]
autodoc_default_options = {'member-order': 'bysource'}
autosectionlabel_prefix_document = True

templates_path = ['_templates']
exclude_patterns: list = []
pygments_style = 'sphinx'
highlight_language = 'python3'

# Google style docstrings
napoleon_google_docstring = True
napoleon_numpy_docstring = False
napoleon_include_init_with_doc = True
napoleon_use_param = False
napoleon_use_rtype = False

html_theme = 'sphinx_rtd_theme'
