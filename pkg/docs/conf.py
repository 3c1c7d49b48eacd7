# -*- coding: utf-8 -*-
#
# spinergy documentation build configuration file.
#
# This file is execfile()d with the current directory set to its
# containing dir.

import os
import re


# -- General configuration ------------------------------------------------

extensions = [
    'sphinx.ext.autodoc',
    'sphinx.ext.doctest',
    'sphinx.ext.todo',
    'sphinx.ext.viewcode',
    'sphinx.ext.mathjax',
    'sphinx_issues',
]

primary_domain = 'py'
default_role = 'py:obj'

templates_path = ['_templates']

source_suffix = '.rst'

master_doc = 'index'

project = u'spinergy'
copyright = u'2026, spinergy developers'
author = u'spinergy developers'


def _find_version():
    path = os.path.join(os.path.dirname(__file__), '..', 'spinergy', '__init__.py')
    with open(path) as f:
        return re.search(r"^__version__ = '([^']*)'", f.read(), re.M).group(1)


version = _find_version()
release = version

language = 'en'

exclude_patterns = ['_build', 'Thumbs.db', '.DS_Store']

add_function_parentheses = True

pygments_style = 'sphinx'

todo_include_todos = True

autodoc_member_order = 'bysource'


# -- Options for HTML output ----------------------------------------------

html_theme = 'alabaster'

html_theme_options = {
    'page_width': '1024px',
}

html_static_path = []

html_show_sourcelink = False

html_show_sphinx = False

htmlhelp_basename = 'spinergydoc'


# -- Options for LaTeX output ---------------------------------------------

latex_elements = {}

latex_documents = [
    (master_doc, 'spinergy.tex', u'spinergy Documentation',
     u'spinergy developers', 'manual'),
]


# -- Options for manual page output ---------------------------------------

man_pages = [
    (master_doc, 'spinergy', u'spinergy Documentation',
     [author], 1)
]
