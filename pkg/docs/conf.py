# Sphinx configuration for the fluxquanta documentation.

project = 'fluxquanta'
copyright = '2026, fluxquanta developers'
author = 'fluxquanta developers'

master_doc = 'index'
source_suffix = '.rst'
exclude_patterns = ['_build']

pygments_style = 'sphinx'
html_theme = 'sphinx_rtd_theme'
