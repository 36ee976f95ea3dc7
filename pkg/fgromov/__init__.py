"""fgromov: finitary tools for the quantitative Gromov theorem"""

__version__ = "0.1.0"
