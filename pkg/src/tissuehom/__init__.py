"""Two-scale finite-element simulation of growing cellular plant tissue.

The package couples a cell-wall-resolved elasticity model of a honeycomb
tissue (pressurized cells, Lockhart-type growth kinetics) with its
homogenized continuum counterpart, whose effective properties are computed
on the fly from periodic unit-cell problems.
"""

__version__ = "0.1.0"
