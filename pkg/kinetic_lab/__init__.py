"""
kinetic_lab: a numerical laboratory for one-dimensional isentropic gas
dynamics with adiabatic exponent 3.
"""

__version__ = "0.1.0"
