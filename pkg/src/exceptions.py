"""Root error categories shared by every sub-package.

The command line maps the two categories to distinct exit codes, so every
library error derives from exactly one of them.
"""


class EnsembleLogRegError(Exception):
    """Base exception for the package"""
    pass


class StructuralError(EnsembleLogRegError, ValueError):
    """Inputs have the wrong shape, range or kind"""
    pass


class NumericError(EnsembleLogRegError, ArithmeticError):
    """A computation produced non-finite values or failed to converge"""
    pass
