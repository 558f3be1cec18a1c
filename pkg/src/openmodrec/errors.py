"""Exception types shared across the toolkit.

Invalid arguments raise the builtin ValueError; I/O failures surface as
OSError. Everything else gets a dedicated class below.
"""


class FormatError(Exception):
    """A file (frame file, checkpoint, tails sidecar) violates its layout."""


class FitError(Exception):
    """Distribution fitting failed: degenerate data or no convergence."""


class NumericError(ArithmeticError):
    """A numeric contract was violated (non-finite values, divergence)."""
