"""Exception types shared across the package.

The CLI maps these onto its exit codes: usage problems exit 1, data or
validation problems exit 2, numerical non-convergence exits 3.
"""

from __future__ import annotations


class PullsimError(Exception):
    """Base class for all errors raised by this package."""


class DataError(PullsimError, ValueError):
    """Invalid input data, configuration, or file content.

    Covers parse errors, dimension mismatches, violated invariants, and
    rejected preconditions. The message names the offending field, file
    location, or quantity.
    """


class ConvergenceError(PullsimError, RuntimeError):
    """A numerical procedure failed to converge or is singular."""
