#!/usr/bin/env python
# -*- encoding: utf-8 -*-
import logging
import os
from collections import defaultdict

from freemult import __version__

## one of DEBUG_PDB, DEBUG, DEVELOPMENT, PRODUCTION
debugmode = os.environ.get("FREEMULT_DEBUGMODE")
if not debugmode:
    if "dev" in __version__:
        debugmode = "DEVELOPMENT"
    else:
        debugmode = "PRODUCTION"

log = logging.getLogger("freemult")
if debugmode.startswith("DEBUG"):
    log.setLevel(logging.DEBUG)
else:
    log.setLevel(logging.WARNING)


def assert_(condition, message=None):
    try:
        assert condition, message
    except AssertionError:
        if debugmode == "PRODUCTION":
            log.error(
                "Deviation from expectations found (%s).  %s"
                % (message or "no details", ERR_FRAGMENT),
                exc_info=True,
            )
        elif debugmode == "DEBUG_PDB":
            log.error("Deviation from expectations found.  Dropping into debugger")
            import pdb

            pdb.set_trace()
        else:
            raise


ERR_FRAGMENT = "Please raise an issue with the freemult maintainers, include this error, the traceback and the run configuration"


class FreeMultError(Exception):
    """
    Base class for everything the library raises on purpose.  The
    context property tells where it happened (an operation name, a grid
    point, a config field), the reason property tells what went wrong.
    """

    context = None
    reason = "no reason"

    def __init__(self, context=None, reason=None):
        if context:
            self.context = context
        if reason:
            self.reason = reason

    def __str__(self):
        return "%s at '%s', reason %s" % (
            self.__class__.__name__,
            self.context,
            self.reason,
        )


class DimensionError(FreeMultError, ValueError):
    pass


class NonFiniteError(FreeMultError, ValueError):
    pass


class NotHermitian(FreeMultError, ValueError):
    pass


class InvalidModel(FreeMultError, ValueError):
    """Model data violating its invariants (weights, Hermitian atoms, ...)"""

    pass


class SingularMatrix(FreeMultError):
    """
    A matrix that had to be inverted was numerically singular.  The
    offending matrix is kept in the matrix property.
    """

    matrix = None

    def __init__(self, context=None, reason=None, matrix=None):
        super(SingularMatrix, self).__init__(context, reason)
        self.matrix = matrix


class DomainEscape(FreeMultError):
    """
    An argument or an iterate left the operator half-plane a transform
    is defined on.  The offending intermediate is kept in the matrix
    property.
    """

    matrix = None

    def __init__(self, context=None, reason=None, matrix=None):
        super(DomainEscape, self).__init__(context, reason)
        self.matrix = matrix


class NoConvergence(FreeMultError):
    iterations = None
    residual = None
    history = ()

    def __init__(
        self, context=None, reason=None, iterations=None, residual=None, history=()
    ):
        super(NoConvergence, self).__init__(context, reason)
        self.iterations = iterations
        self.residual = residual
        self.history = tuple(history)

    def __str__(self):
        return "%s at '%s', reason %s (iterations=%s, residual=%s)" % (
            self.__class__.__name__,
            self.context,
            self.reason,
            self.iterations,
            self.residual,
        )


class InvalidPair(FreeMultError):
    """
    The (x, y) pair does not satisfy the hypotheses of the product
    iteration.  The report property holds the full validation report.
    """

    report = None

    def __init__(self, context=None, reason=None, report=None):
        if report is not None and reason is None:
            reason = "; ".join(report.errors)
        super(InvalidPair, self).__init__(context, reason)
        self.report = report


class UnwrapInconsistent(FreeMultError):
    pass


class UnsupportedModel(FreeMultError):
    pass


class EmptyHistogram(FreeMultError):
    pass


class NonPositiveRealization(FreeMultError):
    min_eigenvalue = None
    trial = None

    def __init__(self, context=None, reason=None, min_eigenvalue=None, trial=None):
        if reason is None and min_eigenvalue is not None:
            reason = "minimal eigenvalue %g in trial %s" % (min_eigenvalue, trial)
        super(NonPositiveRealization, self).__init__(context, reason)
        self.min_eigenvalue = min_eigenvalue
        self.trial = trial


class ConfigError(FreeMultError):
    """
    Problems with a run configuration.  Syntax errors carry line and
    column, semantic errors carry the dotted field path (as context).
    """

    line = None
    column = None

    def __init__(self, context=None, reason=None, line=None, column=None):
        super(ConfigError, self).__init__(context, reason)
        self.line = line
        self.column = column

    def __str__(self):
        if self.line is not None:
            return "%s at line %i column %i, reason %s" % (
                self.__class__.__name__,
                self.line,
                self.column,
                self.reason,
            )
        return super(ConfigError, self).__str__()


## exit codes of the command line front-end
exit_code_by_error = defaultdict(lambda: 1)
exit_code_by_error[ConfigError] = 2
exit_code_by_error[InvalidPair] = 2
