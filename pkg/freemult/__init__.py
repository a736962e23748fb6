#!/usr/bin/env python
import logging

__version__ = "0.1.0"

from .models import DiscreteModel, SemicircularModel, CovarianceMap, validate_pair
from .subordination import IterationConfig, omega2, omega1, h_product
from .subordination import cauchy_product_scalar_point
from .density import GridSpec, DensityCurve, density_grid, unwrap_embedding

## Notes:
##
## * numpy arrays of dtype complex128 are the matrix type everywhere; see
##   freemult.lib.matcx for the helpers that validate and operate on them.

# Silence notification of no default logging handler
log = logging.getLogger("freemult")


class NullHandler(logging.Handler):
    def emit(self, record):
        pass


log.addHandler(NullHandler())
