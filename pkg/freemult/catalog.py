#!/usr/bin/env python
# -*- encoding: utf-8 -*-
"""
The covariance families and scalar-block models of the worked examples.

Each family lists the coefficient matrices A_k of S = sum_k A_k (x) s_k
with free standard semicirculars s_k:

 * S1  = s1 [[1,1],[1,0]] + s2 [[0,0],[0,1]]
 * S2  = s3 I + s4 [[1,2],[2,-3]]
 * S1' = 3x3 in s1, s2, s3
 * S2' = 3x3 in s4, s5, s6
"""
from freemult.lib import error
from freemult.models import CovarianceMap
from freemult.models import DiscreteModel
from freemult.models import SemicircularModel

FAMILIES = {
    "S1": [
        [[1, 1], [1, 0]],
        [[0, 0], [0, 1]],
    ],
    "S2": [
        [[1, 0], [0, 1]],
        [[1, 2], [2, -3]],
    ],
    "S1_prime": [
        [[-10, 0, 0], [0, 0, 5], [0, 5, 16]],
        [[0, 2, 0], [2, 0, 0], [0, 0, 0]],
        [[0, 0, 30], [0, -4, 0], [30, 0, 0]],
    ],
    "S2_prime": [
        [[-2, 0, 0], [0, 1, 1], [0, 1, 40]],
        [[0, 3, 0], [3, 1, 0], [0, 0, 0]],
        [[3, 30, 1], [30, 1, 0], [1, 0, 0]],
    ],
    ## a scalar semicircle times I_2
    "c_identity": [
        [[1, 0], [0, 1]],
    ],
}

## scalar distributions of the linearisation example dcd + d^2 c d^2
C_SUPPORT = (0.4, 0.7, 1.0, 1.3, 1.5, 1.7)
D_SUPPORT = (0.5, 1.0, 1.5, 2.0, 2.5, 3.0)

## x = c I_2 and y = [[d^2, d^3], [d^3, d^4]]; xy has the nonzero spectrum
## of dcd + d^2 c d^2 plus a structural atom of mass 1/2 at zero
X_EXPONENTS = ((1, None), (None, 1))
Y_EXPONENTS = ((2, 3), (3, 4))
EMBEDDING_K = 2


def covariance(name):
    try:
        return CovarianceMap(FAMILIES[name])
    except KeyError:
        raise error.InvalidModel(
            "catalog", "unknown family %r, known are %s" % (name, ", ".join(sorted(FAMILIES)))
        )


def semicircular(name, shift=0.0):
    return SemicircularModel(covariance(name), shift=shift)


def uniform_scalar_blocks(support, exponents):
    weights = [1.0 / len(support)] * len(support)
    return DiscreteModel.from_scalar_blocks(support, weights, exponents)


def linearised_pair(c_model=None, d_support=D_SUPPORT):
    """
    (x, y) for dcd + d^2 c d^2.  c defaults to the uniform discrete c; a
    semicircular c is passed in as a model on M_2 already.
    """
    if c_model is None:
        c_model = uniform_scalar_blocks(C_SUPPORT, X_EXPONENTS)
    return c_model, uniform_scalar_blocks(d_support, Y_EXPONENTS)
