#!/usr/bin/env python
# -*- encoding: utf-8 -*-
"""
Newton's method for holomorphic equations R(w) = 0 on M_n(C).

The fixed-point iterations of this package (semicircular Cauchy
transforms and subordination functions) contract slowly close to the
real axis.  Once a plain iteration has settled near the solution, a few
Newton steps on the same equation finish the job.  Matrices are
flattened row-major, so the Jacobian is an n^2 x n^2 complex matrix.
"""
import logging

import numpy as np
import scipy.linalg
from freemult.lib import error
from freemult.lib import matcx

log = logging.getLogger("freemult")


def basis(dim):
    """The matrix units E_ij, row-major"""
    for k in range(dim * dim):
        e = np.zeros(dim * dim, dtype=complex)
        e[k] = 1.0
        yield e.reshape(dim, dim)


def linear_jacobian(derivative, dim):
    """
    Matrix of a C-linear map H -> derivative(H) in the E_ij basis
    """
    return np.column_stack([derivative(e).ravel() for e in basis(dim)])


def difference_jacobian(fn, w, step=None):
    """
    Central-difference Jacobian of a holomorphic matrix function at w.
    Holomorphy makes the directional derivatives along E_ij enough.
    """
    dim = w.shape[0]
    if step is None:
        step = 1e-6 * max(1.0, matcx.norm(w))
    columns = []
    for e in basis(dim):
        columns.append(((fn(w + step * e) - fn(w - step * e)) / (2 * step)).ravel())
    return np.column_stack(columns)


def newton_step(residual, jacobian, context="newton"):
    try:
        delta = scipy.linalg.solve(jacobian, -residual.ravel(), check_finite=False)
    except (np.linalg.LinAlgError, ValueError) as e:
        raise error.SingularMatrix(context, "singular Jacobian: %s" % e, matrix=jacobian)
    if not np.all(np.isfinite(delta)):
        raise error.SingularMatrix(context, "non-finite Newton step", matrix=jacobian)
    return delta.reshape(residual.shape)


class NewtonOutcome(object):
    """What a polish attempt ended with"""

    def __init__(self, point, residual, steps, converged):
        self.point = point
        self.residual = residual
        self.steps = steps
        self.converged = converged

    def __repr__(self):
        return "NewtonOutcome(residual=%.3g, steps=%i, converged=%s)" % (
            self.residual,
            self.steps,
            self.converged,
        )


def newton_polish(
    residual_fn,
    jacobian_fn,
    start,
    tol,
    max_steps=12,
    admissible=None,
    context="newton",
):
    """
    Newton's method for residual_fn(w) = 0 starting at start.

    A step is only taken if the new point is admissible (when a predicate
    is given) and the residual norm decreases; otherwise the step length
    is halved a few times before giving up.  The best point seen is
    always returned, converged tells whether residual <= tol was reached.
    """
    w = start
    r = residual_fn(w)
    rnorm = matcx.norm(r)
    steps = 0
    while rnorm > tol and steps < max_steps:
        try:
            delta = newton_step(r, jacobian_fn(w), context=context)
        except error.FreeMultError as e:
            log.debug("%s: giving up polish, %s" % (context, e))
            break
        length = 1.0
        for halving in range(6):
            candidate = w + length * delta
            if admissible is None or admissible(candidate):
                try:
                    rc = residual_fn(candidate)
                except error.FreeMultError:
                    rc = None
                if rc is not None and np.all(np.isfinite(rc)) and matcx.norm(rc) < rnorm:
                    break
            length /= 2
        else:
            log.debug("%s: no descent along the Newton direction" % context)
            break
        w, r, rnorm = candidate, rc, matcx.norm(rc)
        steps += 1
    return NewtonOutcome(w, rnorm, steps, rnorm <= tol)
