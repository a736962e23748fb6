#!/usr/bin/env python
# -*- encoding: utf-8 -*-
"""
Subordination for the product of two B-free variables x > 0 and y.

For b in the upper half-plane, omega_2(b) is the attracting fixed point
of

    g_b(w) = b h_x(h_y(w) b)

and everything about xy follows from it:

    omega_1(b) = h_y(omega_2(b)) b
    h_xy(b)    = b^-1 omega_2(b) h_y(omega_2(b))
    G_xy(z I)  = (z I - h_xy(z^-1 I))^-1

The density pipeline needs h_xy at z^-1 I with z in the upper
half-plane, i.e. at a lower half-plane argument.  All lower half-plane
arguments go through _route: the computation runs at b^* and the
result is reflected back, f(b) = f(b^*)^*.
"""
import collections
import logging
import weakref
from dataclasses import dataclass
from dataclasses import field
from dataclasses import replace
from typing import Optional

import numpy as np
from freemult import models
from freemult.lib import error
from freemult.lib import matcx
from freemult.lib import solvers

log = logging.getLogger("freemult")

HISTORY_TAIL = 20

## x -> the y models it has passed validate_pair with
_validated = weakref.WeakKeyDictionary()


@dataclass(frozen=True)
class IterationConfig:
    tol: float = 1e-12
    max_iter: int = 10000
    damping: float = 1.0
    ## None means i * I
    w0: Optional[np.ndarray] = None
    ## Newton polishing of the fixed point, off by default
    newton_polish: bool = False
    polish_threshold: float = 1e-6
    polish_after: int = 500

    def __post_init__(self):
        if not self.tol > 0:
            raise error.InvalidModel("iteration.tol", "tol must be positive, got %r" % self.tol)
        if not 0 < self.damping <= 1:
            raise error.InvalidModel(
                "iteration.damping", "damping must lie in (0, 1], got %r" % self.damping
            )
        if self.max_iter < 1:
            raise error.InvalidModel("iteration.max_iter", "max_iter must be at least 1")
        if self.w0 is not None and matcx.half_plane(np.asarray(self.w0, dtype=complex)) <= 0:
            raise error.DomainEscape(
                "iteration.w0", "starting point must have Im w0 > 0", matrix=self.w0
            )

    def start(self, dim):
        if self.w0 is None:
            return 1j * matcx.identity(dim)
        return matcx.as_matrix(self.w0, dim, context="iteration.w0")


@dataclass
class SubordinationResult:
    omega2: np.ndarray
    iterations: int
    residual: float
    ## None when the lower bound could not be tested
    im_lower_bound_ok: Optional[bool] = None
    newton_steps: int = 0
    history: tuple = field(default_factory=tuple)

    def reflected(self):
        return replace(self, omega2=matcx.adjoint(self.omega2))


class _SubordinationMap(object):
    """
    g_b for fixed (x, y, b).  Keeps the last Cauchy transform values of
    both models so that iterating models (semicircular) warm start.
    """

    def __init__(self, x, y, b):
        self.x = x
        self.y = y
        self.b = b
        self._gy = None
        self._gx = None

    def h_y(self, w):
        hy, self._gy = self.y.h_and_cauchy(w, strict=True, start=self._gy)
        return hy

    def __call__(self, w):
        hy = self.h_y(w)
        c = hy @ self.b
        try:
            hx, self._gx = self.x.h_and_cauchy(c, strict=False, start=self._gx)
        except (error.SingularMatrix, error.DomainEscape) as e:
            raise error.DomainEscape(
                "g_map", "h_x not computable at h_y(w) b: %s" % e.reason, matrix=c
            )
        return self.b @ hx


def g_map(x, y, b, w):
    """
    g_b(w) = b h_x(h_y(w) b) for Im w > 0.
    """
    w = matcx.as_matrix(w, x.dim, context="g_map")
    b = matcx.as_matrix(b, x.dim, context="g_map")
    if matcx.half_plane(w) <= 0:
        raise error.DomainEscape("g_map", "Im w must be strictly positive", matrix=w)
    return _SubordinationMap(x, y, b)(w)


def check_pair(x, y, context="omega2", known_valid=False):
    """
    Runs validate_pair once per (x, y) and raises InvalidPair on errors.
    Later calls with the same model objects are free.  known_valid
    records a pair validated elsewhere, e.g. in the parent of a worker
    process, without checking it again.
    """
    seen = _validated.get(x)
    if seen is not None and y in seen:
        return
    if not known_valid:
        models.validate_pair(x, y).raise_for_errors(context)
    _validated.setdefault(x, weakref.WeakSet()).add(y)


def _route(b, context):
    """
    The conjugate reflection.  Returns (argument in the upper
    half-plane, whether the result has to be reflected back).
    """
    side = matcx.half_plane(b)
    if side > 0:
        return b, False
    if side < 0:
        return matcx.adjoint(b), True
    raise error.DomainEscape(context, "b is in neither operator half-plane", matrix=b)


def _lower_bound_ok(x, b, omega, tol):
    """
    Im omega_2(b) >= (sum_i p_i (Im(b M_i))^-1)^-1, tested only for a
    discrete x with strictly positive atoms and Im(b M_i) > 0.
    """
    if x.kind != "discrete":
        return None
    if np.any(x.atom_min_eigenvalues() <= 0):
        return None
    acc = np.zeros_like(b)
    for p, m in zip(x.weights, x.matrices):
        im = matcx.imag_part(b @ m)
        if matcx.half_plane(1j * im) <= 0:
            return None
        acc = acc + p * matcx.inverse(im, context="lower bound")
    bound = matcx.inverse(acc, context="lower bound")
    gap = matcx.real_part(matcx.imag_part(omega) - bound)
    ok = matcx.min_eigenvalue(gap) >= -10 * tol * max(1.0, matcx.norm(bound))
    if not ok:
        log.warning("omega2: Im omega2 violates the lower bound by %g" % -matcx.min_eigenvalue(gap))
    return ok


def _iterate(x, y, b, cfg):
    g = _SubordinationMap(x, y, b)
    w = cfg.start(x.dim)
    history = collections.deque(maxlen=HISTORY_TAIL)
    step = None
    newton_steps = 0
    for k in range(cfg.max_iter):
        gw = g(w)
        if matcx.half_plane(gw) <= 0:
            raise error.DomainEscape(
                "omega2", "iterate %i left the upper half-plane" % (k + 1), matrix=gw
            )
        step = matcx.norm(gw - w)
        history.append(step)
        threshold = cfg.tol * max(1.0, matcx.norm(w))
        if step <= threshold:
            return SubordinationResult(w, k, step, newton_steps=newton_steps, history=tuple(history))
        if cfg.newton_polish and (step <= cfg.polish_threshold or (k + 1) % cfg.polish_after == 0):
            outcome = solvers.newton_polish(
                lambda u: g(u) - u,
                lambda u: solvers.difference_jacobian(g, u),
                w,
                threshold,
                admissible=lambda u: matcx.half_plane(u) > 0,
                context="omega2",
            )
            newton_steps += outcome.steps
            if outcome.converged:
                log.debug("omega2: polished after %i iterations" % (k + 1))
                return SubordinationResult(
                    outcome.point,
                    k + 1,
                    outcome.residual,
                    newton_steps=newton_steps,
                    history=tuple(history),
                )
            if outcome.steps:
                w = outcome.point
                continue
        w = (1 - cfg.damping) * w + cfg.damping * gw
    raise error.NoConvergence(
        "omega2",
        "no fixed point of g_b within max_iter",
        iterations=cfg.max_iter,
        residual=step,
        history=history,
    )


def omega2(x, y, b, cfg=None):
    """
    The subordination function omega_2(b).

    Parameters:
     * x, y: models, x positive; the pair goes through validate_pair on
       first use and InvalidPair is raised on errors
     * b: invertible argument in the upper or lower half-plane
     * cfg: IterationConfig

    Returns
     * SubordinationResult; for a lower half-plane b the result is the
       reflection of the one at b^*
    """
    cfg = cfg or IterationConfig()
    b = matcx.as_matrix(b, x.dim, context="omega2")
    if x.dim != y.dim:
        raise error.DimensionError("omega2", "x is %i, y is %i" % (x.dim, y.dim))
    check_pair(x, y)
    matcx.inverse(b, context="omega2: b must be invertible")
    upper, reflected = _route(b, "omega2")
    result = _iterate(x, y, upper, cfg)
    result.im_lower_bound_ok = _lower_bound_ok(x, upper, result.omega2, cfg.tol)
    log.debug(
        "omega2: %i iterations, residual %.3g" % (result.iterations, result.residual)
    )
    return result.reflected() if reflected else result


def omega1(x, y, b, cfg=None):
    """omega_1(b) = h_y(omega_2(b)) b"""
    b = matcx.as_matrix(b, x.dim, context="omega1")
    upper, reflected = _route(b, "omega1")
    w = omega2(x, y, upper, cfg).omega2
    value = y.h_transform(w) @ upper
    return matcx.adjoint(value) if reflected else value


def _h_product_upper(x, y, upper, cfg):
    result = omega2(x, y, upper, cfg)
    w = result.omega2
    value = matcx.inverse(upper, context="h_product") @ w @ y.h_transform(w)
    return value, result


def h_product(x, y, b, cfg=None):
    """h_xy(b) = b^-1 omega_2(b) h_y(omega_2(b))"""
    b = matcx.as_matrix(b, x.dim, context="h_product")
    upper, reflected = _route(b, "h_product")
    value, _ = _h_product_upper(x, y, upper, cfg)
    return matcx.adjoint(value) if reflected else value


def product_point(x, y, z, cfg=None):
    """
    G_xy(z I) for Im z > 0 together with the SubordinationResult of the
    (reflected) inner evaluation at conj(z^-1) I, so that callers can
    warm start from its omega2.

    The value equals E[(z - yx)^-1], the transpose convention of
    E[(z - xy)^-1]; both have the same normalised trace.  For a
    non-commuting matrix-valued pair only the trace is sure to lie in
    the lower half-plane, not G_xy itself.
    """
    cfg = cfg or IterationConfig()
    z = complex(z)
    if not z.imag > 0:
        raise error.DomainEscape("cauchy_product_scalar_point", "Im z must be positive, z=%r" % z)
    eye = matcx.identity(x.dim)
    ## z^-1 is in the lower half-plane, so h_xy(z^-1) = h_xy(conj(z^-1))^*
    upper = np.conj(1 / z) * eye
    h_upper, result = _h_product_upper(x, y, upper, cfg)
    g = matcx.inverse(z * eye - matcx.adjoint(h_upper), context="G_xy at z=%r" % z)
    error.assert_(
        np.trace(g).imag <= 1e-10 * matcx.norm(g),
        "tr G_xy(z) should lie in the lower half-plane, z=%r" % z,
    )
    return g, result


def cauchy_product_scalar_point(x, y, z, cfg=None):
    """G_xy(z I) = (z I - h_xy(z^-1 I))^-1 for a complex scalar z with Im z > 0"""
    return product_point(x, y, z, cfg)[0]


def subordination_identity_defect(x, y, b, cfg=None):
    """
    ||eta_y(omega_2(b)) - omega_2(b) eta_x(omega_1(b)) omega_2(b)^-1||,
    a self-check of the computed subordination functions.
    """
    b = matcx.as_matrix(b, x.dim, context="subordination_identity_defect")
    upper, _ = _route(b, "subordination_identity_defect")
    w2 = omega2(x, y, upper, cfg).omega2
    w1 = y.h_transform(w2) @ upper
    lhs = y.eta_transform(w2)
    rhs = w2 @ x.eta_transform(w1, strict=False) @ matcx.inverse(w2)
    return matcx.norm(lhs - rhs)
