#!/usr/bin/env python
# -*- encoding: utf-8 -*-
"""
B-valued random variables over B = M_n(C) and their transforms.

Two families are supported:

 * DiscreteModel - finitely many Hermitian atom matrices with weights,
   E[f(x)] = sum_i p_i f(M_i).
 * SemicircularModel - x = sum_k A_k (x) s_k + shift * I with free
   standard semicirculars s_k, described by the covariance map
   b -> E[x b x] - shift terms = sum_k A_k b A_k.

Every model offers the transform family

 * G(b) = E[(b - x)^-1]             (cauchy)
 * F(b) = G(b)^-1                   (reciprocal_cauchy)
 * h(w) = w^-1 - F(w^-1), h(0)=E[x] (h_transform)
 * eta(b) = b h(b)                  (eta_transform)

Arguments in the lower half-plane are handled by the Schwarz reflection
f(b^*) = f(b)^*.  That reflection is done in one place only,
OperatorModel._reflect.
"""
import logging

import numpy as np
from freemult.lib import error
from freemult.lib import matcx
from freemult.lib import solvers

log = logging.getLogger("freemult")

HERMITIAN_ATOL = 1e-12
WEIGHT_ATOL = 1e-12

## defaults for the semicircular fixed point
HRS_TOL = 1e-12
HRS_MAX_ITER = 20000
POLISH_THRESHOLD = 1e-6
POLISH_AFTER = 50
## functional equation residual above which a converged G is rejected
RESIDUAL_LIMIT = 1e-9
## off the half-planes: accept a warm start if Newton moves it less than this (relative)
WARM_RADIUS = 0.05
ROTATION_SAMPLES = 256


def _frozen(a):
    a = np.array(a, dtype=complex)
    a.flags.writeable = False
    return a


def _check_hermitian(m, context):
    if matcx.norm(m - m.conj().T) > HERMITIAN_ATOL * max(1.0, matcx.norm(m)):
        raise error.InvalidModel(context, "matrix is not Hermitian")


class OperatorModel(object):
    """
    Base class of the B-valued random variables.  Subclasses implement
    _upper_cauchy (argument in the upper half-plane) and _off_plane_cauchy
    (argument in neither half-plane), plus expectation.
    """

    kind = None
    dim = None

    def __repr__(self):
        return "%s(dim=%i)" % (self.__class__.__name__, self.dim)

    def _reflect(self, b, strict, start, context):
        side = matcx.half_plane(b)
        if side > 0:
            return self._upper_cauchy(b, start)
        if side < 0:
            if start is not None:
                start = matcx.adjoint(start)
            return matcx.adjoint(self._upper_cauchy(matcx.adjoint(b), start))
        if strict:
            raise error.DomainEscape(
                context, "argument is in neither operator half-plane", matrix=b
            )
        return self._off_plane_cauchy(b, start)

    def cauchy(self, b, strict=True, start=None):
        """
        G(b) = E[(b - x)^-1].

        Parameters:
         * b: argument, Im b > 0 or Im b < 0
         * strict: when False, arguments in neither half-plane are
           evaluated too (needed inside the subordination map)
         * start: optional guess of the result, used as warm start by
           models that iterate
        """
        b = matcx.as_matrix(b, self.dim, context="cauchy")
        return self._reflect(b, strict, start, "cauchy")

    def reciprocal_cauchy(self, b, strict=True):
        return matcx.inverse(self.cauchy(b, strict=strict), context="reciprocal_cauchy")

    def h_and_cauchy(self, w, strict=True, start=None):
        """
        Returns (h(w), G(w^-1)).  The second value is handed back so that
        callers iterating h can warm start the next evaluation; it is None
        for w = 0.
        """
        w = matcx.as_matrix(w, self.dim, context="h_transform")
        if matcx.norm(w) == 0.0:
            return self.expectation(), None
        winv = matcx.inverse(w, context="h_transform")
        g = self.cauchy(winv, strict=strict, start=start)
        return self._h_from_cauchy(winv, g), g

    def _h_from_cauchy(self, winv, g):
        return winv - matcx.inverse(g, context="h_transform")

    def h_transform(self, w, strict=True):
        return self.h_and_cauchy(w, strict=strict)[0]

    def eta_transform(self, b, strict=True):
        b = matcx.as_matrix(b, self.dim, context="eta_transform")
        return b @ self.h_transform(b, strict=strict)

    def trace_cauchy(self, z, start=None):
        """Normalised trace of G(z I) for a complex scalar z"""
        g = self.cauchy(z * matcx.identity(self.dim), start=start)
        return np.trace(g) / self.dim, g

    def expectation(self):
        raise NotImplementedError()

    def describe(self):
        raise NotImplementedError()


class DiscreteModel(OperatorModel):
    """
    x = M_i with probability p_i.  atoms is an iterable of
    (weight, matrix) pairs.
    """

    kind = "discrete"
    ## set when the model was built from a scalar distribution
    support = None
    scalar_weights = None
    exponents = None

    def __init__(self, atoms):
        atoms = list(atoms)
        if not atoms:
            raise error.InvalidModel("DiscreteModel", "no atoms given")
        weights = np.array([float(p) for p, m in atoms])
        matrices = [
            matcx.as_matrix(np.atleast_2d(m), context="atom %i" % i)
            for i, (p, m) in enumerate(atoms)
        ]
        dim = matrices[0].shape[0]
        for i, m in enumerate(matrices):
            if m.shape[0] != dim:
                raise error.DimensionError(
                    "atom %i" % i, "dimension %i, expected %i" % (m.shape[0], dim)
                )
            _check_hermitian(m, "atom %i" % i)
        if np.any(weights <= 0):
            raise error.InvalidModel("weights", "weights must be strictly positive")
        if abs(weights.sum() - 1.0) > WEIGHT_ATOL:
            raise error.InvalidModel("weights", "weights sum %g" % weights.sum())
        self.dim = dim
        self.weights = weights
        self.weights.flags.writeable = False
        self.matrices = _frozen(np.stack(matrices))

    @classmethod
    def point_mass(cls, value, dim=1):
        """The constant random variable value * I (or a given matrix)"""
        if np.isscalar(value):
            value = value * np.eye(dim)
        return cls([(1.0, value)])

    @classmethod
    def from_scalar_blocks(cls, support, weights, exponents):
        """
        Matrix model built from a scalar distribution: entry (i, j) of
        the atom belonging to t is t**exponents[i][j], or 0 where the
        exponent is None.  Symmetric exponent tables give Hermitian atoms.
        """
        support = [float(t) for t in support]
        weights = [float(p) for p in weights]
        if len(support) != len(weights):
            raise error.InvalidModel(
                "scalar", "%i support points but %i weights" % (len(support), len(weights))
            )
        dim = len(exponents)
        for row in exponents:
            if len(row) != dim:
                raise error.DimensionError("exponents", "exponent table must be square")
        atoms = []
        for t, p in zip(support, weights):
            m = np.zeros((dim, dim))
            for i in range(dim):
                for j in range(dim):
                    if exponents[i][j] is not None:
                        m[i, j] = t ** exponents[i][j]
            atoms.append((p, m))
        model = cls(atoms)
        model.support = tuple(support)
        model.scalar_weights = tuple(weights)
        model.exponents = tuple(tuple(row) for row in exponents)
        return model

    def _resolvent_sum(self, b, context):
        stack = matcx.inverse_stack(b[None, :, :] - self.matrices, context=context)
        return np.einsum("k,kij->ij", self.weights, stack)

    def _upper_cauchy(self, b, start=None):
        return self._resolvent_sum(b, "cauchy")

    def _off_plane_cauchy(self, b, start=None):
        ## the resolvent sum needs no half-plane, only invertibility
        return self._resolvent_sum(b, "cauchy (off half-plane)")

    def expectation(self):
        return np.einsum("k,kij->ij", self.weights, self.matrices)

    def atom_min_eigenvalues(self):
        return np.array([matcx.min_eigenvalue(m) for m in self.matrices])

    def describe(self):
        if self.support is not None:
            return "discrete(n=%i, scalar support of %i points)" % (self.dim, len(self.support))
        return "discrete(n=%i, %i atoms)" % (self.dim, len(self.weights))


class CovarianceMap(object):
    """
    The completely positive map b -> sum_k A_k b A_k for a family of
    Hermitian A_k.  An empty family needs an explicit dim.
    """

    def __init__(self, family, dim=None):
        family = [matcx.as_matrix(a, context="family[%i]" % k) for k, a in enumerate(family)]
        if family:
            if dim is None:
                dim = family[0].shape[0]
            for k, a in enumerate(family):
                if a.shape[0] != dim:
                    raise error.DimensionError(
                        "family[%i]" % k, "dimension %i, expected %i" % (a.shape[0], dim)
                    )
                _check_hermitian(a, "family[%i]" % k)
            self.family = _frozen(np.stack(family))
        else:
            if dim is None:
                raise error.DimensionError("CovarianceMap", "empty family needs a dim")
            self.family = _frozen(np.zeros((0, dim, dim)))
        self.dim = dim

    def __len__(self):
        return self.family.shape[0]

    def __repr__(self):
        return "CovarianceMap(dim=%i, terms=%i)" % (self.dim, len(self))

    def apply(self, b):
        if len(self) == 0:
            return np.zeros((self.dim, self.dim), dtype=complex)
        return np.einsum("kij,jl,klm->im", self.family, b, self.family)

    def square_sum(self):
        return np.einsum("kij,kjl->il", self.family, self.family)

    def norm_bound(self):
        """
        Upper bound 2 ||sum_k A_k^2||^(1/2) for the norm of the centred
        semicircular element sum_k A_k (x) s_k
        """
        if len(self) == 0:
            return 0.0
        top = matcx.hermitian_eigen(self.square_sum()).eigenvalues[-1]
        return 2.0 * float(np.sqrt(max(top, 0.0)))


class SemicircularModel(OperatorModel):
    """
    Shifted operator-valued semicircular element.  The Cauchy transform
    of the centred part is the fixed point of

        W -> (-i v + cov(W))^-1,   G0(v) = -i W,

    and the shift is absorbed by G(b) = G0(b - shift I).
    """

    kind = "semicircular"

    def __init__(self, covariance, shift=0.0, tol=HRS_TOL, max_iter=HRS_MAX_ITER, polish=True):
        if not isinstance(covariance, CovarianceMap):
            covariance = CovarianceMap(covariance)
        self.covariance = covariance
        self.dim = covariance.dim
        self.shift = float(shift)
        self.tol = tol
        self.max_iter = max_iter
        self.polish = polish

    def expectation(self):
        return self.shift * matcx.identity(self.dim)

    def positivity_margin(self):
        """shift minus the norm bound of the centred part"""
        return self.shift - self.covariance.norm_bound()

    def describe(self):
        return "semicircular(n=%i, %i terms, shift %g)" % (
            self.dim,
            len(self.covariance),
            self.shift,
        )

    ## h(w) = shift + cov(G(w^-1)) avoids the cancellation in w^-1 - F(w^-1)
    def _h_from_cauchy(self, winv, g):
        return self.shift * matcx.identity(self.dim) + self.covariance.apply(g)

    def _residual(self, v):
        cov = self.covariance
        eye = matcx.identity(self.dim)
        return lambda g: (v - cov.apply(g)) @ g - eye

    def _jacobian(self, v):
        cov = self.covariance
        dim = self.dim

        def jacobian(g):
            a = v - cov.apply(g)
            return solvers.linear_jacobian(lambda h: a @ h - cov.apply(h) @ g, dim)

        return jacobian

    def _polish(self, v, g, tol, admissible=True):
        return solvers.newton_polish(
            self._residual(v),
            self._jacobian(v),
            g,
            tol,
            admissible=(lambda c: matcx.half_plane(c) < 0) if admissible else None,
            context="semicircular_cauchy",
        )

    def _upper_cauchy(self, b, start=None):
        return semicircular_cauchy(self, b, self.tol, self.max_iter, start=start, polish=self.polish)

    def _off_plane_cauchy(self, b, start=None):
        """
        G(b) for b in neither half-plane, by Newton continuation along a
        path on which b - x stays invertible.  With lift such that
        x + lift >= 0, the path rotates b + lift by a scalar phase out of
        a half-plane when the numerical range of b + lift allows it, and
        otherwise comes in along b + r I from large real r.
        """
        eye = matcx.identity(self.dim)
        v = b - self.shift * eye
        if len(self.covariance) == 0:
            return matcx.inverse(v, context="cauchy (off half-plane)")
        residual_tol = self.tol * max(1.0, matcx.norm(v))
        if start is not None:
            outcome = self._polish(v, start, residual_tol, admissible=False)
            if outcome.converged and matcx.norm(outcome.point - start) <= WARM_RADIUS * max(
                1.0, matcx.norm(start)
            ):
                return outcome.point
        lift = max(0.0, -self.positivity_margin())
        moved = b + lift * eye
        phi = rotation_angle(moved)
        if phi is not None:
            d = np.exp(-1j * phi) * moved
            g = self._reflect(d - lift * eye, True, None, "cauchy (off half-plane)")
            path = lambda s: np.exp(1j * s * phi) * d - (lift + self.shift) * eye
        else:
            radius = matcx.norm(v) + 2.0 * self.covariance.norm_bound() + 1.0
            g = self._far_cauchy(v + radius * eye)
            path = lambda s: v + (1.0 - s) * radius * eye
        s, ds = 0.0, 0.125
        while s < 1.0:
            s_next = min(1.0, s + ds)
            outcome = self._polish(path(s_next), g, residual_tol, admissible=False)
            if outcome.converged:
                g, s = outcome.point, s_next
                ds = min(2 * ds, 0.25)
            else:
                ds /= 2
                if ds < 1e-6:
                    raise error.DomainEscape(
                        "cauchy (off half-plane)",
                        "continuation stalled at s=%g" % s,
                        matrix=b,
                    )
        log.debug("semicircular continuation (%s) done" % ("rotation" if phi is not None else "real shift"))
        return g

    def _far_cauchy(self, v):
        """
        G0(v) for v with smallest singular value above twice the norm
        bound, where g -> (v - cov(g))^-1 contracts
        """
        g = matcx.inverse(v, context="cauchy (off half-plane)")
        for k in range(self.max_iter):
            g_next = matcx.inverse(v - self.covariance.apply(g), context="cauchy (off half-plane)")
            step = matcx.norm(g_next - g)
            g = g_next
            if step <= self.tol * max(1.0, matcx.norm(g)):
                return g
        raise error.NoConvergence(
            "cauchy (off half-plane)",
            "iteration far from the spectrum did not settle",
            iterations=self.max_iter,
            residual=step,
        )


def rotation_angle(u):
    """
    An angle phi with exp(-i phi) u in the lower half-plane and phi in
    [-pi, 0], or in the upper half-plane and phi in [0, pi]; the one of
    smaller modulus when both exist.  Rotating u by exp(i theta) for
    theta between 0 and phi then keeps u - x invertible for every x >= 0.
    Returns None when the numerical range of u does not allow it.
    """
    points = matcx.numerical_range_boundary(u, ROTATION_SAMPLES)
    if np.min(np.abs(points)) <= matcx.PIVOT_THRESHOLD * max(1.0, matcx.norm(u)):
        return None
    angles = np.sort(np.angle(points))
    gaps = np.diff(np.append(angles, angles[0] + 2 * np.pi))
    j = int(np.argmax(gaps))
    if gaps[j] <= np.pi:
        return None
    ## the numerical range lies in the cone [low, high] of opening below pi
    low = angles[(j + 1) % len(angles)]
    high = angles[j]
    if high < low:
        high += 2 * np.pi
    candidates = []
    for k in (-1, 0, 1):
        shift = 2 * np.pi * k
        for side, start, stop, first, last in (
            (-1, high + shift, low + np.pi + shift, -np.pi, 0.0),
            (1, high - np.pi + shift, low + shift, 0.0, np.pi),
        ):
            a, z = max(start, first), min(stop, last)
            if a < z:
                candidates.append((abs(0.5 * (a + z)), 0.5 * (a + z), side))
    for _, phi, side in sorted(candidates):
        if matcx.half_plane(np.exp(-1j * phi) * u) == side:
            return float(phi)
    return None


def _hrs(model, v, tol, max_iter, start, polish):
    """
    The fixed-point iteration for the centred part at v with Im v > 0.
    Returns G0(v).
    """
    cov = model.covariance
    dim = model.dim
    if len(cov) == 0:
        return matcx.inverse(v, context="semicircular_cauchy")
    if start is not None and matcx.half_plane(start) < 0:
        w = 1j * start
    else:
        w = 1j * matcx.identity(dim)
    residual_tol = tol * max(1.0, matcx.norm(v))
    step = None
    for k in range(1, max_iter + 1):
        w_next = matcx.inverse(-1j * v + cov.apply(w), context="semicircular_cauchy")
        step = matcx.norm(w_next - w)
        w = w_next
        if step <= tol * max(1.0, matcx.norm(w)):
            g = -1j * w
            if polish and matcx.norm(model._residual(v)(g)) > residual_tol:
                outcome = model._polish(v, g, residual_tol)
                if outcome.converged:
                    g = outcome.point
            log.debug("semicircular_cauchy: converged after %i iterations" % k)
            return g
        if polish and (step <= POLISH_THRESHOLD or k % POLISH_AFTER == 0):
            outcome = model._polish(v, -1j * w, residual_tol)
            if outcome.converged:
                log.debug("semicircular_cauchy: polished after %i iterations" % k)
                return outcome.point
    raise error.NoConvergence(
        "semicircular_cauchy",
        "fixed point iteration did not settle",
        iterations=max_iter,
        residual=step,
    )


def semicircular_cauchy(model, b, tol=HRS_TOL, max_iter=HRS_MAX_ITER, start=None, polish=True):
    """
    Cauchy transform G(b) of a shifted semicircular model, Im b > 0.

    The plain iteration starts from W0 = i I (or from i * start when a
    guess with Im start < 0 is given) and stops on the relative step
    rule.  With polish, Newton's method on (v - cov(G)) G - I = 0 takes
    over once the iteration has settled, which keeps the residual at
    tol * max(1, ||v||) even close to the real axis.
    """
    b = matcx.as_matrix(b, model.dim, context="semicircular_cauchy")
    v = b - model.shift * matcx.identity(model.dim)
    if matcx.half_plane(v) <= 0:
        raise error.DomainEscape(
            "semicircular_cauchy", "Im b must be strictly positive", matrix=b
        )
    g = _hrs(model, v, tol, max_iter, start, polish)
    residual = matcx.norm(model._residual(v)(g))
    scale = max(1.0, matcx.norm(v))
    if residual > max(10 * tol, RESIDUAL_LIMIT) * scale:
        raise error.NoConvergence(
            "semicircular_cauchy",
            "functional equation residual %.3g above %.3g" % (residual, max(10 * tol, RESIDUAL_LIMIT) * scale),
            residual=residual,
        )
    if residual > 10 * tol * scale:
        log.warning(
            "semicircular_cauchy: functional equation residual %.3g above %.3g"
            % (residual, 10 * tol)
        )
    return g


## module level spellings of the transform family


def cauchy(model, b, strict=True):
    return model.cauchy(b, strict=strict)


def reciprocal_cauchy(model, b):
    return model.reciprocal_cauchy(b)


def h_transform(model, w):
    return model.h_transform(w)


def eta_transform(model, b):
    return model.eta_transform(b)


def expectation(model):
    return model.expectation()


class ValidationReport(object):
    """Errors and warnings found by validate_pair"""

    def __init__(self):
        self.errors = []
        self.warnings = []

    @property
    def ok(self):
        return not self.errors

    def __repr__(self):
        return "ValidationReport(errors=%r, warnings=%r)" % (self.errors, self.warnings)

    def raise_for_errors(self, context="validate_pair"):
        if self.errors:
            raise error.InvalidPair(context, report=self)


def _singular(m):
    try:
        matcx.inverse(m)
    except error.SingularMatrix:
        return True
    return False


def validate_pair(x, y):
    """
    Checks the hypotheses of the product iteration for (x, y): x must be
    positive, y self-adjoint (guaranteed by construction).  Invertibility
    of x and of the expectations is only a warning, since it is not
    needed over a finite-dimensional B.
    """
    report = ValidationReport()
    if x.dim != y.dim:
        report.errors.append("dimension mismatch: x is %i, y is %i" % (x.dim, y.dim))
        return report
    finite_dim_note = "finite-dimensional B does not need invertibility"
    if x.kind == "discrete":
        for i, lowest in enumerate(x.atom_min_eigenvalues()):
            scale = max(1.0, matcx.norm(x.matrices[i]))
            if lowest < -HERMITIAN_ATOL * scale:
                report.errors.append(
                    "x not positive: atom %i has eigenvalue %g" % (i, lowest)
                )
            elif lowest <= HERMITIAN_ATOL * scale:
                report.warnings.append(
                    "x has a zero eigenvalue in atom %i; %s" % (i, finite_dim_note)
                )
    elif x.kind == "semicircular":
        margin = x.positivity_margin()
        if margin < -HERMITIAN_ATOL:
            report.errors.append(
                "x must be strictly positive: shift %g is below the norm bound %g"
                % (x.shift, x.covariance.norm_bound())
            )
        elif margin <= HERMITIAN_ATOL:
            report.warnings.append(
                "x is only known to be nonnegative (shift equals the norm bound %g); %s"
                % (x.covariance.norm_bound(), finite_dim_note)
            )
    else:
        report.errors.append("unsupported model for x: %r" % (x,))
    if _singular(x.expectation()):
        report.warnings.append("E[x] is singular; %s" % finite_dim_note)
    if _singular(y.expectation()):
        report.warnings.append("E[y] is singular; %s" % finite_dim_note)
    for message in report.warnings:
        log.warning("validate_pair: %s" % message)
    return report
