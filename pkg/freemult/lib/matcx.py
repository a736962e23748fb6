#!/usr/bin/env python
# -*- encoding: utf-8 -*-
"""
Dense complex matrix helpers for the algebra B = M_n(C).

Matrices are plain numpy arrays of dtype complex128.  Everything in
this module is a pure function of its inputs; nothing is modified in
place unless it is a private copy.

Tolerances are expressed with the Frobenius norm throughout.
"""
import logging
import warnings

import numpy as np
import scipy.linalg
from freemult.lib import error

log = logging.getLogger("freemult")

## pivots smaller than this (relative to the Frobenius norm) count as singular
PIVOT_THRESHOLD = 1e-14
## Hermitian tests are relative to the Frobenius norm as well
HERMITIAN_TOLERANCE = 1e-10
JACOBI_TOLERANCE = 1e-12
JACOBI_MAX_SWEEPS = 100
## above this dimension hermitian_eigen hands over to LAPACK
JACOBI_MAX_DIM = 64


class HermitianDecomposition(object):
    """
    Result of hermitian_eigen: eigenvalues ascending, eigenvectors as the
    columns of a unitary matrix, so that

        h == eigenvectors @ diag(eigenvalues) @ eigenvectors^*
    """

    eigenvalues = None
    eigenvectors = None

    def __init__(self, eigenvalues, eigenvectors):
        self.eigenvalues = eigenvalues
        self.eigenvectors = eigenvectors

    def __iter__(self):
        return iter((self.eigenvalues, self.eigenvectors))

    def __repr__(self):
        return "HermitianDecomposition(dim=%i)" % len(self.eigenvalues)

    def reconstruct(self):
        q = self.eigenvectors
        return (q * self.eigenvalues) @ q.conj().T

    def apply(self, fn):
        """
        Returns fn(h) for a scalar function fn, i.e. Q diag(fn(lambda)) Q^*
        """
        q = self.eigenvectors
        return (q * fn(self.eigenvalues)) @ q.conj().T


def as_matrix(a, dim=None, context="matrix"):
    """
    Converts scalars, nested lists and arrays into a validated square
    complex matrix.  A scalar becomes scalar * I when dim is given.
    """
    if np.isscalar(a):
        if dim is None:
            raise error.DimensionError(context, "scalar given without a dimension")
        return complex(a) * np.eye(dim, dtype=complex)
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise error.DimensionError(context, "expected a square matrix, got shape %s" % (m.shape,))
    if dim is not None and m.shape[0] != dim:
        raise error.DimensionError(
            context, "expected dimension %i, got %i" % (dim, m.shape[0])
        )
    if not np.all(np.isfinite(m)):
        raise error.NonFiniteError(context, "matrix has NaN or infinite entries")
    return m


def identity(dim):
    return np.eye(dim, dtype=complex)


def _check_dims(a, b, context):
    if a.shape != b.shape:
        raise error.DimensionError(
            context, "dimension mismatch %s vs %s" % (a.shape, b.shape)
        )


def mat_add(a, b):
    _check_dims(a, b, "mat_add")
    return a + b


def mat_mul(a, b):
    _check_dims(a, b, "mat_mul")
    return a @ b


def mat_scale(a, s):
    if not np.isscalar(s):
        raise error.DimensionError("mat_scale", "scale factor must be a scalar")
    return complex(s) * a


def adjoint(a):
    return a.conj().T


def imag_part(a):
    """(a - a^*) / 2i, Hermitian by construction"""
    return (a - a.conj().T) / 2j


def real_part(a):
    return (a + a.conj().T) / 2


def norm(a):
    """Frobenius norm"""
    return float(np.linalg.norm(a))


def is_hermitian(h, tolerance=HERMITIAN_TOLERANCE):
    return norm(h - h.conj().T) <= tolerance * norm(h)


def inverse(a, context="inverse"):
    """
    Inverse by LU elimination with partial pivoting.  Raises
    SingularMatrix when a pivot falls below PIVOT_THRESHOLD * ||a||.
    """
    scale = norm(a)
    if scale == 0.0:
        raise error.SingularMatrix(context, "zero matrix", matrix=a)
    with warnings.catch_warnings():
        ## exact zero pivots are reported through our own exception below
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(a, check_finite=False)
    pivots = np.abs(np.diag(lu))
    if pivots.min() < PIVOT_THRESHOLD * scale:
        raise error.SingularMatrix(
            context,
            "pivot %.3g below %.1g * ||a|| = %.3g"
            % (pivots.min(), PIVOT_THRESHOLD, PIVOT_THRESHOLD * scale),
            matrix=a,
        )
    return scipy.linalg.lu_solve((lu, piv), np.eye(a.shape[0], dtype=complex))


def inverse_stack(stack, context="inverse_stack"):
    """
    Batched inverse of a (k, n, n) stack.  Used on the hot path of the
    discrete resolvent sums where one LAPACK call per atom is too slow.
    """
    try:
        inv = np.linalg.inv(stack)
    except np.linalg.LinAlgError as e:
        raise error.SingularMatrix(context, str(e), matrix=stack)
    if not np.all(np.isfinite(inv)):
        raise error.SingularMatrix(context, "non-finite inverse", matrix=stack)
    return inv


def _jacobi(h):
    """
    Cyclic Jacobi for complex Hermitian matrices.  Each rotation first
    removes the phase of a[p, q] and then applies the real symmetric
    rotation, so the combined unitary acting on columns (p, q) is

        [[c, s], [-s e^{-i phi}, c e^{-i phi}]]
    """
    a = np.array(h, dtype=complex)
    n = a.shape[0]
    v = np.eye(n, dtype=complex)
    scale = norm(a)
    if scale == 0.0:
        return np.zeros(n), v
    threshold = JACOBI_TOLERANCE * scale
    for sweep in range(JACOBI_MAX_SWEEPS + 1):
        off = norm(a - np.diag(np.diag(a)))
        if off < threshold:
            break
        if sweep == JACOBI_MAX_SWEEPS:
            raise error.NoConvergence(
                "hermitian_eigen",
                "Jacobi sweeps did not reduce the off-diagonal mass",
                iterations=JACOBI_MAX_SWEEPS,
                residual=off,
            )
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                r = abs(apq)
                if r < 1e-300:
                    continue
                phase = apq / r
                zeta = (a[q, q].real - a[p, p].real) / (2.0 * r)
                if zeta >= 0:
                    t = 1.0 / (zeta + np.sqrt(zeta * zeta + 1.0))
                else:
                    t = -1.0 / (-zeta + np.sqrt(zeta * zeta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                j2 = np.array(
                    [[c, s], [-s * phase.conjugate(), c * phase.conjugate()]]
                )
                idx = [p, q]
                a[:, idx] = a[:, idx] @ j2
                a[idx, :] = j2.conj().T @ a[idx, :]
                v[:, idx] = v[:, idx] @ j2
                a[p, q] = a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real
    log.debug("jacobi: n=%i converged after %i sweeps" % (n, sweep))
    return np.diag(a).real.copy(), v


def hermitian_eigen(h, method="auto"):
    """
    Eigen-decomposition of a Hermitian matrix.

    Parameters:
     * h: Hermitian matrix, ||h - h^*|| <= 1e-10 ||h||
     * method: "jacobi", "lapack" or "auto" (Jacobi up to JACOBI_MAX_DIM)

    Returns
     * HermitianDecomposition with ascending eigenvalues
    """
    if not is_hermitian(h):
        raise error.NotHermitian(
            "hermitian_eigen", "||h - h^*|| = %.3g" % norm(h - h.conj().T)
        )
    if method == "auto":
        method = "jacobi" if h.shape[0] <= JACOBI_MAX_DIM else "lapack"
    if method == "jacobi":
        eigenvalues, eigenvectors = _jacobi(h)
    elif method == "lapack":
        eigenvalues, eigenvectors = scipy.linalg.eigh(real_part(h))
    else:
        raise ValueError("unknown method %s" % method)
    order = np.argsort(eigenvalues, kind="stable")
    return HermitianDecomposition(eigenvalues[order], eigenvectors[:, order])


def min_eigenvalue(h):
    return float(hermitian_eigen(h).eigenvalues[0])


def is_strictly_positive(h, margin=0.0):
    """True iff the smallest eigenvalue of the Hermitian h exceeds margin"""
    return min_eigenvalue(h) > margin


def _cholesky_ok(h):
    try:
        np.linalg.cholesky(h)
    except np.linalg.LinAlgError:
        return False
    return True


def half_plane(a):
    """
    +1 if Im a > 0, -1 if Im a < 0, 0 if neither.  This is the hot-path
    membership test of the iterations; it uses a Cholesky attempt on
    the imaginary part instead of a full eigen-decomposition.
    """
    im = imag_part(a)
    if _cholesky_ok(im):
        return 1
    if _cholesky_ok(-im):
        return -1
    return 0


def sqrtm_psd(h, tolerance=0.0, method="auto"):
    """
    Square root of a positive semidefinite Hermitian matrix.  Eigenvalues
    down to -tolerance are clipped to zero.  Returns (root, lowest
    eigenvalue); root is None when lowest < -tolerance.
    """
    decomposition = hermitian_eigen(h, method=method)
    lowest = float(decomposition.eigenvalues[0])
    if lowest < -tolerance:
        return None, lowest
    return decomposition.apply(lambda lam: np.sqrt(np.clip(lam, 0.0, None))), lowest


def numerical_range_boundary(a, samples=256):
    """
    Points on the boundary of the numerical range {x^* a x : |x| = 1},
    one per direction exp(i theta): x^* a x with x the top eigenvector of
    the Hermitian part of exp(-i theta) a.
    """
    theta = np.linspace(-np.pi, np.pi, samples, endpoint=False)
    rotated = np.exp(-1j * theta)[:, None, None] * a[None, :, :]
    hermitian = (rotated + np.conj(np.swapaxes(rotated, 1, 2))) / 2
    _, vectors = np.linalg.eigh(hermitian)
    top = vectors[:, :, -1]
    return np.einsum("ki,ij,kj->k", top.conj(), a, top)
