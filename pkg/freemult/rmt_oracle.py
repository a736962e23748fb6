#!/usr/bin/env python
# -*- encoding: utf-8 -*-
"""
Random matrix ground truth for a model pair.

Every model is realised as an nN x nN Hermitian matrix: semicircular
models as sum_k A_k (x) W_k + shift with independent Wigner matrices
W_k, discrete models as n x n blocks of N x N diagonal matrices.  The
spectrum of sqrt(X) Y sqrt(X) then approximates the distribution of xy.

Each trial draws from its own generator, seeded with seed ^ trial, so
results do not depend on the order (or the process) trials run in.
"""
import csv
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg
from freemult.lib import error
from freemult.lib import matcx
from freemult.lib.python_utilities import decimal_str
from freemult.models import DiscreteModel
from freemult.models import OperatorModel
from freemult.models import SemicircularModel
from scipy.integrate import cumulative_trapezoid

log = logging.getLogger("freemult")


@dataclass(frozen=True)
class SimulationSpec:
    x_model: OperatorModel
    y_model: OperatorModel
    matrix_size: int = 500
    trials: int = 100
    seed: int = 0
    bins: int = 200
    ## k > 1 drops the (1 - 1/k) n N eigenvalues closest to zero per trial
    unwrap_k: int = 1
    ## eigenvalues of X down to -psd_tolerance are clipped to zero
    psd_tolerance: float = 1e-8
    ## None: conjugate x by a Haar unitary iff both models are discrete
    haar_conjugate: Optional[bool] = None
    workers: Optional[int] = None

    def __post_init__(self):
        if self.matrix_size < 2:
            raise error.InvalidModel("simulation.size", "matrix size must be at least 2")
        if self.trials < 1:
            raise error.InvalidModel("simulation.trials", "need at least one trial")
        if self.bins < 10:
            raise error.InvalidModel("simulation.bins", "need at least 10 bins")
        if self.unwrap_k < 1:
            raise error.InvalidModel("simulation.unwrap_k", "unwrap_k must be positive")
        if self.seed < 0:
            raise error.InvalidModel("simulation.seed", "seed must be nonnegative")

    def conjugate_x(self):
        if self.haar_conjugate is not None:
            return self.haar_conjugate
        return self.x_model.kind == "discrete" and self.y_model.kind == "discrete"


@dataclass
class EmpiricalSpectrum:
    eigenvalues: np.ndarray
    edges: np.ndarray
    heights: np.ndarray
    trials: int = 0
    matrix_size: int = 0

    def histogram_mass(self):
        return float(np.sum(self.heights * np.diff(self.edges)))


def trial_rng(seed, trial):
    return np.random.default_rng(seed ^ trial)


def standard_normals(rng, size):
    """
    Standard normal samples by the polar method, drawn from the given
    generator's uniforms in batches.
    """
    out = np.empty(0)
    while out.size < size:
        need = size - out.size
        batch = max(16, int(need * 0.7) + 16)
        u = rng.uniform(-1.0, 1.0, batch)
        v = rng.uniform(-1.0, 1.0, batch)
        s = u * u + v * v
        keep = (s > 0) & (s < 1)
        u, v, s = u[keep], v[keep], s[keep]
        factor = np.sqrt(-2.0 * np.log(s) / s)
        out = np.concatenate([out, u * factor, v * factor])
    return out[:size]


def sample_wigner(N, rng):
    """
    Hermitian N x N Wigner matrix, complex off-diagonal entries of
    variance 1/N, real diagonal of variance 1/N.
    """
    if N < 2:
        raise error.InvalidModel("sample_wigner", "N must be at least 2")
    a = standard_normals(rng, N * N).reshape(N, N)
    b = standard_normals(rng, N * N).reshape(N, N)
    upper = np.triu((a + 1j * b) / np.sqrt(2 * N), 1)
    diagonal = standard_normals(rng, N) / np.sqrt(N)
    return upper + upper.conj().T + np.diag(diagonal).astype(complex)


def sample_haar_unitary(N, rng):
    """Haar unitary from the QR decomposition of a Ginibre matrix"""
    a = standard_normals(rng, N * N).reshape(N, N)
    b = standard_normals(rng, N * N).reshape(N, N)
    q, r = scipy.linalg.qr((a + 1j * b) / np.sqrt(2))
    d = np.diag(r)
    return q * (d / np.abs(d))


def proportional_fill(weights, N):
    """
    Atom index for each of N slots: floor(p_i N) copies of atom i, the
    remainder going to the largest weights.
    """
    weights = np.asarray(weights, dtype=float)
    counts = np.floor(weights * N).astype(int)
    remainder = N - int(counts.sum())
    order = np.argsort(-weights, kind="stable")
    counts[order[:remainder]] += 1
    return np.repeat(np.arange(len(weights)), counts)


def realize_model(model, N, rng, haar_conjugate=False):
    """
    nN x nN Hermitian realisation of model.  Discrete models use the
    deterministic proportional fill; haar_conjugate rotates the result by
    I_n (x) U with a Haar unitary U.
    """
    n = model.dim
    if isinstance(model, DiscreteModel):
        blocks = model.matrices[proportional_fill(model.weights, N)]
        x = np.zeros((n, N, n, N), dtype=complex)
        slots = np.arange(N)
        x[:, slots, :, slots] = blocks
        x = x.reshape(n * N, n * N)
        if haar_conjugate:
            k = np.kron(np.eye(n), sample_haar_unitary(N, rng))
            x = k @ x @ k.conj().T
            x = (x + x.conj().T) / 2
        return x
    if isinstance(model, SemicircularModel):
        x = model.shift * np.eye(n * N, dtype=complex)
        for a in model.covariance.family:
            x = x + np.kron(a, sample_wigner(N, rng))
        return x
    raise error.UnsupportedModel("realize_model", "cannot realise %r" % (model,))


def _drop_kernel(eigenvalues, k):
    drop = int(round((1 - 1.0 / k) * len(eigenvalues)))
    order = np.argsort(np.abs(eigenvalues), kind="stable")
    return np.sort(eigenvalues[order[drop:]])


def _trial(args):
    spec, trial = args
    rng = trial_rng(spec.seed, trial)
    x = realize_model(spec.x_model, spec.matrix_size, rng, spec.conjugate_x())
    y = realize_model(spec.y_model, spec.matrix_size, rng)
    root, lowest = matcx.sqrtm_psd(x, tolerance=spec.psd_tolerance)
    if root is None:
        raise error.NonPositiveRealization("product_spectrum", min_eigenvalue=lowest, trial=trial)
    if lowest < 0:
        log.debug("trial %i: clipped eigenvalues of X down to %g" % (trial, lowest))
    product = root @ y @ root
    eigenvalues = matcx.hermitian_eigen(matcx.real_part(product)).eigenvalues
    if spec.unwrap_k > 1:
        eigenvalues = _drop_kernel(eigenvalues, spec.unwrap_k)
    return eigenvalues


def _histogram(eigenvalues, bins):
    """
    Density histogram whose outermost bins are centred on the extreme
    eigenvalues, so point masses at the ends are not split over an edge.
    """
    lo, hi = float(eigenvalues.min()), float(eigenvalues.max())
    if hi > lo:
        pad = 0.5 * (hi - lo) / (bins - 1)
    else:
        pad = 0.5
    heights, edges = np.histogram(eigenvalues, bins=bins, range=(lo - pad, hi + pad), density=True)
    return heights, edges


def product_spectrum(spec):
    """
    Eigenvalues of sqrt(X) Y sqrt(X) over spec.trials realisations and
    their density histogram.
    """
    jobs = [(spec, trial) for trial in range(spec.trials)]
    if spec.workers and spec.workers > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            per_trial = list(pool.map(_trial, jobs))
    else:
        per_trial = [_trial(job) for job in jobs]
    eigenvalues = np.concatenate(per_trial)
    if eigenvalues.size == 0:
        raise error.EmptyHistogram("product_spectrum", "no eigenvalues left")
    heights, edges = _histogram(eigenvalues, spec.bins)
    log.debug(
        "product_spectrum: %i eigenvalues in [%g, %g]"
        % (eigenvalues.size, eigenvalues.min(), eigenvalues.max())
    )
    return EmpiricalSpectrum(eigenvalues, edges, heights, spec.trials, spec.matrix_size)


def marginal_spectrum(model, N, trials, seed, bins):
    """Eigenvalue histogram of realize_model(model) alone"""
    eigenvalues = np.concatenate(
        [
            matcx.hermitian_eigen(realize_model(model, N, trial_rng(seed, trial))).eigenvalues
            for trial in range(trials)
        ]
    )
    heights, edges = _histogram(eigenvalues, bins)
    return EmpiricalSpectrum(eigenvalues, edges, heights, trials, N)


def _abs_linear_integral(d_left, d_right, width):
    """Exact integral of |d| for d linear on each segment"""
    a, b = np.abs(d_left), np.abs(d_right)
    same_sign = d_left * d_right >= 0
    total = np.where(a + b > 0, a + b, 1.0)
    crossing = (d_left**2 + d_right**2) / (2 * total)
    return np.sum(np.where(same_sign, (a + b) / 2, crossing) * width)


def _l1_pointwise(curve, emp):
    ## f linear between grid points and 0 outside, f_hist constant per bin
    mesh = np.union1d(curve.grid, emp.edges)
    f = np.interp(mesh, curve.grid, curve.values, left=0.0, right=0.0)
    middles = (mesh[:-1] + mesh[1:]) / 2
    bin_index = np.searchsorted(emp.edges, middles, side="right") - 1
    inside = (bin_index >= 0) & (bin_index < emp.heights.size)
    h = np.where(inside, emp.heights[np.clip(bin_index, 0, emp.heights.size - 1)], 0.0)
    return float(_abs_linear_integral(f[:-1] - h, f[1:] - h, np.diff(mesh)))


def _l1_bins(curve, emp):
    cumulative = cumulative_trapezoid(curve.values, curve.grid, initial=0.0)
    at_edges = np.interp(emp.edges, curve.grid, cumulative)
    curve_bins = np.diff(at_edges)
    hist_bins = emp.heights * np.diff(emp.edges)
    outside = cumulative[-1] - (at_edges[-1] - at_edges[0])
    return float(np.sum(np.abs(curve_bins - hist_bins)) + abs(outside))


L1_METHODS = {"pointwise": _l1_pointwise, "bins": _l1_bins}


def l1_distance(curve, emp, method="pointwise"):
    """
    L1 distance between the curve and the histogram.

    Parameters:
     * curve: DensityCurve, linearly interpolated and 0 off its grid
     * emp: EmpiricalSpectrum, piecewise constant on its bins
     * method: "pointwise" integrates |f - f_hist| over the union of the
       grid and the bins.  "bins" compares the curve mass of every bin
       with the bin mass (curve mass outside the bins counts in full);
       it is a lower bound of the pointwise value and the one to use
       when the spectrum has point masses narrower than a bin.

    Returns
     * float in [0, 2] up to quadrature error
    """
    if method not in L1_METHODS:
        raise error.InvalidModel(
            "l1_distance", "unknown method %r, known are %s" % (method, ", ".join(sorted(L1_METHODS)))
        )
    if emp.eigenvalues.size == 0 or not np.any(emp.heights > 0):
        raise error.EmptyHistogram("l1_distance", "histogram holds no mass")
    return L1_METHODS[method](curve, emp)


def write_eigenvalues_csv(emp, path):
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["eigenvalue"])
        for value in emp.eigenvalues:
            writer.writerow([decimal_str(value)])


def write_histogram_csv(emp, path):
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["bin_left", "bin_right", "density"])
        for left, right, height in zip(emp.edges[:-1], emp.edges[1:], emp.heights):
            writer.writerow([decimal_str(left), decimal_str(right), decimal_str(height)])
