#!/usr/bin/env python
# -*- encoding: utf-8 -*-
"""
Spectral densities by Stieltjes inversion at a fixed height epsilon:

    f(t) = -Im tr G((t + i eps) I) / pi

with tr the normalised trace.  At fixed epsilon the curve is the Poisson
smoothing of the spectral measure, which is what unwrap_embedding relies
on when it removes the structural atom at zero.
"""
import csv
import logging
import os
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from dataclasses import field
from dataclasses import replace
from fractions import Fraction
from typing import Optional

import numpy as np
from freemult import subordination
from freemult.lib import error
from freemult.lib.python_utilities import decimal_str
from scipy.integrate import trapezoid

log = logging.getLogger("freemult")

## values below this are counted as clipped, anything above is round-off
CLIP_TOLERANCE = 1e-12
UNWRAP_TOLERANCE = 2e-2
MASS_TOLERANCE = 5e-3


@dataclass(frozen=True)
class GridSpec:
    t_min: float
    t_max: float
    points: int
    epsilon: float = 1e-4

    def __post_init__(self):
        if not self.t_min < self.t_max:
            raise error.InvalidModel(
                "grid", "t_min %g must be below t_max %g" % (self.t_min, self.t_max)
            )
        if self.points < 2:
            raise error.InvalidModel("grid.points", "need at least 2 grid points")
        if not self.epsilon > 0:
            raise error.InvalidModel("grid.epsilon", "epsilon must be positive")

    def grid(self):
        return np.linspace(self.t_min, self.t_max, self.points)


@dataclass
class DensityCurve:
    grid: np.ndarray
    values: np.ndarray
    epsilon: float
    total_mass: float
    atom_at_zero: Optional[float] = None
    moments: tuple = (0.0, 0.0)
    clip_count: int = 0
    ## grid points that failed and were set to 0 (--skip-bad-points)
    skipped: tuple = ()
    iterations: tuple = ()
    unwrap_k: int = 1
    richardson: bool = False

    @property
    def mass_deficit(self):
        return 1.0 - self.total_mass - (self.atom_at_zero or 0.0)

    def iteration_stats(self):
        """(min, median, max) of the per-point iteration counts"""
        if not self.iterations:
            return (0, 0, 0)
        return (
            min(self.iterations),
            statistics.median(self.iterations),
            max(self.iterations),
        )

    def metadata(self):
        m0, m1, m2 = curve_moments(self)
        low, median, high = self.iteration_stats()
        return {
            "epsilon": self.epsilon,
            "points": len(self.grid),
            "t_min": self.grid[0],
            "t_max": self.grid[-1],
            "mass": m0,
            "density_mass": self.total_mass,
            "atom_at_zero": self.atom_at_zero if self.atom_at_zero is not None else "none",
            "mass_deficit": self.mass_deficit,
            "moment1": m1,
            "moment2": m2,
            "clip_count": self.clip_count,
            "skipped_points": len(self.skipped),
            "iterations_min": low,
            "iterations_median": median,
            "iterations_max": high,
            "unwrap_k": self.unwrap_k,
            "richardson": self.richardson,
        }


def _clip(values):
    count = int(np.sum(values < -CLIP_TOLERANCE))
    if count:
        log.warning("density: clipped %i negative values (min %g)" % (count, values.min()))
    return np.clip(values, 0.0, None), count


def _trace_density(g):
    return -np.trace(g).imag / g.shape[0] / np.pi


def _point_failed(t, e, skip_bad_points):
    if not skip_bad_points:
        e.context = "density at t=%g (%s)" % (t, e.context)
        raise e
    log.warning("density: skipping t=%g, %s" % (t, e))


def _cold_point(args):
    x, y, z, cfg = args
    ## density_grid validated the pair before the sweep
    subordination.check_pair(x, y, known_valid=True)
    try:
        g, result = subordination.product_point(x, y, z, cfg)
    except error.FreeMultError as e:
        return None, 0, e
    return _trace_density(g), result.iterations, None


def _sweep(x, y, grid, epsilon, cfg, warm_start, workers, skip_bad_points):
    values = np.zeros(len(grid))
    iterations = []
    skipped = []
    if warm_start:
        previous = None
        for i, t in enumerate(grid):
            point_cfg = cfg if previous is None else replace(cfg, w0=previous)
            try:
                g, result = subordination.product_point(x, y, complex(t, epsilon), point_cfg)
            except error.FreeMultError as e:
                _point_failed(t, e, skip_bad_points)
                skipped.append(float(t))
                previous = None
                continue
            values[i] = _trace_density(g)
            iterations.append(result.iterations)
            previous = result.omega2
    else:
        jobs = [(x, y, complex(t, epsilon), cfg) for t in grid]
        if workers and workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                outcomes = list(pool.map(_cold_point, jobs, chunksize=16))
        else:
            outcomes = [_cold_point(job) for job in jobs]
        for i, (value, count, failure) in enumerate(outcomes):
            if failure is not None:
                _point_failed(grid[i], failure, skip_bad_points)
                skipped.append(float(grid[i]))
                continue
            values[i] = value
            iterations.append(count)
    return values, iterations, skipped


def density_grid(
    x,
    y,
    spec,
    cfg=None,
    warm_start=True,
    workers=None,
    skip_bad_points=False,
    richardson=False,
):
    """
    Density of xy on the grid of spec.

    Parameters:
     * x, y: the model pair; validate_pair must report no errors
     * spec: GridSpec
     * cfg: IterationConfig for the subordination iteration
     * warm_start: seed omega_2 at each point with the previous solution
       (sequential); otherwise every point starts from cfg.w0 and the
       points may be spread over `workers` processes
     * skip_bad_points: failing points become 0 instead of aborting
     * richardson: return 2 f(eps/2) - f(eps)

    Returns
     * DensityCurve, atom_at_zero unset (see unwrap_embedding)
    """
    cfg = cfg or subordination.IterationConfig()
    subordination.check_pair(x, y, "density_grid")
    grid = spec.grid()
    values, iterations, skipped = _sweep(
        x, y, grid, spec.epsilon, cfg, warm_start, workers, skip_bad_points
    )
    if richardson:
        half, more, more_skipped = _sweep(
            x, y, grid, spec.epsilon / 2, cfg, warm_start, workers, skip_bad_points
        )
        values = 2 * half - values
        iterations += more
        skipped = sorted(set(skipped) | set(more_skipped))
    return _finish(grid, values, spec.epsilon, iterations, skipped, richardson=richardson)


def marginal_density(model, spec, skip_bad_points=False):
    """
    Density of a single model, f(t) = -Im tr G((t + i eps) I) / pi.
    Semicircular models are warm started along the grid.
    """
    grid = spec.grid()
    values = np.zeros(len(grid))
    skipped = []
    previous = None
    for i, t in enumerate(grid):
        try:
            _, g = model.trace_cauchy(complex(t, spec.epsilon), start=previous)
        except error.FreeMultError as e:
            _point_failed(t, e, skip_bad_points)
            skipped.append(float(t))
            previous = None
            continue
        values[i] = _trace_density(g)
        previous = g
    return _finish(grid, values, spec.epsilon, (), skipped)


def _finish(grid, values, epsilon, iterations, skipped, richardson=False):
    values, clipped = _clip(values)
    curve = DensityCurve(
        grid=grid,
        values=values,
        epsilon=epsilon,
        total_mass=float(trapezoid(values, grid)),
        clip_count=clipped,
        skipped=tuple(skipped),
        iterations=tuple(iterations),
        richardson=richardson,
    )
    if curve.total_mass > 1 + MASS_TOLERANCE:
        log.warning(
            "density: total mass %.6g exceeds 1 by more than %g; grid too coarse for epsilon?"
            % (curve.total_mass, MASS_TOLERANCE)
        )
    curve.moments = curve_moments(curve)[1:]
    return curve


def poisson_kernel(grid, epsilon, center=0.0):
    """The epsilon-smoothing of a unit point mass at center"""
    return (epsilon / np.pi) / ((grid - center) ** 2 + epsilon**2)


def unwrap_embedding(curve, block_fraction, remove_kernel=False):
    """
    Undo a k x k block embedding with the target in one block: the
    embedded distribution is mu / k + (1 - 1/k) delta_0.

    Parameters:
     * curve: DensityCurve of the embedded problem
     * block_fraction: 1/k, as Fraction, float or int k reciprocal
     * remove_kernel: subtract the epsilon-smoothed structural atom
       before rescaling

    Returns
     * new DensityCurve with values scaled by k and atom_at_zero set
    """
    k = Fraction(block_fraction).limit_denominator(1000)
    if k <= 0 or k.numerator != 1:
        raise error.UnwrapInconsistent("unwrap_embedding", "block fraction must be 1/k, got %s" % k)
    k = k.denominator
    if k == 1:
        return replace(curve)
    values = curve.values
    clipped = curve.clip_count
    if remove_kernel:
        values = values - (1 - 1.0 / k) * poisson_kernel(curve.grid, curve.epsilon)
        values, more = _clip(values)
        clipped += more
    values = k * values
    mass = float(trapezoid(values, curve.grid))
    if mass > 1 + UNWRAP_TOLERANCE:
        raise error.UnwrapInconsistent(
            "unwrap_embedding", "k * mass = %g exceeds 1 for k=%i" % (mass, k)
        )
    unwrapped = replace(
        curve,
        values=values,
        total_mass=mass,
        atom_at_zero=max(0.0, 1.0 - mass),
        clip_count=clipped,
        unwrap_k=k,
    )
    unwrapped.moments = curve_moments(unwrapped)[1:]
    return unwrapped


def curve_moments(curve):
    """(m0, m1, m2) by trapezoid quadrature, atom at zero added to m0"""
    t = curve.grid
    f = curve.values
    m0 = float(trapezoid(f, t)) + (curve.atom_at_zero or 0.0)
    m1 = float(trapezoid(t * f, t))
    m2 = float(trapezoid(t * t * f, t))
    return m0, m1, m2


def _meta_path(path):
    return os.path.splitext(path)[0] + ".meta"


def write_meta(path, entries):
    with open(path, "w", newline="") as f:
        for key, value in entries.items():
            if isinstance(value, float):
                value = decimal_str(value)
            f.write("%s=%s\n" % (key, value))


def read_meta(path):
    entries = {}
    with open(path) as f:
        for line in f:
            line = line.rstrip("\n")
            if line:
                key, value = line.split("=", 1)
                entries[key] = value
    return entries


def csv_export(curve, path, extra_meta=None):
    """
    Writes `t,density` rows with 12 significant digits and a .meta
    sidecar of key=value lines next to it.
    """
    meta = curve.metadata()
    if extra_meta:
        meta.update(extra_meta)
    try:
        with open(path, "w", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(["t", "density"])
            for t, v in zip(curve.grid, curve.values):
                writer.writerow([decimal_str(t), decimal_str(v)])
        write_meta(_meta_path(path), meta)
    except OSError as e:
        raise OSError(e.errno, "cannot write curve to %s: %s" % (path, e.strerror), path)


def read_curve_csv(path):
    """Returns (grid, values) from a file written by csv_export"""
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != ["t", "density"]:
            raise error.ConfigError(path, "not a density curve file, header %r" % (header,))
        rows = [(float(t), float(v)) for t, v in reader]
    grid, values = (np.array(col) for col in zip(*rows)) if rows else (np.array([]), np.array([]))
    return grid, values


def suggest_grid(eigenvalues, points, epsilon=1e-4, margin=0.5, positive=False):
    """
    Grid around a Monte Carlo spectrum, [min - margin, max + margin].
    For products known to be positive the lower end is kept away from the
    structural atom at zero.
    """
    eigenvalues = np.asarray(eigenvalues, dtype=float)
    if eigenvalues.size == 0:
        raise error.EmptyHistogram("suggest_grid", "no eigenvalues to derive a grid from")
    t_min = float(eigenvalues.min()) - margin
    t_max = float(eigenvalues.max()) + margin
    if positive:
        t_min = max(t_min, 0.5 * float(eigenvalues.min()), 100 * epsilon)
    return GridSpec(t_min, t_max, points, epsilon)
