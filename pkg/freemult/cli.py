#!/usr/bin/env python
# -*- encoding: utf-8 -*-
"""
Command line front-end.

    freemult density  <config> [flags]
    freemult simulate <config> [flags]
    freemult compare  <config> [flags]
    freemult marginal <config> [--which x|y] [flags]

<config> is a JSON file or the name of a shipped configuration (see
freemult/configs).  Flags override config fields, config fields
override built-in defaults.  Exit codes: 0 success, 1 numerical
failure (or compare above threshold), 2 configuration error.
"""
import argparse
import hashlib
import json
import logging
import os
import sys
import time
from dataclasses import dataclass
from dataclasses import replace
from fractions import Fraction
from typing import Optional

import numpy as np
from freemult import __version__
from freemult import catalog
from freemult import density
from freemult import plot
from freemult import rmt_oracle
from freemult.lib import error
from freemult.lib import matcx
from freemult.lib.python_utilities import decimal_str
from freemult.lib.python_utilities import to_normal_str
from freemult.models import CovarianceMap
from freemult.models import DiscreteModel
from freemult.models import SemicircularModel
from freemult.models import validate_pair
from freemult.subordination import IterationConfig

log = logging.getLogger("freemult")

CONFIG_DIR = os.path.join(os.path.dirname(__file__), "configs")
PILOT_TRIALS = 5


@dataclass
class RunConfig:
    name: str
    x: object
    y: object
    iteration: IterationConfig
    t_min: Optional[float] = None
    t_max: Optional[float] = None
    points: int = 2000
    epsilon: float = 1e-4
    size: int = 500
    trials: int = 100
    seed: int = 0
    bins: int = 200
    psd_tolerance: float = 1e-8
    unwrap_k: int = 1
    remove_kernel: bool = True
    l1_method: str = "pointwise"
    output_dir: str = "."
    sha256: str = ""

    def grid_spec(self):
        """None when the bounds are left to the Monte Carlo spectrum"""
        if self.t_min is None or self.t_max is None:
            return None
        return density.GridSpec(self.t_min, self.t_max, self.points, self.epsilon)

    def simulation_spec(self, workers=None, trials=None):
        return rmt_oracle.SimulationSpec(
            self.x,
            self.y,
            matrix_size=self.size,
            trials=trials or self.trials,
            seed=self.seed,
            bins=self.bins,
            unwrap_k=self.unwrap_k,
            psd_tolerance=self.psd_tolerance,
            workers=workers,
        )


## config parsing


def _get(obj, key, path, kind=None, default=KeyError):
    if not isinstance(obj, dict):
        raise error.ConfigError(path, "expected an object")
    if key not in obj:
        if default is KeyError:
            raise error.ConfigError("%s.%s" % (path, key) if path else key, "missing field")
        return default
    value = obj[key]
    where = "%s.%s" % (path, key) if path else key
    if kind is not None and value is not None:
        ok = isinstance(value, kind) and not (kind in (int, float, (int, float)) and isinstance(value, bool))
        if not ok:
            raise error.ConfigError(where, "expected %s, got %r" % (getattr(kind, "__name__", kind), value))
    return value


def _number(value, path):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise error.ConfigError(path, "expected a number, got %r" % (value,))
    return float(value)


def _entry(value, path):
    if isinstance(value, str):
        try:
            return complex(value.replace(" ", ""))
        except ValueError:
            raise error.ConfigError(path, "not a complex number: %r" % value)
    return complex(_number(value, path))


def _matrix(value, path):
    if not isinstance(value, list) or not value or not all(isinstance(row, list) for row in value):
        raise error.ConfigError(path, "expected a square matrix as a list of rows")
    rows = [[_entry(v, "%s[%i][%i]" % (path, i, j)) for j, v in enumerate(row)] for i, row in enumerate(value)]
    if any(len(row) != len(rows) for row in rows):
        raise error.ConfigError(path, "matrix is not square")
    return np.array(rows)


def _model_error(path, e):
    where = path if not e.context else "%s.%s" % (path, e.context)
    return error.ConfigError(where, e.reason)


def _semicircular(spec, path):
    shift = _number(_get(spec, "shift", path, default=0.0), path + ".shift")
    try:
        if "catalog" in spec:
            covariance = catalog.covariance(_get(spec, "catalog", path, str))
        else:
            family = _get(spec, "family", path, list)
            matrices = [_matrix(a, "%s.family[%i]" % (path, k)) for k, a in enumerate(family)]
            dim = _get(spec, "dim", path, int, default=None)
            covariance = CovarianceMap(matrices, dim=dim)
        return SemicircularModel(covariance, shift=shift)
    except (error.InvalidModel, error.DimensionError, error.NonFiniteError) as e:
        raise _model_error(path, e)


def _discrete(spec, path):
    atoms = _get(spec, "atoms", path, list)
    pairs = []
    for i, atom in enumerate(atoms):
        where = "%s.atoms[%i]" % (path, i)
        weight = _number(_get(atom, "weight", where), where + ".weight")
        pairs.append((weight, _matrix(_get(atom, "matrix", where), where + ".matrix")))
    try:
        return DiscreteModel(pairs)
    except (error.InvalidModel, error.DimensionError, error.NonFiniteError) as e:
        raise _model_error(path, e)


def _scalar_blocks(spec, path):
    scalar = _get(spec, "scalar", path, dict)
    where = path + ".scalar"
    support = [_number(t, "%s.support[%i]" % (where, i)) for i, t in enumerate(_get(scalar, "support", where, list))]
    weights = _get(scalar, "weights", where, list, default=None)
    if weights is None:
        weights = [1.0 / len(support)] * len(support)
    weights = [_number(p, "%s.weights[%i]" % (where, i)) for i, p in enumerate(weights)]
    exponents = _get(spec, "exponents", path, list)
    for i, row in enumerate(exponents):
        if not isinstance(row, list):
            raise error.ConfigError("%s.exponents[%i]" % (path, i), "expected a list")
        for j, e in enumerate(row):
            if e is not None and (isinstance(e, bool) or not isinstance(e, int) or e < 0):
                raise error.ConfigError(
                    "%s.exponents[%i][%i]" % (path, i, j), "exponent must be a nonnegative integer or null"
                )
    try:
        return DiscreteModel.from_scalar_blocks(support, weights, exponents)
    except (error.InvalidModel, error.DimensionError, error.NonFiniteError) as e:
        raise _model_error(where, e)


def parse_model(spec, path):
    if not isinstance(spec, dict):
        raise error.ConfigError(path, "expected a model object")
    if "semicircular" in spec:
        return _semicircular(_get(spec, "semicircular", path, dict), path + ".semicircular")
    if "discrete" in spec:
        return _discrete(_get(spec, "discrete", path, dict), path + ".discrete")
    if "scalar" in spec:
        return _scalar_blocks(spec, path)
    raise error.ConfigError(path, "model needs one of semicircular, discrete, scalar")


def parse_config(text, name="config"):
    """
    Parses and validates a JSON run configuration.  Syntax errors carry
    line and column, semantic errors the dotted path of the field.
    """
    text = to_normal_str(text)
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise error.ConfigError(name, e.msg, line=e.lineno, column=e.colno)
    if not isinstance(data, dict):
        raise error.ConfigError(name, "top level must be an object")
    x = parse_model(_get(data, "x", ""), "x")
    y = parse_model(_get(data, "y", ""), "y")

    grid = _get(data, "grid", "", dict, default={})
    it = _get(data, "iteration", "", dict, default={})
    sim = _get(data, "simulation", "", dict, default={})
    try:
        iteration = IterationConfig(
            tol=_number(_get(it, "tol", "iteration", default=1e-12), "iteration.tol"),
            max_iter=_get(it, "max_iter", "iteration", int, default=10000),
            damping=_number(_get(it, "damping", "iteration", default=1.0), "iteration.damping"),
            newton_polish=_get(it, "newton_polish", "iteration", bool, default=False),
        )
    except error.FreeMultError as e:
        raise error.ConfigError(e.context, e.reason)
    run = RunConfig(
        name=_get(data, "name", "", str, default=name),
        x=x,
        y=y,
        iteration=iteration,
        t_min=_get(grid, "t_min", "grid", (int, float), default=None),
        t_max=_get(grid, "t_max", "grid", (int, float), default=None),
        points=_get(grid, "points", "grid", int, default=2000),
        epsilon=_number(_get(grid, "epsilon", "grid", default=1e-4), "grid.epsilon"),
        size=_get(sim, "size", "simulation", int, default=500),
        trials=_get(sim, "trials", "simulation", int, default=100),
        seed=_get(sim, "seed", "simulation", int, default=0),
        bins=_get(sim, "bins", "simulation", int, default=200),
        psd_tolerance=_number(_get(sim, "psd_tolerance", "simulation", default=1e-8), "simulation.psd_tolerance"),
        unwrap_k=_get(data, "unwrap_k", "", int, default=1),
        remove_kernel=_get(data, "remove_kernel", "", bool, default=True),
        l1_method=_get(data, "l1_method", "", str, default="pointwise"),
        output_dir=_get(data, "output_dir", "", str, default="."),
        sha256=hashlib.sha256(text.encode("utf-8")).hexdigest(),
    )
    check_run(run)
    return run


def check_run(run):
    report = validate_pair(run.x, run.y)
    if not report.ok:
        raise error.ConfigError("x", "; ".join(report.errors))
    try:
        run.grid_spec()
        run.simulation_spec()
    except error.FreeMultError as e:
        raise error.ConfigError(e.context, e.reason)
    if run.unwrap_k < 1:
        raise error.ConfigError("unwrap_k", "unwrap_k must be a positive integer")
    if run.l1_method not in rmt_oracle.L1_METHODS:
        raise error.ConfigError(
            "l1_method", "unknown l1_method %r, known are %s" % (run.l1_method, ", ".join(sorted(rmt_oracle.L1_METHODS)))
        )


def load_config(name_or_path):
    path = name_or_path
    if not os.path.exists(path):
        path = os.path.join(CONFIG_DIR, name_or_path + ".json")
    try:
        with open(path, "rb") as f:
            text = f.read()
    except OSError:
        raise error.ConfigError(name_or_path, "no such config file or shipped config")
    name = os.path.splitext(os.path.basename(path))[0]
    return parse_config(text, name=name)


def shipped_configs():
    return sorted(os.path.splitext(f)[0] for f in os.listdir(CONFIG_DIR) if f.endswith(".json"))


## flags


def _grid_flag(text):
    try:
        low, high, points = text.split(":")
        return float(low), float(high), int(points)
    except ValueError:
        raise argparse.ArgumentTypeError("expected <min>:<max>:<points>, got %r" % text)


def apply_flags(run, args):
    """flag > config > default"""
    changes = {}
    if args.grid is not None:
        changes["t_min"], changes["t_max"], changes["points"] = args.grid
    for flag, fieldname in (
        ("grid_points", "points"),
        ("epsilon", "epsilon"),
        ("trials", "trials"),
        ("size", "size"),
        ("seed", "seed"),
        ("bins", "bins"),
        ("unwrap_k", "unwrap_k"),
        ("output_dir", "output_dir"),
        ("psd_tolerance", "psd_tolerance"),
        ("l1_method", "l1_method"),
    ):
        value = getattr(args, flag, None)
        if value is not None:
            changes[fieldname] = value
    iteration = {}
    for flag, fieldname in (("tol", "tol"), ("max_iter", "max_iter"), ("damping", "damping")):
        value = getattr(args, flag, None)
        if value is not None:
            iteration[fieldname] = value
    if getattr(args, "polish", False):
        iteration["newton_polish"] = True
    try:
        if iteration:
            changes["iteration"] = replace(run.iteration, **iteration)
        run = replace(run, **changes)
    except error.FreeMultError as e:
        raise error.ConfigError(e.context, e.reason)
    check_run(run)
    return run


## commands


def _output(run, suffix):
    os.makedirs(run.output_dir, exist_ok=True)
    return os.path.join(run.output_dir, "%s_%s" % (run.name, suffix))


def _base_meta(run, command):
    return {
        "version": __version__,
        "command": command,
        "config_sha256": run.sha256,
        "epsilon": run.epsilon,
        "tol": run.iteration.tol,
        "max_iter": run.iteration.max_iter,
        "damping": run.iteration.damping,
        "newton_polish": run.iteration.newton_polish,
        "x": run.x.describe(),
        "y": run.y.describe(),
    }


def _auto_grid(run, args, spectrum=None):
    spec = run.grid_spec()
    if spec is not None:
        return spec
    if spectrum is None:
        log.warning("no grid bounds configured, running a pilot simulation of %i trials" % PILOT_TRIALS)
        spectrum = rmt_oracle.product_spectrum(
            run.simulation_spec(workers=args.workers, trials=min(PILOT_TRIALS, run.trials))
        )
    return density.suggest_grid(
        spectrum.eigenvalues, run.points, run.epsilon, positive=run.unwrap_k > 1
    )


def _compute_density(run, args, spec):
    started = time.perf_counter()
    curve = density.density_grid(
        run.x,
        run.y,
        spec,
        run.iteration,
        warm_start=not args.cold_start,
        workers=args.workers,
        skip_bad_points=args.skip_bad_points,
        richardson=args.richardson,
    )
    if run.unwrap_k > 1:
        curve = density.unwrap_embedding(curve, Fraction(1, run.unwrap_k), remove_kernel=run.remove_kernel)
    return curve, time.perf_counter() - started


def _simulate(run, args):
    started = time.perf_counter()
    spectrum = rmt_oracle.product_spectrum(run.simulation_spec(workers=args.workers))
    elapsed = time.perf_counter() - started
    rmt_oracle.write_eigenvalues_csv(spectrum, _output(run, "eigenvalues.csv"))
    path = _output(run, "histogram.csv")
    rmt_oracle.write_histogram_csv(spectrum, path)
    meta = _base_meta(run, args.command)
    meta.update(
        {
            "size": run.size,
            "trials": run.trials,
            "seed": run.seed,
            "bins": run.bins,
            "unwrap_k": run.unwrap_k,
            "psd_tolerance": run.psd_tolerance,
            "eigenvalue_count": int(spectrum.eigenvalues.size),
            "wall_time": elapsed,
        }
    )
    return spectrum, meta


def _write_histogram_meta(run, meta, curve=None):
    """histogram.meta; iteration counts come from the density of a compare run"""
    low, median, high = curve.iteration_stats() if curve is not None else ("none", "none", "none")
    meta.update({"iterations_min": low, "iterations_median": median, "iterations_max": high})
    density.write_meta(_output(run, "histogram.meta"), meta)


def _write_curve(run, args, curve, elapsed, extra=None):
    meta = _base_meta(run, args.command)
    meta["wall_time"] = elapsed
    if extra:
        meta.update(extra)
    density.csv_export(curve, _output(run, "density.csv"), extra_meta=meta)


def cmd_density(run, args):
    spec = _auto_grid(run, args)
    curve, elapsed = _compute_density(run, args, spec)
    _write_curve(run, args, curve, elapsed)
    if args.svg:
        plot.write_overlay(_output(run, "density.svg"), curve=curve, title=run.name)
    print("mass=%s" % decimal_str(density.curve_moments(curve)[0], 6))
    return 0


def cmd_simulate(run, args):
    spectrum, meta = _simulate(run, args)
    _write_histogram_meta(run, meta)
    if args.svg:
        plot.write_overlay(_output(run, "histogram.svg"), spectrum=spectrum, title=run.name)
    return 0


def cmd_compare(run, args):
    spectrum, meta = _simulate(run, args)
    spec = _auto_grid(run, args, spectrum)
    curve, elapsed = _compute_density(run, args, spec)
    _write_histogram_meta(run, meta, curve)
    l1 = rmt_oracle.l1_distance(curve, spectrum, run.l1_method)
    _write_curve(run, args, curve, elapsed, {"l1": l1, "l1_method": run.l1_method, "threshold": args.threshold})
    if args.svg:
        plot.write_overlay(_output(run, "compare.svg"), curve=curve, spectrum=spectrum, title=run.name)
    print("l1=%s" % decimal_str(l1, 6))
    return 0 if l1 <= args.threshold else 1


def support_bounds(model):
    """Interval holding the spectrum of a single model"""
    if model.kind == "discrete":
        eigenvalues = np.concatenate([matcx.hermitian_eigen(m).eigenvalues for m in model.matrices])
        return float(eigenvalues.min()), float(eigenvalues.max())
    radius = model.covariance.norm_bound()
    return model.shift - radius, model.shift + radius


def cmd_marginal(run, args):
    model = run.x if args.which == "x" else run.y
    spec = run.grid_spec()
    if spec is None:
        low, high = support_bounds(model)
        spec = density.GridSpec(low - 0.5, high + 0.5, run.points, run.epsilon)
    started = time.perf_counter()
    curve = density.marginal_density(model, spec, skip_bad_points=args.skip_bad_points)
    elapsed = time.perf_counter() - started
    meta = _base_meta(run, args.command)
    meta.update({"which": args.which, "wall_time": elapsed})
    density.csv_export(curve, _output(run, "marginal_%s.csv" % args.which), extra_meta=meta)
    spectrum = None
    if args.simulate:
        spectrum = rmt_oracle.marginal_spectrum(model, run.size, run.trials, run.seed, run.bins)
        rmt_oracle.write_histogram_csv(spectrum, _output(run, "marginal_%s_histogram.csv" % args.which))
        print("l1=%s" % decimal_str(rmt_oracle.l1_distance(curve, spectrum, run.l1_method), 6))
    if args.svg:
        plot.write_overlay(
            _output(run, "marginal_%s.svg" % args.which), curve=curve, spectrum=spectrum, title=run.name
        )
    return 0


COMMANDS = {
    "density": cmd_density,
    "simulate": cmd_simulate,
    "compare": cmd_compare,
    "marginal": cmd_marginal,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="freemult",
        description="Spectral densities of products of operator-valued free variables",
    )
    parser.add_argument("--version", action="version", version="%(prog)s " + __version__)
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("config", help="JSON config file or shipped config name (%s)" % ", ".join(shipped_configs()))
    common.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    common.add_argument("--output-dir", dest="output_dir")
    common.add_argument("--svg", action="store_true", help="also write an SVG plot")
    common.add_argument("--workers", type=int, default=None, help="worker processes")
    grid = common.add_argument_group("density")
    grid.add_argument("--epsilon", type=float)
    grid.add_argument("--grid", type=_grid_flag, metavar="MIN:MAX:POINTS")
    grid.add_argument("--grid-points", dest="grid_points", type=int)
    grid.add_argument("--tol", type=float)
    grid.add_argument("--max-iter", dest="max_iter", type=int)
    grid.add_argument("--damping", type=float)
    grid.add_argument("--polish", action="store_true", help="Newton polishing of omega2")
    grid.add_argument("--unwrap-k", dest="unwrap_k", type=int)
    grid.add_argument("--skip-bad-points", dest="skip_bad_points", action="store_true")
    grid.add_argument("--richardson", action="store_true")
    grid.add_argument("--cold-start", dest="cold_start", action="store_true")
    sim = common.add_argument_group("simulation")
    sim.add_argument("--trials", type=int)
    sim.add_argument("--size", type=int)
    sim.add_argument("--seed", type=int)
    sim.add_argument("--bins", type=int)
    sim.add_argument("--psd-tolerance", dest="psd_tolerance", type=float)
    sim.add_argument("--threshold", type=float, default=0.1, help="compare: largest accepted l1")
    sim.add_argument("--l1-method", dest="l1_method", choices=("pointwise", "bins"), help="compare: l1 metric")

    sub.add_parser("density", parents=[common], help="compute the density of xy")
    sub.add_parser("simulate", parents=[common], help="Monte Carlo spectrum of xy")
    sub.add_parser("compare", parents=[common], help="density against Monte Carlo, prints l1=")
    marginal = sub.add_parser("marginal", parents=[common], help="density of x or y alone")
    marginal.add_argument("--which", choices=("x", "y"), default="y")
    marginal.add_argument("--simulate", action="store_true", help="also histogram a realisation")
    return parser


def _setup_logging(verbose):
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    log.addHandler(handler)
    log.setLevel(logging.DEBUG if verbose else logging.WARNING)
    return handler


def main(argv=None):
    args = build_parser().parse_args(argv)
    handler = _setup_logging(args.verbose)
    try:
        run = apply_flags(load_config(args.config), args)
        return COMMANDS[args.command](run, args)
    except error.FreeMultError as e:
        print("freemult: %s" % e, file=sys.stderr)
        return error.exit_code_by_error[type(e)]
    except OSError as e:
        print("freemult: %s" % e, file=sys.stderr)
        return 1
    finally:
        log.removeHandler(handler)


if __name__ == "__main__":
    sys.exit(main())
