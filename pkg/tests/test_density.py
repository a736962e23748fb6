#!/usr/bin/env python
# -*- encoding: utf-8 -*-
import logging
import os
from fractions import Fraction

import numpy as np
import pytest
from freemult import density
from freemult.density import GridSpec
from freemult.lib import error
from freemult.models import CovarianceMap
from freemult.models import DiscreteModel
from freemult.models import SemicircularModel
from freemult.subordination import IterationConfig
from scipy.integrate import trapezoid


def unit():
    return DiscreteModel.point_mass(1.0)


def bernoulli():
    return DiscreteModel([(0.5, [[1.0]]), (0.5, [[-1.0]])])


def semicircle():
    return SemicircularModel(CovarianceMap([[[1.0]]]))


def semicircle_density(t):
    return np.sqrt(np.clip(4 - t * t, 0, None)) / (2 * np.pi)


def curve_of(grid, values, epsilon):
    return density._finish(grid, np.asarray(values, dtype=float), epsilon, (), ())


class TestGridSpec:
    def testGrid(self):
        grid = GridSpec(-1.0, 1.0, 5).grid()
        assert np.allclose(grid, [-1, -0.5, 0, 0.5, 1])
        assert np.allclose(np.diff(grid), 0.5, rtol=1e-12)

    def testInvalid(self):
        with pytest.raises(error.InvalidModel):
            GridSpec(1.0, 1.0, 10)
        with pytest.raises(error.InvalidModel):
            GridSpec(0.0, 1.0, 1)
        with pytest.raises(error.InvalidModel):
            GridSpec(0.0, 1.0, 10, epsilon=0.0)


class TestDensityGrid:
    def testBernoulliPoissonKernels(self):
        spec = GridSpec(-2.0, 2.0, 401, epsilon=0.05)
        curve = density.density_grid(unit(), bernoulli(), spec)
        t = spec.grid()
        expected = 0.5 * density.poisson_kernel(t, 0.05, 1.0) + 0.5 * density.poisson_kernel(t, 0.05, -1.0)
        assert np.allclose(curve.values, expected, atol=1e-8)
        assert curve.clip_count == 0
        assert curve.atom_at_zero is None
        assert len(curve.iterations) == 401

    def testSemicircle(self):
        spec = GridSpec(-1.8, 1.8, 37, epsilon=1e-4)
        curve = density.density_grid(unit(), semicircle(), spec)
        assert np.max(np.abs(curve.values - semicircle_density(spec.grid()))) <= 5e-3

    def testWarmAndColdAgree(self):
        x = DiscreteModel([(0.5, np.diag([1.0, 2.0])), (0.5, [[2, 1], [1, 2]])])
        y = DiscreteModel([(0.5, [[0, 1], [1, 0]]), (0.5, np.diag([1.0, -1.0]))])
        spec = GridSpec(-4.0, 4.0, 41, epsilon=0.05)
        warm = density.density_grid(x, y, spec)
        cold = density.density_grid(x, y, spec, warm_start=False)
        assert np.allclose(warm.values, cold.values, atol=1e-8)
        pooled = density.density_grid(x, y, GridSpec(-4.0, 4.0, 9, epsilon=0.05), warm_start=False, workers=2)
        assert np.allclose(pooled.values, cold.values[::5], atol=1e-8)

    def testRichardson(self):
        spec = GridSpec(-0.5, 0.5, 3, epsilon=1e-2)
        plain = density.density_grid(unit(), bernoulli(), spec)
        extrapolated = density.density_grid(unit(), bernoulli(), spec, richardson=True)
        assert plain.values[1] > 1e-3
        assert extrapolated.values[1] < 1e-6
        assert extrapolated.richardson
        assert len(extrapolated.iterations) == 6

    def testEpsilonSharpens(self):
        spec = GridSpec(-2.0, 2.0, 401, epsilon=1e-2)
        coarse = density.density_grid(unit(), bernoulli(), spec)
        fine = density.density_grid(unit(), bernoulli(), GridSpec(-2.0, 2.0, 401, epsilon=5e-3))
        assert fine.values.max() >= coarse.values.max() - 1e-6

    def testBadPoints(self):
        spec = GridSpec(-1.0, 1.0, 5, epsilon=0.1)
        cfg = IterationConfig(max_iter=1)
        x = DiscreteModel.point_mass(2.0)
        with pytest.raises(error.NoConvergence) as e:
            density.density_grid(x, bernoulli(), spec, cfg)
        assert "density at t=-1" in e.value.context
        curve = density.density_grid(x, bernoulli(), spec, cfg, skip_bad_points=True)
        assert np.all(curve.values == 0)
        assert len(curve.skipped) == 5

    def testFirstMoment(self):
        ## E[xy] = E[x] E[y] = 2 * 1.5; the grid is symmetric about 3 so the
        ## Poisson tails cut off on both sides cancel
        x = DiscreteModel([(0.5, [[1.0]]), (0.5, [[3.0]])])
        y = DiscreteModel([(0.5, [[1.0]]), (0.5, [[2.0]])])
        curve = density.density_grid(x, y, GridSpec(-7.0, 13.0, 1001, epsilon=0.05))
        m0, m1, _ = density.curve_moments(curve)
        assert abs(m0 - 1) <= 5e-3
        assert abs(m1 / m0 - np.trace(x.expectation() @ y.expectation()).real) <= 5e-3

    def testInvalidPair(self):
        x = DiscreteModel([(1.0, [[-1.0]])])
        with pytest.raises(error.InvalidPair):
            density.density_grid(x, bernoulli(), GridSpec(-1.0, 1.0, 5))


class TestMarginal:
    def testSemicircle(self):
        spec = GridSpec(-2.2, 2.2, 881, epsilon=1e-4)
        curve = density.marginal_density(semicircle(), spec)
        inner = np.abs(spec.grid()) <= 1.8
        assert np.max(np.abs(curve.values - semicircle_density(spec.grid()))[inner]) <= 5e-3
        m0, m1, m2 = density.curve_moments(curve)
        assert abs(m1) <= 5e-3
        assert abs(m2 - 1) <= 5e-3

    def testDiscrete(self):
        spec = GridSpec(-2.0, 2.0, 81, epsilon=0.05)
        curve = density.marginal_density(bernoulli(), spec)
        product = density.density_grid(unit(), bernoulli(), spec)
        assert np.allclose(curve.values, product.values, atol=1e-10)


class TestUnwrap:
    def testHalfMass(self):
        grid = np.linspace(0.0, 1.0, 1001)
        curve = curve_of(grid, np.full(grid.size, 0.5), 1e-4)
        unwrapped = density.unwrap_embedding(curve, Fraction(1, 2))
        assert unwrapped.total_mass == pytest.approx(1.0)
        assert unwrapped.atom_at_zero == pytest.approx(0.0, abs=1e-12)
        assert unwrapped.unwrap_k == 2
        assert np.allclose(unwrapped.values, 1.0)
        ## the input is left alone
        assert np.allclose(curve.values, 0.5)

    def testIdentity(self):
        grid = np.linspace(0.0, 1.0, 11)
        curve = curve_of(grid, np.full(grid.size, 0.5), 1e-4)
        same = density.unwrap_embedding(curve, 1)
        assert np.allclose(same.values, curve.values)
        assert same.atom_at_zero is None

    def testTrueAtom(self):
        grid = np.linspace(0.0, 1.0, 1001)
        curve = curve_of(grid, np.full(grid.size, 0.3), 1e-4)
        assert density.unwrap_embedding(curve, 0.5).atom_at_zero == pytest.approx(0.4)

    def testRemoveKernel(self):
        eps = 1e-3
        grid = np.linspace(-1.0, 3.0, 40001)
        smooth = np.where((grid >= 1) & (grid <= 2), 1.0, 0.0)
        curve = curve_of(grid, 0.5 * density.poisson_kernel(grid, eps) + 0.5 * smooth, eps)
        unwrapped = density.unwrap_embedding(curve, Fraction(1, 2), remove_kernel=True)
        assert unwrapped.total_mass == pytest.approx(1.0, abs=1e-2)
        assert unwrapped.atom_at_zero <= 1e-2

    def testInconsistent(self):
        grid = np.linspace(0.0, 1.0, 101)
        curve = curve_of(grid, np.full(grid.size, 0.9), 1e-4)
        with pytest.raises(error.UnwrapInconsistent):
            density.unwrap_embedding(curve, Fraction(1, 2))
        with pytest.raises(error.UnwrapInconsistent):
            density.unwrap_embedding(curve, Fraction(2, 3))


class TestMoments:
    def testPoissonKernel(self):
        grid = np.linspace(1.5, 2.5, 1000001)
        curve = curve_of(grid, density.poisson_kernel(grid, 1e-4, 2.0), 1e-4)
        assert density.curve_moments(curve)[1] == pytest.approx(2.0, abs=1e-3)

    def testEmpty(self):
        grid = np.linspace(-1.0, 1.0, 11)
        assert density.curve_moments(curve_of(grid, np.zeros(11), 1e-4)) == (0.0, 0.0, 0.0)

    def testAtomCounted(self):
        grid = np.linspace(0.0, 1.0, 1001)
        curve = density.unwrap_embedding(curve_of(grid, np.full(grid.size, 0.3), 1e-4), 0.5)
        assert density.curve_moments(curve)[0] == pytest.approx(1.0)

    def testClip(self):
        values, count = density._clip(np.array([-1e-3, 0.5, -1e-15]))
        assert count == 1
        assert np.all(values >= 0)

    def testIterationStats(self):
        grid = np.linspace(0.0, 1.0, 3)
        curve = density._finish(grid, np.zeros(3), 1e-4, (3, 10, 5), ())
        assert curve.iteration_stats() == (3, 5, 10)
        assert curve_of(grid, np.zeros(3), 1e-4).iteration_stats() == (0, 0, 0)

    def testExcessMassWarns(self, caplog):
        grid = np.linspace(0.0, 1.0, 101)
        with caplog.at_level(logging.WARNING, logger="freemult"):
            curve_of(grid, np.full(grid.size, 0.999), 1e-4)
        assert not caplog.records
        with caplog.at_level(logging.WARNING, logger="freemult"):
            curve = curve_of(grid, np.full(grid.size, 1.01), 1e-4)
        assert curve.total_mass == pytest.approx(1.01)
        assert "exceeds 1" in caplog.text


class TestExport:
    def testCsv(self, tmp_path):
        grid = np.array([0.0, 0.5, 1.0])
        curve = curve_of(grid, [0.25, 1.0 / 3, 0.125], 1e-4)
        path = str(tmp_path / "curve.csv")
        density.csv_export(curve, path, extra_meta={"config_sha256": "abc"})
        with open(path) as f:
            lines = f.read().split("\n")
        assert lines[0] == "t,density"
        assert lines[1] == "0,0.25"
        assert lines[2] == "0.5,0.333333333333"
        assert len([line for line in lines if line]) == 4
        meta = density.read_meta(str(tmp_path / "curve.meta"))
        assert meta["config_sha256"] == "abc"
        assert meta["epsilon"] == "0.0001"
        assert meta["points"] == "3"
        assert meta["atom_at_zero"] == "none"
        for key in ("iterations_min", "iterations_median", "iterations_max", "clip_count", "mass"):
            assert key in meta
        t, values = density.read_curve_csv(path)
        assert np.allclose(t, grid)
        assert np.allclose(values, curve.values, rtol=1e-11)

    def testReproducible(self, tmp_path):
        spec = GridSpec(-2.0, 2.0, 41, epsilon=0.05)
        paths = []
        for i in range(2):
            curve = density.density_grid(unit(), bernoulli(), spec)
            paths.append(str(tmp_path / ("run%i.csv" % i)))
            density.csv_export(curve, paths[-1])
        with open(paths[0], "rb") as a, open(paths[1], "rb") as b:
            assert a.read() == b.read()

    def testBadHeader(self, tmp_path):
        path = tmp_path / "other.csv"
        path.write_text("eigenvalue\n1\n")
        with pytest.raises(error.ConfigError):
            density.read_curve_csv(str(path))

    def testUnwritable(self, tmp_path):
        curve = curve_of(np.array([0.0, 1.0]), [0.0, 0.0], 1e-4)
        with pytest.raises(OSError) as e:
            density.csv_export(curve, os.path.join(str(tmp_path), "missing", "curve.csv"))
        assert "missing" in str(e.value)


class TestSuggestGrid:
    def testMargin(self):
        spec = density.suggest_grid([1.0, 3.0], 100, epsilon=1e-3)
        assert (spec.t_min, spec.t_max, spec.points) == (0.5, 3.5, 100)

    def testPositive(self):
        spec = density.suggest_grid([0.2, 3.0], 100, epsilon=1e-4, positive=True)
        assert spec.t_min == pytest.approx(0.1)

    def testEmpty(self):
        with pytest.raises(error.EmptyHistogram):
            density.suggest_grid([], 100)
