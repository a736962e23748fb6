#!/usr/bin/env python
# -*- encoding: utf-8 -*-
from unittest import mock

import numpy as np
import pytest
from freemult import catalog
from freemult import models
from freemult.lib import error
from freemult.lib import matcx
from freemult.models import CovarianceMap
from freemult.models import DiscreteModel
from freemult.models import SemicircularModel

from .conf import test_seed

I2 = np.eye(2, dtype=complex)


def scalar_semicircle_cauchy(z):
    """(z - sqrt(z^2 - 4)) / 2 on the right sheet everywhere off [-2, 2]"""
    return (z - np.sqrt(z - 2) * np.sqrt(z + 2)) / 2


def bernoulli():
    return DiscreteModel([(0.5, [[1.0]]), (0.5, [[-1.0]])])


def random_upper(rng, dim=2, floor=0.05):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return matcx.real_part(a) + 1j * (a @ a.conj().T + floor * np.eye(dim))


def random_discrete(rng, dim=2, atoms=3, positive=False):
    weights = rng.dirichlet(np.ones(atoms))
    matrices = []
    for _ in range(atoms):
        a = 0.5 * (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim)))
        matrices.append(a @ a.conj().T + 0.1 * np.eye(dim) if positive else matcx.real_part(a))
    return DiscreteModel(list(zip(weights, matrices)))


class TestDiscreteModel:
    def testPointMassAtZero(self):
        x = DiscreteModel.point_mass(0.0)
        assert np.allclose(x.cauchy([[1j]]), [[-1j]])

    def testBernoulliCauchy(self):
        assert np.allclose(bernoulli().cauchy([[1j]]), [[-0.5j]])

    def testScalarBlocks(self):
        x = catalog.uniform_scalar_blocks(catalog.C_SUPPORT, catalog.X_EXPONENTS)
        gamma = np.mean([1 / (2j - c) for c in catalog.C_SUPPORT])
        assert np.allclose(x.cauchy(2j * I2), gamma * I2)
        assert np.allclose(x.expectation(), np.mean(catalog.C_SUPPORT) * I2)
        assert x.expectation()[0, 0].real == pytest.approx(1.1)

    def testMonomialAtoms(self):
        y = catalog.uniform_scalar_blocks((2.0,), catalog.Y_EXPONENTS)
        assert np.allclose(y.matrices[0], [[4, 8], [8, 16]])
        x = catalog.uniform_scalar_blocks((3.0,), catalog.X_EXPONENTS)
        assert np.allclose(x.matrices[0], [[3, 0], [0, 3]])
        assert y.support == (2.0,)
        assert y.exponents == ((2, 3), (3, 4))

    def testReciprocalCauchy(self):
        b = np.array([[0.3 + 2j]])
        assert np.allclose(DiscreteModel.point_mass(1.5).reciprocal_cauchy(b), b - 1.5)
        assert np.allclose(bernoulli().reciprocal_cauchy(b), b - 1 / b)

    def testHTransform(self):
        w = np.array([[0.2 + 0.7j]])
        assert np.allclose(DiscreteModel.point_mass(1.5).h_transform(w), [[1.5]])
        assert np.allclose(bernoulli().h_transform(w), w)
        assert np.allclose(bernoulli().h_transform(np.zeros((1, 1))), [[0]])

    def testHTransformAtZero(self):
        x = DiscreteModel([(0.25, np.diag([1.0, 2.0])), (0.75, [[1, 1], [1, 3]])])
        assert np.allclose(x.h_transform(np.zeros((2, 2))), x.expectation())

    def testEtaTransform(self):
        b = np.array([[0.2 + 0.7j]])
        assert np.allclose(DiscreteModel.point_mass(1.5).eta_transform(b), 1.5 * b)
        assert np.allclose(bernoulli().eta_transform(b), b @ b)
        assert np.allclose(bernoulli().eta_transform(np.zeros((1, 1))), 0)

    def testExpectation(self):
        assert np.allclose(models.expectation(bernoulli()), 0)

    def testLowerHalfPlaneReflection(self):
        x = DiscreteModel([(0.5, np.diag([1.0, 2.0])), (0.5, [[0, 1], [1, 0]])])
        b = np.array([[1 + 1j, 0.5], [0.2, 2j]])
        assert matcx.half_plane(b) == 1
        assert np.allclose(x.cauchy(b.conj().T), x.cauchy(b).conj().T)

    def testHalfPlaneMapping(self):
        rng = np.random.default_rng(test_seed)
        x = DiscreteModel([(0.3, np.diag([1.0, -2.0])), (0.7, [[0, 1j], [-1j, 1]])])
        for _ in range(200):
            a = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
            b = matcx.real_part(a) + 1j * (a @ a.conj().T + 0.1 * np.eye(2))
            assert matcx.half_plane(x.cauchy(b)) == -1

    def testResolventSumCrossCheck(self):
        rng = np.random.default_rng(test_seed)
        for _ in range(20):
            dim = int(rng.integers(1, 4))
            x = random_discrete(rng, dim, atoms=int(rng.integers(1, 6)))
            b = random_upper(rng, dim)
            expected = np.zeros((dim, dim), dtype=complex)
            for p, m in zip(x.weights, x.matrices):
                expected += p * np.linalg.solve(b - m, np.eye(dim))
            assert np.allclose(x.cauchy(b), expected, rtol=0, atol=1e-13 * max(1.0, np.abs(expected).max()))

    def testNeitherHalfPlane(self):
        x = bernoulli()
        with pytest.raises(error.DomainEscape):
            x.cauchy([[2.0]])
        ## the resolvent sum itself only needs invertibility
        assert np.allclose(x.cauchy([[2.0]], strict=False), [[0.5 / 1 + 0.5 / 3]])

    def testInvalid(self):
        with pytest.raises(error.InvalidModel) as e:
            DiscreteModel([(0.5, [[1.0]]), (0.6, [[2.0]])])
        assert "weights sum 1.1" in str(e.value)
        with pytest.raises(error.InvalidModel):
            DiscreteModel([(1.0, [[0, 1], [0, 0]])])
        with pytest.raises(error.InvalidModel):
            DiscreteModel([(1.5, [[1.0]]), (-0.5, [[2.0]])])
        with pytest.raises(error.DimensionError):
            DiscreteModel([(0.5, [[1.0]]), (0.5, I2)])
        with pytest.raises(error.InvalidModel):
            DiscreteModel([])

    def testFrozen(self):
        x = bernoulli()
        with pytest.raises(ValueError):
            x.weights[0] = 1.0
        with pytest.raises(ValueError):
            x.matrices[0, 0, 0] = 3.0


class TestCovarianceMap:
    def testApply(self):
        cov = catalog.covariance("S1")
        b = np.array([[1, 2j], [3, 4]])
        expected = sum(a @ b @ a for a in cov.family)
        assert np.allclose(cov.apply(b), expected)
        assert len(cov) == 2

    def testEmpty(self):
        cov = CovarianceMap([], dim=3)
        assert np.allclose(cov.apply(np.eye(3)), 0)
        assert cov.norm_bound() == 0.0
        with pytest.raises(error.DimensionError):
            CovarianceMap([])

    def testNormBound(self):
        assert catalog.covariance("c_identity").norm_bound() == pytest.approx(2.0)

    def testUnknownFamily(self):
        with pytest.raises(error.InvalidModel):
            catalog.covariance("S3")


class TestSemicircularModel:
    def testScalarAtI(self):
        s = SemicircularModel(CovarianceMap([[[1.0]]]))
        g = s.cauchy([[1j]])
        assert g[0, 0] == pytest.approx(1j * (1 - np.sqrt(5)) / 2, abs=1e-10)

    def testNearRealAxis(self):
        s = SemicircularModel(CovarianceMap([[[1.0]]]))
        z = 1 + 1e-4j
        g = models.semicircular_cauchy(s, [[z]])
        assert g[0, 0] == pytest.approx(scalar_semicircle_cauchy(z), abs=1e-9)

    def testShift(self):
        s = SemicircularModel(CovarianceMap([[[1.0]]]), shift=2.0)
        g = s.cauchy([[2 + 1j]])
        assert g[0, 0] == pytest.approx(1j * (1 - np.sqrt(5)) / 2, abs=1e-10)
        assert np.allclose(s.expectation(), [[2.0]])

    def testMatrixIdentityFamily(self):
        s = catalog.semicircular("c_identity")
        g = s.cauchy((0.5 + 0.3j) * I2)
        assert np.allclose(g, scalar_semicircle_cauchy(0.5 + 0.3j) * I2, atol=1e-10)

    def testFunctionalEquation(self):
        s = catalog.semicircular("S1")
        b = np.array([[0.3 + 0.05j, 0.1], [0.1, -0.2 + 0.05j]])
        g = s.cauchy(b)
        residual = (b - s.covariance.apply(g)) @ g - I2
        assert matcx.norm(residual) <= 10 * models.HRS_TOL * max(1.0, matcx.norm(b))
        assert matcx.half_plane(g) == -1

    def testResidualRejected(self):
        s = SemicircularModel(CovarianceMap([[[1.0]]]))
        ## a settled iteration that does not solve the functional equation
        with mock.patch.object(models, "_hrs", return_value=np.array([[-0.5j]])):
            with pytest.raises(error.NoConvergence) as e:
                models.semicircular_cauchy(s, [[1j]])
        assert e.value.residual > models.RESIDUAL_LIMIT

    @pytest.mark.parametrize("name", ["S1", "S2", "S1_prime", "S2_prime"])
    def testResidualAtRandomPoints(self, name):
        rng = np.random.default_rng(test_seed)
        s = catalog.semicircular(name)
        eye = np.eye(s.dim)
        for _ in range(100):
            b = random_upper(rng, s.dim)
            g = models.semicircular_cauchy(s, b)
            residual = (b - s.covariance.apply(g)) @ g - eye
            assert matcx.norm(residual) <= models.RESIDUAL_LIMIT * max(1.0, matcx.norm(b))

    def testReflection(self):
        s = catalog.semicircular("S2", shift=8.5)
        b = np.array([[8 + 1j, 0.3], [0.3, 9 + 0.5j]])
        assert np.allclose(s.cauchy(b.conj().T), s.cauchy(b).conj().T, atol=1e-10)

    def testHTransform(self):
        s = catalog.semicircular("S1_prime", shift=40.0)
        assert np.allclose(s.h_transform(np.zeros((3, 3))), 40 * np.eye(3))
        w = 0.01j * np.eye(3)
        h = s.h_transform(w)
        generic = models.OperatorModel._h_from_cauchy(s, matcx.inverse(w), s.cauchy(matcx.inverse(w)))
        assert np.allclose(h, generic, atol=1e-8)
        assert matcx.min_eigenvalue(matcx.imag_part(h)) >= -1e-10

    def testExpectationOfShiftedFamily(self):
        assert np.allclose(catalog.semicircular("S2_prime", shift=85).expectation(), 85 * np.eye(3))

    def testEmptyCovariance(self):
        s = SemicircularModel(CovarianceMap([], dim=2), shift=3.0)
        b = (3 + 2j) * I2
        assert np.allclose(s.cauchy(b), -0.5j * I2)

    def testNeitherHalfPlaneStrict(self):
        s = catalog.semicircular("c_identity", shift=2.0)
        with pytest.raises(error.DomainEscape):
            s.cauchy(np.diag([3 - 1j, 2.5 + 0.5j]))

    def testOffPlaneRealShiftPath(self):
        ## numerical range straddles the positive real axis
        s = catalog.semicircular("c_identity", shift=2.0)
        b = np.diag([3 - 1j, 2.5 + 0.5j])
        assert models.rotation_angle(b) is None
        g = s.cauchy(b, strict=False)
        expected = np.diag([scalar_semicircle_cauchy(1 - 1j), scalar_semicircle_cauchy(0.5 + 0.5j)])
        assert np.allclose(g, expected, atol=1e-9)

    def testOffPlaneRotationPath(self):
        s = catalog.semicircular("c_identity", shift=2.0)
        b = np.exp(-2.5j) * np.diag([3 - 0.5j, 1 - 2j])
        assert matcx.half_plane(b) == 0
        phi = models.rotation_angle(b)
        assert phi is not None and -np.pi <= phi <= 0
        assert matcx.half_plane(np.exp(-1j * phi) * b) == -1
        g = s.cauchy(b, strict=False)
        expected = np.diag([scalar_semicircle_cauchy(z - 2) for z in np.diag(b)])
        assert np.allclose(g, expected, atol=1e-9)

    def testOffPlaneWarmStart(self):
        s = catalog.semicircular("c_identity", shift=2.0)
        b = np.diag([3 - 1j, 2.5 + 0.5j])
        g = s.cauchy(b, strict=False)
        nearby = b + 1e-3 * I2
        warm = s.cauchy(nearby, strict=False, start=g)
        cold = s.cauchy(nearby, strict=False)
        assert np.allclose(warm, cold, atol=1e-9)

    def testDescribe(self):
        assert "shift 8.5" in catalog.semicircular("S2", shift=8.5).describe()


class TestHalfPlaneSuite:
    """
    Randomised mapping properties of the transforms, 500 checks over
    discrete and semicircular models.
    """

    def setup_method(self):
        self.rng = np.random.default_rng(test_seed)
        self.positive = [
            random_discrete(self.rng, 2, positive=True),
            catalog.semicircular("S2", shift=8.5),
        ]
        self.selfadjoint = [random_discrete(self.rng, 2), catalog.semicircular("S1")]

    def samples(self, count):
        models_ = self.positive + self.selfadjoint
        for k in range(count):
            yield models_[k % len(models_)], random_upper(self.rng)

    def testCauchyLowerHalfPlane(self):
        for model, b in self.samples(150):
            assert matcx.half_plane(model.cauchy(b)) == -1

    def testHTransformUpperHalfPlane(self):
        for k in range(200):
            model = self.positive[k % 2]
            h = model.h_transform(random_upper(self.rng))
            assert matcx.min_eigenvalue(matcx.imag_part(h)) >= -1e-10 * max(1.0, matcx.norm(h))

    def testReflection(self):
        for model, b in self.samples(100):
            assert np.allclose(model.cauchy(b.conj().T), model.cauchy(b).conj().T, atol=1e-10)

    def testDecay(self):
        ## every model here has spectrum inside [-radius, radius]
        radius = 20.0
        for model, _ in self.samples(50):
            z = self.rng.uniform(100, 1000) * np.exp(1j * self.rng.uniform(0.05, np.pi - 0.05))
            g = model.cauchy(z * I2)
            bound = np.sqrt(2) * radius / (abs(z) - radius)
            assert matcx.norm(z * g - I2) <= bound


class TestRotationAngle:
    def testLowerVariant(self):
        u = np.exp(-0.5j) * np.diag([1 - 1j, 2 - 0.5j])
        phi = models.rotation_angle(u)
        assert -np.pi <= phi <= 0
        assert matcx.half_plane(np.exp(-1j * phi) * u) == -1

    def testUpperVariant(self):
        u = np.exp(0.5j) * np.diag([1 + 1j, 2 + 0.5j])
        phi = models.rotation_angle(u)
        assert 0 <= phi <= np.pi
        assert matcx.half_plane(np.exp(-1j * phi) * u) == 1

    def testZeroInRange(self):
        assert models.rotation_angle(np.diag([1 + 0j, -1 + 0j])) is None


class TestValidatePair:
    def testShiftedSemicircles(self):
        report = models.validate_pair(catalog.semicircular("S2", 8.5), catalog.semicircular("S1"))
        assert report.ok
        assert report.errors == []

    def testNotPositive(self):
        x = DiscreteModel([(1.0, np.diag([1.0, -1.0]))])
        report = models.validate_pair(x, DiscreteModel.point_mass(1.0, dim=2))
        assert not report.ok
        assert "x not positive" in report.errors[0]
        with pytest.raises(error.InvalidPair):
            report.raise_for_errors()

    def testProjection(self):
        x = DiscreteModel([(0.5, [[0.0]]), (0.5, [[1.0]])])
        report = models.validate_pair(x, bernoulli())
        assert report.ok
        assert report.warnings

    def testUnshiftedSemicircle(self):
        report = models.validate_pair(catalog.semicircular("S2"), catalog.semicircular("S1"))
        assert "x must be strictly positive" in report.errors[0]

    def testMinimalShift(self):
        report = models.validate_pair(catalog.semicircular("c_identity", 2.0), catalog.semicircular("S1"))
        assert report.ok
        assert any("nonnegative" in w for w in report.warnings)

    def testDimensionMismatch(self):
        report = models.validate_pair(catalog.semicircular("S2", 8.5), catalog.semicircular("S1_prime"))
        assert "dimension mismatch" in report.errors[0]
