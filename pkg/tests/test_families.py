import math

import numpy as np
import pytest

from spinergy.errors import CriticalityError, DescentError
from spinergy.families import ABSOLUTE_MINIMISER, REPORT_SCHEMA, \
    SADDLE_FAMILY, Check, CheckReport, SaddleParams, TwistorParams, \
    build_parallel, build_saddle, build_wave, classify_flat_critical, \
    moduli_energy_closed_form, moduli_energy_curve, moduli_second_derivative, \
    saddle_gradient_closed_form, saddle_gradient_residuals, \
    saddle_pair_closed_form, seam_mismatch, tt_predicate, \
    twistor_closed_form_check
from spinergy.functional import energy, neg_gradient_general, \
    neg_gradient_pair, pair_from_spinor
from spinergy.geometry import FlatTorus, Lattice, SpinCharacter


def sup(values):
    return float(np.abs(values).max())


def random_twistor_params(count, seed=0):
    rng = np.random.default_rng(seed)
    return [TwistorParams(*rng.standard_normal(2)) for _ in range(count)]


class TestSaddleParams:
    def test_defaults(self):
        params = SaddleParams()
        assert params.alpha1 == (math.pi, 0.0)
        assert params.alpha2 == (0.0, math.pi)
        assert params.is_critical

    def test_scale(self):
        params = SaddleParams(ell=2.0)
        assert params.alpha1 == (math.pi / 2, 0.0)
        assert params.lattice() == Lattice.saddle(2.0)

    def test_non_positive_scale(self):
        with pytest.raises(ValueError):
            SaddleParams(ell=0.0)

    @pytest.mark.parametrize('theta, critical', [
        (math.pi / 4, True),
        (3 * math.pi / 4, True),
        (0.3, False),
    ])
    def test_critical_angles(self, theta, critical):
        assert SaddleParams(theta=theta).is_critical == critical

    def test_angle_along_family(self):
        params = SaddleParams(c=2.0)
        assert params.at(0.1).theta == pytest.approx(math.pi / 4 + 0.2)


class TestBuilders:
    def test_saddle_is_unit(self):
        params = SaddleParams()
        phi = build_saddle(params, params.torus(16))
        assert np.allclose(np.sum(phi.values ** 2, axis=-1), 1.0)

    def test_saddle_rejects_trivial_character(self):
        params = SaddleParams()
        torus = FlatTorus(params.lattice(), SpinCharacter(1, 1), 16)
        with pytest.raises(DescentError) as exc_info:
            build_saddle(params, torus)
        assert 'does not descend' in str(exc_info.value)

    def test_seam_mismatch(self):
        params = SaddleParams()
        assert seam_mismatch(params, params.torus(16)) < 1e-12
        wrong = FlatTorus(params.lattice(), SpinCharacter(1, 1), 16)
        assert seam_mismatch(params, wrong) > 1.0

    def test_saddle_descends_to_doubled_lattice(self):
        params = SaddleParams()
        torus = params.torus(32, doubled=True)
        assert not torus.character.is_bounding
        phi = build_saddle(params, torus)
        # energy scales with the area
        assert energy(phi) == pytest.approx(4 * math.pi ** 2, rel=1e-4)

    def test_parallel_needs_non_bounding_structure(self):
        torus = FlatTorus(Lattice.square(1.0), SpinCharacter(-1, 1), 8)
        with pytest.raises(DescentError) as exc_info:
            build_parallel(torus)
        assert str(exc_info.value) == \
            'parallel spinors require the non-bounding structure'

    def test_parallel(self):
        torus = FlatTorus(Lattice.square(1.0), SpinCharacter(1, 1), 8)
        phi = build_parallel(torus, psi=[0.0, 0.0, 1.0, 0.0])
        assert np.allclose(phi.values, [0.0, 0.0, 1.0, 0.0])

    def test_wave_descent(self):
        torus = FlatTorus(Lattice.square(1.0), SpinCharacter(-1, 1), 8)
        build_wave((math.pi, 0.0), torus)
        with pytest.raises(DescentError):
            build_wave((math.pi, math.pi), torus)


class TestSaddle:
    def test_energy_is_pi_squared(self):
        params = SaddleParams()
        phi = build_saddle(params, params.torus(64))
        assert abs(energy(phi) - math.pi ** 2) < 1e-4

    def test_energy_does_not_depend_on_scale(self):
        params = SaddleParams(ell=3.0)
        phi = build_saddle(params, params.torus(64))
        assert abs(energy(phi) - math.pi ** 2) < 1e-4

    def test_pair_matches_closed_form(self):
        params = SaddleParams()
        torus = params.torus(64)
        pair = pair_from_spinor(build_saddle(params, torus))
        A, beta = saddle_pair_closed_form(params, torus)
        assert sup(pair.A - A) < 1e-4
        assert sup(pair.beta - beta) < 1e-4

    def test_pair_norms(self):
        params = SaddleParams()
        A, beta = saddle_pair_closed_form(params, params.torus(16))
        assert np.allclose(np.sum(A ** 2, axis=(-2, -1)), math.pi ** 2 / 2)
        assert np.allclose(np.sum(beta ** 2, axis=-1), math.pi ** 2 / 2)

    def test_closed_form_gradient_vanishes_at_critical_angle(self):
        params = SaddleParams()
        Q1, Q2 = saddle_gradient_closed_form(params, params.torus(16))
        assert sup(Q1) < 1e-12
        assert sup(Q2) < 1e-12

    def test_closed_form_gradient_off_critical_angle(self):
        # equal frequencies keep Q2 zero, only the metric slot moves
        params = SaddleParams(theta=0.3)
        Q1, Q2 = saddle_gradient_closed_form(params, params.torus(16))
        assert sup(Q1) > 0.1
        assert sup(Q2) < 1e-12

    def test_gradient_residuals_converge(self):
        params = SaddleParams()
        coarse = saddle_gradient_residuals(params, params.torus(32))
        fine = saddle_gradient_residuals(params, params.torus(64))
        for c, f in zip(coarse, fine):
            assert f < 1e-4
            assert f < c / 8 or f < 1e-9


class TestPreCriticalSaddle:
    params = SaddleParams(theta=math.pi / 8)

    def discrete(self, N):
        phi = build_saddle(self.params, self.params.torus(N))
        return phi, pair_from_spinor(phi)

    def test_metric_gradient_matches_closed_form(self):
        errors = []
        for N in (32, 64):
            phi, _ = self.discrete(N)
            Q1, _ = saddle_gradient_closed_form(self.params, phi.torus)
            errors.append(sup(neg_gradient_general(phi).Q1 - Q1))
        assert errors[0] < 1e-4
        # fourth order stencils
        assert errors[1] < errors[0] / 8

    def test_spinor_gradient_matches_closed_form(self):
        phi, pair = self.discrete(32)
        _, Q2 = saddle_gradient_closed_form(self.params, phi.torus)
        assert sup(neg_gradient_pair(pair).Q2 - Q2) < 1e-8

    def test_pair_matches_closed_form(self):
        phi, pair = self.discrete(64)
        A, beta = saddle_pair_closed_form(self.params, phi.torus)
        assert sup(pair.A - A) < 1e-4
        assert sup(pair.beta - beta) < 1e-4

    def test_is_not_critical(self):
        norms = [saddle_gradient_residuals(self.params, self.params.torus(N))[0]
                 for N in (16, 32, 64)]
        assert min(norms) > 1.0
        assert abs(norms[-1] - norms[-2]) < 1e-3


class TestModuliFamily:
    def test_closed_form_at_zero(self):
        assert moduli_energy_closed_form(SaddleParams(c=5.0), 0.0) == \
            pytest.approx(1.0)

    @pytest.mark.parametrize('c', [-1.0, 0.0, 1.0])
    def test_second_derivative_closed_form(self, c):
        f2 = moduli_second_derivative(SaddleParams(c=c))
        assert f2 == pytest.approx(8 * c + 4, abs=1e-6)

    @pytest.mark.parametrize('c', [-1.0, 0.0, 1.0])
    def test_second_derivative_discrete(self, c):
        params = SaddleParams(c=c)
        f2 = moduli_second_derivative(params, discrete=True,
                                      torus=params.torus(32))
        assert f2 == pytest.approx(8 * c + 4, abs=1e-3)

    def test_discrete_needs_torus(self):
        with pytest.raises(ValueError):
            moduli_second_derivative(SaddleParams(), discrete=True)

    @pytest.mark.parametrize('t', [-0.2, 0.1, 0.3])
    def test_energy_curve(self, t):
        params = SaddleParams(c=0.5)
        f, E = moduli_energy_curve(params, t, params.torus(32))
        assert E / math.pi ** 2 == pytest.approx(f, rel=1e-4)

    def test_indefinite_hessian_lowers_energy(self):
        params = SaddleParams(c=-1.0)
        assert moduli_energy_closed_form(params, 0.05) < 1.0


class TestTwistor:
    @pytest.mark.parametrize('params', random_twistor_params(20))
    def test_energy_is_pi(self, params):
        report = twistor_closed_form_check(params)
        assert report.passed
        assert report.verdict == 'sphere'
        assert abs(report.values['energy'] - math.pi) < 1e-12

    def test_zero_constants_are_parallel(self):
        report = twistor_closed_form_check(TwistorParams(0.0, 0.0))
        assert report.verdict == 'parallel, not sphere'
        assert report.checks == []

    def test_circle_action_rotates_by_twice_the_angle(self):
        params = TwistorParams(1.0, 0.0)
        rotated = params.rotated(math.pi / 4)
        assert rotated.a == pytest.approx(0.0, abs=1e-15)
        assert rotated.b == pytest.approx(1.0)
        assert rotated.killing_number == pytest.approx(params.killing_number)

    def test_curvature(self):
        assert TwistorParams(0.5, 0.5).K == pytest.approx(2.0)


class TestClassification:
    def test_parallel_is_absolute_minimiser(self):
        torus = FlatTorus(Lattice.square(1.0), SpinCharacter(1, 1), 16)
        report = classify_flat_critical(pair_from_spinor(build_parallel(torus)),
                                        1e-10)
        assert report.verdict == ABSOLUTE_MINIMISER
        assert report.passed

    def test_saddle_family(self):
        params = SaddleParams()
        phi = build_saddle(params, params.torus(64))
        report = classify_flat_critical(pair_from_spinor(phi), 1e-4)
        assert report.verdict == SADDLE_FAMILY
        assert [check.name for check in report.checks] == [
            'beta_parallel', 'beta_in_kernel', 'equal_norms', 'rotating_image',
        ]
        assert report.passed

    def test_wave_is_not_critical(self):
        torus = FlatTorus(Lattice.square(1.0), SpinCharacter(-1, 1), 32)
        pair = pair_from_spinor(build_wave((math.pi, 0.0), torus))
        with pytest.raises(CriticalityError) as exc_info:
            classify_flat_critical(pair, 1e-4)
        assert 'input not critical' in str(exc_info.value)

    def test_tt_predicate(self):
        torus = FlatTorus(Lattice.square(1.0), SpinCharacter(1, 1), 16)
        assert tt_predicate(pair_from_spinor(build_parallel(torus)))
        params = SaddleParams()
        saddle = build_saddle(params, params.torus(32))
        assert not tt_predicate(pair_from_spinor(saddle))


class TestCheckReport:
    def test_check_passes_at_tolerance(self):
        assert Check('exact', 1e-6, 1e-6).passed
        assert not Check('loose', 2e-6, 1e-6).passed

    def test_lookup(self):
        report = CheckReport('demo')
        report.add('first', 0.1, 1.0)
        assert report['first'].residual == 0.1
        with pytest.raises(KeyError):
            report['second']

    def test_passed_needs_every_check(self):
        report = CheckReport('demo')
        report.add('good', 0.0, 1.0)
        assert report.passed
        report.add('bad', 2.0, 1.0)
        assert not report.passed

    def test_to_dict(self):
        report = CheckReport('demo', verdict='sphere', values={'energy': 3.0})
        report.add('energy_pi', 0.5, 1.0)
        assert report.to_dict() == {
            'title': 'demo',
            'verdict': 'sphere',
            'passed': True,
            'checks': [{'name': 'energy_pi', 'residual': 0.5, 'tolerance': 1.0,
                        'passed': True}],
            'values': {'energy': 3.0},
        }

    def test_schema_keeps_key_order(self):
        report = CheckReport('demo', values={'energy': 1})
        report.add('first', 1e-3, 1e-2)
        data = REPORT_SCHEMA.dump(report)
        assert list(data) == ['title', 'verdict', 'passed', 'checks', 'values']
        assert data['values'] == {'energy': 1.0}
        assert data['checks'][0]['passed'] is True
