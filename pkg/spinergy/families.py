"""Explicit spinor families and predicates for flat critical points.

Flat tori carry three closed-form families:

* the parallel spinor on the non-bounding structure (the absolute minimiser),
* the single wave ``e^{alpha(x) omega} psi_1`` (pair ``A = 0``,
  ``beta = alpha``),
* the saddle ``cos(theta) e^{alpha_1(x) omega} psi_1 +
  sin(theta) e^{alpha_2(x) omega} psi_2`` with ``psi_1 = 1`` and
  ``psi_2 = e_2 . psi_1 = j``.

Covectors are stored by their values on the plane, ``alpha(x) = <a, x>``; on
a torus their lattice coordinate components are ``B^T a`` and their frame
components follow from the torus frame. The round sphere is handled in closed
form through the twistor constants ``(a, b)``.
"""
import logging
import math
from collections import namedtuple

import numpy as np
from lollipop.types import Boolean, Dict, Float, List, Object, Optional, \
    String

from spinergy.algebra import left_i, left_j, left_k, qdot, rotate_j
from spinergy.errors import CriticalityError, DescentError, \
    ErrorMessagesMixin
from spinergy.functional import SpinorField, energy, gradient_norm, \
    neg_gradient_general, neg_gradient_pair
from spinergy.geometry import FlatTorus, Lattice, SpinCharacter


__all__ = [
    'SaddleParams',
    'TwistorParams',
    'Check',
    'CheckReport',
    'CHECK_SCHEMA',
    'REPORT_SCHEMA',
    'build_saddle',
    'build_parallel',
    'build_wave',
    'seam_mismatch',
    'saddle_pair_closed_form',
    'saddle_gradient_closed_form',
    'moduli_energy_closed_form',
    'moduli_energy_curve',
    'moduli_second_derivative',
    'twistor_closed_form_check',
    'classify_flat_critical',
    'tt_predicate',
    'saddle_gradient_residuals',
    'ABSOLUTE_MINIMISER',
    'SADDLE_FAMILY',
    'INCONSISTENT',
]

logger = logging.getLogger(__name__)

ABSOLUTE_MINIMISER = 'absolute_minimiser'
SADDLE_FAMILY = 'saddle_family'
INCONSISTENT = 'inconsistent'

#: Largest seam mismatch accepted as a valid descent.
DESCENT_TOLERANCE = 1e-9


CHECK_SCHEMA = Object({
    'name': String(),
    'residual': Float(),
    'tolerance': Float(),
    'passed': Boolean(),
})

#: JSON layout of a :class:`CheckReport`.
REPORT_SCHEMA = Object({
    'title': String(),
    'verdict': Optional(String()),
    'passed': Boolean(),
    'checks': List(CHECK_SCHEMA),
    'values': Dict(Float()),
}, ordered=True)


class Check(namedtuple('Check', ['name', 'residual', 'tolerance'])):
    """A single numerical check: passes when ``residual <= tolerance``."""

    __slots__ = ()

    @property
    def passed(self):
        return bool(self.residual <= self.tolerance)


class CheckReport(object):
    """Named collection of :class:`Check` results.

    :param str title: Report name.
    :param list checks: :class:`Check` objects.
    :param str verdict: Optional classification outcome.
    :param dict values: Extra computed quantities to report.
    """

    def __init__(self, title, checks=None, verdict=None, values=None):
        self.title = title
        self.checks = list(checks or [])
        self.verdict = verdict
        self.values = dict(values or {})

    def add(self, name, residual, tolerance):
        check = Check(name, float(residual), float(tolerance))
        self.checks.append(check)
        return check

    def __getitem__(self, name):
        for check in self.checks:
            if check.name == name:
                return check
        raise KeyError(name)

    @property
    def passed(self):
        return all(check.passed for check in self.checks)

    def to_dict(self):
        return REPORT_SCHEMA.dump(self)

    def __repr__(self):
        return '<{klass} {title!r} passed={passed} verdict={verdict!r}>'.format(
            klass=self.__class__.__name__, title=self.title,
            passed=self.passed, verdict=self.verdict,
        )


class SaddleParams(namedtuple('SaddleParams', ['ell', 'theta', 'c',
                                               'alpha1', 'alpha2'])):
    """Parameters of the saddle family.

    :param float ell: Lattice scale; the fundamental lattice is generated by
        ``ell (1, 1)`` and ``ell (1, -1)``.
    :param float theta: Mixing angle, critical for ``theta - pi/4`` in
        ``(pi/2) Z``.
    :param float c: Slope of the angle along the moduli family.
    :param alpha1: Plane covector, defaults to ``(pi/ell) e^1``.
    :param alpha2: Plane covector, defaults to ``(pi/ell) e^2``.
    """

    __slots__ = ()

    def __new__(cls, ell=1.0, theta=math.pi / 4, c=0.0, alpha1=None, alpha2=None):
        if ell <= 0:
            raise ValueError('saddle scale must be positive, got %r' % ell)
        k = math.pi / ell
        alpha1 = (k, 0.0) if alpha1 is None else tuple(float(v) for v in alpha1)
        alpha2 = (0.0, k) if alpha2 is None else tuple(float(v) for v in alpha2)
        return super(SaddleParams, cls).__new__(
            cls, float(ell), float(theta), float(c), alpha1, alpha2)

    def lattice(self):
        return Lattice.saddle(self.ell)

    def character(self):
        return SpinCharacter(-1, -1)

    def torus(self, N, doubled=False):
        """Torus the saddle naturally lives on: the fundamental lattice with
        the bounding character, or its double with the trivial one."""
        if doubled:
            return FlatTorus(self.lattice().doubled(), SpinCharacter(1, 1), N)
        return FlatTorus(self.lattice(), self.character(), N)

    def at(self, t):
        """Parameters with ``theta(t) = theta + c t``."""
        return self._replace(theta=self.theta + self.c * t)

    @property
    def is_critical(self):
        a1, a2 = np.array(self.alpha1), np.array(self.alpha2)
        offset = (self.theta - math.pi / 4) / (math.pi / 2)
        return (abs(a1 @ a2) < 1e-12 and abs(a1 @ a1 - a2 @ a2) < 1e-12
                and abs(offset - round(offset)) < 1e-12)


class TwistorParams(namedtuple('TwistorParams', ['a', 'b'])):
    """Constants of a twistor spinor ``nabla_X phi = a X.phi + b J(X).phi``
    on a round sphere."""

    __slots__ = ()

    @property
    def K(self):
        return 4.0 * (self.a ** 2 + self.b ** 2)

    @property
    def killing_number(self):
        return math.hypot(self.a, self.b)

    def rotated(self, angle):
        """Constants of ``cos(angle) phi + sin(angle) omega . phi``: the
        circle action rotates ``(a, b)`` by twice the angle."""
        c, s = math.cos(2.0 * angle), math.sin(2.0 * angle)
        return TwistorParams(c * self.a - s * self.b, s * self.a + c * self.b)


def _lattice_phases(alpha, lattice):
    """Values ``alpha(gamma_1), alpha(gamma_2)``, i.e. lattice coordinate
    components of a plane covector."""
    return lattice.basis.T @ np.asarray(alpha, dtype=float)


def _frame_covector(alpha, torus):
    return torus.frame.T @ _lattice_phases(alpha, torus.lattice)


def _phase(alpha, torus):
    s1, s2 = torus.grid.coordinates()
    p1, p2 = _lattice_phases(alpha, torus.lattice)
    return p1 * s1 + p2 * s2


def _wave(phase, psi):
    """``e^{phase omega} psi`` for a constant quaternion ``psi``."""
    psi = np.broadcast_to(np.asarray(psi, dtype=float), phase.shape + (4,))
    return np.cos(phase)[..., None] * psi + np.sin(phase)[..., None] * left_k(psi)


def _descent_mismatch(alpha, torus):
    """``max_i |e^{alpha(gamma_i) omega} - chi(gamma_i)|``."""
    phases = _lattice_phases(alpha, torus.lattice)
    return max(math.hypot(math.cos(p) - chi, math.sin(p))
               for p, chi in zip(phases, torus.character))


PSI1 = np.array([1.0, 0.0, 0.0, 0.0])
PSI2 = left_j(PSI1)


class _Failures(ErrorMessagesMixin, object):
    error_class = DescentError
    default_error_messages = {
        'descent': 'spinor does not descend to this lattice/character '
                   '(seam mismatch {mismatch:.3g})',
        'bounding': 'parallel spinors require the non-bounding structure',
        'not_critical': 'input not critical (gradient residual {residual:.3e} '
                        'above {tol:.3e})',
    }

    def check_descent(self, alphas, torus):
        mismatch = max(_descent_mismatch(alpha, torus) for alpha in alphas)
        if mismatch > DESCENT_TOLERANCE:
            self._fail('descent', mismatch=mismatch)

    def require_trivial(self, torus):
        if torus.character.is_bounding:
            self._fail('bounding')

    def require_critical(self, residual, tol):
        if residual > tol:
            self._fail('not_critical', error_class=CriticalityError,
                       residual=residual, tol=tol)


_failures = _Failures()


def build_saddle(params, torus):
    """Saddle spinor on ``torus``.

    :raises DescentError: if ``e^{alpha_i(gamma) omega} = chi(gamma)`` fails
        on a generator.
    """
    _failures.check_descent([params.alpha1, params.alpha2], torus)
    values = math.cos(params.theta) * _wave(_phase(params.alpha1, torus), PSI1) \
        + math.sin(params.theta) * _wave(_phase(params.alpha2, torus), PSI2)
    return SpinorField(values, torus)


def build_parallel(torus, psi=PSI1):
    """Constant spinor ``psi``.

    :raises DescentError: on a bounding spin structure.
    """
    _failures.require_trivial(torus)
    values = np.broadcast_to(np.asarray(psi, dtype=float), (torus.N, torus.N, 4))
    return SpinorField(values, torus)


def build_wave(alpha, torus, psi=PSI1):
    """Single wave ``e^{alpha(x) omega} psi`` for a plane covector ``alpha``."""
    _failures.check_descent([alpha], torus)
    return SpinorField(_wave(_phase(alpha, torus), psi), torus)


def seam_mismatch(params, torus):
    """Largest jump of the saddle ansatz across the seams of ``torus``,
    evaluated from the formula at ``s`` and ``s + e_i``."""
    alphas = [params.alpha1, params.alpha2]
    weights = [math.cos(params.theta), math.sin(params.theta)]
    psis = [PSI1, PSI2]
    s1, s2 = torus.grid.coordinates()
    mismatch = 0.0
    for axis, chi in enumerate(torus.character):
        shifted = [s1 + (axis == 0), s2 + (axis == 1)]
        inside = 0.0
        across = 0.0
        for alpha, weight, psi in zip(alphas, weights, psis):
            p1, p2 = _lattice_phases(alpha, torus.lattice)
            inside = inside + weight * _wave(p1 * s1 + p2 * s2, psi)
            across = across + weight * _wave(p1 * shifted[0] + p2 * shifted[1], psi)
        mismatch = max(mismatch, float(np.abs(across - chi * inside).max()))
    return mismatch


def saddle_pair_closed_form(params, torus):
    """Pair ``(A, beta)`` of the saddle evaluated from formulas.

    ``beta = cos^2(theta) alpha_1 + sin^2(theta) alpha_2`` and
    ``A = cos(theta) sin(theta) W (x) (alpha_1 - alpha_2)``, where the unit
    vector field ``W`` satisfies
    ``W . phi = omega . (sin(theta) u_1 - cos(theta) u_2)``.

    :return: ``(A, beta)`` arrays in frame components.
    """
    C, S = math.cos(params.theta), math.sin(params.theta)
    a1 = _frame_covector(params.alpha1, torus)
    a2 = _frame_covector(params.alpha2, torus)
    u1 = _wave(_phase(params.alpha1, torus), PSI1)
    u2 = _wave(_phase(params.alpha2, torus), PSI2)
    phi = C * u1 + S * u2
    image = left_k(S * u1 - C * u2)
    W = np.stack([qdot(image, left_i(phi)), qdot(image, left_j(phi))], axis=-1)
    A = C * S * W[..., :, None] * (a1 - a2)[None, None, None, :]
    beta = np.broadcast_to(C * C * a1 + S * S * a2, phi.shape[:2] + (2,))
    return A, np.array(beta)


def saddle_gradient_closed_form(params, torus):
    """``(Q1, Q2)`` of the (pre-critical) saddle family from formulas:
    ``Q1 = 1/2 (cos^2(theta) alpha_1 (x) alpha_1 + sin^2(theta) alpha_2 (x)
    alpha_2)_0`` and ``Q2 = -|alpha_1|^2 cos(theta) u_1 - |alpha_2|^2
    sin(theta) u_2 + (cos^2(theta) |alpha_1|^2 + sin^2(theta) |alpha_2|^2) phi``.
    """
    C, S = math.cos(params.theta), math.sin(params.theta)
    a1 = _frame_covector(params.alpha1, torus)
    a2 = _frame_covector(params.alpha2, torus)
    P = C * C * np.outer(a1, a1) + S * S * np.outer(a2, a2)
    Q1 = 0.5 * (P - 0.5 * np.trace(P) * np.eye(2))
    u1 = _wave(_phase(params.alpha1, torus), PSI1)
    u2 = _wave(_phase(params.alpha2, torus), PSI2)
    n1, n2 = a1 @ a1, a2 @ a2
    phi = C * u1 + S * u2
    Q2 = -n1 * C * u1 - n2 * S * u2 + (C * C * n1 + S * S * n2) * phi
    return np.broadcast_to(Q1, phi.shape[:2] + (2, 2)).copy(), Q2


def moduli_energy_closed_form(params, t):
    """``f(t) = cos^2(theta(t)) / (1 + t)^2 + sin^2(theta(t)) (1 + t)^2``."""
    theta = params.theta + params.c * t
    return math.cos(theta) ** 2 / (1.0 + t) ** 2 + math.sin(theta) ** 2 * (1.0 + t) ** 2


def moduli_energy_curve(params, t, torus):
    """Closed form and discrete energy along the flat moduli family.

    The saddle with angle ``theta(t)`` is rebuilt on ``torus`` and measured
    with the deformed metric ``G_t``.

    :return: ``(f_closed, E_discrete)``; ``E_discrete ~ pi^2 f_closed``.
    """
    phi = build_saddle(params.at(t), torus)
    deformed = phi.with_metric(torus.metric.deformed(t))
    return moduli_energy_closed_form(params, t), energy(deformed)


def moduli_second_derivative(params, steps=(1e-2, 1e-3), discrete=False,
                             torus=None):
    """Richardson extrapolated ``f''(0)`` from central second differences.

    :param bool discrete: Differentiate the discrete energy divided by
        ``pi^2`` instead of the closed form; needs ``torus``.
    """
    if discrete:
        if torus is None:
            raise ValueError('discrete second derivative needs a torus')

        def f(t):
            return moduli_energy_curve(params, t, torus)[1] / math.pi ** 2
    else:
        def f(t):
            return moduli_energy_closed_form(params, t)

    f0 = f(0.0)
    coarse, fine = steps
    estimates = [(f(h) - 2.0 * f0 + f(-h)) / (h * h) for h in (coarse, fine)]
    ratio = (coarse / fine) ** 2
    return (ratio * estimates[1] - estimates[0]) / (ratio - 1.0)


def twistor_closed_form_check(params, tolerance=1e-12):
    """Closed form verification for a twistor spinor on the round sphere of
    curvature ``K = 4 (a^2 + b^2)``.

    :return: :class:`CheckReport`; verdict ``'sphere'`` or
        ``'parallel, not sphere'`` when ``a = b = 0``.
    """
    a, b = float(params.a), float(params.b)
    report = CheckReport('twistor', values={
        'a': a, 'b': b, 'K': params.K, 'killing_number': params.killing_number,
    })
    if a == 0.0 and b == 0.0:
        report.verdict = 'parallel, not sphere'
        report.values['energy'] = 0.0
        return report

    K = params.K
    A = a * np.eye(2) + b * np.array([[0.0, -1.0], [1.0, 0.0]])
    P = A.T @ A
    traceless = P - 0.5 * np.trace(P) * np.eye(2)
    density = float(np.sum(A ** 2))
    area = 4.0 * math.pi / K
    E = 0.5 * density * area

    report.add('traceless_part', np.abs(traceless).max(), tolerance)
    report.add('density_half_curvature', abs(density - K / 2.0), tolerance)
    report.add('curvature_equality', abs(2.0 * density - abs(K)), tolerance)
    report.add('energy_pi', abs(E - math.pi), tolerance)
    report.add('det_quarter_curvature', abs(np.linalg.det(A) - K / 4.0), tolerance)

    orbit = []
    for angle in np.linspace(0.0, math.pi, 7):
        rotated = params.rotated(angle)
        B = rotated.a * np.eye(2) + rotated.b * np.array([[0.0, -1.0], [1.0, 0.0]])
        orbit.append(abs(0.5 * float(np.sum(B ** 2)) * 4.0 * math.pi / rotated.K
                         - E))
    report.add('circle_orbit_energy', max(orbit), tolerance)
    report.values['energy'] = E
    report.verdict = 'sphere'
    return report


def _sup(values):
    return float(np.abs(values).max())


def classify_flat_critical(pair, tol):
    """Classify a numerically critical pair on a flat torus.

    Checks that ``beta`` is parallel, that ``beta^#`` lies in the kernel of
    ``A``, that ``|A| = |beta|`` and that the image of ``A`` rotates at unit
    speed, ``dA(e1, e2) = -2 beta(e2) J A(e1) + 2 beta(e1) J A(e2)``.

    :return: :class:`CheckReport` with verdict :data:`ABSOLUTE_MINIMISER`,
        :data:`SADDLE_FAMILY` or :data:`INCONSISTENT`.
    :raises CriticalityError: if the gradient residual exceeds ``tol``.
    """
    phi = pair.spinor
    torus = pair.torus
    gradient = neg_gradient_pair(pair)
    residual = max(_sup(gradient.Q1), _sup(gradient.Q2))
    _failures.require_critical(residual, tol)

    report = CheckReport('flat critical point', values={
        'gradient_residual': residual,
        'energy': energy(phi),
    })
    A, beta = pair.A, pair.beta
    report.add('beta_parallel',
               max(_sup(pair.nabla_beta(0)), _sup(pair.nabla_beta(1))), tol)
    report.add('beta_in_kernel',
               _sup(np.einsum('...ij,...j->...i', A, beta)), tol)
    report.add('equal_norms',
               _sup(np.sum(A ** 2, axis=(-2, -1)) - np.sum(beta ** 2, axis=-1)),
               tol)

    dA = torus.nabla(A[..., :, 1], 0) - torus.nabla(A[..., :, 0], 1)
    rhs = -2.0 * beta[..., 1, None] * rotate_j(A[..., :, 0]) \
        + 2.0 * beta[..., 0, None] * rotate_j(A[..., :, 1])
    report.add('rotating_image', _sup(dA - rhs), tol)

    if _sup(A) <= tol and _sup(beta) <= tol:
        report.verdict = ABSOLUTE_MINIMISER
    elif report.passed:
        report.verdict = SADDLE_FAMILY
    else:
        report.verdict = INCONSISTENT
    logger.info('classified flat critical point as %s (residual %.3e)',
                report.verdict, residual)
    return report


def tt_predicate(pair, tol=1e-6):
    """True iff ``beta = 0`` and ``A`` is a traceless, symmetric,
    divergence-free tensor within ``tol``."""
    A = pair.A
    return (_sup(pair.beta) <= tol
            and _sup(A[..., 0, 0] + A[..., 1, 1]) <= tol
            and _sup(A[..., 0, 1] - A[..., 1, 0]) <= tol
            and _sup(pair.divergence_A()) <= tol)


def saddle_gradient_residuals(params, torus):
    """``(|Q1|_inf, |Q2|_inf, |Q2|_L2)`` of the discrete saddle."""
    phi = build_saddle(params, torus)
    gradient = neg_gradient_general(phi)
    return _sup(gradient.Q1), _sup(gradient.Q2), gradient_norm(phi, gradient.Q2)
