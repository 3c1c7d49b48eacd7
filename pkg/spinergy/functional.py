"""The spinorial energy, its negative gradient and the identities it satisfies.

A unit spinor ``phi`` on a flat torus has covariant derivative

    nabla_X phi = A(X) . phi + beta(X) omega . phi

for an endomorphism field ``A`` and a 1-form ``beta`` (the *pair* of
``phi``). The energy is ``E(g, phi) = 1/2 int |nabla phi|^2``. Its negative
gradient ``(Q1, Q2)`` is computed twice: once from the general tensor formula
and once from the pair. The two agree up to discretization error and are
cross-checked in the test suite and by ``spinergy verify``.

Discrete conventions: all second derivatives are squares of the first
derivative stencil, which makes ``Q2`` the exact gradient of the discrete
energy. Frame quantities are in the orthonormal frame of
:func:`spinergy.geometry.covariant_frame`.
"""
import logging
from collections import namedtuple
from functools import cached_property

import numpy as np

from spinergy.algebra import clifford_mul, left_i, left_j, left_k, qdot, \
    qnorm, right_mul, rotate_j
from spinergy.errors import ErrorMessagesMixin, SpinorError
from spinergy.geometry import hodge_decompose, hodge_star_1form


__all__ = [
    'SpinorField',
    'PairField',
    'GradientPair',
    'UNIT_TOLERANCE',
    'random_spinor',
    'pair_from_spinor',
    'energy',
    'energy_density',
    'pointwise_pair_norm',
    'dirac',
    'dirac_from_pair',
    'neg_gradient_general',
    'neg_gradient_pair',
    'neg_gradient_spinor',
    'gradient_norm',
    'trace_q1_identity',
    'curvature_identity',
    'integrability_residual',
    'dirac_square_identity',
    'global_weitzenboeck_residual',
    'circle_action_residual',
    'sp1_invariance_residual',
    'conformal_beta',
    'conformal_minimise',
    'rescaling_check',
    'directional_derivative_spinor',
    'directional_derivative_metric',
    'identity_suite',
]

logger = logging.getLogger(__name__)

#: Largest deviation from unit length that is silently normalized away.
UNIT_TOLERANCE = 1e-6

J_MATRIX = np.array([[0.0, -1.0], [1.0, 0.0]])


class SpinorField(ErrorMessagesMixin, object):
    """Quaternion valued spinor field sampled on a flat torus.

    :param values: Array ``(N, N, 4)``.
    :param torus: :class:`~spinergy.geometry.FlatTorus` carrying the twist.
    :param bool unit: If True (default), the field is a unit spinor: values
        within :data:`UNIT_TOLERANCE` of unit length are normalized, anything
        else raises :exc:`~spinergy.errors.SpinorError`. Set to False for
        general sections such as variations, gradients or ``D phi``.
    """

    error_class = SpinorError
    default_error_messages = {
        'not_unit': 'spinor not unit length (max deviation {deviation:.3e})',
        'shape': 'spinor values must have shape ({N}, {N}, 4), got {shape}',
    }

    def __init__(self, values, torus, unit=True, **kwargs):
        super(SpinorField, self).__init__(**kwargs)
        values = np.array(values, dtype=float)
        N = torus.N
        if values.shape != (N, N, 4):
            self._fail('shape', N=N, shape=values.shape)
        if unit:
            norms = qnorm(values)
            deviation = float(np.abs(norms - 1.0).max())
            if deviation > UNIT_TOLERANCE:
                self._fail('not_unit', deviation=deviation)
            values = values / norms[..., None]
        values.setflags(write=False)
        self.values = values
        self.torus = torus
        self.unit = unit

    def require_unit(self):
        if not self.unit:
            deviation = float(np.abs(qnorm(self.values) - 1.0).max())
            if deviation > UNIT_TOLERANCE:
                self._fail('not_unit', deviation=deviation)
        return self

    @cached_property
    def nabla(self):
        """Frame derivatives ``(nabla_{e_1} phi, nabla_{e_2} phi)`` stacked
        on a new leading axis."""
        return np.stack([self.torus.nabla(self.values, i, twisted=True)
                         for i in (0, 1)])

    def with_metric(self, metric):
        return SpinorField(self.values, self.torus.with_metric(metric),
                           unit=self.unit)

    def with_values(self, values, unit=None):
        return SpinorField(values, self.torus,
                           unit=self.unit if unit is None else unit)

    def normalized(self):
        return SpinorField(self.values / qnorm(self.values)[..., None],
                           self.torus)

    def right_multiply(self, c):
        return self.with_values(right_mul(self.values, c))

    def circle_rotate(self, angle):
        """``cos(angle) phi + sin(angle) omega . phi``."""
        return self.with_values(np.cos(angle) * self.values
                                + np.sin(angle) * left_k(self.values))

    def __repr__(self):
        return '<{klass} N={N} chi={chi} unit={unit}>'.format(
            klass=self.__class__.__name__, N=self.torus.N,
            chi=tuple(self.torus.character), unit=self.unit,
        )


def random_spinor(torus, rng, modes=6, max_frequency=1, min_norm=0.1,
                  max_attempts=100):
    """Smooth random unit spinor built from a few twisted Fourier modes.

    Frequencies are shifted by one half in every direction where the spin
    character is -1, so each mode has the right twist. Draws whose pointwise
    norm gets below ``min_norm`` before normalization are discarded.
    """
    s1, s2 = torus.grid.coordinates()
    offsets = [0.0 if chi == 1 else 0.5 for chi in torus.character]
    frequencies = np.arange(-max_frequency, max_frequency + 1)
    for attempt in range(max_attempts):
        values = np.zeros(s1.shape + (4,))
        for _ in range(modes):
            m1, m2 = rng.choice(frequencies, size=2)
            phase = 2.0 * np.pi * ((m1 + offsets[0]) * s1 + (m2 + offsets[1]) * s2)
            values += np.cos(phase)[..., None] * rng.standard_normal(4)
            values += np.sin(phase)[..., None] * rng.standard_normal(4)
        norms = qnorm(values)
        if norms.min() >= min_norm:
            return SpinorField(values / norms[..., None], torus)
        logger.debug('random spinor draw %d rejected (min norm %.3e)',
                     attempt, norms.min())
    raise SpinorError('could not draw a random spinor without near zeros')


GradientPair = namedtuple('GradientPair', ['Q1', 'Q2'])


class PairField(object):
    """Pair ``(A, beta)`` of a unit spinor.

    :param A: Endomorphism field ``(N, N, 2, 2)``, ``A[..., k, i]`` the
        ``e_k`` component of ``A(e_i)``.
    :param beta: Covector field ``(N, N, 2)``.
    :param spinor: The :class:`SpinorField` the pair was taken from.
    """

    def __init__(self, A, beta, spinor):
        self.A = np.asarray(A, dtype=float)
        self.beta = np.asarray(beta, dtype=float)
        self.spinor = spinor

    @property
    def torus(self):
        return self.spinor.torus

    def nabla_A(self, i):
        return self.torus.nabla(self.A, i)

    def nabla_beta(self, i):
        return self.torus.nabla(self.beta, i)

    def norm_squared(self):
        """``|A|^2 + |beta|^2`` pointwise."""
        return np.sum(self.A ** 2, axis=(-2, -1)) + np.sum(self.beta ** 2, axis=-1)

    def reconstruct(self):
        """``A(e_i) . phi + beta(e_i) omega . phi`` for ``i = 1, 2``."""
        phi = self.spinor.values
        omega_phi = left_k(phi)
        return np.stack([
            clifford_mul(self.A[..., :, i], phi)
            + self.beta[..., i, None] * omega_phi
            for i in (0, 1)
        ])

    def reconstruction_residual(self):
        return float(np.abs(self.reconstruct() - self.spinor.nabla).max())

    def divergence_A(self):
        """``(div A)_m = -sum_k (nabla_{e_k} A)_{mk}``."""
        return -(self.nabla_A(0)[..., :, 0] + self.nabla_A(1)[..., :, 1])

    def divergence_beta(self):
        return self.torus.divergence(self.beta)

    def nabla_j_beta(self):
        """``M[x, y] = (nabla_{J e_x} beta)(e_y)``."""
        return np.stack([self.nabla_beta(1), -self.nabla_beta(0)], axis=-2)

    def __repr__(self):
        return '<{klass} N={N}>'.format(klass=self.__class__.__name__,
                                        N=self.torus.N)


def pair_from_spinor(phi):
    """Extract ``A_{ki} = <nabla_{e_i} phi, e_k . phi>`` and
    ``beta(e_i) = <nabla_{e_i} phi, omega . phi>``.

    :raises SpinorError: if ``phi`` is not a unit spinor.
    """
    phi.require_unit()
    grads = phi.nabla
    values = phi.values
    frame_images = (left_i(values), left_j(values))
    omega_phi = left_k(values)
    A = np.empty(values.shape[:2] + (2, 2))
    beta = np.empty(values.shape[:2] + (2,))
    for i in (0, 1):
        for k in (0, 1):
            A[..., k, i] = qdot(grads[i], frame_images[k])
        beta[..., i] = qdot(grads[i], omega_phi)
    return PairField(A, beta, phi)


def energy_density(phi):
    """``|nabla phi|^2`` pointwise."""
    return np.sum(phi.nabla ** 2, axis=(0, -1))


def pointwise_pair_norm(pair):
    """``|A|^2 + |beta|^2``, which equals ``|nabla phi|^2`` pointwise."""
    return pair.norm_squared()


def energy(phi):
    """``1/2 int |nabla phi|^2 dv``."""
    return 0.5 * float(phi.torus.integrate(energy_density(phi)))


def dirac(phi):
    """``D phi = e_1 . nabla_{e_1} phi + e_2 . nabla_{e_2} phi``, an array
    ``(N, N, 4)`` with the twist of ``phi``."""
    grads = phi.nabla
    return left_i(grads[0]) + left_j(grads[1])


def dirac_from_pair(pair):
    """Dirac operator from the pair of ``phi``.

    In the left multiplication model (``X . X = -|X|^2``) this reads
    ``D phi = -(Tr A phi + Tr(A J) omega . phi - (beta o J)^# . phi)``.
    """
    phi = pair.spinor.values
    A = pair.A
    trace = A[..., 0, 0] + A[..., 1, 1]
    trace_j = A[..., 0, 1] - A[..., 1, 0]
    beta_j = np.stack([pair.beta[..., 1], -pair.beta[..., 0]], axis=-1)
    return -(trace[..., None] * phi + trace_j[..., None] * left_k(phi)
             - clifford_mul(beta_j, phi))


def _project(Q2, phi):
    return Q2 - qdot(Q2, phi)[..., None] * phi


def neg_gradient_general(phi):
    """Negative gradient from the tensor formulas

    ``Q1 = -1/4 |nabla phi|^2 g - 1/4 div T + 1/2 <nabla phi (x) nabla phi>``
    with ``T(X, Y, Z)`` the symmetrisation in ``Y, Z`` of
    ``<(X ^ Y) . phi, nabla_Z phi>``, and ``Q2 = -nabla* nabla phi +
    |nabla phi|^2 phi`` projected onto the orthogonal complement of ``phi``.
    """
    phi.require_unit()
    torus = phi.torus
    values = phi.values
    grads = phi.nabla

    S = np.empty(values.shape[:2] + (2, 2))
    for a in (0, 1):
        for b in (0, 1):
            S[..., a, b] = qdot(grads[a], grads[b])
    density = S[..., 0, 0] + S[..., 1, 1]

    bivectors = {
        (0, 1): left_i(left_j(values)),
        (1, 0): left_j(left_i(values)),
    }
    t = np.zeros(values.shape[:2] + (2, 2, 2))
    for (a, b), image in bivectors.items():
        for c in (0, 1):
            t[..., a, b, c] = qdot(image, grads[c])
    T = 0.5 * (t + np.swapaxes(t, -1, -2))
    div_T = -(torus.nabla(T[..., 0, :, :], 0) + torus.nabla(T[..., 1, :, :], 1))

    Q1 = -0.25 * density[..., None, None] * np.eye(2) - 0.25 * div_T + 0.5 * S

    return GradientPair(Q1, neg_gradient_spinor(phi))


def neg_gradient_spinor(phi):
    """Spinor part ``Q2 = -nabla* nabla phi + |nabla phi|^2 phi``, projected
    onto the orthogonal complement of ``phi``."""
    torus = phi.torus
    values = phi.values
    grads = phi.nabla
    density = np.sum(grads ** 2, axis=(0, -1))
    rough = torus.nabla(grads[0], 0, twisted=True) \
        + torus.nabla(grads[1], 1, twisted=True)
    return _project(rough + density[..., None] * values, values)


def neg_gradient_pair(pair, phi=None):
    """Negative gradient from the pair:

    ``Q1 = -1/4 (nabla_{J.} beta)^sym + 1/2 (A^t A + beta (x) beta)_0`` and
    ``Q2 = -(div A) . phi - (div beta) omega . phi``.
    """
    phi = pair.spinor if phi is None else phi
    values = phi.values
    A, beta = pair.A, pair.beta

    M = pair.nabla_j_beta()
    M_sym = 0.5 * (M + np.swapaxes(M, -1, -2))
    P = np.einsum('...ki,...kj->...ij', A, A) + beta[..., :, None] * beta[..., None, :]
    P0 = P - 0.5 * (P[..., 0, 0] + P[..., 1, 1])[..., None, None] * np.eye(2)
    Q1 = -0.25 * M_sym + 0.5 * P0

    Q2 = -clifford_mul(pair.divergence_A(), values) \
        - pair.divergence_beta()[..., None] * left_k(values)
    return GradientPair(Q1, _project(Q2, values))


def gradient_norm(phi, Q2=None):
    """L2 norm of ``Q2``."""
    if Q2 is None:
        Q2 = neg_gradient_pair(pair_from_spinor(phi)).Q2
    return float(np.sqrt(phi.torus.integrate(np.sum(Q2 ** 2, axis=-1))))


def _max(values):
    return float(np.abs(values).max())


def trace_q1_identity(phi):
    """``max |Tr Q1 - 1/4 *d beta|``."""
    Q1 = neg_gradient_general(phi).Q1
    star_d_beta = phi.torus.exterior_derivative(pair_from_spinor(phi).beta)
    return _max(Q1[..., 0, 0] + Q1[..., 1, 1] - 0.25 * star_d_beta)


def _divergence_2tensor(torus, M):
    """``(div M)(Y) = -sum_k (nabla_{e_k} M)(e_k, Y)``."""
    return -(torus.nabla(M[..., 0, :], 0) + torus.nabla(M[..., 1, :], 1))


def curvature_identity(phi, curvature=None):
    """Residuals of ``K = 4 det A - 2 *d beta`` and
    ``K *beta = div nabla_{J.} beta``.

    :param curvature: Gauss curvature field; flat tori store zeros.
    :return: tuple of the two sup-norm residuals.
    """
    pair = pair_from_spinor(phi)
    torus = phi.torus
    K = np.zeros(phi.values.shape[:2]) if curvature is None else curvature
    det_A = np.linalg.det(pair.A)
    first = K - 4.0 * det_A + 2.0 * torus.exterior_derivative(pair.beta)
    second = K[..., None] * hodge_star_1form(pair.beta) \
        - _divergence_2tensor(torus, pair.nabla_j_beta())
    return _max(first), _max(second)


def integrability_residual(pair):
    """``max |div(A o J) + 2 (J o A o J)(beta^#)|``."""
    AJ = pair.A @ J_MATRIX
    torus = pair.torus
    div_AJ = -(torus.nabla(AJ[..., :, 0], 0) + torus.nabla(AJ[..., :, 1], 1))
    JAJ_beta = rotate_j(np.einsum('...ij,...j->...i', pair.A,
                                  rotate_j(pair.beta)))
    return _max(div_AJ + 2.0 * JAJ_beta)


def dirac_square_identity(phi):
    """``max |<D^2 phi, phi> - |D phi|^2 + *d beta|``."""
    phi.require_unit()
    D_phi = dirac(phi)
    D2_phi = dirac(phi.with_values(D_phi, unit=False))
    star_d_beta = phi.torus.exterior_derivative(pair_from_spinor(phi).beta)
    return _max(qdot(D2_phi, phi.values) - qdot(D_phi, D_phi) + star_d_beta)


def global_weitzenboeck_residual(phi, curvature=None):
    """``|int |D phi|^2 - int |nabla phi|^2 - 1/2 int K|``."""
    torus = phi.torus
    D_phi = dirac(phi)
    K = 0.0 if curvature is None else torus.integrate(curvature)
    return abs(float(torus.integrate(qdot(D_phi, D_phi)))
               - 2.0 * energy(phi) - 0.5 * K)


def circle_action_residual(phi, angle):
    """Pointwise and energy residuals of the circle action
    ``phi -> cos(angle) phi + sin(angle) omega . phi``.
    """
    rotated = phi.circle_rotate(angle)
    D_phi, D_rotated = dirac(phi), dirac(rotated)
    pointwise = _max(qdot(D_rotated, D_rotated) - qdot(D_phi, D_phi))
    return pointwise, abs(energy(rotated) - energy(phi))


def sp1_invariance_residual(phi, c):
    """``|E(phi c) - E(phi)|`` for a unit quaternion ``c``."""
    return abs(energy(phi.right_multiply(c)) - energy(phi))


def conformal_beta(beta, u, torus):
    """1-form part of the pair after the conformal change ``e^{2u} g``:
    ``beta - 1/2 *du``."""
    return beta - 0.5 * hodge_star_1form(torus.gradient(u))


def conformal_minimise(beta, torus):
    """Conformal factor making the 1-form part of the pair closed.

    ``u`` is twice the coexact potential of ``beta``; the returned
    ``beta_tilde = beta - 1/2 *du`` keeps the harmonic and exact parts.

    :return: ``(u, beta_tilde)``
    """
    decomposition = hodge_decompose(beta, torus)
    u = 2.0 * decomposition.coexact_potential
    beta_tilde = conformal_beta(beta, u, torus)
    logger.debug('conformal minimiser: |*d beta_tilde| = %.3e',
                 _max(torus.exterior_derivative(beta_tilde)))
    return u, beta_tilde


def rescaling_check(phi, c):
    """``|E(c^2 g, phi) - E(g, phi)|``; zero in dimension two."""
    if c <= 0:
        raise ValueError('scale factor must be positive, got %r' % c)
    return abs(energy(phi.with_metric(phi.torus.metric.scaled(c))) - energy(phi))


def _richardson(derivative, eps):
    return (4.0 * derivative(0.5 * eps) - derivative(eps)) / 3.0


def directional_derivative_spinor(phi, psi, eps=1e-3):
    """Compare the derivative of the energy along ``psi`` (projected to be
    pointwise orthogonal to ``phi``) with ``-int <Q2, psi>``.

    :return: ``(finite_difference, predicted)``
    """
    values = phi.values
    direction = _project(np.asarray(psi, dtype=float), values)

    def normalized_energy(scale):
        moved = values + scale * direction
        return energy(phi.with_values(moved / qnorm(moved)[..., None], unit=True))

    def central(step):
        return (normalized_energy(step) - normalized_energy(-step)) / (2.0 * step)

    Q2 = neg_gradient_general(phi).Q2
    predicted = -float(phi.torus.integrate(qdot(Q2, direction)))
    return _richardson(central, eps), predicted


def directional_derivative_metric(phi, eps=1e-3):
    """Compare the derivative of the energy along the area preserving
    deformation of the metric with ``-int <Q1, dg/dt>``.

    :return: ``(finite_difference, predicted)``
    """
    metric = phi.torus.metric

    def central(step):
        return (energy(phi.with_metric(metric.deformed(step)))
                - energy(phi.with_metric(metric.deformed(-step)))) / (2.0 * step)

    E = phi.torus.frame
    g_dot = E.T @ metric.deformation_velocity() @ E
    Q1 = neg_gradient_general(phi).Q1
    predicted = -float(phi.torus.integrate(np.sum(Q1 * g_dot, axis=(-2, -1))))
    return _richardson(central, eps), predicted


def identity_suite(phi):
    """Residuals of every identity that holds for all unit spinors.

    Keys are stable names used in reports and CSV files.
    """
    pair = pair_from_spinor(phi)
    general = neg_gradient_general(phi)
    from_pair = neg_gradient_pair(pair)
    two_path = max(_max(general.Q1 - from_pair.Q1), _max(general.Q2 - from_pair.Q2))
    curvature_first, curvature_second = curvature_identity(phi)
    return {
        'gradient_two_path': two_path,
        'trace_q1': trace_q1_identity(phi),
        'dirac_square': dirac_square_identity(phi),
        'gauss_curvature': curvature_first,
        'curvature_divergence': curvature_second,
        'integrability': integrability_residual(pair),
        'weitzenboeck': global_weitzenboeck_residual(phi),
        'rescaling': rescaling_check(phi, 2.0),
        'circle_action': max(circle_action_residual(phi, 0.7)),
    }
