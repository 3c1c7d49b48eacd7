"""Willmore energies of explicit surfaces and the spinorial Weierstrass map.

Surfaces of revolution around the ``x1`` axis are given by unit speed profile
curves ``u -> (gamma1(u), gamma2(u))`` with ``gamma2 > 0``. With
``kappa = gamma1' gamma2'' - gamma2' gamma1''`` the mean curvature is
``H = (kappa - gamma1' / gamma2) / 2`` (catenoids are minimal) and the
Willmore energy ``1/2 int H^2 dA`` becomes ``pi int H^2 gamma2 du``.

The Weierstrass part integrates the ``R^3`` valued 1-form
``xi(X) = Im(conj(phi) (JX) . phi)`` of a unit spinor on a flat torus. It is
isometric, does not see the sign of ``phi`` and is closed exactly when
``D phi = H phi`` for a real function ``H``.
"""
import logging
import math
from collections import namedtuple

import numpy as np
import scipy.integrate
from numpy.polynomial.legendre import leggauss

from spinergy.algebra import left_i, left_j, qconj, qdot, qmul
from spinergy.errors import ErrorMessagesMixin, IntegrabilityError, \
    ProfileError
from spinergy.functional import dirac
from spinergy.utils import atomic_write


__all__ = [
    'ProfilePiece',
    'ProfileCurve',
    'RevolutionSurface',
    'ImmersionResult',
    'MeanCurvature',
    'catenoid_piece',
    'arc_piece',
    'line_piece',
    'handle_profile',
    'straight_profile',
    'willmore_revolution',
    'handle_willmore_bound',
    'handle_length_for',
    'handle_neck_distance',
    'handle_neck_identity_residual',
    'willmore_product_torus',
    'almost_minimiser_energy',
    'weierstrass_form',
    'closedness_residual',
    'weierstrass_integrate',
    'mean_curvature_from_spinor',
    'write_obj',
]

logger = logging.getLogger(__name__)


class ProfilePiece(namedtuple('ProfilePiece', ['name', 'start', 'end',
                                               'position', 'velocity',
                                               'acceleration'])):
    """Smooth piece of a profile curve on ``[start, end]``.

    ``position``, ``velocity`` and ``acceleration`` map an array of
    parameters to arrays of shape ``(..., 2)``.
    """

    __slots__ = ()

    @property
    def length(self):
        return self.end - self.start


def catenoid_piece(start, end):
    """``u -> (arsinh(u), sqrt(1 + u^2))``."""
    def position(u):
        u = np.asarray(u, dtype=float)
        return np.stack([np.arcsinh(u), np.sqrt(1.0 + u * u)], axis=-1)

    def velocity(u):
        u = np.asarray(u, dtype=float)
        s = np.sqrt(1.0 + u * u)
        return np.stack([1.0 / s, u / s], axis=-1)

    def acceleration(u):
        u = np.asarray(u, dtype=float)
        s3 = (1.0 + u * u) ** 1.5
        return np.stack([-u / s3, 1.0 / s3], axis=-1)

    return ProfilePiece('catenoid', float(start), float(end), position,
                        velocity, acceleration)


def arc_piece(start, end, center, radius, phase):
    """Counterclockwise circle ``center + R (cos t, sin t)`` with
    ``t = (u - start) / R + phase``."""
    center = np.asarray(center, dtype=float)

    def angle(u):
        return (np.asarray(u, dtype=float) - start) / radius + phase

    def position(u):
        t = angle(u)
        return center + radius * np.stack([np.cos(t), np.sin(t)], axis=-1)

    def velocity(u):
        t = angle(u)
        return np.stack([-np.sin(t), np.cos(t)], axis=-1)

    def acceleration(u):
        t = angle(u)
        return np.stack([-np.cos(t), -np.sin(t)], axis=-1) / radius

    return ProfilePiece('arc', float(start), float(end), position, velocity,
                        acceleration)


def line_piece(start, end, origin, direction):
    """Straight unit speed piece ``origin + (u - start) direction``."""
    origin = np.asarray(origin, dtype=float)
    direction = np.asarray(direction, dtype=float)
    direction = direction / np.linalg.norm(direction)

    def position(u):
        u = np.asarray(u, dtype=float)
        return origin + (u - start)[..., None] * direction

    def velocity(u):
        u = np.asarray(u, dtype=float)
        return np.broadcast_to(direction, u.shape + (2,)).copy()

    def acceleration(u):
        u = np.asarray(u, dtype=float)
        return np.zeros(u.shape + (2,))

    return ProfilePiece('line', float(start), float(end), position, velocity,
                        acceleration)


class ProfileCurve(ErrorMessagesMixin, object):
    """Piecewise smooth unit speed curve in the half plane ``gamma2 > 0``.

    :param list pieces: Consecutive :class:`ProfilePiece` objects.
    :param float L: Handle parameter, if the curve is a handle profile.
    :param float truncation_radius: Largest distance from the axis kept when
        the surface is cut off, if any.
    """

    error_class = ProfileError
    default_error_messages = {
        'empty': 'profile needs at least one piece',
        'gap': 'profile pieces are not consecutive at u={u!r}',
        'axis': 'profile crosses the axis of revolution (min gamma2 {value:.3g})',
    }

    def __init__(self, pieces, L=None, truncation_radius=None, **kwargs):
        super(ProfileCurve, self).__init__(**kwargs)
        pieces = list(pieces)
        if not pieces:
            self._fail('empty')
        for left, right in zip(pieces, pieces[1:]):
            if abs(left.end - right.start) > 1e-12 * max(1.0, abs(left.end)):
                self._fail('gap', u=left.end)
        self.pieces = pieces
        self.L = L
        self.truncation_radius = truncation_radius
        lowest = min(float(piece.position(np.linspace(piece.start, piece.end, 65))[:, 1].min())
                     for piece in pieces)
        if lowest <= 0.0:
            self._fail('axis', value=lowest)

    @property
    def breakpoints(self):
        return [self.pieces[0].start] + [piece.end for piece in self.pieces]

    @property
    def length(self):
        return self.breakpoints[-1] - self.breakpoints[0]

    def piece_at(self, u):
        for piece in self.pieces:
            if piece.start <= u <= piece.end:
                return piece
        raise ValueError('parameter %r outside of the profile' % u)

    def sample(self, count):
        """Positions and velocities at ``count`` points per piece."""
        positions, velocities = [], []
        for piece in self.pieces:
            u = np.linspace(piece.start, piece.end, count)
            positions.append(piece.position(u))
            velocities.append(piece.velocity(u))
        return np.concatenate(positions), np.concatenate(velocities)

    def unit_speed_residual(self, samples=10000):
        count = max(2, samples // len(self.pieces))
        _, velocities = self.sample(count)
        return float(np.abs(np.linalg.norm(velocities, axis=-1) - 1.0).max())

    def matching_residuals(self):
        """Position and tangent jumps at the interior breakpoints."""
        jumps = []
        for left, right in zip(self.pieces, self.pieces[1:]):
            u = left.end
            jumps.append((
                float(np.linalg.norm(left.position(u) - right.position(u))),
                float(np.linalg.norm(left.velocity(u) - right.velocity(u))),
            ))
        return jumps

    def __repr__(self):
        return '<{klass} pieces={pieces} L={L!r}>'.format(
            klass=self.__class__.__name__,
            pieces=[piece.name for piece in self.pieces], L=self.L,
        )


def _handle_constants(L):
    if L <= 0:
        raise ProfileError('handle parameter must be positive, got %r' % (L,))
    root = math.sqrt(1.0 + L * L)
    a = math.asinh(L) - L * root
    b = 2.0 * root
    R = 1.0 + L * L
    alpha = math.asin(1.0 / root)
    return a, b, R, alpha


def handle_profile(L):
    """Catenoid neck, circular arc and flat annulus, C^1 at the joins.

    The flat piece runs out to distance ``2 b`` from the axis, where the
    handle is cut off.
    """
    a, b, R, alpha = _handle_constants(L)
    arc_end = L + alpha * R
    pieces = [
        catenoid_piece(0.0, L),
        arc_piece(L, arc_end, (a, b), R, -alpha),
        line_piece(arc_end, arc_end + b, (a + R, b), (0.0, 1.0)),
    ]
    return ProfileCurve(pieces, L=L, truncation_radius=2.0 * b)


def straight_profile(length, height):
    """Segment parallel to the axis: a round cylinder of the given radius."""
    if length <= 0 or height <= 0:
        raise ProfileError('cylinder needs positive length and radius, got '
                           '%r, %r' % (length, height))
    return ProfileCurve([line_piece(0.0, length, (0.0, height), (1.0, 0.0))])


class RevolutionSurface(object):
    """Surface of revolution of a profile around the ``x1`` axis.

    :param ProfileCurve profile: Generating curve.
    :param bool doubled: Reflect the surface in the plane ``x1 = 0`` as well.
    """

    def __init__(self, profile, doubled=False):
        self.profile = profile
        self.doubled = doubled

    @property
    def copies(self):
        return 2 if self.doubled else 1

    def area(self, nodes=32):
        return self.copies * _integrate(
            self.profile, lambda piece, u: 2.0 * np.pi * piece.position(u)[..., 1],
            nodes)

    def willmore(self, nodes=32):
        return willmore_revolution(self, nodes)

    def __repr__(self):
        return '<{klass} {profile!r} doubled={doubled}>'.format(
            klass=self.__class__.__name__, profile=self.profile,
            doubled=self.doubled,
        )


def _gauss_legendre(f, start, end, nodes, panels):
    x, w = leggauss(nodes)
    edges = np.linspace(start, end, panels + 1)
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        half = 0.5 * (hi - lo)
        total += half * float(np.dot(w, f(lo + half * (x + 1.0))))
    return total


def _integrate(profile, integrand, nodes=32, rtol=1e-13, max_panels=256):
    """Composite Gauss-Legendre quadrature over every piece, doubling the
    panel count until the result settles."""
    total = 0.0
    for piece in profile.pieces:
        def f(u, piece=piece):
            return integrand(piece, u)

        panels = 1
        value = _gauss_legendre(f, piece.start, piece.end, nodes, panels)
        while panels < max_panels:
            refined = _gauss_legendre(f, piece.start, piece.end, nodes, 2 * panels)
            panels *= 2
            settled = abs(refined - value) <= rtol * max(1.0, abs(refined))
            value = refined
            if settled:
                break
        else:
            logger.warning('quadrature on %s piece did not settle with %d panels',
                           piece.name, panels)
        total += value
    return total


def _mean_curvature(piece, u):
    g = piece.position(u)
    v = piece.velocity(u)
    a = piece.acceleration(u)
    kappa = v[..., 0] * a[..., 1] - v[..., 1] * a[..., 0]
    return 0.5 * (kappa - v[..., 0] / g[..., 1])


def willmore_revolution(surface, nodes=32):
    """``1/2 int H^2 dA`` of a surface of revolution by composite
    Gauss-Legendre quadrature on each smooth piece."""
    def integrand(piece, u):
        H = _mean_curvature(piece, u)
        return np.pi * H * H * piece.position(u)[..., 1]

    value = surface.copies * _integrate(surface.profile, integrand, nodes)
    logger.debug('Willmore energy of %r: %.15g', surface, value)
    return value


def handle_willmore_bound(L, doubled=True):
    """``pi / sqrt(1 + L^2)`` per half handle, twice that for a full one."""
    return (2.0 if doubled else 1.0) * math.pi / math.sqrt(1.0 + L * L)


def handle_length_for(epsilon):
    """Smallest integer ``L`` whose doubled handle has
    ``2 pi / sqrt(1 + L^2) < epsilon``."""
    if epsilon <= 0:
        raise ProfileError('energy budget must be positive, got %r' % (epsilon,))
    L = max(1, math.ceil(math.sqrt(max((2.0 * math.pi / epsilon) ** 2 - 1.0, 0.0))))
    while handle_willmore_bound(L) >= epsilon:
        L += 1
    return L


def handle_neck_distance(L):
    """Distance between the flat annuli of the handle rescaled to unit
    radius: ``1/2 (arsinh(L) / sqrt(1 + L^2) + sqrt(1 + L^2) - L)``."""
    if L <= 0:
        raise ProfileError('handle parameter must be positive, got %r' % (L,))
    root = math.sqrt(1.0 + L * L)
    return 0.5 * (math.asinh(L) / root + root - L)


def handle_neck_identity_residual(L):
    """``|2 (a + R) / (2 b) - handle_neck_distance(L)|``."""
    a, b, R, _ = _handle_constants(L)
    return abs(2.0 * (a + R) / (2.0 * b) - handle_neck_distance(L))


def willmore_product_torus(r, delta, nodes=32):
    """Willmore energy of ``S^1_r x S^1_delta``: a round cylinder of radius
    ``r`` and length ``delta``, equal to ``pi delta / (4 r)``."""
    return willmore_revolution(RevolutionSurface(straight_profile(delta, r)), nodes)


def almost_minimiser_energy(gamma, handle_Ls, base_willmore):
    """Energy of the restricted parallel spinor on two tori glued by
    ``gamma - 1`` handles: ``sum 2 pi / sqrt(1 + L_i^2) + W_base +
    pi |gamma - 1|``.

    :raises ProfileError: if the number of handles is not ``gamma - 1``.
    """
    if gamma < 1:
        raise ProfileError('genus must be at least 1, got %r' % (gamma,))
    handle_Ls = list(handle_Ls)
    if len(handle_Ls) != gamma - 1:
        raise ProfileError('handle count mismatch: genus %d needs %d handles, '
                           'got %d' % (gamma, gamma - 1, len(handle_Ls)))
    handles = sum(handle_willmore_bound(L) for L in handle_Ls)
    return handles + base_willmore + math.pi * abs(gamma - 1)


class ImmersionResult(namedtuple('ImmersionResult', [
        'F', 'P1', 'P2', 'closedness_residual', 'path_residual'])):
    __slots__ = ()

    def period_lattice_gram(self):
        P = np.stack([self.P1, self.P2])
        return P @ P.T


MeanCurvature = namedtuple('MeanCurvature', ['H', 'residual', 'verdict'])


def weierstrass_form(phi):
    """Frame components of ``xi``: array ``(N, N, 2, 3)`` holding
    ``xi(e_1)`` and ``xi(e_2)``."""
    values = phi.values
    conj = qconj(values)
    images = (left_j(values), -left_i(values))
    return np.stack([qmul(conj, image)[..., 1:] for image in images], axis=-2)


def _lattice_form(phi):
    """``dF(d/ds_j)`` for ``j = 1, 2``, array ``(N, N, 2, 3)``."""
    xi = weierstrass_form(phi)
    inverse = np.linalg.inv(phi.torus.frame)
    return np.einsum('ij,...ik->...jk', inverse, xi)


def closedness_residual(phi):
    """``max |d/ds_1 dF(d/ds_2) - d/ds_2 dF(d/ds_1)|``."""
    torus = phi.torus
    form = _lattice_form(phi)
    curl = torus.derivative(form[..., 1, :], 0) - torus.derivative(form[..., 0, :], 1)
    return float(np.abs(curl).max())


class _Integrator(ErrorMessagesMixin, object):
    error_class = IntegrabilityError
    default_error_messages = {
        'not_closed': u'spinor not Weierstraß-integrable (Dφ ≠ Hφ): '
                      'closedness residual {residual:.3e}',
    }

    def __call__(self, phi, tol):
        phi.require_unit()
        residual = closedness_residual(phi)
        if residual > tol:
            self._fail('not_closed', residual=residual)

        h = phi.torus.h
        form = _lattice_form(phi)
        # close the loops so the trapezoid rule sees whole periods
        wrap1 = np.concatenate([form, form[:1]], axis=0)
        wrap2 = np.concatenate([form, form[:, :1]], axis=1)
        periods1 = scipy.integrate.trapezoid(wrap1[..., 0, :], dx=h, axis=0)
        periods2 = scipy.integrate.trapezoid(wrap2[..., 1, :], dx=h, axis=1)

        row = scipy.integrate.cumulative_trapezoid(form[:, 0, 0, :], dx=h,
                                                   axis=0, initial=0.0)
        F = row[:, None, :] + scipy.integrate.cumulative_trapezoid(
            form[..., 1, :], dx=h, axis=1, initial=0.0)
        column = scipy.integrate.cumulative_trapezoid(form[0, :, 1, :], dx=h,
                                                      axis=0, initial=0.0)
        G = column[None, :, :] + scipy.integrate.cumulative_trapezoid(
            form[..., 0, :], dx=h, axis=0, initial=0.0)

        spread = max(float(np.abs(periods1 - periods1[0]).max()),
                     float(np.abs(periods2 - periods2[0]).max()))
        path_residual = max(float(np.abs(F - G).max()), spread)
        logger.info('Weierstrass integration: closedness %.3e, path %.3e, '
                    '|P1|=%.12g |P2|=%.12g', residual, path_residual,
                    np.linalg.norm(periods1[0]), np.linalg.norm(periods2[0]))
        return ImmersionResult(F, periods1[0], periods2[0], residual,
                               path_residual)


_integrator = _Integrator()


def weierstrass_integrate(phi, tol=1e-8):
    """Integrate ``xi`` from the origin node along two different paths.

    :returns: :class:`ImmersionResult` with node positions ``F``, the
        periods along the two generators and the residuals.
    :raises IntegrabilityError: if ``xi`` is not closed within ``tol``.
    """
    return _integrator(phi, tol)


def mean_curvature_from_spinor(phi, tol=1e-6):
    """Test ``D phi = H phi`` with real ``H = <D phi, phi>``.

    :returns: :class:`MeanCurvature` with the field ``H``, the residual
        ``max |D phi - H phi|`` and whether it is below ``tol``.
    """
    phi.require_unit()
    D_phi = dirac(phi)
    H = qdot(D_phi, phi.values)
    residual = float(np.abs(D_phi - H[..., None] * phi.values).max())
    return MeanCurvature(H, residual, residual <= tol)


def _closed_vertices(result):
    """Vertices on the closed fundamental domain, ``(N + 1, N + 1, 3)``."""
    F = result.F
    F = np.concatenate([F, F[:1] + result.P1], axis=0)
    return np.concatenate([F, F[:, :1] + result.P2], axis=1)


def write_obj(result, path):
    """Write the immersed fundamental domain as a triangulated OBJ mesh.

    One vertex per node including the closing row and column, two
    triangles per cell, ordered so normals follow ``dF(d/ds_1) x dF(d/ds_2)``.
    """
    vertices = _closed_vertices(result)
    rows, columns = vertices.shape[:2]
    index = np.arange(rows * columns).reshape(rows, columns) + 1

    lines = ['# spinergy Weierstrass immersion',
             '# P1 %.9g %.9g %.9g' % tuple(result.P1),
             '# P2 %.9g %.9g %.9g' % tuple(result.P2)]
    lines.extend('v %.9g %.9g %.9g' % tuple(v) for v in vertices.reshape(-1, 3))
    for i in range(rows - 1):
        for j in range(columns - 1):
            a, b = index[i, j], index[i + 1, j]
            c, d = index[i + 1, j + 1], index[i, j + 1]
            lines.append('f %d %d %d' % (a, b, c))
            lines.append('f %d %d %d' % (a, c, d))
    atomic_write(path, '\n'.join(lines) + '\n')
    logger.info('wrote %d vertices to %s', rows * columns, path)
