"""Flat tori, spin characters and discrete differential operators.

All fields are sampled on the unit square of lattice coordinates
``s in [0, 1)^2`` with ``N`` nodes per direction. A point of the plane is
``x = B s`` where ``B = [gamma1 gamma2]``. The flat metric is carried by its
Gram matrix ``G`` in lattice coordinates; deforming the torus means deforming
``G`` while the sampled fields and their twist signs stay where they are.

Array conventions (``N x N`` leading axes, indexed ``[i1, i2]``):

* scalar fields ``(N, N)``
* covector fields ``(N, N, 2)``, components in the orthonormal coframe
* endomorphism fields ``(N, N, 2, 2)``, ``A[..., k, i] = <A(e_i), e_k>``
* spinor fields ``(N, N, 4)``, twisted by the spin character

Derivatives are fourth order central differences. Spinor fields wrap around
the seam multiplied by ``chi(gamma_i)``; tensor fields are periodic.
"""
import logging
from collections import namedtuple

import numpy as np
import scipy.fft
import scipy.sparse.linalg

from spinergy.errors import ErrorMessagesMixin, MetricError, PoissonError, \
    SpinergyError


__all__ = [
    'Lattice',
    'SpinCharacter',
    'FlatMetric',
    'Grid',
    'FlatTorus',
    'HodgeDecomposition',
    'spin_structure_count',
    'covariant_frame',
    'deformation_matrix',
    'hodge_star_1form',
    'poisson_solve',
    'hodge_decompose',
    'COMPACT',
    'WIDE',
]

logger = logging.getLogger(__name__)

#: Five point fourth order second difference on the diagonal terms.
COMPACT = 'compact'
#: Second derivatives as squares of the first difference stencil; this is the
#: operator whose quadratic form is the discrete Dirichlet energy.
WIDE = 'wide'


def spin_structure_count(gamma):
    """Number of spin structures on a closed orientable surface of genus
    ``gamma``, split into bounding and non-bounding ones.

    :param int gamma: Genus, ``gamma >= 0``.
    :return: ``(total, bounding, nonbounding)``
    """
    if gamma < 0:
        raise ValueError('genus must be non-negative, got %r' % gamma)
    total = 4 ** gamma
    return total, (total + 2 ** gamma) // 2, (total - 2 ** gamma) // 2


class Lattice(ErrorMessagesMixin, object):
    """Lattice in the plane spanned by two generators.

    :param gamma1: First generator, a pair of floats.
    :param gamma2: Second generator.
    """

    error_class = MetricError
    default_error_messages = {
        'degenerate': 'lattice generators are linearly dependent',
    }

    def __init__(self, gamma1, gamma2, **kwargs):
        super(Lattice, self).__init__(**kwargs)
        self.gamma1 = np.array(gamma1, dtype=float).reshape(2)
        self.gamma2 = np.array(gamma2, dtype=float).reshape(2)
        if abs(np.linalg.det(self.basis)) <= 1e-14 * max(1.0, np.abs(self.basis).max() ** 2):
            self._fail('degenerate')

    @classmethod
    def square(cls, ell=1.0):
        return cls((ell, 0.0), (0.0, ell))

    @classmethod
    def saddle(cls, ell=1.0):
        """Lattice generated by ``ell (1, 1)`` and ``ell (1, -1)``."""
        return cls((ell, ell), (ell, -ell))

    @property
    def basis(self):
        return np.column_stack([self.gamma1, self.gamma2])

    @property
    def area(self):
        return abs(float(np.linalg.det(self.basis)))

    def gram(self):
        B = self.basis
        return B.T @ B

    def scaled(self, k):
        return Lattice(k * self.gamma1, k * self.gamma2)

    def doubled(self):
        return self.scaled(2.0)

    def __eq__(self, other):
        return isinstance(other, Lattice) and \
            np.array_equal(self.basis, other.basis)

    def __repr__(self):
        return '<{klass} gamma1={gamma1} gamma2={gamma2}>'.format(
            klass=self.__class__.__name__,
            gamma1=tuple(self.gamma1.tolist()),
            gamma2=tuple(self.gamma2.tolist()),
        )


class SpinCharacter(namedtuple('SpinCharacter', ['chi1', 'chi2'])):
    """Spin structure of a torus as a character ``chi: Gamma -> {+1, -1}``,
    given by its values on the two generators.
    """

    __slots__ = ()

    def __new__(cls, chi1=1, chi2=1):
        for value in (chi1, chi2):
            if value not in (1, -1):
                raise ValueError('spin character values must be +1 or -1, '
                                 'got %r' % (value,))
        return super(SpinCharacter, cls).__new__(cls, int(chi1), int(chi2))

    @classmethod
    def all(cls):
        return [cls(1, 1), cls(-1, 1), cls(1, -1), cls(-1, -1)]

    @classmethod
    def trivial(cls):
        return cls(1, 1)

    @property
    def is_bounding(self):
        """Only the trivial character is non-bounding."""
        return self != (1, 1)

    def evaluate(self, m1, m2):
        """Value on ``m1 gamma1 + m2 gamma2``."""
        return self.chi1 ** (int(m1) % 2) * self.chi2 ** (int(m2) % 2)


def deformation_matrix(t):
    """Area preserving stretch of lattice coordinates: factor ``1 + t`` along
    ``(1, 1)`` and ``1 / (1 + t)`` along ``(1, -1)``.
    """
    if not -1.0 < t < 1.0:
        raise ValueError('deformation parameter must satisfy |t| < 1, got %r' % t)
    P = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2.0)
    return P @ np.diag([1.0 + t, 1.0 / (1.0 + t)]) @ P.T


class FlatMetric(ErrorMessagesMixin, object):
    """Constant flat metric in lattice coordinates.

    :param G: Symmetric positive definite 2x2 matrix.
    """

    error_class = MetricError
    default_error_messages = {
        'not_spd': 'metric not positive definite',
    }

    def __init__(self, G, **kwargs):
        super(FlatMetric, self).__init__(**kwargs)
        G = np.array(G, dtype=float).reshape(2, 2)
        scale = max(1.0, float(np.abs(G).max()))
        if not np.all(np.isfinite(G)) or abs(G[0, 1] - G[1, 0]) > 1e-12 * scale:
            self._fail('not_spd')
        G = 0.5 * (G + G.T)
        if np.linalg.eigvalsh(G)[0] <= 0.0:
            self._fail('not_spd')
        self.G = G

    @property
    def inverse(self):
        return np.linalg.inv(self.G)

    @property
    def volume_density(self):
        return float(np.sqrt(np.linalg.det(self.G)))

    @property
    def min_eigenvalue(self):
        return float(np.linalg.eigvalsh(self.G)[0])

    @property
    def frame(self):
        return covariant_frame(self)

    def scaled(self, c):
        """Metric ``c^2 G``."""
        return FlatMetric(c * c * self.G)

    def deformed(self, t):
        D = deformation_matrix(t)
        return FlatMetric(D.T @ self.G @ D)

    def deformation_velocity(self):
        """Derivative of :meth:`deformed` at ``t = 0``."""
        Ddot = np.array([[0.0, 1.0], [1.0, 0.0]])
        return Ddot.T @ self.G + self.G @ Ddot

    def __repr__(self):
        return '<{klass} G={G}>'.format(klass=self.__class__.__name__,
                                        G=self.G.tolist())


def covariant_frame(metric):
    """Global parallel orthonormal frame of a flat metric.

    Returns the constant matrix ``E`` with ``E^T G E = I`` such that
    ``nabla_{e_i} = sum_j E[j, i] d/ds_j``. ``E`` is the symmetric inverse
    square root of ``G``, so ``E^T E = G^{-1}`` as well and the frame is
    positively oriented.
    """
    if not isinstance(metric, FlatMetric):
        metric = FlatMetric(metric)
    values, vectors = np.linalg.eigh(metric.G)
    return (vectors * (1.0 / np.sqrt(values))) @ vectors.T


class Grid(ErrorMessagesMixin, object):
    """Uniform grid on the unit square of lattice coordinates."""

    error_class = SpinergyError
    default_error_messages = {
        'resolution': 'grid resolution must be even and at least 8, got {N}',
    }

    def __init__(self, N, **kwargs):
        super(Grid, self).__init__(**kwargs)
        if int(N) != N or N < 8 or N % 2:
            self._fail('resolution', N=N)
        self.N = int(N)

    @property
    def h(self):
        return 1.0 / self.N

    def coordinates(self):
        """Lattice coordinates ``(s1, s2)`` of the nodes, each ``(N, N)``."""
        s = np.arange(self.N) / self.N
        return np.meshgrid(s, s, indexing='ij')

    def refined(self):
        return Grid(2 * self.N)

    def __eq__(self, other):
        return isinstance(other, Grid) and other.N == self.N

    def __repr__(self):
        return '<Grid N=%d>' % self.N


def _shift(values, offset, axis, sign):
    """Values at ``s + offset h e_axis`` with a sign flip across the seam."""
    shifted = np.roll(values, -offset, axis=axis)
    if sign == 1 or offset == 0:
        return shifted
    N = values.shape[axis]
    index = [slice(None)] * values.ndim
    index[axis] = slice(N - offset, N) if offset > 0 else slice(0, -offset)
    shifted[tuple(index)] *= sign
    return shifted


def _first_difference(values, axis, h, sign):
    return (8.0 * (_shift(values, 1, axis, sign) - _shift(values, -1, axis, sign))
            - (_shift(values, 2, axis, sign) - _shift(values, -2, axis, sign))) \
        / (12.0 * h)


def _second_difference(values, axis, h, sign):
    return (16.0 * (_shift(values, 1, axis, sign) + _shift(values, -1, axis, sign))
            - (_shift(values, 2, axis, sign) + _shift(values, -2, axis, sign))
            - 30.0 * values) / (12.0 * h * h)


class FlatTorus(object):
    """A flat torus with a spin structure, sampled on a grid.

    :param Lattice lattice: Period lattice.
    :param SpinCharacter character: Spin structure.
    :param Grid grid: Sampling grid.
    :param FlatMetric metric: Metric in lattice coordinates; defaults to the
        Euclidean metric pulled back by the lattice basis.
    """

    def __init__(self, lattice, character, grid, metric=None):
        self.lattice = lattice
        self.character = SpinCharacter(*character)
        self.grid = grid if isinstance(grid, Grid) else Grid(grid)
        self.metric = metric if metric is not None else FlatMetric(lattice.gram())
        self.frame = covariant_frame(self.metric)

    @property
    def N(self):
        return self.grid.N

    @property
    def h(self):
        return self.grid.h

    def with_metric(self, metric):
        if not isinstance(metric, FlatMetric):
            metric = FlatMetric(metric)
        return FlatTorus(self.lattice, self.character, self.grid, metric)

    def with_grid(self, grid):
        return FlatTorus(self.lattice, self.character, grid, self.metric)

    def _sign(self, axis, twisted):
        return self.character[axis] if twisted else 1

    def derivative(self, values, axis, twisted=False):
        """Derivative along lattice coordinate ``s_{axis+1}``."""
        return _first_difference(values, axis, self.h, self._sign(axis, twisted))

    def nabla(self, values, i, twisted=False):
        """Derivative along the ``i``-th orthonormal frame vector."""
        result = 0.0
        for axis in (0, 1):
            weight = self.frame[axis, i]
            if weight != 0.0:
                result = result + weight * self.derivative(values, axis, twisted)
        if np.isscalar(result):
            return np.zeros_like(values)
        return result

    def gradient(self, u):
        """Differential of a scalar field in coframe components."""
        return np.stack([self.nabla(u, 0), self.nabla(u, 1)], axis=-1)

    def divergence(self, beta):
        """``div beta = -sum_k (nabla_{e_k} beta)(e_k)``."""
        return -(self.nabla(beta[..., 0], 0) + self.nabla(beta[..., 1], 1))

    def exterior_derivative(self, beta):
        """``*d beta`` for a covector field."""
        return self.nabla(beta[..., 1], 0) - self.nabla(beta[..., 0], 1)

    def laplacian(self, values, stencil=WIDE, twisted=False):
        """``sum_i nabla_{e_i} nabla_{e_i}`` (the negative of the rough
        Laplacian) applied to a scalar, tensor or spinor field.
        """
        if stencil == WIDE:
            return sum(self.nabla(self.nabla(values, i, twisted), i, twisted)
                       for i in (0, 1))
        if stencil != COMPACT:
            raise ValueError('unknown stencil %r' % (stencil,))
        Ginv = self.metric.inverse
        result = Ginv[0, 0] * _second_difference(
            values, 0, self.h, self._sign(0, twisted))
        result = result + Ginv[1, 1] * _second_difference(
            values, 1, self.h, self._sign(1, twisted))
        if Ginv[0, 1] != 0.0:
            result = result + 2.0 * Ginv[0, 1] * self.derivative(
                self.derivative(values, 0, twisted), 1, twisted)
        return result

    @property
    def cell_area(self):
        return self.metric.volume_density * self.h * self.h

    def integrate(self, values):
        """Integral over the torus, summing over the two grid axes."""
        return np.sum(values, axis=(0, 1)) * self.cell_area

    def volume(self):
        return self.metric.volume_density

    def __repr__(self):
        return '<{klass} {lattice} chi={chi} N={N}>'.format(
            klass=self.__class__.__name__, lattice=self.lattice,
            chi=tuple(self.character), N=self.N,
        )


def hodge_star_1form(beta):
    """Hodge star on 1-forms in coframe components: ``*e1 = e2``,
    ``*e2 = -e1``.
    """
    beta = np.asarray(beta, dtype=float)
    return np.stack([-beta[..., 1], beta[..., 0]], axis=-1)


def _laplacian_symbol(torus, stencil):
    N, h = torus.N, torus.h
    theta = 2.0 * np.pi * scipy.fft.fftfreq(N)
    first = (8.0 * np.sin(theta) - np.sin(2.0 * theta)) / (6.0 * h)
    second = (30.0 - 32.0 * np.cos(theta) + 2.0 * np.cos(2.0 * theta)) \
        / (12.0 * h * h)
    if stencil == WIDE:
        d1, d2 = first ** 2, first ** 2
    else:
        d1, d2 = second, second
    Ginv = torus.metric.inverse
    return -(Ginv[0, 0] * d1[:, None] + Ginv[1, 1] * d2[None, :]
             + 2.0 * Ginv[0, 1] * first[:, None] * first[None, :])


def poisson_solve(rho, torus, stencil=COMPACT, tol=1e-10, maxiter=100):
    """Solve ``laplacian(u) = rho`` for a mean free ``u``.

    Conjugate gradients on the positive operator ``-laplacian``, preconditioned
    by the inverse Fourier symbol of the same constant coefficient stencil.
    With the :data:`WIDE` stencil, checkerboard modes in the kernel are
    removed from ``rho`` first.

    :raises PoissonError: if ``rho`` does not integrate to zero or the
        iteration does not converge.
    """
    rho = np.asarray(rho, dtype=float)
    scale = max(1.0, float(np.abs(rho).max()) if rho.size else 1.0)
    mean = float(np.mean(rho))
    if abs(mean) > 1e-10 * scale:
        raise PoissonError('Poisson RHS not mean-free (mean %.3e)' % mean)

    shape = rho.shape
    symbol = _laplacian_symbol(torus, stencil)
    kernel = np.abs(symbol) <= 1e-12 * np.abs(symbol).max()
    inverse_symbol = np.zeros_like(symbol)
    inverse_symbol[~kernel] = 1.0 / symbol[~kernel]

    rho_hat = scipy.fft.fft2(rho)
    dropped = float(np.abs(rho_hat[kernel]).max()) / rho.size
    if dropped > 1e-10 * scale:
        logger.warning('Poisson RHS has kernel components of size %.3e, '
                       'projecting them out', dropped)
    rho_hat[kernel] = 0.0
    rhs = np.real(scipy.fft.ifft2(rho_hat))

    def matvec(v):
        return -torus.laplacian(v.reshape(shape), stencil).ravel()

    def precondition(v):
        return -np.real(scipy.fft.ifft2(
            scipy.fft.fft2(v.reshape(shape)) * inverse_symbol)).ravel()

    size = rho.size
    A = scipy.sparse.linalg.LinearOperator((size, size), matvec=matvec,
                                           dtype=float)
    M = scipy.sparse.linalg.LinearOperator((size, size), matvec=precondition,
                                           dtype=float)
    solution, info = scipy.sparse.linalg.cg(
        A, -rhs.ravel(), rtol=tol, atol=0.0, M=M,
        maxiter=maxiter,
    )
    if info != 0:
        raise PoissonError('Poisson solver did not converge (info=%d)' % info)

    u = solution.reshape(shape)
    u -= u.mean()
    if logger.isEnabledFor(logging.DEBUG):
        residual = np.abs(torus.laplacian(u, stencil) - rhs).max()
        logger.debug('Poisson solve (%s, N=%d): residual %.3e',
                     stencil, torus.N, residual)
    return u


HodgeDecomposition = namedtuple('HodgeDecomposition', [
    'harmonic', 'exact', 'coexact', 'exact_potential', 'coexact_potential',
])


def hodge_decompose(beta, torus):
    """Split a covector field into harmonic, exact and coexact parts.

    ``beta = harmonic + d f + *d g`` where ``laplacian(g) = *d beta`` and
    ``laplacian(f) = -div beta``, both with the stencil that makes ``*d *d``
    and ``-div d`` coincide with the discrete Laplacian.
    """
    beta = np.asarray(beta, dtype=float)
    g = poisson_solve(torus.exterior_derivative(beta), torus, stencil=WIDE)
    f = poisson_solve(-torus.divergence(beta), torus, stencil=WIDE)
    exact = torus.gradient(f)
    coexact = hodge_star_1form(torus.gradient(g))
    return HodgeDecomposition(
        harmonic=beta - exact - coexact,
        exact=exact,
        coexact=coexact,
        exact_potential=f,
        coexact_potential=g,
    )
