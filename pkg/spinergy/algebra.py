"""Quaternionic model of the spinor module of a surface.

Spinors are quaternion valued. Tangent vectors act by Clifford multiplication
from the left: ``e1`` is left multiplication by ``i``, ``e2`` by ``j`` and the
volume element ``omega = e1 e2`` by ``k``. Right multiplication by unit
quaternions commutes with all of these and is the quaternionic structure.

Besides the :class:`Quaternion` value type, every operation has an array form
working on trailing axes of length 4 (``(w, x, y, z)``) and 2 (``(v1, v2)``),
which is what the field code uses.
"""
import math
from collections import namedtuple

import numpy as np


__all__ = [
    'Quaternion',
    'TangentVector2',
    'ONE', 'I', 'J', 'K',
    'qmul',
    'qconj',
    'qdot',
    'qnorm',
    'left_i',
    'left_j',
    'left_k',
    'clifford_mul',
    'omega_mul',
    'omega_exp',
    'right_mul',
    'rotate_j',
    'random_unit_quaternions',
]


def qmul(p, q):
    """Hamilton product of quaternion arrays, broadcasting over leading axes."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    pw, px, py, pz = p[..., 0], p[..., 1], p[..., 2], p[..., 3]
    qw, qx, qy, qz = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    return np.stack([
        pw * qw - px * qx - py * qy - pz * qz,
        pw * qx + px * qw + py * qz - pz * qy,
        pw * qy - px * qz + py * qw + pz * qx,
        pw * qz + px * qy - py * qx + pz * qw,
    ], axis=-1)


def qconj(q):
    q = np.asarray(q, dtype=float)
    return q * np.array([1.0, -1.0, -1.0, -1.0])


def qdot(p, q):
    """Real inner product Re(conj(p) q), i.e. the Euclidean product on R^4."""
    return np.sum(np.asarray(p, dtype=float) * np.asarray(q, dtype=float), axis=-1)


def qnorm(q):
    return np.sqrt(qdot(q, q))


def left_i(q):
    q = np.asarray(q, dtype=float)
    return np.stack([-q[..., 1], q[..., 0], -q[..., 3], q[..., 2]], axis=-1)


def left_j(q):
    q = np.asarray(q, dtype=float)
    return np.stack([-q[..., 2], q[..., 3], q[..., 0], -q[..., 1]], axis=-1)


def left_k(q):
    q = np.asarray(q, dtype=float)
    return np.stack([-q[..., 3], -q[..., 2], q[..., 1], q[..., 0]], axis=-1)


class Quaternion(namedtuple('Quaternion', ['w', 'x', 'y', 'z'])):
    """Immutable quaternion ``w + x i + y j + z k``."""

    __slots__ = ()

    @classmethod
    def from_array(cls, values):
        w, x, y, z = (float(v) for v in np.asarray(values, dtype=float))
        return cls(w, x, y, z)

    def to_array(self):
        return np.array(self, dtype=float)

    def __add__(self, other):
        return Quaternion.from_array(self.to_array() + _as_array(other))

    def __sub__(self, other):
        return Quaternion.from_array(self.to_array() - _as_array(other))

    def __neg__(self):
        return Quaternion.from_array(-self.to_array())

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return Quaternion.from_array(self.to_array() * other)
        return Quaternion.from_array(qmul(self.to_array(), _as_array(other)))

    def __rmul__(self, other):
        if isinstance(other, (int, float)):
            return Quaternion.from_array(self.to_array() * other)
        return Quaternion.from_array(qmul(_as_array(other), self.to_array()))

    def conjugate(self):
        return Quaternion(self.w, -self.x, -self.y, -self.z)

    def norm(self):
        return math.sqrt(self.w ** 2 + self.x ** 2 + self.y ** 2 + self.z ** 2)

    def normalized(self):
        n = self.norm()
        if n == 0.0:
            raise ZeroDivisionError('zero quaternion has no direction')
        return self * (1.0 / n)

    def dot(self, other):
        return float(qdot(self.to_array(), _as_array(other)))

    def isclose(self, other, atol=1e-12):
        return bool(np.allclose(self.to_array(), _as_array(other), rtol=0.0, atol=atol))

    def __repr__(self):
        return '<Quaternion {w!r} + {x!r}i + {y!r}j + {z!r}k>'.format(**self._asdict())


ONE = Quaternion(1.0, 0.0, 0.0, 0.0)
I = Quaternion(0.0, 1.0, 0.0, 0.0)
J = Quaternion(0.0, 0.0, 1.0, 0.0)
K = Quaternion(0.0, 0.0, 0.0, 1.0)


class TangentVector2(namedtuple('TangentVector2', ['v1', 'v2'])):
    """Tangent vector in components of an oriented orthonormal frame."""

    __slots__ = ()

    def to_array(self):
        return np.array(self, dtype=float)

    def rotated(self):
        """Rotation by a right angle, ``J(v1, v2) = (-v2, v1)``."""
        return TangentVector2(-self.v2, self.v1)

    def norm(self):
        return math.hypot(self.v1, self.v2)


def _as_array(value):
    if isinstance(value, (Quaternion, TangentVector2)):
        return value.to_array()
    return np.asarray(value, dtype=float)


def _wrap(result, *args):
    if np.shape(result) == (4,) and any(isinstance(arg, Quaternion) for arg in args):
        return Quaternion.from_array(result)
    return result


def rotate_j(X):
    """Apply the complex structure J to vector arrays ``(..., 2)``."""
    if isinstance(X, TangentVector2):
        return X.rotated()
    X = np.asarray(X, dtype=float)
    return np.stack([-X[..., 1], X[..., 0]], axis=-1)


def clifford_mul(X, q):
    """Clifford product ``X . q = (v1 i + v2 j) q``.

    :param X: :class:`TangentVector2` or array ``(..., 2)``.
    :param q: :class:`Quaternion` or array ``(..., 4)``.
    """
    Xa = _as_array(X)
    qa = _as_array(q)
    result = Xa[..., 0, None] * left_i(qa) + Xa[..., 1, None] * left_j(qa)
    return _wrap(result, q)


def omega_mul(q):
    """Action of the volume element, ``omega . q = k q``."""
    return _wrap(left_k(_as_array(q)), q)


def omega_exp(t):
    """``exp(t omega) = cos t + sin t k``.

    Returns a :class:`Quaternion` for scalar ``t`` and an array ``(..., 4)``
    otherwise.
    """
    if np.ndim(t) == 0:
        return Quaternion(math.cos(t), 0.0, 0.0, math.sin(t))
    t = np.asarray(t, dtype=float)
    zeros = np.zeros_like(t)
    return np.stack([np.cos(t), zeros, zeros, np.sin(t)], axis=-1)


def right_mul(q, c):
    """Quaternionic structure ``q -> q c``."""
    return _wrap(qmul(_as_array(q), _as_array(c)), q, c)


def random_unit_quaternions(rng, shape=()):
    """Uniformly distributed unit quaternions of the given leading shape."""
    values = rng.standard_normal(tuple(shape) + (4,))
    return values / qnorm(values)[..., None]
