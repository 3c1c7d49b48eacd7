"""Validators for configuration values, usable with any lollipop type."""
import numpy as np
from lollipop.validators import Validator


__all__ = [
    'EvenResolution',
    'SpinSign',
    'NonDegenerateLattice',
]


class EvenResolution(Validator):
    """Validator that checks a grid resolution is even and large enough for
    the fourth order stencils.

    :param int min: Smallest accepted resolution.
    :param str error: Error message in case of validation error.
        Can be interpolated with ``data`` and ``min``.
    """

    default_error_messages = {
        'invalid': 'Resolution should be even and at least {min}',
    }

    def __init__(self, min=8, error=None, **kwargs):
        super(EvenResolution, self).__init__(**kwargs)
        self.min = min
        if error is not None:
            self._error_messages['invalid'] = error

    def __call__(self, value, context=None):
        if value < self.min or value % 2:
            self._fail('invalid', data=value, min=self.min)

    def __repr__(self):
        return '<{klass} min={min!r}>'.format(klass=self.__class__.__name__,
                                              min=self.min)


class SpinSign(Validator):
    """Validator that checks a spin character value is +1 or -1."""

    default_error_messages = {
        'invalid': 'Spin character value should be 1 or -1',
    }

    def __call__(self, value, context=None):
        if value not in (1, -1):
            self._fail('invalid', data=value)

    def __repr__(self):
        return '<{klass}>'.format(klass=self.__class__.__name__)


class NonDegenerateLattice(Validator):
    """Validator for a mapping with ``gamma1`` and ``gamma2`` generators that
    checks they span the plane.

    :param float tolerance: Smallest accepted ``|det [gamma1 gamma2]|``.
    """

    default_error_messages = {
        'degenerate': 'Lattice generators should be linearly independent',
    }

    def __init__(self, tolerance=1e-12, **kwargs):
        super(NonDegenerateLattice, self).__init__(**kwargs)
        self.tolerance = tolerance

    def __call__(self, value, context=None):
        gamma1, gamma2 = value.get('gamma1'), value.get('gamma2')
        if gamma1 is None or gamma2 is None:
            return
        if abs(np.linalg.det(np.column_stack([gamma1, gamma2]))) <= self.tolerance:
            self._fail('degenerate', data=value)

    def __repr__(self):
        return '<{klass} tolerance={tolerance!r}>'.format(
            klass=self.__class__.__name__, tolerance=self.tolerance)
