from pytest import raises
from contextlib import contextmanager
from lollipop.errors import ValidationError
from lollipop.types import Integer, Object, Tuple, Float

from spinergy.validators import EvenResolution, SpinSign, NonDegenerateLattice


@contextmanager
def not_raises(exception_type):
    try:
        yield
    except exception_type as err:
        raise AssertionError(
            "Did raise exception {0} when it should not!".format(
                repr(exception_type)
            )
        )
    except Exception as err:
        raise AssertionError(
            "An unexpected exception {0} raised.".format(repr(err))
        )


class TestEvenResolution:
    def test_matching_values(self):
        with not_raises(ValidationError):
            EvenResolution()(8)

        with not_raises(ValidationError):
            EvenResolution()(256)

    def test_raising_ValidationError_for_odd_values(self):
        with raises(ValidationError) as exc_info:
            EvenResolution()(33)
        assert exc_info.value.messages == \
            EvenResolution.default_error_messages['invalid'].format(min=8)

    def test_raising_ValidationError_for_small_values(self):
        with raises(ValidationError):
            EvenResolution()(6)

    def test_customizing_minimum(self):
        with not_raises(ValidationError):
            EvenResolution(min=4)(4)

        with raises(ValidationError) as exc_info:
            EvenResolution(min=16)(8)
        assert exc_info.value.messages == \
            'Resolution should be even and at least 16'

    def test_customizing_validation_error(self):
        message = 'Bad resolution {data}'
        with raises(ValidationError) as exc_info:
            EvenResolution(error=message)(9)
        assert exc_info.value.messages == message.format(data=9)

    def test_used_as_type_validator(self):
        with raises(ValidationError) as exc_info:
            Integer(validate=EvenResolution()).load(7)
        assert exc_info.value.messages == \
            'Resolution should be even and at least 8'

    def test_repr(self):
        assert repr(EvenResolution(min=16)) == '<EvenResolution min=16>'


class TestSpinSign:
    def test_matching_values(self):
        with not_raises(ValidationError):
            SpinSign()(1)

        with not_raises(ValidationError):
            SpinSign()(-1)

    def test_raising_ValidationError_for_other_values(self):
        for value in (0, 2, -2):
            with raises(ValidationError) as exc_info:
                SpinSign()(value)
            assert exc_info.value.messages == \
                SpinSign.default_error_messages['invalid']

    def test_customizing_validation_error(self):
        message = 'Sign {data} is not a spin sign'
        with raises(ValidationError) as exc_info:
            SpinSign(error_messages={'invalid': message})(3)
        assert exc_info.value.messages == message.format(data=3)


class TestNonDegenerateLattice:
    def test_matching_values(self):
        with not_raises(ValidationError):
            NonDegenerateLattice()({'gamma1': (1.0, 1.0), 'gamma2': (1.0, -1.0)})

    def test_raising_ValidationError_for_parallel_generators(self):
        with raises(ValidationError) as exc_info:
            NonDegenerateLattice()({'gamma1': (1.0, 2.0), 'gamma2': (2.0, 4.0)})
        assert exc_info.value.messages == \
            NonDegenerateLattice.default_error_messages['degenerate']

    def test_ignoring_missing_generators(self):
        with not_raises(ValidationError):
            NonDegenerateLattice()({'gamma1': (1.0, 0.0)})

    def test_customizing_tolerance(self):
        value = {'gamma1': (1.0, 0.0), 'gamma2': (0.0, 1e-3)}
        with not_raises(ValidationError):
            NonDegenerateLattice()(value)

        with raises(ValidationError):
            NonDegenerateLattice(tolerance=1e-2)(value)

    def test_used_as_object_validator(self):
        VECTOR = Tuple([Float(), Float()])
        LATTICE = Object({'gamma1': VECTOR, 'gamma2': VECTOR},
                         validate=NonDegenerateLattice())
        with raises(ValidationError) as exc_info:
            LATTICE.load({'gamma1': [1.0, 1.0], 'gamma2': [2.0, 2.0]})
        assert exc_info.value.messages == \
            'Lattice generators should be linearly independent'

    def test_repr(self):
        assert repr(NonDegenerateLattice()) == \
            '<NonDegenerateLattice tolerance=1e-12>'
