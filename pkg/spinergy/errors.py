__all__ = [
    'SpinergyError',
    'SpinorError',
    'MetricError',
    'PoissonError',
    'DescentError',
    'CriticalityError',
    'FlowError',
    'IntegrabilityError',
    'ProfileError',
    'RefinementError',
    'ErrorMessagesMixin',
]


MISSING_ERROR_MESSAGE = \
    'Error message "{error_key}" in class {class_name} does not exist'


class SpinergyError(Exception):
    """Base class for all numerical errors raised by this package.

    :param str messages: Human readable description of the failure.
    """
    def __init__(self, messages):
        super(SpinergyError, self).__init__(messages)
        self.messages = messages


class SpinorError(SpinergyError):
    """Spinor field violates the unit-length constraint."""


class MetricError(SpinergyError):
    """Metric is not symmetric positive definite."""


class PoissonError(SpinergyError):
    """Poisson problem is not solvable or the solver did not converge."""


class DescentError(SpinergyError):
    """Spinor is not compatible with the lattice and spin character."""


class CriticalityError(SpinergyError):
    """Input was expected to be a critical point of the energy."""


class FlowError(SpinergyError):
    """Gradient flow could not make progress."""


class IntegrabilityError(SpinergyError):
    """Spinor does not integrate to a periodic immersion."""


class ProfileError(SpinergyError):
    """Profile curve or surface construction parameters are invalid."""


class RefinementError(SpinergyError):
    """Convergence study has too few resolution levels."""


class ErrorMessagesMixin(object):
    """Gives a class a table of named error messages.

    Subclasses declare ``default_error_messages`` (merged along the MRO, so a
    subclass only lists what it adds or overrides) and ``error_class``, the
    exception raised by :meth:`_fail`. Instances may override single messages
    with the ``error_messages`` keyword.
    """

    error_class = SpinergyError

    def __init__(self, error_messages=None, *args, **kwargs):
        super(ErrorMessagesMixin, self).__init__(*args, **kwargs)
        self._error_messages = self._collect_error_messages()
        self._error_messages.update(error_messages or {})

    @classmethod
    def _collect_error_messages(cls):
        messages = {}
        for klass in reversed(cls.__mro__):
            messages.update(getattr(klass, 'default_error_messages', {}))
        return messages

    def _fail(self, error_key, error_class=None, **kwargs):
        messages = getattr(self, '_error_messages', None)
        if messages is None:
            # instances built without running the mixin initializer
            messages = self._collect_error_messages()

        if error_key not in messages:
            msg = MISSING_ERROR_MESSAGE.format(
                class_name=self.__class__.__name__,
                error_key=error_key
            )
            raise ValueError(msg)

        msg = messages[error_key]
        if isinstance(msg, str):
            msg = msg.format(**kwargs)

        raise (error_class or self.error_class)(msg)
