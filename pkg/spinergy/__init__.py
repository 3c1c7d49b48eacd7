__version__ = '0.1.0'
__author__ = 'spinergy developers'

from spinergy.errors import SpinergyError  # noqa: E402
from spinergy.geometry import FlatTorus, Lattice, SpinCharacter  # noqa: E402
from spinergy.functional import SpinorField, PairField, energy, \
    pair_from_spinor  # noqa: E402
from spinergy.families import SaddleParams, TwistorParams, build_parallel, \
    build_saddle  # noqa: E402
