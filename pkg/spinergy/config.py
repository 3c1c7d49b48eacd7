"""Experiment configuration.

Configuration files are TOML or JSON documents with the blocks ``torus``,
``saddle``, ``flow``, ``verify``, ``handle``, ``sphere`` and ``output``.
Every block and every key is optional; unknown keys are rejected. Loading
goes through lollipop schemas, so all problems are reported at once as a
:exc:`~lollipop.errors.ValidationError` with nested messages::

    >>> load_config(data={'torus': {'N': 7, 'colour': 'red'}})
    ValidationError: {'torus': {'N': 'Resolution should be even and at least 8',
                                'colour': 'Unknown field'}}
"""
import json
import logging
import math
import os
import tomllib
from collections import namedtuple

from lollipop.errors import ValidationError
from lollipop.types import Boolean, Float, Integer, List, Object, Optional, \
    String, Tuple
from lollipop.validators import Length, Predicate, Range

from spinergy.geometry import FlatTorus, Lattice, SpinCharacter
from spinergy.validators import EvenResolution, NonDegenerateLattice, SpinSign


__all__ = [
    'Config',
    'TorusConfig',
    'SaddleConfig',
    'FlowConfig',
    'VerifyConfig',
    'HandleConfig',
    'SphereConfig',
    'OutputConfig',
    'CONFIG_SCHEMA',
    'load_config',
    'read_config_file',
]

logger = logging.getLogger(__name__)


class TorusConfig(namedtuple('TorusConfig', ['gamma1', 'gamma2', 'chi', 'N'])):
    __slots__ = ()

    def lattice(self):
        return Lattice(self.gamma1, self.gamma2)

    def character(self):
        return SpinCharacter(*self.chi)

    def torus(self, N=None):
        return FlatTorus(self.lattice(), self.character(),
                         self.N if N is None else N)


SaddleConfig = namedtuple('SaddleConfig', ['ell', 'theta', 'c', 't'])
FlowConfig = namedtuple('FlowConfig', ['dt0', 'tol', 't_max', 'seed',
                                       'amplitude', 'max_steps'])
VerifyConfig = namedtuple('VerifyConfig', ['levels', 'samples', 'seed'])
HandleConfig = namedtuple('HandleConfig', ['L', 'double', 'gamma',
                                           'base_willmore'])
SphereConfig = namedtuple('SphereConfig', ['a', 'b', 'samples', 'seed'])
OutputConfig = namedtuple('OutputConfig', ['directory'])
Config = namedtuple('Config', ['torus', 'saddle', 'flow', 'verify', 'handle',
                               'sphere', 'output'])


def _block(fields, constructor, **kwargs):
    """Optional object block that loads its defaults when omitted."""
    schema = Object(fields, constructor=constructor, allow_extra_fields=False,
                    **kwargs)
    return Optional(schema, load_default=lambda: schema.load({}))


def _optional(field_type, default):
    return Optional(field_type, load_default=default)


def _positive(**kwargs):
    return Float(validate=Predicate(lambda x: x > 0,
                                    error='Value should be positive'), **kwargs)


VECTOR = Tuple([Float(), Float()])

TORUS_SCHEMA = _block({
    'gamma1': _optional(VECTOR, (1.0, 1.0)),
    'gamma2': _optional(VECTOR, (1.0, -1.0)),
    'chi': _optional(Tuple([Integer(validate=SpinSign()),
                            Integer(validate=SpinSign())]), (-1, -1)),
    'N': _optional(Integer(validate=EvenResolution()), 64),
}, TorusConfig, validate=NonDegenerateLattice())

SADDLE_SCHEMA = _block({
    'ell': _optional(_positive(), 1.0),
    'theta': _optional(Float(), math.pi / 4),
    'c': _optional(Float(), 0.0),
    't': _optional(Float(validate=Range(min=-0.9, max=0.9)), 0.01),
}, SaddleConfig)

FLOW_SCHEMA = _block({
    'dt0': Optional(_positive()),
    'tol': _optional(_positive(), 1e-6),
    't_max': _optional(_positive(), 5.0),
    'seed': _optional(Integer(validate=Range(min=0)), 0),
    'amplitude': _optional(Float(validate=Range(min=0.0)), 0.1),
    'max_steps': _optional(Integer(validate=Range(min=1)), 200000),
}, FlowConfig)

VERIFY_SCHEMA = _block({
    'levels': _optional(List(Integer(validate=EvenResolution()),
                             validate=Length(min=1)), [32, 64, 128, 256]),
    'samples': _optional(Integer(validate=Range(min=1)), 50),
    'seed': _optional(Integer(validate=Range(min=0)), 0),
}, VerifyConfig)

HANDLE_SCHEMA = _block({
    'L': _optional(List(_positive(), validate=Length(min=1)),
                   [1.0, 5.0, 10.0, 100.0]),
    'double': _optional(Boolean(), True),
    'gamma': _optional(Integer(validate=Range(min=1)), 2),
    'base_willmore': _optional(Float(validate=Range(min=0.0)), 0.0),
}, HandleConfig)

SPHERE_SCHEMA = _block({
    'a': Optional(Float()),
    'b': Optional(Float()),
    'samples': _optional(Integer(validate=Range(min=1)), 20),
    'seed': _optional(Integer(validate=Range(min=0)), 0),
}, SphereConfig)

OUTPUT_SCHEMA = _block({
    'directory': _optional(String(), '.'),
}, OutputConfig)

CONFIG_SCHEMA = Object({
    'torus': TORUS_SCHEMA,
    'saddle': SADDLE_SCHEMA,
    'flow': FLOW_SCHEMA,
    'verify': VERIFY_SCHEMA,
    'handle': HANDLE_SCHEMA,
    'sphere': SPHERE_SCHEMA,
    'output': OUTPUT_SCHEMA,
}, constructor=Config, allow_extra_fields=False)


def read_config_file(path):
    """Parse a TOML or JSON file into a mapping.

    :raises ValidationError: for unknown formats and unparsable files.
    """
    extension = os.path.splitext(path)[1].lower()
    try:
        if extension == '.toml':
            with open(path, 'rb') as f:
                return tomllib.load(f)
        if extension == '.json':
            with open(path, 'r') as f:
                return json.load(f)
    except (tomllib.TOMLDecodeError, ValueError) as e:
        raise ValidationError('Could not parse %s: %s' % (path, e))
    raise ValidationError('Unsupported config format: %r' % extension)


def _merge(data, overrides):
    if not isinstance(data, dict):
        return data
    merged = dict(data)
    for block, values in (overrides or {}).items():
        values = {k: v for k, v in values.items() if v is not None}
        if values:
            current = merged.get(block) or {}
            if not isinstance(current, dict):
                # leave it to the schema to report
                continue
            merged[block] = dict(current, **values)
    return merged


def load_config(path=None, data=None, overrides=None):
    """Load an experiment configuration.

    :param str path: TOML or JSON file.
    :param dict data: Already parsed configuration, used when no path is given.
    :param dict overrides: ``{block: {key: value}}``; ``None`` values are
        ignored, so unset command line flags can be passed through.
    :returns: :class:`Config`
    :raises ValidationError: on any schema violation.
    """
    if path is not None:
        data = read_config_file(path)
        logger.debug('loaded config from %s', path)
    config = CONFIG_SCHEMA.load(_merge(data or {}, overrides))
    return config
