"""Normalized negative gradient flow of the energy in the spinor slot.

The metric stays fixed. Each step integrates ``d phi / dt = Q2(phi)`` with the
classical fourth order Runge-Kutta scheme, evaluating ``Q2`` on pointwise
normalized stages, and projects the result back onto unit spinors. Steps that
raise the energy are rejected and retried with half the step size.
"""
import logging
import math
from collections import namedtuple

from spinergy.algebra import qnorm
from spinergy.errors import FlowError
from spinergy.families import build_parallel, build_saddle
from spinergy.functional import SpinorField, energy, gradient_norm, \
    neg_gradient_pair, neg_gradient_spinor, pair_from_spinor, random_spinor
from spinergy.utils import write_csv


__all__ = [
    'FlowState',
    'FlowSummary',
    'CONVERGED',
    'MAX_TIME',
    'MAX_STEPS',
    'stable_dt',
    'step',
    'run',
    'perturbed_parallel',
    'saddle_escape_state',
]

logger = logging.getLogger(__name__)

CONVERGED = 'converged'
MAX_TIME = 'max_time'
MAX_STEPS = 'max_steps'

#: Energy increase tolerated on an accepted step.
ENERGY_SLACK = 1e-12
#: Steps below this size mean the flow cannot make progress.
MIN_DT = 1e-12

TELEMETRY_HEADER = ['time', 'energy', 'grad_norm', 'dt', 'dissipation_ratio']


class FlowState(namedtuple('FlowState', ['phi', 'time', 'energy', 'grad_norm',
                                         'dt', 'Q2'], defaults=(None,))):
    """Immutable point of a flow trajectory.

    ``dt`` is the step that produced this state (0 for the initial state).
    ``Q2`` is the negative gradient at ``phi``; the next step starts from it.
    """

    __slots__ = ()

    @classmethod
    def initial(cls, phi, time=0.0):
        Q2 = neg_gradient_spinor(phi)
        return cls(phi, float(time), energy(phi), gradient_norm(phi, Q2), 0.0, Q2)

    def __repr__(self):
        return '<FlowState t={time:.6g} E={energy:.12g} |Q2|={grad_norm:.3e}>'.format(
            time=self.time, energy=self.energy, grad_norm=self.grad_norm)


FlowSummary = namedtuple('FlowSummary', [
    'state', 'status', 'steps', 'rejected', 'energy_drop', 'critical_residual',
])


def stable_dt(torus):
    """Largest step allowed for the explicit scheme,
    ``0.2 h^2 lambda_min(G) / 4``."""
    return 0.2 * torus.h ** 2 * torus.metric.min_eigenvalue / 4.0


def _velocity(values, torus):
    normalized = values / qnorm(values)[..., None]
    return neg_gradient_spinor(SpinorField(normalized, torus, unit=False))


def _rk4(values, torus, dt, k1):
    k2 = _velocity(values + 0.5 * dt * k1, torus)
    k3 = _velocity(values + 0.5 * dt * k2, torus)
    k4 = _velocity(values + dt * k3, torus)
    advanced = values + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return advanced / qnorm(advanced)[..., None]


def _step(state, dt):
    """Accepted step and the number of rejections it took."""
    if dt <= 0:
        raise ValueError('time step must be positive, got %r' % dt)
    phi = state.phi
    dt = min(dt, stable_dt(phi.torus))
    k1 = state.Q2 if state.Q2 is not None else neg_gradient_spinor(phi)
    rejected = 0
    while True:
        if dt < MIN_DT:
            raise FlowError('flow step collapse (dt=%.3e at t=%.6g)'
                            % (dt, state.time))
        candidate = phi.with_values(_rk4(phi.values, phi.torus, dt, k1))
        E = energy(candidate)
        if E <= state.energy + ENERGY_SLACK:
            Q2 = neg_gradient_spinor(candidate)
            return FlowState(candidate, state.time + dt, E,
                             gradient_norm(candidate, Q2), dt, Q2), rejected
        logger.warning('rejected flow step at t=%.6g: energy %.15g -> %.15g, '
                       'halving dt=%.3e', state.time, state.energy, E, dt)
        rejected += 1
        dt *= 0.5


def step(state, dt):
    """Advance the flow by one accepted step of size at most ``dt``.

    The step is capped by :func:`stable_dt` and halved until the energy does
    not increase. The size actually used is the ``dt`` of the new state.

    :raises FlowError: if the step size falls below ``1e-12``.
    """
    return _step(state, dt)[0]


def _dissipation_ratio(previous, current):
    """Discrete energy drop over ``dt * int |Q2|^2`` at the midpoint."""
    predicted = current.dt * 0.5 * (previous.grad_norm ** 2 + current.grad_norm ** 2)
    if predicted == 0.0:
        return math.nan
    return (previous.energy - current.energy) / predicted


def run(phi0, tol, t_max, dt0=None, max_steps=200000, csv_path=None,
        callback=None):
    """Flow ``phi0`` until ``|Q2|_L2 < tol`` or the time exceeds ``t_max``.

    :param phi0: Initial unit :class:`~spinergy.functional.SpinorField`.
    :param float dt0: Initial step; defaults to :func:`stable_dt`.
    :param int max_steps: Hard cap on accepted steps.
    :param str csv_path: Write ``time, energy, grad_norm, dt,
        dissipation_ratio`` telemetry here.
    :param callable callback: Called with every accepted
        :class:`FlowState`.
    :returns: :class:`FlowSummary`
    """
    if tol <= 0:
        raise ValueError('tolerance must be positive, got %r' % tol)
    torus = phi0.torus
    dt_max = stable_dt(torus) if dt0 is None else min(dt0, stable_dt(torus))
    state = FlowState.initial(phi0)
    initial_energy = state.energy
    rows = [(state.time, state.energy, state.grad_norm, state.dt, None)]
    steps = rejected = 0
    dt = dt_max

    logger.info('flow start: E=%.12g |Q2|=%.3e dt=%.3e', state.energy,
                state.grad_norm, dt)
    status = None
    while status is None:
        if state.grad_norm < tol:
            status = CONVERGED
            break
        if state.time >= t_max:
            status = MAX_TIME
            break
        if steps >= max_steps:
            status = MAX_STEPS
            break

        previous = state
        state, retries = _step(previous, dt)
        steps += 1
        rejected += retries
        dt = min(2.0 * state.dt, dt_max) if retries else dt_max

        ratio = _dissipation_ratio(previous, state)
        rows.append((state.time, state.energy, state.grad_norm, state.dt, ratio))
        if callback is not None:
            callback(state)
        if steps % 1000 == 0:
            logger.debug('flow step %d: t=%.6g E=%.12g |Q2|=%.3e', steps,
                         state.time, state.energy, state.grad_norm)

    gradient = neg_gradient_pair(pair_from_spinor(state.phi))
    critical_residual = gradient_norm(state.phi, gradient.Q2)

    if csv_path is not None:
        write_csv(csv_path, TELEMETRY_HEADER, rows)
    logger.info('flow %s after %d steps (%d rejected): t=%.6g E=%.12g |Q2|=%.3e',
                status, steps, rejected, state.time, state.energy,
                state.grad_norm)
    return FlowSummary(state, status, steps, rejected,
                       initial_energy - state.energy, critical_residual)


def _perturb(phi, rng, amplitude):
    noise = random_spinor(phi.torus, rng).values
    values = phi.values + amplitude * noise
    return SpinorField(values / qnorm(values)[..., None], phi.torus)


def perturbed_parallel(torus, rng, amplitude=0.1):
    """Parallel spinor plus a smooth random perturbation of the given size."""
    return _perturb(build_parallel(torus), rng, amplitude)


def saddle_escape_state(params, torus, t, rng, amplitude=1e-3):
    """Saddle with angle ``theta + c t`` placed on the deformed metric
    ``G_t``, plus a small seeded perturbation.

    For ``8 c + 4 < 0`` the energy of this state sits about
    ``|4 c + 2| pi^2 t^2`` below the saddle value ``pi^2``. Keep ``t`` small
    (the configured default is ``0.01``) so that passing ``pi^2 - 0.01`` is
    the work of the flow at fixed ``G_t`` and not of the starting point.
    """
    deformed = torus.with_metric(torus.metric.deformed(t))
    return _perturb(build_saddle(params.at(t), deformed), rng, amplitude)
