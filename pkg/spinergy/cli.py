"""Command line front end.

Every subcommand loads the configuration (``--config``), applies the command
line overrides, runs its experiment and writes CSV/JSON/OBJ artifacts into the
output directory. Exit codes: 0 when every check passes, 1 when a check fails
or the experiment cannot run, 2 on configuration errors.
"""
import argparse
import logging
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from lollipop.errors import ValidationError

from spinergy import __version__
from spinergy.config import load_config
from spinergy.errors import CriticalityError, DescentError, \
    IntegrabilityError, RefinementError, SpinergyError
from spinergy.families import ABSOLUTE_MINIMISER, DESCENT_TOLERANCE, \
    INCONSISTENT, CheckReport, SaddleParams, TwistorParams, build_parallel, \
    build_saddle, build_wave, classify_flat_critical, moduli_second_derivative, \
    saddle_gradient_residuals, seam_mismatch, twistor_closed_form_check
from spinergy.flow import CONVERGED, perturbed_parallel, run, \
    saddle_escape_state
from spinergy.functional import directional_derivative_metric, \
    directional_derivative_spinor, energy, identity_suite, pair_from_spinor, \
    random_spinor
from spinergy.geometry import FlatTorus, SpinCharacter, spin_structure_count
from spinergy.immersion import RevolutionSurface, almost_minimiser_energy, \
    handle_length_for, handle_neck_distance, handle_neck_identity_residual, \
    handle_profile, handle_willmore_bound, closedness_residual, \
    mean_curvature_from_spinor, weierstrass_form, weierstrass_integrate, \
    write_obj
from spinergy.utils import convergence_rows, format_json, observed_orders, \
    require_levels, thread_count, write_csv, write_json


__all__ = [
    'main',
    'build_parser',
    'cmd_verify',
    'cmd_saddle',
    'cmd_flow',
    'cmd_handle',
    'cmd_weierstrass',
    'cmd_classify',
    'cmd_sphere',
    'cmd_counts',
]

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2

#: Convergence identities must reach this observed order.
ORDER_THRESHOLD = 2.5
#: Residuals below this count as exact to rounding.
EXACT_TOLERANCE = 1e-9
#: Orders are only measured from levels whose residual is above this.
ORDER_FLOOR = 1e-7
#: Largest residual accepted at the finest refinement level.
FINEST_TOLERANCE = 1e-4
#: Relative agreement of the directional derivative checks.
GRADIENT_TOLERANCE = 1e-6


def _float_list(text):
    try:
        return [float(part) for part in text.split(',') if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError('expected comma separated numbers, '
                                         'got %r' % text)


def _int_list(text):
    try:
        return [int(part) for part in text.split(',') if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError('expected comma separated integers, '
                                         'got %r' % text)


def _output_path(config, name):
    return os.path.join(config.output.directory, name)


def _grid_tolerance(torus, scale):
    """Tolerance for fourth order discretisation errors on ``torus``."""
    return max(1e-6, scale * torus.h ** 4)


def _write_report(config, name, report):
    path = _output_path(config, name)
    write_json(path, report.to_dict() if isinstance(report, CheckReport) else report)
    logger.info('wrote %s', path)
    return path


def _exit_code(report):
    return EXIT_OK if report.passed else EXIT_FAILED


# verify

def _suite_job(config, index, chi, N, sample):
    torus = FlatTorus(config.torus.lattice(), chi, N)
    rng = np.random.default_rng([config.verify.seed, index, sample])
    phi = random_spinor(torus, rng)
    return N, identity_suite(phi)


def _gradient_checks(report, torus, seed):
    rng = np.random.default_rng([seed, 0])
    phi = random_spinor(torus, rng)
    psi = random_spinor(torus, np.random.default_rng([seed, 1])).values
    fd, predicted = directional_derivative_spinor(phi, psi)
    report.add('gradient_spinor_slot', abs(fd - predicted),
               GRADIENT_TOLERANCE * max(1.0, abs(predicted)))
    fd, predicted = directional_derivative_metric(phi)
    report.add('gradient_metric_slot', abs(fd - predicted),
               GRADIENT_TOLERANCE * max(1.0, abs(predicted)))


def cmd_verify(config):
    """Run the identity suite on random spinors over the refinement levels,
    ``samples`` spinors per level for each of the four spin structures.

    Writes one ``verify_<identity>.csv`` table ``(N, residual, order)`` per
    identity, holding the worst residual over all structures, and
    ``verify.json``. Passes when every identity is exact to
    rounding or converges at order at least 2.5, and the finest residual
    is below ``1e-4``.
    """
    levels = require_levels(config.verify.levels)
    samples = config.verify.samples
    characters = SpinCharacter.all()
    jobs = [(index, chi, N, sample)
            for index, chi in enumerate(characters)
            for N in levels for sample in range(samples)]
    workers = thread_count()
    logger.info('identity suite: levels %s, %d spin structures, %d samples, '
                '%d workers', levels, len(characters), samples, workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(lambda job: _suite_job(config, *job), jobs))

    worst = {}
    for N, residuals in results:
        for name, value in residuals.items():
            table = worst.setdefault(name, {})
            table[N] = max(table.get(N, 0.0), float(value))

    report = CheckReport('identity suite', values={
        'levels': float(len(levels)), 'samples': float(samples),
        'spin_structures': float(len(characters)),
    })
    for name in sorted(worst):
        residuals = [worst[name][N] for N in levels]
        write_csv(_output_path(config, 'verify_%s.csv' % name),
                  ['N', 'residual', 'order'], convergence_rows(levels, residuals))
        finest = residuals[-1]
        report.values['%s_finest' % name] = finest
        if max(residuals) <= EXACT_TOLERANCE:
            report.add('%s_exact' % name, max(residuals), EXACT_TOLERANCE)
            continue
        orders = [order for order, coarse in
                  zip(observed_orders(levels, residuals), residuals)
                  if coarse > ORDER_FLOOR]
        order = min(orders) if orders else math.inf
        report.values['%s_order' % name] = order
        # a passing check has residual <= tolerance, so compare the deficit
        report.add('%s_order' % name, max(0.0, ORDER_THRESHOLD - order), 0.0)
        report.add('%s_finest' % name, finest, FINEST_TOLERANCE)

    _gradient_checks(report, config.torus.torus(levels[-1]), config.verify.seed)
    _write_report(config, 'verify.json', report)
    for check in report.checks:
        if not check.passed:
            logger.error('verify check %s failed: residual %.3e > %.3e',
                         check.name, check.residual, check.tolerance)
    return _exit_code(report)


# saddle

def _saddle_params(config):
    return SaddleParams(config.saddle.ell, config.saddle.theta, config.saddle.c)


def _saddle_torus(config, params):
    return FlatTorus(params.lattice(), config.torus.character(), config.torus.N)


def cmd_saddle(config):
    """Saddle energy, gradient residuals, second variation along the moduli
    family and the classification of the saddle pair."""
    params = _saddle_params(config)
    torus = _saddle_torus(config, params)
    report = CheckReport('saddle', values={
        'ell': params.ell, 'theta': params.theta, 'c': params.c,
        'N': float(torus.N),
    })
    try:
        phi = build_saddle(params, torus)
    except DescentError as e:
        logger.error('%s', e.messages)
        report.add('descent', seam_mismatch(params, torus), DESCENT_TOLERANCE)
        _write_report(config, 'saddle.json', report)
        return EXIT_FAILED

    E = energy(phi)
    report.values['energy'] = E
    sup_Q1, sup_Q2, l2_Q2 = saddle_gradient_residuals(params, torus)
    report.values.update({'sup_Q1': sup_Q1, 'sup_Q2': sup_Q2, 'l2_Q2': l2_Q2})

    f2 = moduli_second_derivative(params)
    f2_discrete = moduli_second_derivative(params, discrete=True, torus=torus)
    report.values.update({'f2_closed': f2, 'f2_discrete': f2_discrete})

    if params.is_critical:
        expected = 8.0 * params.c + 4.0
        report.values['f2_expected'] = expected
        report.add('energy_pi_squared', abs(E - math.pi ** 2),
                   _grid_tolerance(torus, 1e3))
        report.add('sup_Q1', sup_Q1, _grid_tolerance(torus, 1e4))
        report.add('sup_Q2', sup_Q2, _grid_tolerance(torus, 1e4))
        report.add('f2_closed_form', abs(f2 - expected), 1e-6)
        report.add('f2_discrete', abs(f2_discrete - expected), 1e-4)
        classification = classify_flat_critical(pair_from_spinor(phi),
                                                _grid_tolerance(torus, 1e4))
        report.verdict = classification.verdict
        report.checks.extend(classification.checks)
    else:
        logger.info('theta=%.6g is not critical, skipping the saddle checks',
                    params.theta)

    _write_report(config, 'saddle.json', report)
    logger.info('saddle energy %.12g (pi^2 = %.12g), f\'\'(0) = %.9g',
                E, math.pi ** 2, f2)
    return _exit_code(report)


# flow

def _parallel_torus(config, N=None):
    """The configured lattice with the only structure carrying parallel
    spinors."""
    if config.torus.character().is_bounding:
        logger.info('using the non-bounding structure for the parallel spinor')
    return FlatTorus(config.torus.lattice(), SpinCharacter.trivial(),
                     config.torus.N if N is None else N)


def cmd_flow(config, start='parallel'):
    """Run the spinor slot flow from a perturbed parallel spinor or from the
    saddle placed on the deformed metric ``G_t``."""
    settings = config.flow
    rng = np.random.default_rng(settings.seed)
    if start == 'parallel':
        torus = _parallel_torus(config)
        phi0 = perturbed_parallel(torus, rng, settings.amplitude)
    elif start == 'saddle':
        params = _saddle_params(config)
        torus = _saddle_torus(config, params)
        phi0 = saddle_escape_state(params, torus, config.saddle.t, rng)
    else:
        raise ValueError('unknown flow start %r' % (start,))

    energies = [energy(phi0)]
    summary = run(phi0, settings.tol, settings.t_max, dt0=settings.dt0,
                  max_steps=settings.max_steps,
                  csv_path=_output_path(config, 'flow.csv'),
                  callback=lambda state: energies.append(state.energy))

    increases = np.diff(energies)
    report = CheckReport('flow from %s' % start, verdict=summary.status, values={
        'initial_energy': energies[0],
        'final_energy': summary.state.energy,
        'final_time': summary.state.time,
        'final_grad_norm': summary.state.grad_norm,
        'critical_residual': summary.critical_residual,
        'steps': float(summary.steps),
        'rejected': float(summary.rejected),
    })
    report.add('monotone_energy',
               max(0.0, float(increases.max())) if len(increases) else 0.0,
               1e-12)
    if start == 'parallel':
        report.add('terminal_energy', summary.state.energy, 1e-8)
        report.add('converged', 0.0 if summary.status == CONVERGED else 1.0, 0.0)
    else:
        report.add('below_saddle_energy',
                   max(0.0, summary.state.energy - (math.pi ** 2 - 0.01)), 0.0)
    _write_report(config, 'flow.json', report)
    return _exit_code(report)


# handle

def _handle_row(L, doubled):
    profile = handle_profile(L)
    surface = RevolutionSurface(profile, doubled=doubled)
    # jumps are rounding errors on coordinates of size 1 + L^2
    matching = max(max(jumps) for jumps in profile.matching_residuals()) \
        / (1.0 + L * L)
    return {
        'L': L,
        'willmore': surface.willmore(),
        'bound': handle_willmore_bound(L, doubled=doubled),
        'neck_distance': handle_neck_distance(L),
        'neck_residual': handle_neck_identity_residual(L),
        'unit_speed': profile.unit_speed_residual(),
        'matching': matching,
    }


HANDLE_HEADER = ['L', 'willmore', 'bound', 'neck_distance', 'neck_residual']


def cmd_handle(config):
    """Willmore table of handles and the almost-minimiser bookkeeping."""
    settings = config.handle
    Ls = sorted(settings.L)
    with ThreadPoolExecutor(max_workers=thread_count()) as pool:
        rows = list(pool.map(lambda L: _handle_row(L, settings.double), Ls))
    write_csv(_output_path(config, 'handle.csv'), HANDLE_HEADER,
              [[row[key] for key in HANDLE_HEADER] for row in rows])

    report = CheckReport('handle', values={'gamma': float(settings.gamma)})
    for row in rows:
        name = 'L=%g' % row['L']
        report.values['willmore_%s' % name] = row['willmore']
        report.add('below_bound_%s' % name,
                   max(0.0, row['willmore'] - row['bound']), 0.0)
        report.add('neck_identity_%s' % name, row['neck_residual'], 1e-12)
        report.add('unit_speed_%s' % name, row['unit_speed'], 1e-12)
        report.add('c1_matching_%s' % name, row['matching'], 1e-12)
    willmores = [row['willmore'] for row in rows]
    report.add('decreasing_in_L',
               max([0.0] + [max(0.0, b - a) for a, b in zip(willmores, willmores[1:])]),
               0.0)

    gamma = settings.gamma
    if gamma > 1:
        energy_value = almost_minimiser_energy(
            gamma, [max(Ls)] * (gamma - 1), settings.base_willmore)
        L_eps = handle_length_for(0.01 / (gamma - 1))
        approached = almost_minimiser_energy(gamma, [L_eps] * (gamma - 1), 0.0)
        report.values.update({
            'almost_minimiser_energy': energy_value,
            'infimum': math.pi * abs(gamma - 1),
            'handle_L_for_budget': float(L_eps),
        })
        report.add('approaches_infimum',
                   abs(approached - math.pi * abs(gamma - 1)), 0.01)
    _write_report(config, 'handle.json', report)
    return _exit_code(report)


# weierstrass

def _family_spinor(config, family, seed=None):
    if family == 'parallel':
        return build_parallel(_parallel_torus(config))
    params = _saddle_params(config)
    if family == 'saddle':
        return build_saddle(params, _saddle_torus(config, params))
    if family == 'wave':
        return build_wave(params.alpha1, config.torus.torus())
    if family == 'random':
        rng = np.random.default_rng(config.verify.seed if seed is None else seed)
        return random_spinor(config.torus.torus(), rng)
    raise ValueError('unknown family %r' % (family,))


def cmd_weierstrass(config, family='parallel', tol=1e-8):
    """Integrate a family spinor to a periodic immersion and write
    ``weierstrass.obj`` with a JSON report of its periods."""
    try:
        phi = _family_spinor(config, family)
    except DescentError as e:
        logger.error('%s', e.messages)
        return EXIT_FAILED

    report = CheckReport('weierstrass %s' % family)
    xi = weierstrass_form(phi)
    report.add('isometry', float(np.abs(np.linalg.norm(xi, axis=-1) - 1.0).max()),
               1e-12)
    curvature = mean_curvature_from_spinor(phi)
    report.values['dirac_eigen_residual'] = curvature.residual
    try:
        result = weierstrass_integrate(phi, tol)
    except IntegrabilityError as e:
        logger.error('%s', e.messages)
        report.add('closedness', closedness_residual(phi), tol)
        _write_report(config, 'weierstrass.json', report)
        return EXIT_FAILED

    report.add('closedness', result.closedness_residual, tol)
    report.add('path_independence', result.path_residual, tol)
    lengths = [np.linalg.norm(result.P1), np.linalg.norm(result.P2)]
    for i, (P, length) in enumerate(zip((result.P1, result.P2), lengths)):
        for axis, value in zip('xyz', P):
            report.values['P%d_%s' % (i + 1, axis)] = float(value)
        report.values['P%d_length' % (i + 1)] = float(length)
    if family == 'parallel':
        gram = result.period_lattice_gram()
        expected = phi.torus.lattice.gram()
        report.add('period_lattice', float(np.abs(gram - expected).max()), 1e-10)
    write_obj(result, _output_path(config, 'weierstrass.obj'))
    _write_report(config, 'weierstrass.json', report)
    return _exit_code(report)


# classify

def cmd_classify(config, family='saddle', tol=None):
    """Classify the pair of a family spinor as a flat critical point."""
    try:
        phi = _family_spinor(config, family)
    except DescentError as e:
        logger.error('%s', e.messages)
        return EXIT_FAILED
    tol = _grid_tolerance(phi.torus, 1e4) if tol is None else tol
    try:
        report = classify_flat_critical(pair_from_spinor(phi), tol)
    except CriticalityError as e:
        logger.error('%s', e.messages)
        report = CheckReport('flat critical point', verdict=None)
        report.add('critical', math.inf, tol)
    report.title = 'classify %s' % family
    _write_report(config, 'classify.json', report)
    if report.verdict == INCONSISTENT:
        return EXIT_FAILED
    if family == 'parallel' and report.verdict != ABSOLUTE_MINIMISER:
        return EXIT_FAILED
    return _exit_code(report)


# sphere

def _sphere_params(config):
    settings = config.sphere
    if settings.a is not None or settings.b is not None:
        return [TwistorParams(settings.a or 0.0, settings.b or 0.0)]
    rng = np.random.default_rng(settings.seed)
    params = []
    while len(params) < settings.samples:
        a, b = rng.standard_normal(2)
        if a != 0.0 or b != 0.0:
            params.append(TwistorParams(float(a), float(b)))
    return params


def cmd_sphere(config):
    """Closed form twistor checks for given or random constants."""
    reports = [twistor_closed_form_check(params)
               for params in _sphere_params(config)]
    passed = all(report.passed for report in reports)
    write_json(_output_path(config, 'sphere.json'), {
        'passed': passed,
        'reports': [report.to_dict() for report in reports],
    })
    return EXIT_OK if passed else EXIT_FAILED


# counts

def cmd_counts(gamma, stream=None):
    """Print the spin structure counts of a genus ``gamma`` surface."""
    total, bounding, nonbounding = spin_structure_count(gamma)
    stream = sys.stdout if stream is None else stream
    stream.write(format_json({
        'gamma': gamma,
        'total': total,
        'bounding': bounding,
        'nonbounding': nonbounding,
    }))
    return EXIT_OK


def _common_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help='TOML or JSON configuration file')
    common.add_argument('--out', help='output directory')
    common.add_argument('-v', '--verbose', action='count', default=0,
                        help='more logging, repeatable')
    common.add_argument('-q', '--quiet', action='store_true',
                        help='only log errors')
    return common


def build_parser():
    common = _common_parser()
    parser = argparse.ArgumentParser(
        prog='spinergy', parents=[common],
        description='Numerics of the spinorial energy on surfaces.')
    parser.add_argument('--version', action='version',
                        version='%(prog)s ' + __version__)
    commands = parser.add_subparsers(dest='command', required=True)

    verify = commands.add_parser('verify', parents=[common],
                                 help='identity suite over refinement levels')
    verify.add_argument('--levels', type=_int_list,
                        help='comma separated resolutions')
    verify.add_argument('--samples', type=int)
    verify.add_argument('--seed', type=int)

    saddle = commands.add_parser('saddle', parents=[common],
                                 help='saddle family on the lattice ell(1, +-1)')
    saddle.add_argument('--ell', type=float)
    saddle.add_argument('--theta', type=float)
    saddle.add_argument('--c', type=float)
    saddle.add_argument('--N', type=int)

    flow = commands.add_parser('flow', parents=[common],
                               help='normalized gradient flow in the spinor slot')
    flow.add_argument('--start', choices=['parallel', 'saddle'],
                      default='parallel')
    flow.add_argument('--N', type=int)
    flow.add_argument('--c', type=float,
                      help='theta slope of the saddle start')
    flow.add_argument('--t', type=float,
                      help='moduli parameter of the saddle start')
    flow.add_argument('--tol', type=float)
    flow.add_argument('--t-max', dest='t_max', type=float)
    flow.add_argument('--dt0', type=float)
    flow.add_argument('--seed', type=int)
    flow.add_argument('--amplitude', type=float)
    flow.add_argument('--max-steps', dest='max_steps', type=int)

    handle = commands.add_parser('handle', parents=[common],
                                 help='Willmore energy of catenoidal handles')
    handle.add_argument('--L', type=_float_list,
                        help='comma separated handle parameters')
    handle.add_argument('--double', action=argparse.BooleanOptionalAction,
                        default=None)
    handle.add_argument('--gamma', type=int)
    handle.add_argument('--base-willmore', dest='base_willmore', type=float)

    weierstrass = commands.add_parser('weierstrass', parents=[common],
                                      help='integrate a spinor to an immersion')
    weierstrass.add_argument('--family',
                             choices=['parallel', 'saddle', 'wave', 'random'],
                             default='parallel')
    weierstrass.add_argument('--N', type=int)
    weierstrass.add_argument('--tol', type=float, default=1e-8)

    classify = commands.add_parser('classify', parents=[common],
                                   help='classify a flat critical point')
    classify.add_argument('--family',
                          choices=['parallel', 'saddle', 'wave', 'random'],
                          default='saddle')
    classify.add_argument('--N', type=int)
    classify.add_argument('--tol', type=float)

    sphere = commands.add_parser('sphere', parents=[common],
                                 help='twistor spinors on the round sphere')
    sphere.add_argument('--a', type=float)
    sphere.add_argument('--b', type=float)
    sphere.add_argument('--samples', type=int)
    sphere.add_argument('--seed', type=int)

    counts = commands.add_parser('counts', parents=[common],
                                 help='number of spin structures')
    counts.add_argument('--gamma', type=int, default=1)
    return parser


def _overrides(args):
    def pick(*names):
        return {name: getattr(args, name, None) for name in names}

    overrides = {
        'output': {'directory': args.out},
        'torus': pick('N'),
    }
    if args.command == 'verify':
        overrides['verify'] = pick('levels', 'samples', 'seed')
    elif args.command == 'saddle':
        overrides['saddle'] = pick('ell', 'theta', 'c')
    elif args.command == 'flow':
        overrides['flow'] = pick('tol', 't_max', 'dt0', 'seed', 'amplitude',
                                 'max_steps')
        overrides['saddle'] = pick('c', 't')
    elif args.command == 'handle':
        overrides['handle'] = pick('L', 'double', 'gamma', 'base_willmore')
    elif args.command == 'sphere':
        overrides['sphere'] = pick('a', 'b', 'samples', 'seed')
    return overrides


def _configure_logging(args):
    if args.quiet:
        level = logging.ERROR
    else:
        level = [logging.WARNING, logging.INFO, logging.DEBUG][min(args.verbose, 2)]
    logging.basicConfig(level=level, stream=sys.stderr,
                        format='%(asctime)s %(levelname)s %(name)s: %(message)s')


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    _configure_logging(args)

    if args.command == 'counts':
        return cmd_counts(args.gamma)

    try:
        config = load_config(args.config, overrides=_overrides(args))
    except ValidationError as e:
        sys.stderr.write('invalid configuration: %s\n' % (e.messages,))
        return EXIT_CONFIG
    except OSError as e:
        sys.stderr.write('cannot read configuration: %s\n' % e)
        return EXIT_CONFIG

    try:
        if args.command == 'verify':
            return cmd_verify(config)
        if args.command == 'saddle':
            return cmd_saddle(config)
        if args.command == 'flow':
            return cmd_flow(config, start=args.start)
        if args.command == 'handle':
            return cmd_handle(config)
        if args.command == 'weierstrass':
            return cmd_weierstrass(config, family=args.family, tol=args.tol)
        if args.command == 'classify':
            return cmd_classify(config, family=args.family, tol=args.tol)
        if args.command == 'sphere':
            return cmd_sphere(config)
    except RefinementError as e:
        logger.warning('%s', e.messages)
        return EXIT_FAILED
    except SpinergyError as e:
        logger.error('%s: %s', e.__class__.__name__, e.messages)
        return EXIT_FAILED
    parser.error('unknown command %r' % args.command)


if __name__ == '__main__':
    sys.exit(main())
