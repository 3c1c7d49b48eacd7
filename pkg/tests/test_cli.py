import csv
import json
import os

import pytest

from spinergy import __version__, cli
from spinergy.cli import EXIT_CONFIG, EXIT_FAILED, EXIT_OK, build_parser, main
from spinergy.functional import identity_suite
from spinergy.geometry import SpinCharacter


def read_json(directory, name):
    with open(os.path.join(str(directory), name)) as f:
        return json.load(f)


def read_csv(directory, name):
    with open(os.path.join(str(directory), name), newline='') as f:
        return list(csv.reader(f))


def check_names(report):
    return [check['name'] for check in report['checks']]


class TestParser:
    def test_list_arguments(self):
        args = build_parser().parse_args(['verify', '--levels', '16,32,64'])
        assert args.levels == [16, 32, 64]
        args = build_parser().parse_args(['handle', '--L', '1,2.5'])
        assert args.L == [1.0, 2.5]

    def test_invalid_list(self, capsys):
        with pytest.raises(SystemExit):
            build_parser().parse_args(['verify', '--levels', '16,x'])
        assert 'expected comma separated integers' in capsys.readouterr().err

    def test_boolean_flag(self):
        assert build_parser().parse_args(['handle', '--no-double']).double is False
        assert build_parser().parse_args(['handle']).double is None

    def test_saddle_flow_start(self):
        args = build_parser().parse_args(['flow', '--start', 'saddle',
                                          '--c', '-1', '--t', '0.02'])
        assert (args.c, args.t, args.t_max) == (-1.0, 0.02, None)

    def test_command_is_required(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args([])

    def test_version(self, capsys):
        with pytest.raises(SystemExit):
            build_parser().parse_args(['--version'])
        assert __version__ in capsys.readouterr().out


class TestCounts:
    @pytest.mark.parametrize('gamma, total, bounding, nonbounding', [
        (1, 4, 3, 1),
        (2, 16, 10, 6),
    ])
    def test_counts(self, capsys, gamma, total, bounding, nonbounding):
        assert main(['counts', '--gamma', str(gamma)]) == EXIT_OK
        assert json.loads(capsys.readouterr().out) == {
            'gamma': gamma, 'total': total, 'bounding': bounding,
            'nonbounding': nonbounding,
        }


class TestConfigErrors:
    def test_invalid_override(self, tmp_path, capsys):
        assert main(['saddle', '--N', '7', '--out', str(tmp_path)]) == EXIT_CONFIG
        assert 'invalid configuration' in capsys.readouterr().err

    def test_invalid_file(self, tmp_path, capsys):
        path = tmp_path / 'experiment.toml'
        path.write_text('[saddle]\nell = -1.0\n')
        assert main(['saddle', '--config', str(path)]) == EXIT_CONFIG

    def test_missing_file(self, tmp_path, capsys):
        path = tmp_path / 'missing.toml'
        assert main(['sphere', '--config', str(path)]) == EXIT_CONFIG
        assert 'cannot read configuration' in capsys.readouterr().err


class TestVerify:
    def test_needs_three_levels(self, tmp_path):
        assert main(['verify', '--levels', '16', '--out', str(tmp_path)]) == \
            EXIT_FAILED
        assert not os.path.exists(str(tmp_path / 'verify.json'))

    def test_writes_one_table_per_identity(self, tmp_path):
        code = main(['verify', '--levels', '16,32,64', '--samples', '1',
                     '--out', str(tmp_path)])
        assert code in (EXIT_OK, EXIT_FAILED)
        tables = sorted(name for name in os.listdir(str(tmp_path))
                        if name.startswith('verify_'))
        assert len(tables) == 9
        rows = read_csv(tmp_path, 'verify_trace_q1.csv')
        assert rows[0] == ['N', 'residual', 'order']
        assert [row[0] for row in rows[1:]] == ['16', '32', '64']
        report = read_json(tmp_path, 'verify.json')
        assert report['passed'] == (code == EXIT_OK)

    def test_every_spin_structure_is_sampled(self, tmp_path, monkeypatch):
        seen = []

        def recording_suite(phi):
            seen.append((tuple(phi.torus.character), phi.torus.N))
            return identity_suite(phi)

        monkeypatch.setattr(cli, 'identity_suite', recording_suite)
        main(['verify', '--levels', '16,32,64', '--samples', '2',
              '--out', str(tmp_path)])
        assert sorted(set(seen)) == sorted(
            (tuple(chi), N) for chi in SpinCharacter.all() for N in (16, 32, 64))
        assert len(seen) == 4 * 3 * 2
        report = read_json(tmp_path, 'verify.json')
        assert report['values']['spin_structures'] == 4.0


class TestSaddle:
    def test_saddle(self, tmp_path):
        assert main(['saddle', '--N', '32', '--out', str(tmp_path)]) == EXIT_OK
        report = read_json(tmp_path, 'saddle.json')
        assert report['passed']
        assert report['verdict'] == 'saddle_family'
        assert abs(report['values']['f2_closed'] - 4.0) < 1e-6
        assert 'energy_pi_squared' in check_names(report)

    def test_wrong_spin_structure(self, tmp_path):
        path = tmp_path / 'experiment.toml'
        path.write_text('[torus]\nchi = [1, 1]\nN = 16\n')
        assert main(['saddle', '--config', str(path),
                     '--out', str(tmp_path)]) == EXIT_FAILED
        report = read_json(tmp_path, 'saddle.json')
        assert check_names(report) == ['descent']
        assert not report['passed']


class TestFlow:
    def test_parallel_start(self, tmp_path):
        assert main(['flow', '--N', '16', '--t-max', '2', '--out',
                     str(tmp_path)]) == EXIT_OK
        report = read_json(tmp_path, 'flow.json')
        assert report['verdict'] == 'converged'
        assert report['values']['final_energy'] < 1e-8
        rows = read_csv(tmp_path, 'flow.csv')
        assert rows[0] == ['time', 'energy', 'grad_norm', 'dt',
                           'dissipation_ratio']

    def test_step_limit(self, tmp_path):
        assert main(['flow', '--N', '16', '--max-steps', '2', '--out',
                     str(tmp_path)]) == EXIT_FAILED
        assert read_json(tmp_path, 'flow.json')['verdict'] == 'max_steps'


class TestHandle:
    def test_handle(self, tmp_path):
        assert main(['handle', '--L', '10,1', '--gamma', '2',
                     '--out', str(tmp_path)]) == EXIT_OK
        rows = read_csv(tmp_path, 'handle.csv')
        assert rows[0] == ['L', 'willmore', 'bound', 'neck_distance',
                           'neck_residual']
        assert [float(row[0]) for row in rows[1:]] == [1.0, 10.0]
        report = read_json(tmp_path, 'handle.json')
        assert report['passed']
        assert report['values']['handle_L_for_budget'] == 629.0
        assert 'approaches_infimum' in check_names(report)

    def test_torus_has_no_almost_minimiser(self, tmp_path):
        assert main(['handle', '--L', '5', '--gamma', '1',
                     '--out', str(tmp_path)]) == EXIT_OK
        report = read_json(tmp_path, 'handle.json')
        assert 'approaches_infimum' not in check_names(report)


class TestWeierstrass:
    def test_parallel(self, tmp_path):
        assert main(['weierstrass', '--family', 'parallel', '--N', '8',
                     '--out', str(tmp_path)]) == EXIT_OK
        report = read_json(tmp_path, 'weierstrass.json')
        assert report['passed']
        assert 'period_lattice' in check_names(report)
        assert os.path.exists(str(tmp_path / 'weierstrass.obj'))

    def test_saddle_is_not_integrable(self, tmp_path):
        assert main(['weierstrass', '--family', 'saddle', '--N', '16',
                     '--out', str(tmp_path)]) == EXIT_FAILED
        report = read_json(tmp_path, 'weierstrass.json')
        assert not report['passed']
        assert not os.path.exists(str(tmp_path / 'weierstrass.obj'))

    def test_random_spinor_is_not_integrable(self, tmp_path):
        assert main(['weierstrass', '--family', 'random', '--N', '16',
                     '--out', str(tmp_path)]) == EXIT_FAILED
        report = read_json(tmp_path, 'weierstrass.json')
        assert report['title'] == 'weierstrass random'
        assert check_names(report) == ['isometry', 'closedness']
        assert not os.path.exists(str(tmp_path / 'weierstrass.obj'))


class TestClassify:
    def test_parallel(self, tmp_path):
        assert main(['classify', '--family', 'parallel', '--N', '16',
                     '--out', str(tmp_path)]) == EXIT_OK
        report = read_json(tmp_path, 'classify.json')
        assert report['verdict'] == 'absolute_minimiser'
        assert report['title'] == 'classify parallel'

    def test_wave_is_not_critical(self, tmp_path):
        assert main(['classify', '--family', 'wave', '--N', '16',
                     '--out', str(tmp_path)]) == EXIT_FAILED
        report = read_json(tmp_path, 'classify.json')
        assert report['verdict'] is None
        assert check_names(report) == ['critical']


class TestSphere:
    def test_given_constants(self, tmp_path):
        assert main(['sphere', '--a', '1', '--b', '0.5',
                     '--out', str(tmp_path)]) == EXIT_OK
        data = read_json(tmp_path, 'sphere.json')
        assert data['passed']
        assert len(data['reports']) == 1
        assert data['reports'][0]['values']['K'] == pytest.approx(5.0)

    def test_random_constants(self, tmp_path):
        assert main(['sphere', '--samples', '5', '--seed', '3',
                     '--out', str(tmp_path)]) == EXIT_OK
        data = read_json(tmp_path, 'sphere.json')
        assert len(data['reports']) == 5
        assert all(report['verdict'] == 'sphere' for report in data['reports'])
