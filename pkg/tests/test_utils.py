import csv
import json
import math
import os

import pytest

from spinergy.errors import RefinementError
from spinergy.utils import THREADS_VARIABLE, atomic_write, convergence_rows, \
    format_json, observed_orders, require_levels, thread_count, write_csv, \
    write_json


class TestObservedOrders:
    def test_fourth_order(self):
        levels = [32, 64, 128]
        residuals = [1.0, 1.0 / 16, 1.0 / 256]
        assert observed_orders(levels, residuals) == \
            [pytest.approx(4.0), pytest.approx(4.0)]

    def test_exact_finer_level(self):
        assert observed_orders([32, 64], [1e-3, 0.0]) == [math.inf]

    def test_both_exact(self):
        assert math.isnan(observed_orders([32, 64], [0.0, 0.0])[0])

    def test_exact_coarse_level(self):
        assert observed_orders([32, 64], [0.0, 1e-3]) == [-math.inf]

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            observed_orders([32, 64], [1.0])


class TestConvergenceRows:
    def test_coarsest_level_has_no_order(self):
        rows = convergence_rows([16, 32], [1.0, 0.25])
        assert rows[0] == (16, 1.0, None)
        assert rows[1][:2] == (32, 0.25)
        assert rows[1][2] == pytest.approx(2.0)


class TestRequireLevels:
    def test_sorted_unique_levels(self):
        assert require_levels([128, 32, 64, 32]) == [32, 64, 128]

    def test_too_few_levels(self):
        with pytest.raises(RefinementError) as excinfo:
            require_levels([32, 64, 64])
        assert str(excinfo.value) == \
            'insufficient refinement levels: need at least 3, got [32, 64]'

    def test_custom_minimum(self):
        assert require_levels([8, 16], minimum=2) == [8, 16]


class TestAtomicWrite:
    def test_writes_file(self, tmp_path):
        path = str(tmp_path / 'out' / 'report.txt')
        atomic_write(path, 'hello\n')
        with open(path) as f:
            assert f.read() == 'hello\n'

    def test_replaces_existing_file(self, tmp_path):
        path = str(tmp_path / 'report.txt')
        atomic_write(path, 'first')
        atomic_write(path, 'second')
        with open(path) as f:
            assert f.read() == 'second'
        assert os.listdir(str(tmp_path)) == ['report.txt']


class TestWriteCsv:
    def test_rows_and_line_endings(self, tmp_path):
        path = str(tmp_path / 'table.csv')
        write_csv(path, ['N', 'residual', 'order'],
                  [(32, 0.5, None), (64, 0.03125, 4.0)])
        with open(path, 'rb') as f:
            content = f.read()
        assert content == b'N,residual,order\r\n32,0.5,\r\n64,0.03125,4.0\r\n'

    def test_floats_keep_full_precision(self, tmp_path):
        path = str(tmp_path / 'table.csv')
        write_csv(path, ['x'], [(0.1 + 0.2,)])
        with open(path, newline='') as f:
            rows = list(csv.reader(f))
        assert float(rows[1][0]) == 0.1 + 0.2


class TestJson:
    def test_format_is_sorted_and_indented(self):
        assert format_json({'b': 1, 'a': [1.5]}) == \
            '{\n  "a": [\n    1.5\n  ],\n  "b": 1\n}\n'

    def test_non_finite_values(self):
        assert json.loads(format_json({'order': math.inf}))['order'] == math.inf

    def test_write_json(self, tmp_path):
        path = str(tmp_path / 'report.json')
        write_json(path, {'passed': True})
        with open(path) as f:
            assert json.load(f) == {'passed': True}


class TestThreadCount:
    def test_unset(self):
        assert thread_count({}) == 1

    def test_valid(self):
        assert thread_count({THREADS_VARIABLE: '4'}) == 4

    @pytest.mark.parametrize('value', ['0', '-2', 'many'])
    def test_invalid_values_fall_back_to_one(self, value):
        assert thread_count({THREADS_VARIABLE: value}) == 1
