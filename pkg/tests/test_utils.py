import time

import numpy as np
import pytest

from utils import timer
from utils.common_utils import ProgressBar, make_table, parallel_map, worker_count
from utils.errors import ConfigError, RootFindingFailed
from utils.output_utils import print_error, read_csv, read_json, write_csv, write_json, write_table


def test_timer_stages():
    timer.reset()
    with timer.counter('ignored'):
        pass
    assert timer.summary() == {}

    timer.start()
    for _ in range(2):
        with timer.counter('solve'):
            time.sleep(0.01)
    totals = timer.get_times(['solve', 'missing'])
    assert totals[0] >= 0.02 and totals[1] == 0.
    assert timer.line().startswith('solve: ')
    timer.reset()


def test_progress_bar():
    bar = ProgressBar(10, 4)
    assert bar.get_bar(0) == '░' * 10
    assert bar.get_bar(2) == '█' * 5 + '░' * 5
    assert bar.get_bar(7) == '█' * 10
    assert ProgressBar(5, 0).get_bar(1) == '█' * 5


def test_worker_count(monkeypatch):
    monkeypatch.setenv('ORBITRACE_THREADS', '2')
    assert worker_count(8) == 2
    assert worker_count(1) == 1
    monkeypatch.setenv('ORBITRACE_THREADS', 'many')
    with pytest.raises(AssertionError):
        worker_count(4)


@pytest.mark.parametrize('workers', [1, 3])
def test_parallel_map_keeps_order(workers):
    seen = []
    results = parallel_map(lambda v: v ** 2, range(7), workers, progress=lambda done, total: seen.append((done, total)))
    assert results == [aa ** 2 for aa in range(7)]
    assert seen[-1] == (7, 7) and len(seen) == 7


def test_make_table():
    table = make_table(('E', 'error', 'class'), [(1 + 2j, 1e-9, None)], digits=2)
    assert '1.00+2.00j' in table and '1e-09' in table


def test_csv_cells(tmp_path):
    path = tmp_path / 'sub' / 'table.csv'
    write_csv(str(path), ('a', 'b', 'c'), [(0.1, None, True), (np.float64(2.5), 3, False)], 'two rows')
    comment, rows = read_csv(path)
    assert comment == 'two rows'
    assert rows[0] == {'a': '0.1', 'b': '', 'c': 'true'}
    assert rows[1] == {'a': '2.5', 'b': '3', 'c': 'false'}
    with pytest.raises(AssertionError):
        write_csv(str(path), ('a', 'b'), [(1,)], 'short row')


def test_json_values(tmp_path):
    path = tmp_path / 'report.json'
    write_json(str(path), {'E': 1 + 2j, 'values': np.array([1., 2.]), 'bad': float('nan'), 'n': np.int64(3)})
    assert read_json(path) == {'E': [1., 2.], 'values': [1., 2.], 'bad': 'nan', 'n': 3}

    write_table(str(tmp_path / 'levels'), ('n', 'E'), [(0, 1j)], 'levels', 'json')
    assert read_json(tmp_path / 'levels.json') == {'comment': 'levels', 'rows': [{'n': 0, 'E': [0., 1.]}]}


def test_error_records(capsys):
    error = RootFindingFailed('No pair.', family='well', energy=1 + 2j, found=np.int64(1))
    assert error.record() == {'error': 'RootFindingFailed', 'message': 'No pair.', 'family': 'well',
                              'energy': [1., 2.], 'found': 1}

    print_error(ConfigError('steps', 'too few'))
    assert capsys.readouterr().out.strip() == '{"error": "ConfigError", "key": "steps", "message": "steps: too few"}'
