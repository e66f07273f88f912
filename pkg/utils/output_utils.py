import csv
import json
import os
import numpy as np

SPECTRUM_COLUMNS = ('family', 'families', 'n', 'E_re', 'E_im', 'W_residual', 'iterations', 'orbit_class', 'partner',
                    'crossover', 'status', 'Eq_re', 'Eq_im', 'match_error', 'message')
QUANTUM_COLUMNS = ('index', 'E_re', 'E_im', 'witness')
ORBIT_COLUMNS = ('s', 't_re', 't_im', 'x_re', 'x_im', 'p_re', 'p_im')
SPIN_COLUMNS = ('s', 't_re', 't_im', 'nx_re', 'nx_im', 'ny_re', 'ny_im', 'nz_re', 'nz_im')
SWEEP_COLUMNS = ('delta1', 'Ep_re', 'Ep_im', 'Em_re', 'Em_im', 'alignment', 'orbit_class', 'eig_error', 'closure',
                 'casimir_drift', 'status', 'message')
PY_SWEEP_COLUMNS = ('p_y', 'family', 'n', 'E_re', 'E_im', 'orbit_class', 'crossover', 'status')


def _number(value):
    if value is None:
        return ''
    if isinstance(value, (bool, np.bool_)):
        return 'true' if value else 'false'
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _plain(value):
    """JSON form: complex as [re, im], numpy scalars and arrays as Python values."""
    if isinstance(value, (complex, np.complexfloating)):
        return [float(value.real), float(value.imag)]
    if isinstance(value, np.ndarray):
        return [_plain(aa) for aa in value.tolist()]
    if isinstance(value, (list, tuple)):
        return [_plain(aa) for aa in value]
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, float) and not np.isfinite(value):
        return str(value)
    return value


def write_csv(path, columns, rows, comment):
    """rows is a list of tuples in column order. The first line is '# ' + comment, the second the header."""
    os.makedirs(os.path.dirname(path) or '.', exist_ok=True)
    with open(path, 'w', newline='') as f:
        f.write(f'# {comment}\n')
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(columns)
        for row in rows:
            assert len(row) == len(columns), f'Row of length {len(row)} for {len(columns)} columns.'
            writer.writerow([_number(aa) for aa in row])


def read_csv(path):
    """Return (comment, rows as dicts of strings)."""
    with open(path, newline='') as f:
        comment = f.readline().rstrip('\n')
        assert comment.startswith('# '), f'{path} has no header comment.'
        return comment[2:], list(csv.DictReader(f))


def write_json(path, data):
    os.makedirs(os.path.dirname(path) or '.', exist_ok=True)
    with open(path, 'w') as f:
        json.dump(_plain(data), f, indent=2, sort_keys=True)
        f.write('\n')


def read_json(path):
    with open(path) as f:
        return json.load(f)


def write_table(path, columns, rows, comment, fmt):
    """CSV or JSON (a list of records under 'rows') for the same table."""
    if fmt == 'csv':
        write_csv(f'{path}.csv', columns, rows, comment)
    else:
        write_json(f'{path}.json', {'comment': comment, 'rows': [dict(zip(columns, row)) for row in rows]})


def _split(value):
    return (None, None) if value is None else (complex(value).real, complex(value).imag)


def spectrum_rows(records):
    rows = []
    for record in records:
        E, Eq = _split(record.E_semiclassical), _split(record.E_quantum_match)
        rows.append((record.family_label, '|'.join(record.families), record.n, *E, record.W_residual,
                     record.iterations, record.orbit_class, record.partner, record.crossover, record.status, *Eq,
                     record.match_error, record.message))
    return rows


def quantum_rows(values, witnesses=None):
    witnesses = [None] * len(values) if witnesses is None else witnesses
    return [(i, complex(v).real, complex(v).imag, w) for i, (v, w) in enumerate(zip(values, witnesses))]


def orbit_rows(orbit):
    return [(s, t.real, t.imag, x.real, x.imag, p.real, p.imag) for s, t, x, p in zip(orbit.s, orbit.t, orbit.x,
                                                                                       orbit.p)]


def spin_rows(trajectory):
    rows = []
    for s, t, n in zip(trajectory.s, trajectory.t, trajectory.n):
        rows.append((s, t.real, t.imag, *[c for aa in n for c in (aa.real, aa.imag)]))
    return rows


def sweep_rows(rows):
    return [(aa['delta1'], *_split(aa['E_plus']), *_split(aa['E_minus']), aa['alignment'], aa['orbit_class'],
             aa['eig_error'], aa['closure'], aa['casimir_drift'], aa['status'], aa['message']) for aa in rows]


def py_sweep_rows(sweep):
    return [(p_y, aa.family_label, aa.n, *_split(aa.E_semiclassical), aa.orbit_class, aa.crossover, aa.status)
            for p_y, records in sweep for aa in records]


def print_error(error):
    """The machine readable record of a failed command, one JSON line on stdout."""
    print(json.dumps(_plain(error.record()), sort_keys=True))
