import json

import pytest

from pprint import pformat

from conekit import cli, hulls
from conekit.cli import main, run_command

from testing.conftest import DIHEDRAL, QUADRANT, SWAP

LORENTZ = {'cone': {'type': 'quadratic', 'form': [[1, 0, 0], [0, -1, 0], [0, 0, -1]], 'selector': [1, 0, 0]}, 'subspace': [[0, 1, 0]]}
NARROW = {'cone': {'type': 'polyhedral', 'rays': [[1, 0], [3, 5]]}}
PELL = {'cone': {'type': 'quadratic', 'form': [[1, 0], [0, -2]], 'selector': [1, 0]}}
PAIR = {'cone': {'type': 'polyhedral', 'rays': [[1, 0], [0, 1]]}, 'points': [[1, 2], [2, 1]], 'window': [[1, 0], [0, 1]]}


def _run(argv):
    code, text = run_command(argv)
    doc = json.loads(text)
    print(f'Result of {" ".join(argv)}:\n{pformat(doc, indent=4)}')
    return code, doc


def test_check(instance_file):
    code, doc = _run(['check', '-i', instance_file(QUADRANT), '--point', '1,1'])

    assert code == 0
    assert doc['status'] == 'ok'
    assert doc['result']['membership']['Interior'] is True
    assert doc['result']['membership']['Closure'] is True

    code, doc = _run(['check', '-i', instance_file(QUADRANT), '--point', '[-1, 1]'])
    assert doc['result']['membership']['Closure'] is False


def test_hull(instance_file):
    code, doc = _run(['hull', '-i', instance_file(QUADRANT), '--window', '[[0,2],[0,2]]'])

    assert code == 0
    assert doc['result']['vertices'] == [['1', '1']], f'Unexpected vertices: {doc["result"]["vertices"]}'
    assert doc['certificate']['certified'] is True


def test_hull_unbounded_window(instance_file):
    code, doc = _run(['hull', '-i', instance_file(QUADRANT), '--window', '{"rays": [[1, 0], [0, 1]]}'])

    assert code == 1
    assert doc['status'] == 'error'
    assert doc['error']['code'] == 'unbounded_window'


def test_hull_partial(instance_file):
    code, doc = _run(['hull', '-i', instance_file(PELL), '--window', '[[0,4],[0,4]]', '--budget', '4'])

    assert code == 2, 'an exhausted budget is a partial result'
    assert doc['status'] == 'partial'
    assert doc['error']['code'] == 'budget_exceeded'
    assert doc['certificate']['certified'] is False
    assert doc['result']['vertices'], 'the partial hull is still reported'


def test_sail(instance_file):
    code, doc = _run(['sail', '-i', instance_file(NARROW)])

    assert code == 0
    assert doc['result']['vertices'] == [['1', '1'], ['2', '3']]


def test_fundomain_and_presentation(instance_file):
    code, doc = _run(['fundomain', '-i', instance_file(SWAP), '--xi', '1,2'])
    assert code == 0
    assert doc['result']['rays'] == [['1', '0'], ['1', '1']]
    assert doc['certificate']['interior_overlaps'] == []

    code, doc = _run(['presentation', '-i', instance_file(DIHEDRAL)])
    assert code == 0
    assert doc['result']['text'] == '<a, b | a.a, b.b>'

    code, doc = _run(['presentation', '-i', instance_file(SWAP), '--congruence', '3'])
    assert code == 0
    assert doc['result']['congruence']['index'] == 2
    assert doc['result']['congruence']['schreier_generators'] == ['s.s']


def test_fk_arrangement(instance_file):
    code, doc = _run(['fk', '-i', instance_file(SWAP)])

    assert code == 0
    assert doc['result']['cocycle'] == {'s': ['-1', '1']}
    assert doc['certificate']['identity_checks'] == 3


def test_fk_kernel(instance_file, mocker):
    code, doc = _run(['fk', '-i', instance_file(PAIR), '--point', '1,1'])

    assert code == 0
    assert doc['result']['value'] == '3'
    assert doc['certificate']['status'] == ['CertifiedComplete', 'CertifiedComplete']

    mocker.patch.object(hulls._OrbitMinima, '__call__', return_value=None)
    code, doc = _run(['fk', '-i', instance_file(PAIR), '--point', '1,1'])

    assert code == 2, 'an uncertified admissible function is a partial result'
    assert doc['status'] == 'partial'
    assert doc['certificate']['status'] == ['Stabilized', 'Stabilized']
    assert doc['result']['value'] == '3'


def test_stabilizer_and_classify(instance_file):
    code, doc = _run(['stabilizer', '--sym2', '2,1', '--samples', '10'])
    assert code == 0
    assert doc['certificate']['samples'] == 10
    assert doc['result']['split']['flag'] == {'V_F': 1, 'V^F': 2, 'V': 3}

    code, doc = _run(['classify', '-i', instance_file(LORENTZ)])
    assert code == 0
    assert doc['result'] == {'case': 'QuotientCase'}


def test_input_errors(instance_file, tmp_path):
    code, doc = _run(['frobnicate'])
    assert code == 1
    assert doc['error']['code'] == 'instance_error'

    code, doc = _run(['sail', '-i', str(tmp_path / 'missing.json')])
    assert code == 1
    assert doc['status'] == 'error'

    code, doc = _run(['sail'])
    assert code == 1

    path = tmp_path / 'floats.json'
    path.write_text('{"cone": {"type": "polyhedral", "rays": [[1.5, 0], [0, 1]]}}', encoding='utf-8')
    code, doc = _run(['sail', '-i', str(path)])
    assert code == 1


@pytest.mark.parametrize('argv', [
    ['hull', '--window', '[[0,2],[0,2]]'],
    ['fundomain', '--xi', '1,2'],
    ['decompose'],
])
def test_deterministic_output(instance_file, argv):
    path = instance_file(SWAP)

    first = run_command(argv + ['-i', path])
    assert first == run_command(argv + ['-i', path]), 'repeated runs must print the same bytes'
    assert first == run_command(argv + ['-i', path, '--threads', '2']), 'thread count must not change the output'


def test_result_store(instance_file, use_fake_store, mocker):
    spy = mocker.spy(cli, '_execute')
    argv = ['sail', '-i', instance_file(NARROW), '--store', 'localhost']

    first = run_command(argv)
    second = run_command(argv)

    assert first == second, 'a cached result must match the computed one'
    assert spy.call_count == 1, f'Second run should be served from the store, _execute ran {spy.call_count} times'

    run_command(argv + ['--timing'])
    assert spy.call_count == 2, 'timed runs bypass the store'


def test_timing(instance_file):
    code, doc = _run(['sail', '-i', instance_file(NARROW), '--timing'])
    assert code == 0
    assert 'seconds' in doc['timing']


def test_main_and_plot(instance_file, tmp_path, capsys):
    assert main(['sail', '-i', instance_file(NARROW)]) == 0
    out = capsys.readouterr().out
    assert json.loads(out)['command'] == 'sail'

    svg = tmp_path / 'sail.svg'
    assert main(['plot', '-i', instance_file(NARROW), '--what', 'sail', '-o', str(svg)]) == 0
    text = svg.read_text(encoding='utf-8')
    assert '<svg' in text

    again = tmp_path / 'again.svg'
    main(['plot', '-i', instance_file(NARROW), '--what', 'sail', '-o', str(again)])
    assert again.read_text(encoding='utf-8') == text, 'figures are reproducible'
