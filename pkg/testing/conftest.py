import json

import pytest
import fakeredis

from conekit.cones import PolyhedralCone, QuadraticCone
from conekit.exact import QMatrix
from conekit.groups import validate_group
from conekit.helpers import ResultStore
from conekit.models import InstanceDocument

QUADRANT = {'cone': {'type': 'polyhedral', 'rays': [[1, 0], [0, 1]]}}

SWAP = {
    'name': 'swap',
    'cone': {'type': 'polyhedral', 'rays': [[1, 0], [0, 1]]},
    'group': {'generators': [{'label': 's', 'matrix': [[0, 1], [1, 0]]}]},
    'xi': [1, 2],
    'hyperplanes': [[1, -1]],
    'base_chamber': [[1, 0], [1, 1]],
    'window': [[1, 0], [0, 1]],
}

DIHEDRAL = {
    'name': 'dihedral',
    'cone': {'type': 'quadratic', 'form': [[1, 0], [0, -2]], 'selector': [1, 0]},
    'group': {'generators': [{'label': 'a', 'matrix': [[3, -4], [2, -3]]}, {'label': 'b', 'matrix': [[3, 4], [-2, -3]]}]},
    'xi': [1, 0],
}

REFLECTION = {
    'name': 'reflection12',
    'cone': {'type': 'quadratic', 'form': [[1, 0, 0], [0, -1, 0], [0, 0, -1]], 'selector': [1, 0, 0]},
    'group': {'generators': [
        {'label': 's1', 'matrix': [[1, 0, 0], [0, 0, 1], [0, 1, 0]]},
        {'label': 's2', 'matrix': [[1, 0, 0], [0, 1, 0], [0, 0, -1]]},
        {'label': 's3', 'matrix': [[3, -2, -2], [2, -1, -2], [2, -2, -1]]},
    ]},
    'xi': [4, -2, -1],
}


@pytest.fixture()
def quadrant():
    return PolyhedralCone.from_rays([(1, 0), (0, 1)])


@pytest.fixture()
def swap_gens(quadrant):
    return validate_group([('s', QMatrix.of([[0, 1], [1, 0]]))], quadrant)


@pytest.fixture()
def lorentz3():
    return QuadraticCone(QMatrix.of([[1, 0, 0], [0, -1, 0], [0, 0, -1]]), (1, 0, 0))


@pytest.fixture()
def dihedral():
    return InstanceDocument.from_dict(DIHEDRAL)


@pytest.fixture()
def reflection():
    return InstanceDocument.from_dict(REFLECTION)


@pytest.fixture()
def swap():
    return InstanceDocument.from_dict(SWAP)


@pytest.fixture()
def instance_file(tmp_path):
    """Write an instance dict to a file and return its path"""

    def _write(doc: dict, name: str = 'instance') -> str:
        path = tmp_path / f'{name}.json'
        path.write_text(json.dumps(doc), encoding='utf-8')
        return str(path)

    return _write


@pytest.fixture()
def fake_server():
    return fakeredis.FakeServer()


@pytest.fixture()
def result_store(fake_server):
    return ResultStore(lambda: fakeredis.FakeStrictRedis(server=fake_server))


@pytest.fixture()
def use_fake_store(mocker, result_store):
    mocker.patch.object(ResultStore, 'from_uri', return_value=result_store)
    return result_store
