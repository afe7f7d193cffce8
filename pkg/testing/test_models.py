import json

import pytest

from fractions import Fraction

from conekit.cones import FaceTag, MembershipTier, PositiveCone
from conekit.errors import InstanceError
from conekit.models import (
    InstanceDocument, ResultDocument, canonical_json, encode, face_from_value, load_json, window_from_value
)

from testing.conftest import SWAP


def test_load_json_rejects_floats():
    assert load_json('[1, "1/2"]') == [1, '1/2']

    with pytest.raises(InstanceError):
        load_json('[0.5]')

    with pytest.raises(InstanceError):
        load_json('{"cone": ')


def test_canonical_json():
    assert canonical_json({'b': 1, 'a': [1, 2]}) == '{"a":[1,2],"b":1}'


def test_instance_round_trip(swap):
    assert swap.name == 'swap'
    assert swap.dim == 2
    assert swap.hyperplanes == ((1, -1),)
    assert swap.group().labels == ['s']

    again = InstanceDocument.loads(swap.dumps())
    assert again == swap, f'Round trip changed the instance:\n{swap.dumps()}'


def test_instance_errors():
    with pytest.raises(InstanceError):
        InstanceDocument.from_dict({**SWAP, 'extra': 1})

    with pytest.raises(InstanceError):
        InstanceDocument.from_dict({**SWAP, 'version': 'conekit-instance/9'})

    with pytest.raises(InstanceError):
        InstanceDocument.from_dict({'cone': {'type': 'spherical'}})

    with pytest.raises(InstanceError):
        InstanceDocument.from_dict({'cone': {'type': 'polyhedral', 'rays': [[1, 0], [0, 1]]}, 'xi': [1, 2, 3]})

    with pytest.raises(InstanceError):
        InstanceDocument.from_dict({'cone': {'type': 'polyhedral', 'rays': [[1, 0], [0, 1]]}}).group()


def test_instance_lattice():
    doc = InstanceDocument.from_dict({'cone': {'type': 'polyhedral', 'rays': [[1, 0], [0, 1]]}, 'lattice': {'basis': [[1, 1], [0, 2]]}})
    assert doc.lattice.contains((Fraction(1), Fraction(1)))
    assert not doc.lattice.contains((Fraction(1), Fraction(0)))


def test_windows():
    box = window_from_value([[0, 2], [0, 1]], 2, bounded=True)
    assert box.is_bounded()
    assert len(box.vrep.points) == 4

    cone = window_from_value([[1, 0], [1, 1]], 2)
    assert cone.is_cone()
    assert cone.vrep.rays == ((1, 0), (1, 1))

    assert window_from_value({'box': [[0, 1], [0, 1]]}, 2) == window_from_value([[0, 1], [0, 1]], 2, bounded=True)

    with pytest.raises(InstanceError):
        window_from_value([[0, 2]], 2, bounded=True)

    with pytest.raises(InstanceError):
        window_from_value([[2, 0], [0, 1]], 2, bounded=True)


def test_faces(quadrant):
    c = PositiveCone(2)
    face = face_from_value({'support': [[2, 0]]}, c)
    assert face.tag == FaceTag.SUPPORT
    assert face.support == ((1, 0),)

    assert face_from_value({'point': [1, 0]}, quadrant).active == frozenset({0})

    with pytest.raises(InstanceError):
        face_from_value({'support': [[1, 0]]}, quadrant)


def test_encode():
    assert encode(Fraction(1, 2)) == '1/2'
    assert encode(MembershipTier.INTERIOR) == 'Interior'
    assert encode({'v': (Fraction(3), Fraction(-1, 3))}) == {'v': ['3', '-1/3']}


def test_result_document():
    doc = ResultDocument('hull', {'command': 'hull'}, result={'vertices': [['1', '1']]})
    assert doc.exit_code == 0

    text = doc.dumps()
    assert text.endswith('\n')
    assert json.loads(text)['version'] == 'conekit-result/1'
    assert ResultDocument.loads(text) == doc

    assert ResultDocument('hull', {}, status='partial').exit_code == 2
    assert ResultDocument('hull', {}, status='error').exit_code == 1
