import pytest

from conekit.cones import (
    FaceDescriptor, FaceTag, MembershipTier, PositiveCone, Projection, QuadraticCone, all_faces, dagger_face, dual_cone, face_generators, face_spaces,
    membership, project_cone, smallest_face
)
from conekit.errors import FullFace, InvalidCone, NotAFace, NotInClosure, UnsupportedCone
from conekit.exact import QMatrix


def test_polyhedral_membership(quadrant):
    assert membership(quadrant, (1, 1), MembershipTier.INTERIOR)
    assert membership(quadrant, (1, 0), MembershipTier.CLOSURE)
    assert not membership(quadrant, (1, 0), MembershipTier.INTERIOR), 'boundary points are not interior'
    assert not membership(quadrant, (1, 0), MembershipTier.OPEN_DUAL)
    assert membership(quadrant, (1, 0), MembershipTier.CLOSED_DUAL)


def test_quadratic_membership(lorentz3):
    assert membership(lorentz3, (2, 1, 1), MembershipTier.INTERIOR)
    assert membership(lorentz3, (1, 1, 0), MembershipTier.CLOSURE)
    assert not membership(lorentz3, (1, 1, 0), MembershipTier.INTERIOR)
    assert not membership(lorentz3, (-2, 1, 1), MembershipTier.CLOSURE), 'the opposite sheet is excluded'
    assert dual_cone(lorentz3) == lorentz3, 'the Lorentz cone is self-dual'


def test_quadratic_normalization():
    assert QuadraticCone(QMatrix.of([[2, 0], [0, -2]]), (3, 0)) == QuadraticCone(QMatrix.of([[1, 0], [0, -1]]), (1, 0))

    with pytest.raises(InvalidCone):
        QuadraticCone(QMatrix.of([[1, 0], [0, 1]]), (1, 0))


def test_positive_cone():
    c = PositiveCone(2)
    assert c.dim == 3
    assert membership(c, (1, 0, 1), MembershipTier.INTERIOR)
    assert membership(c, (1, 0, 0), MembershipTier.CLOSURE)
    assert not membership(c, (1, 0, 0), MembershipTier.INTERIOR), 'rank one tensors lie on the boundary'
    assert not membership(c, (1, 3, 1), MembershipTier.CLOSURE)
    assert membership(c, (1, 0, 1), MembershipTier.OPEN_DUAL)
    assert dual_cone(c) == PositiveCone(2, dual=True)


def test_smallest_face_and_dagger(quadrant):
    f = smallest_face(quadrant, (1, 0))
    assert f == FaceDescriptor(FaceTag.POLYHEDRAL, active=frozenset({0})), f'Unexpected face: {f.as_dict()}'
    assert face_generators(quadrant, f) == [(1, 0)]

    dual = dual_cone(quadrant)
    g = dagger_face(quadrant, f)
    assert face_generators(dual, g) == [(0, 1)]
    assert dagger_face(dual, g) == f, 'the dagger operation is an involution'

    with pytest.raises(NotInClosure):
        smallest_face(quadrant, (-1, 0))

    with pytest.raises(NotAFace):
        face_generators(quadrant, FaceDescriptor(FaceTag.POLYHEDRAL, active=frozenset({5})))


def test_quadratic_and_positive_dagger(lorentz3):
    ray = smallest_face(lorentz3, (1, 1, 0))
    assert ray.tag == FaceTag.BOUNDARY_RAY
    assert dagger_face(lorentz3, ray).ray == (1, -1, 0)

    c = PositiveCone(2)
    f = smallest_face(c, (1, 0, 0))
    assert f.support == ((1, 0),)
    assert dagger_face(c, f).support == ((0, 1),)


def test_face_spaces(quadrant, lorentz3):
    spaces = face_spaces(quadrant, smallest_face(quadrant, (1, 0)))
    assert (spaces.k_f, spaces.k_upper_f) == (1, 1)
    assert spaces.t_f == ()

    apex = face_spaces(quadrant, smallest_face(quadrant, (0, 0)))
    assert (apex.k_f, apex.k_upper_f) == (0, 0)

    boundary = face_spaces(lorentz3, smallest_face(lorentz3, (1, 1, 0)))
    assert (boundary.k_f, boundary.k_upper_f) == (1, 2), 'V^F of a boundary ray is its form-orthogonal plane'

    sym = PositiveCone(2)
    flag = face_spaces(sym, smallest_face(sym, (1, 0, 0)))
    assert (flag.k_f, flag.k_upper_f) == (1, 2)


def test_all_faces(quadrant, lorentz3):
    assert len(all_faces(quadrant)) == 4

    with pytest.raises(UnsupportedCone):
        all_faces(lorentz3)


def test_project_cone(quadrant):
    f = smallest_face(quadrant, (1, 0))
    image = project_cone(quadrant, f, Projection.MOD_VUPPER_F)
    assert image.spec.dim == 1

    with pytest.raises(FullFace):
        project_cone(quadrant, smallest_face(quadrant, (1, 1)), Projection.MOD_VF)

    c = PositiveCone(2)
    face = smallest_face(c, (1, 0, 0))
    assert project_cone(c, face, Projection.MOD_VUPPER_F).spec == PositiveCone(1)

    with pytest.raises(UnsupportedCone):
        project_cone(c, face, Projection.MOD_VF)
