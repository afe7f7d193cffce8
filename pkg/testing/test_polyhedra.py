import random

import pytest

from conekit.errors import InconsistentPolyhedron, NegativeOnP, NotPointed
from conekit.polyhedra import (
    AffineForm, Constraint, HRep, VRep, cone_from_rays, dominating_subset, dual_description, face_lattice, hilbert_basis, minkowski_sum,
    polyhedron_from_constraints, recession_and_asymptotic, verify_polyhedron
)


def test_quadrant_descriptions():
    q = cone_from_rays(2, [(1, 0), (0, 1)])

    assert q.hrep.inequalities == (Constraint((0, 1), 0), Constraint((1, 0), 0)), f'Unexpected facets: {q.hrep.inequalities}'
    assert q.vrep.points == ((0, 0),)
    assert q.vrep.rays == ((0, 1), (1, 0))
    assert q.is_cone() and q.is_pointed() and not q.is_bounded()

    assert q.minimum((1, 1)) == 0
    assert q.minimum((1, -1)) is None, 'the quadrant is unbounded in direction (-1, 1)'


def test_box_and_empty():
    box = polyhedron_from_constraints(2, [((1, 0), 0), ((-1, 0), -1), ((0, 1), 0), ((0, -1), -1)])
    assert box.vrep.points == ((0, 0), (0, 1), (1, 0), (1, 1)), f'Unexpected vertices: {box.vrep.points}'
    assert box.is_bounded() and box.affine_dim() == 2

    empty = polyhedron_from_constraints(1, [((1,), 1), ((-1,), 0)])
    assert empty.is_empty()
    assert not empty.contains((0,))


def test_dual_description_drops_redundant_rows():
    triangle = dual_description(HRep(2, (Constraint((1, 0), 0), Constraint((0, 1), 0), Constraint((-1, -1), -1), Constraint((-2, -2), -3))))

    assert triangle.vrep.points == ((0, 0), (0, 1), (1, 0))
    assert len(triangle.hrep.inequalities) == 3, f'Redundant row kept: {triangle.hrep.inequalities}'
    assert dual_description(triangle.vrep) == triangle


def test_lines_are_not_pointed():
    half_plane = cone_from_rays(2, [(1, 0)], lines=[(0, 1)])
    assert not half_plane.is_pointed()

    with pytest.raises(NotPointed):
        hilbert_basis(half_plane)


def test_verify_polyhedron():
    q = cone_from_rays(2, [(1, 0), (0, 1)])
    assert verify_polyhedron(q.hrep, q.vrep) == q

    with pytest.raises(InconsistentPolyhedron):
        verify_polyhedron(q.hrep, VRep(2, ((0, 0),), ((1, 0), (-1, 0))))


def test_face_lattice_of_quadrant():
    nodes = face_lattice(cone_from_rays(2, [(1, 0), (0, 1)]))

    assert [n.dim for n in nodes] == [0, 1, 1, 2], f'Unexpected face dimensions: {[n.dim for n in nodes]}'
    assert nodes[-1].subfaces == (1, 2), 'the quadrant covers its two rays'
    assert nodes[0].superfaces == (1, 2), 'the apex is covered by both rays'
    assert nodes[-1].active == frozenset()


def test_minkowski_and_recession():
    a = polyhedron_from_constraints(2, [((1, 0), 0), ((-1, 0), -1)], [((0, 1), 0)])
    b = polyhedron_from_constraints(2, [((0, 1), 0), ((0, -1), -1)], [((1, 0), 0)])
    square = minkowski_sum(a, b)
    assert len(square.vrep.points) == 4, f'Unexpected vertices of the sum: {square.vrep.points}'

    p = polyhedron_from_constraints(2, [((1, 0), 1), ((0, 1), 0)])
    rec, asy = recession_and_asymptotic(p)
    assert rec.vrep.rays == ((0, 1), (1, 0))
    assert asy == [(0, 1), (1, 0)]


def test_hilbert_basis():
    basis = hilbert_basis(cone_from_rays(2, [(1, 0), (1, 2)]))
    assert basis == [(1, 0), (1, 1), (1, 2)], f'Unexpected Hilbert basis: {basis}'


def test_dominating_subset():
    q = cone_from_rays(2, [(1, 0), (0, 1)])
    forms = [AffineForm((1, 0)), AffineForm((0, 1)), AffineForm((1, 1)), AffineForm((2, 0))]

    dom = dominating_subset(q, forms)
    assert dom.phi0 == (0, 1), f'Only the coordinate forms are minimal: {dom.phi0}'
    assert [sorted(p.minimizers) for p in dom.patches] == [[0], [1]]
    assert dom.level_set.vrep.points == ((1, 1),)

    with pytest.raises(NegativeOnP):
        dominating_subset(q, [AffineForm((-1, 0))])


def test_descriptions_agree_on_random_polytopes():
    rng = random.Random(11)

    for _ in range(10):
        points = [tuple(rng.randint(-5, 5) for _ in range(3)) for _ in range(8)]
        from_v = dual_description(VRep(3, tuple(points)))
        from_h = dual_description(from_v.hrep)

        assert from_h == from_v, f'Representations of conv({points}) disagree'
        assert all(from_v.contains(p) for p in points)
        assert set(from_v.vrep.points) <= set(points), 'vertices are input points'


def test_face_lattice_of_selected_facets():
    cube = polyhedron_from_constraints(3, [((1, 0, 0), 0), ((-1, 0, 0), -1), ((0, 1, 0), 0), ((0, -1, 0), -1), ((0, 0, 1), 0), ((0, 0, -1), -1)])
    nodes = face_lattice(cube)
    assert [sum(1 for n in nodes if n.dim == d) for d in range(4)] == [8, 12, 6, 1], 'a cube has 8 vertices, 12 edges, 6 squares'

    bottom = cube.hrep.inequalities.index(Constraint((0, 0, 1), 0))
    nodes = face_lattice(cube, [bottom])
    assert [sum(1 for n in nodes if n.dim == d) for d in range(4)] == [4, 4, 1, 0], 'faces of one square only'
    square = nodes[-1]
    assert len(square.subfaces) == 4 and square.superfaces == ()
