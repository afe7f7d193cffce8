import dataclasses

import pytest

from fractions import Fraction

from conekit.cones import MembershipTier, membership
from conekit.domains import (
    FundamentalStatus, barycentric_spine, build_fundamental_cone, congruence_subgroup, covering_tiles, extract_presentation, interior_overlaps
)
from conekit.exact import Lattice, QMatrix
from conekit.errors import FunctionalNotInOpenDual, InstanceError, NotCertified, PatchNotFaceClosed
from conekit.hulls import DecompositionMember, DecompositionPatch, sigma_decomposition
from conekit.polyhedra import cone_from_rays


def test_swap_fundamental_cone(quadrant, swap_gens):
    fd = build_fundamental_cone(quadrant, None, swap_gens, (1, 2))

    assert fd.status == FundamentalStatus.CERTIFIED
    assert fd.sigma == cone_from_rays(2, [(1, 0), (1, 1)]), f'Unexpected fundamental cone: {fd.as_dict()}'
    assert fd.boundary_facets == (0,), 'the facet on the x-axis lies in the boundary of the quadrant'
    assert [p.as_dict() for p in fd.facet_pairings] == [{'facet': 1, 'word': 's', 'image': 1}]
    assert fd.as_dict()['rays'] == [['1', '0'], ['1', '1']]

    presentation = extract_presentation(fd, swap_gens)
    assert str(presentation) == '<s | s.s>'

    with pytest.raises(FunctionalNotInOpenDual):
        build_fundamental_cone(quadrant, None, swap_gens, (1, -1))


def test_dihedral_fundamental_cone(dihedral):
    gens = dihedral.group()
    fd = build_fundamental_cone(dihedral.cone, None, gens, dihedral.xi)

    assert fd.status == FundamentalStatus.CERTIFIED
    assert fd.sigma == cone_from_rays(2, [(2, 1), (2, -1)]), f'Unexpected fundamental cone: {fd.as_dict()}'
    assert interior_overlaps(fd, 2) == []

    presentation = extract_presentation(fd, gens)
    assert str(presentation) == '<a, b | a.a, b.b>', f'Unexpected presentation: {presentation}'
    assert presentation.complete

    cover = covering_tiles(fd, gens, fd.sigma, 4)
    assert len(cover.tiles) == 3, 'the cone and its two neighbours across the paired facets'
    assert cover.closed


def test_reflection_group_presentation(reflection):
    gens = reflection.group()
    fd = build_fundamental_cone(reflection.cone, None, gens, reflection.xi)

    assert fd.status == FundamentalStatus.CERTIFIED
    assert fd.sigma == cone_from_rays(3, [(1, 0, 0), (1, 1, 0), (2, 1, 1)])
    assert len(fd.facet_pairings) == 3, 'every facet is a mirror'

    presentation = extract_presentation(fd, gens)
    print(f'Presentation: {presentation}')

    assert presentation.generators == ('s1', 's2', 's3')
    assert sorted(len(r) for r in presentation.relators) == [2, 2, 2, 4, 8], f'Unexpected relators: {presentation}'
    assert all(gens.evaluate(r).is_identity() for r in presentation.relators)


def test_presentation_needs_certificate(dihedral):
    gens = dihedral.group()
    fd = build_fundamental_cone(dihedral.cone, None, gens, dihedral.xi)
    partial = dataclasses.replace(fd, status=FundamentalStatus.PARTIAL)

    with pytest.raises(NotCertified):
        extract_presentation(partial, gens)

    with pytest.raises(NotCertified):
        covering_tiles(partial, gens, fd.sigma, 2)


def test_congruence_subgroup(swap_gens):
    sub = congruence_subgroup(swap_gens, None, 3)
    assert sub.index == 2
    assert sub.schreier_generators == (('s', 's'),)

    with pytest.raises(InstanceError):
        congruence_subgroup(swap_gens, None, 2)


def test_barycentric_spine(quadrant):
    patch = sigma_decomposition(quadrant, None, quadrant.polyhedron)
    spine = barycentric_spine(patch, None, quadrant)

    assert len(spine.cells) == 1, f'Unexpected spine: {spine.as_dict()}'
    assert spine.cells[0].rays == ((1, 1),)
    assert spine.incidence == ()

    broken = DecompositionPatch(quadrant.polyhedron, (DecompositionMember(quadrant.polyhedron, 2),))
    with pytest.raises(PatchNotFaceClosed):
        barycentric_spine(broken, None, quadrant)


def test_barycentric_spine_lattice_rays(quadrant):
    patch = sigma_decomposition(quadrant, None, quadrant.polyhedron)
    lattice = Lattice(QMatrix.from_columns([(Fraction(2), Fraction(0)), (Fraction(0), Fraction(1))]))
    spine = barycentric_spine(patch, lattice, quadrant)

    assert [cell.rays for cell in spine.cells] == [((2, 1),)], f'Rays must use lattice generators: {spine.as_dict()}'
    for cell in spine.cells:
        assert all(membership(quadrant, r, MembershipTier.INTERIOR) for r in cell.rays), f'Spine ray left the open cone: {cell.rays}'
