import dataclasses

import pytest

from conekit.cones import MembershipTier, PositiveCone, membership, smallest_face
from conekit.errors import DimensionOutOfRange, NotInvariant, NotProper, NotStabilizing, NotUnipotentKernel, UnsupportedCone, ViolationFound
from conekit.exact import QMatrix
from conekit.stabilizers import (
    SubspaceCase, invariant_subspace_classify, relative_interior_point, sample_points, sigma_jk_maps, stabilizer_split, sym2_action,
    sym2_example, sym2_j_closed_form, sym2_kj_closed_form, unipotent_filter, verify_stabilizer_theorem
)


def _sym2_data(n, k):
    ex = sym2_example(n, k)
    data = stabilizer_split(ex.unipotents, ex.cone, ex.face, ex.lattice)
    return ex, data


def test_relative_interior_point(quadrant):
    assert relative_interior_point(quadrant, smallest_face(quadrant, (1, 0))) == (1, 0)
    assert relative_interior_point(quadrant, smallest_face(quadrant, (1, 1))) == (1, 1)


def test_stabilizer_split(quadrant):
    face = smallest_face(quadrant, (1, 0))
    data = stabilizer_split([QMatrix.identity(2)], quadrant, face)
    assert len(data.kernel_elements) == 1

    with pytest.raises(NotStabilizing):
        stabilizer_split([QMatrix.of([[0, 1], [1, 0]])], quadrant, face)


def test_sym2_shear_maps():
    ex, data = _sym2_data(2, 1)
    u = ex.unipotents[0]

    assert u == QMatrix.of([[1, 2, 1], [0, 1, 1], [0, 0, 1]]), f'Unexpected shear: {u.to_strings()}'
    assert (data.k_f, data.k_upper_f) == (1, 2)

    unipotent = unipotent_filter(data)
    assert len(unipotent) == 1

    action = sigma_jk_maps(unipotent[0], data)
    assert action.kj_map @ (0, 0, 1) == (2, 0, 0), 'k_u j_u sends e2 (x) e2 to twice e1 (x) e1'
    assert action.power(1) == u
    assert action.power(-1) == u.inverse()

    assert sym2_kj_closed_form(ex, ex.homs[0], ex.homs[0]) == action.kj_map
    assert data.spaces.pi_f @ sym2_j_closed_form(ex, ex.homs[0]) == data.spaces.pi_f @ action.sigma_map


def test_sign_change_is_excluded():
    ex = sym2_example(2, 1)
    g = sym2_action(ex.cone, QMatrix.of([[1, 0], [0, -1]]))
    assert g == QMatrix.of([[1, 0, 0], [0, -1, 0], [0, 0, 1]])

    data = stabilizer_split([g], ex.cone, ex.face, ex.lattice)
    assert data.elements[0].kernel, 'trivial on the face and on the dagger face'
    assert data.elements[0].on_t == QMatrix.of([[-1]])
    assert unipotent_filter(data) == [], 'a finite order element acting by -1 on T_F is not unipotent'

    with pytest.raises(NotUnipotentKernel):
        sigma_jk_maps(g, data)


@pytest.mark.parametrize('n,k', [(3, 1), (3, 2), (4, 2)])
def test_sym2_theorem(n, k):
    ex, data = _sym2_data(n, k)
    unipotent = unipotent_filter(data)
    assert len(unipotent) == k * (n - k)

    actions = [sigma_jk_maps(el, data) for el in unipotent]
    report = verify_stabilizer_theorem(actions, data, samples=5, threads=2)
    assert report.actions == k * (n - k)
    assert report.samples == 5

    for hom, action in zip(ex.homs, actions):
        assert sym2_kj_closed_form(ex, hom, hom) == action.kj_map, f'Closed form disagrees for {hom.to_strings()}'


def test_violation_is_reported():
    ex, data = _sym2_data(2, 1)
    action = sigma_jk_maps(unipotent_filter(data)[0], data)
    broken = dataclasses.replace(action, kj_map=QMatrix.zeros(3, 3))

    with pytest.raises(ViolationFound) as exc:
        verify_stabilizer_theorem([broken], data, samples=3)

    assert exc.value.extra_attrs['check'] == 'power law'


def test_sym2_example_range():
    with pytest.raises(DimensionOutOfRange):
        sym2_example(1, 1)

    with pytest.raises(DimensionOutOfRange):
        sym2_example(5, 2)


def test_sample_points_are_deterministic():
    c = PositiveCone(2)
    points = sample_points(c, 5, seed=3)
    assert points == sample_points(c, 5, seed=3)
    assert all(membership(c, x, MembershipTier.INTERIOR) for x in points)


def test_invariant_subspace_classify(quadrant, swap_gens, lorentz3):
    res = invariant_subspace_classify([(1, 0)], quadrant)
    assert res.case == SubspaceCase.FACE
    assert res.face == smallest_face(quadrant, (1, 0))

    assert invariant_subspace_classify([(0, 1, 0)], lorentz3).case == SubspaceCase.QUOTIENT
    assert invariant_subspace_classify([(1, 0, 0), (0, 1, 0)], lorentz3).case == SubspaceCase.SUBCONE

    isotropic = invariant_subspace_classify([(1, 1, 0)], lorentz3)
    assert isotropic.case == SubspaceCase.FACE
    assert isotropic.face.ray == (1, 1, 0)

    with pytest.raises(NotProper):
        invariant_subspace_classify([(1, 0), (0, 1)], quadrant)

    with pytest.raises(NotInvariant):
        invariant_subspace_classify([(1, 0)], quadrant, swap_gens)

    with pytest.raises(UnsupportedCone):
        invariant_subspace_classify([(1, 0, 0)], PositiveCone(2))
