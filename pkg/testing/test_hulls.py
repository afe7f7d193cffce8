import time

import pytest

from fractions import Fraction
from pprint import pformat

from conekit.cones import MembershipTier, PolyhedralCone, QuadraticCone
from conekit.errors import (
    BudgetExceeded, DegenerateCone, FunctionalNotInOpenDual, HyperplaneMissesCone, NotAChamber, NotInClosure, UnboundedWindow,
    UnsupportedCone, ZeroGenerator
)
from conekit.exact import Lattice, QMatrix
from conekit import hulls
from conekit.groups import Exhaustiveness
from conekit.hulls import (
    CertificateMethod, KernelStatus, TruncatedHull, admissible_eval, admissible_function, arrangement_decomposition, box_points,
    cocore_truncate, comparibility_constant, double_dual_truncate, kernel_dual_truncate, kernel_from_orbits, kernel_truncate, sail_2d,
    sigma_decomposition, slab_points, truncated_hull
)
from conekit.polyhedra import cone_from_rays, polyhedron_from_constraints


def _box(lows, highs):
    n = len(lows)
    ineqs = []
    for i in range(n):
        e = [0] * n
        e[i] = 1
        ineqs += [(tuple(e), lows[i]), (tuple(-a for a in e), -highs[i])]
    return polyhedron_from_constraints(n, ineqs)


def test_box_and_slab_points(quadrant):
    assert box_points(quadrant, Lattice.standard(2), 1) == [(1, 1)]
    assert slab_points(quadrant, None, (1, 1), 3) == [(1, 1)]
    assert slab_points(quadrant, None, (1, 1), 3, strict=False) == [(1, 1), (1, 2), (2, 1)]
    assert slab_points(quadrant, None, (1, 1), 2, tier=MembershipTier.CLOSURE) == [(0, 0), (0, 1), (1, 0)]

    with pytest.raises(FunctionalNotInOpenDual):
        slab_points(quadrant, None, (1, 0), 3)


def test_truncated_hull_quadrant(quadrant):
    res = truncated_hull(quadrant, None, _box((0, 0), (2, 2)))

    assert res.vertices == [(1, 1)], f'Unexpected hull vertices: {res.vertices}'
    assert res.certificate.certified
    assert {f.method for f in res.certificate.facets} == {CertificateMethod.DISCRETENESS}
    assert len(res.faces) == 3, 'one vertex and two edges meet the window'

    threaded = truncated_hull(quadrant, None, _box((0, 0), (2, 2)), threads=2)
    assert threaded == res, 'thread count must not change the result'


def test_truncated_hull_quadratic():
    c = QuadraticCone(QMatrix.of([[1, 0], [0, -1]]), (1, 0))
    res = truncated_hull(c, None, _box((0, -1), (2, 1)))

    assert res.vertices == [(1, 0)], f'Unexpected hull vertices: {res.vertices}'
    assert res.certificate.certified
    normals = sorted(tuple(f.normal) for f in res.certificate.facets)
    assert normals == [(1, -1), (1, 1)], f'Unexpected facet normals: {normals}'


def test_truncated_hull_budget():
    c = QuadraticCone(QMatrix.of([[1, 0], [0, -2]]), (1, 0))

    with pytest.raises(BudgetExceeded) as exc:
        truncated_hull(c, None, _box((0, 0), (4, 4)), budget=4)

    partial = exc.value.partial
    assert isinstance(partial, TruncatedHull), f'Partial result should be a hull: {partial!r}'
    assert not partial.certificate.certified
    assert any(f.method == CertificateMethod.NOT_DUAL for f in partial.certificate.facets)

    single = truncated_hull(c, None, _box((0, 0), (4, 4)), certify=False)
    assert not single.certificate.certified
    assert {f.method for f in single.certificate.facets} == {CertificateMethod.UNCHECKED}


def test_truncated_hull_lorentz_finishes():
    c = QuadraticCone(QMatrix.of([[1, 0, 0], [0, -1, 0], [0, 0, -1]]), (1, 0, 0))
    window = _box((0, -3, -3), (4, 3, 3))

    start = time.monotonic()
    try:
        res = truncated_hull(c, None, window, budget=16)
    except BudgetExceeded as exc:
        res = exc.partial
    elapsed = time.monotonic() - start

    print(f'Lorentz hull in {elapsed:.1f}s with radius {res.certificate.radius}:\n{pformat(res.certificate.as_dict(), indent=4)}')
    assert elapsed < 60, f'Hull over the window took {elapsed:.1f}s'
    assert (1, 0, 0) in res.vertices, f'The apex point is a vertex of every hull: {res.vertices}'
    assert all(f.dim < 3 for f in res.faces)


def test_truncated_hull_unbounded(quadrant):
    with pytest.raises(UnboundedWindow):
        truncated_hull(quadrant, None, quadrant.polyhedron)


def test_sail_2d():
    chain = list(sail_2d(PolyhedralCone.from_rays([(1, 0), (3, 5)])))
    assert chain == [(1, 1), (2, 3)], f'Unexpected sail: {pformat(chain)}'

    rational = QuadraticCone(QMatrix.of([[1, 0], [0, -1]]), (1, 0))
    assert list(sail_2d(rational)) == [(1, 0)]

    with pytest.raises(UnsupportedCone):
        sail_2d(QuadraticCone(QMatrix.of([[1, 0], [0, -2]]), (1, 0)))

    with pytest.raises(DegenerateCone):
        sail_2d(PolyhedralCone.from_rays([(1, 0, 0), (0, 1, 0), (0, 0, 1)]))


def test_cocore_and_decomposition(quadrant):
    cocore = cocore_truncate(quadrant, None, quadrant.polyhedron)
    assert cocore == polyhedron_from_constraints(2, [((1, 0), 0), ((0, 1), 0), ((1, 1), 1)])

    patch = sigma_decomposition(quadrant, None, quadrant.polyhedron)
    assert [m.dim for m in patch.members] == [0, 1, 1, 2]
    assert all(m.complementary for m in patch.members), 'no member is clipped by the full window'
    assert patch.members[-1].dual_vertices == ((1, 1),)


def test_kernel_from_orbits(quadrant, swap_gens):
    k = kernel_from_orbits(quadrant, swap_gens, [(2, 1), (1, 2)])
    assert k.generators == ((1, 2),), 'orbit-mates are merged'

    with pytest.raises(ZeroGenerator):
        kernel_from_orbits(quadrant, None, [])

    with pytest.raises(ZeroGenerator):
        kernel_from_orbits(quadrant, None, [(0, 0)])

    with pytest.raises(NotInClosure):
        kernel_from_orbits(quadrant, None, [(-1, 0)])


def test_kernel_truncations(quadrant):
    k = kernel_from_orbits(quadrant, None, [(1, 1)])
    window = quadrant.polyhedron

    trunc = kernel_truncate(k, window)
    assert trunc.status == KernelStatus.CERTIFIED_COMPLETE
    assert trunc.polyhedron.vrep.points == ((1, 1),)

    dual = kernel_dual_truncate(k, window)
    assert dual.polyhedron.vrep.points == ((0, 1), (1, 0))

    assert double_dual_truncate(k, window).polyhedron == trunc.polyhedron, 'the double dual of a closed kernel is itself'

    scaled = kernel_from_orbits(quadrant, None, [(2, 2)])
    assert comparibility_constant(k, scaled, window) == 2


def test_admissible_function(quadrant):
    k = kernel_from_orbits(quadrant, None, [(1, 2), (2, 1)])

    value = admissible_eval(k, (1, 0))
    assert value.value == 1 and value.status == KernelStatus.CERTIFIED_COMPLETE, f'Unexpected value: {value}'
    assert admissible_eval(k, (1, 1)).value == 3

    f = admissible_function(k, quadrant.polyhedron)
    assert f.status == KernelStatus.CERTIFIED_COMPLETE
    assert f((2, 1)) == 4
    assert f((1, 2)) == 4
    assert f((1, 0)) == 1


def test_admissible_eval_descends_into_fundamental_cone(dihedral):
    gens = dihedral.group().dual()
    k = kernel_from_orbits(gens.cone, gens, [(3, 4)])

    value = admissible_eval(k, (1, 0))
    print(f'f_K(1, 0):\n{pformat(value, indent=4)}')
    assert value.value == 1, f'(3, 4) descends to (1, 0), got {value.value}'
    assert value.status == KernelStatus.CERTIFIED_COMPLETE, 'the orbit is infinite but the descent is certified'

    value = admissible_eval(k, (2, 1))
    assert value.value == 2 and value.status == KernelStatus.CERTIFIED_COMPLETE, f'Unexpected value: {value}'


def test_kernel_truncate_certified_by_descent(dihedral):
    gens = dihedral.group().dual()
    k = kernel_from_orbits(gens.cone, gens, [(3, 4)])

    trunc = kernel_truncate(k, _box((0, -5), (4, 5)))
    print(f'Kernel truncation:\n{pformat(trunc.polyhedron.vrep, indent=4)}')

    assert trunc.status == KernelStatus.CERTIFIED_COMPLETE, f'Facets meeting the window should be certified, got {trunc.status}'
    for v in ((1, 0), (3, 4), (3, -4)):
        assert v in trunc.polyhedron.vrep.points, f'{v} should be a vertex of the truncated kernel'


def test_uncertified_minima_are_stabilized(quadrant, mocker):
    k = kernel_from_orbits(quadrant, None, [(1, 2), (2, 1)])
    mocker.patch.object(hulls._OrbitMinima, '__call__', return_value=None)

    value = admissible_eval(k, (1, 1))
    assert value.value == 3
    assert value.status == KernelStatus.STABILIZED, 'a repeated minimum without a certificate is only stabilized'

    f = admissible_function(k, quadrant.polyhedron)
    assert f.status == KernelStatus.STABILIZED
    assert f.as_dict()['status'] == 'Stabilized'


def test_arrangement_decomposition(quadrant, swap_gens):
    chamber = cone_from_rays(2, [(1, 0), (1, 1)])
    res = arrangement_decomposition(quadrant, None, swap_gens, [(1, -1)], chamber, quadrant.polyhedron)

    assert res.normals == ((1, -1),)
    assert res.cocycle == {'s': (-1, 1)}, f'Unexpected cocycle: {res.cocycle}'
    assert res.function((1, 2)) == -1
    assert res.function((2, 1)) == 0
    assert res.function((1, 2)) - res.function((2, 1)) == Fraction(-1), 'f(s^-1 x) - f(x) equals the cocycle at x = (2, 1)'
    assert res.identity_checks == 3
    assert res.status == Exhaustiveness.CERTIFIED_COMPLETE

    with pytest.raises(HyperplaneMissesCone):
        arrangement_decomposition(quadrant, None, swap_gens, [(1, 1)], chamber, quadrant.polyhedron)

    with pytest.raises(NotAChamber):
        arrangement_decomposition(quadrant, None, swap_gens, [(1, -1)], quadrant.polyhedron, quadrant.polyhedron)
