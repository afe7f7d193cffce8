import random

import pytest

from fractions import Fraction

from sympy import ZZ
from sympy.polys.matrices import DM
from sympy.polys.matrices.normalforms import hermite_normal_form as sympy_hnf

from conekit.errors import NonIntegralInput, NotInvertible
from conekit.exact import (
    Lattice, QMatrix, UnipotenceClass, as_rational, complete_basis, cyclotomic_unipotence_test, dot, format_rational,
    hermite_normal_form, hnf_rank, inertia, integer_kernel, nullspace, primitive, primitive_line, rational_gcd, rref, saturate,
    solve
)


def test_rational_parsing():
    assert as_rational('3/6') == Fraction(1, 2), 'p/q strings should reduce'
    assert as_rational(-4) == Fraction(-4)
    assert format_rational(Fraction(4, 2)) == '2', 'integral values print without a denominator'
    assert format_rational(Fraction(-1, 3)) == '-1/3'

    with pytest.raises(TypeError):
        as_rational(0.5)

    with pytest.raises(TypeError):
        as_rational(True)

    with pytest.raises(ValueError):
        as_rational('0.5')


def test_primitive_vectors():
    assert primitive((Fraction(2), Fraction(4))) == (1, 2)
    assert primitive((Fraction(1, 2), Fraction(1, 3))) == (3, 2), 'rational vectors scale up to integral ones'
    assert primitive_line((Fraction(-2), Fraction(4))) == (1, -2)
    assert rational_gcd([]) == 0

    with pytest.raises(ValueError):
        primitive((Fraction(0), Fraction(0)))


def test_linear_algebra():
    basis = nullspace([(Fraction(1), Fraction(1), Fraction(0))], 3)
    assert basis == [(-1, 1, 0), (0, 0, 1)], f'Unexpected nullspace basis: {basis}'

    coeffs = solve([(Fraction(1), Fraction(0)), (Fraction(1), Fraction(1))], (Fraction(3), Fraction(2)))
    assert coeffs == (1, 2), f'Unexpected solution: {coeffs}'
    assert solve([(Fraction(1), Fraction(1))], (Fraction(1), Fraction(0))) is None, 'inconsistent systems have no solution'

    assert nullspace([(Fraction(1), Fraction(0)), (Fraction(0), Fraction(2))], 2) == [], 'full rank rows have no kernel'
    assert rref([(Fraction(2), Fraction(4)), (Fraction(1), Fraction(2))], 2) == ([[1, 2]], [0])


def test_matrix_basics():
    a = QMatrix.of([[3, -4], [2, -3]])
    assert a.det() == -1
    assert a.inverse() == a, 'the generator is an involution'
    assert a.power(-1) == a
    assert (a @ a).is_identity()
    assert a @ (Fraction(1), Fraction(0)) == (3, 2)

    with pytest.raises(NotInvertible):
        QMatrix.of([[1, 2], [2, 4]]).inverse()

    rng = random.Random(3)
    for _ in range(10):
        b = QMatrix.of([[Fraction(rng.randint(-20, 20), rng.randint(1, 5)) for _ in range(4)] for _ in range(4)])
        if b.det() != 0:
            assert (b @ b.inverse()).is_identity(), f'Inverse failed for {b.to_strings()}'
            assert b.inverse().det() == 1 / b.det()

    with pytest.raises(NonIntegralInput):
        QMatrix.of([['1/2', 0], [0, 1]]).to_int_lists()


def test_hermite_normal_form():
    m = QMatrix.of([[2, 4], [6, 8]])
    h, u = hermite_normal_form(m)

    assert h == QMatrix.of([[2, 0], [2, 4]]), f'Unexpected Hermite normal form: {h.to_strings()}'
    assert m @ u == h, 'h must equal m @ u'
    assert abs(u.det()) == 1, 'the transform must be unimodular'

    again, _ = hermite_normal_form(h)
    assert again == h, f'A Hermite normal form is its own normal form, got: {again.to_strings()}'

    h, u = hermite_normal_form(QMatrix.of([[4, 0], [0, 6]]))
    assert h == QMatrix.of([[4, 0], [0, 6]]) and u.is_identity(), 'a reduced diagonal matrix is left alone'

    m = QMatrix.of([[1, 2, 3], [2, 4, 6]])
    h, u = hermite_normal_form(m)
    assert h.columns[0] == (1, 2), f'Unexpected pivot column: {h.to_strings()}'
    assert h.columns[1:] == [(0, 0), (0, 0)], 'zero columns come last'
    assert m @ u == h and abs(u.det()) == 1


def test_hermite_normal_form_matches_sympy():
    rng = random.Random(7)

    for _ in range(10):
        m = QMatrix.of([[rng.randint(-9, 9) for _ in range(3)] for _ in range(3)])
        h, u = hermite_normal_form(m)
        assert m @ u == h and abs(u.det()) == 1, f'Bad transform for {m.to_strings()}'

        flipped = DM([list(reversed(r)) for r in reversed(m.to_int_lists())], ZZ)
        expected = [list(reversed(r)) for r in reversed(sympy_hnf(flipped).to_list())]
        rank = hnf_rank(h)
        got = [[int(a) for a in r[:rank]] for r in h.rows]
        assert got == expected, f'Pivot columns disagree with sympy for {m.to_strings()}: {got} vs {expected}'


def test_integer_kernel_and_saturation():
    m = QMatrix.of([[1, 2, 3]])
    kernel = integer_kernel(m)
    assert len(kernel) == 2
    assert all(m @ v == (0,) for v in kernel), f'Kernel vectors must be annihilated: {kernel}'

    full, k = complete_basis(kernel, 3)
    assert k == 2 and abs(full.det()) == 1, 'the integer kernel is saturated'

    assert saturate([(Fraction(2), Fraction(4))], 2) == [(1, 2)]


def test_inertia():
    assert inertia(QMatrix.of([[1, 0, 0], [0, -1, 0], [0, 0, -1]])) == (1, 2, 0)
    assert inertia(QMatrix.of([[0, 1], [1, 0]])) == (1, 1, 0), 'the hyperbolic plane is indefinite'
    assert inertia(QMatrix.of([[1, 1], [1, 1]])) == (1, 0, 1)
    assert inertia(QMatrix.of([[0, 0], [0, 0]])) == (0, 0, 2)
    assert inertia(QMatrix.of([[2, 1, 0], [1, 2, 0], [0, 0, -3]])) == (2, 1, 0)


def test_lattice_and_dual():
    lattice = Lattice(QMatrix.from_columns([(Fraction(1), Fraction(1)), (Fraction(0), Fraction(2))]))

    assert lattice.contains((Fraction(1), Fraction(1)))
    assert not lattice.contains((Fraction(0), Fraction(1))), '(0, 1) is not an integral combination of the basis'

    dual = lattice.dual()
    for xi in dual.basis.columns:
        for v in lattice.basis.columns:
            assert dot(xi, v).denominator == 1, f'Dual basis vector {xi} is not integral on {v}'

    assert dual.dual() == lattice, 'the dual of the dual lattice is the lattice'


def test_cyclotomic_classification():
    assert cyclotomic_unipotence_test(QMatrix.of([[1, 1], [0, 1]])) == UnipotenceClass.UNIPOTENT
    assert cyclotomic_unipotence_test(QMatrix.of([[0, 1], [1, 0]])) == UnipotenceClass.FINITE_ORDER_CANDIDATE
    assert cyclotomic_unipotence_test(QMatrix.of([[0, -1], [1, -1]])) == UnipotenceClass.FINITE_ORDER_CANDIDATE
    assert cyclotomic_unipotence_test(QMatrix.of([[2, 1], [1, 1]])) == UnipotenceClass.EXPANDING

    with pytest.raises(NonIntegralInput):
        cyclotomic_unipotence_test(QMatrix.of([['1/2', 0], [0, 2]]))
