"""
Exact rational scalars, vectors, matrices and lattices.

Scalars are :py:class:`fractions.Fraction` (Python integers underneath, so there is no overflow), vectors are tuples of
fractions and matrices are immutable :py:class:`QMatrix` instances. Nothing in this module (or anywhere in ``conekit``)
rounds.
"""

from __future__ import annotations

import enum
import logging
import math

from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from typing import Iterable, List, Optional, Sequence, Tuple, Union

from sympy import QQ, ZZ, Matrix, Poly, cyclotomic_poly, symbols, totient
from sympy.polys.matrices import DomainMatrix
from sympy.polys.matrices.exceptions import DMNonInvertibleMatrixError
from sympy.polys.matrices.normalforms import hermite_normal_form as sympy_hnf

from conekit.errors import DimensionMismatch, NonIntegralInput, NotInvertible

logger = logging.getLogger(__name__)

Rational = Fraction
QVector = Tuple[Fraction, ...]
RationalLike = Union[int, str, Fraction]

_X = symbols('x')


def as_rational(value: RationalLike) -> Fraction:
    """
    Convert ``value`` into an exact rational.

    Accepts ``int``, :py:class:`fractions.Fraction` and strings of the form ``"p"`` or ``"p/q"``. Floating point values
    are rejected since they cannot be represented without rounding.
    """

    if isinstance(value, bool) or isinstance(value, float):
        raise TypeError(f'Refusing inexact value {value!r}: use an integer or a "p/q" string')

    if isinstance(value, Fraction):
        return value

    if isinstance(value, int):
        return Fraction(value)

    if isinstance(value, str):
        text = value.strip()
        if not text or any(ch in text for ch in '.eE'):
            raise ValueError(f'Not an exact rational literal: "{value}"')
        return Fraction(text)

    raise TypeError(f'Cannot interpret {value!r} as a rational')


def format_rational(value: Fraction) -> str:
    """Serialize as ``"p/q"``, or ``"p"`` when the denominator is one."""

    value = Fraction(value)
    return str(value.numerator) if value.denominator == 1 else f'{value.numerator}/{value.denominator}'


def vector(values: Iterable[RationalLike]) -> QVector:
    return tuple(as_rational(v) for v in values)


def zero_vector(n: int) -> QVector:
    return tuple(Fraction(0) for _ in range(n))


def unit_vector(n: int, i: int) -> QVector:
    return tuple(Fraction(int(j == i)) for j in range(n))


def dot(u: Sequence[Fraction], v: Sequence[Fraction]) -> Fraction:
    if len(u) != len(v):
        raise DimensionMismatch(f'Cannot pair vectors of dimension {len(u)} and {len(v)}', related_op='dot')
    return sum((a * b for a, b in zip(u, v)), Fraction(0))


def add(u: Sequence[Fraction], v: Sequence[Fraction]) -> QVector:
    return tuple(a + b for a, b in zip(u, v))


def sub(u: Sequence[Fraction], v: Sequence[Fraction]) -> QVector:
    return tuple(a - b for a, b in zip(u, v))


def scale(k: RationalLike, v: Sequence[Fraction]) -> QVector:
    k = as_rational(k)
    return tuple(k * a for a in v)


def vsum(vectors: Iterable[Sequence[Fraction]], n: int) -> QVector:
    return reduce(add, vectors, zero_vector(n))


def is_zero(v: Sequence[Fraction]) -> bool:
    return all(a == 0 for a in v)


def is_integral(v: Sequence[Fraction]) -> bool:
    return all(Fraction(a).denominator == 1 for a in v)


def rational_gcd(values: Iterable[Fraction]) -> Fraction:
    """Positive generator of the additive group generated by ``values`` (zero if all vanish)."""

    values = [Fraction(v) for v in values if v != 0]
    if not values:
        return Fraction(0)

    den = reduce(lambda a, b: a * b // math.gcd(a, b), (v.denominator for v in values), 1)
    num = reduce(math.gcd, (abs(v.numerator * (den // v.denominator)) for v in values), 0)
    return Fraction(num, den)


def primitive(v: Sequence[Fraction]) -> QVector:
    """
    The primitive integral vector on the ray through ``v`` (a positive multiple of ``v``).
    """

    if is_zero(v):
        raise ValueError('The zero vector has no primitive representative')

    g = rational_gcd(v)
    return tuple(Fraction(a / g) for a in v)


def primitive_line(v: Sequence[Fraction]) -> QVector:
    """Primitive integral representative of the line through ``v`` (first nonzero entry positive)."""

    p = primitive(v)
    lead = next(a for a in p if a != 0)
    return p if lead > 0 else tuple(-a for a in p)


# Conversions to and from sympy domain matrices


def to_domain_matrix(rows: Sequence[Sequence[Fraction]], ncols: int, domain=QQ) -> DomainMatrix:
    """Dense :py:class:`DomainMatrix` over ``QQ`` (or ``ZZ`` for integral input) holding ``rows``."""

    if domain == ZZ:
        elements = [[ZZ(int(a)) for a in r] for r in rows]
    else:
        elements = [[QQ(Fraction(a).numerator, Fraction(a).denominator) for a in r] for r in rows]
    return DomainMatrix(elements, (len(elements), ncols), domain)


def _from_domain_element(K, a) -> Fraction:
    return Fraction(int(K.numer(a)), int(K.denom(a)))


def from_domain_matrix(dm: DomainMatrix) -> List[QVector]:
    return [tuple(_from_domain_element(dm.domain, a) for a in r) for r in dm.to_list()]


def rref(rows: Sequence[Sequence[Fraction]], ncols: int) -> Tuple[List[List[Fraction]], List[int]]:
    """
    Reduced row echelon form. Returns the nonzero reduced rows and the pivot column of each.
    """

    if not rows:
        return [], []

    reduced, pivots = to_domain_matrix(rows, ncols).rref()
    return [list(r) for r in from_domain_matrix(reduced)[:len(pivots)]], list(pivots)


def rank_of(vectors: Sequence[Sequence[Fraction]], n: int) -> int:
    return to_domain_matrix(vectors, n).rank() if vectors else 0


def row_basis(vectors: Sequence[Sequence[Fraction]], n: int) -> List[QVector]:
    """Canonical basis of the span of ``vectors``: the rows of the reduced echelon form."""

    if not vectors:
        return []
    return [tuple(r) for r in rref(vectors, n)[0]]


def nullspace(rows: Sequence[Sequence[Fraction]], ncols: int) -> List[QVector]:
    """
    Basis of ``{x : row . x = 0 for every row}``, one vector per free column with a one in that column.
    """

    if not rows:
        return [unit_vector(ncols, i) for i in range(ncols)]

    reduced, pivots = to_domain_matrix(rows, ncols).rref()
    if len(pivots) == ncols:
        return []
    return from_domain_matrix(reduced.nullspace_from_rref(pivots))


def in_span(vectors: Sequence[Sequence[Fraction]], v: Sequence[Fraction]) -> bool:
    n = len(v)
    return rank_of(list(vectors) + [v], n) == rank_of(vectors, n)


def solve(columns: Sequence[Sequence[Fraction]], target: Sequence[Fraction]) -> Optional[QVector]:
    """
    Coefficients ``c`` with ``sum(c_i * columns[i]) == target``, or ``None`` when no solution exists.
    """

    n = len(target)
    k = len(columns)
    if k == 0:
        return () if is_zero(target) else None

    augmented = [[columns[j][i] for j in range(k)] + [target[i]] for i in range(n)]
    reduced, pivots = rref(augmented, k + 1)

    if k in pivots:
        return None

    coeffs = [Fraction(0)] * k
    for row, p in zip(reduced, pivots):
        coeffs[p] = row[k]

    return tuple(coeffs)


@dataclass(frozen=True)
class QMatrix:
    """
    Immutable exact rational matrix. Vectors multiply on the right (``m @ v``) and act as columns.
    """

    rows: Tuple[QVector, ...]
    ncols: int = field(default=-1)

    def __post_init__(self) -> None:
        rows = tuple(tuple(as_rational(a) for a in r) for r in self.rows)
        ncols = len(rows[0]) if rows else max(self.ncols, 0)

        if any(len(r) != ncols for r in rows):
            raise DimensionMismatch('Matrix rows have unequal lengths', related_op='QMatrix')

        object.__setattr__(self, 'rows', rows)
        object.__setattr__(self, 'ncols', ncols)

    @classmethod
    def of(cls, rows: Iterable[Iterable[RationalLike]], ncols: int = -1) -> QMatrix:
        return cls(tuple(tuple(r) for r in rows), ncols)

    @classmethod
    def identity(cls, n: int) -> QMatrix:
        return cls(tuple(unit_vector(n, i) for i in range(n)), n)

    @classmethod
    def zeros(cls, nrows: int, ncols: int) -> QMatrix:
        return cls(tuple(zero_vector(ncols) for _ in range(nrows)), ncols)

    @classmethod
    def from_columns(cls, columns: Sequence[Sequence[Fraction]], nrows: int = None) -> QMatrix:
        if not columns:
            return cls.zeros(nrows or 0, 0)
        return cls(tuple(tuple(col[i] for col in columns) for i in range(len(columns[0]))), len(columns))

    @property
    def nrows(self) -> int:
        return len(self.rows)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.nrows, self.ncols

    @property
    def is_square(self) -> bool:
        return self.nrows == self.ncols

    @property
    def columns(self) -> List[QVector]:
        return [tuple(r[j] for r in self.rows) for j in range(self.ncols)]

    def column(self, j: int) -> QVector:
        return tuple(r[j] for r in self.rows)

    def transpose(self) -> QMatrix:
        return QMatrix(tuple(self.columns), self.nrows)

    @property
    def T(self) -> QMatrix:
        return self.transpose()

    def __matmul__(self, other):
        if isinstance(other, QMatrix):
            if self.ncols != other.nrows:
                raise DimensionMismatch(f'Cannot multiply {self.shape} by {other.shape}', related_op='QMatrix.__matmul__')
            cols = other.columns
            return QMatrix(tuple(tuple(dot(r, c) for c in cols) for r in self.rows), other.ncols)

        if len(other) != self.ncols:
            raise DimensionMismatch(f'Cannot apply {self.shape} matrix to vector of length {len(other)}', related_op='QMatrix.__matmul__')
        return tuple(dot(r, other) for r in self.rows)

    def __add__(self, other: QMatrix) -> QMatrix:
        return QMatrix(tuple(add(a, b) for a, b in zip(self.rows, other.rows)), self.ncols)

    def __sub__(self, other: QMatrix) -> QMatrix:
        return QMatrix(tuple(sub(a, b) for a, b in zip(self.rows, other.rows)), self.ncols)

    def __neg__(self) -> QMatrix:
        return self.scaled(-1)

    def scaled(self, k: RationalLike) -> QMatrix:
        return QMatrix(tuple(scale(k, r) for r in self.rows), self.ncols)

    def submatrix(self, row_ids: Sequence[int], col_ids: Sequence[int]) -> QMatrix:
        return QMatrix(tuple(tuple(self.rows[i][j] for j in col_ids) for i in row_ids), len(col_ids))

    def is_integral(self) -> bool:
        return all(is_integral(r) for r in self.rows)

    def is_zero(self) -> bool:
        return all(is_zero(r) for r in self.rows)

    def is_identity(self) -> bool:
        return self.is_square and self == QMatrix.identity(self.nrows)

    def rank(self) -> int:
        return rank_of(self.rows, self.ncols)

    def det(self) -> Fraction:
        if not self.is_square:
            raise DimensionMismatch('Determinant of a non-square matrix', related_op='QMatrix.det')

        if self.nrows == 0:
            return Fraction(1)
        return _from_domain_element(QQ, to_domain_matrix(self.rows, self.ncols).det())

    def inverse(self) -> QMatrix:
        if not self.is_square:
            raise NotInvertible('Only square matrices can be inverted', related_op='QMatrix.inverse')

        if self.nrows == 0:
            return self

        try:
            inv = to_domain_matrix(self.rows, self.ncols).inv()
        except DMNonInvertibleMatrixError:
            raise NotInvertible('Matrix is singular', related_op='QMatrix.inverse', extra_attrs={'matrix': self.to_strings()})

        return QMatrix(tuple(from_domain_matrix(inv)), self.ncols)

    def power(self, k: int) -> QMatrix:
        base = self if k >= 0 else self.inverse()
        result = QMatrix.identity(self.nrows)
        for _ in range(abs(k)):
            result = result @ base
        return result

    def nullspace(self) -> List[QVector]:
        return nullspace(self.rows, self.ncols)

    def to_strings(self) -> List[List[str]]:
        return [[format_rational(a) for a in r] for r in self.rows]

    def to_int_lists(self) -> List[List[int]]:
        if not self.is_integral():
            raise NonIntegralInput('Matrix has non-integral entries', related_op='QMatrix.to_int_lists')
        return [[int(a) for a in r] for r in self.rows]


def hermite_normal_form(m: QMatrix) -> Tuple[QMatrix, QMatrix]:
    """
    Column-style Hermite normal form.

    Returns ``(h, u)`` with ``h == m @ u``, ``u`` unimodular and ``h`` lower echelon: the first nonzero entry of every
    pivot column is positive, entries left of a pivot are reduced into ``[0, pivot)`` and zero columns come last.

    sympy's :py:func:`~sympy.polys.matrices.normalforms.hermite_normal_form` puts pivots in the rightmost columns and
    works from the bottom row up, so it is applied to ``m`` with rows and columns reversed. Stacking the identity on
    top records the column operations: the top block of the result is the transform.
    """

    if not m.is_integral():
        raise NonIntegralInput('Hermite normal form needs an integral matrix', related_op='hermite_normal_form',
                               extra_attrs={'matrix': m.to_strings()})

    ncols = m.ncols
    flipped = [tuple(reversed(r)) for r in reversed(m.rows)]
    stacked = to_domain_matrix([unit_vector(ncols, i) for i in range(ncols)] + flipped, ncols, ZZ)

    # the stack has full column rank, so no column is dropped
    reduced = from_domain_matrix(sympy_hnf(stacked))

    def unflip(rows: Sequence[QVector]) -> QMatrix:
        return QMatrix(tuple(tuple(reversed(r)) for r in reversed(rows)), ncols)

    return unflip(reduced[ncols:]), unflip(reduced[:ncols])


def hnf_rank(h: QMatrix) -> int:
    return sum(1 for c in h.columns if not is_zero(c))


def integer_kernel(m: QMatrix) -> List[QVector]:
    """Basis of the lattice ``{y in Z^n : m @ y == 0}``."""

    if m.nrows == 0:
        return [unit_vector(m.ncols, i) for i in range(m.ncols)]

    h, u = hermite_normal_form(m)
    return [u.column(j) for j in range(hnf_rank(h), m.ncols)]


def complete_basis(vectors: Sequence[Sequence[Fraction]], n: int) -> Tuple[QMatrix, int]:
    """
    Unimodular ``n x n`` matrix whose first ``k`` columns are a basis of ``span(vectors) ∩ Z^n``.

    Returns the matrix together with ``k`` (the rank of ``vectors``).
    """

    rows = [primitive(v) for v in vectors if not is_zero(v)]
    if not rows:
        return QMatrix.identity(n), 0

    h, u = hermite_normal_form(QMatrix.of(rows, n))
    k = hnf_rank(h)
    return u.inverse().transpose(), k


def saturate(vectors: Sequence[Sequence[Fraction]], n: int) -> List[QVector]:
    """Basis of the saturated lattice ``span(vectors) ∩ Z^n``."""

    full, k = complete_basis(vectors, n)
    return [full.column(j) for j in range(k)]


def inertia(form: QMatrix) -> Tuple[int, int, int]:
    """
    Signature ``(positive, negative, zero)`` of a symmetric rational matrix.

    The characteristic polynomial of a symmetric matrix has only real roots, so Descartes' rule of signs counts the
    positive eigenvalues exactly once the factor ``x^zero`` is divided out.
    """

    n = form.nrows
    if n == 0:
        return 0, 0, 0

    coeffs = [_from_domain_element(QQ, c) for c in to_domain_matrix(form.rows, form.ncols).charpoly()]
    while coeffs[-1] == 0:
        coeffs.pop()

    signs = [c > 0 for c in coeffs if c != 0]
    pos = sum(1 for a, b in zip(signs, signs[1:]) if a != b)
    zero = n + 1 - len(coeffs)
    return pos, n - zero - pos, zero


@dataclass(frozen=True)
class Lattice:
    """
    A full rank lattice ``L`` in ``Q^n`` given by the columns of an invertible basis matrix.
    """

    basis: QMatrix

    def __post_init__(self) -> None:
        if not self.basis.is_square:
            raise DimensionMismatch('Lattice basis must be square', related_op='Lattice')

        object.__setattr__(self, '_inverse', self.basis.inverse())

    @classmethod
    def standard(cls, n: int) -> Lattice:
        return cls(QMatrix.identity(n))

    @property
    def dim(self) -> int:
        return self.basis.nrows

    @property
    def inverse_basis(self) -> QMatrix:
        return getattr(self, '_inverse')

    def coordinates(self, x: Sequence[Fraction]) -> QVector:
        return self.inverse_basis @ tuple(x)

    def point(self, y: Sequence[Fraction]) -> QVector:
        return self.basis @ tuple(y)

    def contains(self, x: Sequence[Fraction]) -> bool:
        return is_integral(self.coordinates(x))

    def dual(self) -> Lattice:
        return dual_lattice(self)

    def saturated_basis(self, vectors: Sequence[Sequence[Fraction]]) -> List[QVector]:
        """Basis of ``span(vectors) ∩ L``."""

        return [self.point(y) for y in saturate([self.coordinates(v) for v in vectors], self.dim)]

    def adapted_basis(self, vectors: Sequence[Sequence[Fraction]]) -> Tuple[QMatrix, int]:
        """A basis of ``L`` (as columns) whose first ``k`` members span ``span(vectors) ∩ L``."""

        full, k = complete_basis([self.coordinates(v) for v in vectors], self.dim)
        return self.basis @ full, k


def dual_lattice(lattice: Lattice) -> Lattice:
    """
    The dual lattice ``L* = {xi : xi(L) ⊆ Z}``, with basis ``(B^T)^-1``.
    """

    return Lattice(lattice.basis.transpose().inverse())


class UnipotenceClass(enum.Enum):
    UNIPOTENT = 'Unipotent'
    FINITE_ORDER_CANDIDATE = 'FiniteOrderCandidate'
    EXPANDING = 'Expanding'


def _cyclotomic_orders(n: int) -> List[int]:
    # phi(k) >= sqrt(k/2), so every k with phi(k) <= n satisfies k <= 2 n^2
    return [k for k in range(1, 2 * n * n + 3) if int(totient(k)) <= n]


def cyclotomic_unipotence_test(m: QMatrix) -> UnipotenceClass:
    """
    Classify an integral invertible matrix by its characteristic polynomial.

    ``Unipotent`` when ``(m - I)^n == 0``; ``FiniteOrderCandidate`` when the characteristic polynomial is a product of
    cyclotomic polynomials (all eigenvalues are roots of unity); ``Expanding`` otherwise.
    """

    if not m.is_square:
        raise DimensionMismatch('Classification needs a square matrix', related_op='cyclotomic_unipotence_test')

    if not m.is_integral():
        raise NonIntegralInput('Classification needs an integral matrix', related_op='cyclotomic_unipotence_test',
                               extra_attrs={'matrix': m.to_strings()})

    if m.det() == 0:
        raise NotInvertible('Matrix is singular', related_op='cyclotomic_unipotence_test', extra_attrs={'matrix': m.to_strings()})

    n = m.nrows
    if (m - QMatrix.identity(n)).power(n).is_zero():
        return UnipotenceClass.UNIPOTENT

    remainder = Poly(Matrix(m.to_int_lists()).charpoly(_X).as_expr(), _X)

    for k in _cyclotomic_orders(n):
        phi = Poly(cyclotomic_poly(k, _X), _X)
        while remainder.degree() >= phi.degree():
            quotient, rest = remainder.div(phi)
            if not rest.is_zero:
                break
            remainder = quotient

    if remainder.degree() == 0:
        return UnipotenceClass.FINITE_ORDER_CANDIDATE

    logger.debug(f'Non-cyclotomic factor {remainder.as_expr()} left in characteristic polynomial')
    return UnipotenceClass.EXPANDING
