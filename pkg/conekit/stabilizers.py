"""
Stabilizers of a face ``F`` of ``C+``.

An element of ``N(F)`` preserves the flag ``V_F ⊂ V^F ⊂ V``, so in a flag-adapted basis its matrix is block upper
triangular::

    [[A, X, Z],
     [0, B, Y],
     [0, 0, D]]

``A`` is the action on ``V_F`` and ``D`` the transpose-inverse of the action on ``span F†``. Elements with ``A = I`` and
``D = I`` form the kernel of the split, and those that also have ``B = I`` form ``U(F)``. For such ``u`` the maps are
read off directly: ``k_u = X``, ``j_u = Y`` and ``σ_u = [[X, Z - XY/2], [0, Y]]``.
"""

from __future__ import annotations

import enum
import itertools
import logging
import random

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple, Union

from conekit.cones import (
    ConeSpec, FaceDescriptor, FaceSpaces, FaceTag, MembershipTier, PolyhedralCone, PositiveCone, QuadraticCone, dagger_face,
    face_generators, face_spaces, is_full_face, membership, smallest_face
)
from conekit.errors import (
    DimensionMismatch, DimensionOutOfRange, InconsistentKernelElement, NotInvariant, NotProper, NotStabilizing,
    NotUnipotentKernel, UnsupportedCone, ViolationFound
)
from conekit.exact import (
    Lattice, QMatrix, QVector, in_span, inertia, is_zero, nullspace, primitive, rank_of, UnipotenceClass,
    cyclotomic_unipotence_test, unit_vector, vsum, zero_vector
)
from conekit.groups import GroupGens
from conekit.polyhedra import Constraint

logger = logging.getLogger(__name__)

SAMPLE_COUNT = 100
POWER_RANGE = range(-2, 3)


def _block(a: QMatrix, rows: range, cols: range) -> QMatrix:
    return a.submatrix(list(rows), list(cols))


def relative_interior_point(c: ConeSpec, f: FaceDescriptor) -> QVector:
    """A rational point in the relative interior of ``f``"""

    if f.tag == FaceTag.ZERO:
        return zero_vector(c.dim)
    if is_full_face(c, f):
        return c.interior_point()
    if f.tag == FaceTag.SUPPORT:
        return vsum([c.from_matrix(QMatrix.of([[a * b for b in v] for a in v])) for v in f.support], c.dim)
    return vsum(face_generators(c, f), c.dim)


@dataclass(frozen=True)
class StabilizerElement:
    matrix: QMatrix
    adapted: QMatrix     #: the matrix in the flag-adapted basis
    on_face: QMatrix     #: restriction to ``V_F``
    on_t: QMatrix        #: induced action on ``T_F``
    on_dagger: QMatrix   #: restriction of the contragredient action to ``span F†``
    kernel: bool

    def as_dict(self) -> dict:
        return {'matrix': self.matrix.to_strings(), 'on_face': self.on_face.to_strings(), 'on_t': self.on_t.to_strings(),
                'on_dagger': self.on_dagger.to_strings(), 'kernel': self.kernel}


@dataclass(frozen=True)
class FaceStabilizerData:
    cone: ConeSpec
    face: FaceDescriptor
    dagger: FaceDescriptor
    spaces: FaceSpaces
    lattice: Lattice
    elements: Tuple[StabilizerElement, ...]

    @property
    def kernel_elements(self) -> List[StabilizerElement]:
        return [el for el in self.elements if el.kernel]

    @property
    def k_f(self) -> int:
        return self.spaces.k_f

    @property
    def k_upper_f(self) -> int:
        return self.spaces.k_upper_f

    def as_dict(self) -> dict:
        return {'face': self.face.as_dict(), 'dagger': self.dagger.as_dict(),
                'flag': {'V_F': self.k_f, 'V^F': self.k_upper_f, 'V': self.cone.dim},
                'elements': [el.as_dict() for el in self.elements]}


def stabilizer_split(elements: Sequence[QMatrix], c: ConeSpec, f: FaceDescriptor, lattice: Lattice = None) -> FaceStabilizerData:
    """
    Split each element of ``N(F)`` into its restrictions on ``V_F``, ``T_F`` and ``span F†``.

    :raises NotStabilizing: when an element does not map ``F`` onto ``F``
    """

    lattice = lattice or Lattice.standard(c.dim)
    spaces = face_spaces(c, f, lattice)
    n, kf, ku = c.dim, spaces.k_f, spaces.k_upper_f
    e, e_inv = spaces.adapted, spaces.adapted.inverse()
    inner = relative_interior_point(c, f)

    split = []
    for m in elements:
        if m.shape != (n, n):
            raise DimensionMismatch(f'Element of shape {m.shape} for a cone in dimension {n}', related_op='stabilizer_split')

        a = e_inv @ m @ e
        flag_kept = _block(a, range(kf, n), range(kf)).is_zero() and _block(a, range(ku, n), range(ku)).is_zero()
        image = m @ inner
        if m.det() == 0 or not flag_kept or not membership(c, image, MembershipTier.CLOSURE) or smallest_face(c, image) != f:
            raise NotStabilizing('Element does not map the face onto itself', related_op='stabilizer_split',
                                 extra_attrs={'element': m.to_strings(), 'face': f.as_dict()})

        on_face = _block(a, range(kf), range(kf))
        on_t = _block(a, range(kf, ku), range(kf, ku))
        d = _block(a, range(ku, n), range(ku, n))
        on_dagger = d.inverse().transpose() if n > ku else d
        split.append(StabilizerElement(m, a, on_face, on_t, on_dagger, on_face.is_identity() and d.is_identity()))

    logger.debug(f'{sum(el.kernel for el in split)} of {len(split)} elements lie in the kernel of the split')
    return FaceStabilizerData(c, f, dagger_face(c, f), spaces, lattice, tuple(split))


def unipotent_filter(data: FaceStabilizerData) -> List[StabilizerElement]:
    """
    The kernel elements that also act trivially on ``T_F``, i.e. ``U(F)``.

    :raises InconsistentKernelElement: when a kernel element has an eigenvalue off the unit circle
    """

    unipotent = []
    for el in data.kernel_elements:
        in_lattice = data.lattice.inverse_basis @ el.matrix @ data.lattice.basis
        kind = cyclotomic_unipotence_test(in_lattice)

        if kind == UnipotenceClass.EXPANDING:
            raise InconsistentKernelElement('Kernel element is not quasi-unipotent', related_op='unipotent_filter',
                                            extra_attrs={'element': el.matrix.to_strings()})

        if kind == UnipotenceClass.UNIPOTENT and el.on_t.is_identity():
            unipotent.append(el)
        else:
            logger.debug(f'Excluding kernel element {el.matrix.to_strings()} ({kind.value}, nontrivial on T_F)')

    return unipotent


@dataclass(frozen=True)
class UnipotentAction:
    u: QMatrix
    sigma: QMatrix    #: ``V/V_F -> V^F`` in the adapted coordinates
    j: QMatrix        #: ``V/V^F -> T_F``
    k: QMatrix        #: ``T_F -> V_F``
    sigma_map: QMatrix = field(compare=False)   #: ``x -> σ_u(x')`` as an endomorphism of ``V``
    kj_map: QMatrix = field(compare=False)      #: ``x -> k_u j_u(x'')`` as an endomorphism of ``V``

    @property
    def is_identity(self) -> bool:
        return self.u.is_identity()

    def power(self, r: int) -> QMatrix:
        """``x -> x + r σ_u(x') + r²/2 k_u j_u(x'')``"""

        n = self.u.nrows
        return QMatrix.identity(n) + self.sigma_map.scaled(r) + self.kj_map.scaled(Fraction(r * r, 2))

    def as_dict(self) -> dict:
        return {'u': self.u.to_strings(), 'sigma': self.sigma.to_strings(), 'j': self.j.to_strings(), 'k': self.k.to_strings()}


def sigma_jk_maps(u: Union[QMatrix, StabilizerElement], data: FaceStabilizerData) -> UnipotentAction:
    """
    Solve ``u(x) = x + σ_u(x') + ½ k_u j_u(x'')`` for ``σ_u``, ``j_u`` and ``k_u``.

    :raises NotUnipotentKernel: when ``u`` is not in ``U(F)``
    """

    m = u.matrix if isinstance(u, StabilizerElement) else u
    n, kf, ku = data.cone.dim, data.k_f, data.k_upper_f
    e = data.spaces.adapted
    a = e.inverse() @ m @ e

    unipotent = all(_block(a, r, r).is_identity() for r in (range(kf), range(kf, ku), range(ku, n))) and \
        _block(a, range(kf, n), range(kf)).is_zero() and _block(a, range(ku, n), range(ku)).is_zero()
    if not unipotent:
        raise NotUnipotentKernel('Element does not act trivially on F, T_F and F†', related_op='sigma_jk_maps',
                                 extra_attrs={'element': m.to_strings()})

    x = _block(a, range(kf), range(kf, ku))
    y = _block(a, range(kf, ku), range(ku, n))
    z = _block(a, range(kf), range(ku, n))
    corrected = z - (x @ y).scaled(Fraction(1, 2))

    sigma = QMatrix.of([list(x.rows[i]) + list(corrected.rows[i]) for i in range(kf)] +
                       [[Fraction(0)] * (ku - kf) + list(y.rows[i]) for i in range(ku - kf)], n - kf)

    lift_upper = QMatrix.from_columns(e.columns[:ku], n) if ku else QMatrix.zeros(n, 0)
    lift_face = QMatrix.from_columns(e.columns[:kf], n) if kf else QMatrix.zeros(n, 0)
    sigma_map = lift_upper @ sigma @ data.spaces.pi_f
    kj_map = lift_face @ x @ y @ data.spaces.pi_upper_f

    action = UnipotentAction(m, sigma, y, x, sigma_map, kj_map)
    if action.power(1) != m:
        raise NotUnipotentKernel('Reconstruction does not reproduce the element', related_op='sigma_jk_maps',
                                 extra_attrs={'element': m.to_strings()})
    return action


def sample_points(c: ConeSpec, count: int = SAMPLE_COUNT, seed: int = 0) -> List[QVector]:
    """Deterministic rational points of the open cone"""

    rng = random.Random(seed)
    base = c.interior_point()
    size = max(abs(a) for a in base)

    points = []
    while len(points) < count:
        x = tuple(b + size * Fraction(rng.randint(-2, 2), rng.randint(4, 8)) for b in base)
        if membership(c, x, MembershipTier.INTERIOR):
            points.append(x)
    return points


@dataclass(frozen=True)
class StabilizerReport:
    actions: int
    pairs: int
    samples: int
    symmetric: bool = True
    commuting: bool = True
    additive: bool = True
    positive: bool = True
    power_law: bool = True

    def as_dict(self) -> dict:
        return {'actions': self.actions, 'pairs': self.pairs, 'samples': self.samples,
                'checks': {'symmetry': self.symmetric, 'commutativity': self.commuting, 'additivity': self.additive,
                           'positivity': self.positive, 'power_law': self.power_law}}


def _violation(check: str, **witness) -> ViolationFound:
    context = {key: (val.to_strings() if isinstance(val, QMatrix) else val) for key, val in witness.items()}
    return ViolationFound(f'{check} fails', related_op='verify_stabilizer_theorem', extra_attrs={'check': check, **context})


def _check_pair(u: UnipotentAction, v: UnipotentAction, data: FaceStabilizerData) -> None:
    if u.k @ v.j != v.k @ u.j:
        raise _violation('symmetry', u=u.u, v=v.u)

    if u.u @ v.u != v.u @ u.u:
        raise _violation('commutativity', u=u.u, v=v.u)

    product = sigma_jk_maps(u.u @ v.u, data)
    if product.sigma != u.sigma + v.sigma:
        raise _violation('additivity', u=u.u, v=v.u)


def _in_face_minus_zero(c: ConeSpec, face_span: Sequence[QVector], v: QVector) -> bool:
    return not is_zero(v) and in_span(face_span, v) and membership(c, v, MembershipTier.CLOSURE)


def verify_stabilizer_theorem(actions: Sequence[UnipotentAction], data: FaceStabilizerData, samples: int = SAMPLE_COUNT,
                              seed: int = 0, threads: int = 1) -> StabilizerReport:
    """
    Check symmetry ``k_u j_v = k_v j_u``, commutativity, additivity of ``u -> σ_u``, the power law and positivity of
    ``k_u j_u`` on sample points of ``C``.

    :raises ViolationFound: with the offending witness
    """

    c = data.cone
    pairs = list(itertools.combinations_with_replacement(actions, 2))

    with ThreadPoolExecutor(max_workers=max(threads, 1)) as pool:
        list(pool.map(lambda uv: _check_pair(uv[0], uv[1], data), pairs))

    for u in actions:
        for r in POWER_RANGE:
            if u.power(r) != u.u.power(r):
                raise _violation('power law', u=u.u, r=r)

    points = sample_points(c, samples, seed) if any(not u.is_identity for u in actions) else []
    face_span = list(data.spaces.v_f)
    for u in actions:
        if u.is_identity:
            continue
        for x in points:
            if not _in_face_minus_zero(c, face_span, u.kj_map @ x):
                raise _violation('positivity', u=u.u, x=[str(a) for a in x])

    logger.info(f'Verified {len(actions)} unipotent actions over {len(pairs)} pairs and {len(points)} samples')
    return StabilizerReport(len(actions), len(pairs), len(points))


@dataclass(frozen=True)
class Sym2Example:
    cone: PositiveCone
    lattice: Lattice
    face: FaceDescriptor
    homs: Tuple[QMatrix, ...]        #: elementary ``Hom(W/K, K)`` maps, ``k x (n-k)``
    unipotents: Tuple[QMatrix, ...]  #: their shears acting on ``Sym^2 W``

    @property
    def k(self) -> int:
        return len(self.face.support)


def sym2_action(c: PositiveCone, g: QMatrix) -> QMatrix:
    """The matrix of ``M -> g M g^T`` in the coordinates of ``c``"""

    columns = [c.from_matrix(g @ c.to_matrix(unit_vector(c.dim, i)) @ g.transpose()) for i in range(c.dim)]
    return QMatrix.from_columns(columns)


def _shear(n: int, k: int, hom: QMatrix) -> QMatrix:
    return QMatrix.of([[Fraction(int(i == j)) + (hom.rows[i][j - k] if i < k <= j else 0) for j in range(n)] for i in range(n)])


def sym2_example(n: int, k: int) -> Sym2Example:
    """
    ``V = Sym^2 W`` with ``W = Q^n``, the positive definite cone, the face of forms supported on ``Sym^2 K`` for
    ``K = span(e_1..e_k)``, and the shears ``w -> w + u(w)`` for the elementary ``u in Hom(W/K, K)``.

    :raises DimensionOutOfRange: unless ``1 <= k < n <= 4``
    """

    if not 1 <= k < n <= 4:
        raise DimensionOutOfRange(f'Need 1 <= k < n <= 4, got n={n}, k={k}', related_op='sym2_example')

    c = PositiveCone(n)
    face = FaceDescriptor(FaceTag.SUPPORT, support=tuple(unit_vector(n, i) for i in range(k)))
    homs = tuple(QMatrix.of([[Fraction(int((a, b) == (i, j))) for b in range(n - k)] for a in range(k)], n - k)
                 for i in range(k) for j in range(n - k))

    return Sym2Example(c, Lattice.standard(c.dim), face, homs, tuple(sym2_action(c, _shear(n, k, h)) for h in homs))


def _quotient_block(c: PositiveCone, k: int, x: Sequence[Fraction]) -> QMatrix:
    return c.to_matrix(x).submatrix(range(k, c.w_dim), range(k, c.w_dim))


def sym2_kj_closed_form(ex: Sym2Example, u: QMatrix, v: QMatrix) -> QMatrix:
    """``k_u j_v`` from ``w ⊗ w -> u(w) ⊗ v(w) + v(w) ⊗ u(w)``, as an endomorphism of ``V``"""

    c, k = ex.cone, ex.k
    columns = []
    for i in range(c.dim):
        q = _quotient_block(c, k, unit_vector(c.dim, i))
        top = u @ q @ v.transpose() + v @ q @ u.transpose()
        m = [[top.rows[a][b] if a < k and b < k else Fraction(0) for b in range(c.w_dim)] for a in range(c.w_dim)]
        columns.append(c.from_matrix(QMatrix.of(m)))
    return QMatrix.from_columns(columns)


def sym2_j_closed_form(ex: Sym2Example, u: QMatrix) -> QMatrix:
    """A lift of ``j_u`` from ``w ⊗ w -> w ⊗ u(w) + u(w) ⊗ w``, as a map ``V -> V^F``"""

    c, k = ex.cone, ex.k
    columns = []
    for i in range(c.dim):
        mixed = u @ _quotient_block(c, k, unit_vector(c.dim, i))
        m = [[Fraction(0)] * c.w_dim for _ in range(c.w_dim)]
        for a in range(k):
            for b in range(k, c.w_dim):
                m[a][b] = m[b][a] = mixed.rows[a][b - k]
        columns.append(c.from_matrix(QMatrix.of(m)))
    return QMatrix.from_columns(columns)


class SubspaceCase(enum.Enum):
    FACE = 'FaceCase'
    QUOTIENT = 'QuotientCase'
    SUBCONE = 'SubconeCase'


@dataclass(frozen=True)
class SubspaceClass:
    case: SubspaceCase
    face: Optional[FaceDescriptor] = None

    def as_dict(self) -> dict:
        out = {'case': self.case.value}
        if self.face is not None:
            out['face'] = self.face.as_dict()
        return out


def invariant_subspace_classify(w_basis: Sequence[Sequence[Fraction]], c: ConeSpec, gens: GroupGens = None) -> SubspaceClass:
    """
    Place an invariant proper subspace ``W`` in one of three cases: ``W ∩ C+`` is a proper face, ``W ∩ C̄ = {0}`` so the
    projection along ``W`` keeps ``C`` nondegenerate, or ``W`` meets the open cone.

    :raises NotProper: when ``W`` is zero or all of ``V``
    :raises NotInvariant: when a generator moves ``W``
    """

    n = c.dim
    basis = [tuple(Fraction(a) for a in w) for w in w_basis]
    if any(len(w) != n for w in basis):
        raise DimensionMismatch('Subspace basis has the wrong dimension', related_op='invariant_subspace_classify')

    rank = rank_of(basis, n)
    if not 0 < rank < n:
        raise NotProper(f'Subspace of dimension {rank} in dimension {n} is not proper', related_op='invariant_subspace_classify')

    if gens is not None:
        for label, m in gens.generators:
            if not all(in_span(basis, m @ w) for w in basis):
                raise NotInvariant(f'Generator "{label}" does not preserve the subspace', related_op='invariant_subspace_classify')

    if isinstance(c, PolyhedralCone):
        equations = [Constraint(a, Fraction(0)) for a in nullspace(basis, n)]
        section = c.polyhedron.intersect(equations + [Constraint(tuple(-a for a in eq.normal), Fraction(0)) for eq in equations])
        rays = section.vrep.rays if not section.is_empty() else ()
        if not rays:
            return SubspaceClass(SubspaceCase.QUOTIENT)
        inner = vsum(rays, n)
        if membership(c, inner, MembershipTier.INTERIOR):
            return SubspaceClass(SubspaceCase.SUBCONE)
        return SubspaceClass(SubspaceCase.FACE, smallest_face(c, inner))

    if isinstance(c, QuadraticCone):
        w = QMatrix.from_columns(basis)
        positive, _, null = inertia(w.transpose() @ c.form @ w)
        if positive:
            return SubspaceClass(SubspaceCase.SUBCONE)
        if not null:
            return SubspaceClass(SubspaceCase.QUOTIENT)
        radical = [w @ r for r in (w.transpose() @ c.form @ w).nullspace()]
        ray = primitive(radical[0])
        if c.bilinear(ray, c.selector) < 0:
            ray = tuple(-a for a in ray)
        return SubspaceClass(SubspaceCase.FACE, FaceDescriptor(FaceTag.BOUNDARY_RAY, ray=ray))

    raise UnsupportedCone('Subspace classification is implemented for polyhedral and quadratic cones', related_op='invariant_subspace_classify')
