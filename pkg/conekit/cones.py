"""
Computable open nondegenerate convex cones.

Three families are supported, all exact:

* :py:class:`PolyhedralCone` - a pointed full-dimensional rational polyhedral cone (the open cone is its interior)
* :py:class:`QuadraticCone` - one component of ``{q > 0}`` for a rational form of signature ``(1, n-1)``
* :py:class:`PositiveCone` - positive definite symmetric tensors in ``Sym^2 W``, coordinates ``t_ij`` (``i <= j``)

Functionals pair with points through the standard dot product on coordinates.
"""

from __future__ import annotations

import enum
import itertools
import logging

from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple, Union

from conekit.errors import DimensionMismatch, FullFace, InvalidCone, NotAFace, NotInClosure, UnsupportedCone
from conekit.exact import (
    Lattice, QMatrix, QVector, as_rational, complete_basis, dot, format_rational, inertia, is_zero, nullspace, primitive,
    rational_gcd, rref, unit_vector, vsum, zero_vector
)
from conekit.polyhedra import Polyhedron, cone_from_rays, dual_description, face_lattice, HRep, Constraint

logger = logging.getLogger(__name__)


class MembershipTier(enum.Enum):
    INTERIOR = 'Interior'
    CLOSURE = 'Closure'
    RATIONAL_HULL = 'RationalHull'
    OPEN_DUAL = 'OpenDual'
    CLOSED_DUAL = 'ClosedDual'


class FaceTag(enum.Enum):
    POLYHEDRAL = 'Polyhedral'
    ZERO = 'Zero'
    BOUNDARY_RAY = 'BoundaryRay'
    FULL = 'Full'
    SUPPORT = 'Support'


class Projection(enum.Enum):
    MOD_VF = 'ModVF'
    MOD_VUPPER_F = 'ModVupperF'


@dataclass(frozen=True)
class PolyhedralCone:
    polyhedron: Polyhedron

    def __post_init__(self) -> None:
        p = self.polyhedron
        if not p.is_cone():
            raise InvalidCone('Polyhedral cone must be homogeneous', related_op='PolyhedralCone')
        if not p.is_pointed():
            raise InvalidCone('Polyhedral cone must be pointed', related_op='PolyhedralCone', extra_attrs={'line': p.vrep.lines[0]})
        if p.affine_dim() != p.dim:
            raise InvalidCone('Polyhedral cone must be full-dimensional', related_op='PolyhedralCone')

    @classmethod
    def from_rays(cls, rays: Sequence[Sequence]) -> PolyhedralCone:
        rays = [tuple(as_rational(a) for a in r) for r in rays]
        if not rays:
            raise InvalidCone('A polyhedral cone needs at least one ray', related_op='PolyhedralCone.from_rays')
        return cls(cone_from_rays(len(rays[0]), rays))

    @classmethod
    def from_normals(cls, normals: Sequence[Sequence]) -> PolyhedralCone:
        normals = [tuple(as_rational(a) for a in r) for r in normals]
        return cls(dual_description(HRep(len(normals[0]), tuple(Constraint(a, 0) for a in normals))))

    @property
    def dim(self) -> int:
        return self.polyhedron.dim

    @property
    def rays(self) -> Tuple[QVector, ...]:
        return self.polyhedron.vrep.rays

    @property
    def normals(self) -> Tuple[QVector, ...]:
        return tuple(c.normal for c in self.polyhedron.hrep.inequalities)

    def interior_point(self) -> QVector:
        return vsum(self.rays, self.dim)


@dataclass(frozen=True)
class QuadraticCone:
    """
    The component of ``{x : q(x) > 0}`` containing ``selector``, ``q(x) = x^T form x``.

    The form is stored as a primitive integral matrix (a positive rescaling) and the selector as a primitive integral
    vector, so equal cones compare equal.
    """

    form: QMatrix
    selector: QVector

    def __post_init__(self) -> None:
        form = self.form if isinstance(self.form, QMatrix) else QMatrix.of(self.form)
        selector = tuple(as_rational(a) for a in self.selector)

        if not form.is_square or form != form.transpose():
            raise InvalidCone('Quadratic form must be a symmetric matrix', related_op='QuadraticCone')
        if len(selector) != form.nrows:
            raise DimensionMismatch('Selector and form dimensions differ', related_op='QuadraticCone')

        n = form.nrows
        if inertia(form) != (1, n - 1, 0):
            raise InvalidCone(f'Form has signature {inertia(form)}, expected (1, {n - 1}, 0)', related_op='QuadraticCone',
                              extra_attrs={'form': form.to_strings()})

        g = rational_gcd(a for r in form.rows for a in r)
        form = form.scaled(1 / g)
        if dot(selector, form @ selector) <= 0:
            raise InvalidCone('Selector must have positive form-norm', related_op='QuadraticCone',
                              extra_attrs={'selector': [format_rational(a) for a in selector]})

        object.__setattr__(self, 'form', form)
        object.__setattr__(self, 'selector', primitive(selector))

    @property
    def dim(self) -> int:
        return self.form.nrows

    def bilinear(self, x: Sequence[Fraction], y: Sequence[Fraction]) -> Fraction:
        return dot(x, self.form @ tuple(y))

    def q(self, x: Sequence[Fraction]) -> Fraction:
        return self.bilinear(x, x)

    def dual_form(self) -> QMatrix:
        inv = self.form.inverse()
        return inv.scaled(1 / rational_gcd(a for r in inv.rows for a in r))

    def interior_point(self) -> QVector:
        return self.selector


@dataclass(frozen=True)
class PositiveCone:
    """
    Positive definite tensors in ``Sym^2 W``, ``dim W = w_dim``.

    A point ``t`` is read as the symmetric matrix with ``M_ii = t_ii`` and ``M_ij = t_ij`` (``i < j``). With ``dual`` set
    points are read with halved off-diagonal entries instead; this is the same cone seen through the trace pairing, so
    the dual of one reading is the other.
    """

    w_dim: int
    dual: bool = False

    def __post_init__(self) -> None:
        if self.w_dim < 1:
            raise InvalidCone('Positive cone needs dim W >= 1', related_op='PositiveCone')

    @property
    def dim(self) -> int:
        return self.w_dim * (self.w_dim + 1) // 2

    @property
    def index_pairs(self) -> List[Tuple[int, int]]:
        return [(i, j) for i in range(self.w_dim) for j in range(i, self.w_dim)]

    def to_matrix(self, t: Sequence[Fraction], halved: bool = None) -> QMatrix:
        halved = self.dual if halved is None else halved
        m = [[Fraction(0)] * self.w_dim for _ in range(self.w_dim)]
        for (i, j), v in zip(self.index_pairs, t):
            if i != j and halved:
                v = v / 2
            m[i][j] = m[j][i] = v
        return QMatrix.of(m)

    def from_matrix(self, m: QMatrix, halved: bool = None) -> QVector:
        halved = self.dual if halved is None else halved
        return tuple(m.rows[i][j] * (2 if halved and i != j else 1) for i, j in self.index_pairs)

    def functional_matrix(self, xi: Sequence[Fraction]) -> QMatrix:
        return self.to_matrix(xi, halved=not self.dual)

    def interior_point(self) -> QVector:
        return self.from_matrix(QMatrix.identity(self.w_dim))


ConeSpec = Union[PolyhedralCone, QuadraticCone, PositiveCone]


def positive_definite(m: QMatrix) -> bool:
    """Sylvester's criterion on leading principal minors"""
    return all(m.submatrix(range(k), range(k)).det() > 0 for k in range(1, m.nrows + 1))


def positive_semidefinite(m: QMatrix) -> bool:
    n = m.nrows
    return all(m.submatrix(s, s).det() >= 0 for k in range(1, n + 1) for s in itertools.combinations(range(n), k))


def _check_dim(c: ConeSpec, x: Sequence, op: str) -> QVector:
    if len(x) != c.dim:
        raise DimensionMismatch(f'Vector of dimension {len(x)} for a cone in dimension {c.dim}', related_op=op)
    return tuple(as_rational(a) for a in x)


def membership(c: ConeSpec, x: Sequence, tier: MembershipTier) -> bool:
    """
    Exact membership of ``x`` in the interior ``C``, the closure, the rational hull ``C+``, the open dual ``C°`` or the
    closed dual ``C*``. For the dual tiers ``x`` is read as a functional.
    """

    x = _check_dim(c, x, 'membership')
    tier = MembershipTier(tier)

    if tier == MembershipTier.RATIONAL_HULL:
        # rational points of the closure lie in C+
        tier = MembershipTier.CLOSURE

    if isinstance(c, PolyhedralCone):
        ineqs = c.polyhedron.hrep.inequalities
        if tier == MembershipTier.INTERIOR:
            return all(con.slack(x) > 0 for con in ineqs)
        if tier == MembershipTier.CLOSURE:
            return all(con.slack(x) >= 0 for con in ineqs)
        if tier == MembershipTier.OPEN_DUAL:
            return all(dot(x, r) > 0 for r in c.rays)
        return all(dot(x, r) >= 0 for r in c.rays)

    if isinstance(c, QuadraticCone):
        if tier in (MembershipTier.INTERIOR, MembershipTier.CLOSURE):
            norm, side = c.q(x), c.bilinear(x, c.selector)
        else:
            norm, side = dot(x, c.dual_form() @ x), dot(x, c.selector)
        if tier in (MembershipTier.INTERIOR, MembershipTier.OPEN_DUAL):
            return norm > 0 and side > 0
        return norm >= 0 and side >= 0

    if tier in (MembershipTier.INTERIOR, MembershipTier.CLOSURE):
        m = c.to_matrix(x)
    else:
        m = c.functional_matrix(x)
    return positive_definite(m) if tier in (MembershipTier.INTERIOR, MembershipTier.OPEN_DUAL) else positive_semidefinite(m)


def dual_cone(c: ConeSpec) -> ConeSpec:
    if isinstance(c, PolyhedralCone):
        return PolyhedralCone(cone_from_rays(c.dim, c.normals))

    if isinstance(c, QuadraticCone):
        return QuadraticCone(c.dual_form(), c.form @ c.selector)

    return PositiveCone(c.w_dim, not c.dual)


@dataclass(frozen=True)
class FaceDescriptor:
    tag: FaceTag
    active: frozenset = field(default=frozenset())    #: polyhedral: tight inequality indices
    ray: Optional[QVector] = None                     #: quadratic boundary ray (primitive)
    support: Tuple[QVector, ...] = ()                 #: positive cone: echelon basis of K ⊆ W

    def as_dict(self) -> dict:
        out = {'tag': self.tag.value}
        if self.tag == FaceTag.POLYHEDRAL:
            out['active'] = sorted(self.active)
        if self.ray is not None:
            out['ray'] = [format_rational(a) for a in self.ray]
        if self.tag == FaceTag.SUPPORT:
            out['support'] = [[format_rational(a) for a in v] for v in self.support]
        return out


def canonical_subspace(vectors: Sequence[Sequence[Fraction]], n: int) -> Tuple[QVector, ...]:
    vectors = [v for v in vectors if not is_zero(v)]
    if not vectors:
        return ()
    return tuple(primitive(r) for r in rref(vectors, n)[0])


def _polyhedral_face_rays(c: PolyhedralCone, active: frozenset) -> List[QVector]:
    ineqs = c.polyhedron.hrep.inequalities
    return [r for r in c.rays if all(dot(ineqs[j].normal, r) == 0 for j in active)]


def _polyhedral_closure(c: PolyhedralCone, rays: Sequence[QVector]) -> frozenset:
    return frozenset(j for j, con in enumerate(c.polyhedron.hrep.inequalities) if all(dot(con.normal, r) == 0 for r in rays))


def face_generators(c: ConeSpec, f: FaceDescriptor) -> List[QVector]:
    """Vectors spanning the face (extreme rays for polyhedral and quadratic faces, a spanning set of ``Sym^2 K`` otherwise)"""

    validate_face(c, f)

    if f.tag == FaceTag.POLYHEDRAL:
        return _polyhedral_face_rays(c, f.active)
    if f.tag == FaceTag.ZERO:
        return []
    if f.tag == FaceTag.BOUNDARY_RAY:
        return [f.ray]
    if f.tag == FaceTag.FULL:
        return [unit_vector(c.dim, i) for i in range(c.dim)]

    gens = []
    for a, b in itertools.combinations_with_replacement(range(len(f.support)), 2):
        u, v = f.support[a], f.support[b]
        m = QMatrix.of([[u[i] * v[j] + v[i] * u[j] for j in range(c.w_dim)] for i in range(c.w_dim)])
        gens.append(c.from_matrix(m))
    return gens


def validate_face(c: ConeSpec, f: FaceDescriptor) -> None:
    if isinstance(c, PolyhedralCone):
        ok = f.tag == FaceTag.POLYHEDRAL and all(0 <= j < len(c.normals) for j in f.active) and \
            _polyhedral_closure(c, _polyhedral_face_rays(c, f.active)) == f.active
    elif isinstance(c, QuadraticCone):
        ok = f.tag in (FaceTag.ZERO, FaceTag.FULL) or (
            f.tag == FaceTag.BOUNDARY_RAY and f.ray is not None and len(f.ray) == c.dim and not is_zero(f.ray) and
            c.q(f.ray) == 0 and c.bilinear(f.ray, c.selector) > 0 and primitive(f.ray) == f.ray)
    else:
        ok = f.tag == FaceTag.SUPPORT and all(len(v) == c.w_dim for v in f.support) and \
            canonical_subspace(f.support, c.w_dim) == f.support

    if not ok:
        raise NotAFace('Descriptor is not a face of the cone', related_op='validate_face', extra_attrs={'face': f.as_dict()})


def is_full_face(c: ConeSpec, f: FaceDescriptor) -> bool:
    if isinstance(c, PolyhedralCone):
        return not f.active
    if isinstance(c, QuadraticCone):
        return f.tag == FaceTag.FULL
    return len(f.support) == c.w_dim


def is_zero_face(c: ConeSpec, f: FaceDescriptor) -> bool:
    return not face_generators(c, f)


def smallest_face(c: ConeSpec, x: Sequence, of: str = 'ClosureCone') -> FaceDescriptor:
    """
    The face of ``C+`` whose relative interior contains ``x``. For rational points the smallest face of the closure and
    of the rational hull coincide, so ``of`` only selects the membership tier that is checked.
    """

    x = _check_dim(c, x, 'smallest_face')
    tier = MembershipTier.RATIONAL_HULL if of == 'RationalHull' else MembershipTier.CLOSURE
    if not membership(c, x, tier):
        raise NotInClosure('Point is not in the closed cone', related_op='smallest_face', extra_attrs={'x': [format_rational(a) for a in x]})

    if isinstance(c, PolyhedralCone):
        return FaceDescriptor(FaceTag.POLYHEDRAL, active=c.polyhedron.tight_inequalities(x))

    if isinstance(c, QuadraticCone):
        if is_zero(x):
            return FaceDescriptor(FaceTag.ZERO)
        if c.q(x) > 0:
            return FaceDescriptor(FaceTag.FULL)
        return FaceDescriptor(FaceTag.BOUNDARY_RAY, ray=primitive(x))

    m = c.to_matrix(x)
    return FaceDescriptor(FaceTag.SUPPORT, support=canonical_subspace(m.columns, c.w_dim))


def all_faces(c: ConeSpec) -> List[FaceDescriptor]:
    """All faces of a polyhedral cone, smallest first"""

    if not isinstance(c, PolyhedralCone):
        raise UnsupportedCone('Only polyhedral cones have finitely many faces', related_op='all_faces')

    return [FaceDescriptor(FaceTag.POLYHEDRAL, active=node.active) for node in face_lattice(c.polyhedron)]


def dagger_face(c: ConeSpec, f: FaceDescriptor) -> FaceDescriptor:
    """
    ``F† = {ξ in C°+ : ξ|F = 0}`` as a face of the dual cone's rational hull. Applying it twice (to the dual cone)
    returns ``f``.
    """

    validate_face(c, f)
    dual = dual_cone(c)

    if isinstance(c, PolyhedralCone):
        gens = face_generators(c, f)
        vanishing = [xi for xi in dual.rays if all(dot(xi, r) == 0 for r in gens)]
        return smallest_face(dual, vsum(vanishing, c.dim))

    if isinstance(c, QuadraticCone):
        if f.tag == FaceTag.ZERO:
            return FaceDescriptor(FaceTag.FULL)
        if f.tag == FaceTag.FULL:
            return FaceDescriptor(FaceTag.ZERO)
        return FaceDescriptor(FaceTag.BOUNDARY_RAY, ray=primitive(c.form @ f.ray))

    return FaceDescriptor(FaceTag.SUPPORT, support=canonical_subspace(nullspace(f.support, c.w_dim), c.w_dim))


@dataclass(frozen=True)
class FaceSpaces:
    """
    The flag ``V_F ⊂ V^F ⊂ V`` of a face together with a basis ``E = [E_F | E_T | E_Q]`` of the lattice adapted to it.
    """

    v_f: Tuple[QVector, ...]
    v_upper_f: Tuple[QVector, ...]
    t_f: Tuple[QVector, ...]       #: lifts of a basis of ``T_F = V^F / V_F``
    adapted: QMatrix               #: ``E``
    pi_f: QMatrix                  #: ``V -> V/V_F`` in the basis ``[E_T | E_Q]``
    pi_upper_f: QMatrix            #: ``V -> V/V^F`` in the basis ``E_Q``
    q_f: QMatrix                   #: ``V/V_F -> V/V^F``

    @property
    def k_f(self) -> int:
        return len(self.v_f)

    @property
    def k_upper_f(self) -> int:
        return len(self.v_upper_f)


def face_spaces(c: ConeSpec, f: FaceDescriptor, lattice: Lattice = None) -> FaceSpaces:
    """
    ``V_F = span F``, ``V^F`` = annihilator of ``F†``, the quotient ``T_F`` and the projections, with every subspace
    saturated in the lattice so quotient lattices are torsion free.
    """

    lattice = lattice or Lattice.standard(c.dim)
    if lattice.dim != c.dim:
        raise DimensionMismatch('Lattice and cone dimensions differ', related_op='face_spaces')

    n = c.dim
    span_f = face_generators(c, f)
    dagger_gens = face_generators(dual_cone(c), dagger_face(c, f))
    span_upper = nullspace(dagger_gens, n) if dagger_gens else [unit_vector(n, i) for i in range(n)]

    e1, k_f = lattice.adapted_basis(span_f)
    e1_inv = e1.inverse()

    projected = [(e1_inv @ v)[k_f:] for v in span_upper]
    u_rest, k_t = complete_basis(projected, n - k_f)
    block = QMatrix.of([list(unit_vector(n, i)[:k_f]) + [Fraction(0)] * (n - k_f) for i in range(k_f)] +
                       [[Fraction(0)] * k_f + list(r) for r in u_rest.rows])
    adapted = e1 @ block
    k_upper = k_f + k_t
    logger.debug(f'Face flag dimensions: V_F {k_f}, V^F {k_upper}, V {n}')

    inv = adapted.inverse()
    cols = adapted.columns
    pi_f = QMatrix(inv.rows[k_f:], n)
    pi_upper = QMatrix(inv.rows[k_upper:], n)
    q_f = QMatrix.of([[Fraction(int(j == i + k_t)) for j in range(n - k_f)] for i in range(n - k_upper)], n - k_f)

    return FaceSpaces(v_f=tuple(cols[:k_f]), v_upper_f=tuple(cols[:k_upper]), t_f=tuple(cols[k_f:k_upper]), adapted=adapted,
                      pi_f=pi_f, pi_upper_f=pi_upper, q_f=q_f)


@dataclass(frozen=True)
class ConeProjection:
    which: Projection
    coordinates: QMatrix                  #: the linear map from ``V`` to quotient coordinates
    spec: Optional[ConeSpec] = None       #: nondegenerate image cone (always set for ``ModVupperF``)
    body: Optional[Polyhedron] = None     #: closure of the image when it is polyhedral but possibly degenerate


def _positive_quotient(c: PositiveCone, f: FaceDescriptor, which: Projection) -> ConeProjection:
    if which == Projection.MOD_VF:
        raise UnsupportedCone('Projection modulo V_F is not polyhedral for positive cones', related_op='project_cone')

    w, k = c.w_dim, len(f.support)
    basis, _ = complete_basis(f.support, w)
    p_inv = basis.inverse()
    image = PositiveCone(w - k, c.dual)

    columns = []
    for e in (unit_vector(c.dim, i) for i in range(c.dim)):
        m = p_inv @ c.to_matrix(e) @ p_inv.transpose()
        columns.append(image.from_matrix(m.submatrix(range(k, w), range(k, w))))

    return ConeProjection(which, QMatrix.from_columns(columns), spec=image)


def project_cone(c: ConeSpec, f: FaceDescriptor, which: Union[str, Projection], lattice: Lattice = None) -> ConeProjection:
    """
    Image of the cone modulo ``V_F`` or modulo ``V^F``. Modulo ``V^F`` the image is again a nondegenerate cone (the open
    dual of ``F†``); modulo ``V_F`` it may be invariant under translations by ``T_F`` and is returned as a polyhedral body.
    """

    which = Projection(which)
    validate_face(c, f)

    if is_full_face(c, f):
        raise FullFace('The quotient by the full face is trivial', related_op='project_cone', extra_attrs={'face': f.as_dict()})

    if isinstance(c, PositiveCone):
        return _positive_quotient(c, f, which)

    spaces = face_spaces(c, f, lattice)
    proj = spaces.pi_f if which == Projection.MOD_VF else spaces.pi_upper_f
    m = proj.nrows

    if isinstance(c, PolyhedralCone):
        images = [proj @ r for r in c.rays]
        body = cone_from_rays(m, [v for v in images if not is_zero(v)])
        if which == Projection.MOD_VUPPER_F:
            return ConeProjection(which, proj, spec=PolyhedralCone(body))
        return ConeProjection(which, proj, body=body)

    if f.tag == FaceTag.ZERO:
        adapted = spaces.adapted
        spec = QuadraticCone(adapted.transpose() @ c.form @ adapted, adapted.inverse() @ c.selector)
        return ConeProjection(which, proj, spec=spec)

    # boundary ray: V^F is the form-orthogonal of the ray, so V/V^F is a line and V/V_F a half-space
    sign = (spaces.pi_upper_f @ c.selector)[0]
    direction = Fraction(1 if sign > 0 else -1)
    if which == Projection.MOD_VUPPER_F:
        return ConeProjection(which, proj, spec=PolyhedralCone(cone_from_rays(1, [(direction,)])))

    normal = zero_vector(m)[:-1] + (direction,)
    return ConeProjection(which, proj, body=dual_description(HRep(m, (Constraint(normal, 0),))))
