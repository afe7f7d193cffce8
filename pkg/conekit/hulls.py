"""
Truncated lattice hulls, cocores and decompositions, kernels with truncated duality, admissible functions and
hyperplane arrangements.

Everything here works on finite truncations: lattice points in a box of growing radius, orbit balls of growing radius.
A truncation is reported as certified only when an exact argument shows that growing it further cannot change the
answer inside the window. Otherwise :py:exc:`conekit.errors.BudgetExceeded` is raised with the uncertified partial
result attached.
"""

from __future__ import annotations

import enum
import itertools
import logging
import math

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Set, Tuple

from sympy.core.intfunc import igcdex

from conekit.cones import (
    ConeSpec, MembershipTier, PolyhedralCone, QuadraticCone, dagger_face, dual_cone, face_generators, membership,
    positive_definite, smallest_face
)
from conekit.errors import (
    BudgetExceeded, DegenerateCone, DimensionMismatch, FunctionalNotInOpenDual, HyperplaneMissesCone, InstanceError,
    NotAChamber, NotConePreserving, NotInClosure, NotInvariant, NotLatticePreserving, UnboundedWindow, UnsupportedCone,
    ZeroGenerator
)
from conekit.exact import (
    Lattice, QMatrix, QVector, add, as_rational, dot, format_rational, is_zero, primitive, rank_of, rational_gcd, scale, sub,
    vsum, zero_vector
)
from conekit.groups import Exhaustiveness, GroupGens, check_window, orbit_ball, validate_group
from conekit.polyhedra import (
    AffineForm, Constraint, HRep, Polyhedron, VRep, cone_from_rays, dominating_subset, dual_description, empty_polyhedron,
    face_lattice
)

logger = logging.getLogger(__name__)

SLAB_BUDGET = 200_000  #: default cap on the number of lattice points in a slab bounding box


def _as_vector(x: Iterable) -> QVector:
    return tuple(as_rational(a) for a in x)


def _fmt(v: Sequence[Fraction]) -> List[str]:
    return [format_rational(a) for a in v]


def box_points(c: ConeSpec, lattice: Lattice, radius: int, tier: MembershipTier = MembershipTier.INTERIOR) -> List[QVector]:
    """Lattice points with coordinates bounded by ``radius`` (in the lattice basis) lying in the given tier of ``c``"""

    out = []
    for y in itertools.product(range(-radius, radius + 1), repeat=lattice.dim):
        x = lattice.point(tuple(Fraction(v) for v in y))
        if membership(c, x, tier):
            out.append(x)
    return sorted(out)


def _sqrt_ceiling(value: Fraction) -> Fraction:
    """Rational upper bound for the square root of a nonnegative rational, exact on squares"""

    num, den = value.numerator, value.denominator
    root = math.isqrt(num * den)
    if root * root != num * den:
        root += 1
    return Fraction(root, den)


def _slab_ranges(c: ConeSpec, lattice: Lattice, xi: QVector, m: Fraction) -> List[range]:
    """Bounding box, in lattice coordinates, of ``{x in C̄ : ξ(x) <= m}``"""

    rows = lattice.inverse_basis.rows

    if isinstance(c, PolyhedralCone):
        vertices = [zero_vector(c.dim)] + [scale(m / dot(xi, r), r) for r in c.rays]
        bounds = [(min(dot(ell, v) for v in vertices), max(dot(ell, v) for v in vertices)) for ell in rows]

    elif isinstance(c, QuadraticCone):
        # max of ℓ on the slice ξ = 1 is the larger root t of q*(tξ - ℓ) = 0
        dual = c.form.inverse()
        q_xi = dot(xi, dual @ xi)
        bounds = []
        for ell in rows:
            b = dot(ell, dual @ xi)
            root = _sqrt_ceiling(b * b - q_xi * dot(ell, dual @ ell))
            bounds.append((min(Fraction(0), m * (b - root) / q_xi), max(Fraction(0), m * (b + root) / q_xi)))

    else:
        a = c.functional_matrix(xi)
        eps = Fraction(1)
        while not positive_definite(a - QMatrix.identity(c.w_dim).scaled(eps)):
            eps /= 2
        # ξ(x) >= eps * trace, and every coordinate is at most twice the trace in absolute value
        entry = 2 * m / eps
        bounds = []
        for ell in rows:
            width = entry * sum((abs(v) for v in ell), Fraction(0))
            bounds.append((-width, width))

    return [range(math.floor(lo), math.ceil(hi) + 1) for lo, hi in bounds]


def slab_points(c: ConeSpec, lattice: Optional[Lattice], xi: Sequence, m, strict: bool = True,
                tier: MembershipTier = MembershipTier.INTERIOR, budget: int = SLAB_BUDGET) -> List[QVector]:
    """
    Lattice points ``x`` of the cone (in the given membership tier) with ``ξ(x) < m``, or ``ξ(x) <= m`` unless ``strict``.

    ``ξ`` must lie in the open dual so the slab ``{x in C̄ : ξ(x) <= m}`` is compact. It is enumerated inside an exact
    bounding box in lattice coordinates; ``budget`` caps the size of that box.
    """

    lattice = lattice or Lattice.standard(c.dim)
    xi, m = _as_vector(xi), as_rational(m)

    if not membership(c, xi, MembershipTier.OPEN_DUAL):
        raise FunctionalNotInOpenDual('Slab functional is not in the open dual cone', related_op='slab_points',
                                      extra_attrs={'xi': _fmt(xi)})

    ranges = _slab_ranges(c, lattice, xi, m)
    size = math.prod(len(r) for r in ranges)
    if size > budget:
        raise BudgetExceeded(f'Slab bounding box holds {size} lattice points', related_op='slab_points',
                             extra_attrs={'budget': budget, 'xi': _fmt(xi), 'm': format_rational(m)})

    out = []
    for y in itertools.product(*ranges):
        x = lattice.point(tuple(Fraction(v) for v in y))
        value = dot(xi, x)
        if (value < m if strict else value <= m) and membership(c, x, tier):
            out.append(x)

    logger.debug(f'Slab below {format_rational(m)}: {len(out)} points in a box of {size}')
    return sorted(out)


def _minimal_points(points: Iterable[QVector], in_recession: Callable[[QVector], bool], order: Sequence[Fraction]) -> List[QVector]:
    """The points not of the form ``y + r`` for another point ``y`` and ``r`` in the recession set"""

    kept: List[QVector] = []
    for x in sorted(set(points), key=lambda p: (dot(order, p), p)):
        if not any(in_recession(sub(x, y)) for y in kept):
            kept.append(x)
    return sorted(kept)


def _recession_rays(c: ConeSpec, lattice: Lattice, radius: int) -> List[QVector]:
    """Exact rays for polyhedral cones, primitive closure points of the box otherwise"""

    if isinstance(c, PolyhedralCone):
        return list(c.rays)
    return sorted({primitive(x) for x in box_points(c, lattice, radius, MembershipTier.CLOSURE) if not is_zero(x)})


def _hull_of(c: ConeSpec, points: Iterable[QVector], rays: Sequence[QVector]) -> Polyhedron:
    return dual_description(VRep(c.dim, tuple(sorted(set(points))), tuple(rays)))


def _facet_in_window(p: Polyhedron, con: Constraint, window: Polyhedron) -> Polyhedron:
    return dual_description(HRep(p.dim, p.hrep.inequalities + window.hrep.inequalities, p.hrep.equations + window.hrep.equations + (con,)))


class CertificateMethod(enum.Enum):
    DISCRETENESS = 'Discreteness'
    SLAB = 'Slab'
    NOT_DUAL = 'NotDual'
    BOUNDARY = 'Boundary'
    UNCHECKED = 'Unchecked'


@dataclass(frozen=True)
class FacetCertificate:
    normal: QVector
    value: Fraction
    method: CertificateMethod
    certified: bool
    witnesses: Tuple[QVector, ...] = ()   #: lattice points of the cone found below ``value``

    def as_dict(self) -> dict:
        return {'normal': _fmt(self.normal), 'value': format_rational(self.value), 'method': self.method.value, 'certified': self.certified}


@dataclass(frozen=True)
class HullCertificate:
    radius: int
    facets: Tuple[FacetCertificate, ...]
    certified: bool

    def as_dict(self) -> dict:
        return {'radius': self.radius, 'certified': self.certified, 'facets': [f.as_dict() for f in self.facets]}


@dataclass(frozen=True)
class HullFace:
    dim: int
    generators: VRep      #: vertices and rays of the face of the hull
    clipped: Polyhedron   #: the face intersected with the window


@dataclass(frozen=True)
class TruncatedHull:
    cone: ConeSpec
    lattice: Lattice
    window: Polyhedron
    hull: Polyhedron
    faces: Tuple[HullFace, ...]
    certificate: HullCertificate

    @property
    def vertices(self) -> List[QVector]:
        return sorted(p for f in self.faces if f.dim == 0 for p in f.generators.points)


def _certify_facet(c: ConeSpec, lattice: Lattice, con: Constraint) -> FacetCertificate:
    """
    Prove that ``ξ(x) >= b`` holds on ``C ∩ L`` for the facet ``(ξ, b)`` of a truncated hull.

    Values of ``ξ`` on the lattice are multiples of their gcd ``g`` and positive on ``C`` for ``ξ`` in the dual, so
    ``b <= g`` settles it. Otherwise the compact slab below ``b`` is enumerated, which needs ``ξ`` in the open dual.
    """

    a, b = con.normal, con.offset

    if not membership(c, a, MembershipTier.CLOSED_DUAL):
        return FacetCertificate(a, b, CertificateMethod.NOT_DUAL, False)

    if b <= rational_gcd(dot(a, col) for col in lattice.basis.columns):
        return FacetCertificate(a, b, CertificateMethod.DISCRETENESS, True)

    if membership(c, a, MembershipTier.OPEN_DUAL):
        below = slab_points(c, lattice, a, b)
        return FacetCertificate(a, b, CertificateMethod.SLAB, not below, tuple(below))

    return FacetCertificate(a, b, CertificateMethod.BOUNDARY, False)


def _hull_result(c: ConeSpec, lattice: Lattice, window: Polyhedron, hull: Polyhedron, radius: int,
                 certs: Sequence[FacetCertificate], certified: bool) -> TruncatedHull:
    faces = []
    if not hull.empty:
        meeting = [j for j, con in enumerate(hull.hrep.inequalities) if not _facet_in_window(hull, con, window).empty]
        for node in face_lattice(hull, meeting):
            clipped = dual_description(node.generators).intersect(window)
            if not clipped.empty:
                faces.append(HullFace(node.dim, node.generators, clipped))

    return TruncatedHull(c, lattice, window, hull, tuple(faces), HullCertificate(radius, tuple(certs), certified))


def truncated_hull(c: ConeSpec, lattice: Optional[Lattice], window: Polyhedron, budget: int = 64, certify: bool = True,
                   threads: int = 1) -> TruncatedHull:
    """
    Faces of ``[C ∩ L]`` meeting a bounded window.

    Lattice points of the open cone are collected in a box of radius ``R`` (lattice coordinates), reduced to the
    points not dominated through the recession cone and hulled. Every facet meeting the window is then certified
    (see :py:func:`_certify_facet`); slab witnesses are added to the point set and the hull recomputed, uncertifiable
    facets double ``R`` until it exceeds ``budget``. With ``certify`` off a single uncertified pass is made.
    """

    lattice = lattice or Lattice.standard(c.dim)
    if window.dim != c.dim or lattice.dim != c.dim:
        raise DimensionMismatch('Cone, lattice and window dimensions differ', related_op='truncated_hull')
    if not window.is_bounded():
        raise UnboundedWindow('Hull windows must be bounded', related_op='truncated_hull')

    if window.empty:
        empty = empty_polyhedron(c.dim)
        return TruncatedHull(c, lattice, window, empty, (), HullCertificate(0, (), True))

    reach = max(abs(y) for p in window.vrep.points for y in lattice.coordinates(p))
    radius = max(1, math.ceil(reach))
    extra: Set[QVector] = set()

    while True:
        points = set(box_points(c, lattice, radius)) | extra
        hull = _hull_of(c, points, _recession_rays(c, lattice, radius))
        meets = not hull.empty and not hull.intersect(window).empty

        if hull.empty:
            facets = []
        elif meets:
            facets = [con for con in hull.hrep.inequalities if not _facet_in_window(hull, con, window).empty]
        else:
            facets = [con for con in hull.hrep.inequalities if window.maximum(con.normal) < con.offset]

        if certify:
            with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
                certs = list(pool.map(lambda con: _certify_facet(c, lattice, con), facets))
        else:
            certs = [FacetCertificate(con.normal, con.offset, CertificateMethod.UNCHECKED, False) for con in facets]

        found = {x for cert in certs for x in cert.witnesses} - points
        if found:
            logger.debug(f'Slab enumeration found {len(found)} new lattice points at radius {radius}')
            extra |= found
            continue

        certified = all(cert.certified for cert in certs) if meets else any(cert.certified for cert in certs)
        result = _hull_result(c, lattice, window, hull, radius, certs, certified and certify)

        if certified or not certify:
            logger.debug(f'Hull at radius {radius}: {len(result.faces)} faces meet the window (certified={certified and certify})')
            return result

        radius *= 2
        if radius > budget:
            raise BudgetExceeded('Hull facets could not be certified within the budget', partial=result, related_op='truncated_hull',
                                 extra_attrs={'radius': radius // 2, 'budget': budget})
        logger.debug(f'Growing hull radius to {radius}')


def _rational_sqrt(value: Fraction) -> Optional[Fraction]:
    num, den = math.isqrt(value.numerator), math.isqrt(value.denominator)
    if num * num == value.numerator and den * den == value.denominator:
        return Fraction(num, den)
    return None


def _isotropic_rays(c: QuadraticCone) -> List[QVector]:
    (alpha, beta), (_, gamma) = c.form.rows
    root = _rational_sqrt(beta * beta - alpha * gamma)
    if root is None:
        raise UnsupportedCone('The boundary rays of the cone are irrational', related_op='sail_2d',
                              extra_attrs={'form': c.form.to_strings()})

    if alpha != 0:
        directions = [((-beta + root) / alpha, Fraction(1)), ((-beta - root) / alpha, Fraction(1))]
    else:
        directions = [(Fraction(1), Fraction(0)), (-gamma / (2 * beta), Fraction(1))]

    rays = []
    for d in directions:
        d = primitive(d)
        rays.append(d if c.bilinear(d, c.selector) > 0 else scale(-1, d))
    return rays


def _sail_chain(p: int, q: int, to_ambient: Callable[[QVector], QVector]) -> Iterator[QVector]:
    """
    Vertex chain of the hull of interior lattice points of ``<(1,0), (p,q)>``, ``q > 0``, ``gcd(p, q) = 1``.

    Row ``k`` contributes its leftmost interior point ``(floor(kp/q) + 1, k)``. Rows stop at the first point at lattice
    distance 1 from the second ray, beyond which every point is dominated. The chain is gift-wrapped by least
    ``dx/dy``, ties going to the farthest point.
    """

    rows = []
    for k in range(1, q + 1):
        x = (k * p) // q + 1
        rows.append((x, k))
        if x * q - k * p == 1:
            break

    current = rows[0]
    yield to_ambient((Fraction(current[0]), Fraction(current[1])))

    while current != rows[-1]:
        cx, ck = current
        _, _, current = min((Fraction(x - cx, k - ck), ck - k, (x, k)) for x, k in rows if k > ck)
        yield to_ambient((Fraction(current[0]), Fraction(current[1])))


def sail_2d(c: ConeSpec, lattice: Lattice = None) -> Iterator[QVector]:
    """
    Vertices of ``[C ∩ L]`` for a plane cone, in boundary order, generated lazily by continued-fraction steps.

    Quadratic plane cones are accepted when their boundary rays are rational.
    """

    if c.dim != 2:
        raise DegenerateCone(f'sail_2d needs a plane cone, got dimension {c.dim}', related_op='sail_2d')

    lattice = lattice or Lattice.standard(2)
    if isinstance(c, QuadraticCone):
        c = PolyhedralCone.from_rays(_isotropic_rays(c))
    elif not isinstance(c, PolyhedralCone):
        raise UnsupportedCone('sail_2d accepts polyhedral and quadratic cones', related_op='sail_2d')

    a, b = (tuple(int(v) for v in primitive(lattice.coordinates(r))) for r in c.rays)
    if a[0] * b[1] - a[1] * b[0] < 0:
        a, b = b, a

    s, t, _ = igcdex(a[0], a[1])
    u = QMatrix.of([[int(s), int(t)], [-a[1], a[0]]])
    u_inv = u.inverse()
    p, q = int(s) * b[0] + int(t) * b[1], a[0] * b[1] - a[1] * b[0]

    return _sail_chain(p, q, lambda z: lattice.point(u_inv @ z))


@dataclass(frozen=True)
class Cocore:
    polyhedron: Polyhedron              #: ``window ∩ [C° ∩ L*]^∨``
    functionals: Tuple[QVector, ...]    #: dominating points of ``C° ∩ L*`` on the window
    radius: int


def _cocore(c: ConeSpec, lattice: Optional[Lattice], window: Polyhedron, budget: int) -> Cocore:
    lattice = lattice or Lattice.standard(c.dim)
    check_window(c, window, 'cocore_truncate')

    if not window.vrep.rays:
        return Cocore(empty_polyhedron(c.dim), (), 0)

    dual, dual_lat = dual_cone(c), lattice.dual()
    order = c.interior_point()
    in_dual = (lambda v: membership(dual, v, MembershipTier.CLOSURE))

    radius, extra = 1, set()
    while True:
        candidates = _minimal_points(set(box_points(dual, dual_lat, radius)) | extra, in_dual, order)

        if candidates:
            dom = dominating_subset(window, [AffineForm(xi) for xi in candidates])
            phi0 = tuple(candidates[i] for i in dom.phi0)
            level = dom.level_set

            found, certified = set(), True
            for v in level.vrep.points:
                if membership(c, v, MembershipTier.INTERIOR):
                    found |= set(slab_points(dual, dual_lat, v, 1))
                elif rational_gcd(dot(v, col) for col in dual_lat.basis.columns) < 1:
                    certified = False

            if found - set(candidates):
                extra |= found
                continue
            if certified:
                logger.debug(f'Cocore certified at radius {radius} with {len(phi0)} functionals')
                return Cocore(level, phi0, radius)
            partial = Cocore(level, phi0, radius)
        else:
            partial = Cocore(window, (), radius)

        radius *= 2
        if radius > budget:
            raise BudgetExceeded('Cocore vertices could not be certified within the budget', partial=partial,
                                 related_op='cocore_truncate', extra_attrs={'budget': budget})


def cocore_truncate(c: ConeSpec, lattice: Optional[Lattice], window: Polyhedron, budget: int = 16) -> Polyhedron:
    """
    ``window ∩ [C° ∩ L*]^∨``: the points of the window on which every dual lattice point of the open dual is at least 1.

    Dual lattice points are gathered in growing boxes and reduced with :py:func:`conekit.polyhedra.dominating_subset`.
    A vertex ``v`` of the resulting level set is certified by enumerating the compact dual slab ``ξ(v) < 1`` when ``v``
    lies in the open cone, and by the lattice gcd of ``v`` when it lies on the boundary.
    """

    return _cocore(c, lattice, window, budget).polyhedron


@dataclass(frozen=True)
class DecompositionMember:
    cone: Polyhedron
    dim: int
    dual_vertices: Tuple[QVector, ...] = ()   #: vertices of the dual face ``P``
    dual_rays: Tuple[QVector, ...] = ()       #: generators of the recession cone of ``P``
    dual_dim: Optional[int] = None

    @property
    def complementary(self) -> bool:
        """``dim σ(P) + dim P = dim V``; fails only for members clipped by the window"""
        return self.dual_dim is not None and self.dim + self.dual_dim == self.cone.dim

    def as_dict(self) -> dict:
        out = {'rays': [_fmt(r) for r in self.cone.vrep.rays], 'dim': self.dim}
        if self.dual_dim is not None:
            out.update({'dual_vertices': [_fmt(v) for v in self.dual_vertices], 'dual_rays': [_fmt(r) for r in self.dual_rays],
                        'dual_dim': self.dual_dim, 'complementary': self.complementary})
        return out


@dataclass(frozen=True)
class DecompositionPatch:
    window: Polyhedron
    members: Tuple[DecompositionMember, ...]
    radius: int = 0

    @property
    def cones(self) -> List[Polyhedron]:
        return [m.cone for m in self.members]


def _sorted_members(members: Iterable[DecompositionMember]) -> Tuple[DecompositionMember, ...]:
    return tuple(sorted(members, key=lambda m: (m.dim, m.cone.vrep.rays)))


def sigma_decomposition(c: ConeSpec, lattice: Optional[Lattice], window: Polyhedron, budget: int = 16) -> DecompositionPatch:
    """
    The members ``σ(P) ∩ window`` for faces ``P`` of ``[C° ∩ L*]``.

    They are the cones over the faces of the cocore truncation, plus ``{0}``. For each member the dual face is read off
    at a relative interior point ``x``: its vertices are the dominating functionals minimal at ``x``, its recession cone
    is the dagger of the smallest face of ``C+`` containing ``x``.
    """

    n = c.dim
    cocore = _cocore(c, lattice, window, budget)
    dual = dual_cone(c)

    zero = cone_from_rays(n, [])
    members: Dict[Polyhedron, DecompositionMember] = {zero: DecompositionMember(zero, 0, cocore.functionals, (), n)}

    if not cocore.polyhedron.empty:
        for node in face_lattice(cocore.polyhedron):
            gens = node.generators.points + node.generators.rays
            sigma = cone_from_rays(n, gens)
            if sigma in members:
                continue

            x = vsum(gens, n)
            values = [dot(xi, x) for xi in cocore.functionals]
            low = min(values)
            tight = tuple(xi for xi, v in zip(cocore.functionals, values) if v == low)
            recession = tuple(face_generators(dual, dagger_face(c, smallest_face(c, x))))
            spanning = [sub(xi, tight[0]) for xi in tight[1:]] + list(recession)
            member = DecompositionMember(sigma, sigma.affine_dim(), tight, recession, rank_of(spanning, n) if spanning else 0)

            if not member.complementary:
                logger.debug(f'Member of dimension {member.dim} is clipped by the window (dual face dimension {member.dual_dim})')
            members[sigma] = member

    logger.debug(f'Decomposition patch with {len(members)} members')
    return DecompositionPatch(window, _sorted_members(members.values()), cocore.radius)


class KernelStatus(enum.Enum):
    """``Stabilized``: the result stopped changing under radius doubling but carries no certificate"""

    CERTIFIED_COMPLETE = 'CertifiedComplete'
    STABILIZED = 'Stabilized'
    PARTIAL = 'Partial'


@dataclass(frozen=True)
class KernelRep:
    """``K = [Γ·S] + C̄`` (``[S] + C̄`` without a group)"""

    cone: ConeSpec
    generators: Tuple[QVector, ...]
    group: Optional[GroupGens] = None

    @property
    def lattice(self) -> Lattice:
        return self.group.lattice if self.group is not None else Lattice.standard(self.cone.dim)


@dataclass(frozen=True)
class KernelTruncation:
    polyhedron: Polyhedron
    status: KernelStatus
    radius: int


def kernel_from_orbits(c: ConeSpec, gens: Optional[GroupGens], s0: Iterable[Sequence], budget: int = 4) -> KernelRep:
    """
    Kernel spanned by the orbits of ``s0``. Generators in a common orbit (within word length ``budget``) are merged.
    """

    points = [_as_vector(s) for s in s0]
    if not points:
        raise ZeroGenerator('A kernel needs at least one generator', related_op='kernel_from_orbits')

    for s in points:
        if len(s) != c.dim:
            raise DimensionMismatch(f'Generator of dimension {len(s)} for a cone in dimension {c.dim}', related_op='kernel_from_orbits')
        if is_zero(s):
            raise ZeroGenerator('Kernel generators must be nonzero', related_op='kernel_from_orbits')
        if not membership(c, s, MembershipTier.CLOSURE):
            raise NotInClosure('Kernel generator outside the closed cone', related_op='kernel_from_orbits', extra_attrs={'s': _fmt(s)})

    if gens is not None and gens.cone != c:
        try:
            gens = validate_group(gens, c, gens.lattice)
        except (NotConePreserving, NotLatticePreserving, DimensionMismatch) as e:
            logger.exception('Group does not act on the kernel cone')
            raise NotInvariant('The group does not preserve the cone of the kernel', base_exception=e, related_op='kernel_from_orbits')

    reps: List[QVector] = []
    for s in sorted(set(points)):
        if gens is not None and any(s in orbit_ball(gens, r, budget).elements for r in reps):
            continue
        reps.append(s)

    return KernelRep(c, tuple(reps), gens)


def _kernel_points(k: KernelRep, radius: int) -> Tuple[List[QVector], bool]:
    if k.group is None:
        return list(k.generators), True

    points: Set[QVector] = set()
    closed = True
    for s in k.generators:
        ball = orbit_ball(k.group, s, radius)
        points |= set(ball.elements)
        closed = closed and ball.closed
    return sorted(points), closed


def _kernel_polyhedron(k: KernelRep, radius: int) -> Tuple[Polyhedron, bool]:
    points, closed = _kernel_points(k, radius)
    rays = sorted(set(_recession_rays(k.cone, k.lattice, radius)) | {primitive(p) for p in points})
    return _hull_of(k.cone, points, rays), closed


class _OrbitMinima:
    """
    Certified ``min ξ(γs)`` over the whole kernel orbit, one fundamental cone per functional.

    A finite orbit (closed within ``radius``) decides by itself. Otherwise each generator is pushed into ``σ(ξ)``: a
    point violating a paired facet is moved by the pairing element, which strictly lowers ``ξ``. Once ``σ(ξ)`` is
    certified its points minimize ``ξ`` over their orbits. ``None`` means no certificate could be produced.
    """

    def __init__(self, k: KernelRep, budget: int) -> None:
        self.k = k
        self.budget = budget
        self._orbits: Dict[int, Tuple[List[QVector], bool]] = {}
        self._cache: Dict[QVector, Optional[Fraction]] = {}

    def orbit(self, radius: int) -> Tuple[List[QVector], bool]:
        if radius not in self._orbits:
            self._orbits[radius] = _kernel_points(self.k, radius)
        return self._orbits[radius]

    def __call__(self, xi: Sequence[Fraction], radius: int) -> Optional[Fraction]:
        xi = tuple(xi)
        points, closed = self.orbit(radius)
        if closed:
            return min(dot(xi, p) for p in points)
        if xi not in self._cache:
            self._cache[xi] = self._descend(xi)
        return self._cache[xi]

    def _descend(self, xi: QVector) -> Optional[Fraction]:
        k = self.k
        if k.group is None or not membership(k.cone, xi, MembershipTier.OPEN_DUAL):
            return None

        from conekit.domains import FundamentalStatus, build_fundamental_cone

        try:
            fd = build_fundamental_cone(k.cone, k.lattice, k.group, xi, self.budget)
        except BudgetExceeded:
            return None
        if fd.status != FundamentalStatus.CERTIFIED:
            logger.debug(f'No certified fundamental cone for {_fmt(xi)} within budget {self.budget}')
            return None

        moves = [(fd.sigma.hrep.inequalities[p.facet], k.group.evaluate(p.word)) for p in fd.facet_pairings]
        values = []
        for s in k.generators:
            y = s
            # ξ takes discrete positive values on the orbit, so the descent stops
            while True:
                step = next((g for con, g in moves if con.slack(y) < 0), None)
                if step is None:
                    break
                y = step @ y
            if not fd.sigma.contains(y):
                return None
            values.append(dot(xi, y))
        return min(values)


def _polar(p: Polyhedron) -> Polyhedron:
    """``{ξ : ξ >= 1 on the vertices, ξ >= 0 on the rays, ξ = 0 on the lines}``"""

    ineqs = tuple(Constraint(v, 1) for v in p.vrep.points) + tuple(Constraint(r, 0) for r in p.vrep.rays)
    return dual_description(HRep(p.dim, ineqs, tuple(Constraint(ln, 0) for ln in p.vrep.lines)))


Verdict = Optional[bool]   #: True when exact, False when an orbit point still cuts the result, None when uncertifiable
Minimum = Callable[[Sequence[Fraction]], Optional[Fraction]]


def _stabilize(k: KernelRep, build: Callable[[Polyhedron], Polyhedron], certify: Callable[[Polyhedron, Polyhedron, Minimum], Verdict],
               budget: int, op: str) -> KernelTruncation:
    """
    Grow the orbit radius until the windowed result is certified.

    A result that repeats under radius doubling but cannot be certified is returned as ``Stabilized``, which is not a
    proof and is reported as partial.
    """

    previous: Optional[KernelTruncation] = None
    minima = _OrbitMinima(k, budget)
    radius = 1
    while radius <= budget:
        poly, closed = _kernel_polyhedron(k, radius)
        cut = build(poly)
        if closed and isinstance(k.cone, PolyhedralCone):
            return KernelTruncation(cut, KernelStatus.CERTIFIED_COMPLETE, radius)

        verdict = certify(poly, cut, lambda xi: minima(xi, radius))
        if verdict:
            logger.debug(f'{op} certified at radius {radius}')
            return KernelTruncation(cut, KernelStatus.CERTIFIED_COMPLETE, radius)
        if verdict is None and previous is not None and previous.polyhedron == cut:
            logger.warning(f'{op} stabilized at radius {radius} without a certificate')
            return KernelTruncation(cut, KernelStatus.STABILIZED, radius)

        previous = KernelTruncation(cut, KernelStatus.PARTIAL, radius)
        radius *= 2

    raise BudgetExceeded('Kernel truncation was not certified within the budget', partial=previous, related_op=op,
                         extra_attrs={'budget': budget})


def _certify_kernel(k: KernelRep, window: Polyhedron) -> Callable[[Polyhedron, Polyhedron, Minimum], Verdict]:
    """
    ``K̄ ∩ window`` equals the cut when every facet ``(ξ, b)`` of the orbit hull meeting the window holds on the whole
    kernel: ``ξ`` in the closed dual and ``min ξ >= b`` over the orbit.
    """

    def certify(poly: Polyhedron, cut: Polyhedron, minima: Minimum) -> Verdict:
        if cut.empty or poly.hrep.equations:
            return None

        verdict: Verdict = True
        for con in poly.hrep.inequalities:
            if _facet_in_window(poly, con, window).empty:
                continue
            if not membership(k.cone, con.normal, MembershipTier.CLOSED_DUAL):
                return None
            if con.offset <= 0:
                continue
            low = minima(con.normal)
            if low is None:
                verdict = None
            elif low < con.offset:
                return False
        return verdict

    return certify


def _certify_kernel_dual(k: KernelRep) -> Callable[[Polyhedron, Polyhedron, Minimum], Verdict]:
    """
    ``K^∨ = {ξ in C^* : f_K(ξ) >= 1}`` is convex, so the cut is exact once its vertices satisfy ``f_K >= 1`` and its
    rays and lines stay in ``C^*``.
    """

    def certify(poly: Polyhedron, cut: Polyhedron, minima: Minimum) -> Verdict:
        if cut.empty:
            return True

        directions = cut.vrep.rays + cut.vrep.lines + tuple(scale(-1, ln) for ln in cut.vrep.lines)
        if not all(membership(k.cone, r, MembershipTier.CLOSED_DUAL) for r in directions):
            return False

        verdict: Verdict = True
        for v in cut.vrep.points:
            if not membership(k.cone, v, MembershipTier.CLOSED_DUAL):
                return False
            low = minima(v)
            if low is None:
                verdict = None
            elif low < 1:
                return False
        return verdict

    return certify


def kernel_truncate(k: KernelRep, window: Polyhedron, budget: int = 16) -> KernelTruncation:
    """``K̄ ∩ window``"""
    return _stabilize(k, lambda poly: poly.intersect(window), _certify_kernel(k, window), budget, 'kernel_truncate')


def kernel_dual_truncate(k: KernelRep, window: Polyhedron, budget: int = 16) -> KernelTruncation:
    """``K^∨ ∩ window`` with ``K^∨ = {ξ : ξ >= 1 on K}``; the window lives in the dual space"""
    return _stabilize(k, lambda poly: _polar(poly).intersect(window), _certify_kernel_dual(k), budget, 'kernel_dual_truncate')


def double_dual_truncate(k: KernelRep, window: Polyhedron, budget: int = 16) -> KernelTruncation:
    """``K^∨∨ ∩ window`` at the radius where :py:func:`kernel_truncate` settles; equal to ``K̄ ∩ window``"""

    base = kernel_truncate(k, window, budget)
    poly, _ = _kernel_polyhedron(k, base.radius)
    return KernelTruncation(_polar(_polar(poly)).intersect(window), base.status, base.radius)


def comparibility_constant(k1: KernelRep, k2: KernelRep, window: Polyhedron, budget: int = 16) -> Optional[Fraction]:
    """
    Least ``λ >= 1`` with ``λK1 ⊆ K2 ⊆ λ^-1 K1`` as far as the facets meeting the window can tell, or ``None`` when no
    such ``λ`` exists there.
    """

    if k1.cone != k2.cone:
        raise InstanceError('Kernels live on different cones', related_op='comparibility_constant')

    q1, _ = _kernel_polyhedron(k1, kernel_truncate(k1, window, budget).radius)
    q2, _ = _kernel_polyhedron(k2, kernel_truncate(k2, window, budget).radius)

    lam = Fraction(1)
    for inner, outer in ((q1, q2), (q2, q1)):
        for con in outer.hrep.inequalities:
            if con.offset <= 0 or _facet_in_window(outer, con, window).empty:
                continue
            low = inner.minimum(con.normal)
            if low is None or low <= 0:
                return None
            lam = max(lam, con.offset / low)
    return lam


@dataclass(frozen=True)
class KernelValue:
    value: Fraction
    status: KernelStatus
    radius: int


def admissible_eval(k: KernelRep, x: Sequence, budget: int = 16) -> KernelValue:
    """
    ``f_K(x) = min_K ⟨·, x⟩`` for a kernel of the dual cone and ``x`` in ``C+``.

    The minimum over the orbit is certified for finite orbits and, for ``x`` in the open cone, by descending every
    generator into a certified fundamental cone for ``x``. A minimum that only repeats under radius doubling comes
    back as ``Stabilized``.
    """

    x = _as_vector(x)
    if not membership(dual_cone(k.cone), x, MembershipTier.RATIONAL_HULL):
        raise NotInClosure('Point is not in the rational hull', related_op='admissible_eval', extra_attrs={'x': _fmt(x)})

    minima = _OrbitMinima(k, budget)
    previous = None
    radius = 1
    while radius <= budget:
        low = minima(x, radius)
        if low is not None:
            return KernelValue(low, KernelStatus.CERTIFIED_COMPLETE, radius)

        points, _ = minima.orbit(radius)
        value = min(dot(p, x) for p in points)
        if value == previous:
            logger.warning(f'f_K({_fmt(x)}) stabilized at radius {radius} without a certificate')
            return KernelValue(value, KernelStatus.STABILIZED, radius)
        previous = value
        radius *= 2

    raise BudgetExceeded('Admissible function value was not certified', partial=previous, related_op='admissible_eval',
                         extra_attrs={'x': _fmt(x), 'budget': budget})


@dataclass(frozen=True)
class AdmissibleFunction:
    window: Polyhedron
    pieces: Tuple[Tuple[Polyhedron, QVector], ...]   #: (region, linear form on it)
    status: KernelStatus = KernelStatus.CERTIFIED_COMPLETE

    def __call__(self, x: Sequence) -> Fraction:
        x = _as_vector(x)
        for region, form in self.pieces:
            if region.contains(x):
                return dot(form, x)
        raise NotInClosure('Point outside the window of the admissible function', related_op='AdmissibleFunction',
                           extra_attrs={'x': _fmt(x)})

    def as_dict(self) -> dict:
        return {'status': self.status.value,
                'pieces': [{'rays': [_fmt(r) for r in region.vrep.rays], 'form': _fmt(form)} for region, form in self.pieces]}


def _pieces_certified(pieces: Sequence[Tuple[Polyhedron, QVector]], minimum: Minimum) -> Verdict:
    """
    ``f_K`` is concave and homogeneous, so it agrees with the linear form of a piece once it does on the piece's rays.
    """

    verdict: Verdict = True
    for region, form in pieces:
        for r in region.vrep.rays:
            low = minimum(r)
            if low is None:
                verdict = None
            elif low < dot(form, r):
                return False
    return verdict


def admissible_function(k: KernelRep, window: Polyhedron, budget: int = 16) -> AdmissibleFunction:
    """Pieces of ``f_K`` on a window cone of ``C+``, one per patch of the dominating orbit functionals"""

    check_window(dual_cone(k.cone), window, 'admissible_function')

    minima = _OrbitMinima(k, budget)
    previous, result = None, None
    radius = 1
    while radius <= budget:
        points, _ = minima.orbit(radius)
        dom = dominating_subset(window, [AffineForm(p) for p in points])
        forms = frozenset(points[i] for i in dom.phi0)
        pieces = tuple((patch.region, points[min(patch.minimizers)]) for patch in dom.patches)

        verdict = _pieces_certified(pieces, lambda xi: minima(xi, radius))
        if verdict:
            return AdmissibleFunction(window, pieces)
        result = AdmissibleFunction(window, pieces, KernelStatus.PARTIAL)
        if verdict is None and forms == previous:
            logger.warning(f'Admissible function stabilized at radius {radius} without a certificate')
            return AdmissibleFunction(window, pieces, KernelStatus.STABILIZED)
        previous = forms
        radius *= 2

    raise BudgetExceeded('Admissible function was not certified within the budget', partial=result, related_op='admissible_function',
                         extra_attrs={'budget': budget})


@dataclass(frozen=True)
class Arrangement:
    function: AdmissibleFunction
    patch: DecompositionPatch
    normals: Tuple[QVector, ...]       #: hyperplanes negative somewhere on the window, positive on the base chamber
    cocycle: Mapping[str, QVector]     #: ``f∘γ^-1 - f`` per generator
    identity_checks: int
    status: Exhaustiveness

    def as_dict(self) -> dict:
        return {'function': self.function.as_dict(), 'members': [m.as_dict() for m in self.patch.members],
                'normals': [_fmt(h) for h in self.normals], 'cocycle': {label: _fmt(v) for label, v in sorted(self.cocycle.items())},
                'identity_checks': self.identity_checks, 'status': self.status.value}


def arrangement_decomposition(c: ConeSpec, lattice: Optional[Lattice], gens: GroupGens, hyperplane_orbits: Sequence[Sequence],
                              base_chamber: Polyhedron, window: Polyhedron, budget: int = 8) -> Arrangement:
    """
    ``f(x) = Σ_H min(ξ_H(x), 0)`` over the Γ-orbits of the given hyperplanes, each ``ξ_H`` primitive in ``L*`` and
    positive on the base chamber.

    Returns the pieces of ``f`` on the window (the chambers cut out by the hyperplanes meeting it), the face-closed
    patch of those chambers and the cocycle ``f∘γ^-1 - f = -Σ_{H ∈ ℋ(γ)} ξ_H``, where ``ℋ(γ)`` separates the base chamber
    from its image. The cocycle is checked against ``f`` on chamber sample points and the cocycle identity on all words
    of length at most 3; a mismatch means the hyperplane enumeration is incomplete.
    """

    n = c.dim
    lattice = lattice or gens.lattice
    op = 'arrangement_decomposition'
    check_window(c, window, op)
    check_window(c, base_chamber, op)
    if base_chamber.affine_dim() != n:
        raise NotAChamber('Base chamber must be full-dimensional', related_op=op)

    dual_lat, dual_gens = lattice.dual(), gens.dual()
    base = vsum(base_chamber.vrep.rays, n)

    def oriented(xi: QVector) -> QVector:
        xi = dual_lat.point(primitive(dual_lat.coordinates(xi)))
        values = [dot(xi, r) for r in base_chamber.vrep.rays]
        if min(values) < 0 < max(values) or dot(xi, base) == 0:
            raise NotAChamber('A hyperplane of the arrangement cuts the base chamber', related_op=op, extra_attrs={'xi': _fmt(xi)})
        return xi if dot(xi, base) > 0 else scale(-1, xi)

    seeds = []
    for xi in hyperplane_orbits:
        xi = _as_vector(xi)
        if len(xi) != n:
            raise DimensionMismatch(f'Normal of dimension {len(xi)} in dimension {n}', related_op=op)
        if is_zero(xi) or membership(c, xi, MembershipTier.CLOSED_DUAL) or membership(c, scale(-1, xi), MembershipTier.CLOSED_DUAL):
            raise HyperplaneMissesCone('Hyperplane does not meet the open cone', related_op=op, extra_attrs={'xi': _fmt(xi)})
        seeds.append(oriented(xi))

    def enumerate_at(radius: int) -> Tuple[List[QVector], bool]:
        found, closed = set(), True
        for xi in seeds:
            ball = orbit_ball(dual_gens, xi, radius)
            closed = closed and ball.closed
            found |= {oriented(eta) for eta in ball.elements}
        return sorted(found), closed

    def meets_window(h: QVector) -> bool:
        return any(dot(h, r) < 0 for r in window.vrep.rays)

    radius, previous = 1, None
    while True:
        hyperplanes, closed = enumerate_at(radius)
        relevant = [h for h in hyperplanes if meets_window(h)]
        if closed or relevant == previous:
            break
        previous = relevant
        radius *= 2
        if radius > budget:
            raise BudgetExceeded('Hyperplanes meeting the window did not stabilize', related_op=op, extra_attrs={'budget': budget})

    status = Exhaustiveness.CERTIFIED_COMPLETE if closed else Exhaustiveness.BUDGET_BOUNDED
    logger.debug(f'{len(relevant)} of {len(hyperplanes)} enumerated hyperplanes meet the window (radius {radius})')

    regions = [window]
    for h in relevant:
        split = []
        for region in regions:
            for side in (h, scale(-1, h)):
                part = region.intersect([Constraint(side, 0)])
                if part.affine_dim() == region.affine_dim():
                    split.append(part)
        regions = split
    regions.sort(key=lambda r: r.vrep.rays)

    pieces = tuple((region, vsum([h for h in relevant if all(dot(h, r) <= 0 for r in region.vrep.rays)], n)) for region in regions)
    function = AdmissibleFunction(window, pieces)

    members: Dict[Polyhedron, DecompositionMember] = {}
    for region in regions:
        for node in face_lattice(region):
            cone = cone_from_rays(n, node.generators.rays)
            members.setdefault(cone, DecompositionMember(cone, cone.affine_dim()))
    patch = DecompositionPatch(window, _sorted_members(members.values()), radius)

    everything, _ = enumerate_at(max(radius, 4))

    def cocycle_of(g: QMatrix) -> QVector:
        image = g @ base
        return scale(-1, vsum([h for h in everything if dot(h, image) < 0], n))

    def f_all(y: QVector) -> Fraction:
        return sum((min(dot(h, y), Fraction(0)) for h in everything), Fraction(0))

    cocycle = {label: cocycle_of(m) for label, m in gens.generators}
    partial = Arrangement(function, patch, tuple(relevant), cocycle, 0, status)

    for label, m in gens.generators:
        inverse = m.inverse()
        for region in regions:
            x = vsum(region.vrep.rays, n)
            if f_all(inverse @ x) - f_all(x) != dot(cocycle[label], x):
                raise BudgetExceeded('Cocycle does not match the arrangement function; hyperplane enumeration is incomplete',
                                     partial=partial, related_op=op, extra_attrs={'generator': label, 'x': _fmt(x)})

    checks = 0
    for length in (1, 2, 3):
        for word in itertools.product(gens.labels, repeat=length):
            head, rest = word[0], word[1:]
            expected = add(cocycle[head], dual_gens.matrix(head) @ cocycle_of(gens.evaluate(rest)))
            if cocycle_of(gens.evaluate(word)) != expected:
                raise BudgetExceeded('Cocycle identity failed; hyperplane enumeration is incomplete', partial=partial,
                                     related_op=op, extra_attrs={'word': '.'.join(word)})
            checks += 1

    logger.debug(f'Cocycle identity verified on {checks} words')
    return Arrangement(function, patch, tuple(relevant), cocycle, checks, status)
