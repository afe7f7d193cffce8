"""
Rational polyhedra in both representations.

A :py:class:`Polyhedron` always carries a minimal, canonical H-representation (:py:class:`HRep`) and V-representation
(:py:class:`VRep`) of the same set. Conversions are done by the Parma Polyhedra Library (``ppl``); its minimized systems are
then brought into canonical form here, so the output never depends on the order constraints were given in.
"""

from __future__ import annotations

import itertools
import logging

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import networkx as nx
import ppl

from conekit.errors import DimensionMismatch, EmptyPolyhedron, InconsistentPolyhedron, NegativeOnP, NotPointed
from conekit.exact import (
    Lattice, QMatrix, QVector, add, as_rational, dot, format_rational, is_zero, primitive, primitive_line, rank_of, rref, scale, sub,
    unit_vector, zero_vector
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True, order=True)
class Constraint:
    """
    The affine condition ``<normal, x> >= offset`` (or ``== offset`` when used as an equation)
    """

    normal: QVector
    offset: Fraction = Fraction(0)

    def __post_init__(self) -> None:
        object.__setattr__(self, 'normal', tuple(as_rational(a) for a in self.normal))
        object.__setattr__(self, 'offset', as_rational(self.offset))

    def slack(self, x: Sequence[Fraction]) -> Fraction:
        return dot(self.normal, x) - self.offset

    def as_dict(self) -> dict:
        return {'normal': [format_rational(a) for a in self.normal], 'offset': format_rational(self.offset)}


@dataclass(frozen=True)
class HRep:
    dim: int
    inequalities: Tuple[Constraint, ...] = ()
    equations: Tuple[Constraint, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, 'inequalities', tuple(self.inequalities))
        object.__setattr__(self, 'equations', tuple(self.equations))

        for con in self.inequalities + self.equations:
            if len(con.normal) != self.dim:
                raise DimensionMismatch(f'Constraint of dimension {len(con.normal)} in a {self.dim}-dimensional H-representation',
                                        related_op='HRep')


@dataclass(frozen=True)
class VRep:
    dim: int
    points: Tuple[QVector, ...] = ()
    rays: Tuple[QVector, ...] = ()
    lines: Tuple[QVector, ...] = ()

    def __post_init__(self) -> None:
        for attr in ('points', 'rays', 'lines'):
            vecs = tuple(tuple(as_rational(a) for a in v) for v in getattr(self, attr))
            if any(len(v) != self.dim for v in vecs):
                raise DimensionMismatch(f'{attr} of wrong dimension in a {self.dim}-dimensional V-representation', related_op='VRep')
            object.__setattr__(self, attr, vecs)

        if any(is_zero(v) for v in self.rays + self.lines):
            raise DimensionMismatch('Rays and lines must be nonzero', related_op='VRep')


@dataclass(frozen=True)
class AffineForm:
    """
    The affine function ``x -> <linear, x> + constant``
    """

    linear: QVector
    constant: Fraction = Fraction(0)

    def __post_init__(self) -> None:
        object.__setattr__(self, 'linear', tuple(as_rational(a) for a in self.linear))
        object.__setattr__(self, 'constant', as_rational(self.constant))

    def __call__(self, x: Sequence[Fraction]) -> Fraction:
        return dot(self.linear, x) + self.constant

    def __sub__(self, other: AffineForm) -> AffineForm:
        return AffineForm(sub(self.linear, other.linear), self.constant - other.constant)

    def at_least(self, bound: Fraction) -> Constraint:
        """The constraint ``self(x) >= bound``"""
        return Constraint(self.linear, as_rational(bound) - self.constant)


@dataclass(frozen=True)
class Polyhedron:
    hrep: HRep
    vrep: VRep
    empty: bool = False

    @property
    def dim(self) -> int:
        """Ambient dimension"""
        return self.hrep.dim

    def is_empty(self) -> bool:
        return self.empty

    def contains(self, x: Sequence[Fraction]) -> bool:
        if self.empty:
            return False
        return all(c.slack(x) >= 0 for c in self.hrep.inequalities) and all(c.slack(x) == 0 for c in self.hrep.equations)

    def interior_contains(self, x: Sequence[Fraction]) -> bool:
        """Membership in the relative interior"""
        return self.contains(x) and all(c.slack(x) > 0 for c in self.hrep.inequalities)

    def affine_dim(self) -> int:
        if self.empty:
            return -1
        base = self.vrep.points[0]
        spanning = [sub(p, base) for p in self.vrep.points[1:]] + list(self.vrep.rays) + list(self.vrep.lines)
        return rank_of(spanning, self.dim)

    def is_bounded(self) -> bool:
        return not self.vrep.rays and not self.vrep.lines

    def is_cone(self) -> bool:
        return not self.empty and self.vrep.points == (zero_vector(self.dim),)

    def is_pointed(self) -> bool:
        return not self.vrep.lines

    def intersect(self, other: Union[Polyhedron, Iterable[Constraint]]) -> Polyhedron:
        if isinstance(other, Polyhedron):
            if other.dim != self.dim:
                raise DimensionMismatch(f'Cannot intersect polyhedra in dimensions {self.dim} and {other.dim}', related_op='Polyhedron.intersect')
            extra_ineqs, extra_eqs = other.hrep.inequalities, other.hrep.equations
        else:
            extra_ineqs, extra_eqs = tuple(other), ()

        return dual_description(HRep(self.dim, self.hrep.inequalities + tuple(extra_ineqs), self.hrep.equations + tuple(extra_eqs)))

    def minimum(self, direction: Sequence[Fraction]) -> Optional[Fraction]:
        """``min <direction, x>`` over the polyhedron, or ``None`` when unbounded below"""

        if self.empty:
            raise EmptyPolyhedron('Minimum over the empty polyhedron', related_op='Polyhedron.minimum')

        if any(dot(direction, r) < 0 for r in self.vrep.rays) or any(dot(direction, ln) != 0 for ln in self.vrep.lines):
            return None

        return min(dot(direction, p) for p in self.vrep.points)

    def maximum(self, direction: Sequence[Fraction]) -> Optional[Fraction]:
        low = self.minimum(tuple(-a for a in direction))
        return None if low is None else -low

    def tight_inequalities(self, x: Sequence[Fraction]) -> frozenset:
        return frozenset(i for i, c in enumerate(self.hrep.inequalities) if c.slack(x) == 0)


def _orthogonal_reduce(x: QVector, basis: Sequence[QVector]) -> QVector:
    if not basis:
        return x

    gram = QMatrix.of([[dot(u, v) for v in basis] for u in basis])
    coeffs = gram.inverse() @ tuple(dot(u, x) for u in basis)
    for c, u in zip(coeffs, basis):
        x = sub(x, scale(c, u))
    return x


def _canonical_vrep(n: int, points: Iterable[QVector], rays: Iterable[QVector], lines: Iterable[QVector]) -> VRep:
    line_basis = [primitive_line(r) for r in rref(list(lines), n)[0]] if lines else []
    line_basis.sort()

    canon_points = sorted({_orthogonal_reduce(tuple(p), line_basis) for p in points})
    canon_rays = set()
    for r in rays:
        reduced = _orthogonal_reduce(tuple(r), line_basis)
        if not is_zero(reduced):
            canon_rays.add(primitive(reduced))

    return VRep(n, tuple(canon_points), tuple(sorted(canon_rays)), tuple(line_basis))


def _canonical_hrep(n: int, inequalities: Iterable[Constraint], equations: Iterable[Constraint]) -> HRep:
    eq_rows, eq_pivots = rref([c.normal + (-c.offset,) for c in equations], n + 1) if equations else ([], [])
    canon_eqs = set()
    for row in eq_rows:
        prim = primitive(row)
        canon_eqs.add(Constraint(prim[:n], -prim[n]))

    canon_ineqs = set()
    for con in inequalities:
        w = con.normal + (-con.offset,)
        for row, p in zip(eq_rows, eq_pivots):
            if w[p] != 0:
                w = sub(w, scale(w[p], row))
        if is_zero(w[:n]):
            continue
        prim = primitive(w)
        canon_ineqs.add(Constraint(prim[:n], -prim[n]))

    return HRep(n, tuple(sorted(canon_ineqs)), tuple(sorted(canon_eqs)))


def empty_polyhedron(n: int) -> Polyhedron:
    e1 = unit_vector(n, 0)
    hrep = HRep(n, (Constraint(tuple(-a for a in e1), 0), Constraint(e1, 1)))
    return Polyhedron(hrep, VRep(n), empty=True)


def _integral_row(row: Sequence[Fraction]) -> List[int]:
    return [int(a) for a in primitive(row)] if not is_zero(row) else [0] * len(row)


def _ppl_polyhedron(rep: Union[HRep, VRep]) -> ppl.C_Polyhedron:
    n = rep.dim

    if isinstance(rep, HRep):
        poly = ppl.C_Polyhedron(n, 'universe')
        cs = ppl.Constraint_System()
        for ineq in rep.inequalities:
            row = _integral_row(ineq.normal + (-ineq.offset,))
            cs.insert(ppl.Linear_Expression(row[:n], row[n]) >= 0)
        for eq in rep.equations:
            row = _integral_row(eq.normal + (-eq.offset,))
            cs.insert(ppl.Linear_Expression(row[:n], row[n]) == 0)
        poly.add_constraints(cs)
        return poly

    poly = ppl.C_Polyhedron(n, 'empty')
    gs = ppl.Generator_System()
    for p in rep.points:
        row = _integral_row(p + (Fraction(1),))
        gs.insert(ppl.point(ppl.Linear_Expression(row[:n], 0), row[n]))
    for r in rep.rays:
        gs.insert(ppl.ray(ppl.Linear_Expression(_integral_row(r), 0)))
    for ln in rep.lines:
        gs.insert(ppl.line(ppl.Linear_Expression(_integral_row(ln), 0)))
    poly.add_generators(gs)
    return poly


def _ppl_vector(obj, n: int) -> QVector:
    coeffs = [Fraction(int(a)) for a in obj.coefficients()]
    return tuple(coeffs + [Fraction(0)] * (n - len(coeffs)))


def _ppl_vrep(poly: ppl.C_Polyhedron, n: int) -> VRep:
    points: List[QVector] = []
    rays: List[QVector] = []
    lines: List[QVector] = []

    for gen in poly.minimized_generators():
        coords = _ppl_vector(gen, n)
        if gen.is_point():
            points.append(tuple(a / int(gen.divisor()) for a in coords))
        elif gen.is_ray():
            rays.append(coords)
        elif gen.is_line():
            lines.append(coords)

    return _canonical_vrep(n, points, rays, lines)


def _ppl_hrep(poly: ppl.C_Polyhedron, n: int) -> HRep:
    ineqs: List[Constraint] = []
    eqs: List[Constraint] = []

    for con in poly.minimized_constraints():
        found = Constraint(_ppl_vector(con, n), -int(con.inhomogeneous_term()))
        if con.is_equality():
            eqs.append(found)
        else:
            ineqs.append(found)

    return _canonical_hrep(n, ineqs, eqs)


def dual_description(rep: Union[HRep, VRep]) -> Polyhedron:
    """
    Compute both representations of a polyhedron given either one.

    The result is canonical: inequalities are facets scaled to primitive integral ``(normal, offset)`` rows and reduced
    modulo the (echelonized) equations; points and rays are reduced orthogonally to the lineality space, rays are
    primitive integral; everything is sorted lexicographically. An infeasible H-representation yields the empty
    polyhedron with ``empty`` set.
    """

    if isinstance(rep, VRep) and not rep.points:
        return empty_polyhedron(rep.dim)

    poly = _ppl_polyhedron(rep)
    if poly.is_empty():
        logger.debug('H-representation is infeasible')
        return empty_polyhedron(rep.dim)

    return Polyhedron(_ppl_hrep(poly, rep.dim), _ppl_vrep(poly, rep.dim))


def verify_polyhedron(hrep: HRep, vrep: VRep) -> Polyhedron:
    """
    Cross-check a polyhedron given with both representations (used by ``--certify`` when loading instances).

    Every V-generator must satisfy every H-constraint and both representations must convert to the same canonical form.
    """

    if hrep.dim != vrep.dim:
        raise DimensionMismatch(f'H-representation in dimension {hrep.dim}, V-representation in {vrep.dim}', related_op='verify_polyhedron')

    for con in hrep.inequalities:
        bad = [p for p in vrep.points if con.slack(p) < 0] + [r for r in vrep.rays if dot(con.normal, r) < 0] + \
              [ln for ln in vrep.lines if dot(con.normal, ln) != 0]
        if bad:
            raise InconsistentPolyhedron('V-generator violates an inequality', related_op='verify_polyhedron',
                                         extra_attrs={'constraint': con.as_dict(), 'generator': bad[0]})

    for con in hrep.equations:
        if any(con.slack(p) != 0 for p in vrep.points) or any(dot(con.normal, d) != 0 for d in vrep.rays + vrep.lines):
            raise InconsistentPolyhedron('V-generator violates an equation', related_op='verify_polyhedron', extra_attrs={'constraint': con.as_dict()})

    from_h, from_v = dual_description(hrep), dual_description(vrep)
    if from_h != from_v:
        raise InconsistentPolyhedron('Representations describe different sets', related_op='verify_polyhedron')

    return from_h


def polyhedron_from_constraints(n: int, inequalities: Iterable[Tuple[Sequence, object]] = (), equations: Iterable[Tuple[Sequence, object]] = ()) -> Polyhedron:
    return dual_description(HRep(n, tuple(Constraint(a, b) for a, b in inequalities), tuple(Constraint(a, b) for a, b in equations)))


def cone_from_rays(n: int, rays: Iterable[Sequence], lines: Iterable[Sequence] = ()) -> Polyhedron:
    return dual_description(VRep(n, (zero_vector(n),), tuple(rays), tuple(lines)))


def cone_from_normals(n: int, normals: Iterable[Sequence]) -> Polyhedron:
    return dual_description(HRep(n, tuple(Constraint(a, 0) for a in normals)))


@dataclass(frozen=True)
class FaceLatticeNode:
    index: int
    active: frozenset               #: indices into ``hrep.inequalities`` tight on the face
    dim: int
    generators: VRep
    subfaces: Tuple[int, ...] = field(default=())    #: faces covered by this one
    superfaces: Tuple[int, ...] = field(default=())  #: faces covering this one


def face_lattice(p: Polyhedron, facets: Optional[Iterable[int]] = None) -> List[FaceLatticeNode]:
    """
    All nonempty faces of ``p`` with their covering relations.

    Faces are enumerated as closures of tight-constraint sets starting from ``p`` itself; nodes are sorted by
    ``(dim, generators)`` so the last node is ``p``. When ``facets`` (indices into ``hrep.inequalities``) is given only
    the faces of those facets are enumerated and ``p`` itself is left out.
    """

    if p.empty:
        raise EmptyPolyhedron('The empty polyhedron has no faces', related_op='face_lattice')

    ineqs = p.hrep.inequalities
    points, rays = p.vrep.points, p.vrep.rays
    gens = [('p', i) for i in range(len(points))] + [('r', i) for i in range(len(rays))]

    tight_sets: Dict[Tuple[str, int], frozenset] = {}
    for kind, i in gens:
        if kind == 'p':
            tight_sets[(kind, i)] = frozenset(j for j, con in enumerate(ineqs) if con.slack(points[i]) == 0)
        else:
            tight_sets[(kind, i)] = frozenset(j for j, con in enumerate(ineqs) if dot(con.normal, rays[i]) == 0)

    everything = frozenset(range(len(ineqs)))

    def active_of(members: frozenset) -> frozenset:
        return everything.intersection(*(tight_sets[g] for g in members))

    def closure(act: frozenset) -> frozenset:
        return frozenset(g for g in gens if act <= tight_sets[g])

    def has_point(members: frozenset) -> bool:
        return any(kind == 'p' for kind, _ in members)

    if facets is None:
        queue = [frozenset(gens)]
    else:
        queue = [face for face in (closure(frozenset({j})) for j in sorted(set(facets))) if has_point(face)]
    seen = set(queue)

    while queue:
        face = queue.pop()
        act = active_of(face)
        for j in range(len(ineqs)):
            if j in act:
                continue
            sub_face = frozenset(g for g in face if j in tight_sets[g])
            if not has_point(sub_face):
                continue
            closed = closure(active_of(sub_face))
            if closed not in seen:
                seen.add(closed)
                queue.append(closed)

    def vrep_of(members: frozenset) -> VRep:
        return VRep(p.dim, tuple(points[i] for k, i in sorted(members) if k == 'p'), tuple(rays[i] for k, i in sorted(members) if k == 'r'),
                    p.vrep.lines)

    def dim_of(members: frozenset) -> int:
        face = vrep_of(members)
        base = face.points[0]
        return rank_of([sub(x, base) for x in face.points[1:]] + list(face.rays) + list(face.lines), p.dim)

    dims = {f: dim_of(f) for f in seen}
    ordered = sorted(seen, key=lambda f: (dims[f], sorted(f)))
    index = {f: i for i, f in enumerate(ordered)}

    # faces of a polyhedron form a graded lattice: covers are inclusions one dimension apart
    by_dim: Dict[int, List[frozenset]] = {}
    for f in ordered:
        by_dim.setdefault(dims[f], []).append(f)

    hasse = nx.DiGraph()
    hasse.add_nodes_from(range(len(ordered)))
    hasse.add_edges_from((index[a], index[b]) for a in ordered for b in by_dim.get(dims[a] - 1, ()) if b < a)

    return [FaceLatticeNode(index=index[f], active=active_of(f), dim=dims[f], generators=vrep_of(f),
                            subfaces=tuple(sorted(hasse.successors(index[f]))), superfaces=tuple(sorted(hasse.predecessors(index[f]))))
            for f in ordered]


def recession_and_asymptotic(p: Polyhedron) -> Tuple[Polyhedron, List[QVector]]:
    """
    Recession cone (the cone on the rays and lines of ``p``) and asymptotic space (its linear span)
    """

    if p.empty:
        raise EmptyPolyhedron('Recession cone of the empty polyhedron', related_op='recession_and_asymptotic')

    rec = cone_from_rays(p.dim, p.vrep.rays, p.vrep.lines)
    spanning = list(p.vrep.rays) + list(p.vrep.lines)
    asy = sorted(primitive_line(r) for r in rref(spanning, p.dim)[0]) if spanning else []
    return rec, asy


def minkowski_sum(a: Polyhedron, b: Polyhedron) -> Polyhedron:
    if a.dim != b.dim:
        raise DimensionMismatch(f'Cannot add polyhedra in dimensions {a.dim} and {b.dim}', related_op='minkowski_sum')

    if a.empty or b.empty:
        return empty_polyhedron(a.dim)

    points = tuple(add(x, y) for x in a.vrep.points for y in b.vrep.points)
    return dual_description(VRep(a.dim, points, a.vrep.rays + b.vrep.rays, a.vrep.lines + b.vrep.lines))


def hilbert_basis(c: Polyhedron, lattice: Lattice = None) -> List[QVector]:
    """
    Minimal generating set of the semigroup ``c ∩ L`` of a pointed rational polyhedral cone.

    Candidates are the lattice points of the bounding box of the zonotope spanned by the primitive ray generators; a
    candidate is kept when no other candidate can be subtracted from it inside the cone.
    """

    if not c.is_cone():
        raise DimensionMismatch('Hilbert bases are defined for cones only', related_op='hilbert_basis')

    if c.vrep.lines:
        raise NotPointed('Cone contains a line', related_op='hilbert_basis', extra_attrs={'line': c.vrep.lines[0]})

    lattice = lattice or Lattice.standard(c.dim)
    n = c.dim
    gens = [primitive(lattice.coordinates(r)) for r in c.vrep.rays]

    if not gens:
        return []

    # the cone in lattice coordinates: <a, B y> >= 0  <=>  <B^T a, y> >= 0
    bt = lattice.basis.transpose()
    normals = [bt @ con.normal for con in c.hrep.inequalities]
    eq_normals = [bt @ con.normal for con in c.hrep.equations]

    def in_cone(y: QVector) -> bool:
        return all(dot(a, y) >= 0 for a in normals) and all(dot(a, y) == 0 for a in eq_normals)

    ranges = []
    for j in range(n):
        low = sum((min(Fraction(0), g[j]) for g in gens), Fraction(0))
        high = sum((max(Fraction(0), g[j]) for g in gens), Fraction(0))
        ranges.append(range(int(low), int(high) + 1))

    candidates = [tuple(Fraction(v) for v in y) for y in itertools.product(*ranges)]
    candidates = [y for y in candidates if not is_zero(y) and in_cone(y)]
    logger.debug(f'Hilbert basis: {len(candidates)} candidates in zonotope box')

    irreducible = [x for x in candidates if not any(y != x and in_cone(sub(x, y)) for y in candidates)]
    return sorted(lattice.point(y) for y in irreducible)


def nonnegative_on(p: Polyhedron, form: AffineForm) -> bool:
    if p.empty:
        return True
    return all(form(x) >= 0 for x in p.vrep.points) and all(dot(form.linear, r) >= 0 for r in p.vrep.rays) and \
        all(dot(form.linear, ln) == 0 for ln in p.vrep.lines)


@dataclass(frozen=True)
class Patch:
    region: Polyhedron
    minimizers: frozenset  #: indices into ``phi`` attaining the pointwise minimum on ``region``


@dataclass(frozen=True)
class Domination:
    phi0: Tuple[int, ...]        #: indices of the dominating forms
    patches: Tuple[Patch, ...]
    level_set: Polyhedron        #: ``{x in p : phi(x) >= 1 for all phi}``


def dominating_subset(p: Polyhedron, phi: Sequence[AffineForm]) -> Domination:
    """
    Reduce a finite family of affine forms, nonnegative on ``p``, to the forms that matter for the pointwise minimum.

    ``phi0`` keeps one representative (lowest index) of every minimal class of the domination preorder ``φ ≥ ψ on p``.
    Patches are the full-dimensional regions ``{x in p : φ(x) <= ψ(x) for ψ in phi0}``, each labelled by the forms
    agreeing with the minimum on it.
    """

    if p.empty:
        raise EmptyPolyhedron('Domination over the empty polyhedron', related_op='dominating_subset')

    for i, form in enumerate(phi):
        if len(form.linear) != p.dim:
            raise DimensionMismatch(f'Affine form {i} has dimension {len(form.linear)}', related_op='dominating_subset')
        if not nonnegative_on(p, form):
            raise NegativeOnP(f'Affine form {i} is negative somewhere on the polyhedron', related_op='dominating_subset')

    def dominates(i: int, j: int) -> bool:
        """phi[i] >= phi[j] on p"""
        return nonnegative_on(p, phi[i] - phi[j])

    phi0 = []
    for i in range(len(phi)):
        strictly_above = any(dominates(i, j) and not dominates(j, i) for j in range(len(phi)) if j != i)
        duplicate = any(dominates(i, j) and dominates(j, i) for j in range(i))
        if not strictly_above and not duplicate:
            phi0.append(i)

    full_dim = p.affine_dim()
    patches = {}
    for i in phi0:
        region = p.intersect([(phi[j] - phi[i]).at_least(0) for j in phi0 if j != i])
        if region.empty or region.affine_dim() < full_dim:
            continue
        minimizers = frozenset(j for j in phi0 if nonnegative_on(region, phi[i] - phi[j]))
        patches.setdefault(minimizers, Patch(region, minimizers))

    level_set = p.intersect([phi[i].at_least(1) for i in phi0])
    logger.debug(f'Domination kept {len(phi0)} of {len(phi)} forms in {len(patches)} patches')

    return Domination(tuple(phi0), tuple(patches[k] for k in sorted(patches, key=sorted)), level_set)
