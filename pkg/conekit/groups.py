"""
Finitely generated matrix groups preserving a cone and a lattice.

Words are tuples of generator labels. A word ``(a, b, c)`` stands for the product ``a @ b @ c``, so it acts on a point
right to left. Canonical words are shortest first, then lexicographic in generator order.
"""

from __future__ import annotations

import enum
import itertools
import logging

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

from conekit.cones import ConeSpec, MembershipTier, PolyhedralCone, QuadraticCone, dual_cone, membership
from conekit.errors import (
    BudgetExceeded, DimensionMismatch, FunctionalNotInOpenDual, InstanceError, NotConePreserving, NotFoundWithinBound,
    NotInClosure, NotLatticePreserving, WindowNotInRationalHull
)
from conekit.exact import Lattice, QMatrix, QVector, as_rational, dot, format_rational, unit_vector
from conekit.polyhedra import Polyhedron, cone_from_rays, face_lattice

logger = logging.getLogger(__name__)

Word = Tuple[str, ...]
IDENTITY_WORD = 'e'
INVERSE_SUFFIX = '_inv'


class Exhaustiveness(enum.Enum):
    CERTIFIED_COMPLETE = 'CertifiedComplete'
    BUDGET_BOUNDED = 'BudgetBounded'


def format_word(word: Sequence[str]) -> str:
    return '.'.join(word) if word else IDENTITY_WORD


def parse_word(text: str) -> Word:
    text = text.strip()
    if text in ('', IDENTITY_WORD):
        return ()

    labels = tuple(text.split('.'))
    if not all(label.isidentifier() for label in labels):
        raise InstanceError(f'Malformed word "{text}"', related_op='parse_word')
    return labels


@dataclass(frozen=True)
class GroupGens:
    generators: Tuple[Tuple[str, QMatrix], ...]
    lattice: Lattice
    inverse_closed: bool = False
    cone: Optional[ConeSpec] = field(default=None, compare=False)

    @property
    def labels(self) -> List[str]:
        return [label for label, _ in self.generators]

    @property
    def dim(self) -> int:
        return self.lattice.dim

    def matrix(self, label: str) -> QMatrix:
        for lbl, m in self.generators:
            if lbl == label:
                return m
        raise InstanceError(f'Unknown generator "{label}"', related_op='GroupGens.matrix')

    def evaluate(self, word: Sequence[str]) -> QMatrix:
        result = QMatrix.identity(self.dim)
        for label in word:
            result = result @ self.matrix(label)
        return result

    def act(self, word: Sequence[str], x: Sequence[Fraction]) -> QVector:
        x = tuple(x)
        for label in reversed(word):
            x = self.matrix(label) @ x
        return x

    def inverse_label(self, label: str) -> str:
        inverse = self.matrix(label).inverse()
        for lbl, m in self.generators:
            if m == inverse:
                return lbl
        raise InstanceError(f'Generator "{label}" has no inverse among the generators', related_op='GroupGens.inverse_label')

    def inverse_word(self, word: Sequence[str]) -> Word:
        return tuple(self.inverse_label(label) for label in reversed(word))

    def dual(self) -> GroupGens:
        """The contragredient action ``ξ -> ξ ∘ γ^-1`` on functionals, as matrices ``γ^-T`` on the dual lattice"""

        gens = tuple((label, m.inverse().transpose()) for label, m in self.generators)
        return GroupGens(gens, self.lattice.dual(), self.inverse_closed, dual_cone(self.cone) if self.cone is not None else None)

    def as_dict(self) -> dict:
        return {'generators': [{'label': label, 'matrix': m.to_strings()} for label, m in self.generators]}


def _preserves_cone(c: ConeSpec, m: QMatrix) -> bool:
    if isinstance(c, PolyhedralCone):
        return all(membership(c, m @ r, MembershipTier.CLOSURE) for r in c.rays)

    if isinstance(c, QuadraticCone):
        return m.transpose() @ c.form @ m == c.form and c.bilinear(m @ c.selector, c.selector) > 0

    # necessary conditions: rank-one tensors on coordinate axes and their sums map into the closure, the identity inside
    samples = []
    for i, j in itertools.combinations_with_replacement(range(c.w_dim), 2):
        for sign in ((1,) if i == j else (1, -1)):
            v = unit_vector(c.w_dim, i) if i == j else tuple(Fraction(int(k == i) + sign * int(k == j)) for k in range(c.w_dim))
            samples.append(c.from_matrix(QMatrix.of([[a * b for b in v] for a in v])))
    return all(membership(c, m @ s, MembershipTier.CLOSURE) for s in samples) and \
        membership(c, m @ c.interior_point(), MembershipTier.INTERIOR)


def validate_group(generators: Union[GroupGens, Iterable[Tuple[str, Sequence]]], c: ConeSpec, lattice: Lattice = None) -> GroupGens:
    """
    Check that every generator preserves the lattice and the cone (both ``γ`` and ``γ^-1``) and append missing inverses
    with the label suffix ``_inv``.
    """

    lattice = lattice or Lattice.standard(c.dim)
    pairs = generators.generators if isinstance(generators, GroupGens) else tuple(generators)
    gens: List[Tuple[str, QMatrix]] = []

    for label, matrix in pairs:
        if not isinstance(label, str) or not label.isidentifier() or label == IDENTITY_WORD:
            raise InstanceError(f'Generator label "{label}" must be an identifier', related_op='validate_group')
        if label in (lbl for lbl, _ in gens):
            raise InstanceError(f'Duplicate generator label "{label}"', related_op='validate_group')

        m = matrix if isinstance(matrix, QMatrix) else QMatrix.of(matrix)
        if m.shape != (c.dim, c.dim):
            raise DimensionMismatch(f'Generator "{label}" has shape {m.shape}, expected {(c.dim, c.dim)}', related_op='validate_group')

        in_basis = lattice.inverse_basis @ m @ lattice.basis
        if not in_basis.is_integral() or abs(m.det()) != 1:
            raise NotLatticePreserving(f'Generator "{label}" does not preserve the lattice', related_op='validate_group',
                                       extra_attrs={'generator': label, 'matrix': m.to_strings()})

        for which, g in ((label, m), (f'{label}{INVERSE_SUFFIX}', m.inverse())):
            if not _preserves_cone(c, g):
                raise NotConePreserving(f'"{which}" does not preserve the cone', related_op='validate_group',
                                        extra_attrs={'generator': which, 'matrix': g.to_strings()})

        gens.append((label, m))

    for label, m in list(gens):
        inverse = m.inverse()
        if not any(g == inverse for _, g in gens):
            gens.append((f'{label}{INVERSE_SUFFIX}', inverse))
            logger.debug(f'Appended inverse of generator "{label}"')

    return GroupGens(tuple(gens), lattice, inverse_closed=True, cone=c)


def _breadth_first(gens: GroupGens, start, step, radius: int) -> Tuple[Dict, List[List], bool]:
    """
    Shared breadth-first closure: ``step(matrix, item)`` applies a generator. Returns the canonical-word map, the items by
    level and whether the ball closed (an empty frontier) before reaching ``radius``.
    """

    words = {start: ()}
    levels = [[start]]
    order = {label: i for i, label in enumerate(gens.labels)}

    for _ in range(radius):
        candidates: Dict = {}
        for item in levels[-1]:
            base = words[item]
            for label, m in gens.generators:
                image = step(m, item)
                if image in words:
                    continue
                word = (label,) + base
                key = [order[lbl] for lbl in word]
                if image not in candidates or key < candidates[image][0]:
                    candidates[image] = (key, word)

        if not candidates:
            return words, levels, True

        new_level = sorted(candidates, key=lambda it: candidates[it][0])
        for item in new_level:
            words[item] = candidates[item][1]
        levels.append(new_level)

    closed = all(step(m, item) in words for item in levels[-1] for _, m in gens.generators)
    return words, levels, closed


@dataclass(frozen=True)
class OrbitBall:
    base: QVector
    radius: int
    elements: Mapping[QVector, Word]
    closed: bool = False   #: the whole orbit was reached

    @property
    def points(self) -> List[QVector]:
        return sorted(self.elements)

    def as_dict(self) -> dict:
        return {'base': [format_rational(a) for a in self.base], 'radius': self.radius, 'closed': self.closed,
                'elements': [{'point': [format_rational(a) for a in p], 'word': format_word(w)} for p, w in sorted(self.elements.items())]}


def orbit_ball(gens: GroupGens, x: Sequence, radius: int) -> OrbitBall:
    """All points ``γx`` with word length at most ``radius``, each with its canonical word"""

    if radius < 0:
        raise InstanceError('Orbit radius must be nonnegative', related_op='orbit_ball')

    x = tuple(as_rational(a) for a in x)
    words, levels, closed = _breadth_first(gens, x, lambda m, p: m @ p, radius)
    logger.debug(f'Orbit ball of radius {radius}: {len(words)} points (closed={closed})')
    return OrbitBall(x, radius, words, closed)


@dataclass(frozen=True)
class ElementBall:
    radius: int
    elements: Mapping[QMatrix, Word]
    closed: bool = False   #: the group is finite and fully enumerated

    def ordered(self) -> List[Tuple[QMatrix, Word]]:
        return sorted(self.elements.items(), key=lambda kv: (len(kv[1]), kv[1]))


def element_ball(gens: GroupGens, radius: int) -> ElementBall:
    words, _, closed = _breadth_first(gens, QMatrix.identity(gens.dim), lambda m, g: m @ g, radius)
    return ElementBall(radius, words, closed)


class DescentStatus(enum.Enum):
    CERTIFIED_LOCAL = 'CertifiedLocal'
    STRICT_DESCENT_EXHAUSTED = 'StrictDescentExhausted'


@dataclass(frozen=True)
class Descent:
    word: Word
    point: QVector
    status: DescentStatus
    value: Fraction


def _require_open_dual(gens: GroupGens, xi: QVector, op: str) -> None:
    if gens.cone is not None and not membership(gens.cone, xi, MembershipTier.OPEN_DUAL):
        raise FunctionalNotInOpenDual('Functional is not in the open dual cone', related_op=op,
                                      extra_attrs={'xi': [format_rational(a) for a in xi]})


def descend_to_min(gens: GroupGens, x: Sequence, xi: Sequence, budget: int = 1000) -> Descent:
    """
    Greedy descent of ``ξ`` along the orbit of ``x``: at every step move by the generator with the largest strict
    decrease (ties by generator order) until no generator decreases ``ξ``.
    """

    x = tuple(as_rational(a) for a in x)
    xi = tuple(as_rational(a) for a in xi)
    _require_open_dual(gens, xi, 'descend_to_min')

    point, word, value = x, (), dot(xi, x)

    for _ in range(budget):
        moves = [(dot(xi, m @ point), i, label, m) for i, (label, m) in enumerate(gens.generators)]
        best_value, _, label, m = min(moves, key=lambda mv: (mv[0], mv[1]))
        if best_value >= value:
            return Descent(word, point, DescentStatus.CERTIFIED_LOCAL, value)
        point, word, value = m @ point, (label,) + word, best_value

    still_descending = any(dot(xi, m @ point) < value for _, m in gens.generators)
    status = DescentStatus.STRICT_DESCENT_EXHAUSTED if still_descending else DescentStatus.CERTIFIED_LOCAL
    return Descent(word, point, status, value)


def _dual_lattice_scan(lattice: Lattice, bound: int):
    """Dual lattice points ordered by sup-norm of their coordinates, then lexicographically"""

    n = lattice.dim
    dual = lattice.dual()
    for norm in range(1, bound + 1):
        for z in itertools.product(range(-norm, norm + 1), repeat=n):
            if max(abs(v) for v in z) == norm:
                yield dual.point(tuple(Fraction(v) for v in z))


def strict_minimizer_functional(gens: GroupGens, y: Sequence, radius: int, bound: int) -> QVector:
    """
    A functional ``ξ ∈ C° ∩ L*`` with ``ξ(y') > ξ(y)`` for every other point ``y'`` of the orbit ball of ``y``.
    """

    y = tuple(as_rational(a) for a in y)
    cone = gens.cone
    if cone is not None and not membership(cone, y, MembershipTier.INTERIOR):
        raise NotInClosure('Point must lie in the open cone', related_op='strict_minimizer_functional')

    others = [p for p in orbit_ball(gens, y, radius).points if p != y]

    for xi in _dual_lattice_scan(gens.lattice, bound):
        if cone is not None and not membership(cone, xi, MembershipTier.OPEN_DUAL):
            continue
        base = dot(xi, y)
        if all(dot(xi, p) > base for p in others):
            return xi

    raise NotFoundWithinBound(f'No strict minimizer with coordinates bounded by {bound}', related_op='strict_minimizer_functional',
                              extra_attrs={'y': [format_rational(a) for a in y], 'radius': radius})


def image_cone(m: QMatrix, cone: Polyhedron) -> Polyhedron:
    return cone_from_rays(cone.dim, [m @ r for r in cone.vrep.rays])


def check_window(c: Optional[ConeSpec], window: Polyhedron, op: str) -> None:
    if not window.is_cone():
        raise WindowNotInRationalHull('Window must be a polyhedral cone', related_op=op)
    if c is not None and not all(membership(c, r, MembershipTier.RATIONAL_HULL) for r in window.vrep.rays):
        raise WindowNotInRationalHull('Window is not contained in the rational hull of the cone', related_op=op)


@dataclass(frozen=True)
class SiegelReport:
    intersections: Tuple[Tuple[Polyhedron, Word], ...]
    status: Exhaustiveness
    radius: int


def siegel_intersections(gens: GroupGens, pi1: Polyhedron, pi2: Polyhedron, budget: int, xi: Sequence = None) -> SiegelReport:
    """
    The distinct cones ``γΠ1 ∩ Π2`` over the group. Complete when the group is finite, or when a certified fundamental
    cone tiles both windows with finitely many copies (every relevant ``γ`` then lies in a finite candidate set).
    """

    check_window(gens.cone, pi1, 'siegel_intersections')
    check_window(gens.cone, pi2, 'siegel_intersections')

    found: Dict[Polyhedron, Word] = {}

    def record(g: QMatrix, word: Word) -> None:
        meet = image_cone(g, pi1).intersect(pi2)
        if meet not in found:
            found[meet] = word

    ball = element_ball(gens, budget)
    for g, word in ball.ordered():
        record(g, word)

    status = Exhaustiveness.CERTIFIED_COMPLETE if ball.closed else Exhaustiveness.BUDGET_BOUNDED

    if not ball.closed and gens.cone is not None:
        from conekit.domains import FundamentalStatus, build_fundamental_cone, covering_tiles

        try:
            xi = tuple(as_rational(a) for a in xi) if xi is not None else dual_cone(gens.cone).interior_point()
            fd = build_fundamental_cone(gens.cone, gens.lattice, gens, xi, budget)
            if fd.status == FundamentalStatus.CERTIFIED:
                tiles1, tiles2 = covering_tiles(fd, gens, pi1, budget), covering_tiles(fd, gens, pi2, budget)
                if tiles1.closed and tiles2.closed:
                    for (g2, w2), (h, wh), (g1, w1) in itertools.product(tiles2.tiles, fd.stabilizer, tiles1.tiles):
                        record(g2 @ h @ g1.inverse(), w2 + wh + gens.inverse_word(w1))
                    status = Exhaustiveness.CERTIFIED_COMPLETE
        except BudgetExceeded:
            logger.debug('Fundamental cone not certified within budget, Siegel report stays budget bounded')

    ordered = sorted(found.items(), key=lambda kv: (len(kv[1]), kv[1]))
    return SiegelReport(tuple(ordered), status, budget)


class WitnessStatus(enum.Enum):
    WITNESS_FOUND = 'WitnessFound'
    INCONCLUSIVE = 'Inconclusive'


@dataclass(frozen=True)
class PolyhedralTypeWitness:
    status: WitnessStatus
    tiles: Tuple[Word, ...] = ()
    pairings: Tuple[Tuple[Word, int, Word], ...] = ()   #: (tile, facet index, neighbouring tile)


def on_cone_boundary(c: ConeSpec, points: Sequence[QVector]) -> bool:
    """Whether the cone spanned by ``points`` lies in the boundary of the closed cone"""
    total = tuple(sum(col, Fraction(0)) for col in zip(*points))
    return not membership(c, total, MembershipTier.INTERIOR)


def polyhedral_type_witness(c: ConeSpec, lattice: Lattice, gens: GroupGens, pi: Polyhedron, budget: int) -> PolyhedralTypeWitness:
    """
    Semi-decide ``Γ·Π = C+``: search a finite set of translates ``γΠ`` such that every facet meeting the open cone is
    covered from its other side by another translate. Such a set covers the closed cone, so a witness is conclusive; a
    failure at the given budget is not.
    """

    check_window(c, pi, 'polyhedral_type_witness')
    if pi.affine_dim() != c.dim:
        return PolyhedralTypeWitness(WitnessStatus.INCONCLUSIVE)

    tiles: Dict[Polyhedron, Word] = {}
    for g, word in element_ball(gens, budget).ordered():
        tiles.setdefault(image_cone(g, pi), word)

    pairings = []
    for tile, word in tiles.items():
        for node in face_lattice(tile):
            if node.dim != c.dim - 1 or len(node.active) != 1:
                continue
            facet_rays = node.generators.rays
            if on_cone_boundary(c, facet_rays):
                continue
            normal = tile.hrep.inequalities[next(iter(node.active))].normal
            neighbour = next((w for t, w in tiles.items() if t != tile and all(dot(normal, r) <= 0 for r in t.vrep.rays)
                              and all(t.contains(r) for r in facet_rays)), None)
            if neighbour is None:
                logger.debug(f'Facet {sorted(node.active)} of tile {format_word(word)} is not covered')
                return PolyhedralTypeWitness(WitnessStatus.INCONCLUSIVE)
            pairings.append((word, next(iter(node.active)), neighbour))

    return PolyhedralTypeWitness(WitnessStatus.WITNESS_FOUND, tuple(sorted(tiles.values(), key=lambda w: (len(w), w))), tuple(pairings))


@dataclass(frozen=True)
class StarClass:
    representative: int                      #: index into the decomposition members
    members: Tuple[Tuple[int, Word], ...]    #: (member, stabilizer word mapping the representative onto it)


@dataclass(frozen=True)
class InducedPair:
    sigma: Polyhedron
    stabilizer: Tuple[Word, ...]
    star: Tuple[StarClass, ...]
    status: Exhaustiveness


def induced_pair(sigma: Polyhedron, members: Sequence[Polyhedron], gens: GroupGens, budget: int) -> InducedPair:
    """
    Stabilizer elements of ``σ`` within the word ball and the members of its star (members containing ``σ``) up to the
    stabilizer action.
    """

    if sigma not in members:
        raise InstanceError('Cone is not a member of the decomposition', related_op='induced_pair')

    ball = element_ball(gens, budget)
    stabilizer = [(g, w) for g, w in ball.ordered() if image_cone(g, sigma) == sigma]

    star = [i for i, tau in enumerate(members) if all(tau.contains(r) for r in sigma.vrep.rays)]
    classes = []
    assigned = set()

    for i in star:
        if i in assigned:
            continue
        orbit = []
        for j in star:
            if j in assigned:
                continue
            word = next((w for g, w in stabilizer if image_cone(g, members[i]) == members[j]), None)
            if word is not None:
                orbit.append((j, word))
                assigned.add(j)
        classes.append(StarClass(i, tuple(orbit)))

    status = Exhaustiveness.CERTIFIED_COMPLETE if ball.closed else Exhaustiveness.BUDGET_BOUNDED
    logger.debug(f'Star of a {sigma.affine_dim()}-dimensional member: {len(star)} members in {len(classes)} classes')
    return InducedPair(sigma, tuple(w for _, w in stabilizer), tuple(classes), status)
