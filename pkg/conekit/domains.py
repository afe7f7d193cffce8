"""
Fundamental cones, their facet pairings, presentations read off from them, barycentric spines and congruence
subgroups.
"""

from __future__ import annotations

import enum
import logging

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import networkx as nx

from sympy.combinatorics.free_groups import free_group

from conekit.cones import ConeSpec, MembershipTier, PolyhedralCone, membership
from conekit.errors import BudgetExceeded, DimensionMismatch, FunctionalNotInOpenDual, InstanceError, NotCertified, PatchNotFaceClosed
from conekit.exact import Lattice, QMatrix, QVector, as_rational, format_rational, is_zero, primitive, sub, vsum
from conekit.groups import GroupGens, Word, element_ball, format_word, image_cone, on_cone_boundary
from conekit.hulls import DecompositionPatch
from conekit.polyhedra import Constraint, HRep, Polyhedron, cone_from_rays, dual_description, face_lattice

logger = logging.getLogger(__name__)

MAX_CYCLE_ORDER = 60  #: largest order searched for the transformation around a codimension-2 face


class FundamentalStatus(enum.Enum):
    CERTIFIED = 'Certified'
    PARTIAL = 'Partial'


@dataclass(frozen=True)
class FacetPairing:
    facet: int   #: index into ``sigma.hrep.inequalities``
    word: Word   #: element mapping the facet onto ``image``
    image: int

    def as_dict(self) -> dict:
        return {'facet': self.facet, 'word': format_word(self.word), 'image': self.image}


@dataclass(frozen=True)
class FundamentalCone:
    xi: QVector
    sigma: Polyhedron
    facet_pairings: Tuple[FacetPairing, ...]
    status: FundamentalStatus
    stabilizer: Tuple[Tuple[QMatrix, Word], ...]   #: ``Γ_ξ`` within the explored ball, identity first
    radius: int
    boundary_facets: Tuple[int, ...] = ()
    gens: Optional[GroupGens] = field(default=None, compare=False)

    def facet(self, i: int) -> Polyhedron:
        con = self.sigma.hrep.inequalities[i]
        return dual_description(HRep(self.sigma.dim, self.sigma.hrep.inequalities, self.sigma.hrep.equations + (Constraint(con.normal, 0),)))

    def pairing(self, i: int) -> Optional[FacetPairing]:
        return next((p for p in self.facet_pairings if p.facet == i), None)

    def as_dict(self) -> dict:
        return {
            'xi': [format_rational(a) for a in self.xi],
            'status': self.status.value,
            'radius': self.radius,
            'rays': [[format_rational(a) for a in r] for r in self.sigma.vrep.rays],
            'facets': [[format_rational(a) for a in con.normal] for con in self.sigma.hrep.inequalities],
            'boundary_facets': list(self.boundary_facets),
            'pairings': [p.as_dict() for p in self.facet_pairings],
            'stabilizer': [format_word(w) for _, w in self.stabilizer],
        }


def _overlapping(sigma: Polyhedron, xi: QVector, ball: Sequence[Tuple[QMatrix, Word]]) -> List[Word]:
    n = sigma.dim
    out = []
    for g, word in ball:
        if g.transpose() @ xi == xi:
            continue
        if image_cone(g, sigma).intersect(sigma).affine_dim() == n:
            out.append(word)
    return out


def _fundamental_at(c: ConeSpec, gens: GroupGens, xi: QVector, radius: int) -> Tuple[FundamentalCone, bool]:
    n = c.dim
    ball = element_ball(gens, radius)
    ordered = ball.ordered()

    normals: Dict[QVector, List[Tuple[QMatrix, Word]]] = {}
    stabilizer = []
    for g, word in ordered:
        eta = sub(g.transpose() @ xi, xi)
        if is_zero(eta):
            stabilizer.append((g, word))
        else:
            normals.setdefault(primitive(eta), []).append((g, word))

    base = c.polyhedron.hrep.inequalities if isinstance(c, PolyhedralCone) else ()
    sigma = dual_description(HRep(n, base + tuple(Constraint(eta, 0) for eta in sorted(normals))))
    partial = FundamentalCone(xi, sigma, (), FundamentalStatus.PARTIAL, tuple(stabilizer), radius, gens=gens)

    if sigma.affine_dim() != n or not sigma.is_pointed() or not all(membership(c, r, MembershipTier.CLOSURE) for r in sigma.vrep.rays):
        logger.debug(f'Fundamental cone at radius {radius} is not yet inside the closed cone')
        return partial, ball.closed

    facets = [partial.facet(i) for i in range(len(sigma.hrep.inequalities))]
    pairings, boundary, unpaired = [], [], []

    for i, con in enumerate(sigma.hrep.inequalities):
        if on_cone_boundary(c, facets[i].vrep.rays):
            boundary.append(i)
            continue
        pairing = None
        for g, word in normals.get(con.normal, []):
            image = image_cone(g, facets[i])
            j = next((j for j, f in enumerate(facets) if f == image), None)
            if j is not None:
                pairing = FacetPairing(i, word, j)
                break
        if pairing is None:
            unpaired.append(i)
        else:
            pairings.append(pairing)

    overlaps = _overlapping(sigma, xi, ordered)
    certified = not unpaired and not overlaps
    logger.debug(f'Fundamental cone at radius {radius}: {len(pairings)} paired, {len(boundary)} boundary, '
                 f'{len(unpaired)} unpaired facets, {len(overlaps)} overlaps')

    status = FundamentalStatus.CERTIFIED if certified else FundamentalStatus.PARTIAL
    return FundamentalCone(xi, sigma, tuple(pairings), status, tuple(stabilizer), radius, tuple(boundary), gens), ball.closed


def build_fundamental_cone(c: ConeSpec, lattice: Optional[Lattice], gens: GroupGens, xi: Sequence, budget: int = 8) -> FundamentalCone:
    """
    ``σ(ξ) = {x ∈ C+ : ξ(γx) >= ξ(x)}`` over a growing element ball.

    The cone is certified when it lies in the closed cone, every facet not on the boundary is mapped onto a facet of
    ``σ`` by an element whose constraint cut it out, and no explored element moving ``ξ`` maps ``σ`` onto an overlapping
    copy. The ball radius doubles until that holds or exceeds ``budget``; the result is then ``Partial``.
    """

    lattice = lattice or gens.lattice
    xi = tuple(as_rational(a) for a in xi)
    if len(xi) != c.dim or lattice.dim != c.dim:
        raise DimensionMismatch('Functional, lattice and cone dimensions differ', related_op='build_fundamental_cone')
    if not membership(c, xi, MembershipTier.OPEN_DUAL):
        raise FunctionalNotInOpenDual('Functional is not in the open dual cone', related_op='build_fundamental_cone',
                                      extra_attrs={'xi': [format_rational(a) for a in xi]})

    radius = 1
    while True:
        fd, closed = _fundamental_at(c, gens, xi, radius)
        if fd.status == FundamentalStatus.CERTIFIED or closed or radius * 2 > budget:
            if len(fd.stabilizer) > 1:
                logger.info(f'ξ has a stabilizer of order {len(fd.stabilizer)}; σ is a fundamental domain modulo Γ_ξ')
            return fd
        radius *= 2


def interior_overlaps(fd: FundamentalCone, radius: int) -> List[Word]:
    """Explored elements ``γ`` not fixing ``ξ`` with ``γσ ∩ σ°`` nonempty (empty for a fundamental cone)"""

    if fd.gens is None:
        raise InstanceError('Fundamental cone carries no group', related_op='interior_overlaps')
    return _overlapping(fd.sigma, fd.xi, element_ball(fd.gens, radius).ordered())


@dataclass(frozen=True)
class TileCover:
    tiles: Tuple[Tuple[QMatrix, Word], ...]   #: one element per distinct tile ``γσ`` meeting the window
    closed: bool                              #: every neighbour across a facet meeting the window is listed


def covering_tiles(fd: FundamentalCone, gens: GroupGens, window: Polyhedron, budget: int) -> TileCover:
    if fd.status != FundamentalStatus.CERTIFIED:
        raise NotCertified('Tiles need a certified fundamental cone', related_op='covering_tiles')

    tiles: Dict[Polyhedron, Tuple[QMatrix, Word]] = {}
    for g, word in element_ball(gens, budget).ordered():
        tile = image_cone(g, fd.sigma)
        if tile not in tiles and tile.intersect(window).affine_dim() >= 1:
            tiles[tile] = (g, word)

    facets = {p.facet: fd.facet(p.facet) for p in fd.facet_pairings}
    closed = True
    for g, _ in tiles.values():
        for p in fd.facet_pairings:
            if image_cone(g, facets[p.facet]).intersect(window).affine_dim() < 1:
                continue
            neighbour = image_cone(g @ gens.evaluate(p.word).inverse(), fd.sigma)
            if neighbour not in tiles:
                closed = False
                break
        if not closed:
            break

    logger.debug(f'{len(tiles)} tiles meet the window (closed={closed})')
    return TileCover(tuple(tiles.values()), closed)


@dataclass(frozen=True)
class Presentation:
    generators: Tuple[str, ...]
    relators: Tuple[Word, ...]
    complete: bool = True   #: every codimension-2 cycle closed within the order bound

    def __str__(self) -> str:
        return f'<{", ".join(self.generators)} | {", ".join(format_word(r) for r in self.relators)}>'

    def as_dict(self) -> dict:
        return {'generators': list(self.generators), 'relators': [format_word(r) for r in self.relators], 'complete': self.complete}


class _FreeWords:
    """Free-group bookkeeping over one letter per pair of mutually inverse generators"""

    def __init__(self, gens: GroupGens) -> None:
        self.gens = gens
        self.base = {label: min(label, gens.inverse_label(label)) for label in gens.labels}
        names = sorted(set(self.base.values()))
        self.group, *letters = free_group(','.join(names)) if names else (None,)
        self.letters = dict(zip(names, letters))

    def element(self, word: Sequence[str]):
        elem = self.group.identity
        for label in word:
            letter = self.letters[self.base[label]]
            elem = elem * (letter if self.base[label] == label else letter ** -1)
        return elem

    def word(self, elem) -> Word:
        out: List[str] = []
        for sym, exp in elem.array_form:
            label = str(sym) if exp > 0 else self.gens.inverse_label(str(sym))
            out.extend([label] * abs(exp))
        return tuple(out)

    def reduce(self, word: Sequence[str], cyclic: bool = False) -> Word:
        elem = self.element(word)
        return self.word(elem.cyclic_reduction() if cyclic else elem)


def _power_to_identity(gens: GroupGens, word: Word) -> Optional[Word]:
    g = gens.evaluate(word)
    power = g
    for k in range(1, MAX_CYCLE_ORDER + 1):
        if power.is_identity():
            return word * k
        power = power @ g
    return None


def extract_presentation(fd: FundamentalCone, gens: GroupGens) -> Presentation:
    """
    Generators are the facet-pairing elements. Relators come from self-paired facets (the pairing element squared) and
    from the cycles of codimension-2 faces meeting the open cone: walking around such a face through the pairings
    returns to it with a transformation of finite order ``m``, and the cycle word to the ``m`` gives a relator.
    """

    if fd.status != FundamentalStatus.CERTIFIED:
        raise NotCertified('Presentations need a certified fundamental cone', related_op='extract_presentation')

    if not fd.facet_pairings:
        return Presentation((), ())

    free = _FreeWords(gens)
    n = fd.sigma.dim
    c = gens.cone
    pairing = {p.facet: p for p in fd.facet_pairings}
    facets = {i: fd.facet(i) for i in range(len(fd.sigma.hrep.inequalities))}

    relators, complete = [], True

    for p in fd.facet_pairings:
        if p.image == p.facet:
            rel = _power_to_identity(gens, p.word + p.word)
            if rel is None:
                complete = False
            else:
                relators.append(rel)

    edges = [node for node in face_lattice(fd.sigma) if node.dim == n - 2 and node.generators.rays]
    visited = set()
    for node in edges:
        edge = cone_from_rays(n, node.generators.rays)
        if c is not None and on_cone_boundary(c, edge.vrep.rays):
            continue

        start = min(i for i, f in facets.items() if all(f.contains(r) for r in edge.vrep.rays))
        if (edge, start) in visited:
            continue

        current, facet, word = edge, start, ()
        for _ in range(2 * len(facets) * MAX_CYCLE_ORDER):
            visited.add((current, facet))
            if facet not in pairing:
                word = None
                break
            step = pairing[facet]
            current = image_cone(gens.evaluate(step.word), current)
            word = step.word + word
            facet = next(i for i, f in facets.items() if i != step.image and all(f.contains(r) for r in current.vrep.rays))
            if (current, facet) == (edge, start):
                break

        if word is None:
            continue
        rel = _power_to_identity(gens, word)
        if rel is None:
            complete = False
        else:
            relators.append(rel)

    reduced = []
    for rel in relators:
        rel = free.reduce(rel, cyclic=True)
        if rel and rel not in reduced:
            if not gens.evaluate(rel).is_identity():
                raise NotCertified(f'Relator {format_word(rel)} does not evaluate to the identity', related_op='extract_presentation')
            reduced.append(rel)

    generators = sorted({free.base[label] for p in fd.facet_pairings for label in p.word})
    logger.debug(f'Presentation with {len(generators)} generators and {len(reduced)} relators (complete={complete})')
    return Presentation(tuple(generators), tuple(sorted(reduced, key=lambda w: (len(w), w))), complete)


@dataclass(frozen=True)
class SpineCell:
    chain: Tuple[int, ...]           #: member indices, strictly decreasing
    rays: Tuple[QVector, ...]        #: barycentric rays of the chain members

    @property
    def dim(self) -> int:
        """Dimension in projective space"""
        return len(self.chain) - 1


@dataclass(frozen=True)
class SpineComplex:
    cells: Tuple[SpineCell, ...]
    incidence: Tuple[Tuple[int, int], ...]   #: (cell, facet cell)

    def as_dict(self) -> dict:
        return {'cells': [{'chain': list(cell.chain), 'rays': [[format_rational(a) for a in r] for r in cell.rays]} for cell in self.cells],
                'incidence': [list(pair) for pair in self.incidence]}


def barycentric_ray(cone: Polyhedron, lattice: Lattice) -> QVector:
    """Sum of the canonical lattice generators of the extremal rays"""
    return vsum((lattice.point(primitive(lattice.coordinates(r))) for r in cone.vrep.rays), cone.dim)


def barycentric_spine(patch: DecompositionPatch, lattice: Optional[Lattice], c: ConeSpec) -> SpineComplex:
    """
    Cells spanned by the barycentric rays of strictly decreasing chains of members, the deepest member meeting the open
    cone.
    """

    members = patch.cones
    n = patch.window.dim
    lattice = lattice or Lattice.standard(n)
    known = set(members)

    for sigma in members:
        for node in face_lattice(sigma):
            face = cone_from_rays(n, node.generators.rays)
            if face not in known:
                raise PatchNotFaceClosed('A face of a member is missing from the patch', related_op='barycentric_spine',
                                         extra_attrs={'rays': [[format_rational(a) for a in r] for r in face.vrep.rays]})

    barycentric = {i: barycentric_ray(sigma, lattice) for i, sigma in enumerate(members) if sigma.vrep.rays}
    rays = {i: r for i, r in barycentric.items() if membership(c, r, MembershipTier.INTERIOR)}
    inner = sorted(rays)

    graph = nx.DiGraph()
    graph.add_nodes_from(inner)
    graph.add_edges_from((i, j) for i in inner for j in inner
                         if i != j and members[i] != members[j] and all(members[i].contains(r) for r in members[j].vrep.rays))

    chains: List[Tuple[int, ...]] = []

    def extend(chain: Tuple[int, ...]) -> None:
        chains.append(chain)
        for j in sorted(graph.successors(chain[-1])):
            extend(chain + (j,))

    for i in inner:
        extend((i,))

    chains.sort(key=lambda ch: (len(ch), ch))
    index = {ch: k for k, ch in enumerate(chains)}
    cells = tuple(SpineCell(ch, tuple(rays[i] for i in ch)) for ch in chains)
    incidence = tuple((index[ch], index[ch[:k] + ch[k + 1:]]) for ch in chains if len(ch) > 1 for k in range(len(ch)))

    logger.debug(f'Spine with {len(cells)} cells from {len(inner)} members meeting the cone')
    return SpineComplex(cells, incidence)


@dataclass(frozen=True)
class CongruenceSubgroup:
    modulus: int
    index: int
    transversal: Tuple[Word, ...]
    schreier_generators: Tuple[Word, ...]

    def as_dict(self) -> dict:
        return {'modulus': self.modulus, 'index': self.index, 'transversal': [format_word(w) for w in self.transversal],
                'schreier_generators': [format_word(w) for w in self.schreier_generators]}


def _reduce_mod(g: QMatrix, lattice: Lattice, m: int) -> Tuple[Tuple[int, ...], ...]:
    local = lattice.inverse_basis @ g @ lattice.basis
    return tuple(tuple(int(a) % m for a in row) for row in local.rows)


def congruence_subgroup(gens: GroupGens, lattice: Optional[Lattice], m: int, budget: int = 10_000) -> CongruenceSubgroup:
    """
    The kernel of the action on ``L/mL``: cosets are enumerated as reductions mod ``m`` (breadth first, one generator
    per inverse pair), Schreier generators are read off the non-tree edges of the coset graph.
    """

    if m < 3:
        raise InstanceError('The modulus must be at least 3', related_op='congruence_subgroup', extra_attrs={'m': m})

    lattice = lattice or gens.lattice
    free = _FreeWords(gens) if gens.generators else None
    letters = sorted(set(free.base.values())) if free else []

    identity = _reduce_mod(QMatrix.identity(gens.dim), lattice, m)
    transversal: Dict = {identity: ()}
    queue = [identity]
    graph = nx.MultiDiGraph()
    graph.add_node(identity)
    tree = set()

    while queue:
        coset = queue.pop(0)
        g = gens.evaluate(transversal[coset])
        for label in letters:
            image = _reduce_mod(g @ gens.matrix(label), lattice, m)
            graph.add_edge(coset, image, key=label)
            if image not in transversal:
                transversal[image] = transversal[coset] + (label,)
                tree.add((coset, label))
                queue.append(image)
                if len(transversal) > budget:
                    raise BudgetExceeded('Coset enumeration did not close within the budget', related_op='congruence_subgroup',
                                         extra_attrs={'m': m, 'budget': budget})

    schreier = []
    for coset, image, label in sorted(graph.edges(keys=True), key=lambda e: (transversal[e[0]], e[2])):
        if (coset, label) in tree:
            continue
        word = free.reduce(transversal[coset] + (label,) + gens.inverse_word(transversal[image]))
        if word and word not in schreier:
            schreier.append(word)

    for word in schreier:
        if _reduce_mod(gens.evaluate(word), lattice, m) != identity:
            raise InstanceError('Schreier generator is not congruent to the identity', related_op='congruence_subgroup')

    ordered = sorted(transversal.values(), key=lambda w: (len(w), w))
    logger.debug(f'Congruence subgroup mod {m}: index {len(ordered)}, {len(schreier)} Schreier generators')
    return CongruenceSubgroup(m, len(ordered), tuple(ordered), tuple(schreier))
