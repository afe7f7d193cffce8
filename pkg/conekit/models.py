"""
Instance and result documents.

Instances are JSON objects; every number is an integer or a ``"p/q"`` string, and floating point literals are refused
while decoding. Result documents are written with sorted keys and a fixed layout so that equal results give equal bytes.
"""

from __future__ import annotations

import enum
import json
import logging

from dataclasses import dataclass, field, fields, is_dataclass
from fractions import Fraction
from pathlib import Path
from typing import Any, List, Mapping, Optional, Sequence, Tuple, Union

from conekit.cones import (
    ConeSpec, FaceDescriptor, FaceTag, PolyhedralCone, PositiveCone, QuadraticCone, canonical_subspace, smallest_face
)
from conekit.errors import ConekitError, InstanceError
from conekit.exact import Lattice, QMatrix, QVector, as_rational, format_rational
from conekit.groups import GroupGens, validate_group
from conekit.polyhedra import Polyhedron, VRep, cone_from_rays, dual_description, polyhedron_from_constraints
from conekit.stabilizers import relative_interior_point

logger = logging.getLogger(__name__)

INSTANCE_VERSION = 'conekit-instance/1'
RESULT_VERSION = 'conekit-result/1'


def _reject_float(text: str):
    raise InstanceError(f'Floating point literal "{text}" is not allowed, write it as "p/q"', related_op='load_json')


def load_json(text: str, source: str = '<string>') -> Any:
    """Decode JSON text, refusing floating point literals"""

    try:
        return json.loads(text, parse_float=_reject_float, parse_constant=_reject_float)
    except ConekitError:
        raise
    except json.JSONDecodeError as ex:
        err_message = f'Invalid JSON in {source}: {ex}'
        logger.exception(err_message)
        raise InstanceError(err_message, base_exception=ex, related_op='load_json')


def canonical_json(value: Any) -> str:
    return json.dumps(value, sort_keys=True, separators=(',', ':'), ensure_ascii=False)


def parse_rational(value: Any, where: str) -> Fraction:
    try:
        return as_rational(value)
    except (TypeError, ValueError, ZeroDivisionError) as ex:
        raise InstanceError(f'Bad rational {value!r} in {where}', base_exception=ex, related_op='parse_rational')


def parse_vector(value: Any, where: str, dim: int = None) -> QVector:
    if not isinstance(value, list):
        raise InstanceError(f'Expected a list of rationals in {where}', related_op='parse_vector')

    vec = tuple(parse_rational(a, where) for a in value)
    if dim is not None and len(vec) != dim:
        raise InstanceError(f'Expected {dim} entries in {where}, got {len(vec)}', related_op='parse_vector')
    return vec


def parse_vectors(value: Any, where: str, dim: int = None) -> List[QVector]:
    if not isinstance(value, list):
        raise InstanceError(f'Expected a list of vectors in {where}', related_op='parse_vectors')
    return [parse_vector(v, f'{where}[{i}]', dim) for i, v in enumerate(value)]


def parse_matrix(value: Any, where: str, dim: int = None) -> QMatrix:
    rows = parse_vectors(value, where, dim)
    if dim is not None and len(rows) != dim:
        raise InstanceError(f'Expected a {dim}x{dim} matrix in {where}', related_op='parse_matrix')
    try:
        return QMatrix.of(rows)
    except ConekitError as ex:
        raise InstanceError(f'Malformed matrix in {where}', base_exception=ex, related_op='parse_matrix')


def _fmt(v: Sequence[Fraction]) -> List[str]:
    return [format_rational(a) for a in v]


def cone_from_dict(d: Mapping[str, Any]) -> ConeSpec:
    kind = d.get('type') if isinstance(d, Mapping) else None

    if kind == 'polyhedral':
        rays = parse_vectors(d.get('rays'), 'cone.rays')
        if not rays:
            raise InstanceError('Polyhedral cone needs rays', related_op='cone_from_dict')
        return PolyhedralCone.from_rays(rays)

    if kind == 'quadratic':
        form = parse_matrix(d.get('form'), 'cone.form')
        return QuadraticCone(form, parse_vector(d.get('selector'), 'cone.selector', form.nrows))

    if kind == 'positive':
        w_dim = d.get('w_dim')
        if not isinstance(w_dim, int) or isinstance(w_dim, bool):
            raise InstanceError('Positive cone needs an integer "w_dim"', related_op='cone_from_dict')
        return PositiveCone(w_dim, bool(d.get('dual', False)))

    raise InstanceError(f'Unknown cone type {kind!r}', related_op='cone_from_dict')


def cone_to_dict(c: ConeSpec) -> dict:
    if isinstance(c, PolyhedralCone):
        return {'type': 'polyhedral', 'rays': [_fmt(r) for r in c.rays]}
    if isinstance(c, QuadraticCone):
        return {'type': 'quadratic', 'form': c.form.to_strings(), 'selector': _fmt(c.selector)}
    return {'type': 'positive', 'w_dim': c.w_dim, 'dual': c.dual}


def polyhedron_to_dict(p: Polyhedron) -> dict:
    if p.empty:
        return {'empty': True}
    return {'points': [_fmt(v) for v in p.vrep.points], 'rays': [_fmt(r) for r in p.vrep.rays], 'lines': [_fmt(ln) for ln in p.vrep.lines],
            'inequalities': [con.as_dict() for con in p.hrep.inequalities], 'equations': [con.as_dict() for con in p.hrep.equations]}


def window_from_value(value: Any, dim: int, where: str = 'window', bounded: bool = None) -> Polyhedron:
    """
    Read a window. Objects carry a ``box`` (one ``[lo, hi]`` pair per coordinate) or ``points``/``rays``/``lines``. A bare
    list is a box when ``bounded`` is set and the rays of a cone otherwise.
    """

    if isinstance(value, Mapping):
        if 'box' in value:
            return _box(value['box'], dim, where)
        vrep = VRep(dim, tuple(parse_vectors(value.get('points', []), f'{where}.points', dim)),
                    tuple(parse_vectors(value.get('rays', []), f'{where}.rays', dim)),
                    tuple(parse_vectors(value.get('lines', []), f'{where}.lines', dim)))
        if not vrep.points and vrep.rays:
            return cone_from_rays(dim, vrep.rays, vrep.lines)
        return dual_description(vrep)

    if bounded:
        return _box(value, dim, where)

    rays = parse_vectors(value, where, dim)
    if not rays:
        raise InstanceError(f'Empty window in {where}', related_op='window_from_value')
    return cone_from_rays(dim, rays)


def _box(value: list, dim: int, where: str) -> Polyhedron:
    bounds = parse_vectors(value, where, 2)
    if len(bounds) != dim:
        raise InstanceError(f'Box in {where} needs {dim} intervals', related_op='window_from_value')
    ineqs = []
    for i, (lo, hi) in enumerate(bounds):
        if lo > hi:
            raise InstanceError(f'Empty interval for coordinate {i} in {where}', related_op='window_from_value')
        unit = tuple(Fraction(int(j == i)) for j in range(dim))
        ineqs.append((unit, lo))
        ineqs.append((tuple(-a for a in unit), -hi))
    return polyhedron_from_constraints(dim, ineqs)


def face_from_value(value: Any, c: ConeSpec) -> FaceDescriptor:
    """A face given by a point of its relative interior (``{"point": [...]}``) or, on positive cones, by ``{"support": [...]}``"""

    if isinstance(value, Mapping) and 'support' in value:
        if not isinstance(c, PositiveCone):
            raise InstanceError('Support faces only exist on positive cones', related_op='face_from_value')
        return FaceDescriptor(FaceTag.SUPPORT, support=canonical_subspace(parse_vectors(value['support'], 'face.support', c.w_dim), c.w_dim))

    point = value.get('point') if isinstance(value, Mapping) else value
    return smallest_face(c, parse_vector(point, 'face.point', c.dim))


def face_to_dict(c: ConeSpec, f: FaceDescriptor) -> dict:
    return {'point': _fmt(relative_interior_point(c, f))}


@dataclass(frozen=True)
class InstanceDocument:
    """
    A problem instance: a cone, a lattice, optional group generators and the optional inputs individual commands read.
    """

    cone: ConeSpec
    lattice: Lattice
    generators: Tuple[Tuple[str, QMatrix], ...] = ()
    window: Optional[Polyhedron] = None
    xi: Optional[QVector] = None
    face: Optional[FaceDescriptor] = None
    hyperplanes: Tuple[QVector, ...] = ()
    base_chamber: Optional[Polyhedron] = None
    points: Tuple[QVector, ...] = ()
    elements: Tuple[QMatrix, ...] = ()
    subspace: Tuple[QVector, ...] = ()
    name: str = field(default='', compare=False)

    @property
    def dim(self) -> int:
        return self.cone.dim

    def group(self) -> GroupGens:
        """The validated group (inverses appended)"""
        if not self.generators:
            raise InstanceError('Instance has no group generators', related_op='InstanceDocument.group')
        return validate_group(self.generators, self.cone, self.lattice)

    @classmethod
    def from_dict(cls, d: Mapping[str, Any], name: str = '') -> InstanceDocument:
        if not isinstance(d, Mapping):
            raise InstanceError('Instance must be a JSON object', related_op='InstanceDocument.from_dict')
        if d.get('version', INSTANCE_VERSION) != INSTANCE_VERSION:
            raise InstanceError(f'Unsupported instance version {d.get("version")!r}', related_op='InstanceDocument.from_dict')

        unknown = set(d) - {'version', 'name', 'cone', 'lattice', 'group', 'window', 'xi', 'face', 'hyperplanes', 'base_chamber',
                            'points', 'elements', 'subspace'}
        if unknown:
            raise InstanceError(f'Unknown instance sections: {", ".join(sorted(unknown))}', related_op='InstanceDocument.from_dict')

        if 'cone' not in d:
            raise InstanceError('Instance has no cone', related_op='InstanceDocument.from_dict')

        c = cone_from_dict(d['cone'])
        n = c.dim

        lattice = Lattice.standard(n)
        if d.get('lattice') is not None:
            basis = parse_vectors(d['lattice'].get('basis') if isinstance(d['lattice'], Mapping) else None, 'lattice.basis', n)
            try:
                lattice = Lattice(QMatrix.from_columns(basis))
            except ConekitError as ex:
                raise InstanceError('Lattice basis is not invertible', base_exception=ex, related_op='InstanceDocument.from_dict')

        generators = []
        for i, gen in enumerate((d.get('group') or {}).get('generators', [])):
            if not isinstance(gen, Mapping) or not isinstance(gen.get('label'), str):
                raise InstanceError(f'Generator {i} needs a "label" and a "matrix"', related_op='InstanceDocument.from_dict')
            generators.append((gen['label'], parse_matrix(gen.get('matrix'), f'group.generators[{i}]', n)))

        return cls(
            cone=c,
            lattice=lattice,
            generators=tuple(generators),
            window=window_from_value(d['window'], n) if d.get('window') is not None else None,
            xi=parse_vector(d['xi'], 'xi', n) if d.get('xi') is not None else None,
            face=face_from_value(d['face'], c) if d.get('face') is not None else None,
            hyperplanes=tuple(parse_vectors(d.get('hyperplanes', []), 'hyperplanes', n)),
            base_chamber=window_from_value(d['base_chamber'], n, 'base_chamber') if d.get('base_chamber') is not None else None,
            points=tuple(parse_vectors(d.get('points', []), 'points', n)),
            elements=tuple(parse_matrix(m, f'elements[{i}]', n) for i, m in enumerate(d.get('elements', []))),
            subspace=tuple(parse_vectors(d.get('subspace', []), 'subspace', n)),
            name=d.get('name', name) or name,
        )

    def as_dict(self) -> dict:
        out: dict = {'version': INSTANCE_VERSION, 'cone': cone_to_dict(self.cone),
                     'lattice': {'basis': [_fmt(col) for col in self.lattice.basis.columns]}}
        if self.name:
            out['name'] = self.name
        if self.generators:
            out['group'] = {'generators': [{'label': label, 'matrix': m.to_strings()} for label, m in self.generators]}
        if self.window is not None:
            out['window'] = _window_to_value(self.window)
        if self.xi is not None:
            out['xi'] = _fmt(self.xi)
        if self.face is not None:
            out['face'] = face_to_dict(self.cone, self.face)
        if self.hyperplanes:
            out['hyperplanes'] = [_fmt(h) for h in self.hyperplanes]
        if self.base_chamber is not None:
            out['base_chamber'] = _window_to_value(self.base_chamber)
        if self.points:
            out['points'] = [_fmt(p) for p in self.points]
        if self.elements:
            out['elements'] = [m.to_strings() for m in self.elements]
        if self.subspace:
            out['subspace'] = [_fmt(w) for w in self.subspace]
        return out

    @classmethod
    def loads(cls, text: str, name: str = '') -> InstanceDocument:
        return cls.from_dict(load_json(text, name or '<string>'), name)

    def dumps(self) -> str:
        return json.dumps(self.as_dict(), sort_keys=True, indent=2) + '\n'

    @classmethod
    def load(cls, path: Union[str, Path]) -> InstanceDocument:
        path = Path(path)
        try:
            text = path.read_text(encoding='utf-8')
        except OSError as ex:
            err_message = f'Unable to read instance "{path}": {ex}'
            logger.exception(err_message)
            raise InstanceError(err_message, base_exception=ex, related_op='InstanceDocument.load')
        return cls.loads(text, path.stem)


def _window_to_value(p: Polyhedron) -> dict:
    return {'points': [_fmt(v) for v in p.vrep.points], 'rays': [_fmt(r) for r in p.vrep.rays], 'lines': [_fmt(ln) for ln in p.vrep.lines]}


def encode(value: Any) -> Any:
    """Convert library results into JSON-ready values with rationals as ``"p/q"`` strings"""

    if hasattr(value, 'as_dict'):
        return value.as_dict()
    if value is None or isinstance(value, (bool, int, str)):
        return value
    if isinstance(value, Fraction):
        return format_rational(value)
    if isinstance(value, enum.Enum):
        return value.value
    if isinstance(value, QMatrix):
        return value.to_strings()
    if isinstance(value, Polyhedron):
        return polyhedron_to_dict(value)
    if isinstance(value, VRep):
        return {'points': [_fmt(v) for v in value.points], 'rays': [_fmt(r) for r in value.rays], 'lines': [_fmt(ln) for ln in value.lines]}
    if isinstance(value, (PolyhedralCone, QuadraticCone, PositiveCone)):
        return cone_to_dict(value)
    if isinstance(value, Lattice):
        return {'basis': [_fmt(col) for col in value.basis.columns]}
    if is_dataclass(value):
        return {f.name: encode(getattr(value, f.name)) for f in fields(value) if f.compare}
    if isinstance(value, Mapping):
        if all(isinstance(k, str) for k in value):
            return {k: encode(v) for k, v in value.items()}
        return sorted([encode(k), encode(v)] for k, v in value.items())
    if isinstance(value, (list, tuple)):
        return [encode(v) for v in value]

    raise TypeError(f'Cannot encode {type(value).__name__}')


@dataclass
class ResultDocument:
    """
    The output of one command: the echoed request, the payload, the certificate block and the outcome.

    ``status`` is ``ok``, ``partial`` (budget exhausted or uncertified, exit code 2) or ``error`` (exit code 1).
    """

    command: str
    request: Mapping[str, Any]
    result: Any = None
    certificate: Optional[Mapping[str, Any]] = None
    status: str = 'ok'
    error: Optional[Mapping[str, Any]] = None
    budget: Optional[int] = None
    timing: Optional[Mapping[str, str]] = None

    @property
    def exit_code(self) -> int:
        return {'ok': 0, 'partial': 2}.get(self.status, 1)

    def as_dict(self) -> dict:
        out = {'version': RESULT_VERSION, 'command': self.command, 'request': self.request, 'status': self.status}
        for attr in ('result', 'certificate', 'error', 'budget', 'timing'):
            if getattr(self, attr) is not None:
                out[attr] = getattr(self, attr)
        return out

    def dumps(self) -> str:
        return json.dumps(self.as_dict(), sort_keys=True, indent=2, ensure_ascii=False) + '\n'

    @classmethod
    def loads(cls, text: str) -> ResultDocument:
        d = load_json(text, '<result>')
        if not isinstance(d, Mapping) or d.get('version') != RESULT_VERSION:
            raise InstanceError('Not a result document', related_op='ResultDocument.loads')
        return cls(d['command'], d['request'], d.get('result'), d.get('certificate'), d.get('status', 'ok'), d.get('error'),
                   d.get('budget'), d.get('timing'))
