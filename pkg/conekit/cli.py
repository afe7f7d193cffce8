"""
Command line front end.

Every subcommand reads an instance document (``-i``), runs one library operation and prints a result document on
standard output. Exit codes: 0 on success, 1 on invalid input, 2 when a budget ran out or a result is only partial.
"""

from __future__ import annotations

import argparse
import itertools
import logging
import sys
import time

from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple

from conekit.cones import MembershipTier, Projection, dagger_face, dual_cone, face_generators, face_spaces, membership, project_cone
from conekit.domains import (
    FundamentalStatus, barycentric_spine, build_fundamental_cone, congruence_subgroup, extract_presentation, interior_overlaps
)
from conekit.errors import BudgetExceeded, ConekitError, FullFace, InstanceError, UnsupportedCone
from conekit.exact import format_rational
from conekit.groups import (
    DescentStatus, Exhaustiveness, GroupGens, WitnessStatus, descend_to_min, element_ball, format_word, image_cone, orbit_ball,
    polyhedral_type_witness, siegel_intersections
)
from conekit.helpers import ResultStore
from conekit.hulls import (
    KernelStatus, admissible_eval, admissible_function, arrangement_decomposition, cocore_truncate, kernel_from_orbits, sail_2d,
    sigma_decomposition, truncated_hull
)
from conekit.models import InstanceDocument, ResultDocument, encode, load_json, parse_vector, polyhedron_to_dict, window_from_value
from conekit.plotting import plot_cones_2d, plot_projective_slice, plot_sail
from conekit.polyhedra import Polyhedron
from conekit.stabilizers import invariant_subspace_classify, sigma_jk_maps, stabilizer_split, sym2_example, unipotent_filter, verify_stabilizer_theorem

logger = logging.getLogger(__name__)

DEFAULT_BUDGET = 8
DEFAULT_SEED = 0


class _ArgumentParser(argparse.ArgumentParser):
    """Usage errors are invalid input (exit code 1), not argparse's default 2"""

    def error(self, message: str):
        raise InstanceError(f'Usage error: {message}', related_op='cli')


@dataclass
class Outcome:
    result: Any
    certificate: Optional[Mapping[str, Any]] = None
    complete: bool = True


def _fmt(v) -> List[str]:
    return [format_rational(a) for a in v]


def _vector_arg(text: Optional[str], dim: int, where: str):
    if text is None:
        return None
    value = load_json(text, where) if text.strip().startswith('[') else [a.strip() for a in text.split(',')]
    return parse_vector(value, where, dim)


def _window(args, inst: InstanceDocument, bounded: bool = False, flag: str = 'window') -> Polyhedron:
    text = getattr(args, flag, None)
    if text is not None:
        return window_from_value(load_json(text, f'--{flag}'), inst.dim, f'--{flag}', bounded=bounded)
    if flag == 'window' and inst.window is not None:
        return inst.window
    raise InstanceError(f'"{args.command}" needs --{flag.replace("_", "-")} or a window in the instance', related_op=args.command)


def _xi(args, inst: InstanceDocument):
    xi = _vector_arg(args.xi, inst.dim, '--xi') if getattr(args, 'xi', None) else inst.xi
    if xi is None:
        raise InstanceError(f'"{args.command}" needs --xi or an "xi" section', related_op=args.command)
    return xi


def _point(args, inst: InstanceDocument):
    point = _vector_arg(getattr(args, 'point', None), inst.dim, '--point')
    if point is None:
        if not inst.points:
            raise InstanceError(f'"{args.command}" needs --point or a "points" section', related_op=args.command)
        point = inst.points[0]
    return point


def _group(inst: InstanceDocument) -> Optional[GroupGens]:
    return inst.group() if inst.generators else None


# Commands
def run_hull(args, inst: InstanceDocument) -> Outcome:
    th = truncated_hull(inst.cone, inst.lattice, _window(args, inst, bounded=True), args.budget, certify=args.certify, threads=args.threads)
    return render_hull(args, th)


def render_hull(args, th) -> Outcome:
    faces = [{'dim': f.dim, 'generators': encode(f.generators), 'clipped': polyhedron_to_dict(f.clipped)} for f in th.faces]
    result = {'vertices': [_fmt(v) for v in th.vertices], 'faces': faces, 'hull': polyhedron_to_dict(th.hull)}
    return Outcome(result, th.certificate.as_dict(), th.certificate.certified or not args.certify)


def run_sail(args, inst: InstanceDocument) -> Outcome:
    chain = list(itertools.islice(sail_2d(inst.cone, inst.lattice), args.budget + 1))
    complete = len(chain) <= args.budget
    return Outcome({'vertices': [_fmt(v) for v in chain[:args.budget]]}, {'complete': complete}, complete)


def run_decompose(args, inst: InstanceDocument) -> Outcome:
    patch = sigma_decomposition(inst.cone, inst.lattice, _window(args, inst), args.budget)
    return Outcome({'members': [m.as_dict() for m in patch.members]}, {'radius': patch.radius})


def run_cocore(args, inst: InstanceDocument) -> Outcome:
    return Outcome({'cocore': polyhedron_to_dict(cocore_truncate(inst.cone, inst.lattice, _window(args, inst), args.budget))})


def run_fk(args, inst: InstanceDocument) -> Outcome:
    gens = _group(inst)
    window = _window(args, inst)

    if inst.hyperplanes:
        if gens is None or inst.base_chamber is None:
            raise InstanceError('Arrangements need a group and a "base_chamber"', related_op='fk')
        arr = arrangement_decomposition(inst.cone, inst.lattice, gens, inst.hyperplanes, inst.base_chamber, window, args.budget)
        return Outcome(arr.as_dict(), {'identity_checks': arr.identity_checks, 'status': arr.status.value},
                       arr.status == Exhaustiveness.CERTIFIED_COMPLETE)

    if not inst.points:
        raise InstanceError('"fk" needs kernel generators in "points" (functionals on the cone) or hyperplanes', related_op='fk')

    kernel = kernel_from_orbits(dual_cone(inst.cone), gens.dual() if gens is not None else None, inst.points, args.budget)
    function = admissible_function(kernel, window, args.budget)
    result = {'function': function.as_dict()}
    statuses = [function.status]
    if args.point:
        value = admissible_eval(kernel, _vector_arg(args.point, inst.dim, '--point'), args.budget)
        result['value'] = format_rational(value.value)
        statuses.append(value.status)
    complete = all(s == KernelStatus.CERTIFIED_COMPLETE for s in statuses)
    return Outcome(result, {'status': [s.value for s in statuses]}, complete)


def run_orbit(args, inst: InstanceDocument) -> Outcome:
    ball = orbit_ball(inst.group(), _point(args, inst), args.budget)
    return Outcome(ball.as_dict(), {'closed': ball.closed})


def run_descend(args, inst: InstanceDocument) -> Outcome:
    d = descend_to_min(inst.group(), _point(args, inst), _xi(args, inst), args.budget)
    result = {'word': format_word(d.word), 'point': _fmt(d.point), 'value': format_rational(d.value), 'status': d.status.value}
    return Outcome(result, {'status': d.status.value}, d.status == DescentStatus.CERTIFIED_LOCAL)


def run_siegel(args, inst: InstanceDocument) -> Outcome:
    xi = _vector_arg(args.xi, inst.dim, '--xi') if args.xi else inst.xi
    report = siegel_intersections(inst.group(), _window(args, inst, flag='pi1'), _window(args, inst, flag='pi2'), args.budget, xi)
    result = {'intersections': [{'cone': polyhedron_to_dict(p), 'word': format_word(w)} for p, w in report.intersections],
              'count': len(report.intersections), 'radius': report.radius, 'status': report.status.value}
    return Outcome(result, {'status': report.status.value}, report.status == Exhaustiveness.CERTIFIED_COMPLETE)


def run_witness(args, inst: InstanceDocument) -> Outcome:
    w = polyhedral_type_witness(inst.cone, inst.lattice, inst.group(), _window(args, inst), args.budget)
    result = {'status': w.status.value, 'tiles': [format_word(t) for t in w.tiles],
              'pairings': [{'tile': format_word(t), 'facet': i, 'neighbour': format_word(n)} for t, i, n in w.pairings]}
    return Outcome(result, {'status': w.status.value}, w.status == WitnessStatus.WITNESS_FOUND)


def _fundamental(args, inst: InstanceDocument):
    gens = inst.group()
    return gens, build_fundamental_cone(inst.cone, inst.lattice, gens, _xi(args, inst), args.budget)


def run_fundomain(args, inst: InstanceDocument) -> Outcome:
    _, fd = _fundamental(args, inst)
    certificate = {'status': fd.status.value, 'radius': fd.radius,
                   'interior_overlaps': [format_word(w) for w in interior_overlaps(fd, fd.radius)]}
    return Outcome(fd.as_dict(), certificate, fd.status == FundamentalStatus.CERTIFIED)


def run_presentation(args, inst: InstanceDocument) -> Outcome:
    gens, fd = _fundamental(args, inst)
    if fd.status != FundamentalStatus.CERTIFIED:
        return Outcome({'fundamental_cone': fd.as_dict()}, {'status': fd.status.value}, False)

    presentation = extract_presentation(fd, gens)
    result = {'presentation': presentation.as_dict(), 'text': str(presentation)}
    if args.congruence:
        result['congruence'] = congruence_subgroup(gens, inst.lattice, args.congruence).as_dict()
    return Outcome(result, {'status': fd.status.value, 'complete': presentation.complete}, presentation.complete)


def run_spine(args, inst: InstanceDocument) -> Outcome:
    patch = sigma_decomposition(inst.cone, inst.lattice, _window(args, inst), args.budget)
    return Outcome(barycentric_spine(patch, inst.lattice, inst.cone).as_dict())


def run_stabilizer(args, inst: Optional[InstanceDocument]) -> Outcome:
    if args.sym2:
        n, k = (int(a) for a in args.sym2.split(','))
        ex = sym2_example(n, k)
        c, lattice, face, elements = ex.cone, ex.lattice, ex.face, list(ex.unipotents)
    else:
        if inst is None or inst.face is None or not inst.elements:
            raise InstanceError('"stabilizer" needs --sym2 or an instance with "face" and "elements"', related_op='stabilizer')
        c, lattice, face, elements = inst.cone, inst.lattice, inst.face, list(inst.elements)

    data = stabilizer_split(elements, c, face, lattice)
    actions = [sigma_jk_maps(u, data) for u in unipotent_filter(data)]
    report = verify_stabilizer_theorem(actions, data, samples=args.samples, seed=args.seed, threads=args.threads)
    return Outcome({'split': data.as_dict(), 'unipotent': [a.as_dict() for a in actions]}, report.as_dict())


def run_classify(args, inst: InstanceDocument) -> Outcome:
    if not inst.subspace:
        raise InstanceError('"classify" needs a "subspace" section', related_op='classify')
    return Outcome(invariant_subspace_classify(inst.subspace, inst.cone, _group(inst)).as_dict())


def run_check(args, inst: InstanceDocument) -> Outcome:
    result: Dict[str, Any] = {'dim': inst.dim}

    point = _vector_arg(args.point, inst.dim, '--point')
    if point is not None:
        result['membership'] = {tier.value: membership(inst.cone, point, tier) for tier in MembershipTier}

    if args.face:
        face = inst.face
        if face is None:
            raise InstanceError('"check --face" needs a "face" section', related_op='check')
        spaces = face_spaces(inst.cone, face, inst.lattice)
        projections = {'face': face.as_dict(), 'dagger': dagger_face(inst.cone, face).as_dict(),
                       'flag': {'V_F': spaces.k_f, 'V^F': spaces.k_upper_f, 'V': inst.dim},
                       'face_generators': [_fmt(g) for g in face_generators(inst.cone, face)]}
        for which in Projection:
            try:
                proj = project_cone(inst.cone, face, which, inst.lattice)
            except (FullFace, UnsupportedCone) as ex:
                projections[which.value] = {'error': ex.as_dict()}
                continue
            entry = {'coordinates': proj.coordinates.to_strings()}
            if proj.spec is not None:
                entry['image'] = encode(proj.spec)
            if proj.body is not None:
                entry['image_closure'] = polyhedron_to_dict(proj.body)
            if hasattr(inst.cone, 'rays'):
                entry['images_of_rays'] = [_fmt(proj.coordinates @ r) for r in inst.cone.rays]
            projections[which.value] = entry
        result['face_report'] = projections

    return Outcome(result)


def run_plot(args, inst: InstanceDocument) -> str:
    c = inst.cone
    if args.what == 'sail':
        chain = list(itertools.islice(sail_2d(c, inst.lattice), args.budget))
        return plot_sail(c, inst.lattice, chain, title=inst.name)

    if args.what == 'domain':
        gens, fd = _fundamental(args, inst)
        cones = [fd.sigma] + sorted({image_cone(g, fd.sigma) for g, _ in element_ball(gens, 2).ordered()} - {fd.sigma},
                                    key=lambda p: p.vrep.rays)
        labels = ['σ']
    else:
        cones = sigma_decomposition(c, inst.lattice, _window(args, inst), args.budget).cones
        cones = [p for p in cones if p.affine_dim() == c.dim]
        labels = []

    if c.dim == 2:
        return plot_cones_2d(cones, labels, title=inst.name)
    return plot_projective_slice(cones, dual_cone(c).interior_point(), labels, title=inst.name)


COMMANDS: Dict[str, Callable] = {
    'hull': run_hull,
    'sail': run_sail,
    'decompose': run_decompose,
    'cocore': run_cocore,
    'fk': run_fk,
    'orbit': run_orbit,
    'descend': run_descend,
    'siegel': run_siegel,
    'witness': run_witness,
    'fundomain': run_fundomain,
    'presentation': run_presentation,
    'spine': run_spine,
    'stabilizer': run_stabilizer,
    'classify': run_classify,
    'check': run_check,
}

# partial results carried by BudgetExceeded, rendered like a successful run
PARTIAL_RENDERERS: Dict[str, Callable] = {
    'hull': render_hull,
}

RUNTIME_FLAGS = ('threads', 'store', 'output', 'timing', 'instance')


def build_parser() -> argparse.ArgumentParser:
    common = _ArgumentParser(add_help=False)
    common.add_argument('-i', '--instance', help='instance document (JSON)')
    common.add_argument('--budget', type=int, default=DEFAULT_BUDGET, help='enumeration budget (radius, word length or count)')
    common.add_argument('--certify', dest='certify', action='store_true', default=True, help='certify results (default)')
    common.add_argument('--no-certify', dest='certify', action='store_false', help='skip certification')
    common.add_argument('--seed', type=int, default=DEFAULT_SEED, help='seed for sampled property checks')
    common.add_argument('--threads', type=int, default=1, help='worker threads; output does not depend on it')
    common.add_argument('--timing', action='store_true', help='add wall-clock timing to the result')
    common.add_argument('--store', help='Redis URI used to cache result documents')
    common.add_argument('-o', '--output', help='write the result here instead of standard output')

    parser = _ArgumentParser(prog='conekit', description='Lattices and discrete groups acting on convex cones')
    sub = parser.add_subparsers(dest='command', metavar='command')
    sub.required = True

    def add(name: str, help_text: str) -> argparse.ArgumentParser:
        return sub.add_parser(name, parents=[common], help=help_text)

    add('hull', 'faces of the lattice hull clipped to a bounded window').add_argument('--window', help='box [[lo,hi],...] or JSON window')
    add('sail', 'vertex chain of a planar sail')
    for name, help_text in (('decompose', 'cones of the lattice decomposition in a window cone'), ('cocore', 'cocore truncated to a window'),
                            ('spine', 'barycentric spine of the decomposition in a window'),
                            ('witness', 'search for a tiling witness of polyhedral type')):
        add(name, help_text).add_argument('--window', help='rays of a window cone (JSON)')

    fk = add('fk', 'admissible function of a kernel, or an arrangement decomposition')
    fk.add_argument('--window', help='rays of a window cone (JSON)')
    fk.add_argument('--point', help='evaluate the function here')

    add('orbit', 'orbit ball of a point').add_argument('--point')
    descend = add('descend', 'greedy descent of a functional along an orbit')
    descend.add_argument('--point')
    descend.add_argument('--xi')

    siegel = add('siegel', 'distinct intersections of translates of two window cones')
    siegel.add_argument('--pi1', required=True)
    siegel.add_argument('--pi2', required=True)
    siegel.add_argument('--xi')

    add('fundomain', 'fundamental cone with facet pairings').add_argument('--xi')
    presentation = add('presentation', 'presentation from a certified fundamental cone')
    presentation.add_argument('--xi')
    presentation.add_argument('--congruence', type=int, help='also list Schreier generators of the congruence subgroup mod m')

    stabilizer = add('stabilizer', 'face stabilizer split and unipotent maps')
    stabilizer.add_argument('--sym2', help='use the Sym^2 example "n,k" instead of an instance')
    stabilizer.add_argument('--samples', type=int, default=100)

    add('classify', 'classify an invariant subspace')
    check = add('check', 'membership tiers of a point and the projections of a face')
    check.add_argument('--point')
    check.add_argument('--face', action='store_true', help='report the face flag and both projections')

    plot = add('plot', 'SVG figure of a sail, a fundamental cone or a decomposition')
    plot.add_argument('--what', choices=('sail', 'domain', 'patch'), default='sail')
    plot.add_argument('--window')
    plot.add_argument('--xi')

    return parser


def _request(args, inst: Optional[InstanceDocument]) -> dict:
    flags = {key: value for key, value in sorted(vars(args).items()) if key not in RUNTIME_FLAGS and key != 'command' and value is not None}
    return {'command': args.command, 'instance': inst.as_dict() if inst is not None else None, 'flags': flags}


def _execute(args, inst: Optional[InstanceDocument]) -> ResultDocument:
    doc = ResultDocument(args.command, _request(args, inst), budget=args.budget)
    started = time.perf_counter()

    try:
        outcome = COMMANDS[args.command](args, inst)
        doc.result, doc.certificate = outcome.result, outcome.certificate
        doc.status = 'ok' if outcome.complete else 'partial'
    except BudgetExceeded as ex:
        logger.info(f'Budget exhausted in "{args.command}": {ex.message}')
        doc.status, doc.error = 'partial', ex.as_dict()
        renderer = PARTIAL_RENDERERS.get(args.command)
        if ex.partial is not None:
            if renderer is not None:
                outcome = renderer(args, ex.partial)
                doc.result, doc.certificate = outcome.result, outcome.certificate
            else:
                doc.result = encode(ex.partial)
    except ConekitError as ex:
        logger.debug(ex.dump())
        doc.status, doc.error = 'error', ex.as_dict()

    if args.timing:
        doc.timing = {'seconds': f'{time.perf_counter() - started:.3f}'}
    return doc


def _emit(text: str, output: Optional[str]) -> None:
    if output:
        Path(output).write_text(text, encoding='utf-8')
    else:
        sys.stdout.write(text)


def run_command(argv: Sequence[str]) -> Tuple[int, str]:
    """Run one command and return its exit code and the text it prints"""

    code, text, _ = _run(argv)
    return code, text


def _run(argv: Sequence[str]) -> Tuple[int, str, Optional[str]]:
    try:
        args = build_parser().parse_args(list(argv))
        inst = InstanceDocument.load(args.instance) if args.instance else None
        if inst is None and not (args.command == 'stabilizer' and args.sym2):
            raise InstanceError(f'"{args.command}" needs an instance (-i)', related_op=args.command)
    except ConekitError as ex:
        doc = ResultDocument(argv[0] if argv else '', {'argv': list(argv)}, status='error', error=ex.as_dict())
        return ex.exit_code, doc.dumps(), None

    if args.command == 'plot':
        try:
            return 0, run_plot(args, inst), args.output
        except ConekitError as ex:
            return ex.exit_code, ResultDocument('plot', _request(args, inst), status='error', error=ex.as_dict()).dumps(), args.output

    store = None
    request = _request(args, inst)
    if args.store:
        try:
            store = ResultStore.from_uri(args.store)
            cached = store.fetch(request)
        except ConekitError as ex:
            logger.warning(f'Result store unavailable, computing directly: {ex.message}')
            store, cached = None, None
        if cached is not None and not args.timing:
            logger.info('Serving result from the store')
            return ResultDocument.loads(cached).exit_code, cached, args.output

    doc = _execute(args, inst)
    text = doc.dumps()

    if store is not None and not args.timing and doc.status != 'error':
        try:
            store.store(request, text)
        except ConekitError as ex:
            logger.warning(f'Unable to cache result: {ex.message}')

    return doc.exit_code, text, args.output


def main(argv: Sequence[str] = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    code, text, output = _run(argv)
    _emit(text, output)
    return code


if __name__ == '__main__':
    sys.exit(main())
