"""
Watch the cone spanned by a growing orbit ball of a rational point.

Run against an instance with a group, e.g.::

    python orbit_cone_experiment.py dihedral.json 1,0 --radius 6

Each line reports the number of extremal rays and facets of the cone spanned by the orbit ball. A count that keeps
growing suggests the orbit cone is not finitely generated; one that settles is only evidence, not a proof.
"""

import argparse
import logging

from pprint import pformat

from conekit import setup_logger
from conekit.exact import format_rational
from conekit.groups import orbit_ball
from conekit.models import InstanceDocument, parse_vector
from conekit.polyhedra import cone_from_rays

logger = logging.getLogger('conekit.orbit_cone_experiment')


def orbit_cone_growth(inst: InstanceDocument, point, radius: int):
    gens = inst.group()
    rows = []
    for r in range(radius + 1):
        ball = orbit_ball(gens, point, r)
        cone = cone_from_rays(inst.dim, ball.points)
        rows.append({'radius': r, 'orbit_points': len(ball.points), 'rays': len(cone.vrep.rays),
                     'facets': len(cone.hrep.inequalities), 'closed': ball.closed})
        logger.debug(f'Radius {r}: {pformat(rows[-1])}')
        if ball.closed:
            break
    return rows, cone


def main():
    parser = argparse.ArgumentParser(description='Growth of the cone spanned by an orbit ball')
    parser.add_argument('instance')
    parser.add_argument('point', help='comma separated rational coordinates')
    parser.add_argument('--radius', type=int, default=6)
    parser.add_argument('--debug', action='store_true')
    args = parser.parse_args()

    setup_logger(logging.DEBUG if args.debug else logging.INFO)

    inst = InstanceDocument.load(args.instance)
    point = parse_vector(args.point.split(','), 'point', inst.dim)
    rows, cone = orbit_cone_growth(inst, point, args.radius)

    for row in rows:
        print('{radius:>3} {orbit_points:>6} {rays:>5} {facets:>6} {closed}'.format(**row))

    print(f'Last extremal rays:\n{pformat([[format_rational(a) for a in r] for r in cone.vrep.rays])}')


if __name__ == '__main__':
    main()
