import logging
import os

from typing import TYPE_CHECKING

from conekit.errors import BudgetExceeded, ConekitError
from conekit.exact import Lattice, QMatrix
from conekit.cones import PolyhedralCone, PositiveCone, QuadraticCone
from conekit.groups import GroupGens, validate_group


root_logger = logging.getLogger(__name__)
log_ch = logging.StreamHandler()

__version__ = '0.1.0'
LOG_LEVEL = logging.getLevelName(os.environ.get('CONEKIT_LOG', 'WARNING').upper())


def setup_logger(log_level: int = logging.WARNING, squelch: bool = False):
    log_fmt = logging.Formatter("[%(asctime)s] %(levelname)s in %(module)s: %(message)s")
    log_ch.setFormatter(log_fmt)
    root_logger.setLevel(log_level)

    if not squelch and log_ch not in root_logger.handlers:
        root_logger.addHandler(log_ch)
        root_logger.debug('Logging started for conekit.')


# unknown level names come back as strings
setup_logger(log_level=LOG_LEVEL if isinstance(LOG_LEVEL, int) else logging.WARNING, squelch=TYPE_CHECKING)

__all__ = ['BudgetExceeded', 'ConekitError', 'GroupGens', 'Lattice', 'PolyhedralCone', 'PositiveCone', 'QMatrix', 'QuadraticCone',
           'setup_logger', 'validate_group']
