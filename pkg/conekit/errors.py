from __future__ import annotations

from typing import Mapping, Any, Optional


class ConekitError(Exception):
    """
    Exception class for conekit-raised errors

    Every error raised by the library is an instance of this class (or one of the subclasses below). Each subclass carries
    a machine-readable ``code`` and the process ``exit_code`` the command line front end maps it to.

    This class also offers the :py:func:`conekit.errors.ConekitError.dump` method which can be used to build a verbose blurb
    about the error and available context
    """

    code: str = 'conekit_error'  #: Machine-readable error code
    exit_code: int = 1            #: Exit code used by the CLI

    message: str  #: Error Message

    base_exception: Optional[Exception]  #: Optional base :py:exc:`Exception` raised prior to this error
    related_op: Optional[str]            #: The library operation that raised this error (if available)
    extra_attrs: Mapping[str, Any] = {}  #: Mapping of optional contextual attributes related to this error

    def __init__(self, message: str, base_exception: Exception = None, related_op: str = None, extra_attrs: Mapping[str, Any] = None) -> None:
        """
        Build a new ``ConekitError`` exception with optionally provided contextual details

        :param message: the error message
        :param base_exception: an optional base exception related to this one
        :param related_op: if available, the operation that raised this error (otherwise this will be "N/A")
        :param extra_attrs: optional mapping of related values at the time of the exception being raised
        """

        super(ConekitError, self).__init__(message)

        self.message = message
        self.base_exception = base_exception
        self.related_op = related_op
        self.extra_attrs = extra_attrs or {}

    def __repr__(self) -> str:
        repr_out = f'<{type(self).__name__}(code="{self.code}", message="{self.message}"'

        if self.base_exception:
            repr_out = f'{repr_out}, base_exception="{self.base_exception}"'

        if self.extra_attrs:
            ext_attrs = '", "'.join([f'{attr} -> {val}' for attr, val in self.extra_attrs.items()])
            repr_out = f'{repr_out}, extra_attrs="{ext_attrs}"'

        return f'{repr_out})>'

    def __str__(self) -> str:
        str_out = f'{type(self).__name__} '

        if self.related_op:
            str_out = f'{str_out}in "{self.related_op}"'

        return f'{str_out}: {self.message}'

    def as_dict(self) -> Mapping[str, Any]:
        """
        Mapping used for the ``error`` block of a result document
        """

        return {'code': self.code, 'message': self.message, 'op': self.related_op or 'N/A',
                'context': {key: str(val) for key, val in sorted(self.extra_attrs.items())}}

    def dump(self) -> str:
        """
        Helper method for building a verbose textual representation of the error and any available context at the time
        of the exception being raised
        """

        dump_out = str(self) + '\n'

        if self.base_exception:
            dump_out += f'-> Base Error:\t"{self.base_exception}"\n'

        if self.extra_attrs:
            dump_out += 'Extra Context:\n'
            for ex_key, ex_val in self.extra_attrs.items():
                dump_out += f'= "{ex_key}"\t-> "{ex_val}"\n'

        return dump_out


# exact-core
class NonIntegralInput(ConekitError):
    code = 'non_integral_input'


class NotInvertible(ConekitError):
    code = 'not_invertible'


# polyhedral-engine
class DimensionMismatch(ConekitError):
    code = 'dimension_mismatch'


class EmptyPolyhedron(ConekitError):
    code = 'empty_polyhedron'


class NotPointed(ConekitError):
    code = 'not_pointed'


class NegativeOnP(ConekitError):
    code = 'negative_on_p'


class InconsistentPolyhedron(ConekitError):
    code = 'inconsistent_polyhedron'


# cone-model
class InvalidCone(ConekitError):
    code = 'invalid_cone'


class NotInClosure(ConekitError):
    code = 'not_in_closure'


class NotAFace(ConekitError):
    code = 'not_a_face'


class FullFace(ConekitError):
    code = 'full_face'


class UnsupportedCone(ConekitError):
    code = 'unsupported_cone'


# hull-and-decomp
class BudgetExceeded(ConekitError):
    """
    Raised when an enumeration budget runs out before a result could be certified.

    The best result computed so far is attached as ``partial`` and is always flagged as uncertified.
    """

    code = 'budget_exceeded'
    exit_code = 2

    partial: Any = None

    def __init__(self, message: str, partial: Any = None, **kwargs) -> None:
        super(BudgetExceeded, self).__init__(message, **kwargs)
        self.partial = partial


class DegenerateCone(ConekitError):
    code = 'degenerate_cone'


class WindowNotInRationalHull(ConekitError):
    code = 'window_not_in_rational_hull'


class ZeroGenerator(ConekitError):
    code = 'zero_generator'


class NotInvariant(ConekitError):
    code = 'not_invariant'


class HyperplaneMissesCone(ConekitError):
    code = 'hyperplane_misses_cone'


class NotAChamber(ConekitError):
    code = 'not_a_chamber'


class UnboundedWindow(ConekitError):
    code = 'unbounded_window'


# group-engine
class NotLatticePreserving(ConekitError):
    code = 'not_lattice_preserving'


class NotConePreserving(ConekitError):
    code = 'not_cone_preserving'


class FunctionalNotInOpenDual(ConekitError):
    code = 'functional_not_in_open_dual'


class NotFoundWithinBound(ConekitError):
    code = 'not_found_within_bound'


# domain-builder
class NotCertified(ConekitError):
    code = 'not_certified'


class PatchNotFaceClosed(ConekitError):
    code = 'patch_not_face_closed'


# face-stabilizer
class NotStabilizing(ConekitError):
    code = 'not_stabilizing'


class InconsistentKernelElement(ConekitError):
    code = 'inconsistent_kernel_element'


class NotUnipotentKernel(ConekitError):
    code = 'not_unipotent_kernel'


class ViolationFound(ConekitError):
    code = 'violation_found'


class DimensionOutOfRange(ConekitError):
    code = 'dimension_out_of_range'


class NotProper(ConekitError):
    code = 'not_proper'


# cli
class InstanceError(ConekitError):
    code = 'instance_error'


class StoreError(ConekitError):
    code = 'store_error'
