"""Exception types shared across the solver stack."""


class C4SolverError(Exception):
    """Base class for all errors raised by this package."""


class AllocationError(C4SolverError):
    """The node arena could not be allocated at init time."""


class PoolExhausted(C4SolverError):
    """No free node slot is available and garbage collection reclaimed nothing.

    Recoverable: callers may deref retired roots and retry.
    """


class DoubleFree(C4SolverError):
    """deref was called on a node whose external refcount is already zero."""


class DependsOutsideVarSet(C4SolverError):
    """satcount was asked to count over a set missing a tested variable."""


class IllegalPosition(C4SolverError):
    """A board position violates geometry or disc-count constraints."""


class IllegalMove(C4SolverError):
    """A move targets a full or out-of-range column."""


class CorruptFile(C4SolverError):
    """A serialized BDD or book file failed structural or checksum validation."""


class UnsupportedFormat(C4SolverError):
    """A serialized file carries an unknown magic or format version."""


class MissingLayer(C4SolverError):
    """A lookup needs a ply whose layer files are absent from the store."""
