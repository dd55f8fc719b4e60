"""Exception hierarchy.

Every error carries a short machine-readable ``code`` which the CLI prints as
``error: <code>: <detail>``.
"""

from __future__ import annotations


class RspError(Exception):
    code = "error"


# -- data layer ---------------------------------------------------------------

class StreamFormatError(RspError, ValueError):
    code = "stream_format"

    def __init__(self, message: str, line_no: int | None = None) -> None:
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


class MissingTab(StreamFormatError):
    code = "missing_tab"


class MalformedTimestamp(StreamFormatError):
    code = "malformed_timestamp"


class MalformedTriple(StreamFormatError):
    code = "malformed_triple"


class OutOfOrderItem(StreamFormatError):
    code = "out_of_order"


class InvalidTerm(RspError, ValueError):
    code = "invalid_term"


# -- query layer --------------------------------------------------------------

class QueryError(RspError, ValueError):
    code = "query_error"


class QuerySyntaxError(QueryError):
    code = "syntax_error"

    def __init__(self, position: int, expected: str, found: str = "") -> None:
        detail = f"at offset {position}: expected {expected}"
        if found:
            detail += f", found {found!r}"
        super().__init__(detail)
        self.position = position
        self.expected = expected
        self.found = found


class UnknownTimeUnit(QueryError):
    code = "unknown_time_unit"


class ZeroDuration(QueryError):
    code = "zero_duration"


class UnboundProjection(QueryError):
    code = "unbound_projection"


class NoStreamClause(QueryError):
    code = "no_stream_clause"


class DuplicateStream(QueryError):
    code = "duplicate_stream"


# -- engines and runtime ------------------------------------------------------

class EngineError(RspError):
    code = "engine_error"


class EngineNotLoaded(EngineError):
    code = "engine_not_loaded"


class OracleTooLarge(EngineError):
    code = "oracle_too_large"


class DuplicateRegistration(RspError):
    code = "duplicate_registration"


class MissingStaticGraph(RspError):
    code = "missing_static_graph"


class VariableMismatch(RspError, ValueError):
    code = "variable_mismatch"
