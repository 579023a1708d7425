"""Error vocabulary shared by every module.

Each error carries a stable machine ``code`` (the API serializes it verbatim
into error bodies) and an HTTP status used by the frontdoor. Service code
raises these; nothing else is allowed to cross the API boundary.
"""

from __future__ import annotations


class DatalakeError(Exception):
    """Base class; ``code`` is the wire-stable identifier."""

    code = "internal-error"
    http_status = 500

    def __init__(self, message: str = ""):
        super().__init__(message or self.code)
        self.message = message or self.code


class Unauthorized(DatalakeError):
    code = "unauthorized"
    http_status = 403


class UnknownWorkspace(DatalakeError):
    code = "unknown-workspace"
    http_status = 404


class UnknownItem(DatalakeError):
    code = "unknown-item"
    http_status = 404


class UnknownUser(DatalakeError):
    code = "unknown-user"
    http_status = 404


class NotFound(DatalakeError):
    code = "not-found"
    http_status = 404


class DuplicateSiblingName(DatalakeError):
    code = "duplicate-sibling-name"
    http_status = 409


class DuplicateNameInWorkspace(DatalakeError):
    code = "duplicate-name-in-workspace"
    http_status = 409


class InvalidGrantsForRole(DatalakeError):
    code = "invalid-grants-for-role"
    http_status = 400


class EmptyInput(DatalakeError):
    code = "empty-input"
    http_status = 400


class PayloadTooLarge(DatalakeError):
    code = "upload-too-large"
    http_status = 413


class Unparseable(DatalakeError):
    code = "unparseable"
    http_status = 400


class SchemaNotApproved(DatalakeError):
    code = "schema-not-approved"
    http_status = 409


class UnknownColumn(DatalakeError):
    code = "unknown-column"
    http_status = 400


class NameCollision(DatalakeError):
    code = "name-collision"
    http_status = 409


class TypeMismatch(DatalakeError):
    code = "type-mismatch"
    http_status = 400


class EmptySelection(DatalakeError):
    code = "empty-selection"
    http_status = 400


class IncompatibleKeyTypes(DatalakeError):
    code = "incompatible-key-types"
    http_status = 400


class EmptyInputs(DatalakeError):
    code = "empty-inputs"
    http_status = 400


class InvalidSpec(DatalakeError):
    code = "invalid-spec"
    http_status = 400


class DuplicateGeneration(DatalakeError):
    code = "duplicate-generation"
    http_status = 409


class MissingAncestor(DatalakeError):
    code = "missing-ancestor"
    http_status = 500


class SchemaIncompatibleSubstitution(DatalakeError):
    code = "schema-incompatible-substitution"
    http_status = 400


class KindMismatch(DatalakeError):
    code = "kind-mismatch"
    http_status = 400


class UnknownSource(DatalakeError):
    code = "unknown-source"
    http_status = 404


class UpstreamUnavailable(DatalakeError):
    code = "upstream-unavailable"
    http_status = 502


class RateLimited(DatalakeError):
    code = "rate-limited"
    http_status = 429


class FetchShapeError(DatalakeError):
    code = "fetch-shape-error"
    http_status = 502


class CorruptJournal(DatalakeError):
    code = "corrupt-journal"
    http_status = 500

    def __init__(self, message: str, bad_seq: int | None = None):
        super().__init__(message)
        self.bad_seq = bad_seq
