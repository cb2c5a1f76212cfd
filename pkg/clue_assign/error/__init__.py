"""Error handling module for clue-assign.

This module provides exception classes and error handlers for the library,
the CLI harness and the HTTP surface.
"""

from .error_handlers import (
    RequestHandlers,
    exit_code_for,
    handle_cli_exception,
    handle_clue_assign_exception,
    handle_generic_exception,
    server_error_handler,
)
from .exceptions import (
    BadRequestError,
    ClueAssignError,
    ConfigError,
    EmptyInputError,
    InternalServerError,
    InvalidBoxError,
    InvalidSceneError,
    LengthMismatchError,
    MalformedDocumentError,
    ProbabilityRangeError,
    ReportWriteError,
    SceneGenerationError,
    ScoreLengthError,
    ShapeMismatchError,
    SingleScoreResultsError,
    UnknownAssignerError,
    UnknownCategoryError,
    UnknownImageError,
    UnprocessableEntity,
    ZeroNormError,
)

__all__ = [
    # Exception classes
    "ClueAssignError",
    "BadRequestError",
    "UnprocessableEntity",
    "InternalServerError",
    "InvalidBoxError",
    "InvalidSceneError",
    "ConfigError",
    "ShapeMismatchError",
    "LengthMismatchError",
    "EmptyInputError",
    "ProbabilityRangeError",
    "ZeroNormError",
    "UnknownAssignerError",
    "SceneGenerationError",
    "MalformedDocumentError",
    "UnknownCategoryError",
    "UnknownImageError",
    "ScoreLengthError",
    "SingleScoreResultsError",
    "ReportWriteError",
    # Error handlers
    "RequestHandlers",
    "server_error_handler",
    "handle_clue_assign_exception",
    "handle_generic_exception",
    "handle_cli_exception",
    "exit_code_for",
]
