"""Exception classes for clue-assign.

This module provides a hierarchy of exception classes shared by the library,
the command-line harness and the HTTP surface, with automatic logging, debug
context and a standardized error envelope.
"""

import logging
import sys
import traceback
from http import HTTPStatus
from pprint import pformat
from typing import TYPE_CHECKING

from flask import make_response

from ..utils import convert_camel_to_snake

if TYPE_CHECKING:
    from flask import Response

logger = logging.getLogger(__name__)

ContextValue = str | int | float | bool | None


class ClueAssignError(Exception):
    """Base exception class for all clue-assign errors.

    The HTTP status code doubles as the error category: the CLI maps 4xx
    categories to exit code 2 and 5xx categories to exit code 1, and the
    HTTP surface returns it unchanged.

    Attributes:
        TITLE: Human-readable error title (default: "Error")
        MESSAGE_PREFIX: Prefix for error messages (default: "")
        HTTP_STATUS_CODE: HTTP status code for the error (default: 500)
        INCLUDE_TRACEBACK: Whether to include traceback in responses (default: True)
        debug_context: Additional context information for debugging

    Example:
        >>> class MyCustomError(ClueAssignError):
        ...     TITLE = "Custom Error"
        ...     HTTP_STATUS_CODE = HTTPStatus.BAD_REQUEST
        >>> raise MyCustomError("Something went wrong", scene="img-3")
    """

    TITLE = "Error"
    MESSAGE_PREFIX = ""
    HTTP_STATUS_CODE = HTTPStatus.INTERNAL_SERVER_ERROR
    INCLUDE_TRACEBACK = True
    debug_context: dict[str, ContextValue | dict] = {}

    def __init__(
        self,
        message: str | None = None,
        **kwargs: ContextValue,
    ) -> None:
        """Initialize the exception.

        Args:
            message: Error message to display
            **kwargs: Additional context information
        """
        self.custom_args: dict[str, ContextValue] = dict(kwargs)
        self.debug_context = self.get_debug_context(**kwargs)

        if message is None:
            if self.MESSAGE_PREFIX:
                self.message = self.MESSAGE_PREFIX
            else:
                self.message = self.TITLE
        else:
            if self.MESSAGE_PREFIX:
                self.message = f"{self.MESSAGE_PREFIX}: {message}"
            else:
                self.message = message

        super().__init__(self.message)

        self.log_exception()

    @classmethod
    def error_code(cls) -> str:
        """Get the error code for this exception type.

        Returns:
            Snake-case error code derived from class name
        """
        return convert_camel_to_snake(cls.__name__)

    def get_debug_context(self, **kwargs: ContextValue) -> dict[str, ContextValue | dict]:
        """Get debugging context information.

        Args:
            **kwargs: Additional context information to include

        Returns:
            Dictionary containing debug context
        """
        debug_context: dict[str, ContextValue | dict] = dict()
        debug_context.update(kwargs)
        return debug_context

    def to_dict(self) -> dict[str, object]:
        """Build the error envelope shared by HTTP responses and JSON logs."""
        error: dict[str, object] = {
            "status_code": int(self.HTTP_STATUS_CODE),
            "title": self.TITLE,
            "error_code": self.error_code(),
            "details": self.custom_args,
            "debug": {
                "message": self.message,
                "debug_context": dict(self.debug_context),
            },
        }

        if self.INCLUDE_TRACEBACK:
            exc = sys.exception()
            if exc is not None:
                formatted_tb: list[str] = traceback.format_list(traceback.extract_tb(exc.__traceback__))
                debug_block = error["debug"]
                if isinstance(debug_block, dict):
                    debug_block["debug_context"]["traceback"] = formatted_tb

        return {"error": error}

    def make_error_response(self) -> "Response":
        """Create a Flask response object for this error.

        Returns:
            Flask Response object with error details and appropriate status code
        """
        return make_response(self.to_dict(), self.HTTP_STATUS_CODE)

    def one_line(self) -> str:
        """Single-line, machine-parsable rendering used on CLI failure."""
        text = " ".join(self.message.split())
        return f"error={self.error_code()} status={int(self.HTTP_STATUS_CODE)} message={text}"

    def log_exception(self) -> None:
        """Log the exception with the appropriate level based on severity."""

        try:
            msg = f"{self.TITLE} ({self.error_code()}): {self.message}"
            if len(self.custom_args):
                msg += f"\n{pformat(self.custom_args)}"

            if self.HTTP_STATUS_CODE >= HTTPStatus.INTERNAL_SERVER_ERROR:
                logger.critical(msg, exc_info=True)
            elif self.HTTP_STATUS_CODE >= HTTPStatus.BAD_REQUEST:
                logger.warning(msg)
            else:
                logger.info(msg)
        except Exception as e:
            logger.critical(f"Error logging exception: {e}", exc_info=True)


# exception classes for generic categories
class BadRequestError(ClueAssignError):
    """400 Bad Request error."""

    HTTP_STATUS_CODE = HTTPStatus.BAD_REQUEST


class UnprocessableEntity(ClueAssignError):
    """422 Unprocessable Entity error for validation failures.

    This exception is used for document and payload validation errors,
    typically from Marshmallow schema validation.

    Attributes:
        fields: Dictionary of field names to error messages
        location: Where the validation failed (json, config, file, ...)
    """

    HTTP_STATUS_CODE = HTTPStatus.UNPROCESSABLE_ENTITY

    fields: dict[str, str] = {}
    location: str | None = None

    def __init__(
        self,
        fields: dict[str, str] | None = None,
        location: str = "json",
        message: str | None = None,
        **kwargs: ContextValue,
    ) -> None:
        """Initialize the UnprocessableEntity exception.

        Args:
            fields: Dictionary mapping field names to error messages
            location: Where the error occurred (default: "json")
            message: Overall error message (default: "Invalid input data")
            **kwargs: Additional debug_context information
        """
        self.fields = dict(fields or {})
        self.location = location
        if message is None:
            message = "Invalid input data"
        super().__init__(message, **kwargs)

    def make_error_response(self) -> "Response":
        """Create a response using Marshmallow's error layout.

        Returns:
            Flask Response object with validation error details
        """
        data: dict[str, str | dict] = {
            "message": self.message,
            "error_code": self.error_code(),
            "errors": {self.location or "json": {f: [v] for f, v in self.fields.items()}},
        }
        return make_response(data, self.HTTP_STATUS_CODE)


class InternalServerError(ClueAssignError):
    """500 Internal Server Error."""

    HTTP_STATUS_CODE = HTTPStatus.INTERNAL_SERVER_ERROR

    def get_debug_context(self, **kwargs: ContextValue) -> dict[str, ContextValue | dict]:
        """Get debugging debug_context including exception information.

        Args:
            **kwargs: Additional debug_context information

        Returns:
            Dictionary with base debug_context plus exception details
        """
        debug_context = super().get_debug_context(**kwargs)

        exc_type, exc_value, _exc_traceback = sys.exc_info()
        debug_context["exception"] = {
            "type": str(exc_type),
            "value": str(exc_value),
        }
        return debug_context


# geometry and numeric kernels
class InvalidBoxError(UnprocessableEntity):
    """A box with non-finite coordinates or non-positive width/height."""

    TITLE = "Invalid box"

    def __init__(self, message: str | None = None, **kwargs: ContextValue) -> None:
        super().__init__({"bbox": message or "invalid box"}, location="bbox", message=message, **kwargs)


class InvalidSceneError(UnprocessableEntity):
    """A scene whose boxes, labels and score matrix are inconsistent."""

    TITLE = "Invalid scene"

    def __init__(self, message: str | None = None, **kwargs: ContextValue) -> None:
        super().__init__({"scene": message or "invalid scene"}, location="scene", message=message, **kwargs)


class ConfigError(UnprocessableEntity):
    """Configuration values outside their documented bounds."""

    TITLE = "Invalid configuration"

    def __init__(
        self,
        message: str | None = None,
        fields: dict[str, str] | None = None,
        **kwargs: ContextValue,
    ) -> None:
        super().__init__(fields or {}, location="config", message=message or "Invalid configuration", **kwargs)


class ShapeMismatchError(BadRequestError):
    """Two operands whose shapes are incompatible; the message names the pair."""

    TITLE = "Shape mismatch"


class LengthMismatchError(BadRequestError):
    """Vectors that must be equally long are not."""

    TITLE = "Length mismatch"


class EmptyInputError(BadRequestError):
    """An operation that needs at least one value received none."""

    TITLE = "Empty input"


class ProbabilityRangeError(BadRequestError):
    """Values flagged as probabilities fall outside [0, 1] (or rows do not sum to 1)."""

    TITLE = "Probability out of range"


class ZeroNormError(BadRequestError):
    """Cosine similarity requested for a zero vector."""

    TITLE = "Zero-norm vector"


class UnknownAssignerError(BadRequestError):
    """Assigner name not in the registry."""

    TITLE = "Unknown assigner"


class SceneGenerationError(InternalServerError):
    """Rejection sampling exhausted its attempt budget."""

    TITLE = "Scene generation failed"


# ingestion and reports
class MalformedDocumentError(UnprocessableEntity):
    """A document that does not parse or does not match its schema."""

    TITLE = "Malformed document"


class UnknownCategoryError(UnprocessableEntity):
    """An annotation references a category id missing from the categories list."""

    TITLE = "Unknown category"


class UnknownImageError(UnprocessableEntity):
    """An annotation or prediction references an image id missing from the images list."""

    TITLE = "Unknown image"


class ScoreLengthError(UnprocessableEntity):
    """A prediction record whose score vector length differs from the category count."""

    TITLE = "Score length mismatch"


class SingleScoreResultsError(UnprocessableEntity):
    """A single-score detection result file where per-class score vectors are required."""

    TITLE = "Single-score results"
    MESSAGE_PREFIX = (
        "Prediction records carry a single 'score'; category confidence needs a per-class 'scores' vector"
    )


class ReportWriteError(InternalServerError):
    """Writing a report or matrix file failed."""

    TITLE = "Report write failed"
