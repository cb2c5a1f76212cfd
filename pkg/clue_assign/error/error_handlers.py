"""Error handlers for clue-assign.

This module provides handler functions for the HTTP surface, a RequestHandlers
class registering them on a Flask application, and the CLI counterpart that turns
any exception into a single machine-parsable stderr line and a nonzero exit code.
"""

import logging
import sys
from http import HTTPStatus
from typing import TYPE_CHECKING, NoReturn

import click
from flask import make_response
from werkzeug.exceptions import HTTPException

from .exceptions import ClueAssignError
from .exceptions import InternalServerError as ApiInternalServerError

if TYPE_CHECKING:
    from flask import Flask, Response

logger = logging.getLogger(__name__)

EXIT_USER_ERROR = 2
EXIT_INTERNAL_ERROR = 1


def server_error_handler(e: Exception) -> "Response":
    """Handle unhandled server errors.

    Args:
        e: The exception that was raised

    Returns:
        Flask Response with error details
    """
    exc = ApiInternalServerError(message=f"Unhandled Exception: {e}")

    logger.critical("Encountered Unhandled Exception!")

    return exc.make_error_response()


def handle_clue_assign_exception(e: ClueAssignError) -> "Response":
    """Handle ClueAssignError and its subclasses.

    Args:
        e: The exception to handle

    Returns:
        Flask Response with error details
    """
    return e.make_error_response()


def handle_generic_exception(e: Exception) -> "Response":
    """Handle generic Python exceptions.

    Args:
        e: The exception to handle

    Returns:
        Flask Response with error details or original HTTP response
    """
    # pass through HTTP errors
    if isinstance(e, HTTPException):
        return make_response(e.get_response())

    api_exc = ApiInternalServerError(*e.args)
    return api_exc.make_error_response()


def exit_code_for(e: ClueAssignError) -> int:
    """Exit code for an error category: 2 for caller errors, 1 for internal failures."""
    if e.HTTP_STATUS_CODE >= HTTPStatus.INTERNAL_SERVER_ERROR:
        return EXIT_INTERNAL_ERROR
    return EXIT_USER_ERROR


def handle_cli_exception(e: Exception) -> NoReturn:
    """Report an exception raised by a CLI command and exit.

    Exactly one line is written to stderr, shaped
    ``error=<error_code> status=<category> message=<text>``.

    Args:
        e: The exception to report

    Raises:
        SystemExit: Always, with the exit code matching the error category
    """
    if not isinstance(e, ClueAssignError):
        e = ApiInternalServerError(f"Unhandled Exception: {e}")
    click.echo(e.one_line(), err=True)
    sys.exit(exit_code_for(e))


class RequestHandlers:
    """Handler class for registering error handlers with Flask.

    Example:
        >>> from flask import Flask
        >>> from clue_assign.error import RequestHandlers
        >>>
        >>> app = Flask(__name__)
        >>> handlers = RequestHandlers(app)
    """

    def __init__(self, app: "Flask | None" = None) -> None:
        """Initialize request handlers.

        Args:
            app: Optional Flask application to register handlers with
        """
        if app is not None:
            self.init_app(app)

    def init_app(self, app: "Flask") -> None:
        """Register error handlers with Flask application.

        Args:
            app: Flask application to register handlers with
        """
        app.register_error_handler(ClueAssignError, handle_clue_assign_exception)
        app.errorhandler(500)(server_error_handler)
        app.register_error_handler(Exception, handle_generic_exception)
