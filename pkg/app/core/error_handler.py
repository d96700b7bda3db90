"""
Error handling module: error codes, the exception hierarchy raised by the
processing stages, and the mapping of failures to CLI exit codes.
"""
import logging
from enum import Enum
from typing import Any, Dict, Optional, Tuple

from app.utils.logger import LoggerMixin

logger = logging.getLogger(__name__)


class ErrorCode(Enum):
    """Enumeration of error codes used in the system."""

    # Usage errors
    USAGE_ERROR = "USAGE_ERROR"
    CONFIGURATION_ERROR = "CONFIGURATION_ERROR"

    # Data errors
    PARSE_ERROR = "PARSE_ERROR"
    DATA_VALIDATION_ERROR = "DATA_VALIDATION_ERROR"
    ALIGNMENT_ERROR = "ALIGNMENT_ERROR"
    EMPTY_REPORT = "EMPTY_REPORT"
    INPUT_ERROR = "INPUT_ERROR"
    INTEGRITY_ERROR = "INTEGRITY_ERROR"

    # Internal invariant violations
    ORDERING_ERROR = "ORDERING_ERROR"
    INVALID_STATE = "INVALID_STATE"
    CAPABILITY_ERROR = "CAPABILITY_ERROR"
    STAGE_ERROR = "STAGE_ERROR"

    # Generic errors
    UNKNOWN_ERROR = "UNKNOWN_ERROR"

    @classmethod
    def get_description(cls, code: str) -> str:
        """
        Get a human-readable description for an error code.

        Args:
            code (str): Error code

        Returns:
            str: Error description
        """
        descriptions = {
            cls.USAGE_ERROR.value: "The command line arguments are invalid.",
            cls.CONFIGURATION_ERROR.value: "A configuration value is invalid.",

            cls.PARSE_ERROR.value: "An input file could not be parsed.",
            cls.DATA_VALIDATION_ERROR.value: "Input data violates a required invariant.",
            cls.ALIGNMENT_ERROR.value: "Series are not aligned on the same time grid.",
            cls.EMPTY_REPORT.value: "There is no overlapping data to evaluate.",
            cls.INPUT_ERROR.value: "An observation is not a finite non-negative power value.",
            cls.INTEGRITY_ERROR.value: "A persisted appliance database is corrupt or inconsistent.",

            cls.ORDERING_ERROR.value: "Data arrived out of chronological order.",
            cls.INVALID_STATE.value: "An appliance model cannot be built from the given state.",
            cls.CAPABILITY_ERROR.value: "The request exceeds what the exact filter can enumerate.",
            cls.STAGE_ERROR.value: "A pipeline stage failed.",

            cls.UNKNOWN_ERROR.value: "An unknown error occurred."
        }

        return descriptions.get(code, f"Error code: {code}")


class NilmError(Exception):
    """Base class for all errors raised by the disaggregator."""

    code = ErrorCode.UNKNOWN_ERROR

    def __init__(self, message: Optional[str] = None, stage: Optional[str] = None):
        self.message = message or ErrorCode.get_description(self.code.value)
        self.stage = stage
        super().__init__(self.message)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "error_code": self.code.value,
            "error_message": self.message,
            "stage": self.stage
        }


class UsageError(NilmError):
    code = ErrorCode.USAGE_ERROR


class ConfigurationError(NilmError):
    code = ErrorCode.CONFIGURATION_ERROR


class TraceParseError(NilmError):
    """Malformed line in a channel or trace file."""

    code = ErrorCode.PARSE_ERROR

    def __init__(self, path: str, line_number: int, detail: str):
        self.path = path
        self.line_number = line_number
        super().__init__(f"{path}:{line_number}: {detail}")


class DataValidationError(NilmError):
    code = ErrorCode.DATA_VALIDATION_ERROR


class AlignmentError(NilmError):
    code = ErrorCode.ALIGNMENT_ERROR


class EmptyReportError(AlignmentError):
    code = ErrorCode.EMPTY_REPORT


class InputError(NilmError):
    code = ErrorCode.INPUT_ERROR


class IntegrityError(NilmError):
    """Persisted database failed an invariant; `invariant` names which one."""

    code = ErrorCode.INTEGRITY_ERROR

    def __init__(self, invariant: str, detail: str):
        self.invariant = invariant
        super().__init__(f"integrity check '{invariant}' failed: {detail}")


class OrderingError(NilmError):
    code = ErrorCode.ORDERING_ERROR


class InvalidStateError(NilmError):
    code = ErrorCode.INVALID_STATE


class CapabilityError(NilmError):
    code = ErrorCode.CAPABILITY_ERROR


class StageError(NilmError):
    """Wraps a failure inside a pipeline stage, keeping the original cause."""

    code = ErrorCode.STAGE_ERROR

    def __init__(self, stage: str, cause: Exception):
        self.cause = cause
        super().__init__(f"stage '{stage}' failed: {cause}", stage=stage)


class ErrorHandler(LoggerMixin):
    """Turns exceptions into log records and CLI exit codes."""

    EXIT_SUCCESS = 0
    EXIT_USAGE = 1
    EXIT_DATA = 2
    EXIT_INTERNAL = 3

    def classify_error(self, error_code: str) -> str:
        """
        Classify an error code into a category.

        Args:
            error_code (str): Error code to classify

        Returns:
            str: Error category
        """
        usage_errors = [
            ErrorCode.USAGE_ERROR.value,
            ErrorCode.CONFIGURATION_ERROR.value
        ]

        data_errors = [
            ErrorCode.PARSE_ERROR.value,
            ErrorCode.DATA_VALIDATION_ERROR.value,
            ErrorCode.ALIGNMENT_ERROR.value,
            ErrorCode.EMPTY_REPORT.value,
            ErrorCode.INPUT_ERROR.value,
            ErrorCode.INTEGRITY_ERROR.value
        ]

        if error_code in usage_errors:
            return "USAGE_ERROR"
        elif error_code in data_errors:
            return "DATA_ERROR"
        else:
            return "INTERNAL_ERROR"

    def exit_code_for(self, exception: Exception) -> int:
        """
        Map an exception to the CLI exit code.

        Args:
            exception (Exception): The exception to map

        Returns:
            int: 1 usage, 2 data/parse, 3 internal invariant violation
        """
        if isinstance(exception, StageError):
            return self.exit_code_for(exception.cause)
        if isinstance(exception, (FileNotFoundError, IsADirectoryError, PermissionError)):
            return self.EXIT_USAGE
        if not isinstance(exception, NilmError):
            return self.EXIT_INTERNAL

        category = self.classify_error(exception.code.value)
        if category == "USAGE_ERROR":
            return self.EXIT_USAGE
        elif category == "DATA_ERROR":
            return self.EXIT_DATA
        return self.EXIT_INTERNAL

    def handle_exception(self, exception: Exception) -> Tuple[int, str]:
        """
        Log an exception and produce the exit code and message for the user.

        Args:
            exception (Exception): The exception to handle

        Returns:
            Tuple[int, str]: Exit code and message
        """
        exit_code = self.exit_code_for(exception)

        if isinstance(exception, NilmError):
            stage = f" [{exception.stage}]" if exception.stage else ""
            message = f"{exception.code.value}{stage}: {exception.message}"
            self.logger.error(message)
        else:
            message = f"{ErrorCode.UNKNOWN_ERROR.value}: {exception}"
            self.logger.error(message, exc_info=exit_code == self.EXIT_INTERNAL)

        return exit_code, message
