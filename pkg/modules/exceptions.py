"""
exceptions.py
-------------
Error hierarchy for the meandim engine.

Every error carries a short machine tag (``code``), a human readable
``detail`` and the process ``exit_code`` the CLI terminates with.

Usage:
    from modules.exceptions import InvalidParameterError
    raise InvalidParameterError("r must be positive, got 0")
"""

from typing import Any, Dict


class MeanDimError(Exception):
    code: str = "meandim_error"
    exit_code: int = 1

    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail

    def to_dict(self) -> Dict[str, Any]:
        return {
            "status": "error",
            "code": self.exit_code,
            "error": self.code,
            "message": self.detail,
        }


class InvalidParameterError(MeanDimError):
    code = "invalid_parameter"
    exit_code = 2


class DomainError(MeanDimError):
    code = "domain_error"
    exit_code = 2


class SpecFileError(MeanDimError):
    code = "spec_file_error"
    exit_code = 2


class BudgetExceededError(MeanDimError):
    code = "budget_exceeded"
    exit_code = 3


class ConstructionError(MeanDimError):
    code = "construction_error"
    exit_code = 4


class NotFixedPointError(MeanDimError):
    code = "not_fixed_point"
    exit_code = 4


class VerificationFailedError(MeanDimError):
    code = "verification_failed"
    exit_code = 5
