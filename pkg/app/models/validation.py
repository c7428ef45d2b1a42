from enum import StrEnum
from typing import List

from pydantic import BaseModel, computed_field


class Severity(StrEnum):
    """Enum for validation issue severities"""
    ERROR = "error"
    WARNING = "warning"


class ValidationIssue(BaseModel):
    severity: Severity
    message: str


class ValidationReport(BaseModel):
    """Outcome of a validation pass; problems are listed, never raised"""
    issues: List[ValidationIssue] = []

    @computed_field
    @property
    def ok(self) -> bool:
        return not any(issue.severity == Severity.ERROR for issue in self.issues)

    @property
    def errors(self) -> List[ValidationIssue]:
        return [issue for issue in self.issues if issue.severity == Severity.ERROR]

    def error(self, message: str) -> None:
        self.issues.append(ValidationIssue(severity=Severity.ERROR, message=message))

    def warning(self, message: str) -> None:
        self.issues.append(ValidationIssue(severity=Severity.WARNING, message=message))
