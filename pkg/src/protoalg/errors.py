"""
Exception types shared by the workbench.

Validators and the parser collect every problem they find into a list of
``Issue`` values and raise once, so a model author sees all violations of a
document in a single pass.
"""

from dataclasses import dataclass
from typing import Any, List, Optional, Sequence


@dataclass(frozen=True)
class Issue:
    """A single violated condition, with where and why."""

    code: str
    message: str
    position: Optional[str] = None
    witness: Any = None

    def render(self) -> str:
        """Render the issue as one human-readable line."""
        where = f" at {self.position}" if self.position else ""
        return f"{self.code}{where}: {self.message}"


class ProtoAlgError(Exception):
    """Base class for all workbench errors."""


class UsageError(ProtoAlgError):
    """Raised for command-line or configuration misuse."""


class _IssueError(ProtoAlgError):
    def __init__(self, issues: Sequence[Issue]):
        self.issues: List[Issue] = list(issues)
        lines = "; ".join(issue.render() for issue in self.issues)
        super().__init__(f"{len(self.issues)} issue(s): {lines}")

    @property
    def codes(self) -> List[str]:
        """Issue codes in report order."""
        return [issue.code for issue in self.issues]


class ModelParseError(_IssueError):
    """The model document could not be turned into raw model structures."""


class ModelValidationError(_IssueError):
    """A raw model violates one or more well-formedness conditions."""


class ResourceBoundExceeded(ProtoAlgError):
    """An exploration grew past the configured state-space cap."""

    def __init__(self, what: str, cap: int):
        self.what = what
        self.cap = cap
        super().__init__(f"{what} exceeded the cap of {cap}")


class NotASimulation(ProtoAlgError):
    """A relation claimed to be a simulation failed its transfer condition."""

    def __init__(self, message: str, witness: Any = None):
        self.witness = witness
        super().__init__(message)


class SequentializationError(ProtoAlgError):
    """The product construction cannot be applied to the given model."""


class CertificationFailed(ProtoAlgError):
    """A constructed model is not algorithmically equivalent to its source."""
