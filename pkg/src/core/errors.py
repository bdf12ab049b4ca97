from dataclasses import dataclass
from typing import Any, Dict, Optional


@dataclass(eq=False)
class PrivacyAdvisorError(Exception):
    """Base exception for all privacyadvisor errors."""
    message: str
    details: Optional[Dict[str, Any]] = None

    def __str__(self) -> str:
        if not self.details:
            return self.message
        extra = ", ".join(f"{k}={v}" for k, v in self.details.items())
        return f"{self.message} ({extra})"


class ConfigurationError(PrivacyAdvisorError):
    """Invalid settings, weights, distributions or tree parameters."""


class IngestError(PrivacyAdvisorError):
    """Malformed input files. Details carry 'file' and 'line' when known."""


class InvalidInputError(PrivacyAdvisorError):
    """A caller broke an operation's precondition."""
