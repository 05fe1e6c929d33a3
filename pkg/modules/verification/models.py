from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Optional


class CheckStatus(str, Enum):
    PASS = "pass"
    FAIL = "fail"
    SKIP = "skip"   # too large for the budget, or not applicable

    @property
    def label(self) -> str:
        return {
            "pass": "Passed",
            "fail": "Failed",
            "skip": "Skipped",
        }[self.value]

    @property
    def sort_order(self) -> int:
        return {"fail": 0, "pass": 1, "skip": 2}[self.value]


@dataclass
class CheckRecord:
    name: str            # invariant family, e.g. "leg_exactness"
    status: CheckStatus
    subject: str         # block or object the check ran on
    detail: str = ""
    value: Optional[float] = None

    _key: str = field(default="", repr=False)

    def __post_init__(self):
        if not self._key:
            self._key = f"{self.name}||{self.subject}"

    def to_dict(self) -> Dict[str, Any]:
        return {
            "check": self.name,
            "subject": self.subject,
            "status": self.status.value,
            "label": self.status.label,
            "detail": self.detail,
            "value": self.value,
        }
