from .verify_service import VerificationService
from .models import CheckRecord, CheckStatus

__all__ = ["VerificationService", "CheckRecord", "CheckStatus"]
