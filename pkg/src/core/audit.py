"""
Album audit: flags albums whose visibility reaches beyond the friends circle
and renders the per-user report.
"""
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Any, Dict, Iterable, List, Optional, Sequence

from src.core.profile_model import AlbumPrivacyValue, AlbumSummary, PhotoAlbum, UserVector
from src.utils.logger import get_logger

logger = get_logger(__name__)


class Severity(str, Enum):
    PUBLIC_EXPOSURE = "PublicExposure"
    EXTENDED_EXPOSURE = "ExtendedExposure"


SEVERITY_BY_PRIVACY = {
    AlbumPrivacyValue.EVERYONE: Severity.PUBLIC_EXPOSURE,
    AlbumPrivacyValue.FRIENDS_OF_FRIENDS: Severity.EXTENDED_EXPOSURE,
    AlbumPrivacyValue.NETWORKS_FRIENDS: Severity.EXTENDED_EXPOSURE,
}

VISIBILITY_TEXT = {
    AlbumPrivacyValue.EVERYONE: "everyone (public)",
    AlbumPrivacyValue.FRIENDS_OF_FRIENDS: "friends of friends",
    AlbumPrivacyValue.NETWORKS_FRIENDS: "networks and friends",
    AlbumPrivacyValue.FRIENDS: "friends",
    AlbumPrivacyValue.CUSTOM: "a custom list",
}


@dataclass(frozen=True)
class AuditFinding:
    album_name: str
    privacy: AlbumPrivacyValue
    severity: Severity

    def to_dict(self) -> Dict[str, str]:
        return {"album_name": self.album_name, "privacy": self.privacy.value, "severity": self.severity.value}


@dataclass(frozen=True)
class VisibilityRatios:
    r_public: Fraction
    r_fof: Fraction
    r_friends: Fraction
    r_custom: Fraction
    r_networks: Fraction
    total_albums: int


def audit_albums(albums: Iterable[PhotoAlbum]) -> List[AuditFinding]:
    """Weakly protected albums in input order."""
    return [
        AuditFinding(album.name, album.privacy, SEVERITY_BY_PRIVACY[album.privacy])
        for album in albums
        if album.privacy in SEVERITY_BY_PRIVACY
    ]


def visibility_ratios(summary: AlbumSummary) -> VisibilityRatios:
    total = summary.total
    if total == 0:
        zero = Fraction(0)
        return VisibilityRatios(zero, zero, zero, zero, zero, 0)
    return VisibilityRatios(
        r_public=Fraction(summary.n_everyone, total),
        r_fof=Fraction(summary.n_fof, total),
        r_friends=Fraction(summary.n_friends, total),
        r_custom=Fraction(summary.n_custom, total),
        r_networks=Fraction(summary.n_networks, total),
        total_albums=total,
    )


def render_report(findings: Sequence[AuditFinding], display_name: str) -> str:
    title = f"Photo album privacy report for {display_name}"
    lines = [title, "=" * len(title)]
    if not findings:
        lines.append("No weakly protected photo albums found.")
        return "\n".join(lines) + "\n"

    lines.append(f"Found {len(findings)} photo album(s) visible beyond your friends:")
    for finding in findings:
        lines.append(f'  - "{finding.album_name}" is visible to {VISIBILITY_TEXT[finding.privacy]} '
                     f'[{finding.severity.value}]')
        lines.append('      advice: restrict this album to friends or a custom list')
    lines.append("")
    lines.append("We recommend tightening the privacy setting of these albums "
                 "to reduce potential privacy breaches.")
    return "\n".join(lines) + "\n"


def findings_to_dict(findings: Sequence[AuditFinding], user_id: str, display_name: str) -> Dict[str, Any]:
    return {
        "user_id": user_id,
        "display_name": display_name,
        "findings": [f.to_dict() for f in findings],
    }


def audit_user(v: UserVector, display_name: Optional[str] = None) -> str:
    findings = audit_albums(v.albums)
    logger.debug(f"Audited user {v.user_id}: {len(findings)} weak albums")
    return render_report(findings, display_name or v.profile.name or v.user_id)


def audit_dataset(users: Iterable[UserVector]) -> List[Dict[str, Any]]:
    """JSON-ready findings for every user, in dataset order."""
    reports = []
    for v in users:
        findings = audit_albums(v.albums)
        reports.append(findings_to_dict(findings, v.user_id, v.profile.name or v.user_id))
    exposed = sum(1 for r in reports if r["findings"])
    logger.info(f"Audited {len(reports)} users, {exposed} with weakly protected albums")
    return reports
