"""
Domain types shared across privacyadvisor, plus construction of the user
vector V = [profile, interests, album summary] and its binary disclosure
indicators.

Absent attributes are represented by ``None``; no sentinel strings are used
anywhere. All types are frozen and safe to share between threads.
"""
from dataclasses import dataclass, field
from datetime import date
from enum import Enum
from typing import Dict, FrozenSet, Iterable, Iterator, List, Mapping, Optional, Tuple

from src.core.errors import IngestError, InvalidInputError
from src.utils.logger import get_logger

logger = get_logger(__name__)

DEFAULT_REFERENCE_YEAR = 2013


class Gender(str, Enum):
    FEMALE = "Female"
    MALE = "Male"

    @classmethod
    def lookup(cls, token: str) -> Optional["Gender"]:
        folded = token.strip().casefold()
        for member in cls:
            if member.value.casefold() == folded:
                return member
        return None


class Relationship(str, Enum):
    SINGLE = "Single"
    IN_A_RELATIONSHIP = "In a relationship"
    ENGAGED = "Engaged"
    MARRIED = "Married"
    COMPLICATED = "It's complicated"
    OPEN_RELATIONSHIP = "In an open relationship"
    WIDOWED = "Widowed"
    SEPARATED = "Separated"
    DIVORCED = "Divorced"
    CIVIL_UNION = "In a civil union"
    DOMESTIC_PARTNERSHIP = "In a domestic partnership"

    @classmethod
    def lookup(cls, token: str) -> Optional["Relationship"]:
        folded = token.strip().casefold()
        for member in cls:
            if member.value.casefold() == folded:
                return member
        return None


class AlbumPrivacyValue(str, Enum):
    EVERYONE = "EVERYONE"
    FRIENDS = "FRIENDS"
    FRIENDS_OF_FRIENDS = "FRIENDS_OF_FRIENDS"
    NETWORKS_FRIENDS = "NETWORKS_FRIENDS"
    CUSTOM = "CUSTOM"

    @classmethod
    def parse(cls, token: str) -> "AlbumPrivacyValue":
        """Exact-match parse; only the five uppercase tokens are accepted."""
        try:
            return cls(token)
        except ValueError:
            raise InvalidInputError(
                f"Unknown album privacy value: {token!r}",
                {"accepted": ", ".join(m.value for m in cls)}
            )


class PrivacyCategory(str, Enum):
    FUNDAMENTALIST = "Fundamentalist"
    PRAGMATIC = "Pragmatic"
    UNCONCERNED = "Unconcerned"

    @classmethod
    def parse(cls, token: str) -> "PrivacyCategory":
        folded = token.strip().casefold()
        aliases = {
            "ignorant": cls.UNCONCERNED,
            "pragmatist": cls.PRAGMATIC,
        }
        if folded in aliases:
            return aliases[folded]
        for member in cls:
            if member.value.casefold() == folded:
                return member
        raise InvalidInputError(f"Unknown privacy category: {token!r}")


class DisclosureAttribute(str, Enum):
    """Attributes carrying a disclosure indicator, in their fixed order."""
    GENDER = "gender"
    BIRTHDAY_FULL = "birthday_full"
    EDUCATION_LEVEL = "education_level"
    DEGREE = "degree"
    HOMETOWN = "hometown"
    LOCATION = "location"
    POLITICAL = "political"
    RELATIONSHIP = "relationship"
    RELIGION = "religion"
    INTERESTS = "interests"

    @classmethod
    def parse(cls, token: str) -> "DisclosureAttribute":
        aliases = {"education": cls.EDUCATION_LEVEL, "birthday": cls.BIRTHDAY_FULL}
        folded = token.strip().casefold()
        if folded in aliases:
            return aliases[folded]
        try:
            return cls(folded)
        except ValueError:
            raise InvalidInputError(
                f"Unknown attribute: {token!r}",
                {"accepted": ", ".join(m.value for m in cls)}
            )


DISCLOSURE_ATTRIBUTES: Tuple[DisclosureAttribute, ...] = tuple(DisclosureAttribute)


@dataclass(frozen=True)
class UserProfile:
    user_id: str
    birth_year: int
    name: Optional[str] = None
    gender: Optional[Gender] = None
    birthday: Optional[date] = None
    education_level: Optional[str] = None
    degree: Optional[str] = None
    hometown: Optional[str] = None
    location: Optional[str] = None
    political: Optional[str] = None
    relationship: Optional[Relationship] = None
    religion: Optional[str] = None

    def __post_init__(self):
        if not self.user_id:
            raise InvalidInputError("user_id must be non-empty")
        if self.relationship is not None and not isinstance(self.relationship, Relationship):
            raise InvalidInputError(
                f"Invalid relationship value: {self.relationship!r}",
                {"user_id": self.user_id}
            )
        if self.gender is not None and not isinstance(self.gender, Gender):
            raise InvalidInputError(
                f"Invalid gender value: {self.gender!r}",
                {"user_id": self.user_id}
            )

    def value_of(self, attribute: DisclosureAttribute):
        """Profile value behind a disclosure attribute (interests live on the vector)."""
        if attribute is DisclosureAttribute.BIRTHDAY_FULL:
            return self.birthday
        if attribute is DisclosureAttribute.INTERESTS:
            raise InvalidInputError("interests are not a profile field")
        return getattr(self, attribute.value)

    def age(self, reference_year: int) -> int:
        return compute_age(self.birth_year, reference_year)


@dataclass(frozen=True)
class InterestItem:
    interest_id: str
    category: str
    display_name: Optional[str] = None

    @property
    def label(self) -> str:
        return self.display_name or self.interest_id


@dataclass(frozen=True)
class PhotoAlbum:
    name: str
    privacy: AlbumPrivacyValue

    def __post_init__(self):
        if not self.name or not self.name.strip():
            raise InvalidInputError("Album name must be non-empty")
        if not isinstance(self.privacy, AlbumPrivacyValue):
            raise InvalidInputError(f"Invalid album privacy: {self.privacy!r}")


@dataclass(frozen=True)
class AlbumSummary:
    total: int = 0
    n_everyone: int = 0
    n_fof: int = 0
    n_networks: int = 0
    n_friends: int = 0
    n_custom: int = 0

    def __post_init__(self):
        counts = (self.n_everyone, self.n_fof, self.n_networks, self.n_friends, self.n_custom)
        if any(c < 0 for c in counts) or self.total < 0:
            raise InvalidInputError("Album counts must be non-negative", {"counts": counts})
        if sum(counts) != self.total:
            raise InvalidInputError(
                "Album counts do not sum to total",
                {"total": self.total, "sum": sum(counts)}
            )

    @classmethod
    def from_albums(cls, albums: Iterable[PhotoAlbum]) -> "AlbumSummary":
        counts = {value: 0 for value in AlbumPrivacyValue}
        for album in albums:
            counts[album.privacy] += 1
        return cls(
            total=sum(counts.values()),
            n_everyone=counts[AlbumPrivacyValue.EVERYONE],
            n_fof=counts[AlbumPrivacyValue.FRIENDS_OF_FRIENDS],
            n_networks=counts[AlbumPrivacyValue.NETWORKS_FRIENDS],
            n_friends=counts[AlbumPrivacyValue.FRIENDS],
            n_custom=counts[AlbumPrivacyValue.CUSTOM],
        )

    def count(self, privacy: AlbumPrivacyValue) -> int:
        return {
            AlbumPrivacyValue.EVERYONE: self.n_everyone,
            AlbumPrivacyValue.FRIENDS_OF_FRIENDS: self.n_fof,
            AlbumPrivacyValue.NETWORKS_FRIENDS: self.n_networks,
            AlbumPrivacyValue.FRIENDS: self.n_friends,
            AlbumPrivacyValue.CUSTOM: self.n_custom,
        }[privacy]

    def scaled(self, k: int) -> "AlbumSummary":
        return AlbumSummary(
            total=self.total * k,
            n_everyone=self.n_everyone * k,
            n_fof=self.n_fof * k,
            n_networks=self.n_networks * k,
            n_friends=self.n_friends * k,
            n_custom=self.n_custom * k,
        )


@dataclass(frozen=True)
class UserVector:
    profile: UserProfile
    interests: FrozenSet[InterestItem] = frozenset()
    albums: Tuple[PhotoAlbum, ...] = ()
    album_summary: AlbumSummary = field(default=None)

    def __post_init__(self):
        ids = [item.interest_id for item in self.interests]
        if len(ids) != len(set(ids)):
            raise InvalidInputError(
                "Duplicate interest_id in interest set",
                {"user_id": self.profile.user_id}
            )
        derived = AlbumSummary.from_albums(self.albums)
        if self.album_summary is None:
            object.__setattr__(self, "album_summary", derived)
        elif self.album_summary != derived:
            raise InvalidInputError(
                "Album summary does not match albums",
                {"user_id": self.profile.user_id}
            )

    @property
    def user_id(self) -> str:
        return self.profile.user_id

    @property
    def interest_ids(self) -> FrozenSet[str]:
        return frozenset(item.interest_id for item in self.interests)

    def sorted_interests(self) -> List[InterestItem]:
        return sorted(self.interests, key=lambda item: item.interest_id)


@dataclass(frozen=True)
class DisclosureVector:
    indicators: Tuple[bool, ...]

    def __post_init__(self):
        if len(self.indicators) != len(DISCLOSURE_ATTRIBUTES):
            raise InvalidInputError("Disclosure vector has wrong length")

    def __getitem__(self, attribute: DisclosureAttribute) -> bool:
        return self.indicators[DISCLOSURE_ATTRIBUTES.index(attribute)]

    def __iter__(self) -> Iterator[Tuple[DisclosureAttribute, bool]]:
        return iter(zip(DISCLOSURE_ATTRIBUTES, self.indicators))

    def as_dict(self) -> Dict[str, bool]:
        return {attribute.value: flag for attribute, flag in self}


def compute_age(birth_year: int, reference_year: int) -> int:
    if reference_year < birth_year:
        raise InvalidInputError(
            "Reference year precedes birth year",
            {"birth_year": birth_year, "reference_year": reference_year}
        )
    return reference_year - birth_year


def _dedupe_interests(user_id: str, interests: Iterable[InterestItem]) -> FrozenSet[InterestItem]:
    by_id: Dict[str, InterestItem] = {}
    for item in interests:
        seen = by_id.get(item.interest_id)
        if seen is None:
            by_id[item.interest_id] = item
            continue
        if seen.category != item.category:
            raise IngestError(
                f"Conflicting categories for interest_id {item.interest_id}",
                {"user_id": user_id, "categories": f"{seen.category} / {item.category}"}
            )
        if seen.display_name is None and item.display_name is not None:
            by_id[item.interest_id] = item
    return frozenset(by_id.values())


def build_vector(profile: UserProfile,
                 interests: Iterable[InterestItem],
                 albums: Iterable[PhotoAlbum]) -> UserVector:
    """Assemble a user vector; duplicate interest ids are collapsed."""
    albums = tuple(albums)
    return UserVector(
        profile=profile,
        interests=_dedupe_interests(profile.user_id, interests),
        albums=albums,
        album_summary=AlbumSummary.from_albums(albums),
    )


def disclosure_vector(v: UserVector) -> DisclosureVector:
    flags = []
    for attribute in DISCLOSURE_ATTRIBUTES:
        if attribute is DisclosureAttribute.INTERESTS:
            flags.append(bool(v.interests))
        else:
            flags.append(v.profile.value_of(attribute) is not None)
    return DisclosureVector(tuple(flags))


def is_disclosed(v: UserVector, attribute: DisclosureAttribute) -> bool:
    if attribute is DisclosureAttribute.INTERESTS:
        return bool(v.interests)
    return v.profile.value_of(attribute) is not None


def attribute_values(v: UserVector) -> Mapping[DisclosureAttribute, object]:
    """Per-attribute values; interests map to their id set (None when empty)."""
    values = {}
    for attribute in DISCLOSURE_ATTRIBUTES:
        if attribute is DisclosureAttribute.INTERESTS:
            values[attribute] = v.interest_ids or None
        else:
            values[attribute] = v.profile.value_of(attribute)
    return values
