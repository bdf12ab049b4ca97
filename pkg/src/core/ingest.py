"""
Dataset ingestion: CSV / combined-JSON parsing, normalisation of
multilingual and multi-valued profile fields, dataset writing, and the
summary statistics (missing values, interest popularity, album totals).

File formats
------------
profiles.csv   user_id,name,gender,birth_year,birthday,education,degree,
               hometown,location,political,relationship,religion
interests.csv  user_id,interest_id,category,display_name
albums.csv     user_id,album_name,privacy

Empty cells are Absent. Files are UTF-8 with a header row.
"""
import json
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from datetime import date, datetime
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import pandas as pd

from src.core.errors import ConfigurationError, IngestError, InvalidInputError, PrivacyAdvisorError
from src.core.profile_model import (
    DEFAULT_REFERENCE_YEAR,
    DISCLOSURE_ATTRIBUTES,
    AlbumPrivacyValue,
    AlbumSummary,
    Gender,
    InterestItem,
    PhotoAlbum,
    Relationship,
    UserProfile,
    UserVector,
    build_vector,
    is_disclosed,
)
from src.utils.logger import get_logger

logger = get_logger(__name__)

PROFILE_COLUMNS = (
    "user_id", "name", "gender", "birth_year", "birthday", "education", "degree",
    "hometown", "location", "political", "relationship", "religion",
)
INTEREST_COLUMNS = ("user_id", "interest_id", "category", "display_name")
ALBUM_COLUMNS = ("user_id", "album_name", "privacy")

DEFAULT_EDUCATION_ORDER = ("HighSchool", "College", "Undergraduate", "Graduate")
EDUCATION_SEPARATORS = re.compile(r"[;|,]")
BIRTHDAY_FORMAT = "%m/%d/%Y"

PathLike = Union[str, Path]


@dataclass(frozen=True)
class NormalizationDictionary:
    synonyms: Mapping[str, str] = field(default_factory=dict)
    education_order: Tuple[str, ...] = DEFAULT_EDUCATION_ORDER

    def __post_init__(self):
        if len(set(self.education_order)) != len(self.education_order):
            raise ConfigurationError("education_order contains duplicates",
                                     {"education_order": list(self.education_order)})
        folded: Dict[str, str] = {}
        for raw, canonical in self.synonyms.items():
            # Canonical tokens must be fixed points, otherwise normalising twice drifts
            if canonical in self.synonyms and self.synonyms[canonical] != canonical:
                raise ConfigurationError(f"Synonym chain through canonical token {canonical!r}")
            key = raw.casefold()
            if key in folded and folded[key] != canonical:
                raise ConfigurationError(f"Synonym {raw!r} maps to conflicting canonical tokens")
            folded[key] = canonical
        object.__setattr__(self, "_folded", folded)

    @classmethod
    def load(cls, path: PathLike) -> "NormalizationDictionary":
        try:
            with open(path, "r", encoding="utf-8") as f:
                data = json.load(f)
        except FileNotFoundError:
            raise ConfigurationError(f"Normalization dictionary not found: {path}")
        except json.JSONDecodeError as e:
            raise ConfigurationError("Invalid normalization dictionary JSON", {"error": str(e)})

        synonyms = data.get("synonyms", {})
        order = data.get("education_order", list(DEFAULT_EDUCATION_ORDER))
        if not isinstance(synonyms, dict) or not isinstance(order, list):
            raise ConfigurationError("Dictionary needs a 'synonyms' object and an 'education_order' array")
        logger.info(f"Loaded normalization dictionary with {len(synonyms)} synonyms from {path}")
        return cls(synonyms=dict(synonyms), education_order=tuple(order))

    def canonical(self, token: str) -> str:
        """Map a token through the synonym table; unmapped tokens pass through."""
        if token in self.synonyms:
            return self.synonyms[token]
        return self._folded.get(token.casefold(), token)

    def highest_education(self, raw: str) -> Optional[str]:
        tokens = [self.canonical(t.strip()) for t in EDUCATION_SEPARATORS.split(raw) if t.strip()]
        if not tokens:
            return None
        ranked = [t for t in tokens if t in self.education_order]
        if not ranked:
            return tokens[0]
        return max(ranked, key=self.education_order.index)


@dataclass(frozen=True)
class DatasetMetadata:
    reference_year: int = DEFAULT_REFERENCE_YEAR
    source: str = field(default="", compare=False)


@dataclass(frozen=True)
class Dataset:
    users: Tuple[UserVector, ...]
    metadata: DatasetMetadata = DatasetMetadata()

    def __post_init__(self):
        object.__setattr__(self, "users", tuple(self.users))
        index: Dict[str, int] = {}
        for position, user in enumerate(self.users):
            if user.user_id in index:
                raise IngestError(f"Duplicate user_id: {user.user_id}")
            index[user.user_id] = position
        object.__setattr__(self, "_index", index)

    def __len__(self) -> int:
        return len(self.users)

    def __iter__(self):
        return iter(self.users)

    def __contains__(self, user_id: str) -> bool:
        return user_id in self._index

    def by_id(self, user_id: str) -> UserVector:
        if user_id not in self._index:
            raise InvalidInputError(f"Unknown user: {user_id}")
        return self.users[self._index[user_id]]

    def with_users(self, users: Iterable[UserVector]) -> "Dataset":
        return Dataset(tuple(users), self.metadata)


def _clean(value: Any) -> Optional[str]:
    if value is None:
        return None
    if isinstance(value, Enum):
        value = value.value
    text = str(value).strip()
    return text or None


def _parse_birthday(user_id: str, raw: Optional[str]) -> Optional[date]:
    if raw is None:
        return None
    try:
        return datetime.strptime(raw, BIRTHDAY_FORMAT).date()
    except ValueError:
        # Month/day without a year is a partial disclosure, not a full birthday
        logger.warning(f"Birthday {raw!r} of user {user_id} is not MM/DD/YYYY, treated as absent")
        return None


def normalize_record(raw: Mapping[str, Any], dictionary: NormalizationDictionary) -> UserProfile:
    """Turn one raw profile row into a canonical UserProfile."""
    user_id = _clean(raw.get("user_id"))
    if user_id is None:
        raise InvalidInputError("Profile row without user_id")

    birth_year_raw = _clean(raw.get("birth_year"))
    try:
        birth_year = int(birth_year_raw)
    except (TypeError, ValueError):
        raise InvalidInputError(f"Invalid birth_year {birth_year_raw!r} for user {user_id}")

    gender = None
    gender_raw = _clean(raw.get("gender"))
    if gender_raw is not None:
        gender = Gender.lookup(gender_raw)
        if gender is None:
            logger.warning(f"Unrecognised gender {gender_raw!r} for user {user_id}, treated as absent")

    relationship = None
    relationship_raw = _clean(raw.get("relationship"))
    if relationship_raw is not None:
        relationship = Relationship.lookup(dictionary.canonical(relationship_raw))
        if relationship is None:
            logger.warning(f"Unrecognised relationship {relationship_raw!r} for user {user_id}, treated as absent")

    def canonical(key: str) -> Optional[str]:
        value = _clean(raw.get(key))
        return dictionary.canonical(value) if value is not None else None

    education_raw = _clean(raw.get("education", raw.get("education_level")))
    birthday = raw.get("birthday")
    if not isinstance(birthday, date):
        birthday = _parse_birthday(user_id, _clean(birthday))

    return UserProfile(
        user_id=user_id,
        birth_year=birth_year,
        name=_clean(raw.get("name")),
        gender=gender,
        birthday=birthday,
        education_level=dictionary.highest_education(education_raw) if education_raw else None,
        degree=_clean(raw.get("degree")),
        hometown=_clean(raw.get("hometown")),
        location=_clean(raw.get("location")),
        political=canonical("political"),
        relationship=relationship,
        religion=canonical("religion"),
    )


Row = Tuple[int, Dict[str, Any]]


def _read_csv(path: PathLike, columns: Sequence[str]) -> List[Row]:
    """Read a CSV into (line number, row) pairs; the header is line 1."""
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, na_filter=False, encoding="utf-8")
    except FileNotFoundError:
        raise IngestError(f"File not found: {path}", {"file": str(path)})
    except pd.errors.EmptyDataError:
        return []
    except (pd.errors.ParserError, UnicodeDecodeError) as e:
        raise IngestError(f"Unreadable CSV: {e}", {"file": str(path)})

    missing = [c for c in columns if c not in frame.columns]
    if missing:
        raise IngestError(f"Missing columns: {', '.join(missing)}", {"file": str(path)})
    return [(position + 2, row) for position, row in enumerate(frame.to_dict("records"))]


def _build_dataset(profile_rows: List[Row],
                   interest_rows: List[Row],
                   album_rows: List[Row],
                   dictionary: NormalizationDictionary,
                   metadata: DatasetMetadata,
                   sources: Tuple[str, str, str]) -> Dataset:
    profiles_src, interests_src, albums_src = sources

    profiles: Dict[str, UserProfile] = {}
    for line, row in profile_rows:
        try:
            profile = normalize_record(row, dictionary)
        except PrivacyAdvisorError as e:
            raise IngestError(e.message, {"file": profiles_src, "line": line})
        if profile.user_id in profiles:
            raise IngestError(f"Duplicate user_id: {profile.user_id}", {"file": profiles_src, "line": line})
        profiles[profile.user_id] = profile

    interests: Dict[str, List[InterestItem]] = {uid: [] for uid in profiles}
    categories: Dict[str, str] = {}
    for line, row in interest_rows:
        user_id = _clean(row.get("user_id"))
        interest_id = _clean(row.get("interest_id"))
        category = _clean(row.get("category"))
        if user_id not in profiles:
            raise IngestError(f"Interest row references unknown user_id {user_id!r}",
                              {"file": interests_src, "line": line})
        if interest_id is None or category is None:
            raise IngestError("Interest row needs interest_id and category",
                              {"file": interests_src, "line": line})
        if categories.setdefault(interest_id, category) != category:
            raise IngestError(f"Conflicting categories for interest_id {interest_id}",
                              {"file": interests_src, "line": line,
                               "categories": f"{categories[interest_id]} / {category}"})
        interests[user_id].append(InterestItem(interest_id, category, _clean(row.get("display_name"))))

    albums: Dict[str, List[PhotoAlbum]] = {uid: [] for uid in profiles}
    for line, row in album_rows:
        user_id = _clean(row.get("user_id"))
        if user_id not in profiles:
            raise IngestError(f"Album row references unknown user_id {user_id!r}",
                              {"file": albums_src, "line": line})
        try:
            album = PhotoAlbum(str(row.get("album_name") or ""),
                               AlbumPrivacyValue.parse(str(row.get("privacy") or "")))
        except PrivacyAdvisorError as e:
            raise IngestError(e.message, {"file": albums_src, "line": line})
        albums[user_id].append(album)

    users = tuple(build_vector(profile, interests[uid], albums[uid]) for uid, profile in profiles.items())
    logger.info(f"Parsed {len(users)} users, {len(interest_rows)} interest rows, "
                f"{len(album_rows)} album rows from {metadata.source or 'records'}")
    return Dataset(users, metadata)


def parse_profiles(profiles_file: PathLike,
                   interests_file: PathLike,
                   albums_file: PathLike,
                   dictionary: NormalizationDictionary,
                   reference_year: int = DEFAULT_REFERENCE_YEAR) -> Dataset:
    """Parse the three CSV files into a Dataset, joining rows by user_id."""
    sources = (str(profiles_file), str(interests_file), str(albums_file))
    metadata = DatasetMetadata(reference_year=reference_year, source=sources[0])
    return _build_dataset(
        _read_csv(profiles_file, PROFILE_COLUMNS),
        _read_csv(interests_file, INTEREST_COLUMNS),
        _read_csv(albums_file, ALBUM_COLUMNS),
        dictionary, metadata, sources,
    )


def parse_combined_json(path: PathLike,
                        dictionary: NormalizationDictionary,
                        reference_year: Optional[int] = None) -> Dataset:
    """Parse one JSON document with 'users', 'interests' and 'albums' arrays."""
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except FileNotFoundError:
        raise IngestError(f"File not found: {path}", {"file": str(path)})
    except json.JSONDecodeError as e:
        raise IngestError(f"Invalid JSON: {e.msg}", {"file": str(path), "line": e.lineno})

    if not isinstance(data, dict) or not isinstance(data.get("users"), list):
        raise IngestError("Combined dataset needs a 'users' array", {"file": str(path)})

    meta = data.get("metadata") or {}
    year = reference_year if reference_year is not None else meta.get("reference_year", DEFAULT_REFERENCE_YEAR)
    metadata = DatasetMetadata(reference_year=int(year), source=meta.get("source") or str(path))

    # Array positions stand in for line numbers
    def rows(key: str) -> List[Row]:
        return [(position, {k: ("" if v is None else v) for k, v in item.items()})
                for position, item in enumerate(data.get(key) or [])]

    return _build_dataset(rows("users"), rows("interests"), rows("albums"), dictionary, metadata,
                          (f"{path}#users", f"{path}#interests", f"{path}#albums"))


def _profile_row(profile: UserProfile) -> Dict[str, str]:
    def text(value) -> str:
        if value is None:
            return ""
        return value.value if hasattr(value, "value") else str(value)

    return {
        "user_id": profile.user_id,
        "name": text(profile.name),
        "gender": text(profile.gender),
        "birth_year": str(profile.birth_year),
        "birthday": profile.birthday.strftime(BIRTHDAY_FORMAT) if profile.birthday else "",
        "education": text(profile.education_level),
        "degree": text(profile.degree),
        "hometown": text(profile.hometown),
        "location": text(profile.location),
        "political": text(profile.political),
        "relationship": text(profile.relationship),
        "religion": text(profile.religion),
    }


def _interest_rows(d: Dataset) -> List[Dict[str, str]]:
    return [
        {"user_id": u.user_id, "interest_id": item.interest_id,
         "category": item.category, "display_name": item.display_name or ""}
        for u in d for item in u.sorted_interests()
    ]


def _album_rows(d: Dataset) -> List[Dict[str, str]]:
    return [
        {"user_id": u.user_id, "album_name": album.name, "privacy": album.privacy.value}
        for u in d for album in u.albums
    ]


def write_csv(d: Dataset, profiles_file: PathLike, interests_file: PathLike, albums_file: PathLike) -> None:
    """Write a dataset to the three CSV files read by parse_profiles."""
    tables = (
        (profiles_file, [_profile_row(u.profile) for u in d], PROFILE_COLUMNS),
        (interests_file, _interest_rows(d), INTEREST_COLUMNS),
        (albums_file, _album_rows(d), ALBUM_COLUMNS),
    )
    for path, records, columns in tables:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        frame = pd.DataFrame(records, columns=list(columns))
        frame.to_csv(path, index=False, encoding="utf-8", lineterminator="\n")
    logger.info(f"Wrote {len(d)} users to {profiles_file}")


def dataset_to_dict(d: Dataset) -> Dict[str, Any]:
    return {
        "metadata": {"reference_year": d.metadata.reference_year, "source": d.metadata.source},
        "users": [_profile_row(u.profile) for u in d],
        "interests": _interest_rows(d),
        "albums": _album_rows(d),
    }


STATS_ATTRIBUTES: Tuple[str, ...] = tuple(a.value for a in DISCLOSURE_ATTRIBUTES) + ("age",)


@dataclass(frozen=True)
class MissingStats:
    user_count: int
    fractions: Mapping[str, Fraction]

    def percentage(self, attribute: str) -> Fraction:
        return self.fractions[attribute] * 100

    def display(self, attribute: str) -> int:
        """Integer percentage, half rounded up."""
        return math.floor(self.percentage(attribute) + Fraction(1, 2))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "user_count": self.user_count,
            "missing_percent": {a: self.display(a) for a in STATS_ATTRIBUTES},
            "missing_fraction": {a: f"{f.numerator}/{f.denominator}" for a, f in self.fractions.items()},
        }

    def render(self) -> str:
        rows = sorted(STATS_ATTRIBUTES, key=lambda a: (-self.fractions[a], STATS_ATTRIBUTES.index(a)))
        lines = [f"% of the values users did not share (n={self.user_count})",
                 f"{'Attribute':<18}% missing"]
        lines += [f"{a:<18}{self.display(a)}%" for a in rows]
        return "\n".join(lines)


def missing_value_stats(d: Dataset) -> MissingStats:
    if len(d) == 0:
        raise InvalidInputError("Cannot compute missing-value statistics of an empty dataset")
    n = len(d)
    fractions: Dict[str, Fraction] = {}
    for attribute in DISCLOSURE_ATTRIBUTES:
        absent = sum(1 for u in d if not is_disclosed(u, attribute))
        fractions[attribute.value] = Fraction(absent, n)
    # Year of birth is mandatory
    fractions["age"] = Fraction(0)
    return MissingStats(user_count=n, fractions=fractions)


@dataclass(frozen=True)
class InterestRank:
    interest_id: str
    display_name: str
    category: str
    user_count: int


@dataclass(frozen=True)
class InterestRanking:
    entries: Tuple[InterestRank, ...]

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def to_dict(self) -> List[Dict[str, Any]]:
        return [{"interest_id": e.interest_id, "display_name": e.display_name,
                 "category": e.category, "user_count": e.user_count} for e in self.entries]

    def render(self) -> str:
        lines = [f"Top {len(self.entries)} topics that users show interest",
                 f"{'# users':<9}{'Topic':<32}Category"]
        lines += [f"{e.user_count:<9}{e.display_name:<32}{e.category}" for e in self.entries]
        return "\n".join(lines)


def top_interests(d: Dataset, n: int) -> InterestRanking:
    if n < 1:
        raise InvalidInputError(f"n must be positive, got {n}")
    counts: Counter = Counter()
    items: Dict[str, InterestItem] = {}
    for user in d:
        for item in user.interests:
            counts[item.interest_id] += 1
            known = items.get(item.interest_id)
            if known is None or (known.display_name is None and item.display_name is not None):
                items[item.interest_id] = item
    ranked = sorted(counts, key=lambda iid: (-counts[iid], items[iid].label, iid))
    return InterestRanking(tuple(
        InterestRank(iid, items[iid].label, items[iid].category, counts[iid]) for iid in ranked[:n]
    ))


def privacy_totals(d: Dataset) -> AlbumSummary:
    """Aggregate album counts per visibility value over every user."""
    totals = AlbumSummary()
    for user in d:
        s = user.album_summary
        totals = AlbumSummary(
            total=totals.total + s.total,
            n_everyone=totals.n_everyone + s.n_everyone,
            n_fof=totals.n_fof + s.n_fof,
            n_networks=totals.n_networks + s.n_networks,
            n_friends=totals.n_friends + s.n_friends,
            n_custom=totals.n_custom + s.n_custom,
        )
    return totals
