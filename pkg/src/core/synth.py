"""
Seeded synthetic user populations.

Every user draws from its own PCG64 substream (``SeedSequence(seed,
spawn_key=(index,))``), and every value and presence flag is drawn whether
or not it ends up used, so a user's record depends only on (seed, index,
config). Growing ``n_users`` never changes the users already generated.
"""
import json
from dataclasses import dataclass, field, replace
from datetime import date
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple, Union

import numpy as np

from src.core.errors import ConfigurationError, InvalidInputError
from src.core.ingest import Dataset, DatasetMetadata
from src.core.profile_model import (
    DEFAULT_REFERENCE_YEAR,
    DISCLOSURE_ATTRIBUTES,
    AlbumPrivacyValue,
    DisclosureAttribute,
    Gender,
    InterestItem,
    PhotoAlbum,
    Relationship,
    UserProfile,
    build_vector,
)
from src.utils.logger import get_logger

logger = get_logger(__name__)

STREAM_VERSION = "pcg64-v1"

# Share of users who did not disclose each attribute. birthday_full has no
# published figure; 0.5 is an artifact default.
DEFAULT_MISSING_PROBABILITIES: Dict[str, float] = {
    "gender": 0.04,
    "birthday_full": 0.5,
    "education_level": 0.12,
    "degree": 0.94,
    "hometown": 0.36,
    "location": 0.20,
    "political": 0.91,
    "relationship": 0.39,
    "religion": 0.67,
    "interests": 0.32,
}

# Album visibility skew: public far above friends-of-friends, friends close to custom
DEFAULT_PRIVACY_DISTRIBUTION: Dict[str, float] = {
    "EVERYONE": 0.40,
    "FRIENDS": 0.25,
    "CUSTOM": 0.20,
    "FRIENDS_OF_FRIENDS": 0.10,
    "NETWORKS_FRIENDS": 0.05,
}

DEFAULT_VALUE_POOLS: Dict[str, Tuple[str, ...]] = {
    "education_level": ("HighSchool", "College", "Undergraduate", "Graduate"),
    "degree": ("Computer Science", "Engineering", "Business", "Nursing", "Law", "Biology"),
    "hometown": ("Ottawa", "Toronto", "Montreal", "Sao Paulo", "Rio de Janeiro", "Vancouver"),
    "location": ("Canada", "Brazil", "United States", "France"),
    "political": ("Liberal", "Conservative", "Moderate"),
    "religion": ("Christian-Catholic", "Christian-Protestant", "Atheist", "Agnostic", "Spiritist"),
}

ALBUM_NAMES = ("Profile Pictures", "Wall Photos", "Mobile Uploads", "Cover Photos", "Timeline Photos")

PLANTED_FUNCTIONS = ("majority", "all", "any", "parity")


@dataclass(frozen=True)
class CatalogEntry:
    interest_id: str
    display_name: str
    category: str
    weight: float

    def item(self) -> InterestItem:
        return InterestItem(self.interest_id, self.category, self.display_name)


def _default_catalog() -> Tuple[CatalogEntry, ...]:
    head = (
        ("the-big-bang-theory", "The Big Bang Theory", "TV show", 10),
        ("game-of-thrones", "Game of Thrones", "TV show", 7),
        ("dexter", "Dexter", "TV show", 6),
        ("coldplay", "Coldplay", "Musician band", 5),
        ("friends", "FRIENDS", "TV show", 5),
        ("suave-sabor", "Suave Sabor", "Restaurant cafe", 5),
        ("how-i-met-your-mother", "How I Met Your Mother", "TV show", 5),
        ("adele", "Adele", "Musician band", 4),
        ("bob-marley", "Bob Marley", "Musician band", 4),
        ("chico-buarque", "Chico Buarque", "Musician band", 4),
    )
    # Long tail below the published top ten, uniform weight
    tail = tuple((f"topic-{i:03d}", f"Topic {i}", "Community", 2) for i in range(11, 41))
    return tuple(CatalogEntry(*row) for row in head + tail)


@dataclass(frozen=True)
class PlantedSignal:
    """Target presence as a fixed function of other attributes' presence."""
    target: DisclosureAttribute
    inputs: Tuple[DisclosureAttribute, ...]
    function: str = "majority"

    def __post_init__(self):
        if not self.inputs:
            raise ConfigurationError("Planted signal needs at least one input attribute")
        if self.target in self.inputs:
            raise ConfigurationError(f"Planted signal target {self.target.value} is also an input")
        if len(set(self.inputs)) != len(self.inputs):
            raise ConfigurationError("Planted signal inputs contain duplicates")
        if self.function not in PLANTED_FUNCTIONS:
            raise ConfigurationError(f"Unknown planted-signal function {self.function!r}",
                                     {"accepted": ", ".join(PLANTED_FUNCTIONS)})

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "PlantedSignal":
        try:
            return cls(
                target=DisclosureAttribute.parse(data["target"]),
                inputs=tuple(DisclosureAttribute.parse(a) for a in data["inputs"]),
                function=data.get("function", "majority"),
            )
        except KeyError as e:
            raise ConfigurationError(f"Planted signal is missing {e.args[0]!r}")
        except InvalidInputError as e:
            raise ConfigurationError(e.message, e.details)

    def evaluate(self, present: Mapping[DisclosureAttribute, bool]) -> bool:
        count = sum(1 for a in self.inputs if present[a])
        if self.function == "majority":
            return 2 * count > len(self.inputs)
        if self.function == "all":
            return count == len(self.inputs)
        if self.function == "any":
            return count > 0
        return count % 2 == 1

    def to_dict(self) -> Dict[str, Any]:
        return {"target": self.target.value, "inputs": [a.value for a in self.inputs], "function": self.function}


@dataclass(frozen=True)
class SynthConfig:
    n_users: int = 150
    seed: int = 42
    reference_year: int = DEFAULT_REFERENCE_YEAR
    missing_probabilities: Mapping[str, float] = field(default_factory=lambda: dict(DEFAULT_MISSING_PROBABILITIES))
    interest_catalog: Tuple[CatalogEntry, ...] = field(default_factory=_default_catalog)
    max_interests_per_user: int = 5
    album_count_range: Tuple[int, int] = (0, 30)
    privacy_distribution: Mapping[str, float] = field(default_factory=lambda: dict(DEFAULT_PRIVACY_DISTRIBUTION))
    birth_year_range: Tuple[int, int] = (1960, 1995)
    value_pools: Mapping[str, Tuple[str, ...]] = field(default_factory=lambda: dict(DEFAULT_VALUE_POOLS))
    planted_signal: Optional[PlantedSignal] = None

    def __post_init__(self):
        if self.n_users < 1:
            raise ConfigurationError(f"n_users must be at least 1, got {self.n_users}")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigurationError(f"seed must be a 64-bit unsigned integer, got {self.seed}")

        known = {a.value for a in DISCLOSURE_ATTRIBUTES}
        missing = dict(self.missing_probabilities)
        for name, p in missing.items():
            if name not in known:
                raise ConfigurationError(f"Missing probability for unknown attribute {name!r}")
            if not 0 <= p <= 1:
                raise ConfigurationError(f"Missing probability for {name} outside [0, 1]: {p}")
        # Attributes left out of the config keep their default rate
        object.__setattr__(self, "missing_probabilities", {**DEFAULT_MISSING_PROBABILITIES, **missing})

        try:
            privacy = {AlbumPrivacyValue.parse(k).value: v for k, v in self.privacy_distribution.items()}
        except InvalidInputError as e:
            raise ConfigurationError(e.message, e.details)
        if any(v < 0 for v in privacy.values()):
            raise ConfigurationError("Album privacy distribution has a negative probability")
        total = sum((Fraction(str(v)) for v in privacy.values()), Fraction(0))
        if total != 1:
            raise ConfigurationError("Album privacy distribution does not sum to 1",
                                     {"sum": str(total)})
        object.__setattr__(self, "privacy_distribution",
                           {p.value: privacy.get(p.value, 0.0) for p in AlbumPrivacyValue})

        if not self.interest_catalog:
            raise ConfigurationError("Interest catalog is empty")
        ids = [e.interest_id for e in self.interest_catalog]
        if len(ids) != len(set(ids)):
            raise ConfigurationError("Interest catalog has duplicate interest ids")
        if any(e.weight <= 0 for e in self.interest_catalog):
            raise ConfigurationError("Interest catalog weights must be positive")
        if not 1 <= self.max_interests_per_user <= len(self.interest_catalog):
            raise ConfigurationError(f"max_interests_per_user must be in 1..{len(self.interest_catalog)}")

        lo, hi = self.album_count_range
        if not 0 <= lo <= hi:
            raise ConfigurationError(f"Invalid album count range {self.album_count_range}")
        first, last = self.birth_year_range
        if not first <= last <= self.reference_year:
            raise ConfigurationError(f"Invalid birth year range {self.birth_year_range}")

        pools = {**DEFAULT_VALUE_POOLS, **{k: tuple(v) for k, v in self.value_pools.items()}}
        for name, values in pools.items():
            if name not in DEFAULT_VALUE_POOLS:
                raise ConfigurationError(f"Value pool for unsupported attribute {name!r}")
            if not values:
                raise ConfigurationError(f"Value pool for {name} is empty")
        object.__setattr__(self, "value_pools", pools)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "SynthConfig":
        kwargs: Dict[str, Any] = {}
        for key in ("n_users", "seed", "reference_year", "max_interests_per_user",
                    "missing_probabilities", "privacy_distribution", "value_pools"):
            if key in data:
                kwargs[key] = data[key]
        for key in ("album_count_range", "birth_year_range"):
            if key in data:
                kwargs[key] = tuple(data[key])
        if "interest_catalog" in data:
            try:
                kwargs["interest_catalog"] = tuple(
                    CatalogEntry(e["interest_id"], e.get("display_name") or e["interest_id"],
                                 e["category"], float(e.get("weight", 1)))
                    for e in data["interest_catalog"]
                )
            except (KeyError, TypeError) as e:
                raise ConfigurationError("Invalid interest catalog entry", {"error": str(e)})
        if data.get("planted_signal"):
            kwargs["planted_signal"] = PlantedSignal.from_dict(data["planted_signal"])
        return cls(**kwargs)

    @classmethod
    def load(cls, path: Union[str, Path]) -> "SynthConfig":
        try:
            with open(path, "r", encoding="utf-8") as f:
                data = json.load(f)
        except FileNotFoundError:
            raise ConfigurationError(f"Synth config not found: {path}")
        except json.JSONDecodeError as e:
            raise ConfigurationError("Invalid synth config JSON", {"file": str(path), "error": str(e)})
        logger.info(f"Loaded synth config from {path}")
        return cls.from_dict(data)

    def with_overrides(self, **changes) -> "SynthConfig":
        return replace(self, **{k: v for k, v in changes.items() if v is not None})


def _user_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy=seed, spawn_key=(index,))))


def _generate_user(cfg: SynthConfig, index: int, rng: np.random.Generator):
    # Fixed draw order; changing it is a new STREAM_VERSION
    presence_draws = rng.random(len(DISCLOSURE_ATTRIBUTES))
    present = {
        a: bool(presence_draws[i] >= cfg.missing_probabilities[a.value])
        for i, a in enumerate(DISCLOSURE_ATTRIBUTES)
    }
    if cfg.planted_signal is not None:
        present[cfg.planted_signal.target] = cfg.planted_signal.evaluate(present)

    birth_year = int(rng.integers(cfg.birth_year_range[0], cfg.birth_year_range[1], endpoint=True))
    month = int(rng.integers(1, 12, endpoint=True))
    day = int(rng.integers(1, 28, endpoint=True))
    gender = (Gender.FEMALE, Gender.MALE)[int(rng.integers(0, 2))]
    relationships = tuple(Relationship)
    relationship = relationships[int(rng.integers(0, len(relationships)))]
    pooled = {name: values[int(rng.integers(0, len(values)))]
              for name, values in sorted(cfg.value_pools.items())}

    catalog = cfg.interest_catalog
    weights = np.array([e.weight for e in catalog], dtype=float)
    n_interests = int(rng.integers(1, cfg.max_interests_per_user, endpoint=True))
    chosen = rng.choice(len(catalog), size=n_interests, replace=False, p=weights / weights.sum())

    n_albums = int(rng.integers(cfg.album_count_range[0], cfg.album_count_range[1], endpoint=True))
    privacy_values = tuple(AlbumPrivacyValue)
    probabilities = np.array([cfg.privacy_distribution[p.value] for p in privacy_values], dtype=float)
    album_draws = rng.choice(len(privacy_values), size=n_albums, p=probabilities / probabilities.sum())

    def keep(attribute: DisclosureAttribute, value):
        return value if present[attribute] else None

    profile = UserProfile(
        user_id=f"u{index + 1:05d}",
        birth_year=birth_year,
        gender=keep(DisclosureAttribute.GENDER, gender),
        birthday=keep(DisclosureAttribute.BIRTHDAY_FULL, date(birth_year, month, day)),
        education_level=keep(DisclosureAttribute.EDUCATION_LEVEL, pooled["education_level"]),
        degree=keep(DisclosureAttribute.DEGREE, pooled["degree"]),
        hometown=keep(DisclosureAttribute.HOMETOWN, pooled["hometown"]),
        location=keep(DisclosureAttribute.LOCATION, pooled["location"]),
        political=keep(DisclosureAttribute.POLITICAL, pooled["political"]),
        relationship=keep(DisclosureAttribute.RELATIONSHIP, relationship),
        religion=keep(DisclosureAttribute.RELIGION, pooled["religion"]),
    )
    interests = [catalog[int(i)].item() for i in chosen] if present[DisclosureAttribute.INTERESTS] else []
    albums = [
        PhotoAlbum(ALBUM_NAMES[j] if j < len(ALBUM_NAMES) else f"Album {j + 1}", privacy_values[int(p)])
        for j, p in enumerate(album_draws)
    ]
    return build_vector(profile, interests, albums)


def generate_population(cfg: SynthConfig) -> Dataset:
    users = [_generate_user(cfg, i, _user_rng(cfg.seed, i)) for i in range(cfg.n_users)]
    source = f"synth:{STREAM_VERSION}:seed={cfg.seed}:n={cfg.n_users}"
    logger.info(f"Generated {len(users)} synthetic users ({source})")
    return Dataset(tuple(users), DatasetMetadata(reference_year=cfg.reference_year, source=source))


def config_to_dict(cfg: SynthConfig) -> Dict[str, Any]:
    return {
        "n_users": cfg.n_users,
        "seed": cfg.seed,
        "reference_year": cfg.reference_year,
        "missing_probabilities": dict(cfg.missing_probabilities),
        "interest_catalog": [
            {"interest_id": e.interest_id, "display_name": e.display_name, "category": e.category, "weight": e.weight}
            for e in cfg.interest_catalog
        ],
        "max_interests_per_user": cfg.max_interests_per_user,
        "album_count_range": list(cfg.album_count_range),
        "privacy_distribution": dict(cfg.privacy_distribution),
        "birth_year_range": list(cfg.birth_year_range),
        "value_pools": {k: list(v) for k, v in cfg.value_pools.items()},
        "planted_signal": cfg.planted_signal.to_dict() if cfg.planted_signal else None,
    }
