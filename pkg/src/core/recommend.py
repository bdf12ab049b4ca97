"""
k-nearest-neighbour disclosure recommendations.

Two distances are available:
  binary  weighted normalised Hamming distance between disclosure indicators
  mixed   per-attribute closeness of the disclosed values (age scaled by
          age_range, categorical equality, Jaccard distance on interests),
          with disclosed-vs-absent counting as 1 and absent-vs-absent as 0

The attribute being recommended is always excluded from the distance, so
the answer never leaks into neighbour retrieval. Advice is tighten-only:
Hide or KeepCurrent, never a suggestion to disclose.
"""
from collections import Counter
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

from src.core.categorize import LabeledUser
from src.core.errors import ConfigurationError, InvalidInputError
from src.core.ingest import Dataset
from src.core.profile_model import (
    DISCLOSURE_ATTRIBUTES,
    AlbumPrivacyValue,
    DisclosureAttribute,
    DisclosureVector,
    PhotoAlbum,
    PrivacyCategory,
    UserVector,
    attribute_values,
    disclosure_vector,
    is_disclosed,
)
from src.utils.logger import get_logger

logger = get_logger(__name__)

AGE = "age"
DEFAULT_K = 3


class DistanceMode(str, Enum):
    BINARY = "binary"
    MIXED = "mixed"


class Policy(str, Enum):
    MAJORITY = "majority"
    STRICT = "strict"


class Advice(str, Enum):
    HIDE = "Hide"
    KEEP_CURRENT = "KeepCurrent"


class AlbumAdvice(str, Enum):
    RESTRICT = "Restrict"
    KEEP_CURRENT = "KeepCurrent"


# Friends-only and custom lists are both protected settings
EXPOSURE = {
    AlbumPrivacyValue.EVERYONE: 2,
    AlbumPrivacyValue.FRIENDS_OF_FRIENDS: 1,
    AlbumPrivacyValue.NETWORKS_FRIENDS: 1,
    AlbumPrivacyValue.FRIENDS: 0,
    AlbumPrivacyValue.CUSTOM: 0,
}


@dataclass(frozen=True)
class DistanceConfig:
    mode: DistanceMode = DistanceMode.BINARY
    weights: Mapping[str, float] = field(default_factory=dict)
    age_range: Optional[float] = None
    exclude: Optional[DisclosureAttribute] = None

    def __post_init__(self):
        known = {a.value for a in DISCLOSURE_ATTRIBUTES} | {AGE}
        for name, weight in self.weights.items():
            if name not in known:
                raise ConfigurationError(f"Weight for unknown attribute {name!r}")
            if weight < 0:
                raise ConfigurationError(f"Negative weight for {name}: {weight}")
        if self.age_range is not None and self.age_range <= 0:
            raise ConfigurationError(f"age_range must be positive, got {self.age_range}")

    @classmethod
    def from_settings(cls, section: Mapping[str, Any]) -> "DistanceConfig":
        return cls(mode=DistanceMode(section.get("mode", DistanceMode.BINARY.value)),
                   weights=dict(section.get("weights") or {}))

    def weight(self, name: str) -> float:
        return float(self.weights.get(name, 1.0))

    def included(self) -> Tuple[str, ...]:
        names = [a.value for a in DISCLOSURE_ATTRIBUTES if a is not self.exclude]
        if self.mode is DistanceMode.MIXED:
            names.insert(0, AGE)
        return tuple(names)

    def total_weight(self) -> float:
        total = sum(self.weight(n) for n in self.included())
        if total <= 0:
            raise ConfigurationError("All distance weights are zero")
        return total

    def excluding(self, attribute: DisclosureAttribute) -> "DistanceConfig":
        return replace(self, exclude=attribute)

    def resolved(self, users: Sequence[UserVector]) -> "DistanceConfig":
        """Fill age_range from the users' age spread when it is not set."""
        if self.age_range is not None or self.mode is not DistanceMode.MIXED or not users:
            return self
        years = [u.profile.birth_year for u in users]
        spread = max(years) - min(years)
        return replace(self, age_range=float(spread or 1))


@dataclass(frozen=True)
class _Prepared:
    user: UserVector
    disclosure: DisclosureVector
    values: Mapping[DisclosureAttribute, object]


def _prepare(v: UserVector) -> _Prepared:
    return _Prepared(v, disclosure_vector(v), attribute_values(v))


class _Metric:
    """A DistanceConfig compiled into (attribute, weight) terms."""

    def __init__(self, cfg: DistanceConfig):
        self.mode = cfg.mode
        self.total = cfg.total_weight()
        self.terms = tuple(
            (None if name == AGE else DisclosureAttribute(name), cfg.weight(name))
            for name in cfg.included() if cfg.weight(name) > 0
        )
        self.age_range = cfg.age_range

    def __call__(self, a: _Prepared, b: _Prepared) -> float:
        s = 0.0
        if self.mode is DistanceMode.BINARY:
            for attribute, w in self.terms:
                if a.disclosure[attribute] != b.disclosure[attribute]:
                    s += w
            return s / self.total
        for attribute, w in self.terms:
            s += w * self._mixed_term(attribute, a, b)
        return s / self.total

    def _mixed_term(self, attribute: Optional[DisclosureAttribute], a: _Prepared, b: _Prepared) -> float:
        if attribute is None:
            return min(1.0, abs(a.user.profile.birth_year - b.user.profile.birth_year) / self.age_range)
        va, vb = a.values[attribute], b.values[attribute]
        if va is None and vb is None:
            return 0.0
        if va is None or vb is None:
            return 1.0
        if attribute is DisclosureAttribute.INTERESTS:
            return 1.0 - len(va & vb) / len(va | vb)
        return 0.0 if va == vb else 1.0


def pairwise_distance(a: UserVector, b: UserVector, cfg: DistanceConfig = DistanceConfig()) -> float:
    """Distance between two users.

    In mixed mode without an age_range the pair's own birth-year spread is the
    scale, so any age difference counts as 1. Pass age_range for a dataset scale.
    """
    return _Metric(cfg.resolved([a, b]))(_prepare(a), _prepare(b))


@dataclass(frozen=True)
class Neighbor:
    user_id: str
    distance: float
    target_disclosed: Optional[bool] = None

    def to_dict(self) -> Dict[str, Any]:
        return {"user_id": self.user_id, "distance": self.distance, "target_disclosed": self.target_disclosed}


class NeighborIndex:
    """Candidate users prepared once for repeated exhaustive k-NN queries."""

    def __init__(self, users: Union[Dataset, Sequence[UserVector]]):
        self._prepared = [_prepare(u) for u in users]

    def __len__(self) -> int:
        return len(self._prepared)

    def query(self, query: UserVector, k: int, cfg: DistanceConfig = DistanceConfig()) -> List[Neighbor]:
        """The k closest users other than the query, ordered by (distance, user_id)."""
        candidates = [p for p in self._prepared if p.user.user_id != query.user_id]
        if k < 1:
            raise InvalidInputError(f"k must be positive, got {k}")
        if k > len(candidates):
            raise InvalidInputError(f"k={k} exceeds the {len(candidates)} candidate users available",
                                    {"k": k, "candidates": len(candidates)})

        cfg = cfg.resolved([p.user for p in candidates] + [query])
        metric = _Metric(cfg)
        prepared_query = _prepare(query)
        scored = sorted(
            ((metric(prepared_query, p), p.user) for p in candidates),
            key=lambda pair: (pair[0], pair[1].user_id),
        )
        target = cfg.exclude
        return [
            Neighbor(u.user_id, dist, is_disclosed(u, target) if target is not None else None)
            for dist, u in scored[:k]
        ]


def nearest_neighbors(query: UserVector,
                      d: Union[Dataset, Sequence[UserVector]],
                      k: int,
                      cfg: DistanceConfig = DistanceConfig()) -> List[Neighbor]:
    return NeighborIndex(d).query(query, k, cfg)


@dataclass(frozen=True)
class Recommendation:
    attribute: DisclosureAttribute
    advice: Advice
    neighbors: Tuple[Neighbor, ...]
    policy: Policy
    query_disclosed: bool

    @property
    def hidden_by_neighbors(self) -> int:
        return sum(1 for n in self.neighbors if not n.target_disclosed)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "attribute": self.attribute.value,
            "advice": self.advice.value,
            "policy": self.policy.value,
            "query_disclosed": self.query_disclosed,
            "neighbors": [n.to_dict() for n in self.neighbors],
        }


def _advise(query_disclosed: bool, hidden: int, k: int, policy: Policy) -> Advice:
    if not query_disclosed:
        # Nothing to tighten
        return Advice.KEEP_CURRENT
    if policy is Policy.MAJORITY:
        return Advice.HIDE if 2 * hidden > k else Advice.KEEP_CURRENT
    return Advice.HIDE if hidden >= 1 else Advice.KEEP_CURRENT


def recommend_disclosure(query: UserVector,
                         d: Union[Dataset, Sequence[UserVector]],
                         attribute: Union[DisclosureAttribute, str],
                         k: int = DEFAULT_K,
                         policy: Policy = Policy.MAJORITY,
                         cfg: Optional[DistanceConfig] = None) -> Recommendation:
    if not isinstance(attribute, DisclosureAttribute):
        attribute = DisclosureAttribute.parse(attribute)
    cfg = (cfg or DistanceConfig()).excluding(attribute)
    neighbors = nearest_neighbors(query, d, k, cfg)
    hidden = sum(1 for n in neighbors if not n.target_disclosed)
    query_disclosed = is_disclosed(query, attribute)
    advice = _advise(query_disclosed, hidden, k, policy)
    logger.debug(f"{query.user_id}/{attribute.value}: {hidden}/{k} neighbours hide -> {advice.value}")
    return Recommendation(attribute, advice, tuple(neighbors), policy, query_disclosed)


def recommend_all(query: UserVector,
                  d: Union[Dataset, Sequence[UserVector]],
                  k: int = DEFAULT_K,
                  policy: Policy = Policy.MAJORITY,
                  cfg: Optional[DistanceConfig] = None,
                  attributes: Sequence[DisclosureAttribute] = DISCLOSURE_ATTRIBUTES) -> List[Recommendation]:
    wanted = set(attributes)
    return [recommend_disclosure(query, d, attribute, k, policy, cfg)
            for attribute in DISCLOSURE_ATTRIBUTES if attribute in wanted]


def suggest_category(query: UserVector,
                     labeled: Sequence[LabeledUser],
                     k: int = DEFAULT_K,
                     cfg: Optional[DistanceConfig] = None) -> Tuple[PrivacyCategory, List[Neighbor]]:
    """Privacy category most common among the query's k nearest labeled users.

    Vote ties go to the tied category of the closest neighbour.
    """
    categories = {lu.vector.user_id: lu.category for lu in labeled}
    neighbors = nearest_neighbors(query, [lu.vector for lu in labeled], k, cfg or DistanceConfig())
    votes: Dict[PrivacyCategory, int] = {}
    for n in neighbors:
        votes[categories[n.user_id]] = votes.get(categories[n.user_id], 0) + 1
    top = max(votes.values())
    for n in neighbors:
        if votes[categories[n.user_id]] == top:
            return categories[n.user_id], neighbors
    raise AssertionError("unreachable")


@dataclass(frozen=True)
class AlbumRecommendation:
    album_name: str
    current: AlbumPrivacyValue
    advice: AlbumAdvice
    suggested: Optional[AlbumPrivacyValue]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "album_name": self.album_name,
            "current": self.current.value,
            "advice": self.advice.value,
            "suggested": self.suggested.value if self.suggested else None,
        }


@dataclass(frozen=True)
class AlbumSettingAdvice:
    suggested: Optional[AlbumPrivacyValue]
    neighbors: Tuple[Neighbor, ...]
    albums: Tuple[AlbumRecommendation, ...]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "suggested": self.suggested.value if self.suggested else None,
            "neighbors": [n.to_dict() for n in self.neighbors],
            "albums": [a.to_dict() for a in self.albums],
        }


def _least_exposed_first(value: AlbumPrivacyValue) -> Tuple[int, int]:
    return EXPOSURE[value], list(AlbumPrivacyValue).index(value)


def _prevailing_visibility(albums: Sequence[PhotoAlbum]) -> Optional[AlbumPrivacyValue]:
    counts = Counter(album.privacy for album in albums)
    if not counts:
        return None
    return min(counts, key=lambda p: (-counts[p], _least_exposed_first(p)))


def recommend_album_settings(query: UserVector,
                             d: Union[Dataset, Sequence[UserVector]],
                             k: int = DEFAULT_K,
                             cfg: Optional[DistanceConfig] = None) -> AlbumSettingAdvice:
    """Album visibility advice from the query's k most similar users.

    Each neighbour votes for the visibility most of its albums use; neighbours
    without albums abstain. Vote ties go to the less exposed value. Albums more
    exposed than the winning value get Restrict, everything else KeepCurrent.
    """
    neighbors = nearest_neighbors(query, d, k, cfg or DistanceConfig())
    by_id = {u.user_id: u for u in d}
    votes: Counter = Counter()
    for n in neighbors:
        prevailing = _prevailing_visibility(by_id[n.user_id].albums)
        if prevailing is not None:
            votes[prevailing] += 1
    suggested = min(votes, key=lambda p: (-votes[p], _least_exposed_first(p))) if votes else None

    albums = []
    for album in query.albums:
        tighter = suggested is not None and EXPOSURE[album.privacy] > EXPOSURE[suggested]
        albums.append(AlbumRecommendation(
            album.name,
            album.privacy,
            AlbumAdvice.RESTRICT if tighter else AlbumAdvice.KEEP_CURRENT,
            suggested if tighter else None,
        ))
    restricted = sum(1 for a in albums if a.advice is AlbumAdvice.RESTRICT)
    logger.debug(f"{query.user_id}: neighbours prefer {suggested}, {restricted}/{len(albums)} albums to restrict")
    return AlbumSettingAdvice(suggested, tuple(neighbors), tuple(albums))


def render_album_advice(advice: AlbumSettingAdvice) -> str:
    if advice.suggested is None:
        lines = ["Photo albums: your nearest neighbours share no albums to compare with"]
    else:
        lines = [f"Photo albums (your nearest neighbours mostly use {advice.suggested.value}):"]
    for album in advice.albums:
        if album.advice is AlbumAdvice.RESTRICT:
            lines.append(f'  - "{album.album_name}" {album.current.value} -> restrict to {album.suggested.value}')
        else:
            lines.append(f'  - "{album.album_name}" {album.current.value} KeepCurrent')
    if not advice.albums:
        lines.append("  - no photo albums")
    return "\n".join(lines) + "\n"


def render_recommendations(query: UserVector,
                           recommendations: Sequence[Recommendation],
                           k: int,
                           policy: Policy,
                           mode: DistanceMode,
                           category: Optional[PrivacyCategory] = None) -> str:
    lines = [f"Privacy recommendations for {query.profile.name or query.user_id} "
             f"(k={k}, policy={policy.value}, mode={mode.value})"]
    if category is not None:
        lines.append(f"Nearest neighbours' privacy category: {category.value}")
    for rec in recommendations:
        evidence = ", ".join(f"{n.user_id} ({n.distance:.4f})" for n in rec.neighbors)
        state = "disclosed" if rec.query_disclosed else "hidden"
        lines.append(f"  {rec.attribute.value:<16}{rec.advice.value:<13}"
                     f"you: {state:<10}neighbours hiding {rec.hidden_by_neighbors}/{len(rec.neighbors)}: {evidence}")
    if not recommendations:
        lines.append("  no attributes configured for recommendation")
    return "\n".join(lines) + "\n"
