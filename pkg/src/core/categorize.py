"""
Westin privacy categories.

rule_label() assigns a category from album visibility:
  no albums                                   -> Fundamentalist
  (friends + custom) / total strictly > 1/2   -> Pragmatic
  otherwise                                   -> Unconcerned

train_decision_tree() learns to predict that category from profile
attributes and interests: greedy top-down induction on information gain
(entropy, base 2). Age splits on a binary threshold at midpoints between
consecutive distinct values; categorical attributes split multiway with an
explicit Missing branch; the most popular interests become has/has-not
features. Ties go to the lowest feature index, then the lowest threshold,
so training is independent of row order.
"""
import math
from dataclasses import asdict, dataclass
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import pandas as pd

from src.core.errors import ConfigurationError, IngestError, InvalidInputError, PrivacyAdvisorError
from src.core.ingest import Dataset, top_interests
from src.core.profile_model import (
    DEFAULT_REFERENCE_YEAR,
    DISCLOSURE_ATTRIBUTES,
    AlbumSummary,
    DisclosureAttribute,
    PrivacyCategory,
    UserVector,
)
from src.utils.logger import get_logger

logger = get_logger(__name__)

CATEGORIES: Tuple[PrivacyCategory, ...] = tuple(PrivacyCategory)
NUMERIC = "numeric"
CATEGORICAL = "categorical"
BINARY = "binary"
MIDPOINT_RULE = "midpoint"
LOWEST_INDEX_RULE = "lowest-index"
GAIN_EPSILON = 1e-12
LABEL_COLUMNS = ("privacy_category", "rule_label")

Counts = Tuple[int, ...]


def rule_label(summary: AlbumSummary) -> PrivacyCategory:
    if summary.total == 0:
        return PrivacyCategory.FUNDAMENTALIST
    if Fraction(summary.n_friends + summary.n_custom, summary.total) > Fraction(1, 2):
        return PrivacyCategory.PRAGMATIC
    return PrivacyCategory.UNCONCERNED


@dataclass(frozen=True)
class LabeledUser:
    vector: UserVector
    category: PrivacyCategory


def label_dataset(d: Dataset) -> List[LabeledUser]:
    return [LabeledUser(u, rule_label(u.album_summary)) for u in d]


def load_labels(path: Union[str, Path]) -> Dict[str, PrivacyCategory]:
    """Read a user_id,privacy_category CSV (e.g. survey-derived labels).

    The output of the ``label`` command, whose label column is ``rule_label``,
    is accepted as well.
    """
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    except FileNotFoundError:
        raise IngestError(f"File not found: {path}", {"file": str(path)})
    except pd.errors.EmptyDataError:
        raise IngestError(f"Empty labels file: {path}", {"file": str(path)})
    label_column = next((c for c in LABEL_COLUMNS if c in frame.columns), None)
    if "user_id" not in frame.columns or label_column is None:
        raise IngestError(f"Labels need user_id and one of: {', '.join(LABEL_COLUMNS)}", {"file": str(path)})
    labels = {}
    for line, row in enumerate(frame.to_dict("records"), start=2):
        try:
            labels[row["user_id"].strip()] = PrivacyCategory.parse(row[label_column])
        except PrivacyAdvisorError as e:
            raise IngestError(e.message, {"file": str(path), "line": line})
    return labels


def apply_labels(d: Dataset, labels: Mapping[str, PrivacyCategory]) -> List[LabeledUser]:
    labeled = [LabeledUser(u, labels[u.user_id]) for u in d if u.user_id in labels]
    skipped = len(d) - len(labeled)
    if skipped:
        logger.warning(f"{skipped} users have no external label and are left out of training")
    return labeled


@dataclass(frozen=True)
class TreeConfig:
    max_depth: Optional[int] = None
    min_leaf: int = 2
    top_interest_features: int = 25
    numeric_split_rule: str = MIDPOINT_RULE
    tie_break: str = LOWEST_INDEX_RULE

    def __post_init__(self):
        if self.min_leaf < 1:
            raise ConfigurationError(f"min_leaf must be >= 1, got {self.min_leaf}")
        if self.max_depth is not None and self.max_depth < 1:
            raise ConfigurationError(f"max_depth must be positive, got {self.max_depth}")
        if self.top_interest_features < 1:
            raise ConfigurationError(f"top_interest_features must be positive, got {self.top_interest_features}")
        if self.numeric_split_rule != MIDPOINT_RULE:
            raise ConfigurationError(f"Unknown numeric split rule: {self.numeric_split_rule}")
        if self.tie_break != LOWEST_INDEX_RULE:
            raise ConfigurationError(f"Unknown tie-break rule: {self.tie_break}")

    @classmethod
    def from_settings(cls, section: Mapping[str, Any]) -> "TreeConfig":
        known = {k: section[k] for k in ("max_depth", "min_leaf", "top_interest_features",
                                         "numeric_split_rule", "tie_break") if k in section}
        return cls(**known)


@dataclass(frozen=True)
class Feature:
    name: str
    kind: str
    label: str
    interest_id: Optional[str] = None


@dataclass(frozen=True)
class Leaf:
    category: PrivacyCategory
    counts: Counts


@dataclass(frozen=True)
class NumericSplit:
    feature: str
    threshold: float
    below: "Node"
    above: "Node"
    counts: Counts


@dataclass(frozen=True)
class CategoricalSplit:
    feature: str
    branches: Tuple[Tuple[str, "Node"], ...]
    missing: Optional["Node"]
    counts: Counts


Node = Union[Leaf, NumericSplit, CategoricalSplit]


@dataclass(frozen=True)
class DecisionTree:
    root: Node
    features: Tuple[Feature, ...]
    reference_year: int
    config: TreeConfig

    def feature(self, name: str) -> Feature:
        for f in self.features:
            if f.name == name:
                return f
        raise InvalidInputError(f"Tree has no feature {name!r}")

    @property
    def depth(self) -> int:
        return _depth(self.root)


def _depth(node: Node) -> int:
    if isinstance(node, Leaf):
        return 0
    return 1 + max(_depth(child) for child in _children(node))


def _children(node: Node) -> List[Node]:
    if isinstance(node, NumericSplit):
        return [node.below, node.above]
    if isinstance(node, CategoricalSplit):
        return [child for _, child in node.branches] + ([node.missing] if node.missing else [])
    return []


def build_features(data: Sequence[LabeledUser], top_k: int) -> Tuple[Feature, ...]:
    features = [Feature("age", NUMERIC, "age")]
    for attribute in DISCLOSURE_ATTRIBUTES:
        if attribute is not DisclosureAttribute.INTERESTS:
            features.append(Feature(attribute.value, CATEGORICAL, attribute.value))
    ranking = top_interests(Dataset(tuple(lu.vector for lu in data)), top_k)
    for entry in ranking:
        features.append(Feature(f"interest:{entry.interest_id}", BINARY,
                                f"interest:{entry.display_name}", entry.interest_id))
    return tuple(features)


def feature_value(feature: Feature, v: UserVector, reference_year: int):
    if feature.kind == NUMERIC:
        return v.profile.age(reference_year)
    if feature.kind == BINARY:
        return "yes" if feature.interest_id in v.interest_ids else "no"
    value = v.profile.value_of(DisclosureAttribute(feature.name))
    if value is None:
        return None
    if feature.name == DisclosureAttribute.BIRTHDAY_FULL.value:
        # The date itself is identifying, only its disclosure is a signal
        return "disclosed"
    return value.value if hasattr(value, "value") else str(value)


def _counts(labels: Sequence[PrivacyCategory]) -> Counts:
    return tuple(sum(1 for label in labels if label is c) for c in CATEGORIES)


def _entropy(counts: Counts) -> float:
    total = sum(counts)
    if total == 0:
        return 0.0
    return -sum((c / total) * math.log2(c / total) for c in counts if c)


def _majority(counts: Counts) -> PrivacyCategory:
    best = max(counts)
    return CATEGORIES[counts.index(best)]


Row = Tuple[tuple, PrivacyCategory]


@dataclass
class _Candidate:
    gain: float
    index: int
    threshold: Optional[float]
    groups: Dict[Any, List[Row]]


def _weighted_entropy(groups: Sequence[List[Row]], total: int) -> float:
    return sum(len(g) / total * _entropy(_counts([label for _, label in g])) for g in groups)


def _numeric_candidates(rows: List[Row], index: int, parent_h: float, min_leaf: int):
    values = sorted({r[0][index] for r in rows if r[0][index] is not None})
    for low, high in zip(values, values[1:]):
        threshold = (low + high) / 2
        below = [r for r in rows if r[0][index] <= threshold]
        above = [r for r in rows if r[0][index] > threshold]
        if len(below) < min_leaf or len(above) < min_leaf:
            continue
        gain = parent_h - _weighted_entropy([below, above], len(rows))
        yield _Candidate(gain, index, threshold, {"below": below, "above": above})


def _categorical_candidate(rows: List[Row], index: int, parent_h: float, min_leaf: int) -> Optional[_Candidate]:
    groups: Dict[Any, List[Row]] = {}
    for row in rows:
        groups.setdefault(row[0][index], []).append(row)
    if len(groups) < 2 or any(len(g) < min_leaf for g in groups.values()):
        return None
    ordered = [groups[key] for key in sorted(groups, key=lambda k: (k is None, k or ""))]
    gain = parent_h - _weighted_entropy(ordered, len(rows))
    return _Candidate(gain, index, None, groups)


def _grow(rows: List[Row], features: Tuple[Feature, ...], used: frozenset,
          depth: int, config: TreeConfig) -> Node:
    counts = _counts([label for _, label in rows])
    leaf = Leaf(_majority(counts), counts)
    if sum(1 for c in counts if c) <= 1:
        return leaf
    if config.max_depth is not None and depth >= config.max_depth:
        return leaf
    if len(rows) < 2 * config.min_leaf:
        return leaf

    parent_h = _entropy(counts)
    best: Optional[_Candidate] = None
    for index, feature in enumerate(features):
        if feature.kind == NUMERIC:
            candidates = list(_numeric_candidates(rows, index, parent_h, config.min_leaf))
        elif index in used:
            continue
        else:
            candidate = _categorical_candidate(rows, index, parent_h, config.min_leaf)
            candidates = [candidate] if candidate else []
        for candidate in candidates:
            if best is None or candidate.gain > best.gain + GAIN_EPSILON:
                best = candidate

    if best is None:
        return leaf

    feature = features[best.index]
    if feature.kind == NUMERIC:
        return NumericSplit(
            feature=feature.name,
            threshold=best.threshold,
            below=_grow(best.groups["below"], features, used, depth + 1, config),
            above=_grow(best.groups["above"], features, used, depth + 1, config),
            counts=counts,
        )

    child_used = used | {best.index}
    branches = tuple(
        (key, _grow(best.groups[key], features, child_used, depth + 1, config))
        for key in sorted(k for k in best.groups if k is not None)
    )
    missing = None
    if None in best.groups:
        missing = _grow(best.groups[None], features, child_used, depth + 1, config)
    return CategoricalSplit(feature.name, branches, missing, counts)


def train_decision_tree(data: Sequence[LabeledUser],
                        config: TreeConfig = TreeConfig(),
                        reference_year: int = DEFAULT_REFERENCE_YEAR) -> DecisionTree:
    if not data:
        raise InvalidInputError("Cannot train a decision tree on an empty dataset")
    features = build_features(data, config.top_interest_features)
    rows = [(tuple(feature_value(f, lu.vector, reference_year) for f in features), lu.category)
            for lu in data]
    root = _grow(rows, features, frozenset(), 0, config)
    tree = DecisionTree(root, features, reference_year, config)
    logger.info(f"Trained decision tree on {len(data)} users: depth {tree.depth}, "
                f"{len(features)} features")
    return tree


def predict_category(tree: DecisionTree, v: UserVector) -> PrivacyCategory:
    node = tree.root
    while not isinstance(node, Leaf):
        value = feature_value(tree.feature(node.feature), v, tree.reference_year)
        if isinstance(node, NumericSplit):
            if value is None:
                return _majority(node.counts)
            node = node.below if value <= node.threshold else node.above
            continue
        child = node.missing if value is None else dict(node.branches).get(value)
        if child is None:
            # Value never seen at this node during training
            return _majority(node.counts)
        node = child
    return node.category


def training_accuracy(tree: DecisionTree, data: Sequence[LabeledUser]) -> float:
    if not data:
        raise InvalidInputError("No data to score")
    correct = sum(1 for lu in data if predict_category(tree, lu.vector) is lu.category)
    return correct / len(data)


def _format_counts(counts: Counts) -> str:
    return ", ".join(f"{c.value}={n}" for c, n in zip(CATEGORIES, counts))


def export_tree(tree: DecisionTree) -> str:
    lines: List[str] = []

    def label(feature_name: str) -> str:
        return tree.feature(feature_name).label

    def render(node: Node, depth: int, condition: str) -> None:
        indent = "  " * depth
        if isinstance(node, Leaf):
            lines.append(f"{indent}{condition}leaf: {node.category.value} ({_format_counts(node.counts)})")
            return
        name = label(node.feature)
        if isinstance(node, NumericSplit):
            lines.append(f"{indent}{condition}split {name} <= {node.threshold:g} (n={sum(node.counts)})")
            render(node.below, depth + 1, f"[{name} <= {node.threshold:g}] ")
            render(node.above, depth + 1, f"[{name} > {node.threshold:g}] ")
            return
        lines.append(f"{indent}{condition}split {name} (n={sum(node.counts)})")
        for value, child in node.branches:
            render(child, depth + 1, f"[{name} = {value}] ")
        if node.missing is not None:
            render(node.missing, depth + 1, f"[{name} missing] ")

    render(tree.root, 0, "")
    return "\n".join(lines) + "\n"


def _node_to_dict(node: Node) -> Dict[str, Any]:
    counts = {c.value: n for c, n in zip(CATEGORIES, node.counts)}
    if isinstance(node, Leaf):
        return {"type": "leaf", "category": node.category.value, "counts": counts}
    if isinstance(node, NumericSplit):
        return {"type": NUMERIC, "feature": node.feature, "threshold": node.threshold, "counts": counts,
                "below": _node_to_dict(node.below), "above": _node_to_dict(node.above)}
    return {"type": CATEGORICAL, "feature": node.feature, "counts": counts,
            "branches": {value: _node_to_dict(child) for value, child in node.branches},
            "missing": _node_to_dict(node.missing) if node.missing else None}


def _node_from_dict(data: Mapping[str, Any]) -> Node:
    counts = tuple(int(data["counts"].get(c.value, 0)) for c in CATEGORIES)
    kind = data.get("type")
    if kind == "leaf":
        return Leaf(PrivacyCategory.parse(data["category"]), counts)
    if kind == NUMERIC:
        return NumericSplit(data["feature"], float(data["threshold"]),
                            _node_from_dict(data["below"]), _node_from_dict(data["above"]), counts)
    if kind == CATEGORICAL:
        branches = tuple((value, _node_from_dict(child)) for value, child in sorted(data["branches"].items()))
        missing = _node_from_dict(data["missing"]) if data.get("missing") else None
        return CategoricalSplit(data["feature"], branches, missing, counts)
    raise IngestError(f"Unknown tree node type: {kind!r}")


def tree_to_dict(tree: DecisionTree) -> Dict[str, Any]:
    return {
        "reference_year": tree.reference_year,
        "config": asdict(tree.config),
        "features": [asdict(f) for f in tree.features],
        "root": _node_to_dict(tree.root),
    }


def tree_from_dict(data: Mapping[str, Any]) -> DecisionTree:
    try:
        features = tuple(Feature(**f) for f in data["features"])
        return DecisionTree(
            root=_node_from_dict(data["root"]),
            features=features,
            reference_year=int(data["reference_year"]),
            config=TreeConfig(**data.get("config", {})),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise IngestError(f"Malformed tree document: {e}")
