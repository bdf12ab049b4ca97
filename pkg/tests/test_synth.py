import json

import pytest

from src.config.settings import PROJECT_ROOT
from src.core.errors import ConfigurationError
from src.core.ingest import dataset_to_dict, missing_value_stats, parse_profiles, privacy_totals, write_csv
from src.core.profile_model import AlbumPrivacyValue, DisclosureAttribute, is_disclosed
from src.core.synth import (
    DEFAULT_MISSING_PROBABILITIES,
    STREAM_VERSION,
    PlantedSignal,
    SynthConfig,
    config_to_dict,
    generate_population,
)

D = DisclosureAttribute


@pytest.fixture(scope="module")
def large_population():
    return generate_population(SynthConfig(n_users=10_000, seed=2013))


def test_missing_rates_follow_config(large_population):
    stats = missing_value_stats(large_population)
    for attribute, p in DEFAULT_MISSING_PROBABILITIES.items():
        assert abs(float(stats.fractions[attribute]) - p) <= 0.015, attribute
    assert stats.fractions["age"] == 0


def test_public_albums_outnumber_friends_of_friends(large_population):
    totals = privacy_totals(large_population)
    assert totals.count(AlbumPrivacyValue.EVERYONE) > totals.count(AlbumPrivacyValue.FRIENDS_OF_FRIENDS)


def test_interests_follow_popularity(large_population):
    counts = {}
    for user in large_population:
        for item in user.interests:
            counts[item.interest_id] = counts.get(item.interest_id, 0) + 1
    assert counts["the-big-bang-theory"] > counts["adele"] > counts["topic-040"]
    assert all(len(u.interests) <= 5 for u in large_population)


def test_generation_is_deterministic():
    cfg = SynthConfig(n_users=50, seed=7)
    assert json.dumps(dataset_to_dict(generate_population(cfg))) == json.dumps(dataset_to_dict(generate_population(cfg)))


def test_adding_users_keeps_earlier_users():
    small = generate_population(SynthConfig(n_users=20, seed=9))
    large = generate_population(SynthConfig(n_users=40, seed=9))
    assert large.users[:20] == small.users


def test_different_seeds_differ():
    a = generate_population(SynthConfig(n_users=20, seed=1))
    b = generate_population(SynthConfig(n_users=20, seed=2))
    assert a != b


def test_metadata_records_stream_version():
    d = generate_population(SynthConfig(n_users=3, seed=5))
    assert STREAM_VERSION in d.metadata.source
    assert d.metadata.reference_year == 2013
    assert [u.user_id for u in d] == ["u00001", "u00002", "u00003"]


def test_csv_round_trip(tmp_path, dictionary):
    d = generate_population(SynthConfig(n_users=60, seed=11))
    files = (tmp_path / "p.csv", tmp_path / "i.csv", tmp_path / "a.csv")
    write_csv(d, *files)
    assert parse_profiles(*files, dictionary) == d


@pytest.mark.parametrize("function, expected", [
    ("majority", lambda n: n >= 2),
    ("all", lambda n: n == 3),
    ("any", lambda n: n >= 1),
    ("parity", lambda n: n % 2 == 1),
])
def test_planted_signal_holds_for_every_user(function, expected):
    inputs = (D.RELATIONSHIP, D.HOMETOWN, D.INTERESTS)
    cfg = SynthConfig(n_users=300, seed=4, planted_signal=PlantedSignal(D.EDUCATION_LEVEL, inputs, function))
    for user in generate_population(cfg):
        present = sum(1 for a in inputs if is_disclosed(user, a))
        assert is_disclosed(user, D.EDUCATION_LEVEL) == expected(present)


def test_privacy_distribution_must_sum_to_one():
    with pytest.raises(ConfigurationError):
        SynthConfig(privacy_distribution={"EVERYONE": 0.5, "FRIENDS": 0.4})
    # 0.1 + 0.2 + 0.7 is 1 in exact arithmetic
    SynthConfig(privacy_distribution={"EVERYONE": 0.1, "FRIENDS": 0.2, "CUSTOM": 0.7})


def test_config_validation():
    with pytest.raises(ConfigurationError):
        SynthConfig(n_users=0)
    with pytest.raises(ConfigurationError):
        SynthConfig(missing_probabilities={"degree": 1.5})
    with pytest.raises(ConfigurationError):
        SynthConfig(missing_probabilities={"shoe_size": 0.5})
    with pytest.raises(ConfigurationError):
        SynthConfig(privacy_distribution={"PUBLIC": 1.0})
    with pytest.raises(ConfigurationError):
        PlantedSignal(D.EDUCATION_LEVEL, (D.EDUCATION_LEVEL,))
    with pytest.raises(ConfigurationError):
        PlantedSignal(D.EDUCATION_LEVEL, (D.HOMETOWN,), "xor")


def test_bundled_config_matches_defaults():
    bundled = SynthConfig.load(PROJECT_ROOT / "config" / "published-marginals.json")
    assert config_to_dict(bundled) == config_to_dict(SynthConfig())


def test_config_from_json_with_planted_signal(tmp_path):
    path = tmp_path / "synth.json"
    path.write_text(json.dumps({
        "n_users": 10,
        "planted_signal": {"target": "education", "inputs": ["hometown", "relationship", "interests"]},
    }), encoding="utf-8")
    cfg = SynthConfig.load(path)
    assert cfg.n_users == 10
    assert cfg.planted_signal.target is D.EDUCATION_LEVEL
    assert cfg.with_overrides(seed=99, n_users=None).seed == 99
