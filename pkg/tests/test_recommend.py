import random
from datetime import date

import pytest
from hypothesis import given, settings as hypothesis_settings, strategies as st

from conftest import albums_of, make_user
from src.core.categorize import LabeledUser
from src.core.errors import ConfigurationError, InvalidInputError
from src.core.profile_model import (
    DISCLOSURE_ATTRIBUTES,
    AlbumPrivacyValue,
    DisclosureAttribute,
    Gender,
    InterestItem,
    PrivacyCategory,
    Relationship,
    is_disclosed,
)
from src.core.recommend import (
    EXPOSURE,
    Advice,
    AlbumAdvice,
    DistanceConfig,
    DistanceMode,
    NeighborIndex,
    Policy,
    nearest_neighbors,
    pairwise_distance,
    recommend_album_settings,
    recommend_all,
    recommend_disclosure,
    render_album_advice,
    render_recommendations,
    suggest_category,
)

D = DisclosureAttribute
A = AlbumPrivacyValue
INTERESTS = [InterestItem(f"i{n}", "Topic") for n in range(6)]


def random_user(rng: random.Random, user_id: str):
    def maybe(value):
        return value if rng.random() < 0.5 else None

    return make_user(
        user_id,
        birth_year=rng.randint(1960, 1995),
        gender=maybe(rng.choice(list(Gender))),
        birthday=maybe(date(1980, rng.randint(1, 12), rng.randint(1, 28))),
        education_level=maybe(rng.choice(["College", "Graduate"])),
        degree=maybe(rng.choice(["Law", "Biology"])),
        hometown=maybe(rng.choice(["Ottawa", "Recife"])),
        location=maybe(rng.choice(["Canada", "Brazil"])),
        political=maybe(rng.choice(["Liberal", "Conservative"])),
        relationship=maybe(rng.choice([Relationship.SINGLE, Relationship.MARRIED])),
        religion=maybe(rng.choice(["Atheist", "Agnostic"])),
        interests=rng.sample(INTERESTS, rng.randint(0, 3)),
    )


def test_neighbours_hiding_education_hides_education_under_both_policies(hidden_education):
    alice = hidden_education.by_id("alice")
    for policy in Policy:
        rec = recommend_disclosure(alice, hidden_education, D.EDUCATION_LEVEL, k=3, policy=policy)
        assert rec.advice is Advice.HIDE
        assert sorted(n.user_id for n in rec.neighbors) == ["n1", "n2", "n3"]
        assert all(n.distance == 0 for n in rec.neighbors)
        assert rec.hidden_by_neighbors == 3


def test_neighbours_hiding_education_keeps_everything_else(hidden_education):
    alice = hidden_education.by_id("alice")
    recs = recommend_all(alice, hidden_education, k=3, policy=Policy.STRICT)
    assert [r.attribute for r in recs] == list(DISCLOSURE_ATTRIBUTES)
    advice = {r.attribute: r.advice for r in recs}
    assert advice.pop(D.EDUCATION_LEVEL) is Advice.HIDE
    assert set(advice.values()) == {Advice.KEEP_CURRENT}


def test_neighbours_hiding_education_report_text(hidden_education):
    alice = hidden_education.by_id("alice")
    recs = recommend_all(alice, hidden_education, k=3, policy=Policy.MAJORITY)
    text = render_recommendations(alice, recs, 3, Policy.MAJORITY, DistanceMode.BINARY)
    line = next(l for l in text.splitlines() if "education_level" in l)
    assert "Hide" in line
    assert text.startswith("Privacy recommendations for Alice (k=3, policy=majority, mode=binary)")


def test_advice_is_tighten_only():
    rng = random.Random(2013)
    for case in range(1000):
        users = [random_user(rng, f"u{i}") for i in range(rng.randint(4, 12))]
        query = users[0]
        attribute = rng.choice(DISCLOSURE_ATTRIBUTES)
        policy = rng.choice(list(Policy))
        k = rng.randint(1, len(users) - 1)
        rec = recommend_disclosure(query, users, attribute, k=k, policy=policy)
        assert rec.advice in (Advice.HIDE, Advice.KEEP_CURRENT)
        if not is_disclosed(query, attribute):
            assert rec.advice is Advice.KEEP_CURRENT, case


def test_strict_hides_whenever_majority_does():
    rng = random.Random(99)
    for _ in range(1000):
        users = [random_user(rng, f"u{i}") for i in range(8)]
        attribute = rng.choice(DISCLOSURE_ATTRIBUTES)
        majority = recommend_disclosure(users[0], users, attribute, k=3, policy=Policy.MAJORITY)
        strict = recommend_disclosure(users[0], users, attribute, k=3, policy=Policy.STRICT)
        if majority.advice is Advice.HIDE:
            assert strict.advice is Advice.HIDE


def test_even_k_tie_keeps_current():
    query = make_user("q", location="Canada", gender=Gender.FEMALE)
    others = [make_user("a", gender=Gender.FEMALE, location="Canada"),
              make_user("b", gender=Gender.FEMALE)]
    rec = recommend_disclosure(query, [query] + others, D.LOCATION, k=2, policy=Policy.MAJORITY)
    assert rec.hidden_by_neighbors == 1
    assert rec.advice is Advice.KEEP_CURRENT
    strict = recommend_disclosure(query, [query] + others, D.LOCATION, k=2, policy=Policy.STRICT)
    assert strict.advice is Advice.HIDE


def test_target_attribute_never_counts_in_distance():
    a = make_user("a", education_level="Graduate")
    b = make_user("b")
    cfg = DistanceConfig().excluding(D.EDUCATION_LEVEL)
    assert pairwise_distance(a, b, cfg) == 0
    assert pairwise_distance(a, b) == pytest.approx(1 / 10)


def test_neighbors_exclude_query_and_sort_by_distance_then_id():
    rng = random.Random(5)
    users = [random_user(rng, f"u{i:02d}") for i in range(5)]
    query = users[2]
    cfg = DistanceConfig()
    got = nearest_neighbors(query, users, 4, cfg)
    expected = sorted(((pairwise_distance(query, u, cfg), u.user_id) for u in users if u.user_id != "u02"))
    assert [(n.distance, n.user_id) for n in got] == expected


def test_k_larger_than_candidates():
    users = [make_user("a"), make_user("b")]
    with pytest.raises(InvalidInputError):
        nearest_neighbors(users[0], users, 2)
    with pytest.raises(InvalidInputError):
        nearest_neighbors(users[0], users, 0)


def test_neighbor_index_reuses_prepared_users():
    rng = random.Random(11)
    users = [random_user(rng, f"u{i}") for i in range(10)]
    index = NeighborIndex(users)
    assert len(index) == 10
    for query in users[:3]:
        assert index.query(query, 3) == nearest_neighbors(query, users, 3)


def test_weights_change_the_distance():
    a = make_user("a", gender=Gender.MALE)
    b = make_user("b", location="Canada")
    cfg = DistanceConfig(weights={"gender": 3.0, "location": 0.0})
    # Only gender differs among weighted terms: 3 / (3 + 8 ones)
    assert pairwise_distance(a, b, cfg) == pytest.approx(3 / 11)


def test_bad_weights():
    with pytest.raises(ConfigurationError):
        DistanceConfig(weights={"shoe_size": 1.0})
    with pytest.raises(ConfigurationError):
        DistanceConfig(weights={"gender": -1.0})
    zero = {a.value: 0.0 for a in DISCLOSURE_ATTRIBUTES}
    with pytest.raises(ConfigurationError):
        pairwise_distance(make_user("a"), make_user("b"), DistanceConfig(weights=zero))


def test_mixed_distance_terms():
    a = make_user("a", birth_year=1980, location="Canada", interests=INTERESTS[:2])
    b = make_user("b", birth_year=1990, location="Brazil", interests=INTERESTS[1:3])
    cfg = DistanceConfig(mode=DistanceMode.MIXED, age_range=20)
    # age 0.5, location 1, interests Jaccard 1 - 1/3, eight absent-vs-absent zeros
    expected = (0.5 + 1 + (1 - 1 / 3)) / 11
    assert pairwise_distance(a, b, cfg) == pytest.approx(expected)


def test_mixed_mode_resolves_age_range_from_dataset():
    users = [make_user("a", birth_year=1960), make_user("b", birth_year=1990), make_user("c", birth_year=1975)]
    got = nearest_neighbors(users[2], users, 2, DistanceConfig(mode=DistanceMode.MIXED))
    assert [n.distance for n in got] == pytest.approx([15 / 30 / 11, 15 / 30 / 11])


def test_mixed_distance_without_age_range_uses_the_pair():
    mixed = DistanceConfig(mode=DistanceMode.MIXED)
    a = make_user("a", location="Canada")
    assert pairwise_distance(a, a, mixed) == 0
    # Any birth-year gap is a full age mismatch at the pair's own scale
    b, c = make_user("b", birth_year=1983), make_user("c", birth_year=1990)
    assert pairwise_distance(b, c, mixed) == pytest.approx(1 / 11)
    assert pairwise_distance(b, c, DistanceConfig(mode=DistanceMode.MIXED, age_range=14)) == pytest.approx(0.5 / 11)


def test_suggest_category_votes_among_neighbours(hidden_education):
    labels = {"n1": PrivacyCategory.PRAGMATIC, "n2": PrivacyCategory.PRAGMATIC,
              "n3": PrivacyCategory.UNCONCERNED, "f1": PrivacyCategory.FUNDAMENTALIST,
              "f2": PrivacyCategory.FUNDAMENTALIST, "f3": PrivacyCategory.FUNDAMENTALIST}
    labeled = [LabeledUser(u, labels[u.user_id]) for u in hidden_education if u.user_id in labels]
    category, neighbors = suggest_category(hidden_education.by_id("alice"), labeled, k=3)
    assert category is PrivacyCategory.PRAGMATIC
    assert len(neighbors) == 3


def similar_users(*album_sets):
    return [make_user(f"s{i}", gender=Gender.MALE, location="Canada", albums=albums_of(*albums))
            for i, albums in enumerate(album_sets, start=1)]


def test_album_advice_follows_similar_users():
    query = make_user("john", gender=Gender.MALE, location="Canada",
                      albums=albums_of(A.EVERYONE, A.EVERYONE, A.FRIENDS_OF_FRIENDS, A.FRIENDS, A.CUSTOM))
    others = similar_users((A.FRIENDS, A.FRIENDS, A.EVERYONE), (A.FRIENDS,), (A.CUSTOM, A.CUSTOM))
    far = make_user("far", albums=albums_of(A.EVERYONE, A.EVERYONE))
    advice = recommend_album_settings(query, [query, far] + others, k=3)
    assert [n.user_id for n in advice.neighbors] == ["s1", "s2", "s3"]
    assert advice.suggested is A.FRIENDS
    assert [a.advice for a in advice.albums] == [AlbumAdvice.RESTRICT] * 3 + [AlbumAdvice.KEEP_CURRENT] * 2
    assert {a.suggested for a in advice.albums if a.advice is AlbumAdvice.RESTRICT} == {A.FRIENDS}
    text = render_album_advice(advice)
    assert '"album 0" EVERYONE -> restrict to FRIENDS' in text
    assert '"album 4" CUSTOM KeepCurrent' in text


def test_album_advice_never_loosens():
    query = make_user("q", gender=Gender.MALE, location="Canada", albums=albums_of(A.FRIENDS, A.CUSTOM))
    others = similar_users((A.EVERYONE,), (A.EVERYONE, A.EVERYONE), (A.EVERYONE,))
    advice = recommend_album_settings(query, [query] + others, k=3)
    assert advice.suggested is A.EVERYONE
    assert all(a.advice is AlbumAdvice.KEEP_CURRENT and a.suggested is None for a in advice.albums)


def test_album_vote_ties_go_to_less_exposed_setting():
    query = make_user("q", gender=Gender.MALE, location="Canada", albums=albums_of(A.EVERYONE))
    others = similar_users((A.EVERYONE,), (A.FRIENDS_OF_FRIENDS,), ())
    advice = recommend_album_settings(query, [query] + others, k=3)
    assert advice.suggested is A.FRIENDS_OF_FRIENDS
    assert advice.albums[0].advice is AlbumAdvice.RESTRICT


def test_album_advice_without_neighbour_albums():
    query = make_user("q", albums=albums_of(A.EVERYONE))
    advice = recommend_album_settings(query, [query, make_user("a"), make_user("b")], k=2)
    assert advice.suggested is None
    assert advice.albums[0].advice is AlbumAdvice.KEEP_CURRENT
    assert "share no albums" in render_album_advice(advice)
    assert advice.to_dict()["suggested"] is None


def test_album_advice_for_hidden_education_fixture(hidden_education):
    advice = recommend_album_settings(hidden_education.by_id("alice"), hidden_education, k=3)
    assert advice.suggested is A.FRIENDS
    assert [(a.album_name, a.advice) for a in advice.albums] == [("Profile Pictures", AlbumAdvice.KEEP_CURRENT)]


def test_album_restrictions_only_tighten():
    rng = random.Random(42)
    for _ in range(500):
        users = []
        for i in range(rng.randint(4, 9)):
            user = random_user(rng, f"u{i}")
            albums = albums_of(*rng.choices(list(A), k=rng.randint(0, 4)))
            users.append(make_user(user.user_id, birth_year=user.profile.birth_year,
                                   gender=user.profile.gender, location=user.profile.location,
                                   albums=albums))
        advice = recommend_album_settings(users[0], users, k=rng.randint(1, len(users) - 1))
        for album in advice.albums:
            if album.advice is AlbumAdvice.RESTRICT:
                assert EXPOSURE[album.suggested] < EXPOSURE[album.current]
            else:
                assert album.suggested is None


users_strategy = st.builds(
    lambda seed, user_id: random_user(random.Random(seed), user_id),
    st.integers(min_value=0, max_value=10 ** 6),
    st.sampled_from(["x", "y", "z"]),
)
modes = st.sampled_from([DistanceConfig(), DistanceConfig(mode=DistanceMode.MIXED, age_range=35)])


@hypothesis_settings(max_examples=500, deadline=None)
@given(users_strategy, users_strategy, users_strategy, modes)
def test_distance_axioms(a, b, c, cfg):
    ab = pairwise_distance(a, b, cfg)
    assert 0 <= ab <= 1
    assert pairwise_distance(a, a, cfg) == 0
    assert ab == pytest.approx(pairwise_distance(b, a, cfg))
    assert pairwise_distance(a, c, cfg) <= ab + pairwise_distance(b, c, cfg) + 1e-12
