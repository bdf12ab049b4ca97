from pathlib import Path
from typing import Iterable, Optional

import pytest

from src.config.settings import PROJECT_ROOT, Settings
from src.core.categorize import LabeledUser
from src.core.ingest import Dataset, NormalizationDictionary, parse_profiles
from src.core.profile_model import (
    AlbumPrivacyValue,
    Gender,
    InterestItem,
    PhotoAlbum,
    PrivacyCategory,
    UserProfile,
    UserVector,
    build_vector,
)

FIXTURES = Path(__file__).parent / "fixtures"

ADELE = InterestItem("adele", "Musician band", "Adele")
FRIENDS_SHOW = InterestItem("friends", "TV show", "Friends")


def make_user(user_id: str,
              birth_year: int = 1983,
              interests: Iterable[InterestItem] = (),
              albums: Iterable[PhotoAlbum] = (),
              **fields) -> UserVector:
    return build_vector(UserProfile(user_id=user_id, birth_year=birth_year, **fields), interests, albums)


def albums_of(*privacies: AlbumPrivacyValue) -> list:
    return [PhotoAlbum(f"album {i}", p) for i, p in enumerate(privacies)]


def load_fixture(name: str, dictionary: NormalizationDictionary, reference_year: int = 2013) -> Dataset:
    folder = FIXTURES / name
    return parse_profiles(folder / "profiles.csv", folder / "interests.csv", folder / "albums.csv",
                          dictionary, reference_year)


def fixture_args(name: str) -> list:
    folder = FIXTURES / name
    return ["--profiles", str(folder / "profiles.csv"),
            "--interests", str(folder / "interests.csv"),
            "--albums", str(folder / "albums.csv")]


@pytest.fixture
def dictionary() -> NormalizationDictionary:
    return NormalizationDictionary.load(PROJECT_ROOT / "config" / "normalization.json")


@pytest.fixture
def album_mix(dictionary) -> Dataset:
    return load_fixture("album_mix", dictionary)


@pytest.fixture
def hidden_education(dictionary) -> Dataset:
    return load_fixture("hidden_education", dictionary)


@pytest.fixture
def album_report(dictionary) -> Dataset:
    return load_fixture("album_report", dictionary)


@pytest.fixture
def settings():
    s = Settings()
    yield s
    s.reload()


def _age_tree_user(user_id: str, age: int, gender: Gender, interest: Optional[InterestItem]) -> UserVector:
    return make_user(user_id, birth_year=2013 - age, gender=gender,
                     interests=[interest] if interest else [])


@pytest.fixture
def age_gender_interest_users() -> list:
    """36 labeled users where age, then gender, then two interests decide the category.

    Under 21 (ages 18 to 20): Unconcerned. From 21 up, women are Pragmatic and men are
    Pragmatic with Adele, Fundamentalist with Friends and Unconcerned otherwise.
    """
    users = []
    for i, age in enumerate([18, 19, 20] * 4):
        gender = Gender.FEMALE if i % 2 == 0 else Gender.MALE
        users.append(LabeledUser(_age_tree_user(f"y{i:02d}", age, gender, None), PrivacyCategory.UNCONCERNED))
    groups = [
        ("fa", Gender.FEMALE, ADELE, PrivacyCategory.PRAGMATIC),
        ("ff", Gender.FEMALE, FRIENDS_SHOW, PrivacyCategory.PRAGMATIC),
        ("fn", Gender.FEMALE, None, PrivacyCategory.PRAGMATIC),
        ("ma", Gender.MALE, ADELE, PrivacyCategory.PRAGMATIC),
        ("mf", Gender.MALE, FRIENDS_SHOW, PrivacyCategory.FUNDAMENTALIST),
        ("mn", Gender.MALE, None, PrivacyCategory.UNCONCERNED),
    ]
    for prefix, gender, interest, category in groups:
        for age in (21, 24, 26, 28):
            users.append(LabeledUser(_age_tree_user(f"{prefix}{age}", age, gender, interest), category))
    return users

