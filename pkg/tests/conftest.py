import pytest

from atckit.callsign import default_telephony_lexicon
from atckit.classifier import default_role_lexicon


@pytest.fixture(scope="session")
def telephony():
    return default_telephony_lexicon()


@pytest.fixture(scope="session")
def role_lexicon():
    return default_role_lexicon()
