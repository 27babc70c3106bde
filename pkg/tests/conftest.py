import pytest

from enckf import phe
from enckf.coins import CoinStream


@pytest.fixture(scope="session")
def toy_keys():
    """n = 35: small enough for exhaustive plaintext-space oracles."""
    return phe.keypair_from_primes(5, 7)


@pytest.fixture(scope="session")
def keys_256():
    return phe.keygen(256, CoinStream("fixture-256", "keygen"))


@pytest.fixture(scope="session")
def keys_512():
    return phe.keygen(512, CoinStream("fixture-512", "keygen"))


@pytest.fixture()
def enc_coins():
    return CoinStream("test-enc", "encryption-randomness")
