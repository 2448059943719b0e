import functools

from schemes.keys import SchemeId, generate_keys

TEST_SEEDS = {
    SchemeId.RSA_SIGN: 7,
    SchemeId.PBKDF2_MAC: 7,
    SchemeId.AES_CIPHER: 7,
}


@functools.lru_cache(maxsize=None)
def sample_key(scheme):
    """Seeded key material shared by the test suites of all apps
    """
    scheme = SchemeId.parse(scheme)
    return generate_keys(scheme, rng_seed=TEST_SEEDS[scheme])


def all_sample_keys():
    return [sample_key(scheme) for scheme in SchemeId]
