from django.core.management.utils import get_random_secret_key


def generate_secret_key():
    """Secret key used for sessions and for signing django-q task packages
    """
    return get_random_secret_key()
