import functools

import pytest

from orthospec.covers import build_special_X, cover_family
from orthospec.ortho_enum import ortho_spectrum
from orthospec.surfaces import build_one_holed_torus, build_pants


@functools.lru_cache(maxsize=None)
def pants(l1, l2, l3):
    return build_pants(l1, l2, l3)


@functools.lru_cache(maxsize=None)
def torus(la, tw, lg):
    return build_one_holed_torus(la, tw, lg)


@functools.lru_cache(maxsize=None)
def special_X(n, lg=2.0):
    return build_special_X(n, lg)


@functools.lru_cache(maxsize=None)
def cover(k, m, lg=2.0):
    return cover_family(k, m, special_X(2 ** k, lg))


@functools.lru_cache(maxsize=None)
def spectrum(kind, args, L, **kw):
    src = {"pants": pants, "torus": torus, "cover": cover, "X": special_X}[kind]
    return ortho_spectrum(src(*args), L, **kw)


@pytest.fixture(scope="session")
def p222():
    return pants(2.0, 2.0, 2.0)


@pytest.fixture(scope="session")
def t_ref():
    return torus(1.0, 0.3, 2.5)
