"""Reduced words in a free group.

A word is a tuple of nonzero ints: ``k + 1`` is generator ``k`` and
``-(k + 1)`` its inverse.
"""

from __future__ import annotations

Word = tuple


def reduce(word) -> Word:
    out: list[int] = []
    for x in word:
        if x == 0:
            raise ValueError("0 is not a letter")
        if out and out[-1] == -x:
            out.pop()
        else:
            out.append(x)
    return tuple(out)


def multiply(*words) -> Word:
    return reduce(tuple(x for w in words for x in w))


def concat_reduced(u: Word, v: Word) -> Word:
    """Product of two already reduced words (cancellation only at the seam)."""
    k = 0
    n = min(len(u), len(v))
    while k < n and u[-1 - k] == -v[k]:
        k += 1
    return u[:len(u) - k] + v[k:]


def inverse(word) -> Word:
    return tuple(-x for x in reversed(word))


def power(word, n: int) -> Word:
    if n < 0:
        return power(inverse(word), -n)
    return reduce(tuple(word) * n)


def cyclic_reduce(word) -> tuple[Word, Word]:
    """Split a reduced word as u * c * u^-1 with c cyclically reduced.

    Returns (c, u).
    """
    w = reduce(word)
    i = 0
    while len(w) - 2 * i >= 2 and w[i] == -w[len(w) - 1 - i]:
        i += 1
    return w[i:len(w) - i], w[:i]


def _min_rotation(w: Word) -> Word:
    if not w:
        return w
    return min(w[i:] + w[:i] for i in range(len(w)))


def conjugacy_key(word) -> Word:
    """Canonical representative of the conjugacy class (least rotation of the
    cyclic reduction, compared as int tuples)."""
    c, _ = cyclic_reduce(word)
    return _min_rotation(c)


def unoriented_conjugacy_key(word) -> Word:
    """Canonical representative of the class of word or its inverse."""
    return min(conjugacy_key(word), conjugacy_key(inverse(word)))


def primitive_root(word) -> tuple[Word, int]:
    """Return (r, k) with the cyclic reduction of word equal to r^k and k maximal."""
    c, _ = cyclic_reduce(word)
    n = len(c)
    for p in range(1, n + 1):
        if n % p == 0 and c[:p] * (n // p) == c:
            return c[:p], n // p
    return c, 1


def is_primitive_element(word) -> bool:
    """True when the word is not a proper power (root multiplicity 1)."""
    c, _ = cyclic_reduce(word)
    if not c:
        return False
    return primitive_root(word)[1] == 1


def shortlex_key(word):
    # order letters as 1, -1, 2, -2, ...
    return (len(word), tuple([2 * x - 1 if x > 0 else -2 * x for x in word]))


def to_string(word, names: str = "abcdefghijklmnopqrstuvwxyz") -> str:
    """Human-readable form: lowercase generators, uppercase inverses."""
    if not word:
        return "1"
    out = []
    for x in word:
        k = abs(x) - 1
        if k < len(names):
            ch = names[k]
            out.append(ch.upper() if x < 0 else ch)
        else:
            out.append(f"g{k}" + ("^-1" if x < 0 else ""))
    return "".join(out)
