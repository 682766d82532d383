"""GF(2) vectors packed into Python ints, and row-reduced spans of them.

A packet expression is an int whose bit ``f`` is set iff the native packet of
flow ``f`` is XORed in. A span is stored as a tuple of basis vectors in
reduced row echelon form, sorted by descending leading bit, so equal spans
have equal tuples and can be used directly as dictionary keys.
"""

from __future__ import annotations

from itertools import combinations

Span = tuple[int, ...]

EMPTY: Span = ()


def reduce(basis: Span, v: int) -> int:
    for b in basis:
        if v & _lead(b):
            v ^= b
    return v


def contains(basis: Span, v: int) -> bool:
    return reduce(basis, v) == 0


def add(basis: Span, v: int) -> Span:
    """Return the span of ``basis`` plus ``v`` in canonical form."""
    v = reduce(basis, v)
    if v == 0:
        return basis
    lead = _lead(v)
    rows = [b ^ v if b & lead else b for b in basis]
    rows.append(v)
    rows.sort(reverse=True)
    return tuple(rows)


def span_of(vectors) -> Span:
    basis = EMPTY
    for v in vectors:
        basis = add(basis, v)
    return basis


def elements(basis: Span) -> list[int]:
    """All nonzero members of the span, in increasing bit-pattern order."""
    out = []
    n = len(basis)
    for mask in range(1, 1 << n):
        v = 0
        for i in range(n):
            if mask >> i & 1:
                v ^= basis[i]
        out.append(v)
    out.sort()
    return out


def is_subspace(small: Span, big: Span) -> bool:
    return all(contains(big, v) for v in small)


def rank(vectors) -> int:
    return len(span_of(vectors))


def weight(v: int) -> int:
    return bin(v).count("1")


def unit(i: int) -> int:
    return 1 << i


def _lead(v: int) -> int:
    return 1 << (v.bit_length() - 1)


def format_expression(v: int, names) -> str:
    """Render ``v`` as ``A+C`` style text using per-coordinate ``names``."""
    if v == 0:
        return "0"
    return "+".join(names[i] for i in range(len(names)) if v >> i & 1)


def parse_expression(text: str, names) -> int:
    text = text.strip()
    if text in ("", "0"):
        return 0
    index = {n: i for i, n in enumerate(names)}
    v = 0
    for token in text.replace("^", "+").split("+"):
        token = token.strip()
        if token not in index:
            raise ValueError(f"unknown packet {token!r}")
        v ^= 1 << index[token]
    return v


def xor_all(values) -> int:
    out = 0
    for v in values:
        out ^= v
    return out


def pairs(items):
    return combinations(items, 2)


def support(basis: Span) -> int:
    """Coordinates that occur in at least one member of the span."""
    out = 0
    for b in basis:
        out |= b
    return out
