"""Small helpers for sets of naturals stored as Python ints."""

from typing import Iterable, Iterator


def mask_of(points: Iterable[int]) -> int:
    m = 0
    for p in points:
        if p < 0:
            raise ValueError(f"negative position {p}")
        m |= 1 << p
    return m


def bits_of(mask: int) -> Iterator[int]:
    """Yield the set positions of `mask` in increasing order."""
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def points_of(mask: int) -> list[int]:
    return list(bits_of(mask))


def lowest(mask: int) -> int:
    return (mask & -mask).bit_length() - 1


def full(n: int) -> int:
    return (1 << n) - 1


def submasks(mask: int) -> Iterator[int]:
    """Nonempty submasks of `mask`, in increasing numeric order."""
    pts = points_of(mask)
    for code in range(1, 1 << len(pts)):
        sub = 0
        for i, p in enumerate(pts):
            if code >> i & 1:
                sub |= 1 << p
        yield sub
