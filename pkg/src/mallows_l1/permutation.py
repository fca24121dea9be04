"""Permutations of [n] = {1, ..., n} and the statistics built on them.

A permutation sigma is stored by its one-based image vector
(sigma(1), ..., sigma(n)): place j holds symbol sigma(j).  All public
indices (places, symbols, cycle elements) are one-based.  The text format
is a single line of space-separated images, e.g. "2 3 1".
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

__all__ = [
    "Permutation",
    "ModelParams",
    "l1_distance",
    "cycle_containing",
    "cycle_decomposition",
    "reverse_conjugate",
    "displacement_count",
    "quadrant_count",
]


class Permutation:
    """An immutable bijection of [n], held as a one-based image array."""

    __slots__ = ("_images",)

    def __init__(self, images: Iterable[int], _validate: bool = True):
        arr = np.asarray(list(images) if not isinstance(images, np.ndarray) else images,
                         dtype=np.int64).copy()
        if _validate:
            if arr.ndim != 1 or arr.size < 1:
                raise ValueError("a permutation needs at least one image")
            n = arr.size
            seen = np.zeros(n, dtype=bool)
            for v in arr:
                if not 1 <= v <= n:
                    raise ValueError(f"image {v} outside [1, {n}]")
                if seen[v - 1]:
                    raise ValueError(f"image {v} repeated: not a bijection")
                seen[v - 1] = True
        arr.setflags(write=False)
        self._images = arr

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        if n < 1:
            raise ValueError("n must be >= 1")
        return cls(np.arange(1, n + 1, dtype=np.int64), _validate=False)

    @classmethod
    def from_text(cls, line: str) -> "Permutation":
        """Parse the one-line text format ("2 3 1").  Rejects non-bijections."""
        parts = line.split()
        if not parts:
            raise ValueError("empty permutation line")
        try:
            images = [int(p) for p in parts]
        except ValueError as exc:
            raise ValueError(f"bad permutation line {line!r}") from exc
        return cls(images)

    def to_text(self) -> str:
        return " ".join(str(v) for v in self._images)

    @property
    def n(self) -> int:
        return self._images.size

    @property
    def images(self) -> np.ndarray:
        """Read-only one-based image array (sigma(1), ..., sigma(n))."""
        return self._images

    def __call__(self, j: int) -> int:
        if not 1 <= j <= self.n:
            raise ValueError(f"index {j} outside [1, {self.n}]")
        return int(self._images[j - 1])

    def inverse(self) -> "Permutation":
        inv = np.empty(self.n, dtype=np.int64)
        inv[self._images - 1] = np.arange(1, self.n + 1)
        return Permutation(inv, _validate=False)

    def compose(self, other: "Permutation") -> "Permutation":
        """Return self after other: j -> self(other(j))."""
        if other.n != self.n:
            raise ValueError("size mismatch in composition")
        return Permutation(self._images[other._images - 1], _validate=False)

    def as_tuple(self) -> tuple[int, ...]:
        return tuple(int(v) for v in self._images)

    def __eq__(self, other) -> bool:
        return isinstance(other, Permutation) and np.array_equal(self._images, other._images)

    def __hash__(self) -> int:
        return hash(self.as_tuple())

    def __repr__(self) -> str:
        return f"Permutation({self.to_text()!r})"


@dataclass(frozen=True)
class ModelParams:
    """Size n and scale parameter beta > 0 of the L1 permutation model."""

    n: int
    beta: float

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be a positive integer")
        if not self.beta > 0:
            raise ValueError(f"beta must be strictly positive, got {self.beta}")


def l1_distance(sigma: Permutation, tau: Permutation) -> int:
    """Sum of |sigma(j) - tau(j)| over places j (Spearman's footrule)."""
    if sigma.n != tau.n:
        raise ValueError(f"size mismatch: {sigma.n} vs {tau.n}")
    return int(np.abs(sigma.images - tau.images).sum())


def cycle_containing(sigma: Permutation, s: int) -> frozenset[int]:
    """The set of points on the cycle of sigma through s."""
    if not 1 <= s <= sigma.n:
        raise ValueError(f"index {s} outside [1, {sigma.n}]")
    images = sigma.images
    orbit = [s]
    j = int(images[s - 1])
    while j != s:
        orbit.append(j)
        j = int(images[j - 1])
    return frozenset(orbit)


def cycle_decomposition(sigma: Permutation) -> list[tuple[int, ...]]:
    """Disjoint cycles covering [n], each starting at its minimum element.

    Within a cycle the successor of j is sigma(j); cycles are sorted by
    their minimum, so the output is deterministic.
    """
    images = sigma.images
    n = sigma.n
    seen = np.zeros(n + 1, dtype=bool)
    cycles = []
    for start in range(1, n + 1):
        if seen[start]:
            continue
        orbit = [start]
        seen[start] = True
        j = int(images[start - 1])
        while j != start:
            orbit.append(j)
            seen[j] = True
            j = int(images[j - 1])
        cycles.append(tuple(orbit))
    return cycles


def reverse_conjugate(sigma: Permutation) -> Permutation:
    """The reversal image sigma_bar(j) = n + 1 - sigma(n + 1 - j).

    An involution on S_n that preserves the L1 distance to the identity;
    the model distribution is invariant under it.
    """
    return Permutation(sigma.n + 1 - sigma.images[::-1], _validate=False)


def displacement_count(sigma: Permutation, j: int) -> tuple[int, int]:
    """Sizes of the two level-j displacement sets, counted independently.

    The first component counts places k <= j holding a symbol >= j + 1,
    the second counts places k >= j + 1 holding a symbol <= j.  The two
    are always equal; callers may rely on that, tests verify it.
    j = 0 is allowed and yields (0, 0).
    """
    if not 0 <= j <= sigma.n:
        raise ValueError(f"level {j} outside [0, {sigma.n}]")
    images = sigma.images
    d = int(np.count_nonzero(images[:j] >= j + 1))
    d_prime = int(np.count_nonzero(images[j:] <= j))
    return d, d_prime


def quadrant_count(sigma: Permutation, j: int, delta: float) -> tuple[int, int]:
    """Graph points of sigma in the two closed quadrants at offset delta.

    Counts (x, sigma(x)) with x >= j + delta and sigma(x) <= j - delta,
    and the mirror count with x <= j - delta and sigma(x) >= j + delta.
    """
    if not 1 <= j <= sigma.n:
        raise ValueError(f"index {j} outside [1, {sigma.n}]")
    if not delta > 0:
        raise ValueError(f"delta must be positive, got {delta}")
    images = sigma.images
    x = np.arange(1, sigma.n + 1)
    r = int(np.count_nonzero((x >= j + delta) & (images <= j - delta)))
    r_prime = int(np.count_nonzero((x <= j - delta) & (images >= j + delta)))
    return r, r_prime
