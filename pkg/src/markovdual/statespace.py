"""Finite configuration spaces and symmetric site graphs."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence

DEFAULT_BUDGET = 2 ** 20


class BudgetError(RuntimeError):
    """Raised when an enumeration or linear system exceeds its size budget."""


@dataclass(frozen=True)
class ConfigSpace:
    """Product space ``{0..local-1}^sites``, optionally cut to one sector.

    ``local`` is 2 for ``{0,1}`` and ``cap + 1`` for ``N`` truncated at
    ``cap``.  Configurations are tuples and are enumerated in lexicographic
    order; ``index`` inverts the enumeration.
    """

    sites: int
    local: int
    total: Optional[int] = None
    budget: int = DEFAULT_BUDGET
    _configs: tuple = field(init=False, repr=False, compare=False)
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.sites < 0 or self.local < 1:
            raise ValueError("need sites >= 0 and local cardinality >= 1")
        full = self.local ** self.sites
        if full > self.budget and self.total is None:
            raise BudgetError(f"{full} states exceed budget {self.budget}")
        if self.total is None:
            configs = tuple(itertools.product(range(self.local), repeat=self.sites))
        else:
            if self.total < 0:
                raise ValueError("sector total must be >= 0")
            configs = tuple(_sector_configs(self.sites, self.local - 1, self.total))
            if not configs:
                raise ValueError(
                    f"empty sector: total {self.total} on {self.sites} sites "
                    f"with cap {self.local - 1}")
            if len(configs) > self.budget:
                raise BudgetError(f"{len(configs)} states exceed budget {self.budget}")
        object.__setattr__(self, "_configs", configs)
        object.__setattr__(self, "_index", {c: k for k, c in enumerate(configs)})

    @classmethod
    def binary(cls, sites: int, **kw) -> "ConfigSpace":
        return cls(sites, 2, **kw)

    @classmethod
    def capped(cls, sites: int, cap: int, total: Optional[int] = None, **kw) -> "ConfigSpace":
        return cls(sites, cap + 1, total, **kw)

    @property
    def cap(self) -> int:
        return self.local - 1

    def __len__(self):
        return len(self._configs)

    def __iter__(self):
        return iter(self._configs)

    def __contains__(self, config):
        return tuple(config) in self._index

    def enumerate(self) -> tuple:
        return self._configs

    def config(self, k: int) -> tuple:
        return self._configs[k]

    def index(self, config: Sequence[int]) -> int:
        return self._index[tuple(config)]

    def get_index(self, config: Sequence[int]) -> Optional[int]:
        return self._index.get(tuple(config))

    def sector(self, total: int) -> "ConfigSpace":
        if self.total is not None and self.total != total:
            raise ValueError("space is already restricted to another sector")
        return ConfigSpace(self.sites, self.local, total, self.budget)


def _sector_configs(sites: int, cap: int, total: int):
    # lexicographic order without materializing the full product space
    if sites == 0:
        if total == 0:
            yield ()
        return
    for first in range(0, min(cap, total) + 1):
        if total - first > cap * (sites - 1):
            continue
        for rest in _sector_configs(sites - 1, cap, total - first):
            yield (first,) + rest


def enumerate_space(space: ConfigSpace) -> tuple:
    return space.enumerate()


def sector(space: ConfigSpace, total: int) -> ConfigSpace:
    return space.sector(total)


class SiteGraph:
    """Symmetric nonnegative rate table ``q(i, j)`` with zero diagonal."""

    def __init__(self, n: int, rates: Optional[dict] = None):
        self.n = n
        self._q: dict = {}
        for (i, j), r in (rates or {}).items():
            self.set(i, j, r)

    def set(self, i: int, j: int, rate) -> None:
        if not (0 <= i < self.n and 0 <= j < self.n):
            raise ValueError(f"site pair ({i}, {j}) out of range")
        if i == j:
            raise ValueError("self-loops are not allowed (q(i,i) must be 0)")
        rate = Fraction(rate)
        if rate < 0:
            raise ValueError(f"negative rate q({i},{j}) = {rate}")
        key = (min(i, j), max(i, j))
        if rate == 0:
            self._q.pop(key, None)
        else:
            self._q[key] = rate

    def q(self, i: int, j: int) -> Fraction:
        if i == j:
            return Fraction(0)
        return self._q.get((min(i, j), max(i, j)), Fraction(0))

    def edges(self) -> list:
        """Unordered pairs ``(i, j, rate)`` with ``i < j`` and positive rate."""
        return [(i, j, r) for (i, j), r in sorted(self._q.items())]

    def ordered_pairs(self) -> Iterable:
        for i, j, r in self.edges():
            yield i, j, r
            yield j, i, r

    @classmethod
    def complete(cls, n: int, rate=1) -> "SiteGraph":
        return cls(n, {(i, j): rate for i in range(n) for j in range(i + 1, n)})

    @classmethod
    def cycle(cls, n: int, rate=1) -> "SiteGraph":
        if n < 3:
            return cls.path(n, rate)
        return cls(n, {(i, (i + 1) % n): rate for i in range(n)})

    @classmethod
    def path(cls, n: int, rate=1) -> "SiteGraph":
        return cls(n, {(i, i + 1): rate for i in range(n - 1)})

    @classmethod
    def preset(cls, name: str, n: int, rate=1) -> "SiteGraph":
        try:
            return {"complete": cls.complete, "cycle": cls.cycle, "path": cls.path}[name](n, rate)
        except KeyError:
            raise ValueError(f"unknown graph preset {name!r}") from None

    def __repr__(self):
        return f"SiteGraph({self.n}, {dict(self._q)})"
