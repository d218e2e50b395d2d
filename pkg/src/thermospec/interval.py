"""Outward-rounded endpoint arithmetic and the three-point bracket type.

Brackets are best-effort rigorous: every float endpoint that comes out of an
inexact operation is pushed one ulp outward.  ``mid`` is the value obtained
from representative points and is what solvers work with; ``lo``/``hi`` are
what certificates report.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

INF = math.inf


def down(x: float) -> float:
    return math.nextafter(x, -INF)


def up(x: float) -> float:
    return math.nextafter(x, INF)


def frac_down(q: Fraction) -> float:
    """Largest float not exceeding the rational ``q``."""
    x = float(q)
    if Fraction(x) > q:
        x = down(x)
    return x


def frac_up(q: Fraction) -> float:
    x = float(q)
    if Fraction(x) < q:
        x = up(x)
    return x


@dataclass(frozen=True)
class Bracket:
    lo: float
    mid: float
    hi: float

    def __post_init__(self):
        if not (self.lo <= self.mid <= self.hi):
            # tolerate representative points a hair outside rounded ends
            if self.lo - self.mid > 1e-12 * (1 + abs(self.mid)) or self.mid - self.hi > 1e-12 * (1 + abs(self.mid)):
                raise ValueError(f"malformed bracket {self.lo!r} <= {self.mid!r} <= {self.hi!r}")

    @classmethod
    def exact(cls, x: float) -> "Bracket":
        return cls(x, x, x)

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def contains(self, x: float, slack: float = 0.0) -> bool:
        return self.lo - slack <= x <= self.hi + slack

    def scale(self, c: float) -> "Bracket":
        if c >= 0:
            return Bracket(down(c * self.lo) if c * self.lo != 0 else 0.0, c * self.mid, up(c * self.hi) if c * self.hi != 0 else 0.0)
        return Bracket(down(c * self.hi), c * self.mid, up(c * self.lo))

    def __add__(self, other: "Bracket") -> "Bracket":
        return Bracket(down(self.lo + other.lo), self.mid + other.mid, up(self.hi + other.hi))

    def __sub__(self, other: "Bracket") -> "Bracket":
        return Bracket(down(self.lo - other.hi), self.mid - other.mid, up(self.hi - other.lo))

    def as_list(self) -> list[float]:
        return [self.lo, self.hi]

    def to_json(self) -> dict:
        return {"lo": self.lo, "mid": self.mid, "hi": self.hi}

    @classmethod
    def from_json(cls, d) -> "Bracket":
        return cls(d["lo"], d["mid"], d["hi"])


def weighted_sum(weights, brackets) -> Bracket:
    """Sum of w_i * B_i for nonnegative weights, outward rounded."""
    lo = math.fsum(w * b.lo for w, b in zip(weights, brackets))
    mid = math.fsum(w * b.mid for w, b in zip(weights, brackets))
    hi = math.fsum(w * b.hi for w, b in zip(weights, brackets))
    return Bracket(down(lo), mid, up(hi))
