"""Graded Laurent-monomial basis ``t^a x^b`` for the tangent-field expansions.

Both components of the symmetry generator are expanded in the same family
of monomials.  Powers may be negative (a Laurent basis) behind a flag;
samples that would evaluate a negative power at a zero base raise
:class:`PoleError` so the caller can exclude that row instead of aborting.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, NamedTuple

__all__ = ["MultiIndex", "BasisSpec", "PoleError", "enumerate_basis", "eval_monomial", "eval_partials"]


class PoleError(ValueError):
    """A monomial with a negative power was evaluated at a zero base."""


class MultiIndex(NamedTuple):
    """Integer powers of a monomial ``t^a x^b``."""

    a: int
    b: int


@dataclass(frozen=True)
class BasisSpec:
    """Ordered monomial basis.

    Indices are in graded order: total degree ``|a| + |b|`` first, then
    ``a``, then ``b``.  Growing the maximum degree appends new indices and
    never reorders existing ones, so coefficient positions are stable
    across basis growth.
    """

    indices: tuple[MultiIndex, ...]
    max_degree: int
    allow_negative: bool = False

    def __post_init__(self):
        if not self.indices:
            raise ValueError("basis must contain at least one monomial")
        if len(set(self.indices)) != len(self.indices):
            raise ValueError("duplicate monomials in basis")
        if list(self.indices) != sorted(self.indices, key=_graded_key):
            raise ValueError("basis indices are not in graded order")

    def __len__(self) -> int:
        return len(self.indices)

    def __iter__(self) -> Iterator[MultiIndex]:
        return iter(self.indices)

    def to_json(self) -> list[list[int]]:
        return [[idx.a, idx.b] for idx in self.indices]


def _graded_key(idx: MultiIndex):
    return (abs(idx.a) + abs(idx.b), idx.a, idx.b)


def enumerate_basis(max_degree: int, allow_negative: bool = False) -> BasisSpec:
    """All monomials with ``|a| + |b| <= max_degree`` in graded order.

    With ``allow_negative`` false the powers are restricted to ``a, b >= 0``.
    """
    if max_degree < 0:
        raise ValueError("max_degree must be >= 0")
    lo = -max_degree if allow_negative else 0
    indices = [
        MultiIndex(a, b)
        for a in range(lo, max_degree + 1)
        for b in range(lo, max_degree + 1)
        if abs(a) + abs(b) <= max_degree
    ]
    indices.sort(key=_graded_key)
    return BasisSpec(indices=tuple(indices), max_degree=max_degree, allow_negative=allow_negative)


def _int_pow(base: float, power: int) -> float:
    """base**power by repeated multiplication; poles raise."""
    if power == 0:
        return 1.0
    if base == 0.0 and power < 0:
        raise PoleError(f"0.0 raised to negative power {power}")
    out = 1.0
    for _ in range(abs(power)):
        out *= base
    return out if power > 0 else 1.0 / out


def eval_monomial(idx: MultiIndex, t: float, x: float) -> float:
    """Value of ``t^a x^b`` at (t, x).

    Raises
    ------
    PoleError
        If a negative power meets a zero base; the caller should drop the
        sample rather than propagate the error.
    """
    return _int_pow(t, idx.a) * _int_pow(x, idx.b)


def eval_partials(idx: MultiIndex, t: float, x: float) -> tuple[float, float]:
    """Exact partial derivatives ``(d/dt, d/dx)`` of ``t^a x^b`` at (t, x).

    Terms with a zero power have an identically zero derivative and never
    touch the shifted-power pole.
    """
    a, b = idx
    if a == 0:
        d_dt = 0.0
    else:
        d_dt = a * _int_pow(t, a - 1) * _int_pow(x, b)
    if b == 0:
        d_dx = 0.0
    else:
        d_dx = b * _int_pow(t, a) * _int_pow(x, b - 1)
    return d_dt, d_dx
