"""Constrained integer partitions and partial Bell polynomials.

All coefficients are exact Python integers. Floating point only enters in
:func:`evaluate_bell`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

__all__ = [
    "PartitionTerm",
    "BellPolynomial",
    "enumerate_partitions",
    "bell_polynomial",
    "evaluate_bell",
    "apply_bell",
]


@dataclass(frozen=True)
class PartitionTerm:
    """One summand of B_{n,k}: multiplicities (j_1, ..., j_{n-k+1}) and its integer coefficient."""

    multiplicities: tuple[int, ...]
    coefficient: int

    @property
    def parts(self) -> int:
        return sum(self.multiplicities)

    @property
    def weight(self) -> int:
        return sum(i * j for i, j in enumerate(self.multiplicities, start=1))


@dataclass(frozen=True)
class BellPolynomial:
    n: int
    k: int
    terms: tuple[PartitionTerm, ...]

    @property
    def num_args(self) -> int:
        return self.n - self.k + 1

    def __len__(self) -> int:
        return len(self.terms)


def _check_nk(n: int, k: int) -> None:
    if not (isinstance(n, int) and isinstance(k, int)):
        raise TypeError("n and k must be integers")
    if n < 0 or k < 0:
        raise ValueError(f"n and k must be non-negative, got n={n}, k={k}")
    if k > n:
        raise ValueError(f"need k <= n, got n={n}, k={k}")


def _coefficient(n: int, mult: Sequence[int]) -> int:
    # n! / prod(j_i! * (i!)^{j_i}) by incremental integer arithmetic
    denom = 1
    for i, j in enumerate(mult, start=1):
        if j:
            denom *= math.factorial(j) * math.factorial(i) ** j
    num = math.factorial(n)
    coeff, rem = divmod(num, denom)
    assert rem == 0
    return coeff


def _multiplicity_vectors(i: int, size: int, total: int, parts: int):
    # choose j_i, ..., j_size; ascending j_i first gives lexicographic order
    if i > size:
        if total == 0 and parts == 0:
            yield ()
        return
    for j in range(min(parts, total // i) + 1):
        for tail in _multiplicity_vectors(i + 1, size, total - i * j, parts - j):
            yield (j,) + tail


@lru_cache(maxsize=None)
def enumerate_partitions(n: int, k: int) -> tuple[PartitionTerm, ...]:
    """All partition terms of B_{n,k}, lexicographic in the multiplicity vector.

    Parameters
    ----------
    n, k : int
        ``0 <= k <= n``.

    Returns
    -------
    tuple of PartitionTerm
        Each multiplicity vector has length ``n - k + 1`` and satisfies
        ``sum(j) == k`` and ``sum(i * j_i) == n``. ``(0, 0)`` yields one
        empty term with coefficient 1; ``(n, 0)`` with ``n >= 1`` yields none.
    """
    _check_nk(n, k)
    size = n - k + 1
    if k == 0:
        return (PartitionTerm((0,) * size, 1),) if n == 0 else ()
    return tuple(
        PartitionTerm(mult, _coefficient(n, mult))
        for mult in _multiplicity_vectors(1, size, n, k)
    )


@lru_cache(maxsize=None)
def bell_polynomial(n: int, k: int) -> BellPolynomial:
    return BellPolynomial(n, k, enumerate_partitions(n, k))


def apply_bell(B: BellPolynomial, values: Sequence, one=1):
    """Evaluate ``B`` over any commutative ring supporting ``*``, ``**`` and int scaling.

    ``values[i]`` stands for x_{i+1}. ``one`` is the multiplicative identity
    used for the empty product.
    """
    if len(values) < B.num_args:
        raise ValueError(
            f"B_{{{B.n},{B.k}}} needs {B.num_args} arguments, got {len(values)}"
        )
    total = None
    for term in B.terms:
        prod = one
        for x, j in zip(values, term.multiplicities):
            if j:
                prod = prod * x**j
        piece = prod * term.coefficient
        total = piece if total is None else total + piece
    if total is None:
        return one * 0
    return total


def evaluate_bell(B: BellPolynomial, values: Sequence[float]) -> float:
    """Numeric value of ``B`` at ``values`` (x_1, x_2, ...)."""
    if len(values) < B.num_args:
        raise ValueError(
            f"B_{{{B.n},{B.k}}} needs {B.num_args} arguments, got {len(values)}"
        )
    total = 0.0
    for term in B.terms:
        prod = float(term.coefficient)
        for x, j in zip(values, term.multiplicities):
            if j:
                prod *= float(x) ** j
        total += prod
    return total
