"""Symbolic expansion coefficients of the transport map.

The coefficient functions g_k (in ratios of derivatives of the signal CDF F)
and h_k (in ratios of derivatives of the observation CDF G) are polynomials in
the score ratios ``r_m = D^m / D^1`` with exact rational coefficients.  They
are produced here from the Bell-polynomial recursions and then evaluated
numerically against any ratio stack.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb
from typing import Iterable, Mapping, Sequence

from .combinatorics import apply_bell, bell_polynomial

__all__ = [
    "DEFAULT_MAX_ORDER",
    "ScoreRatioPoly",
    "DenoiserSeries",
    "derive_g_sequence",
    "derive_h_sequence",
    "h_recursion_lhs",
    "verify_recursion_residual",
    "closed_form_h",
    "evaluate_series",
    "h_series",
    "g_series",
    "dump_polynomials",
]

DEFAULT_MAX_ORDER = 6

Monomial = tuple  # sorted tuple of ratio indices >= 2


def _merge(a: Monomial, b: Monomial) -> Monomial:
    return tuple(sorted(a + b))


class ScoreRatioPoly:
    """Polynomial in score ratios r_2, r_3, ... with rational coefficients.

    ``r_1`` is identically one and never appears in a monomial.  Instances are
    treated as immutable; arithmetic returns new objects.
    """

    __slots__ = ("side", "_terms")

    def __init__(self, terms: Mapping[Monomial, Fraction] | None = None, side: str = "G"):
        if side not in ("F", "G"):
            raise ValueError(f"side must be 'F' or 'G', got {side!r}")
        self.side = side
        clean = {}
        for mono, c in (terms or {}).items():
            mono = tuple(sorted(m for m in mono if m != 1))
            if any(m < 1 for m in mono):
                raise ValueError(f"ratio indices must be >= 1, got {mono}")
            c = Fraction(c)
            if c:
                clean[mono] = clean.get(mono, Fraction(0)) + c
        self._terms = {
            m: clean[m] for m in sorted(clean, key=lambda m: (len(m), m)) if clean[m]
        }

    @classmethod
    def ratio(cls, m: int, side: str = "G") -> "ScoreRatioPoly":
        if m < 1:
            raise ValueError("ratio index must be >= 1")
        return cls({(m,): 1}, side)

    @classmethod
    def constant(cls, c, side: str = "G") -> "ScoreRatioPoly":
        return cls({(): c}, side)

    @property
    def terms(self) -> dict:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def is_zero(self) -> bool:
        return not self._terms

    def indices(self) -> set[int]:
        return {m for mono in self._terms for m in mono}

    def max_index(self) -> int:
        return max(self.indices(), default=1)

    def gradings(self) -> set[int]:
        """Set of sum(m - 1) over each monomial's indices."""
        return {sum(m - 1 for m in mono) for mono in self._terms}

    # arithmetic

    def _coerce(self, other) -> "ScoreRatioPoly":
        if isinstance(other, ScoreRatioPoly):
            if other.side != self.side:
                raise ValueError("cannot combine polynomials on different sides")
            return other
        if isinstance(other, (int, Fraction)):
            return ScoreRatioPoly.constant(other, self.side)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out = dict(self._terms)
        for mono, c in other._terms.items():
            out[mono] = out.get(mono, Fraction(0)) + c
        return ScoreRatioPoly(out, self.side)

    __radd__ = __add__

    def __neg__(self):
        return ScoreRatioPoly({m: -c for m, c in self._terms.items()}, self.side)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return ScoreRatioPoly({m: c * other for m, c in self._terms.items()}, self.side)
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out: dict = {}
        for ma, ca in self._terms.items():
            for mb, cb in other._terms.items():
                mono = _merge(ma, mb)
                out[mono] = out.get(mono, Fraction(0)) + ca * cb
        return ScoreRatioPoly(out, self.side)

    __rmul__ = __mul__

    def __pow__(self, p: int):
        if not isinstance(p, int) or p < 0:
            raise ValueError("only non-negative integer powers are supported")
        result = ScoreRatioPoly.constant(1, self.side)
        base = self
        while p:
            if p & 1:
                result = result * base
            base = base * base
            p >>= 1
        return result

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = ScoreRatioPoly.constant(other, self.side)
        if not isinstance(other, ScoreRatioPoly):
            return NotImplemented
        return self.side == other.side and list(self._terms.items()) == list(other._terms.items())

    def __hash__(self):
        return hash((self.side, tuple(self._terms.items())))

    # evaluation / display

    def evaluate(self, ratios):
        """Numeric value given ``ratios[m] = r_m``.

        ``ratios`` may be a mapping or a sequence indexed by ``m``; entries may
        be floats or numpy arrays (evaluated elementwise).
        """
        total = 0.0
        for mono, c in self._terms.items():
            prod = float(c)
            for m in mono:
                try:
                    prod = prod * ratios[m]
                except (KeyError, IndexError):
                    raise KeyError(f"missing score ratio r_{m}") from None
            total = total + prod
        return total

    def __str__(self):
        if not self._terms:
            return "0"
        pieces = []
        for mono, c in self._terms.items():
            factors = []
            for m in sorted(set(mono)):
                e = mono.count(m)
                factors.append(f"r{m}" + (f"^{e}" if e > 1 else ""))
            body = "*".join(factors)
            mag = abs(c)
            if not body:
                s = str(mag)
            elif mag == 1:
                s = body
            else:
                s = f"{mag}*{body}"
            pieces.append(("-" if c < 0 else "+", s))
        head_sign, head = pieces[0]
        out = ("-" if head_sign == "-" else "") + head
        for sign, s in pieces[1:]:
            out += f" {sign} {s}"
        return out

    def __repr__(self):
        return f"ScoreRatioPoly[{self.side}]({self})"

    def to_json(self) -> list[dict]:
        return [
            {"monomial": list(mono), "coefficient": str(c)} for mono, c in self._terms.items()
        ]

    @classmethod
    def from_json(cls, data: Iterable[dict], side: str = "G") -> "ScoreRatioPoly":
        return cls({tuple(d["monomial"]): Fraction(d["coefficient"]) for d in data}, side)


def _bell_sym(n: int, k: int, args: Sequence[ScoreRatioPoly], side: str) -> ScoreRatioPoly:
    B = bell_polynomial(n, k)
    one = ScoreRatioPoly.constant(1, side)
    return apply_bell(B, list(args)[: B.num_args], one=one)


def _check_order(K: int, max_order: int) -> None:
    if K < 1:
        raise ValueError(f"order must be >= 1, got {K}")
    if K > max_order:
        raise ValueError(f"order {K} exceeds max_order={max_order}")


@lru_cache(maxsize=None)
def _g_cached(K: int) -> tuple[ScoreRatioPoly, ...]:
    r = lambda m: ScoreRatioPoly.ratio(m, "F")  # noqa: E731
    gs = [r(2)]
    for k in range(2, K + 1):
        acc = r(2 * k)
        for j in range(2, k + 1):
            acc = acc - r(j) * _bell_sym(k, j, gs, "F")
        gs.append(acc)
    return tuple(gs)


def derive_g_sequence(K: int, max_order: int = DEFAULT_MAX_ORDER) -> tuple[ScoreRatioPoly, ...]:
    """g_1..g_K as polynomials in r_m = F^{(m)}/F^{(1)}.

    ``g_1 = r_2`` and for ``k >= 2``
    ``g_k = r_{2k} - sum_{j=2}^{k} r_j B_{k,j}(g_1, ..., g_{k-j+1})``.
    """
    _check_order(K, max_order)
    return _g_cached(K)


def h_recursion_lhs(h_polys: Sequence[ScoreRatioPoly], k: int) -> ScoreRatioPoly:
    """Left-hand side of the order-k defining equation, divided through by G^{(1)}.

    sum_{l=0}^{k-1} (-1)^l C(k,l) sum_{j=1}^{k-l} r_{2l+j} B_{k-l,j}(h_1..)
    + (-1)^k r_{2k}
    """
    if len(h_polys) < k:
        raise ValueError(f"need h_1..h_{k}, got {len(h_polys)} polynomials")
    r = lambda m: ScoreRatioPoly.ratio(m, "G")  # noqa: E731
    total = r(2 * k) * (-1) ** k
    for l in range(k):
        inner = ScoreRatioPoly(side="G")
        for j in range(1, k - l + 1):
            inner = inner + r(2 * l + j) * _bell_sym(k - l, j, h_polys, "G")
        total = total + inner * ((-1) ** l * comb(k, l))
    return total


@lru_cache(maxsize=None)
def _h_cached(K: int) -> tuple[ScoreRatioPoly, ...]:
    hs: list[ScoreRatioPoly] = []
    zero = ScoreRatioPoly(side="G")
    for k in range(1, K + 1):
        # the only h_k contribution is r_1 * B_{k,1}(...) = h_k; solve with h_k = 0
        rest = h_recursion_lhs(hs + [zero], k)
        hs.append(-rest)
    return tuple(hs)


def derive_h_sequence(K: int, max_order: int = DEFAULT_MAX_ORDER) -> tuple[ScoreRatioPoly, ...]:
    """h_1..h_K as polynomials in r_m = G^{(m)}/G^{(1)} = q^{(m-1)}/q."""
    _check_order(K, max_order)
    return _h_cached(K)


def verify_recursion_residual(h_polys: Sequence[ScoreRatioPoly], k: int) -> ScoreRatioPoly:
    """Residual of the order-k equation with the supplied h's; zero when they solve it."""
    return h_recursion_lhs(h_polys, k)


def closed_form_h(k: int, h_polys: Sequence[ScoreRatioPoly]) -> ScoreRatioPoly:
    """Explicit single-sum expression for h_k in terms of h_1..h_{k-1}.

    Used only as a cross-check against :func:`derive_h_sequence`.
    """
    if k < 1 or len(h_polys) < k - 1:
        raise ValueError("closed form needs h_1..h_{k-1}")
    r = lambda m: ScoreRatioPoly.ratio(m, "G")  # noqa: E731
    hs = list(h_polys[: k - 1])
    out = -r(2 * k) * (-1) ** k
    for i in range(1, k):
        for j in range(i):
            out = out - r(2 * k - i - j) * _bell_sym(i, i - j, hs, "G") * (
                (-1) ** (k - i) * comb(k, i)
            )
    for j in range(k - 1):
        out = out - r(k - j) * _bell_sym(k, k - j, hs, "G")
    return out


@dataclass(frozen=True)
class DenoiserSeries:
    side: str
    order: int
    coefficient_polys: tuple[ScoreRatioPoly, ...]

    def __post_init__(self):
        if len(self.coefficient_polys) != self.order:
            raise ValueError("need exactly one coefficient polynomial per order")
        if self.side not in ("F", "G"):
            raise ValueError("side must be 'F' or 'G'")

    def required_ratios(self) -> int:
        return max((p.max_index() for p in self.coefficient_polys), default=1)


def h_series(K: int, max_order: int = DEFAULT_MAX_ORDER) -> DenoiserSeries:
    if K == 0:
        return DenoiserSeries("G", 0, ())
    return DenoiserSeries("G", K, derive_h_sequence(K, max_order))


def g_series(K: int, max_order: int = DEFAULT_MAX_ORDER) -> DenoiserSeries:
    if K == 0:
        return DenoiserSeries("F", 0, ())
    return DenoiserSeries("F", K, derive_g_sequence(K, max_order))


def evaluate_series(series: DenoiserSeries, ratios, eta, y):
    """``y + sum_{k<=K} eta^k/k! * poly_k(ratios)``; vectorizes over numpy inputs."""
    if eta < 0:
        raise ValueError("eta must be non-negative")
    out = y
    scale = 1.0
    for k, poly in enumerate(series.coefficient_polys, start=1):
        scale = scale * eta / k
        out = out + scale * poly.evaluate(ratios)
    return out


def dump_polynomials(K: int, max_order: int = DEFAULT_MAX_ORDER) -> str:
    """JSON text of h_1..h_K and g_1..g_K (monomial -> rational coefficient)."""
    payload = {
        "variables": "r_m = D^m / D^1 of the side's CDF (G: observations, F: signal)",
        "h": {str(k): p.to_json() for k, p in enumerate(derive_h_sequence(K, max_order), 1)},
        "g": {str(k): p.to_json() for k, p in enumerate(derive_g_sequence(K, max_order), 1)},
        "text": {
            "h": [str(p) for p in derive_h_sequence(K, max_order)],
            "g": [str(p) for p in derive_g_sequence(K, max_order)],
        },
    }
    return json.dumps(payload, indent=2)
