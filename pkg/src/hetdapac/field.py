"""Arithmetic in a prime field GF(q), q < 2**16.

Protocol code works on plain ints in ``[0, q)`` through :class:`FieldPrime`
for speed; :class:`FieldElement` wraps a value together with its field for
callers that want operator syntax and modulus checking.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .errors import DimensionError, DivisionByZero, FieldMismatch

MAX_MODULUS = 1 << 16


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


@dataclass(frozen=True)
class FieldPrime:
    q: int

    def __post_init__(self):
        if not isinstance(self.q, int) or not 2 <= self.q < MAX_MODULUS:
            raise ValueError(f"field modulus must be an integer in [2, 2^16), got {self.q!r}")
        if not is_prime(self.q):
            raise ValueError(f"field modulus {self.q} is not prime")

    def __call__(self, value: int) -> FieldElement:
        return FieldElement(value % self.q, self)

    def check(self, a: int) -> int:
        if not 0 <= a < self.q:
            raise ValueError(f"{a} is not a reduced element of GF({self.q})")
        return a

    def add(self, a: int, b: int) -> int:
        return (a + b) % self.q

    def sub(self, a: int, b: int) -> int:
        return (a - b) % self.q

    def mul(self, a: int, b: int) -> int:
        return (a * b) % self.q

    def neg(self, a: int) -> int:
        return -a % self.q

    def inv(self, a: int) -> int:
        if a % self.q == 0:
            raise DivisionByZero(f"0 has no inverse in GF({self.q})")
        return pow(a, -1, self.q)

    def vadd(self, x: Sequence[int], y: Sequence[int]) -> tuple[int, ...]:
        if len(x) != len(y):
            raise DimensionError(f"vector lengths differ: {len(x)} != {len(y)}")
        q = self.q
        return tuple((a + b) % q for a, b in zip(x, y))

    def vsub(self, x: Sequence[int], y: Sequence[int]) -> tuple[int, ...]:
        if len(x) != len(y):
            raise DimensionError(f"vector lengths differ: {len(x)} != {len(y)}")
        q = self.q
        return tuple((a - b) % q for a, b in zip(x, y))

    def vscale(self, c: int, x: Sequence[int]) -> tuple[int, ...]:
        q = self.q
        return tuple((c * a) % q for a in x)

    def dot(self, coeffs: Sequence[int], rows: Sequence[Sequence[int]]) -> tuple[int, ...]:
        """Return ``coeffs^T rows``: the coefficient-weighted sum of the rows."""
        if len(coeffs) != len(rows):
            raise DimensionError(f"{len(coeffs)} coefficients for {len(rows)} rows")
        if not rows:
            return ()
        width = len(rows[0])
        acc = [0] * width
        for c, row in zip(coeffs, rows):
            if len(row) != width:
                raise DimensionError("ragged row matrix")
            if c:
                for j, x in enumerate(row):
                    acc[j] += c * x
        q = self.q
        return tuple(a % q for a in acc)


@dataclass(frozen=True)
class FieldElement:
    value: int
    field: FieldPrime

    def __post_init__(self):
        if not 0 <= self.value < self.field.q:
            raise ValueError(f"{self.value} out of range for GF({self.field.q})")

    def _other(self, o) -> int:
        if isinstance(o, int):
            return o % self.field.q
        if not isinstance(o, FieldElement):
            return NotImplemented
        if o.field != self.field:
            raise FieldMismatch(f"GF({self.field.q}) vs GF({o.field.q})")
        return o.value

    def __add__(self, o):
        v = self._other(o)
        return FieldElement(self.field.add(self.value, v), self.field)

    __radd__ = __add__

    def __sub__(self, o):
        v = self._other(o)
        return FieldElement(self.field.sub(self.value, v), self.field)

    def __rsub__(self, o):
        v = self._other(o)
        return FieldElement(self.field.sub(v, self.value), self.field)

    def __mul__(self, o):
        v = self._other(o)
        return FieldElement(self.field.mul(self.value, v), self.field)

    __rmul__ = __mul__

    def __neg__(self):
        return FieldElement(self.field.neg(self.value), self.field)

    def inv(self) -> FieldElement:
        return FieldElement(self.field.inv(self.value), self.field)

    def __truediv__(self, o):
        v = self._other(o)
        return self * FieldElement(self.field.inv(v), self.field)

    def __int__(self):
        return self.value

    def __repr__(self):
        return f"{self.value} (mod {self.field.q})"


def arith(op: str, a: FieldElement, b: FieldElement | None = None) -> FieldElement:
    """Apply one of add/sub/mul/neg/inv to field elements."""
    if op in ("neg", "inv"):
        return -a if op == "neg" else a.inv()
    if b is None:
        raise ValueError(f"{op} needs two operands")
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    raise ValueError(f"unknown field operation {op!r}")


def dot(coeffs: Sequence[FieldElement], rows: Sequence[Sequence[FieldElement]]) -> list[FieldElement]:
    """Column-wise inner product of a coefficient vector with a row matrix."""
    if len(coeffs) != len(rows):
        raise DimensionError(f"{len(coeffs)} coefficients for {len(rows)} rows")
    if not coeffs:
        return []
    f = coeffs[0].field
    for x in list(coeffs) + [e for row in rows for e in row]:
        if x.field != f:
            raise FieldMismatch(f"GF({f.q}) vs GF({x.field.q})")
    out = f.dot([c.value for c in coeffs], [[e.value for e in row] for row in rows])
    return [FieldElement(v, f) for v in out]
