"""Finite field arithmetic for network coding coefficients.

A field of order q = p^m is built once (`make_field`) and then shared; it is
immutable after construction and safe to use from any number of workers.
Elements are canonical integers in 0..q-1; for extension fields (m > 1) the
integer packs the residue polynomial's coefficients in base p, i.e.
value = sum(c_i * p**i) for the residue c_0 + c_1 x + ... + c_{m-1} x^{m-1}.

Fields with q <= 256 precompute full add/sub/mul/neg/inverse tables (numpy
arrays) which the simulation and enumeration engines index in bulk.  Larger
fields compute on the fly.

Sampling is deterministic: `RandomStream` is a counter-based word stream, and
`uniform_element` rejects from a power-of-two range so that every field
element has probability exactly 1/q regardless of q.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator

import numpy as np

MAX_ORDER = 1 << 16
TABLE_LIMIT = 256

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_STREAM_SALT = 0xD2B74407B1CE6E93

_GOLDEN_U64 = np.uint64(_GOLDEN)


def mix64(x: int) -> int:
    """SplitMix64 finalizer: a bijective 64-bit mixer with full avalanche."""
    x &= _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def mix64_array(x: np.ndarray) -> np.ndarray:
    """Vectorized `mix64` over a uint64 array."""
    x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return x ^ (x >> np.uint64(31))


def stream_key(seed: int, stream: int = 0) -> int:
    """64-bit key for the (seed, stream) pair; equal pairs give equal keys."""
    k = mix64((seed + _GOLDEN) & _MASK64)
    return mix64(k ^ (((stream + 1) * _STREAM_SALT) & _MASK64))


def stream_keys_array(seed: int, streams: np.ndarray) -> np.ndarray:
    """Vectorized `stream_key` for an int64/uint64 array of stream ids."""
    k = np.uint64(mix64((seed + _GOLDEN) & _MASK64))
    salted = (streams.astype(np.uint64) + np.uint64(1)) * np.uint64(_STREAM_SALT)
    return mix64_array(k ^ salted)


def words_at(keys: np.ndarray, counters: np.ndarray) -> np.ndarray:
    """Vectorized `RandomStream.next_word`: word <counter> of each stream key."""
    return mix64_array(keys + _GOLDEN_U64 * counters)


def rejection_params(q: int) -> tuple[int, int]:
    """(shift, limit) for the power-of-two rejection sampler shared by the
    scalar and vectorized uniform draws: candidates are word >> shift,
    accepted when below limit (the largest multiple of q in range)."""
    bits = max(1, (q - 1).bit_length()) + 16
    span = 1 << bits
    return 64 - bits, span - span % q


class RandomStream:
    """Deterministic counter-based stream of 64-bit words.

    word(i) = mix64(key + GOLDEN * i), so sequential use and random access
    agree; any consumer can replay a stream exactly from (seed, stream).
    Instances are single-owner: never share one between concurrent workers,
    derive one stream per worker instead.
    """

    __slots__ = ("key", "counter")

    def __init__(self, seed: int, stream: int = 0):
        self.key = stream_key(seed, stream)
        self.counter = 0

    def next_word(self) -> int:
        self.counter += 1
        return mix64((self.key + _GOLDEN * self.counter) & _MASK64)


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n < 4:
        return True
    if n % 2 == 0:
        return False
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


# --- polynomial helpers over F_p; coefficient tuples are low degree first ---

def _poly_mod(num: list[int], den: tuple[int, ...], p: int) -> list[int]:
    """Remainder of num / den over F_p.  den must be monic."""
    num = list(num)
    dd = len(den) - 1
    for i in range(len(num) - 1, dd - 1, -1):
        c = num[i] % p
        if c:
            for j in range(dd + 1):
                num[i - dd + j] = (num[i - dd + j] - c * den[j]) % p
    del num[dd:]
    return num


def _poly_is_irreducible(poly: tuple[int, ...], p: int) -> bool:
    """Trial division by every monic polynomial of degree <= deg/2."""
    m = len(poly) - 1
    if poly[0] == 0:  # divisible by x
        return False
    for d in range(1, m // 2 + 1):
        for low in itertools.product(range(p), repeat=d):
            den = tuple(low) + (1,)
            if not any(_poly_mod(list(poly), den, p)):
                return False
    return True


def _smallest_irreducible(p: int, m: int) -> tuple[int, ...]:
    """Lexicographically smallest monic irreducible of degree m over F_p.

    Coefficients are compared from the constant term upward, so candidates
    are enumerated in (c_0, c_1, ..., c_{m-1}) tuple order.
    """
    for low in itertools.product(range(p), repeat=m):
        poly = tuple(low) + (1,)
        if _poly_is_irreducible(poly, p):
            return poly
    raise RuntimeError(f"no irreducible of degree {m} over F_{p}")  # unreachable


class FieldSpec:
    """Finite field of order q = p^m with a canonical reduction polynomial.

    Use `make_field` rather than constructing directly; equal (p, m) always
    yields the identical field (same reduction polynomial, same tables).
    """

    def __init__(self, p: int, m: int):
        if not _is_prime(p):
            raise ValueError(f"characteristic must be prime, got {p}")
        if m < 1:
            raise ValueError(f"extension degree must be >= 1, got {m}")
        q = p**m
        if q > MAX_ORDER:
            raise ValueError(f"field order {q} exceeds the supported maximum {MAX_ORDER}")
        self.p = p
        self.m = m
        self.q = q
        self.reduction_poly: tuple[int, ...] | None = (
            _smallest_irreducible(p, m) if m > 1 else None
        )
        # Full lookup tables for small fields; the bulk engines index these.
        self.add_table: np.ndarray | None = None
        self.sub_table: np.ndarray | None = None
        self.mul_table: np.ndarray | None = None
        self.neg_table: np.ndarray | None = None
        self.inv_table: np.ndarray | None = None
        if q <= TABLE_LIMIT:
            self._build_tables()
        self._prime_inv: np.ndarray | None = None

    # -- identity ----------------------------------------------------------

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, FieldSpec)
            and (self.p, self.m, self.reduction_poly)
            == (other.p, other.m, other.reduction_poly)
        )

    def __hash__(self) -> int:
        return hash((self.p, self.m, self.reduction_poly))

    def __repr__(self) -> str:
        if self.m == 1:
            return f"GF({self.p})"
        return f"GF({self.p}^{self.m})"

    # -- digit packing -----------------------------------------------------

    def _digits(self, value: int) -> list[int]:
        out = []
        for _ in range(self.m):
            value, r = divmod(value, self.p)
            out.append(r)
        return out

    def _pack(self, digits: list[int]) -> int:
        v = 0
        for c in reversed(digits):
            v = v * self.p + c
        return v

    # -- table construction (q <= TABLE_LIMIT) ------------------------------

    def _build_tables(self) -> None:
        p, m, q = self.p, self.m, self.q
        vals = np.arange(q, dtype=np.int64)
        digs = np.empty((q, m), dtype=np.int64)
        rest = vals.copy()
        for j in range(m):
            digs[:, j] = rest % p
            rest //= p
        powers = p ** np.arange(m, dtype=np.int64)

        def pack(d: np.ndarray) -> np.ndarray:
            return (d * powers).sum(axis=-1)

        add = pack((digs[:, None, :] + digs[None, :, :]) % p).astype(np.int16)
        neg = pack((-digs) % p).astype(np.int16)
        sub = add[:, neg]
        if m == 1:
            mul = ((vals[:, None] * vals[None, :]) % p).astype(np.int16)
        else:
            poly = np.array(self.reduction_poly[:-1], dtype=np.int64)
            # value -> value * x mod reduction polynomial
            hi = digs[:, m - 1]
            shifted = np.concatenate([np.zeros((q, 1), np.int64), digs[:, :-1]], axis=1)
            xtimes = pack((shifted - hi[:, None] * poly[None, :]) % p)
            # value -> value * s for each scalar s in F_p
            smul = np.stack([pack((digs * s) % p) for s in range(p)])
            mul = np.zeros((q, q), dtype=np.int64)
            apow = vals.copy()  # a * x^j, packed, for all a
            for j in range(m):
                term = smul[digs[None, :, j], apow[:, None]]
                mul = add[mul, term].astype(np.int64)
                apow = xtimes[apow]
            mul = mul.astype(np.int16)
        inv = np.zeros(q, dtype=np.int16)
        rows, cols = np.nonzero(mul == 1)
        inv[rows] = cols
        self.add_table, self.sub_table = add, sub
        self.mul_table, self.neg_table, self.inv_table = mul, neg, inv

    # -- scalar arithmetic on canonical integers ----------------------------

    def add(self, a: int, b: int) -> int:
        if self.add_table is not None:
            return int(self.add_table[a, b])
        if self.m == 1:
            return (a + b) % self.p
        return self._pack([(x + y) % self.p for x, y in zip(self._digits(a), self._digits(b))])

    def sub(self, a: int, b: int) -> int:
        if self.sub_table is not None:
            return int(self.sub_table[a, b])
        if self.m == 1:
            return (a - b) % self.p
        return self._pack([(x - y) % self.p for x, y in zip(self._digits(a), self._digits(b))])

    def neg(self, a: int) -> int:
        if self.neg_table is not None:
            return int(self.neg_table[a])
        if self.m == 1:
            return (-a) % self.p
        return self._pack([(-x) % self.p for x in self._digits(a)])

    def mul(self, a: int, b: int) -> int:
        if self.mul_table is not None:
            return int(self.mul_table[a, b])
        if self.m == 1:
            return (a * b) % self.p
        da, db = self._digits(a), self._digits(b)
        conv = [0] * (2 * self.m - 1)
        for i, x in enumerate(da):
            if x:
                for j, y in enumerate(db):
                    conv[i + j] += x * y
        rem = _poly_mod([c % self.p for c in conv], self.reduction_poly, self.p)
        rem += [0] * (self.m - len(rem))
        return self._pack(rem)

    def inv(self, a: int) -> int:
        if a == 0:
            raise ZeroDivisionError(f"0 has no multiplicative inverse in {self!r}")
        if self.inv_table is not None:
            return int(self.inv_table[a])
        if self.m == 1:
            return pow(a, self.p - 2, self.p)
        return self.pow(a, self.q - 2)

    def pow(self, a: int, e: int) -> int:
        r = 1
        base = a
        while e:
            if e & 1:
                r = self.mul(r, base)
            base = self.mul(base, base)
            e >>= 1
        return r

    def prime_inverse_table(self) -> np.ndarray:
        """Inverse lookup for prime fields of any supported size (lazy)."""
        if self.m != 1:
            raise ValueError("prime_inverse_table is only defined for prime fields")
        if self._prime_inv is None:
            p = self.p
            inv = np.zeros(p, dtype=np.int64)
            for a in range(1, p):
                inv[a] = pow(a, p - 2, p)
            self._prime_inv = inv
        return self._prime_inv

    # -- element layer -------------------------------------------------------

    def element(self, value: int) -> "FieldElement":
        if not 0 <= value < self.q:
            raise ValueError(f"value {value} outside 0..{self.q - 1}")
        return FieldElement(value, self)

    @property
    def zero(self) -> "FieldElement":
        return FieldElement(0, self)

    @property
    def one(self) -> "FieldElement":
        return FieldElement(1, self)

    def elements(self) -> Iterator["FieldElement"]:
        for v in range(self.q):
            yield FieldElement(v, self)


@dataclass(frozen=True)
class FieldElement:
    """Value in a specific field.  Elements of distinct fields never mix."""

    value: int
    field: FieldSpec

    def _check(self, other: "FieldElement") -> None:
        if self.field != other.field:
            raise ValueError(f"cannot mix elements of {self.field!r} and {other.field!r}")

    def __add__(self, other: "FieldElement") -> "FieldElement":
        self._check(other)
        return FieldElement(self.field.add(self.value, other.value), self.field)

    def __sub__(self, other: "FieldElement") -> "FieldElement":
        self._check(other)
        return FieldElement(self.field.sub(self.value, other.value), self.field)

    def __mul__(self, other: "FieldElement") -> "FieldElement":
        self._check(other)
        return FieldElement(self.field.mul(self.value, other.value), self.field)

    def __truediv__(self, other: "FieldElement") -> "FieldElement":
        self._check(other)
        return FieldElement(self.field.mul(self.value, self.field.inv(other.value)), self.field)

    def __neg__(self) -> "FieldElement":
        return FieldElement(self.field.neg(self.value), self.field)

    def inv(self) -> "FieldElement":
        return FieldElement(self.field.inv(self.value), self.field)

    def __bool__(self) -> bool:
        return self.value != 0

    def __repr__(self) -> str:
        return f"{self.value}@{self.field!r}"


@lru_cache(maxsize=None)
def make_field(p: int, m: int = 1) -> FieldSpec:
    """Field of order p^m with the canonical reduction polynomial (cached)."""
    return FieldSpec(p, m)


def parse_prime_power(q: int) -> tuple[int, int]:
    """Factor q as p^m; raises ValueError when q is not a prime power."""
    if q < 2:
        raise ValueError(f"field order must be >= 2, got {q}")
    if q > MAX_ORDER:
        raise ValueError(f"field order {q} exceeds the supported maximum {MAX_ORDER}")
    p = 2
    while p * p <= q:
        if q % p == 0:
            m = 0
            rest = q
            while rest % p == 0:
                rest //= p
                m += 1
            if rest != 1:
                raise ValueError(f"{q} is not a prime power")
            return p, m
        p += 1
    return q, 1  # q itself is prime


def make_field_of_order(q: int) -> FieldSpec:
    """Field of order q (must be a prime power)."""
    p, m = parse_prime_power(q)
    return make_field(p, m)


def uniform_int(q: int, rng: RandomStream) -> int:
    """Uniform draw from 0..q-1 by rejection from a power-of-two range.

    Each candidate takes the top (b + 16) bits of a fresh 64-bit word, where
    b is the bit length of q - 1; candidates at or above the largest multiple
    of q are rejected, so accepted values are exactly uniform.
    """
    shift, limit = rejection_params(q)
    while True:
        cand = rng.next_word() >> shift
        if cand < limit:
            return cand % q


def uniform_element(field: FieldSpec, rng: RandomStream) -> FieldElement:
    """Uniformly random field element; every value has probability exactly 1/q."""
    return FieldElement(uniform_int(field.q, rng), field)
