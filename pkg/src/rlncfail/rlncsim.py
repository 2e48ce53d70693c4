"""Random linear network coding, simulated and enumerated.

Ground truth for the sink failure probability: propagate global encoding
kernels under uniformly random local coefficients, decide failure as
rank(decoding matrix) < w, and evaluate the probability two ways:

* `estimate_failure` - Monte Carlo with a Wilson 99% interval.  Trial i
  draws its coefficients from the counter-based stream (seed, i), so results
  are bit-identical across runs and across worker counts.
* `exact_failure` - exhaustive enumeration of all q^N coefficient
  assignments (N = number of adjacent channel pairs), as an exact rational.

Both run on a vectorized numpy engine for prime fields of any supported
order and extension fields up to order 256, and fall back to the scalar
reference path otherwise.  The scalar and vectorized paths consume the same
random words in the same order, so they are interchangeable bit-for-bit.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .galois import (
    FieldElement,
    FieldSpec,
    RandomStream,
    TABLE_LIMIT,
    rejection_params,
    stream_keys_array,
    uniform_element,
    uniform_int,
    words_at,
)
from .netmodel import Network, imaginary_inputs, input_channel_ids, topological_order

WILSON_Z99 = 2.5758293035489004  # two-sided 99% normal quantile

DEFAULT_ENUMERATION_BUDGET = 1 << 24
_HARD_ENUMERATION_CAP = 1 << 62  # int64 assignment indices
_BLOCK = 1 << 14  # Monte Carlo trials per work block (fixed: results must not
                  # depend on how blocks are scheduled across workers)


class EnumerationBudgetError(RuntimeError):
    """q^N assignments exceed the enumeration budget."""

    def __init__(self, num_slots: int, total: int, budget: int):
        super().__init__(
            f"enumeration needs q^N = {total} assignments for N = {num_slots} "
            f"coefficient slots, above the budget {budget}"
        )
        self.num_slots = num_slots
        self.total = total
        self.budget = budget


# --- coefficient slots and the compiled propagation program -------------------

@dataclass(frozen=True)
class CoefficientSlot:
    """One local coefficient position: incoming channel d, outgoing channel e
    at their shared node."""

    node: str
    in_id: str
    out_id: str


@dataclass(frozen=True)
class _Program:
    rate: int
    slots: tuple[CoefficientSlot, ...]
    channels: tuple[tuple[str, tuple[tuple[str, int], ...]], ...]
    imaginary: tuple[str, ...]
    sink_inputs: dict[str, tuple[str, ...]]


def _compile(net: Network, w: int) -> _Program:
    """Fix the slot order (node topological position, in-channel id,
    out-channel id) and the channel propagation order once per run."""
    order = topological_order(net)
    pos = {n: i for i, n in enumerate(order)}
    slots: list[CoefficientSlot] = []
    slot_index: dict[tuple[str, str], int] = {}
    for node in order:
        ins = sorted(input_channel_ids(net, node, w))
        outs = sorted(c.id for c in net.out_channels(node))
        for d in ins:
            for e in outs:
                slot_index[(d, e)] = len(slots)
                slots.append(CoefficientSlot(node, d, e))
    channels = []
    for c in sorted(net.channels, key=lambda c: (pos[c.tail], c.id)):
        ins = tuple(
            (d, slot_index[(d, c.id)])
            for d in sorted(input_channel_ids(net, c.tail, w))
        )
        channels.append((c.id, ins))
    sink_inputs = {
        t: tuple(sorted(c.id for c in net.in_channels(t))) for t in net.sinks
    }
    return _Program(
        rate=w,
        slots=tuple(slots),
        channels=tuple(channels),
        imaginary=imaginary_inputs(w).ids,
        sink_inputs=sink_inputs,
    )


def coefficient_slots(net: Network, w: int) -> tuple[CoefficientSlot, ...]:
    """All local coefficient positions, in the canonical draw/enumeration order."""
    return _compile(net, w).slots


def coefficient_count(net: Network, w: int) -> int:
    return len(coefficient_slots(net, w))


# --- public assignment / kernel layer ------------------------------------------

@dataclass(frozen=True)
class CoefficientAssignment:
    """Local coefficients k[d, e] for every adjacent channel pair."""

    field: FieldSpec
    coeffs: dict[tuple[str, str], FieldElement]


def uniform_assignment(
    net: Network, w: int, field: FieldSpec, rng: RandomStream
) -> CoefficientAssignment:
    """Fresh assignment with every coefficient independent and uniform.

    Draws happen in the canonical slot order, so a given stream always
    produces the same assignment.
    """
    coeffs = {}
    for slot in _compile(net, w).slots:
        coeffs[(slot.in_id, slot.out_id)] = uniform_element(field, rng)
    return CoefficientAssignment(field=field, coeffs=coeffs)


@dataclass(frozen=True)
class KernelState:
    """Global encoding kernels: channel id -> length-w vector over the field.
    Imaginary input d_i carries the i-th standard basis vector."""

    field: FieldSpec
    rate: int
    kernels: dict[str, tuple[FieldElement, ...]]


def propagate(net: Network, w: int, assign: CoefficientAssignment) -> KernelState:
    """Compute every channel's global kernel from the local coefficients.

    Channels are processed in topological order; each kernel is the
    coefficient-weighted sum of the kernels entering its tail node.
    """
    field = assign.field
    program = _compile(net, w)
    coeffs: list[int] = []
    for slot in program.slots:
        el = assign.coeffs.get((slot.in_id, slot.out_id))
        if el is None:
            raise ValueError(
                f"incomplete assignment: missing coefficient ({slot.in_id}, {slot.out_id})"
            )
        if el.field != field:
            raise ValueError("assignment mixes elements of different fields")
        coeffs.append(el.value)
    kern = _scalar_kernels(program, field, coeffs)
    kernels = {
        cid: tuple(FieldElement(v, field) for v in vec) for cid, vec in kern.items()
    }
    return KernelState(field=field, rate=w, kernels=kernels)


def decoding_matrix(ks: KernelState, net: Network, t: str):
    """w x |In(t)| matrix whose columns are the kernels of t's in-channels,
    ordered by channel id.  Returned as a tuple of rows."""
    if t not in net.sinks:
        raise ValueError(f"{t} is not a sink")
    cols = sorted(c.id for c in net.in_channels(t))
    return tuple(
        tuple(ks.kernels[c][i] for c in cols) for i in range(ks.rate)
    )


def rank_over_field(matrix) -> int:
    """Rank of a matrix of FieldElements by Gaussian elimination."""
    rows = [list(r) for r in matrix]
    if not rows:
        return 0
    ncols = len(rows[0])
    if any(len(r) != ncols for r in rows):
        raise ValueError("ragged matrix")
    field = None
    for r in rows:
        for el in r:
            if field is None:
                field = el.field
            elif el.field != field:
                raise ValueError("matrix mixes elements of different fields")
    if field is None or ncols == 0:
        return 0
    return _rank_ints([[el.value for el in r] for r in rows], field)


def _rank_ints(rows: list[list[int]], field: FieldSpec) -> int:
    m = [r[:] for r in rows]
    nrows = len(m)
    ncols = len(m[0]) if m else 0
    rank = 0
    for col in range(ncols):
        piv = next((i for i in range(rank, nrows) if m[i][col]), None)
        if piv is None:
            continue
        m[rank], m[piv] = m[piv], m[rank]
        inv = field.inv(m[rank][col])
        m[rank] = [field.mul(inv, x) for x in m[rank]]
        for i in range(rank + 1, nrows):
            f = m[i][col]
            if f:
                m[i] = [field.sub(x, field.mul(f, y)) for x, y in zip(m[i], m[rank])]
        rank += 1
        if rank == nrows:
            break
    return rank


def _scalar_kernels(program: _Program, field: FieldSpec, coeffs: list[int]):
    w = program.rate
    kern: dict[str, list[int]] = {}
    for i, d in enumerate(program.imaginary):
        row = [0] * w
        row[i] = 1
        kern[d] = row
    add, mul = field.add, field.mul
    for cid, ins in program.channels:
        vec = [0] * w
        for d, si in ins:
            k = coeffs[si]
            if k:
                fd = kern[d]
                vec = [add(v, mul(k, x)) for v, x in zip(vec, fd)]
        kern[cid] = vec
    return kern


def _scalar_sink_rank(program: _Program, field: FieldSpec, kern, t: str) -> int:
    cols = program.sink_inputs[t]
    if not cols:
        return 0
    rows = [[kern[c][i] for c in cols] for i in range(program.rate)]
    return _rank_ints(rows, field)


def simulate_once(
    net: Network, w: int, field: FieldSpec, trial_rng: RandomStream
) -> dict[str, int]:
    """One coding round: fresh uniform coefficients, then rank(F_t) per sink.
    Failure at sink t means the returned rank is below w."""
    assign = uniform_assignment(net, w, field, trial_rng)
    ks = propagate(net, w, assign)
    return {
        t: rank_over_field(decoding_matrix(ks, net, t)) for t in sorted(net.sinks)
    }


# --- vectorized engine ----------------------------------------------------------

class _PrimeOps:
    """Vector arithmetic mod p on int64 arrays (p <= 2^16, so products fit)."""

    def __init__(self, field: FieldSpec):
        self.p = field.p
        self._field = field
        self._inv: np.ndarray | None = None

    def add(self, a, b):
        return (a + b) % self.p

    def sub(self, a, b):
        return (a - b) % self.p

    def mul(self, a, b):
        return (a * b) % self.p

    def inv(self, a):
        if self._inv is None:
            self._inv = self._field.prime_inverse_table()
        return self._inv[a]


class _TableOps:
    """Vector arithmetic through the precomputed q x q lookup tables."""

    def __init__(self, field: FieldSpec):
        self.add_t = field.add_table
        self.sub_t = field.sub_table
        self.mul_t = field.mul_table
        self.inv_t = field.inv_table

    def add(self, a, b):
        return self.add_t[a, b]

    def sub(self, a, b):
        return self.sub_t[a, b]

    def mul(self, a, b):
        return self.mul_t[a, b]

    def inv(self, a):
        return self.inv_t[a]


def _vec_ops(field: FieldSpec):
    """Vector ops for this field, or None when only the scalar path applies."""
    if field.m == 1:
        return _PrimeOps(field)
    if field.q <= TABLE_LIMIT:
        return _TableOps(field)
    return None


def _batch_rank(mats: np.ndarray, ops) -> np.ndarray:
    """Ranks of a (B, w, c) batch of matrices by batched elimination."""
    B, w, c = mats.shape
    if B == 0:
        return np.zeros(0, dtype=np.int64)
    M = mats.astype(np.int64, copy=True)
    piv = np.zeros(B, dtype=np.int64)
    rows = np.arange(w)
    for col in range(c):
        if (piv >= w).all():
            break
        colv = M[:, :, col]
        elig = (colv != 0) & (rows[None, :] >= piv[:, None])
        has = elig.any(axis=1)
        if not has.any():
            continue
        src = elig.argmax(axis=1)
        sel = np.nonzero(has)[0]
        r0 = piv[sel]
        r1 = src[sel]
        tmp = M[sel, r0, :].copy()
        M[sel, r0, :] = M[sel, r1, :]
        M[sel, r1, :] = tmp
        pv = M[sel, r0, col]
        pinv = np.asarray(ops.inv(pv), dtype=np.int64)
        M[sel, r0, :] = ops.mul(M[sel, r0, :], pinv[:, None])
        pivrow = np.zeros((B, c), dtype=np.int64)
        pivrow[sel] = M[sel, r0, :]
        f = M[:, :, col]
        below = (rows[None, :] > piv[:, None]) & (f != 0) & has[:, None]
        if below.any():
            delta = ops.mul(f[:, :, None], pivrow[:, None, :])
            M = np.where(below[:, :, None], ops.sub(M, delta), M).astype(np.int64)
        piv = piv + has.astype(np.int64)
    return piv


def _batch_failure_flags(program: _Program, field: FieldSpec, coeffs: np.ndarray, t: str, ops) -> np.ndarray:
    """Boolean failure flag per row of the (B, N) coefficient matrix."""
    B = coeffs.shape[0]
    w = program.rate
    kern: dict[str, np.ndarray] = {}
    for i, d in enumerate(program.imaginary):
        row = np.zeros(w, dtype=np.int64)
        row[i] = 1
        kern[d] = np.broadcast_to(row, (B, w))
    for cid, ins in program.channels:
        acc = None
        for d, si in ins:
            term = ops.mul(coeffs[:, si][:, None], kern[d])
            acc = term if acc is None else ops.add(acc, term)
        kern[cid] = acc if acc is not None else np.zeros((B, w), dtype=np.int64)
    cols = program.sink_inputs[t]
    if not cols:
        return np.ones(B, dtype=bool)
    F = np.stack([kern[c] for c in cols], axis=2).astype(np.int64)
    return _batch_rank(F, ops) < w


def _mc_block_failures(
    net: Network, w: int, field: FieldSpec, t: str, seed: int, start: int, count: int
) -> int:
    """Failure count over trials [start, start+count); a pure function of its
    arguments, which is what makes worker scheduling irrelevant."""
    program = _compile(net, w)
    ops = _vec_ops(field)
    q = field.q
    if ops is None:
        fails = 0
        for i in range(start, start + count):
            rng = RandomStream(seed, stream=i)
            coeffs = [uniform_int(q, rng) for _ in program.slots]
            kern = _scalar_kernels(program, field, coeffs)
            if _scalar_sink_rank(program, field, kern, t) < w:
                fails += 1
        return fails
    trials = np.arange(start, start + count, dtype=np.int64)
    keys = stream_keys_array(seed, trials)
    counters = np.zeros(count, dtype=np.uint64)
    shift, limit = rejection_params(q)
    shift_u = np.uint64(shift)
    limit_u = np.uint64(limit)
    q_u = np.uint64(q)
    n = len(program.slots)
    coeffs = np.empty((count, n), dtype=np.int64)
    for j in range(n):
        pending = np.arange(count)
        while pending.size:
            counters[pending] += np.uint64(1)
            cand = words_at(keys[pending], counters[pending]) >> shift_u
            ok = cand < limit_u
            coeffs[pending[ok], j] = (cand[ok] % q_u).astype(np.int64)
            pending = pending[~ok]
    return int(_batch_failure_flags(program, field, coeffs, t, ops).sum())


def _mc_block_star(args) -> int:
    return _mc_block_failures(*args)


# --- failure probability, estimated and exact -----------------------------------

def wilson_interval(failures: int, trials: int, z: float = WILSON_Z99) -> tuple[float, float]:
    """Wilson score interval; stays inside [0, 1] even for extreme rates."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if not 0 <= failures <= trials:
        raise ValueError("failures must be in 0..trials")
    p = failures / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    center = (p + z2 / (2 * trials)) / denom
    half = (z / denom) * math.sqrt(p * (1 - p) / trials + z2 / (4 * trials * trials))
    return max(0.0, center - half), min(1.0, center + half)


@dataclass(frozen=True)
class FailureEstimate:
    """Monte Carlo estimate of the failure probability at one sink."""

    trials: int
    failures: int
    p_hat: float
    ci_low: float
    ci_high: float
    seed: int


def estimate_failure(
    net: Network,
    w: int,
    field: FieldSpec,
    t: str,
    trials: int,
    seed: int,
    workers: int = 1,
) -> FailureEstimate:
    """Monte Carlo failure estimate with a Wilson 99% interval.

    Trial i is seeded by the stateless pair (seed, i), so the result is a
    pure function of the arguments: identical across repeated runs and any
    worker count.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if t not in net.sinks:
        raise ValueError(f"{t} is not a sink")
    blocks = [
        (net, w, field, t, seed, start, min(_BLOCK, trials - start))
        for start in range(0, trials, _BLOCK)
    ]
    if workers <= 1 or len(blocks) == 1:
        counts = [_mc_block_star(b) for b in blocks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            counts = list(pool.map(_mc_block_star, blocks))
    failures = sum(counts)
    lo, hi = wilson_interval(failures, trials)
    return FailureEstimate(
        trials=trials,
        failures=failures,
        p_hat=failures / trials,
        ci_low=lo,
        ci_high=hi,
        seed=seed,
    )


@dataclass(frozen=True)
class ExactProbability:
    """Exact failure probability as a reduced rational: failures / q^N."""

    numerator: int
    denominator: int
    failures: int
    assignments: int
    num_slots: int

    @property
    def fraction(self) -> Fraction:
        return Fraction(self.numerator, self.denominator)


def exact_failure(
    net: Network,
    w: int,
    field: FieldSpec,
    t: str,
    budget: int = DEFAULT_ENUMERATION_BUDGET,
) -> ExactProbability:
    """Exact failure probability by enumerating all q^N coefficient
    assignments as a mixed-radix counter over the canonical slot order."""
    if t not in net.sinks:
        raise ValueError(f"{t} is not a sink")
    program = _compile(net, w)
    n = len(program.slots)
    q = field.q
    total = q**n
    if total > budget or total > _HARD_ENUMERATION_CAP:
        raise EnumerationBudgetError(n, total, min(budget, _HARD_ENUMERATION_CAP))
    ops = _vec_ops(field)
    failures = 0
    if ops is not None and n > 0:
        places = [q ** (n - 1 - j) for j in range(n)]
        batch = 1 << 16
        for start in range(0, total, batch):
            cnt = min(batch, total - start)
            idx = np.arange(start, start + cnt, dtype=np.int64)
            coeffs = np.empty((cnt, n), dtype=np.int64)
            for j, place in enumerate(places):
                coeffs[:, j] = (idx // place) % q
            failures += int(_batch_failure_flags(program, field, coeffs, t, ops).sum())
    else:
        for combo in itertools.product(range(q), repeat=n):
            kern = _scalar_kernels(program, field, list(combo))
            if _scalar_sink_rank(program, field, kern, t) < w:
                failures += 1
    frac = Fraction(failures, total)
    return ExactProbability(
        numerator=frac.numerator,
        denominator=frac.denominator,
        failures=failures,
        assignments=total,
        num_slots=n,
    )
