"""Closed-form failure probability bounds, evaluated in exact rationals.

The central quantity is phi(q, n) = prod_{i=1..n} (1 - q^-i): the probability
that n fresh uniform vectors complete a fixed complementary subspace to full
dimension.  From it:

* cut-profile upper bound   1 - prod_k phi(q, w - out_k)   over the cut steps
  of a chosen path set ("thm1" in reports);
* staged upper bound        1 - phi(q, w)^(n+1)            with n = r, the
  internal nodes on the chosen path set ("thm2"), n = R_t, the minimum over
  all path sets ("cor1"), or n = |J|, all internal nodes ("thm3");
* lower bound               q^-(C_t - w + 1)               ("lower").

Every value is a `fractions.Fraction`, so tightness statements (bound equals
exact probability) are genuine equalities, not float coincidences.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .flowpaths import (
    CutSequence,
    PathSet,
    cut_sequence,
    disjoint_paths,
    linear_extensions,
    min_cut,
    min_internal_paths,
)
from .galois import FieldSpec
from .netmodel import Network

Rational = Fraction


def phi(q: int, n: int) -> Fraction:
    """prod_{i=1..n} (1 - q^-i); phi(q, 0) = 1."""
    if q < 2:
        raise ValueError(f"field order must be >= 2, got {q}")
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    out = Fraction(1)
    for i in range(1, n + 1):
        out *= 1 - Fraction(1, q**i)
    return out


def subspace_completion_success(q: int, n: int, k0: int) -> Fraction:
    """Probability that n - k0 uniform vectors from a spanning complement
    extend a k0-dimensional subspace to the full n-dimensional space.

    Equals phi(q, n - k0); whenever n > k0 the complement satisfies
    1/q <= 1 - result < 1/(q - 1), which is re-checked here.
    """
    if k0 < 0 or k0 > n:
        raise ValueError(f"need 0 <= k0 <= n, got k0={k0}, n={n}")
    out = phi(q, n - k0)
    if n > k0:
        miss = 1 - out
        if not (Fraction(1, q) <= miss < Fraction(1, q - 1)):
            raise AssertionError(f"completion bracket violated for q={q}, n-k0={n - k0}")
    return out


def cut_profile_bound(out_sizes, q: int, w: int) -> Fraction:
    """Upper bound from a cut sequence's out-part sizes |CUT^out_k|, k=0..r:
    1 - prod_k phi(q, w - out_k)."""
    keep = Fraction(1)
    for k, size in enumerate(out_sizes):
        if not 0 <= size <= w:
            raise ValueError(f"out-part size {size} at step {k} outside 0..{w}")
        keep *= phi(q, w - size)
    return 1 - keep


def internal_node_bound(count: int, q: int, w: int) -> Fraction:
    """Staged upper bound 1 - phi(q, w)^(count+1); count is the number of
    internal coding stages (r, R_t, or |J| depending on what is known)."""
    if count < 0:
        raise ValueError(f"count must be >= 0, got {count}")
    return 1 - phi(q, w) ** (count + 1)


def rate_margin_lower_bound(q: int, c_t: int, w: int) -> Fraction:
    """Lower bound 1 / q^(delta + 1) with delta = C_t - w >= 0."""
    if w > c_t:
        raise ValueError(f"rate {w} exceeds min-cut {c_t}")
    return Fraction(1, q ** (c_t - w + 1))


@dataclass(frozen=True)
class BoundReport:
    """Every bound for one (network, sink, rate, field) choice.

    r is the internal-node count of the deterministic path set used for the
    cut profile; r_min is the minimum over all path sets (exact only when
    r_min_exact).  The upper bounds satisfy lower <= thm1 <= thm2 <= thm3
    and, when r_min is exact, cor1 <= thm2.
    """

    sink: str
    q: int
    w: int
    c_t: int
    delta_t: int
    r: int
    r_min: int
    r_min_exact: bool
    j_count: int
    cut_out_sizes: tuple[int, ...]
    order_mode: str
    thm1: Fraction
    thm2: Fraction
    cor1: Fraction
    thm3: Fraction
    lower: Fraction

    def as_dict(self) -> dict:
        return {
            "sink": self.sink,
            "q": self.q,
            "w": self.w,
            "C_t": self.c_t,
            "r": self.r,
            "R_t": {"value": self.r_min, "mode": "exact" if self.r_min_exact else "heuristic"},
            "J": self.j_count,
            "bounds": {
                "thm1": _frac_obj(self.thm1),
                "thm2": _frac_obj(self.thm2),
                "cor1": _frac_obj(self.cor1),
                "thm3": _frac_obj(self.thm3),
                "lower": _frac_obj(self.lower),
            },
        }


def _frac_obj(x: Fraction) -> dict:
    return {"num": str(x.numerator), "den": str(x.denominator)}


def full_report(
    net: Network,
    t: str,
    w: int,
    field: FieldSpec,
    rt_mode: str = "exact",
    order: str = "canonical",
    rt_budget: int = 10**6,
) -> BoundReport:
    """All bounds for sink t at rate w over the given field.

    The cut profile comes from the deterministic disjoint path set.  With
    order="minimize" the profile bound is minimized over every admissible
    ordering of the path set's internal nodes (only for <= 8 of them; larger
    path sets silently keep the canonical order, reflected in order_mode).
    Raises InfeasibleRateError via the path search when w exceeds C_t.
    """
    if order not in ("canonical", "minimize"):
        raise ValueError(f"order must be 'canonical' or 'minimize', got {order!r}")
    c_t = min_cut(net, t)
    ps: PathSet = disjoint_paths(net, t, w)  # raises when w > C_t
    cs: CutSequence = cut_sequence(net, ps)
    q = field.q
    thm1 = cut_profile_bound(cs.out_sizes, q, w)
    order_mode = "canonical"
    if order == "minimize" and ps.r <= 8:
        for ext in linear_extensions(net, ps):
            cand = cut_profile_bound(cut_sequence(net, ps, ext).out_sizes, q, w)
            if cand < thm1:
                thm1 = cand
                cs = cut_sequence(net, ps, ext)
        order_mode = "minimize"
    rt = min_internal_paths(net, t, w, mode=rt_mode, budget=rt_budget)
    thm2 = internal_node_bound(ps.r, q, w)
    cor1 = internal_node_bound(rt.paths.r, q, w)
    thm3 = internal_node_bound(len(net.internal_nodes), q, w)
    lower = rate_margin_lower_bound(q, c_t, w)
    assert lower <= thm1 <= thm2 <= thm3, "bound ordering violated"
    return BoundReport(
        sink=t,
        q=q,
        w=w,
        c_t=c_t,
        delta_t=c_t - w,
        r=ps.r,
        r_min=rt.paths.r,
        r_min_exact=rt.exact,
        j_count=len(net.internal_nodes),
        cut_out_sizes=cs.out_sizes,
        order_mode=order_mode,
        thm1=thm1,
        thm2=thm2,
        cor1=cor1,
        thm3=thm3,
        lower=lower,
    )
