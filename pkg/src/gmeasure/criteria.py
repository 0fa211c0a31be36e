"""Uniqueness criteria for g-chains over parametric variation models.

The criteria act on the log-oscillation sequence var_n = var_{[0,n]}(log g)
(equivalently rho_n = exp(var_n)).  Parametric kinds (power law, exponential,
finite range) are classified in closed form; tabulated inputs can only be
reported as inconclusive with diagnostics, since a numeric prefix cannot
certify divergence of a series.

The Hellinger toolchain provides the affinity floor for a single
distribution pair, a total-variation bound built from per-site conditional
oscillation ratios, a certified cubic-remainder product floor, and the
resulting upper bounds for the worst-case block total variation d_n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .coupling import BlockSchedule
from .errors import ConfigError

__all__ = [
    "SATISFIED",
    "VIOLATED",
    "INCONCLUSIVE",
    "CriterionReport",
    "PowerLawVariation",
    "ExponentialVariation",
    "FiniteRangeVariation",
    "TabulatedVariation",
    "check_square_summable_variation",
    "check_rho_product_series",
    "check_variation_o_sqrt",
    "check_geometric_window_sums",
    "SingleSiteDSequence",
    "check_single_site_series",
    "single_site_tv_bound",
    "hellinger_floor",
    "MAX_SITE_RATIO",
    "tv_bound_from_site_ratios",
    "cubic_remainder_constant",
    "CUBIC_REMAINDER_K2",
    "affinity_product_floor",
    "certify_cubic_remainder",
    "BlockTvBounds",
    "block_tv_bounds",
    "geometric_blocks",
    "coupling_bound_ratio",
]

SATISFIED = "satisfied"
VIOLATED = "violated"
INCONCLUSIVE = "inconclusive"

# Largest per-site oscillation ratio for which the Hellinger floor is
# non-negative: (1 + sqrt(2))**2.
MAX_SITE_RATIO = 3.0 + 2.0 * math.sqrt(2.0)


@dataclass
class CriterionReport:
    criterion: str
    verdict: str
    evidence: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "criterion": self.criterion,
            "verdict": self.verdict,
            "evidence": self.evidence,
        }


# ---------------------------------------------------------------------------
# variation models


@dataclass(frozen=True)
class PowerLawVariation:
    """var_n = c * (n+1)**(-p)."""

    c: float
    p: float

    def __post_init__(self):
        if self.c < 0 or self.p < 0:
            raise ConfigError("power-law variation needs c >= 0 and p >= 0")

    def var_at(self, n: int) -> float:
        return self.c * (n + 1) ** (-self.p)


@dataclass(frozen=True)
class ExponentialVariation:
    """var_n = c * r**n with 0 < r < 1."""

    c: float
    r: float

    def __post_init__(self):
        if self.c < 0 or not 0 < self.r < 1:
            raise ConfigError("exponential variation needs c >= 0 and r in (0, 1)")

    def var_at(self, n: int) -> float:
        return self.c * self.r**n


@dataclass(frozen=True)
class FiniteRangeVariation:
    """var_n = level for n < M and 0 from n = M on."""

    M: int
    level: float = 1.0

    def var_at(self, n: int) -> float:
        return self.level if n < self.M else 0.0


@dataclass(frozen=True)
class TabulatedVariation:
    """Explicit prefix plus a dominating extrapolation model."""

    values: tuple[float, ...]
    tail: PowerLawVariation | ExponentialVariation | FiniteRangeVariation | None = None

    def __post_init__(self):
        vals = self.values
        if any(vals[i] < vals[i + 1] - 1e-12 for i in range(len(vals) - 1)):
            raise ConfigError("tabulated variation must be non-increasing")
        if any(v < 0 for v in vals):
            raise ConfigError("variation values must be non-negative")

    def var_at(self, n: int) -> float:
        if n < len(self.values):
            return self.values[n]
        if self.tail is None:
            raise ConfigError(f"n={n} beyond tabulated range and no tail model")
        return self.tail.var_at(n)


def _tabulated_diagnostics(vm, terms=64) -> dict:
    partial = float(sum(vm.var_at(n) ** 2 for n in range(terms)))
    return {"kind": "tabulated", "square_partial_sum": partial, "terms": terms}


# ---------------------------------------------------------------------------
# series criteria


def check_square_summable_variation(vm) -> CriterionReport:
    """Does sum_n var_n**2 converge?"""
    name = "square_summable_variation"
    if isinstance(vm, (FiniteRangeVariation, ExponentialVariation)):
        return CriterionReport(name, SATISFIED, {"kind": "closed_form"})
    if isinstance(vm, PowerLawVariation):
        if vm.c == 0 or 2 * vm.p > 1:
            return CriterionReport(
                name, SATISFIED, {"kind": "p_series", "exponent": 2 * vm.p}
            )
        return CriterionReport(
            name, VIOLATED, {"kind": "p_series", "exponent": 2 * vm.p}
        )
    return CriterionReport(name, INCONCLUSIVE, _tabulated_diagnostics(vm))


def check_rho_product_series(vm, epsilon: float) -> CriterionReport:
    """Does sum_n prod_{i<=n} rho_i**(-(1/2+epsilon)) diverge?

    The n-th term is exp(-(1/2+eps) * sum_{i<=n} var_i), so the verdict is
    governed by the growth of the partial sums of var:
      * bounded partial sums (summable var) -> terms bounded below -> diverges;
      * var_i ~ c/i -> terms ~ n**(-(1/2+eps)c) -> diverges iff (1/2+eps)c <= 1;
      * partial sums growing like a power of n -> stretched-exponential terms
        -> converges.
    """
    name = "rho_product_series"
    if epsilon <= 0:
        raise ConfigError("epsilon must be positive")
    s = 0.5 + epsilon
    if isinstance(vm, (FiniteRangeVariation, ExponentialVariation)):
        return CriterionReport(name, SATISFIED, {"kind": "bounded_product"})
    if isinstance(vm, PowerLawVariation):
        if vm.c == 0 or vm.p > 1:
            return CriterionReport(name, SATISFIED, {"kind": "bounded_product"})
        if vm.p == 1:
            verdict = SATISFIED if s * vm.c <= 1 else VIOLATED
            return CriterionReport(
                name, verdict, {"kind": "harmonic", "term_exponent": s * vm.c}
            )
        return CriterionReport(
            name, VIOLATED, {"kind": "stretched_exponential", "sum_exponent": 1 - vm.p}
        )
    return CriterionReport(name, INCONCLUSIVE, _tabulated_diagnostics(vm))


def check_variation_o_sqrt(vm) -> CriterionReport:
    """Is var_n = o(n**(-1/2))?"""
    name = "variation_o_sqrt"
    if isinstance(vm, (FiniteRangeVariation, ExponentialVariation)):
        return CriterionReport(name, SATISFIED, {"kind": "closed_form"})
    if isinstance(vm, PowerLawVariation):
        if vm.c == 0 or vm.p > 0.5:
            return CriterionReport(name, SATISFIED, {"kind": "power", "p": vm.p})
        return CriterionReport(name, VIOLATED, {"kind": "power", "p": vm.p})
    return CriterionReport(name, INCONCLUSIVE, _tabulated_diagnostics(vm))


def check_geometric_window_sums(vm, lam: float) -> CriterionReport:
    """Do the window sums sum_{i=ceil(lam^(n-1))}^{ceil(lam^n)} var_i**2 vanish?

    For var_i = c*(i+1)**(-1/2) the window sums converge to c**2 * log(lam)
    (the geometric windows of the harmonic series), so the verdict cannot
    depend on which lam > 1 is used.
    """
    name = "geometric_window_sums"
    if lam <= 1:
        raise ConfigError("lambda must exceed 1")
    windows = {}
    for n in (4, 6, 8):
        lo, hi = math.ceil(lam ** (n - 1)), math.ceil(lam**n)
        windows[n] = float(sum(vm.var_at(i) ** 2 for i in range(lo, hi + 1)))
    if isinstance(vm, (FiniteRangeVariation, ExponentialVariation)):
        return CriterionReport(
            name, SATISFIED, {"kind": "closed_form", "limit": 0.0, "windows": windows}
        )
    if isinstance(vm, PowerLawVariation):
        if vm.c == 0 or vm.p > 0.5:
            return CriterionReport(
                name, SATISFIED, {"kind": "power", "limit": 0.0, "windows": windows}
            )
        if vm.p == 0.5:
            limit = vm.c**2 * math.log(lam)
            return CriterionReport(
                name, VIOLATED, {"kind": "power", "limit": limit, "windows": windows}
            )
        return CriterionReport(
            name,
            VIOLATED,
            {"kind": "power", "limit": math.inf, "windows": windows},
        )
    return CriterionReport(name, INCONCLUSIVE, _tabulated_diagnostics(vm))


# ---------------------------------------------------------------------------
# single-site coupling series


@dataclass(frozen=True)
class ZeroDTail:
    def d_at(self, n: int) -> float:
        return 0.0


@dataclass(frozen=True)
class ConstantDTail:
    v: float

    def d_at(self, n: int) -> float:
        return self.v


@dataclass(frozen=True)
class PowerDTail:
    """d_n = a * n**(-q)."""

    a: float
    q: float

    def d_at(self, n: int) -> float:
        return self.a * n ** (-self.q)


@dataclass(frozen=True)
class OneMinusPowerDTail:
    """d_n = 1 - a * n**(-q): disagreement probability tending to 1."""

    a: float
    q: float

    def d_at(self, n: int) -> float:
        return 1.0 - self.a * n ** (-self.q)


@dataclass(frozen=True)
class SingleSiteDSequence:
    """Single-site disagreement bounds: explicit prefix plus a tail law."""

    values: tuple[float, ...] = ()
    tail: ZeroDTail | ConstantDTail | PowerDTail | OneMinusPowerDTail = ZeroDTail()

    def d_at(self, n: int) -> float:
        if n <= len(self.values):
            return self.values[n - 1]
        return self.tail.d_at(n)


def check_single_site_series(dseq: SingleSiteDSequence) -> CriterionReport:
    """Does sum_n prod_{i<=n} (1 - d_i) diverge?

    Divergence of this series is a sufficient condition for a unique
    g-measure; the products are classified in closed form from the tail law.
    """
    name = "single_site_series"
    if any(not 0 <= v <= 1 for v in dseq.values):
        raise ConfigError("d values must lie in [0, 1]")
    if any(v >= 1.0 for v in dseq.values):
        return CriterionReport(name, VIOLATED, {"kind": "prefix_hits_one"})
    tail = dseq.tail
    if isinstance(tail, ZeroDTail):
        return CriterionReport(name, SATISFIED, {"kind": "eventually_zero"})
    if isinstance(tail, ConstantDTail):
        verdict = SATISFIED if tail.v == 0 else VIOLATED
        return CriterionReport(name, verdict, {"kind": "constant", "v": tail.v})
    if isinstance(tail, PowerDTail):
        if tail.a == 0 or tail.q > 1:
            return CriterionReport(name, SATISFIED, {"kind": "summable_d"})
        if tail.q == 1:
            # prod (1 - a/i) ~ n**(-a): the series diverges iff a <= 1
            verdict = SATISFIED if tail.a <= 1 else VIOLATED
            return CriterionReport(
                name, verdict, {"kind": "harmonic_d", "product_exponent": tail.a}
            )
        return CriterionReport(
            name, VIOLATED, {"kind": "stretched_exponential_products"}
        )
    if isinstance(tail, OneMinusPowerDTail):
        if tail.q > 0:
            # products shrink factorially fast
            return CriterionReport(name, VIOLATED, {"kind": "d_tends_to_one"})
        verdict = SATISFIED if tail.a >= 1 else VIOLATED
        return CriterionReport(name, verdict, {"kind": "constant", "v": 1 - tail.a})
    raise ConfigError(f"unknown tail law {tail!r}")


def single_site_tv_bound(rho: float) -> float:
    """Upper bound rho - 1 for the single-site total variation of g.

    For histories agreeing on [0, n], half the summed first-symbol
    differences of g is at most rho_{[0,n]} - 1.
    """
    if rho < 1:
        raise ConfigError("oscillation ratio must be >= 1")
    return rho - 1.0


# ---------------------------------------------------------------------------
# Hellinger toolchain


def hellinger_floor(rho: float) -> float:
    """Lower bound 1 - (sqrt(rho)-1)**2 / 2 for the Hellinger affinity
    sum sqrt(mu*nu) of two distributions with oscillation ratio rho."""
    if rho < 1:
        raise ConfigError("oscillation ratio must be >= 1")
    return 1.0 - 0.5 * (math.sqrt(rho) - 1.0) ** 2


def tv_bound_from_site_ratios(rhos: Sequence[float]) -> float:
    """Total-variation bound sqrt(1 - prod_i (1 - (sqrt(rho_i)-1)**2/2)**2).

    Valid for measures on a product of sites whose per-site conditional
    oscillation ratios are rho_i; each rho_i must stay below MAX_SITE_RATIO
    so the per-site affinity floor is non-negative.
    """
    prod = 1.0
    for rho in rhos:
        if rho < 1:
            raise ConfigError("oscillation ratios must be >= 1")
        if rho > MAX_SITE_RATIO + 1e-12:
            raise ConfigError(
                f"site ratio {rho:.6f} exceeds the validity bound {MAX_SITE_RATIO:.6f}"
            )
        prod *= hellinger_floor(rho) ** 2
    return math.sqrt(max(1.0 - prod, 0.0))


def cubic_remainder_constant(lam: float) -> float:
    """Explicit constant K(lam) with (sqrt(rho)-1)**2 <= t**2/4 + K*t**3,
    t = log rho, for all rho in [1, lam].

    Derivation: with x = t/2, exp(x) - 1 - x <= x**2 * exp(x) / 2, so
    (e**(t/2)-1)**2 <= t**2/4 + t**3 * (e**(T/2)/8 + T*e**T/64) on [0, T].
    """
    if not 1 < lam < MAX_SITE_RATIO:
        raise ConfigError(f"lambda must lie in (1, {MAX_SITE_RATIO:.6f})")
    T = math.log(lam)
    return math.exp(0.5 * T) / 8.0 + T * math.exp(T) / 64.0


CUBIC_REMAINDER_K2 = cubic_remainder_constant(2.0)


def certify_cubic_remainder(lam: float, grid: int = 100_000) -> float:
    """Smallest margin of t**2/4 + K*t**3 - (sqrt(rho)-1)**2 over a dense
    t-grid on (0, log lam]; non-negative output certifies the constant."""
    K = cubic_remainder_constant(lam)
    t = np.linspace(0.0, math.log(lam), grid + 1)[1:]
    margin = t**2 / 4 + K * t**3 - np.expm1(t / 2.0) ** 2
    return float(margin.min())


def affinity_product_floor(rhos: Sequence[float], lam: float = 2.0) -> float:
    """Lower bound for prod_i (1 - (sqrt(rho_i)-1)**2/2)**2 via log-ratios:

        1 - sum_i ( (log rho_i)**2 / 4 + K(lam) * (log rho_i)**3 ),

    valid for 1 <= rho_i <= lam.  The product floor itself never exceeds the
    exact product (Weierstrass inequality plus the cubic remainder bound).
    """
    K = cubic_remainder_constant(lam)
    acc = 0.0
    for rho in rhos:
        if not 1.0 <= rho <= lam + 1e-12:
            raise ConfigError(f"rho={rho} outside [1, lambda={lam}]")
        t = math.log(rho)
        acc += t * t / 4.0 + K * t**3
    return 1.0 - acc


# ---------------------------------------------------------------------------
# block total-variation bounds


@dataclass(frozen=True)
class BlockTvBounds:
    """Upper bounds for the worst-case block-n total variation d_n.

    ``site_product`` is the bound sqrt(1 - prod (affinity floor)**2) over the
    sites [B_{n-1}, B_n - 1] separating the block from the agreement region;
    it is None when some site ratio exceeds MAX_SITE_RATIO.  ``square_sum``
    is the cubic-remainder bound sqrt(sum window (log rho)**2/4 + K (log
    rho)**3) over the later window [B_n, B_{n+1} - 1]; it applies only once
    the oscillation ratios have dropped below ``lam`` and is None before.
    """

    n: int
    site_product: float | None
    square_sum: float | None


def block_tv_bounds(vm, schedule: BlockSchedule, n: int, lam: float = 2.0) -> BlockTvBounds:
    """Both closed-form upper bounds for d_n from a variation model.

    ``vm`` is anything exposing var_at(n) (a variation profile or a
    parametric variation model).
    """
    if n < 1:
        raise ConfigError("block index must be >= 1")
    window = range(schedule.B(n - 1), schedule.B(n))
    rhos = [math.exp(vm.var_at(i)) for i in window]
    site_product = None
    if all(r <= MAX_SITE_RATIO for r in rhos):
        site_product = tv_bound_from_site_ratios(rhos)
    later = range(schedule.B(n), schedule.B(n + 1))
    square_sum = None
    if all(vm.var_at(i) <= math.log(lam) for i in later):
        K = cubic_remainder_constant(lam)
        acc = sum(
            vm.var_at(i) ** 2 / 4.0 + K * vm.var_at(i) ** 3 for i in later
        )
        square_sum = math.sqrt(acc)
    return BlockTvBounds(n, site_product, square_sum)


# ---------------------------------------------------------------------------
# block schedules with geometric growth


def geometric_blocks(growth: float, count: int) -> BlockSchedule:
    """Schedule with partial sums B_n = ceil(growth**n / (growth - 1)).

    The increments then satisfy floor(growth**(n-1)) <= b_n <=
    ceil(growth**(n-1)) for n >= 2 (the gap between consecutive partial sums
    is growth**(n-1) before rounding), which is asserted here.
    """
    if growth <= 1:
        raise ConfigError("growth must exceed 1")
    if count < 1:
        raise ConfigError("count must be >= 1")
    B = [math.ceil(growth**n / (growth - 1.0)) for n in range(count + 1)]
    B[0] = 0
    b = [B[n] - B[n - 1] for n in range(1, count + 1)]
    for n in range(2, count + 1):
        step = growth ** (n - 1)
        assert math.floor(step) <= b[n - 1] <= math.ceil(step), (n, b[n - 1], step)
    return BlockSchedule(tuple(b))


def coupling_bound_ratio(dbar_seq, b_seq, K_sweep) -> list[tuple[int, float]]:
    """Closed-form asymptotic disagreement bound of the block coupling:

        R_K = [ sum_{k<=K} b_k d_k prod_{j<k}(1-d_j) + b_{K+1} prod_{j<=K}(1-d_j) ]
              / [ sum_{k<=K+1} b_k prod_{j<k}(1-d_j) ],

    evaluated directly (the renewal route computes the same number from the
    alpha/beta arrays; the two are cross-checked in the test suite).
    """
    dbar_seq = tuple(float(v) for v in dbar_seq)
    b_seq = tuple(int(v) for v in b_seq)
    out = []
    for K in K_sweep:
        if K < 1 or len(dbar_seq) < K or len(b_seq) < K + 1:
            raise ConfigError(f"need K >= 1, {K} d values and {K + 1} block lengths")
        survive = 1.0
        num = 0.0
        den = 0.0
        for k in range(1, K + 1):
            num += b_seq[k - 1] * dbar_seq[k - 1] * survive
            den += b_seq[k - 1] * survive
            survive *= 1.0 - dbar_seq[k - 1]
        num += b_seq[K] * survive
        den += b_seq[K] * survive
        out.append((K, num / den))
    return out
