"""g-function models on finite alphabets.

A g-function assigns to each one-sided sequence (x_0, x_1, ...) the
conditional probability of its first symbol given all later ones, normalised
so that summing over the first symbol (with the rest held fixed) gives 1.

Two concrete families are implemented:

* ``FiniteMemoryModel`` -- g depends only on coordinates 0..M and is stored
  as an explicit table over words of length M+1.
* ``LongRangeLinearModel`` -- on a binary alphabet,
  ``g(x) = 1/2 + theta * s(x_0) * sum_{k>=1} a_k * s(x_k)``
  with signs s(.) in {-1,+1} and a summable coefficient law ``a_k``
  (power-law or exponential).  Positivity and normalisation hold whenever
  ``theta < 1/2`` and ``sum a_k <= 1``.

Evaluations on finite words return an interval ``(value, error_bound)``:
the true value of g for *every* completion of the unknown coordinates lies
in ``[value - error_bound, value + error_bound]``.  An ``error_bound`` of
exactly 0 signals an exact evaluation; a positive bound signals that the
word was too short to pin the value down (for a finite-memory model this
happens when the word is shorter than M+1 symbols).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.special import zeta

from .errors import ConfigError

__all__ = [
    "Alphabet",
    "Word",
    "binary_alphabet",
    "PowerLawCoefficients",
    "ExponentialCoefficients",
    "FiniteMemoryModel",
    "LongRangeLinearModel",
    "iid_model",
    "eval_g",
    "cylinder_prob",
    "rho_interval",
    "variation_profile",
    "VariationProfile",
    "ZeroTail",
    "PowerTail",
    "ExponentialTail",
    "finite_memory_surrogate",
    "parse_model",
    "load_model",
]


# ---------------------------------------------------------------------------
# alphabet and words


@dataclass(frozen=True)
class Alphabet:
    """Ordered finite symbol set; the ordering fixes all enumerations."""

    symbols: tuple[str, ...]

    def __post_init__(self):
        if len(self.symbols) < 2:
            raise ConfigError("alphabet needs at least 2 symbols")
        if len(set(self.symbols)) != len(self.symbols):
            raise ConfigError("alphabet symbols must be distinct")

    @property
    def size(self) -> int:
        return len(self.symbols)

    def index(self, symbol: str) -> int:
        try:
            return self.symbols.index(symbol)
        except ValueError:
            raise ConfigError(f"symbol {symbol!r} not in alphabet {self.symbols}") from None

    def indices(self, symbols: Sequence[str]) -> tuple[int, ...]:
        return tuple(self.index(s) for s in symbols)

    def word_from_string(self, text: str, anchor: int = 0) -> "Word":
        return Word(anchor, tuple(text))


def binary_alphabet() -> Alphabet:
    return Alphabet(("0", "1"))


@dataclass(frozen=True)
class Word:
    """Finite configuration on the integer interval [anchor, anchor+len-1].

    The empty word (no symbols) stands for the empty interval [m, n], m > n.
    """

    anchor: int
    symbols: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.symbols)

    @property
    def interval(self) -> tuple[int, int]:
        # inclusive; (anchor, anchor - 1) when empty
        return (self.anchor, self.anchor + len(self.symbols) - 1)

    @property
    def end(self) -> int:
        return self.anchor + len(self.symbols) - 1

    @staticmethod
    def empty(anchor: int = 0) -> "Word":
        return Word(anchor, ())


def encode(digits: Sequence[int], size: int) -> int:
    """Lexicographic index of a word, first coordinate most significant."""
    code = 0
    for d in digits:
        code = code * size + d
    return code


def decode(code: int, size: int, length: int) -> tuple[int, ...]:
    out = [0] * length
    for j in range(length - 1, -1, -1):
        code, out[j] = divmod(code, size)
    return tuple(out)


# ---------------------------------------------------------------------------
# coefficient laws for the long-range family


class PowerLawCoefficients:
    """a_k = c * k**(-p), k >= 1.  Requires p > 1 so the mass is finite."""

    def __init__(self, c: float, p: float):
        if p <= 1:
            raise ConfigError("power-law exponent must exceed 1")
        if c < 0:
            raise ConfigError("coefficient scale must be non-negative")
        self.c = float(c)
        self.p = float(p)
        self._avec = np.zeros(1)  # a_0 placeholder, grown on demand

    @classmethod
    def from_mass(cls, p: float, mass: float) -> "PowerLawCoefficients":
        """Scale so that sum_k a_k equals ``mass``."""
        return cls(mass / float(zeta(p, 1)), p)

    def tail(self, n: int) -> float:
        """sum_{k > n} a_k via the Hurwitz zeta function (no cancellation)."""
        return self.c * float(zeta(self.p, n + 1))

    def prefix(self, n: int) -> float:
        """sum_{k <= n} a_k."""
        if n <= 0:
            return 0.0
        return self.c * float(zeta(self.p, 1) - zeta(self.p, n + 1))

    @property
    def total(self) -> float:
        return self.tail(0)

    def array(self, n: int) -> np.ndarray:
        """Coefficients a_1..a_n as a vector (index 0 unused, kept 0)."""
        if len(self._avec) <= n:
            m = max(2 * len(self._avec), n + 1)
            k = np.arange(1, m, dtype=float)
            self._avec = np.concatenate([[0.0], self.c * k ** (-self.p)])
        return self._avec[: n + 1]


class ExponentialCoefficients:
    """a_k = c * r**k, k >= 1, with 0 < r < 1."""

    def __init__(self, c: float, r: float):
        if not 0 < r < 1:
            raise ConfigError("exponential ratio must lie in (0, 1)")
        if c < 0:
            raise ConfigError("coefficient scale must be non-negative")
        self.c = float(c)
        self.r = float(r)
        self._avec = np.zeros(1)

    @classmethod
    def from_mass(cls, r: float, mass: float) -> "ExponentialCoefficients":
        return cls(mass * (1 - r) / r, r)

    def tail(self, n: int) -> float:
        return self.c * self.r ** (n + 1) / (1 - self.r)

    def prefix(self, n: int) -> float:
        if n <= 0:
            return 0.0
        return self.c * self.r * (1 - self.r**n) / (1 - self.r)

    @property
    def total(self) -> float:
        return self.tail(0)

    def array(self, n: int) -> np.ndarray:
        if len(self._avec) <= n:
            m = max(2 * len(self._avec), n + 1)
            k = np.arange(1, m, dtype=float)
            self._avec = np.concatenate([[0.0], self.c * self.r**k])
        return self._avec[: n + 1]


# ---------------------------------------------------------------------------
# models


class FiniteMemoryModel:
    """g depends on coordinates 0..memory only; stored as a dense table.

    The table maps each word of length memory+1 to the conditional
    probability of its first symbol given the remaining ones; for every
    context the probabilities over the first symbol must sum to 1.
    """

    def __init__(self, alphabet: Alphabet, memory: int, table):
        if memory < 0:
            raise ConfigError("memory must be >= 0")
        self.alphabet = alphabet
        self.memory = int(memory)
        size = alphabet.size
        n_entries = size ** (memory + 1)
        if isinstance(table, dict):
            vec = np.full(n_entries, np.nan)
            for key, value in table.items():
                syms = tuple(key) if isinstance(key, str) else tuple(key)
                if len(syms) != memory + 1:
                    raise ConfigError(
                        f"table word {key!r} must have length {memory + 1}"
                    )
                vec[encode(alphabet.indices(syms), size)] = float(value)
            if np.isnan(vec).any():
                raise ConfigError("table is missing entries")
        else:
            vec = np.asarray(table, dtype=float)
            if vec.shape != (n_entries,):
                raise ConfigError(f"table must have {n_entries} entries")
        if (vec < 0).any():
            raise ConfigError("table entries must be non-negative")
        rowsums = vec.reshape(size, size**memory).sum(axis=0)
        if not np.allclose(rowsums, 1.0, atol=1e-9):
            raise ConfigError("conditional probabilities must sum to 1 per context")
        self.table = vec

    @property
    def is_positive(self) -> bool:
        return bool((self.table > 0).all())

    def eval_indices(self, idx: Sequence[int]) -> tuple[float, float]:
        """Interval for g on a word given as symbol indices for coords 0..len-1."""
        size = self.alphabet.size
        n = len(idx)
        if n >= self.memory + 1:
            return float(self.table[encode(idx[: self.memory + 1], size)]), 0.0
        # enumerate completions of the missing memory coordinates
        missing = self.memory + 1 - n
        base = encode(idx, size) * size**missing
        block = self.table[base : base + size**missing]
        lo, hi = float(block.min()), float(block.max())
        return 0.5 * (lo + hi), 0.5 * (hi - lo)

    def uniform_eval_error(self, word_len: int) -> float:
        """Worst-case half-width of eval_indices over words of that length."""
        if word_len >= self.memory + 1:
            return 0.0
        size = self.alphabet.size
        grouped = self.table.reshape(size**word_len, -1)
        return float(0.5 * (grouped.max(axis=1) - grouped.min(axis=1)).max())

    def rho(self, n: int) -> tuple[float, float]:
        """Exact oscillation ratio of g over pairs agreeing on [0, n]."""
        if not self.is_positive:
            raise ConfigError("oscillation ratio undefined for a non-positive model")
        if n >= self.memory:
            return 1.0, 1.0
        size = self.alphabet.size
        grouped = self.table.reshape(size ** (n + 1), -1)
        value = float((grouped.max(axis=1) / grouped.min(axis=1)).max())
        return value, value


class LongRangeLinearModel:
    """Binary-alphabet family g(x) = 1/2 + theta*s(x_0)*sum_k a_k*s(x_k).

    Signs s map the two symbols to -1/+1 (alphabet order by default), theta
    lies in (0, 1/2), and the coefficient mass sum_k a_k is at most 1, which
    keeps g strictly positive.  The oscillation ratio over pairs agreeing on
    [0, n] has the closed form

        rho_n = (1/2 + theta*A - 2*theta*h_n) / (1/2 - theta*A),

    with A the total coefficient mass and h_n the partial sum up to n; the
    denominator is the global minimum of g and does not depend on n.
    """

    memory = None

    def __init__(self, alphabet: Alphabet, theta: float, coefficients, signs=None):
        if alphabet.size != 2:
            raise ConfigError("long-range linear family is defined on a binary alphabet")
        if not 0 < theta < 0.5:
            raise ConfigError("theta must lie in (0, 1/2)")
        self.alphabet = alphabet
        self.theta = float(theta)
        self.coefficients = coefficients
        total = coefficients.total
        if total > 1 + 1e-12:
            raise ConfigError(f"coefficient mass {total:.6f} exceeds 1")
        if signs is None:
            signs = (-1.0, 1.0)
        signs = tuple(float(s) for s in signs)
        if sorted(signs) != [-1.0, 1.0]:
            raise ConfigError("sign map must assign -1 and +1")
        self._signs = np.asarray(signs)

    @property
    def is_positive(self) -> bool:
        return True  # enforced by the constructor constraints

    @property
    def total_mass(self) -> float:
        return self.coefficients.total

    def eval_indices(self, idx: Sequence[int]) -> tuple[float, float]:
        n = len(idx)
        signs = self._signs[np.asarray(idx, dtype=np.intp)]
        if n == 1:
            mid = 0.5
        else:
            avec = self.coefficients.array(n - 1)
            mid = 0.5 + self.theta * float(signs[0]) * float(np.dot(avec[1:n], signs[1:]))
        return mid, self.theta * self.coefficients.tail(n - 1)

    def uniform_eval_error(self, word_len: int) -> float:
        return self.theta * self.coefficients.tail(word_len - 1)

    def rho(self, n: int) -> tuple[float, float]:
        g_min = 0.5 - self.theta * self.total_mass
        h = self.coefficients.prefix(n)
        value = (0.5 + self.theta * self.total_mass - 2 * self.theta * h) / g_min
        return value, value


def iid_model(alphabet: Alphabet, probs: Sequence[float]) -> FiniteMemoryModel:
    """Memory-0 model: an i.i.d. symbol law."""
    return FiniteMemoryModel(alphabet, 0, np.asarray(probs, dtype=float))


# ---------------------------------------------------------------------------
# operations


def _check_word(model, word: Word) -> tuple[int, ...]:
    return model.alphabet.indices(word.symbols)


def eval_g(model, word: Word, truncation: int | None = None) -> tuple[float, float]:
    """Evaluate g on the cylinder fixed by ``word`` (anchored at 0).

    Returns ``(value, error_bound)`` with the interval semantics described in
    the module docstring.  ``truncation`` caps the number of coordinates used
    in the computation; for the long-range family it must be at least the
    word length (coordinates beyond the word are unknown and are covered by
    the error bound either way).
    """
    if word.anchor != 0:
        raise ConfigError("eval_g expects a word anchored at coordinate 0")
    if len(word) < 1:
        raise ConfigError("eval_g expects a non-empty word")
    idx = _check_word(model, word)
    if truncation is not None:
        if isinstance(model, LongRangeLinearModel) and truncation < len(idx):
            raise ConfigError("truncation must be at least the word length")
        idx = idx[: max(truncation, 1)]
    return model.eval_indices(idx)


def cylinder_prob(
    model, block: Word, context: Word | None = None
) -> tuple[float, float]:
    """Probability of ``block`` under the conditional cylinder law given
    the adjacent ``context`` to its right.

    The value is the product over block coordinates i of g applied to the
    sequence starting at i; per-factor truncation intervals are propagated
    multiplicatively, so the error bound is 0 exactly when every factor's
    dependence window lies inside block + context.
    """
    if context is None or len(context) == 0:
        combined = _check_word(model, block)
    else:
        if context.anchor != block.end + 1:
            raise ConfigError(
                f"context interval {context.interval} is not adjacent to "
                f"block interval {block.interval}"
            )
        combined = _check_word(model, block) + _check_word(model, context)
    if len(block) == 0:
        return 1.0, 0.0
    lo = hi = 1.0
    for j in range(len(block)):
        mid, rad = model.eval_indices(combined[j:])
        lo *= max(mid - rad, 0.0)
        hi *= min(mid + rad, 1.0)
    return 0.5 * (lo + hi), 0.5 * (hi - lo)


def rho_interval(model, n: int) -> tuple[float, float]:
    """Bounds on the oscillation ratio of g over pairs agreeing on [0, n]."""
    if n < 0:
        raise ConfigError("n must be >= 0")
    return model.rho(n)


# ---------------------------------------------------------------------------
# variation profiles


@dataclass(frozen=True)
class ZeroTail:
    """Variation vanishes beyond the memory horizon."""

    start: int

    def var_at(self, n: int) -> float:
        return 0.0


@dataclass(frozen=True)
class PowerTail:
    """var(n) <= coef * n**(-exponent)."""

    coef: float
    exponent: float

    def var_at(self, n: int) -> float:
        return self.coef * n ** (-self.exponent)


@dataclass(frozen=True)
class ExponentialTail:
    """var(n) <= coef * ratio**n."""

    coef: float
    ratio: float

    def var_at(self, n: int) -> float:
        return self.coef * self.ratio**n


@dataclass(frozen=True)
class VariationProfile:
    """Per-n values (or upper bounds) of the log-oscillation of g.

    ``values[n]`` is var_{[0,n]}(log g) for n up to the tabulated horizon;
    beyond it, the closed-form ``tail`` supplies an upper bound.
    """

    kind: str  # "exact" or "upper_bound"
    values: np.ndarray
    tail: ZeroTail | PowerTail | ExponentialTail | None = None

    def __post_init__(self):
        if self.kind not in ("exact", "upper_bound"):
            raise ConfigError("profile kind must be 'exact' or 'upper_bound'")
        diffs = np.diff(self.values)
        if (diffs > 1e-12).any():
            raise ConfigError("variation values must be non-increasing")
        if (np.asarray(self.values) < -1e-15).any():
            raise ConfigError("variation values must be non-negative")

    @property
    def horizon(self) -> int:
        return len(self.values) - 1

    def var_at(self, n: int) -> float:
        if n <= self.horizon:
            return float(self.values[n])
        if self.tail is None:
            raise ConfigError(f"n={n} beyond horizon {self.horizon} and no tail model")
        return self.tail.var_at(n)

    def rho_at(self, n: int) -> float:
        return math.exp(self.var_at(n))


def variation_profile(model, horizon: int) -> VariationProfile:
    """Tabulate var_{[0,n]}(log g) = log rho_{[0,n]} for n = 0..horizon."""
    if horizon < 0:
        raise ConfigError("horizon must be >= 0")
    uppers = np.array([math.log(model.rho(n)[1]) for n in range(horizon + 1)])
    uppers = np.minimum.accumulate(uppers)  # clear float noise in flat stretches
    if isinstance(model, FiniteMemoryModel):
        return VariationProfile("exact", uppers, ZeroTail(model.memory))
    coeffs = model.coefficients
    g_min = 0.5 - model.theta * model.total_mass
    if isinstance(coeffs, PowerLawCoefficients):
        # tail(n) <= c * n**(1-p) / (p-1) and log(1+x) <= x
        tail = PowerTail(
            2 * model.theta * coeffs.c / (g_min * (coeffs.p - 1)), coeffs.p - 1
        )
    else:
        tail = ExponentialTail(
            2 * model.theta * coeffs.c * coeffs.r / (g_min * (1 - coeffs.r)), coeffs.r
        )
    return VariationProfile("upper_bound", uppers, tail)


def finite_memory_surrogate(model, memory: int):
    """Project any model onto a finite-memory table by midpoint evaluation.

    Returns ``(surrogate, defect, half_width)`` where ``half_width`` bounds
    |g - g_mid| over all words of length memory+1 and ``defect`` is the
    largest per-context normalisation correction that was applied.
    """
    size = model.alphabet.size
    n_entries = size ** (memory + 1)
    vec = np.empty(n_entries)
    for code in range(n_entries):
        vec[code], _ = model.eval_indices(decode(code, size, memory + 1))
    grouped = vec.reshape(size, size**memory)
    rowsums = grouped.sum(axis=0)
    defect = float(np.abs(rowsums - 1.0).max())
    grouped /= rowsums
    surrogate = FiniteMemoryModel(model.alphabet, memory, grouped.reshape(-1))
    return surrogate, defect, model.uniform_eval_error(memory + 1)


# ---------------------------------------------------------------------------
# model definition files
#
# Line-oriented key=value grammar ('#' starts a comment):
#
#   variant = finite_memory | long_range_linear
#   alphabet = 0,1
#   memory = 1                  (finite_memory)
#   table[01] = 0.3             (one line per word of length memory+1)
#   theta = 0.25                (long_range_linear)
#   coeff_law = power_law | exponential
#   coeff_c = 0.3 | coeff_mass = 0.5
#   coeff_p = 2.0               (power_law)
#   coeff_r = 0.5               (exponential)
#   sign[0] = -1                (optional; defaults follow alphabet order)


def parse_model(text: str):
    """Parse a model definition; raises ConfigError with the offending line."""
    plain: dict[str, str] = {}
    table: dict[str, str] = {}
    signs: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key.startswith("table[") and key.endswith("]"):
            table[key[6:-1]] = value
        elif key.startswith("sign[") and key.endswith("]"):
            signs[key[5:-1]] = value
        else:
            plain[key] = value

    def need(key: str) -> str:
        if key not in plain:
            raise ConfigError(f"missing required key {key!r}")
        return plain[key]

    def number(key: str) -> float:
        try:
            return float(need(key))
        except ValueError:
            raise ConfigError(f"key {key!r} must be numeric, got {plain[key]!r}") from None

    alphabet = Alphabet(tuple(s.strip() for s in need("alphabet").split(",")))
    variant = need("variant")
    if variant == "finite_memory":
        memory = int(number("memory"))
        entries = {word: float(value) for word, value in table.items()}
        return FiniteMemoryModel(alphabet, memory, entries)
    if variant == "long_range_linear":
        law = need("coeff_law")
        if law == "power_law":
            p = number("coeff_p")
            if "coeff_mass" in plain:
                coeffs = PowerLawCoefficients.from_mass(p, number("coeff_mass"))
            else:
                coeffs = PowerLawCoefficients(number("coeff_c"), p)
        elif law == "exponential":
            r = number("coeff_r")
            if "coeff_mass" in plain:
                coeffs = ExponentialCoefficients.from_mass(r, number("coeff_mass"))
            else:
                coeffs = ExponentialCoefficients(number("coeff_c"), r)
        else:
            raise ConfigError(f"unknown coeff_law {law!r}")
        sign_map = None
        if signs:
            sign_map = [0.0] * alphabet.size
            for symbol, value in signs.items():
                sign_map[alphabet.index(symbol)] = float(value)
        return LongRangeLinearModel(alphabet, number("theta"), coeffs, sign_map)
    raise ConfigError(f"unknown variant {variant!r}")


def load_model(path):
    return parse_model(Path(path).read_text())
