"""Exponent sequences k_1 < k_2 < ... and their reciprocal sums.

A :class:`SequenceSpec` never extends itself past ``horizon``; every index
argument is checked against it.  Terms are exact Python integers, while
bulk reciprocals come back as float64 arrays for the numeric code paths.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from decimal import Decimal, localcontext
from typing import Mapping

import numpy as np

from .errors import HorizonExceeded, InsufficientHorizon, ValidationError

KINDS = ("linear", "polynomial", "geometric", "explicit")
CLASSES = ("divergent", "convergent", "unknown")

_DECIMAL_PREC = 40
_INT64_SAFE = 2**62
_ROUND_UP = 1.0 + 1e-12


def _as_int(name, value):
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        if isinstance(value, float) and value.is_integer():
            return int(value)
        raise ValidationError(f"{name} must be an integer, got {value!r}")
    return int(value)


@dataclass(frozen=True)
class SequenceSpec:
    """Generator of a strictly increasing positive integer sequence.

    ``params`` by kind: linear ``{"c", "d"}`` (k_n = c*n + d), polynomial
    ``{"p"}`` (k_n = n**p), geometric ``{"b"}`` (k_n = b**n), explicit
    ``{"terms"}`` with an optional ``"declared_class"``.
    """

    kind: str
    params: Mapping = field(default_factory=dict)
    horizon: int = 1

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown sequence kind {self.kind!r}")
        horizon = _as_int("horizon", self.horizon)
        if horizon < 1:
            raise ValidationError("horizon must be a positive integer")
        object.__setattr__(self, "horizon", horizon)
        p = dict(self.params)
        if self.kind == "linear":
            p = {"c": _as_int("c", p.get("c", 1)), "d": _as_int("d", p.get("d", 0))}
            if p["c"] < 1 or p["c"] + p["d"] < 1:
                raise ValidationError("linear sequence needs c >= 1 and c + d >= 1")
        elif self.kind == "polynomial":
            p = {"p": _as_int("p", p.get("p", 1))}
            if p["p"] < 1:
                raise ValidationError("polynomial exponent must be >= 1")
        elif self.kind == "geometric":
            p = {"b": _as_int("b", p.get("b", 2))}
            if p["b"] < 2:
                raise ValidationError("geometric base must be >= 2")
        else:
            terms = tuple(_as_int("term", t) for t in p.get("terms", ()))
            if not terms or terms[0] < 1:
                raise ValidationError("explicit terms must be positive")
            if any(b <= a for a, b in zip(terms, terms[1:])):
                raise ValidationError("explicit terms must be strictly increasing")
            if horizon > len(terms):
                raise ValidationError("horizon exceeds the number of explicit terms")
            declared = p.get("declared_class", "unknown")
            if declared not in CLASSES:
                raise ValidationError(f"unknown declared_class {declared!r}")
            p = {"terms": terms, "declared_class": declared}
        object.__setattr__(self, "params", p)

    # -- constructors -------------------------------------------------------
    @classmethod
    def linear(cls, c=1, d=0, horizon=1000):
        return cls("linear", {"c": c, "d": d}, horizon)

    @classmethod
    def polynomial(cls, p, horizon=1000):
        return cls("polynomial", {"p": p}, horizon)

    @classmethod
    def geometric(cls, b=2, horizon=60):
        return cls("geometric", {"b": b}, horizon)

    @classmethod
    def explicit(cls, terms, horizon=None, declared_class="unknown"):
        terms = [int(t) for t in terms]
        return cls(
            "explicit",
            {"terms": terms, "declared_class": declared_class},
            len(terms) if horizon is None else horizon,
        )

    # -- serialization ------------------------------------------------------
    def to_dict(self):
        params = dict(self.params)
        if self.kind == "explicit":
            params["terms"] = list(params["terms"])
        return {"kind": self.kind, "params": params, "horizon": self.horizon}

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, Mapping):
            raise ValidationError("sequence must be a JSON object")
        missing = {"kind", "horizon"} - set(data)
        if missing:
            raise ValidationError(f"sequence is missing {sorted(missing)}")
        return cls(data["kind"], data.get("params", {}), data["horizon"])

    # -- classification -----------------------------------------------------
    @property
    def declared_class(self):
        if self.kind == "linear":
            return "divergent"
        if self.kind == "polynomial":
            return "divergent" if self.params["p"] == 1 else "convergent"
        if self.kind == "geometric":
            return "convergent"
        return self.params["declared_class"]

    def tail_bound(self, n):
        """Upper bound on sum_{v > n} 1/k_v, or None when no closed form is known.

        The closed forms are nudged up by 1e-12 relative so that rounding can
        never push the bound below the true tail.
        """
        if self.kind == "geometric":
            b = self.params["b"]
            return math.exp(-n * math.log(b)) / (b - 1) * _ROUND_UP
        if self.kind == "polynomial" and self.params["p"] >= 2:
            p = self.params["p"]
            return float(n) ** (1 - p) / (p - 1) * _ROUND_UP
        return None

    # -- terms --------------------------------------------------------------
    def _check(self, n):
        if n < 1:
            raise ValidationError(f"sequence indices start at 1, got {n}")
        if n > self.horizon:
            raise HorizonExceeded(
                f"index {n} is beyond horizon {self.horizon}",
                index=int(n),
                horizon=self.horizon,
            )

    def term(self, n):
        n = int(n)
        self._check(n)
        if self.kind == "linear":
            return self.params["c"] * n + self.params["d"]
        if self.kind == "polynomial":
            return n ** self.params["p"]
        if self.kind == "geometric":
            return self.params["b"] ** n
        return self.params["terms"][n - 1]

    def terms(self, start=1, stop=None):
        """Terms k_start..k_stop inclusive (int64 array, object dtype if huge)."""
        stop = self.horizon if stop is None else int(stop)
        if stop < start:
            return np.zeros(0, dtype=np.int64)
        self._check(start)
        self._check(stop)
        n = np.arange(start, stop + 1, dtype=np.int64)
        if self.kind == "linear":
            return self.params["c"] * n + self.params["d"]
        if self.kind == "explicit":
            vals = self.params["terms"][start - 1 : stop]
            dtype = np.int64 if vals[-1] < _INT64_SAFE else object
            return np.array(vals, dtype=dtype)
        last = self.term(stop)
        if last < _INT64_SAFE:
            if self.kind == "polynomial":
                return n ** self.params["p"]
            return np.int64(self.params["b"]) ** n
        return np.array([self.term(i) for i in range(start, stop + 1)], dtype=object)

    def reciprocals(self, start=1, stop=None):
        """Float64 array of 1/k_n for start <= n <= stop."""
        stop = self.horizon if stop is None else int(stop)
        if stop < start:
            return np.zeros(0)
        self._check(start)
        self._check(stop)
        n = np.arange(start, stop + 1, dtype=np.float64)
        if self.kind == "linear":
            return 1.0 / (self.params["c"] * n + self.params["d"])
        if self.kind == "polynomial":
            return np.float_power(n, -self.params["p"])
        if self.kind == "geometric":
            return np.float_power(float(self.params["b"]), -n)
        vals = self.params["terms"][start - 1 : stop]
        if vals[-1] < 2**53:
            return 1.0 / np.array(vals, dtype=np.float64)
        return np.array([1.0 / t for t in vals])


def materialize(spec, n):
    """k_n; raises :class:`HorizonExceeded` past the horizon."""
    return spec.term(n)


def reciprocal_partial_sum(spec, n):
    """sum_{j=1..n} 1/k_j as a Decimal carried at 40 significant digits."""
    spec._check(int(n))
    with localcontext() as ctx:
        ctx.prec = _DECIMAL_PREC
        one = Decimal(1)
        total = Decimal(0)
        for j in range(1, int(n) + 1):
            total += one / Decimal(spec.term(j))
        return +total


@dataclass(frozen=True)
class ReciprocalSumReport:
    partial_sums: list
    declared_class: str

    def to_dict(self):
        return {
            "partial_sums": [[n, str(s)] for n, s in self.partial_sums],
            "declared_class": self.declared_class,
        }


def reciprocal_report(spec, checkpoints=None):
    """Partial sums at the given indices (default: powers of ten and the horizon).

    ``declared_class`` is copied from the sequence kind; it is never inferred
    from the numbers.
    """
    if checkpoints is None:
        checkpoints = [10**e for e in range(int(math.log10(spec.horizon)) + 1)]
        checkpoints.append(spec.horizon)
    checkpoints = sorted(set(int(c) for c in checkpoints))
    for c in checkpoints:
        spec._check(c)
    sums = []
    with localcontext() as ctx:
        ctx.prec = _DECIMAL_PREC
        total = Decimal(0)
        j = 0
        for c in checkpoints:
            while j < c:
                j += 1
                total += Decimal(1) / Decimal(spec.term(j))
            sums.append((c, +total))
    return ReciprocalSumReport(sums, spec.declared_class)


@dataclass(frozen=True)
class GapSubsequence:
    """Terms k_{rho*N0 + j}, rho = 1, 2, ..., of one residue class j mod N0."""

    parent: SequenceSpec
    residue: int
    block_size: int
    indices: np.ndarray
    gap_floor: float

    def __len__(self):
        return len(self.indices)

    @property
    def terms(self):
        return self.parent.terms(1, int(self.indices[-1]))[self.indices - 1]

    def term(self, i):
        """i-th selected term, 1-based."""
        return self.parent.term(int(self.indices[i - 1]))

    def parent_index(self, i):
        return int(self.indices[i - 1])

    def reciprocal_sum(self):
        return math.fsum(self.parent.reciprocals(1, int(self.indices[-1]))[self.indices - 1])

    def as_sequence(self):
        return SequenceSpec.explicit(
            [int(t) for t in self.terms], declared_class=self.parent.declared_class
        )

    def to_dict(self):
        return {
            "residue": self.residue,
            "block_size": self.block_size,
            "gap_floor": self.gap_floor,
            "count": len(self),
            "first_index": int(self.indices[0]),
        }


def _class_sum_decimal(spec, idx):
    with localcontext() as ctx:
        ctx.prec = _DECIMAL_PREC
        return sum((Decimal(1) / Decimal(spec.term(int(i))) for i in idx), Decimal(0))


def extract_gapped_subsequence(spec, M, horizon=None):
    """Residue class of indices mod N0 = floor(M) + 1 with the largest reciprocal sum.

    Consecutive selected terms differ by at least N0 > M because
    k_{v2} - k_{v1} >= v2 - v1 for any strictly increasing integer sequence.
    Ties go to the smallest residue.
    """
    horizon = spec.horizon if horizon is None else int(horizon)
    if horizon > spec.horizon:
        raise HorizonExceeded(
            f"horizon {horizon} exceeds the sequence horizon {spec.horizon}",
            index=horizon,
            horizon=spec.horizon,
        )
    M = float(M)
    if not M > 0:
        raise ValidationError("gap floor M must be positive")
    n0 = int(math.floor(M)) + 1
    if horizon < 2 * n0:
        raise InsufficientHorizon(
            f"horizon {horizon} cannot hold two terms of any residue class mod {n0}",
            horizon=horizon,
            block_size=n0,
        )
    recips = spec.reciprocals(1, horizon)
    classes = []
    for j in range(n0):
        idx = np.arange(n0 + j, horizon + 1, n0, dtype=np.int64)
        if len(idx) < 2:
            continue
        classes.append((math.fsum(recips[idx - 1]), j, idx))
    best = max(classes, key=lambda c: c[0])
    close = [c for c in classes if math.isclose(c[0], best[0], rel_tol=1e-12)]
    if len(close) > 1:
        exact = [(_class_sum_decimal(spec, c[2]), -c[1], c) for c in close]
        best = max(exact, key=lambda e: (e[0], e[1]))[2]
    else:
        best = min(close, key=lambda c: c[1])
    return GapSubsequence(spec, best[1], n0, best[2], M)
