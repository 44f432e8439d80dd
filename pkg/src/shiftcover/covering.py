"""Multiplicative interval coverings and measure estimates for G-sets.

A covering plan chops [lo, hi] at breakpoints a_i = lo * (1+eps)^{S_i},
S_i = sum_{j<i} 1/k_{n0+j}.  On block [a_i, a_{i+1}) the multiplier
beta_{i+1} = a_i^{-k_{n0+i}} keeps |lam^k * beta - 1| below eps.

G-sets {lam : |lam^N z0 - 1| < eps} meet a real window in one interval,
whose length is at most hi * (((1+eps)/(1-eps))^{1/N} - 1).  Summing those
lengths over a sparse exponent sequence gives the nonexistence certificate.
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DomainError,
    HorizonExceeded,
    InsufficientHorizon,
    InvalidStart,
    MissingTailBound,
    NotApplicable,
    ValidationError,
)
from .seqcore import SequenceSpec
from .shiftspace import FiniteVector, LogScalar


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        lo, hi = float(self.lo), float(self.hi)
        if not (1 < lo < hi < math.inf):
            raise ValidationError(f"need 1 < lo < hi < inf, got [{lo}, {hi}]")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def width(self):
        return self.hi - self.lo

    def __contains__(self, lam):
        return self.lo <= lam <= self.hi

    def to_list(self):
        return [self.lo, self.hi]

    @classmethod
    def parse(cls, value):
        if isinstance(value, Interval):
            return value
        if isinstance(value, str):
            value = value.split(",")
        try:
            lo, hi = (float(v) for v in value)
        except (TypeError, ValueError):
            raise ValidationError(f"cannot read an interval from {value!r}") from None
        return cls(lo, hi)


def _check_epsilon(eps):
    eps = float(eps)
    if not 0 < eps < 1:
        raise ValidationError(f"epsilon must lie in (0, 1), got {eps}")
    return eps


# --------------------------------------------------------------------------
# covering plans
# --------------------------------------------------------------------------
@dataclass(frozen=True)
class CoveringPlan:
    interval: Interval
    epsilon: float
    start_index: int
    terms: tuple
    breakpoints: np.ndarray
    log_multipliers: np.ndarray
    sequence: dict = field(default=None, compare=False)

    @property
    def block_count(self):
        return len(self.breakpoints)

    @property
    def last_block(self):
        return len(self.breakpoints) - 1

    @property
    def multipliers(self):
        return [LogScalar(float(b)) for b in self.log_multipliers]

    def to_dict(self):
        return {
            "interval": self.interval.to_list(),
            "epsilon": self.epsilon,
            "start_index": self.start_index,
            "block_count": self.block_count,
            "terms": [int(t) for t in self.terms],
            "breakpoints": [float(a) for a in self.breakpoints],
            "log_multipliers": [float(b) for b in self.log_multipliers],
            "sequence": self.sequence,
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            Interval.parse(data["interval"]),
            float(data["epsilon"]),
            int(data["start_index"]),
            tuple(int(t) for t in data["terms"]),
            np.asarray(data["breakpoints"], dtype=np.float64),
            np.asarray(data["log_multipliers"], dtype=np.float64),
            data.get("sequence"),
        )


def minimal_start_index(interval, epsilon, seq):
    """Smallest n0 with k_{n0} > log(1+eps)/log(hi/lo)."""
    bound = math.log1p(epsilon) / math.log(interval.hi / interval.lo)
    terms = seq.terms(1, seq.horizon)
    pos = int(np.searchsorted(terms.astype(np.float64), bound, side="right"))
    while pos < len(terms) and not terms[pos] > bound:
        pos += 1
    if pos >= len(terms):
        raise InsufficientHorizon(
            "no term within the horizon exceeds the start bound", bound=bound
        )
    return pos + 1


def build_covering(interval, epsilon, seq, start_index=None):
    """Breakpoints and multipliers covering ``interval`` along k_{n0}, k_{n0+1}, ...

    The last block is i0 = the largest i with a_i <= hi; the plan requires
    a_{i0+1} > hi, so the terms k_{n0}..k_{n0+i0} must all lie within the
    horizon.
    """
    interval = Interval.parse(interval)
    eps = _check_epsilon(epsilon)
    if start_index is None:
        start_index = minimal_start_index(interval, eps, seq)
    n0 = int(start_index)
    if n0 < 1:
        raise ValidationError("start index must be >= 1")
    if n0 > seq.horizon:
        raise InsufficientHorizon(
            f"start index {n0} is beyond horizon {seq.horizon}",
            start_index=n0,
            horizon=seq.horizon,
        )
    log_step = math.log1p(eps)
    log_ratio = math.log(interval.hi / interval.lo)
    k0 = seq.term(n0)
    if not k0 > log_step / log_ratio:
        raise InvalidStart(
            f"k_{n0} = {k0} must exceed log(1+eps)/log(hi/lo) = {log_step / log_ratio:.6g}",
            start_index=n0,
        )

    recips = seq.reciprocals(n0, seq.horizon)
    # S_i for i = 0 .. len(recips)
    S = np.concatenate(([0.0], np.cumsum(recips)))
    log_lo = math.log(interval.lo)
    a = np.exp(log_lo + S * log_step)
    a[0] = interval.lo
    beyond = np.nonzero(a > interval.hi)[0]
    if len(beyond) == 0:
        raise InsufficientHorizon(
            "horizon exhausted before the breakpoints pass the right endpoint",
            reached=float(a[-1]),
            hi=interval.hi,
            horizon=seq.horizon,
            log_ratio_needed=log_ratio / log_step,
            reciprocal_sum_available=float(S[-1]),
        )
    i0 = int(beyond[0]) - 1
    breakpoints = a[: i0 + 1].copy()
    terms = seq.terms(n0, n0 + i0)
    log_beta = np.array([-int(k) * math.log(float(ai)) for k, ai in zip(terms, breakpoints)])
    return CoveringPlan(
        interval,
        eps,
        n0,
        tuple(int(t) for t in terms),
        breakpoints,
        log_beta,
        seq.to_dict() if len(terms) < 10_000 or seq.kind != "explicit" else None,
    )


def locate_block(plan, lam):
    """Largest i with a_i <= lam; a breakpoint belongs to the block it starts."""
    lam = float(lam)
    if lam not in plan.interval:
        raise DomainError(
            f"lambda {lam} lies outside [{plan.interval.lo}, {plan.interval.hi}]",
            lam=lam,
        )
    return bisect.bisect_right(plan.breakpoints.tolist(), lam) - 1


@dataclass
class CoveringReport:
    lambdas: np.ndarray
    blocks: np.ndarray
    errors: np.ndarray
    epsilon: float

    @property
    def max_error(self):
        return float(self.errors.max())

    @property
    def argmax(self):
        return float(self.lambdas[int(self.errors.argmax())])

    @property
    def passed(self):
        return bool(self.max_error < self.epsilon)

    def rows(self):
        return zip(self.lambdas.tolist(), self.blocks.tolist(), self.errors.tolist())

    def to_dict(self):
        return {
            "grid_size": len(self.lambdas),
            "max_error": self.max_error,
            "argmax_lambda": self.argmax,
            "epsilon": self.epsilon,
            "passed": self.passed,
        }


def verify_covering(plan, grid_size=10_000):
    """Evaluate |lam^k beta - 1| on a uniform grid with endpoints included."""
    lams = np.linspace(plan.interval.lo, plan.interval.hi, int(grid_size))
    blocks = np.searchsorted(plan.breakpoints, lams, side="right") - 1
    k = np.asarray(plan.terms, dtype=np.float64)[blocks]
    with np.errstate(over="ignore"):
        errors = np.abs(np.expm1(k * np.log(lams) + plan.log_multipliers[blocks]))
    return CoveringReport(lams, blocks, errors, plan.epsilon)


# --------------------------------------------------------------------------
# G-sets
# --------------------------------------------------------------------------
def g_set_interval(z0, N0, epsilon, window):
    """{lam in window : |lam^N0 z0 - 1| < eps} as an open interval, or None.

    With w = lam^N0 |z0| and cos(phi) = Re(z0)/|z0| the defining quadratic
    |z0|^2 y^2 - 2 Re(z0) y + (1 - eps^2) < 0 in y = lam^N0 becomes
    w^2 - 2 cos(phi) w + (1 - eps^2) < 0.  Its roots are solved in that
    normalized form so that tiny or huge z0 never under/overflow.
    """
    eps = _check_epsilon(epsilon)
    window = Interval.parse(window)
    N0 = int(N0)
    if N0 < 1:
        raise ValidationError("N0 must be a positive integer")
    z = z0 if isinstance(z0, LogScalar) else LogScalar.from_value(z0)
    if z.is_zero:
        return None
    cos_phi = z.phase.real
    sin_phi = z.phase.imag
    disc = eps * eps - sin_phi * sin_phi
    if disc <= 0:
        return None
    w_hi = cos_phi + math.sqrt(disc)
    if w_hi <= 0:
        return None
    w_lo = (1.0 - eps * eps) / w_hi
    lam_lo = math.exp((math.log(w_lo) - z.log_magnitude) / N0)
    lam_hi = math.exp((math.log(w_hi) - z.log_magnitude) / N0)
    lo = max(window.lo, lam_lo)
    hi = min(window.hi, lam_hi)
    if not lo < hi:
        return None
    return (lo, hi)


def g_set_measure_bound(N0, epsilon, window):
    """hi * (((1+eps)/(1-eps))^{1/N0} - 1), independent of z0."""
    eps = _check_epsilon(epsilon)
    window = Interval.parse(window)
    return window.hi * math.expm1((math.log1p(eps) - math.log1p(-eps)) / int(N0))


def union_measure(intervals):
    """Lebesgue measure of a union of intervals by sort and merge."""
    total = 0.0
    cur_lo = cur_hi = None
    for lo, hi in sorted(intervals):
        if cur_hi is None or lo > cur_hi:
            if cur_hi is not None:
                total += cur_hi - cur_lo
            cur_lo, cur_hi = lo, hi
        elif hi > cur_hi:
            cur_hi = hi
    if cur_hi is not None:
        total += cur_hi - cur_lo
    return total


def coverage_intervals(x, seq, interval, epsilon, v_range):
    """The nonempty sets G_v = {lam : |lam^{k_v} x_{k_v+1} - 1| < eps}, v in v_range."""
    interval = Interval.parse(interval)
    out = []
    top = x.max_index
    for v in v_range:
        k = seq.term(v)
        if k + 1 > top:
            continue
        z = x.entry(k + 1)
        if z.is_zero:
            continue
        g = g_set_interval(z, k, epsilon, interval)
        if g is not None:
            out.append(g)
    return out


def empirical_coverage(x, seq, interval, epsilon, v_range):
    """Measure of the union of G_v over v in ``v_range``."""
    return union_measure(coverage_intervals(x, seq, interval, epsilon, v_range))


# --------------------------------------------------------------------------
# nonexistence certificate
# --------------------------------------------------------------------------
def _log_ratio(eps):
    return math.log1p(eps) - math.log1p(-eps)


@dataclass(frozen=True)
class NonexistenceCertificate:
    interval: Interval
    sequence: dict
    horizon: int
    partial_sum: float
    tail_bound: float
    sigma_horizon: float
    delta_0: float
    epsilon_0: float
    epsilon_1: float
    N_0: int
    finite_part: float
    tail_part: float
    bound_sum: float
    chain_rhs: float
    slack: float

    @property
    def valid(self):
        return self.slack > 0

    @property
    def inequality_1(self):
        """(lhs, rhs) of (1+eps0)/(1-eps0) < exp(delta0/M0), both as logs."""
        return (_log_ratio(self.epsilon_0), self.delta_0 / self.interval.hi)

    def to_dict(self):
        lhs, rhs = self.inequality_1
        return {
            "interval": self.interval.to_list(),
            "sequence": self.sequence,
            "horizon": self.horizon,
            "partial_sum": self.partial_sum,
            "tail_bound": self.tail_bound,
            "sigma_horizon": self.sigma_horizon,
            "delta_0": self.delta_0,
            "epsilon_0": self.epsilon_0,
            "epsilon_1": self.epsilon_1,
            "N_0": self.N_0,
            "log_ratio_eps0": lhs,
            "delta_over_M0": rhs,
            "finite_part": self.finite_part,
            "tail_part": self.tail_part,
            "bound_sum": self.bound_sum,
            "chain_rhs": self.chain_rhs,
            "slack": self.slack,
            "valid": self.valid,
        }

    @classmethod
    def from_dict(cls, data):
        names = cls.__dataclass_fields__
        kw = {k: data[k] for k in names if k != "interval"}
        return cls(interval=Interval.parse(data["interval"]), **kw)


def _dyadic_epsilon(threshold):
    t = 1
    while True:
        eps = 2.0**-t
        if _log_ratio(eps) < threshold:
            return eps
        t += 1


def _block_threshold(c, target_log):
    """Smallest N with N*log(1 + c/N) > target_log.

    N*log(1 + c/N) increases with N, so the inequality then holds for
    every larger N as well.
    """
    N = 1
    while not N * math.log1p(c / N) > target_log:
        N += 1
    return N


def nonexistence_certificate(interval, seq, epsilon_0=None):
    """Evaluate the measure-counting obstruction for a convergent sequence.

    sigma = partial sum at the horizon plus the closed-form tail bound;
    delta0 = (M0 - mu0)/(2 sigma); eps0 is the largest 2^-t with
    (1+eps0)/(1-eps0) < exp(delta0/M0) unless given; N0 is the first N with
    (delta0/(M0 N) + 1)^N > (1+eps0)/(1-eps0).  With eps1 = eps0/2 the
    certificate bounds M0 * sum_{v >= N0} (((1+eps1)/(1-eps1))^{1/k_v} - 1)
    and is valid when that stays below M0 - mu0.
    """
    interval = Interval.parse(interval)
    if seq.declared_class != "convergent":
        raise NotApplicable(
            f"sequence class is {seq.declared_class}; the obstruction needs a convergent one",
            declared_class=seq.declared_class,
        )
    H = seq.horizon
    tail = seq.tail_bound(H)
    if tail is None:
        raise MissingTailBound("no closed-form tail bound for this sequence kind", kind=seq.kind)
    mu0, M0 = interval.lo, interval.hi
    recips = seq.reciprocals(1, H)
    partial = math.fsum(recips)
    sigma = partial + tail
    delta0 = (M0 - mu0) / (2.0 * sigma)
    threshold = delta0 / M0
    if epsilon_0 is None:
        eps0 = _dyadic_epsilon(threshold)
    else:
        eps0 = _check_epsilon(epsilon_0)
        if not _log_ratio(eps0) < threshold:
            raise ValidationError(
                "epsilon_0 violates (1+eps)/(1-eps) < exp(delta0/M0)",
                epsilon_0=eps0,
                threshold=threshold,
            )
    N0 = _block_threshold(threshold, _log_ratio(eps0))
    eps1 = eps0 / 2.0
    lr1 = _log_ratio(eps1)

    if N0 <= H:
        finite = M0 * math.fsum(np.expm1(lr1 * recips[N0 - 1 :]))
        tail_from = H
        recip_sum_from_N0 = math.fsum(recips[N0 - 1 :])
    else:
        finite = 0.0
        tail_from = N0 - 1
        recip_sum_from_N0 = 0.0
    tail_recips = seq.tail_bound(tail_from)
    # expm1(t) <= t * e^t and t_v <= lr1 / k_H for every v beyond the horizon
    tail_part = M0 * math.exp(lr1 * float(recips[-1])) * lr1 * tail_recips
    bound_sum = finite + tail_part
    chain_rhs = delta0 * (recip_sum_from_N0 + tail_recips)
    return NonexistenceCertificate(
        interval=interval,
        sequence=seq.to_dict(),
        horizon=H,
        partial_sum=partial,
        tail_bound=tail,
        sigma_horizon=sigma,
        delta_0=delta0,
        epsilon_0=eps0,
        epsilon_1=eps1,
        N_0=N0,
        finite_part=finite,
        tail_part=tail_part,
        bound_sum=bound_sum,
        chain_rhs=chain_rhs,
        slack=(M0 - mu0) - bound_sum,
    )


def recheck_certificate(cert):
    """Recompute a certificate from its own inputs; True when it reproduces."""
    seq = SequenceSpec.from_dict(cert.sequence)
    again = nonexistence_certificate(cert.interval, seq, cert.epsilon_0)
    return again.to_dict() == cert.to_dict()


def random_probe_vector(rng, seq, interval, v_range, density=0.5):
    """Random vector with entries at k_v + 1 whose G-sets tend to meet ``interval``.

    Each chosen entry gets modulus c^{-k_v} for a random c in the interval
    (times a factor near 1) and a random phase near 0, so that most G_v are
    nonempty and the union is as large as such vectors make it.
    """
    interval = Interval.parse(interval)
    idx, mant, scale = [], [], []
    for v in v_range:
        if rng.random() > density:
            continue
        k = seq.term(v)
        c = rng.uniform(interval.lo, interval.hi)
        idx.append(k + 1)
        mant.append(rng.uniform(0.8, 1.2) * np.exp(1j * rng.uniform(-0.2, 0.2)))
        scale.append(-k * math.log(c))
    if not idx:
        return FiniteVector.zero()
    return FiniteVector(idx, mant, scale)
