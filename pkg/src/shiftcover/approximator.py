"""Block vectors whose scaled-shift orbits approximate a target uniformly in lambda.

Given a target y = (q_1, ..., q_v0), an interval [a0, b0] and an accuracy
1/s0, :func:`construct_block_vector` appends to a center vector one block
beta_{i+1} * (q_1, ..., q_v0) per covering block i, placed right after the
gapped exponent mu_{v2+i}.  For lambda in block i the shift by mu_{v2+i}
brings that block to the front with head error below 1/(sqrt(2) s0) while
the remaining blocks form a tail below the same amount.

:func:`build_common_vector` chains several such stages, shrinking each new
perturbation so that every earlier certificate keeps a strict margin.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .covering import Interval, build_covering
from .errors import (
    ConstructionInvariantViolated,
    InsufficientHorizon,
    InvariantViolated,
    StageInfeasible,
    ValidationError,
)
from .seqcore import SequenceSpec, extract_gapped_subsequence
from .shiftspace import (
    FiniteVector,
    log_l2_distance,
    orbit_distances,
    scaled_shift_orbit_point,
)

DEFAULT_GRID = 1000
_MIN_LOG_RADIUS = -708.0


@dataclass(frozen=True)
class EpsilonCondition:
    """Every lambda in ``interval`` needs some v <= cutoff with
    ||(lambda B)^{k_v} x - target|| < accuracy."""

    target: FiniteVector
    interval: Interval
    accuracy: float
    cutoff: int | None = None

    def __post_init__(self):
        if len(self.target) == 0:
            raise ValidationError("target must have nonempty support")
        acc = float(self.accuracy)
        if not acc > 0:
            raise ValidationError("accuracy must be positive")
        object.__setattr__(self, "accuracy", acc)
        object.__setattr__(self, "interval", Interval.parse(self.interval))

    @property
    def length(self):
        """v0: the last index of the target support."""
        return self.target.max_index

    @property
    def coefficients(self):
        return np.array([self.target.get(j) for j in range(1, self.length + 1)])

    def to_dict(self):
        return {
            "target": self.target.to_json(),
            "interval": self.interval.to_list(),
            "accuracy": self.accuracy,
            "cutoff": self.cutoff,
        }

    @classmethod
    def from_dict(cls, data):
        try:
            return cls(
                FiniteVector.from_json(data["target"]),
                Interval.parse(data["interval"]),
                float(data["accuracy"]),
                None if data.get("cutoff") is None else int(data["cutoff"]),
            )
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed condition: {exc}") from None


@dataclass
class GridReport:
    lambdas: np.ndarray
    best_v: np.ndarray
    errors: np.ndarray
    accuracy: float
    log_center_distance: float
    center_radius: float
    overflow_count: int = 0

    @property
    def max_error(self):
        return float(self.errors.max())

    @property
    def argmax_lambda(self):
        return float(self.lambdas[int(self.errors.argmax())])

    @property
    def center_distance(self):
        return math.exp(self.log_center_distance)

    @property
    def margin(self):
        return self.accuracy - self.max_error

    @property
    def passed(self):
        return bool(
            self.max_error < self.accuracy
            and self.log_center_distance < math.log(self.center_radius)
        )

    def rows(self):
        return zip(self.lambdas.tolist(), self.best_v.tolist(), self.errors.tolist())

    def to_dict(self):
        return {
            "grid_size": len(self.lambdas),
            "max_error": self.max_error,
            "argmax_lambda": self.argmax_lambda,
            "accuracy": self.accuracy,
            "margin": self.margin,
            "center_distance": self.center_distance,
            "log_center_distance": self.log_center_distance,
            "center_radius": self.center_radius,
            "overflow_count": self.overflow_count,
            "passed": self.passed,
        }


@dataclass
class ApproxCertificate:
    vector: FiniteVector
    cutoff: int
    condition: EpsilonCondition
    center: FiniteVector
    center_radius: float
    sequence: dict
    construction_params: dict
    grid_report: GridReport = field(default=None, repr=False)
    grid_size: int = DEFAULT_GRID

    @property
    def passed(self):
        return self.grid_report is not None and self.grid_report.passed

    def to_dict(self):
        return {
            "vector": self.vector.to_json(),
            "cutoff": self.cutoff,
            "condition": self.condition.to_dict(),
            "center": self.center.to_json(),
            "center_radius": self.center_radius,
            "sequence": self.sequence,
            "construction_params": self.construction_params,
            "grid_size": self.grid_size,
            "grid_report": None if self.grid_report is None else self.grid_report.to_dict(),
        }

    @classmethod
    def from_dict(cls, data, verify=True):
        cert = cls(
            FiniteVector.from_json(data["vector"]),
            int(data["cutoff"]),
            EpsilonCondition.from_dict(data["condition"]),
            FiniteVector.from_json(data["center"]),
            float(data["center_radius"]),
            data["sequence"],
            data["construction_params"],
            None,
            int(data.get("grid_size", DEFAULT_GRID)),
        )
        if verify:
            cert.grid_report = verify_certificate(cert, cert.grid_size)
        return cert


# --------------------------------------------------------------------------
# verification
# --------------------------------------------------------------------------
def _candidate_shifts(x, allowed, v0):
    """Allowed shifts that can minimize ||(lam B)^k x - y|| for some lam.

    A shift that brings a support point into the head window 1..v0 is kept.
    Otherwise the distance is sqrt(||y||^2 + lam^{2k} ||B^k x||^2), which
    grows with k between consecutive support points, so only the smallest
    allowed shift past each support point (and the smallest overall) can
    win.
    """
    allowed = np.asarray(allowed)
    if allowed.dtype == object:
        allowed = np.array([min(int(a), 2**62) for a in allowed], dtype=np.int64)
    p = x.index
    pick = [allowed[:1]]
    for j in range(1, v0 + 1):
        k = p - j
        pick.append(k[np.isin(k, allowed)])
    pos = np.searchsorted(allowed, p, side="left")
    pick.append(allowed[pos[pos < len(allowed)]])
    return np.unique(np.concatenate(pick)), allowed


def verify_certificate(cert, grid_size=DEFAULT_GRID, vector=None):
    """Grid check of min_{v <= cutoff} ||(lam B)^{k_v} x - y|| < accuracy.

    ``vector`` replaces the certificate's own vector, which is how earlier
    stages are re-checked against a later common vector.  Pairs (lam, v)
    that overflow count as failures at that v only.
    """
    grid_size = int(grid_size)
    if grid_size < 2:
        raise ValidationError("grid_size must be at least 2")
    x = cert.vector if vector is None else vector
    cond = cert.condition
    seq = SequenceSpec.from_dict(cert.sequence)
    allowed = seq.terms(1, cert.cutoff)
    cands, allowed_int = _candidate_shifts(x, allowed, cond.length)
    lams = np.linspace(cond.interval.lo, cond.interval.hi, grid_size)
    dist = orbit_distances(x, lams, cands, cond.target)
    best = dist.argmin(axis=1)
    errors = dist[np.arange(len(lams)), best]
    best_v = np.searchsorted(allowed_int, cands[best]) + 1
    return GridReport(
        lams,
        best_v,
        errors,
        cond.accuracy,
        log_l2_distance(x, cert.center),
        cert.center_radius,
        int(np.isinf(dist).sum()),
    )


@dataclass
class AnalyticReport:
    center_log_lhs: float
    center_log_bound: float
    center_log_radius_sq: float
    head_max: float
    tail_max: float
    tail_bound_excess: float
    half_budget: float
    head_identity_error: float

    @property
    def center_ok(self):
        return self.center_log_lhs <= self.center_log_bound + 1e-12 and (
            self.center_log_bound < self.center_log_radius_sq
        )

    @property
    def head_ok(self):
        return self.head_max < self.half_budget

    @property
    def tail_ok(self):
        return self.tail_bound_excess <= 1e-12 and self.tail_max < self.half_budget

    @property
    def identity_ok(self):
        return self.head_identity_error <= 1e-10

    @property
    def passed(self):
        return self.center_ok and self.head_ok and self.tail_ok and self.identity_ok

    def to_dict(self):
        return {
            "center_log_lhs": self.center_log_lhs,
            "center_log_bound": self.center_log_bound,
            "center_log_radius_sq": self.center_log_radius_sq,
            "head_max": self.head_max,
            "tail_max": self.tail_max,
            "tail_bound_excess": self.tail_bound_excess,
            "half_budget": self.half_budget,
            "head_identity_error": self.head_identity_error,
            "passed": self.passed,
        }


def analytic_bounds(cert, grid_size=DEFAULT_GRID, identity_points=50):
    """Per-block inequalities of the construction, evaluated on a grid.

    center:  ||x0 - c0||^2 <= v0 M1^2 a0^{-2 mu_{v2}} / (1 - 1/a0) < eps0^2
    head:    sum_j |lam^mu beta - 1|^2 |q_j|^2 < 1/(2 s0^2)
    tail:    sum_{p > mu + v0} lam^{2 mu} |x_p|^2
                 <= v0 M1^2/(1 - 1/a0) * a0^{-2(mu_next - mu)} < 1/(2 s0^2)
    identity: entry j of (lam B)^mu x0 minus q_j has modulus
              |lam^mu beta - 1| |q_j|, checked through the plain shift path.
    Squared quantities are reported.
    """
    p = cert.construction_params
    cond = cert.condition
    x = cert.vector
    a0 = cond.interval.lo
    s0 = 1.0 / cond.accuracy
    v0 = cond.length
    M1 = p["M1"]
    mus = np.asarray(p["mu"], dtype=np.float64)
    mus_int = [int(m) for m in p["mu"]]
    bps = np.asarray(p["breakpoints"], dtype=np.float64)
    lbeta = np.asarray(p["log_multipliers"], dtype=np.float64)
    q = cond.coefficients
    log_c = math.log(v0 * M1 * M1) - math.log1p(-1.0 / a0)
    half = 1.0 / (2.0 * s0 * s0)

    center_lhs = 2.0 * log_l2_distance(x, cert.center)
    center_bound = log_c - 2.0 * mus[0] * math.log(a0)

    lams = np.linspace(cond.interval.lo, cond.interval.hi, int(grid_size))
    blk = np.searchsorted(bps, lams, side="right") - 1
    L = np.log(lams)
    t = mus[blk] * L + lbeta[blk]
    head = (np.abs(np.expm1(t))[:, None] ** 2 * np.abs(q)[None, :] ** 2).sum(axis=1)

    logs = x.log_abs
    idx = x.index
    suf = np.full(len(idx) + 1, -np.inf)
    suf[:-1] = np.logaddexp.accumulate((2.0 * logs)[::-1])[::-1]
    after = np.searchsorted(idx, np.asarray(mus_int, dtype=np.int64)[blk] + v0, side="right")
    with np.errstate(under="ignore"):
        tail = np.exp(2.0 * mus[blk] * L + suf[after])
        gaps = np.append(np.diff(mus), np.inf)
        bound = np.exp(log_c - 2.0 * gaps * math.log(a0))[blk]
    excess = float(np.max(tail - bound)) if len(tail) else 0.0

    ident = 0.0
    for lam in lams[:: max(1, len(lams) // identity_points)]:
        b = int(np.searchsorted(bps, lam, side="right") - 1)
        point = scaled_shift_orbit_point(x, lam, mus_int[b])
        err = abs(math.expm1(mus_int[b] * math.log(lam) + float(lbeta[b])))
        for j in range(1, v0 + 1):
            got = abs(point.get(j) - q[j - 1])
            ident = max(ident, abs(got - err * abs(q[j - 1])))
    return AnalyticReport(
        center_lhs,
        center_bound,
        2.0 * math.log(cert.center_radius),
        float(head.max()),
        float(tail.max()),
        excess,
        half,
        ident,
    )


# --------------------------------------------------------------------------
# construction
# --------------------------------------------------------------------------
def _gap_parameters(cond):
    a0 = cond.interval.lo
    s0 = 1.0 / cond.accuracy
    v0 = cond.length
    M1 = float(np.max(np.abs(cond.coefficients)))
    M2 = math.log(2.0 * s0 * s0 * M1 * M1 * v0 / (1.0 - 1.0 / a0)) / (2.0 * math.log(a0))
    eps1 = 1.0 / (math.sqrt(2.0 * v0) * s0 * M1)
    return a0, s0, v0, M1, M2, eps1


def _first_position(mu, v1, eps1, interval, log_c, log_radius, floor):
    """Smallest 1-based position whose term passes all start conditions."""
    a0, b0 = interval.lo, interval.hi
    need = max(
        v1 + 1,
        math.log1p(eps1) / math.log(b0 / a0),
        (log_c - 2.0 * log_radius) / (2.0 * math.log(a0)),
        floor - 1,
    )
    pos = int(np.searchsorted(mu.astype(np.float64), need, side="right"))
    while pos < len(mu) and not mu[pos] > need:
        pos += 1
    if pos >= len(mu):
        raise InsufficientHorizon(
            "no gapped term within the horizon satisfies the start conditions",
            required_term=need,
        )
    return pos + 1, need


def _truncate(interval, eps1, mu, v2, growth):
    """Shrink hi so the covering stops once terms exceed growth * mu_{v2}.

    At least two blocks are kept, and hi lands strictly inside the last
    kept block, so the start condition on mu_{v2} holds for the new width.
    """
    start = float(mu[v2 - 1])
    recips = 1.0 / mu[v2 - 1 :].astype(np.float64)
    S = np.concatenate(([0.0], np.cumsum(recips)))
    log_step = math.log1p(eps1)
    a = np.exp(math.log(interval.lo) + S * log_step)
    a[0] = interval.lo
    full = np.nonzero(a > interval.hi)[0]
    within = np.nonzero(mu[v2 - 1 :].astype(np.float64) <= growth * start)[0]
    last = max(1, int(within[-1]))
    if len(full) and last >= int(full[0]) - 1:
        return interval
    if last + 1 >= len(a):
        raise InsufficientHorizon("horizon ends inside the truncated covering")
    hi = float(a[last]) * math.exp(log_step / (2.0 * float(mu[v2 - 1 + last])))
    return Interval(interval.lo, min(hi, interval.hi))


def construct_block_vector(
    condition,
    center,
    center_radius,
    seq,
    grid_size=DEFAULT_GRID,
    min_block_start=0,
    stage_growth=None,
):
    """Vector within ``center_radius`` of ``center`` meeting ``condition``.

    ``min_block_start`` forces the first gapped term past a given index;
    ``stage_growth`` truncates the interval (see :func:`_truncate`) so the
    support grows by at most that factor.  The returned certificate has
    already passed :func:`verify_certificate`.
    """
    center_radius = float(center_radius)
    if not center_radius > 0:
        raise ValidationError("center_radius must be positive")
    requested = condition.interval
    a0, s0, v0, M1, M2, eps1 = _gap_parameters(condition)
    eps1_used = min(eps1, 0.5)
    gap = max(M2, float(v0))
    sub = extract_gapped_subsequence(seq, gap)
    mu = sub.terms
    v1 = center.max_index
    log_c = math.log(v0 * M1 * M1) - math.log1p(-1.0 / a0)
    v2, need = _first_position(
        mu, v1, eps1_used, requested, log_c, math.log(center_radius), int(min_block_start)
    )
    interval = requested
    if stage_growth is not None:
        interval = _truncate(requested, eps1_used, mu, v2, float(stage_growth))
        # the start condition depends on the width; recheck on the truncated one
        v2_check, _ = _first_position(
            mu, v1, eps1_used, interval, log_c, math.log(center_radius), int(min_block_start)
        )
        if v2_check != v2:
            raise InsufficientHorizon("truncated interval moved the start position")
    sub_seq = SequenceSpec.explicit([int(m) for m in mu], declared_class=seq.declared_class)
    plan = build_covering(interval, eps1_used, sub_seq, v2)
    i0 = plan.last_block
    q = condition.coefficients

    idx, mant, scale = list(center.index), list(center.mantissa), list(center.scale)
    for mu_i, lb in zip(plan.terms, plan.log_multipliers):
        for j in range(1, v0 + 1):
            if q[j - 1] != 0:
                idx.append(mu_i + j)
                mant.append(q[j - 1])
                scale.append(float(lb))
    x = FiniteVector(idx, mant, scale)
    m0 = sub.parent_index(v2 + i0)
    params = {
        "M1": M1,
        "M2": M2,
        "gap_floor": gap,
        "block_size": sub.block_size,
        "residue": sub.residue,
        "epsilon_1": eps1,
        "epsilon_1_used": eps1_used,
        "v1": v1,
        "v2": v2,
        "start_bound": need,
        "i0": i0,
        "mu": [int(m) for m in plan.terms],
        "parent_indices": [sub.parent_index(v2 + i) for i in range(i0 + 1)],
        "breakpoints": [float(a) for a in plan.breakpoints],
        "log_multipliers": [float(b) for b in plan.log_multipliers],
        "requested_interval": requested.to_list(),
    }
    cond = replace(condition, interval=interval, cutoff=m0)
    cert = ApproxCertificate(
        x, m0, cond, center, center_radius, seq.to_dict(), params, None, int(grid_size)
    )
    report = verify_certificate(cert, grid_size)
    cert.grid_report = report
    if not report.passed:
        raise ConstructionInvariantViolated(
            "constructed vector fails its grid check",
            worst_lambda=report.argmax_lambda,
            worst_error=report.max_error,
            center_distance=report.center_distance,
        )
    return cert


def rebuild_vector(cert):
    """Recompute x0 from the center and recorded block parameters."""
    p = cert.construction_params
    q = cert.condition.coefficients
    c = cert.center
    idx, mant, scale = list(c.index), list(c.mantissa), list(c.scale)
    for mu_i, lb in zip(p["mu"], p["log_multipliers"]):
        for j in range(1, len(q) + 1):
            if q[j - 1] != 0:
                idx.append(int(mu_i) + j)
                mant.append(q[j - 1])
                scale.append(float(lb))
    return FiniteVector(idx, mant, scale)


# --------------------------------------------------------------------------
# common vector
# --------------------------------------------------------------------------
@dataclass
class CommonResult:
    vector: FiniteVector
    certificates: list
    reports: list
    radii: list

    @property
    def margins(self):
        return [r.margin for r in self.reports]

    @property
    def passed(self):
        return all(r.max_error < r.accuracy for r in self.reports)

    def to_dict(self):
        return {
            "vector": self.vector.to_json(),
            "radii": self.radii,
            "certificates": [c.to_dict() for c in self.certificates],
            "final_reports": [r.to_dict() for r in self.reports],
            "margins": self.margins,
        }


def margin_guard(certs, reports, seq):
    """(log radius, blocking condition) keeping every earlier condition strict.

    For each earlier condition u the guard is (accuracy_u - error_u) divided
    by 1 + hi_u^{K_u}, K_u the largest exponent up to the cutoff, because
    (lam B)^k has operator norm lam^k.  The amplification is rounded up.
    """
    best = (math.inf, None)
    for u, (cert, rep) in enumerate(zip(certs, reports)):
        slack = cert.condition.accuracy - rep.max_error
        if not slack > 0:
            return (-math.inf, u)
        K = float(seq.term(cert.cutoff))
        amp = float(np.logaddexp(0.0, K * math.log(cert.condition.interval.hi)))
        amp = amp * (1 + 1e-12) + 1e-300
        g = math.log(slack) - amp
        if g < best[0]:
            best = (g, u)
    return best


def build_common_vector(
    conditions,
    seq,
    initial=None,
    radius=1.0,
    grid_size=DEFAULT_GRID,
    stage_growth=None,
):
    """Process ``conditions`` in order, each stage perturbing the previous vector.

    After every stage all earlier certificates are re-verified against the
    new vector; a failure there means the margin arithmetic is wrong and
    raises :class:`InvariantViolated`.
    """
    x = FiniteVector.zero() if initial is None else initial
    certs, reports, radii = [], [], []
    touched = x.max_index
    for t, cond in enumerate(conditions):
        r = float(radius)
        if certs:
            log_guard, u = margin_guard(certs, reports, seq)
            if log_guard < _MIN_LOG_RADIUS:
                raise StageInfeasible(
                    f"stage {t} radius underflows; blocked by condition {u}",
                    stage=t,
                    blocking_condition=u,
                    log_radius=log_guard,
                )
            r = min(r, math.exp(log_guard))
        floor = touched + 1
        cert = construct_block_vector(
            cond, x, r, seq, grid_size, min_block_start=floor, stage_growth=stage_growth
        )
        x = cert.vector
        touched = max(x.max_index, seq.term(cert.cutoff) + cond.length)
        certs.append(cert)
        radii.append(r)
        reports = [verify_certificate(c, grid_size, vector=x) for c in certs]
        for u, rep in enumerate(reports):
            if not rep.max_error < rep.accuracy:
                raise InvariantViolated(
                    f"condition {u} failed re-verification after stage {t}",
                    condition=u,
                    stage=t,
                    worst_lambda=rep.argmax_lambda,
                    worst_error=rep.max_error,
                )
    return CommonResult(x, certs, reports, radii)
