"""Equidistribution of k_n * theta mod 1 and joint density checks on l^2 x T.

Fractional parts are computed exactly: theta is a double, hence a dyadic
rational p/q, and frac(k theta) = (k p mod q)/q in integer arithmetic.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .covering import Interval
from .errors import ValidationError
from .shiftspace import orbit_distances

TWO_PI = 2.0 * math.pi


def _check_count(seq, N):
    N = int(N)
    if N < 1:
        raise ValidationError("N must be a positive integer")
    seq._check(N)
    return N


def fractional_parts(seq, theta, N):
    """frac(k_n * theta) for n = 1..N, exact up to the final rounding."""
    N = _check_count(seq, N)
    p, q = float(theta).as_integer_ratio()
    terms = seq.terms(1, N)
    if terms.dtype != object and q < 2**31 and abs(p) < 2**31 and int(terms[-1]) < 2**31:
        r = (terms.astype(np.int64) * p) % q
        return r / q
    return np.array([(int(k) * p % q) / q for k in terms], dtype=np.float64)


def star_discrepancy_of(points):
    """D*_N = max_i max(i/N - u_(i), u_(i) - (i-1)/N) over sorted points."""
    u = np.sort(np.asarray(points, dtype=np.float64))
    N = len(u)
    if N == 0:
        raise ValidationError("need at least one point")
    i = np.arange(1, N + 1)
    return float(max(np.max(i / N - u), np.max(u - (i - 1) / N)))


@dataclass
class DiscrepancyReport:
    theta: float
    count: int
    star_discrepancy: float
    sample_points: np.ndarray = None

    def to_dict(self):
        out = {"theta": self.theta, "count": self.count, "star_discrepancy": self.star_discrepancy}
        if self.sample_points is not None:
            out["sample_points"] = self.sample_points.tolist()
        return out


def star_discrepancy(seq, theta, N, keep_points=False):
    u = fractional_parts(seq, theta, N)
    return DiscrepancyReport(
        float(theta), int(N), star_discrepancy_of(u), u if keep_points else None
    )


def discrepancy_curve(seq, theta, counts):
    """(N, D*_N) pairs for plotting."""
    u = fractional_parts(seq, theta, max(counts))
    return [(int(n), star_discrepancy_of(u[: int(n)])) for n in counts]


def _phases(seq, theta, N):
    return np.exp(1j * TWO_PI * fractional_parts(seq, theta, N))


def _check_targets(phase_targets):
    t = np.asarray(phase_targets, dtype=np.complex128).reshape(-1)
    if np.any(np.abs(np.abs(t) - 1.0) > 1e-12):
        raise ValidationError("phase targets must lie on the unit circle")
    return t


def circle_density_check(seq, theta, N, phase_targets, tol):
    """Smallest n <= N with |e^{2 pi i k_n theta} - t| < tol for each target t."""
    tol = float(tol)
    if not tol > 0:
        raise ValidationError("tol must be positive")
    targets = _check_targets(phase_targets)
    z = _phases(seq, theta, N)
    out = []
    for t in targets:
        hit = np.nonzero(np.abs(z - t) < tol)[0]
        out.append(int(hit[0]) + 1 if len(hit) else None)
    return out


@dataclass
class JointDensityReport:
    r: float
    theta: float
    pairs: list
    count: int

    @property
    def passed(self):
        return all(p[3] is not None for p in self.pairs)

    @property
    def witnessed(self):
        return sum(p[3] is not None for p in self.pairs)

    def to_dict(self):
        return {
            "r": self.r,
            "theta": self.theta,
            "count": self.count,
            "pairs": [
                {"vector_target": j, "phase_target": l, "accuracy": a, "witness": w}
                for j, l, a, w in self.pairs
            ],
            "witnessed": self.witnessed,
            "passed": self.passed,
        }


def joint_density_check(x, seq, r, theta, vector_targets, phase_targets, s, N):
    """Witnesses n with ||(rB)^{k_n} x - x_j|| < 1/s and |e^{2 pi i k_n theta} - t_l| < 1/s.

    For each vector target the indices meeting the vector condition are
    found first, then searched in order for the phase condition.  Orbit
    points that overflow simply fail the vector condition.
    """
    x = getattr(x, "vector", x)
    r = float(r)
    if not r > 1:
        raise ValidationError("r must exceed 1")
    s = int(s)
    if s < 1:
        raise ValidationError("s must be a positive integer")
    N = _check_count(seq, N)
    targets = _check_targets(phase_targets)
    acc = 1.0 / s
    shifts = seq.terms(1, N)
    z = _phases(seq, theta, N)
    pairs = []
    for j, y in enumerate(vector_targets):
        d = orbit_distances(x, [r], shifts, y)[0]
        B = np.nonzero(d < acc)[0]
        for l, t in enumerate(targets):
            ok = B[np.abs(z[B] - t) < acc]
            pairs.append((j, l, acc, int(ok[0]) + 1 if len(ok) else None))
    return JointDensityReport(r, float(theta), pairs, N)


@dataclass
class SectionEstimate:
    fraction: float
    stderr: float
    samples: int
    hits: int
    seed: int

    def to_dict(self):
        return {
            "fraction": self.fraction,
            "stderr": self.stderr,
            "samples": self.samples,
            "hits": self.hits,
            "seed": self.seed,
        }


def section_measure_estimate(r_window, theta_window, predicate, samples, seed):
    """Monte-Carlo fraction of (r, theta) in the box satisfying ``predicate``."""
    samples = int(samples)
    if samples < 100:
        raise ValidationError("need at least 100 samples")
    r_window = Interval.parse(r_window)
    t_lo, t_hi = (float(v) for v in theta_window)
    if not t_lo < t_hi:
        raise ValidationError("theta window must have positive width")
    rng = np.random.default_rng(seed)
    rs = rng.uniform(r_window.lo, r_window.hi, samples)
    ts = rng.uniform(t_lo, t_hi, samples)
    hits = sum(bool(predicate(float(a), float(b))) for a, b in zip(rs, ts))
    f = hits / samples
    return SectionEstimate(f, math.sqrt(f * (1.0 - f) / samples), samples, hits, seed)
