"""Finite-support vectors of l^2 and powers of the scaled backward shift.

Entries are stored as ``mantissa * exp(scale)``.  Ordinary vectors keep
``scale == 0`` so their values are exact; the block entries of an
approximating vector carry ``scale = log(beta)`` which can sit far below
the double range without underflowing.  Indices are 1-based.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import MagnitudeOverflow, ValidationError

OVERFLOW_LOG = 700.0


@dataclass(frozen=True)
class LogScalar:
    """``phase * exp(log_magnitude)``; ``phase == 0`` encodes zero."""

    log_magnitude: float
    phase: complex = 1.0 + 0.0j

    @classmethod
    def from_value(cls, z):
        z = complex(z)
        if z == 0:
            return cls(-math.inf, 0j)
        r = abs(z)
        return cls(math.log(r), z / r)

    @property
    def is_zero(self):
        return self.phase == 0

    def value(self):
        if self.is_zero:
            return 0j
        if self.log_magnitude > OVERFLOW_LOG:
            raise MagnitudeOverflow(
                "log-magnitude beyond the overflow threshold",
                log_magnitude=self.log_magnitude,
            )
        return math.exp(self.log_magnitude) * self.phase

    def __mul__(self, other):
        if not isinstance(other, LogScalar):
            other = LogScalar.from_value(other)
        if self.is_zero or other.is_zero:
            return LogScalar(-math.inf, 0j)
        return LogScalar(self.log_magnitude + other.log_magnitude, self.phase * other.phase)

    __rmul__ = __mul__


class FiniteVector:
    """Immutable finitely supported complex sequence (x_1, x_2, ...)."""

    __slots__ = ("index", "mantissa", "scale")

    def __init__(self, index=(), mantissa=(), scale=None):
        index = np.asarray(index, dtype=np.int64).reshape(-1)
        mantissa = np.asarray(mantissa, dtype=np.complex128).reshape(-1)
        scale = (
            np.zeros(len(index))
            if scale is None
            else np.asarray(scale, dtype=np.float64).reshape(-1)
        )
        if not (len(index) == len(mantissa) == len(scale)):
            raise ValidationError("index, mantissa and scale must have equal length")
        keep = mantissa != 0
        index, mantissa, scale = index[keep], mantissa[keep], scale[keep]
        if len(index) and index.min() < 1:
            raise ValidationError("vector indices start at 1")
        order = np.argsort(index, kind="stable")
        index, mantissa, scale = index[order], mantissa[order], scale[order]
        if len(index) > 1 and np.any(np.diff(index) == 0):
            raise ValidationError("duplicate vector index")
        if not np.all(np.isfinite(scale)) or not np.all(np.isfinite(mantissa)):
            raise ValidationError("vector entries must be finite")
        for arr in (index, mantissa, scale):
            arr.setflags(write=False)
        object.__setattr__(self, "index", index)
        object.__setattr__(self, "mantissa", mantissa)
        object.__setattr__(self, "scale", scale)

    def __setattr__(self, name, value):
        raise AttributeError("FiniteVector is immutable")

    # -- constructors -------------------------------------------------------
    @classmethod
    def zero(cls):
        return cls()

    @classmethod
    def basis(cls, i, value=1.0):
        return cls([i], [value])

    @classmethod
    def from_dict(cls, entries):
        items = sorted(entries.items())
        return cls([i for i, _ in items], [v for _, v in items])

    @classmethod
    def from_values(cls, values, start=1):
        """Dense list ``values`` placed at indices start, start + 1, ..."""
        return cls(np.arange(start, start + len(values)), values)

    # -- views --------------------------------------------------------------
    def __len__(self):
        return len(self.index)

    @property
    def support(self):
        return tuple(int(i) for i in self.index)

    @property
    def max_index(self):
        return int(self.index[-1]) if len(self.index) else 0

    @property
    def log_abs(self):
        """Natural log of |x_j| for each stored entry."""
        return np.log(np.abs(self.mantissa)) + self.scale

    @property
    def phases(self):
        return np.exp(1j * np.angle(self.mantissa))

    def values(self):
        """Entries as complex doubles (entries below the double range read as 0)."""
        with np.errstate(over="ignore", under="ignore"):
            return self.mantissa * np.exp(self.scale)

    def get(self, i):
        pos = np.searchsorted(self.index, i)
        if pos < len(self.index) and self.index[pos] == i:
            return complex(self.mantissa[pos] * math.exp(self.scale[pos]))
        return 0j

    def entry(self, i):
        """Entry i as a :class:`LogScalar` (exact even when it underflows doubles)."""
        pos = np.searchsorted(self.index, i)
        if pos < len(self.index) and self.index[pos] == i:
            m = complex(self.mantissa[pos])
            return LogScalar(math.log(abs(m)) + float(self.scale[pos]), cmath.exp(1j * cmath.phase(m)))
        return LogScalar(-math.inf, 0j)

    def to_dict(self):
        return {int(i): complex(v) for i, v in zip(self.index, self.values())}

    def __repr__(self):
        if len(self) <= 6:
            body = ", ".join(f"{int(i)}: {complex(v):.6g}" for i, v in zip(self.index, self.values()))
        else:
            body = f"{len(self)} entries on [{self.index[0]}, {self.index[-1]}]"
        return f"FiniteVector({{{body}}})"

    def __eq__(self, other):
        if not isinstance(other, FiniteVector):
            return NotImplemented
        return (
            np.array_equal(self.index, other.index)
            and np.array_equal(self.mantissa, other.mantissa)
            and np.array_equal(self.scale, other.scale)
        )

    __hash__ = None

    # -- arithmetic ---------------------------------------------------------
    def _combine(self, other, sign):
        idx = np.union1d(self.index, other.index)
        m1, s1 = _aligned(self, idx)
        m2, s2 = _aligned(other, idx)
        m2 = sign * m2
        s = np.maximum(s1, s2)
        with np.errstate(under="ignore"):
            m = m1 * np.exp(s1 - s) + m2 * np.exp(s2 - s)
        return FiniteVector(idx, m, s)

    def __add__(self, other):
        return self._combine(other, 1.0)

    def __sub__(self, other):
        return self._combine(other, -1.0)

    def __neg__(self):
        return FiniteVector(self.index, -self.mantissa, self.scale)

    def scaled(self, c):
        return FiniteVector(self.index, self.mantissa * complex(c), self.scale)

    def restrict(self, lo, hi):
        """Entries with lo <= index <= hi."""
        keep = (self.index >= lo) & (self.index <= hi)
        return FiniteVector(self.index[keep], self.mantissa[keep], self.scale[keep])

    def norm(self):
        return l2_distance(self, FiniteVector.zero())

    def log_norm(self):
        return _log_norm_from_logs(self.log_abs)

    # -- serialization ------------------------------------------------------
    def to_json(self):
        """``[index, re, im]`` rows; a fourth element carries a nonzero log scale."""
        rows = []
        for i, m, s in zip(self.index, self.mantissa, self.scale):
            row = [int(i), float(m.real), float(m.imag)]
            if s != 0:
                row.append(float(s))
            rows.append(row)
        return rows

    @classmethod
    def from_json(cls, rows):
        try:
            index = [int(r[0]) for r in rows]
            mant = [complex(float(r[1]), float(r[2])) for r in rows]
            scale = [float(r[3]) if len(r) > 3 else 0.0 for r in rows]
        except (TypeError, ValueError, IndexError) as exc:
            raise ValidationError(f"malformed vector rows: {exc}") from None
        return cls(index, mant, scale)


def _aligned(x, idx):
    m = np.zeros(len(idx), dtype=np.complex128)
    s = np.full(len(idx), -np.inf)
    pos = np.searchsorted(idx, x.index)
    m[pos] = x.mantissa
    s[pos] = x.scale
    return m, s


def _log_norm_from_logs(logs):
    logs = np.asarray(logs, dtype=np.float64)
    logs = logs[np.isfinite(logs)]
    if len(logs) == 0:
        return -math.inf
    top = logs.max()
    return float(top + 0.5 * math.log(np.sum(np.exp(2.0 * (logs - top)))))


def backward_shift_power(x, k):
    """B^k x: entry j of the result is x_{j+k}; indices <= 0 are dropped."""
    k = int(k)
    if k < 0:
        raise ValidationError("shift power must be nonnegative")
    keep = x.index > k
    return FiniteVector(x.index[keep] - k, x.mantissa[keep], x.scale[keep])


def scaled_shift_orbit_point(x, lam, k):
    """(lam*B)^k x with lam^k applied in the log domain."""
    lam = float(lam)
    if not lam > 1:
        raise ValidationError("lambda must exceed 1")
    shifted = backward_shift_power(x, k)
    if len(shifted) == 0:
        return shifted
    new_scale = shifted.scale + int(k) * math.log(lam)
    logs = np.log(np.abs(shifted.mantissa)) + new_scale
    worst = float(logs.max())
    if worst > OVERFLOW_LOG:
        raise MagnitudeOverflow(
            "orbit point exceeds the overflow threshold",
            lam=lam,
            k=int(k),
            log_magnitude=worst,
        )
    return FiniteVector(shifted.index, shifted.mantissa, new_scale)


def log_l2_distance(x, y):
    """log ||x - y||; -inf when the vectors are equal."""
    d = x - y
    return _log_norm_from_logs(d.log_abs)


def l2_distance(x, y):
    d = x - y
    if len(d) == 0:
        return 0.0
    logs = d.log_abs
    if logs.max() > 709.0:
        return math.inf
    if logs.max() < -700.0:
        return math.exp(_log_norm_from_logs(logs))
    a = np.abs(d.values())
    top = a.max()
    if 1e-150 < top < 1e150:
        return float(np.sqrt(np.sum(a * a)))
    return float(top * np.sqrt(np.sum((a / top) ** 2)))


def log_power_error(lam, k, beta_log):
    """|lam^k * beta - 1| evaluated as |expm1(k log lam + log beta)|."""
    if not isinstance(beta_log, LogScalar):
        beta_log = LogScalar(float(beta_log))
    if beta_log.phase != 1:
        raise ValidationError("beta must be a positive real")
    t = int(k) * math.log(lam) + beta_log.log_magnitude
    if t > OVERFLOW_LOG:
        raise MagnitudeOverflow("lambda^k * beta overflows", exponent=t)
    return abs(math.expm1(t))


def orbit_distances(x, lams, shifts, target, overflow_log=OVERFLOW_LOG):
    """||(lam B)^k x - target|| for every lam in ``lams`` and k in ``shifts``.

    Returns an array of shape (len(lams), len(shifts)); pairs whose orbit
    point exceeds the overflow threshold read as ``inf``.  The tail of
    (lam B)^k x beyond the target support is summed from precomputed
    suffix log-sums, so the cost is O(len(shifts) * target length) per lam.
    """
    lams = np.atleast_1d(np.asarray(lams, dtype=np.float64))
    shifts = np.asarray(shifts)
    if shifts.dtype == object:
        kf = np.array([float(k) for k in shifts])
        kint = np.array([min(int(k), 2**62) for k in shifts], dtype=np.int64)
    else:
        kint = shifts.astype(np.int64)
        kf = kint.astype(np.float64)
    tmax = target.max_index
    q = np.zeros(tmax, dtype=np.complex128)
    if tmax:
        q[target.index - 1] = target.values()

    logs = x.log_abs
    ph = x.phases
    idx = x.index
    # suffix log-sums of |x_p|^2
    suf = np.full(len(idx) + 1, -np.inf)
    if len(idx):
        suf[:-1] = np.logaddexp.accumulate((2.0 * logs)[::-1])[::-1]

    head_log = np.full((len(kint), tmax), -np.inf)
    head_ph = np.zeros((len(kint), tmax), dtype=np.complex128)
    if len(idx):
        for j in range(1, tmax + 1):
            want = kint + j
            pos = np.searchsorted(idx, want)
            pos_c = np.minimum(pos, len(idx) - 1)
            hit = (pos < len(idx)) & (idx[pos_c] == want)
            head_log[hit, j - 1] = logs[pos_c[hit]]
            head_ph[hit, j - 1] = ph[pos_c[hit]]
    tail_from = kint + tmax
    tail_log = suf[np.searchsorted(idx, tail_from, side="right")]
    present = np.isfinite(head_log)

    out = np.empty((len(lams), len(kint)))
    chunk = max(1, int(2_000_000 // max(1, len(kint) * max(tmax, 1))))
    with np.errstate(over="ignore", under="ignore", invalid="ignore"):
        for start in range(0, len(lams), chunk):
            L = np.log(lams[start : start + chunk])[:, None]
            kl = kf[None, :] * L
            t_log = 2.0 * kl + tail_log[None, :]
            over = t_log > 2.0 * overflow_log
            err2 = np.where(np.isfinite(t_log), np.exp(t_log), 0.0)
            for j in range(tmax):
                a = kl + head_log[None, :, j]
                over |= a > overflow_log
                val = np.where(present[None, :, j], np.exp(a) * head_ph[None, :, j], 0.0)
                d = val - q[j]
                err2 = err2 + (d.real**2 + d.imag**2)
            err = np.sqrt(err2)
            err[over] = np.inf
            out[start : start + chunk] = err
    return out


def orbit_distance(x, lam, k, target):
    """Single orbit distance through the plain shift/scale/subtract path."""
    return l2_distance(scaled_shift_orbit_point(x, lam, k), target)
