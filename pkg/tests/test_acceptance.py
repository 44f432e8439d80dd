"""Acceptance gate: one printed PASS/FAIL line per criterion.

Each ``run_criterion_N`` returns (passed, detail, payload).  The payload is
the JSON artifact of that run; criterion 10 reruns everything and compares
the serialized bytes.
"""
import math
import time

import numpy as np
import pytest

from shiftcover import cli
from shiftcover.approximator import (
    EpsilonCondition,
    analytic_bounds,
    build_common_vector,
    construct_block_vector,
    verify_certificate,
)
from shiftcover.covering import (
    Interval,
    build_covering,
    empirical_coverage,
    g_set_interval,
    g_set_measure_bound,
    minimal_start_index,
    nonexistence_certificate,
    random_probe_vector,
    verify_covering,
)
from shiftcover.errors import InfeasibleError, InsufficientHorizon, ShiftCoverError
from shiftcover.seqcore import SequenceSpec
from shiftcover.shiftspace import FiniteVector, LogScalar, log_power_error
from shiftcover.torus import joint_density_check, star_discrepancy, star_discrepancy_of

GOLDEN = (math.sqrt(5) - 1) / 2
PAYLOADS = {}


def timed(fn):
    t = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t


# -- 1 -----------------------------------------------------------------------------
def run_criterion_1():
    def work():
        plan = build_covering(Interval(2, 4), 0.5, SequenceSpec.linear(horizon=100), 1)
        rep = verify_covering(plan, 10_000)
        anchors = [
            log_power_error(a, k, LogScalar(lb))
            for a, k, lb in zip(plan.breakpoints, plan.terms, plan.log_multipliers)
        ]
        return plan, rep, anchors

    (plan, rep, anchors), dt = timed(work)
    ok = rep.max_error < 0.5 and max(anchors) <= 1e-14 and dt < 1.0
    detail = f"max grid error {rep.max_error:.6f} < 0.5, max anchor error {max(anchors):.1e}, {dt:.3f}s"
    return ok, detail, {"plan": plan.to_dict(), "grid": rep.to_dict(), "anchors": anchors}


# -- 2 -----------------------------------------------------------------------------
def feasible_by_direct_sum(terms, lo, hi, eps):
    """Independent check: can the breakpoints pass hi within the horizon?"""
    step = math.log1p(eps)
    need = math.log(hi / lo) / step
    n0 = next((i for i, k in enumerate(terms) if k > step / math.log(hi / lo)), None)
    if n0 is None:
        return False
    total = 0.0
    for k in terms[n0:]:
        total += 1.0 / k
        if total > need * (1 + 1e-9):
            return True
    return False if total < need * (1 - 1e-9) else None


def run_criterion_2():
    H = 200_000
    nlogn = [int(math.floor(n * math.log(n))) + 1 for n in range(1, H + 1)]
    seqs = {
        "n": (SequenceSpec.linear(horizon=H), list(range(1, H + 1))),
        "nlogn+1": (SequenceSpec.explicit(nlogn), nlogn),
    }

    def work():
        rng = np.random.default_rng(2024)
        results = {}
        for name, (seq, terms) in seqs.items():
            total = math.fsum(1.0 / k for k in terms)
            passed = rejected = rejected_ok = 0
            worst = 0.0
            while passed < 200:
                eps = rng.uniform(0.05, 0.9)
                lo = rng.uniform(1.01, 19.9)
                # proposals concentrate where the horizon can reach
                reach = math.exp(0.8 * total * math.log1p(eps))
                hi = rng.uniform(lo, min(20.0, lo * reach))
                if not 1.01 < lo < hi < 20:
                    continue
                verdict = feasible_by_direct_sum(terms, lo, hi, eps)
                if verdict is None:
                    continue
                if not verdict:
                    rejected += 1
                    try:
                        build_covering(Interval(lo, hi), eps, seq)
                    except InsufficientHorizon:
                        rejected_ok += 1
                    continue
                plan = build_covering(Interval(lo, hi), eps, seq)
                assert plan.start_index == minimal_start_index(plan.interval, eps, seq)
                rep = verify_covering(plan, 10_000)
                worst = max(worst, rep.max_error / eps)
                passed += int(rep.passed)
                if not rep.passed:
                    break
            # a short horizon makes most draws infeasible; those must raise
            short = SequenceSpec.from_dict({**seq.to_dict(), "horizon": 30})
            for _ in range(100):
                eps = rng.uniform(0.05, 0.9)
                lo = rng.uniform(1.01, 10.0)
                hi = rng.uniform(lo + 0.01, 20.0)
                verdict = feasible_by_direct_sum(terms[:30], lo, hi, eps)
                if verdict is False:
                    rejected += 1
                    try:
                        build_covering(Interval(lo, hi), eps, short)
                    except InsufficientHorizon:
                        rejected_ok += 1
            results[name] = {
                "passed": passed,
                "rejected": rejected,
                "rejected_raising": rejected_ok,
                "worst_error_over_eps": worst,
            }
        return results

    results, dt = timed(work)
    ok = (
        all(r["passed"] == 200 and r["rejected"] == r["rejected_raising"] for r in results.values())
        and dt < 30
    )
    detail = ", ".join(
        f"{k}: {r['passed']}/200 pass (worst err/eps {r['worst_error_over_eps']:.4f}, "
        f"{r['rejected']} infeasible draws all raise)"
        for k, r in results.items()
    )
    return ok, f"{detail}; {dt:.1f}s", results


# -- 3 -----------------------------------------------------------------------------
def run_criterion_3():
    n = 10**6
    mids = (np.arange(n) + 0.5) / n

    def work():
        rng = np.random.default_rng(3)
        worst_bound = -math.inf
        worst_mc = 0.0
        nonempty = 0
        for _ in range(1000):
            N0 = int(rng.integers(1, 31))
            eps = rng.uniform(0.01, 0.95)
            lo = rng.uniform(1.01, 5.0)
            hi = lo + rng.uniform(0.01, 3.0)
            c = rng.uniform(lo, hi)
            z0 = rng.uniform(0.3, 3.0) * c ** (-N0) * np.exp(1j * rng.uniform(-np.pi, np.pi))
            g = g_set_interval(z0, N0, eps, Interval(lo, hi))
            length = 0.0 if g is None else g[1] - g[0]
            nonempty += g is not None
            bound = g_set_measure_bound(N0, eps, Interval(lo, hi))
            worst_bound = max(worst_bound, length - bound)
            lam = lo + (hi - lo) * mids
            inside = np.abs(lam**N0 * z0 - 1) < eps
            mc = (hi - lo) * np.count_nonzero(inside) / n
            worst_mc = max(worst_mc, abs(length - mc) / (2 * (hi - lo) / n + 1e-9))
        return worst_bound, worst_mc, nonempty

    (wb, wm, ne), dt = timed(work)
    ok = wb <= 1e-12 and wm <= 1.0 and dt < 30
    detail = (
        f"max(length - bound) = {wb:.3g} <= 1e-12, grid mismatch {wm:.3f} of tolerance, "
        f"{ne}/1000 nonempty; {dt:.1f}s"
    )
    return ok, detail, {"worst_length_minus_bound": wb, "worst_mc_ratio": wm, "nonempty": ne}


# -- 4 -----------------------------------------------------------------------------
def run_criterion_4():
    def work():
        rng = np.random.default_rng(4)
        out = {}
        for name, seq in (
            ("2^n", SequenceSpec.geometric(2, horizon=60)),
            ("n^2", SequenceSpec.polynomial(2, horizon=1000)),
        ):
            cert = nonexistence_certificate(Interval(2, 3), seq)
            vs = range(cert.N_0, seq.horizon + 1)
            covs = [
                empirical_coverage(
                    random_probe_vector(rng, seq, cert.interval, vs, density=1.0),
                    seq, cert.interval, cert.epsilon_1, vs,
                )
                for _ in range(50)
            ]
            out[name] = {"certificate": cert.to_dict(), "max_coverage": max(covs)}
        return out

    out, dt = timed(work)
    ok = dt < 10
    parts = []
    for name, r in out.items():
        c = r["certificate"]
        good = c["valid"] and r["max_coverage"] <= c["bound_sum"] + 1e-9 < 1
        ok = ok and good
        parts.append(
            f"{name}: slack {c['slack']:.4f}, max coverage {r['max_coverage']:.4f} "
            f"<= bound {c['bound_sum']:.4f}"
        )
    return ok, "; ".join(parts) + f"; {dt:.2f}s", out


# -- 5 -----------------------------------------------------------------------------
CENTER = FiniteVector.from_dict({1: 0.001})
TARGETS_5 = {"e1": FiniteVector.basis(1), "(1,-i,0.5)": FiniteVector.from_dict({1: 1, 2: -1j, 3: 0.5})}


def run_criterion_5():
    seq = SequenceSpec.linear(horizon=10**6)

    def work():
        out = {}
        for name, target in TARGETS_5.items():
            cond = EpsilonCondition(target, Interval(1.5, 2.5), 0.1)
            try:
                cert = construct_block_vector(cond, CENTER, 0.5, seq)
            except ShiftCoverError as exc:
                out[name] = {"error": exc.to_dict()}
                continue
            a = analytic_bounds(cert)
            out[name] = {"grid": cert.grid_report.to_dict(), "analytic": a.to_dict()}
        return out

    out, dt = timed(work)
    ok = dt < 5
    parts = []
    for name, r in out.items():
        if "error" in r:
            ok = False
            e = r["error"]
            parts.append(f"{name}: {e['error']}: {e['message']}")
        else:
            g, a = r["grid"], r["analytic"]
            ok = ok and g["passed"] and a["passed"]
            parts.append(f"{name}: grid max {g['max_error']:.4f}, center {g['center_distance']:.3g}")
    return ok, "; ".join(parts) + f"; {dt:.2f}s", out


# -- 6 -----------------------------------------------------------------------------
TARGETS_6 = [
    FiniteVector.basis(1),
    FiniteVector.basis(2),
    FiniteVector.from_dict({1: 1, 2: 1}),
    FiniteVector.basis(1, 2.0),
    FiniteVector.basis(3),
]
GROWTH = 1.5


def common_conditions():
    return [
        EpsilonCondition(t, Interval(1 + 1 / n, n + 2), 0.2) for n, t in enumerate(TARGETS_6, 1)
    ]


_COMMON = {}


def common_result():
    if "result" not in _COMMON:
        _COMMON["result"] = build_common_vector(
            common_conditions(), SequenceSpec.linear(horizon=20_000), stage_growth=GROWTH
        )
    return _COMMON["result"]


def run_criterion_6():
    _COMMON.clear()
    res, dt = timed(common_result)
    reports = [verify_certificate(c, 1000, vector=res.vector) for c in res.certificates]
    margins = [r.accuracy - r.max_error for r in reports]
    ok = len(reports) == 5 and all(m > 0 for m in margins) and dt < 60
    widths = ", ".join(
        f"[{c.condition.interval.lo:.4g},{c.condition.interval.hi:.6g}]" for c in res.certificates
    )
    detail = f"margins {[round(m, 4) for m in margins]}, intervals {widths}; {dt:.1f}s"
    return ok, detail, {"common": res.to_dict(), "margins": margins}


# -- 7 -----------------------------------------------------------------------------
def run_criterion_7(tmp_dir):
    H_lin = 2**20
    H_geo = int(math.floor(math.log2(H_lin)))
    interval = Interval(1.5, 1.52)
    cond = EpsilonCondition(FiniteVector.basis(1), interval, 0.1)
    lin = construct_block_vector(cond, CENTER, 0.5, SequenceSpec.linear(horizon=H_lin))
    try:
        construct_block_vector(cond, CENTER, 0.5, SequenceSpec.geometric(2, horizon=H_geo))
        geo_error = None
    except InfeasibleError as exc:
        geo_error = exc.to_dict()
    seq_geo = '{"kind": "geometric", "params": {"b": 2}, "horizon": %d}' % H_geo
    seq_lin = '{"kind": "linear", "params": {}, "horizon": %d}' % H_lin
    code_geo = cli.main(["nonexist", "--seq", seq_geo, "--interval", "1.5,1.52", "--out", str(tmp_dir / "g")])
    code_lin = cli.main(["nonexist", "--seq", seq_lin, "--interval", "1.5,1.52", "--out", str(tmp_dir / "l")])
    cert = nonexistence_certificate(interval, SequenceSpec.geometric(2, horizon=H_geo))
    ok = lin.passed and geo_error is not None and code_geo == 0 and cert.valid and code_lin == 3
    detail = (
        f"k_n=n (horizon {H_lin}): certificate passes, max error {lin.grid_report.max_error:.4f}; "
        f"k_n=2^n (horizon {H_geo}): {geo_error and geo_error['error']}; "
        f"nonexist exit {code_geo} (slack {cert.slack:.4f}), divergent exit {code_lin}"
    )
    payload = {
        "linear": lin.grid_report.to_dict(),
        "geometric_error": geo_error,
        "nonexist": cert.to_dict(),
        "exit_codes": [code_geo, code_lin],
    }
    return ok, detail, payload


# -- 8 -----------------------------------------------------------------------------
def brute_star_discrepancy(points):
    N = len(points)
    best = 0.0
    for t in points:
        below = sum(p < t for p in points)
        upto = sum(p <= t for p in points)
        best = max(best, abs(below / N - t), abs(upto / N - t))
    return best


def run_criterion_8():
    def work():
        rng = np.random.default_rng(8)
        worst = 0.0
        for _ in range(500):
            N = int(rng.integers(1, 51))
            seq = SequenceSpec.polynomial(int(rng.integers(1, 4)), horizon=50)
            u = star_discrepancy(seq, rng.uniform(0, 10), N, keep_points=True).sample_points
            worst = max(worst, abs(star_discrepancy_of(u) - brute_star_discrepancy(u.tolist())))
        big = star_discrepancy(SequenceSpec.linear(horizon=10**5), GOLDEN, 10**5)
        return worst, big

    (worst, big), dt = timed(work)
    ok = worst <= 1e-12 and big.star_discrepancy < 0.05 and dt < 10
    detail = f"max |exact - brute| {worst:.1e}, golden D*_1e5 = {big.star_discrepancy:.3g}; {dt:.2f}s"
    return ok, detail, {"worst": worst, "golden": big.to_dict()}


# -- 9 -----------------------------------------------------------------------------
def run_criterion_9():
    res = common_result()
    seq = SequenceSpec.linear(horizon=20_000)
    phases = [complex(np.exp(2j * np.pi * l / 8)) for l in range(8)]
    rep, dt = timed(
        lambda: joint_density_check(res.vector, seq, 2.0, GOLDEN, TARGETS_6[:4], phases, 5, seq.horizon)
    )
    per_target = [
        sum(p[3] is not None for p in rep.pairs if p[0] == j) for j in range(4)
    ]
    ok = rep.passed and dt < 30
    detail = f"{rep.witnessed}/32 pairs witnessed (per vector target {per_target}); {dt:.2f}s"
    return ok, detail, rep.to_dict()


# -- tests -----------------------------------------------------------------------------
def _check(number, record_criterion, result):
    ok, detail, payload = result
    PAYLOADS[number] = cli.dumps(payload)
    assert record_criterion(number, ok, detail)


def test_criterion_01_covering_completeness(record_criterion):
    _check(1, record_criterion, run_criterion_1())


def test_criterion_02_covering_stress(record_criterion):
    _check(2, record_criterion, run_criterion_2())


def test_criterion_03_measure_bound(record_criterion):
    _check(3, record_criterion, run_criterion_3())


def test_criterion_04_nonexistence_certificate(record_criterion):
    _check(4, record_criterion, run_criterion_4())


def test_criterion_05_block_construction(record_criterion):
    _check(5, record_criterion, run_criterion_5())


def test_criterion_06_common_vector(record_criterion):
    _check(6, record_criterion, run_criterion_6())


def test_criterion_07_dichotomy(record_criterion, tmp_path):
    _check(7, record_criterion, run_criterion_7(tmp_path))


def test_criterion_08_discrepancy(record_criterion):
    _check(8, record_criterion, run_criterion_8())


def test_criterion_09_joint_density(record_criterion):
    _check(9, record_criterion, run_criterion_9())


def test_criterion_10_determinism(record_criterion, tmp_path):
    runners = {
        1: run_criterion_1,
        2: run_criterion_2,
        3: run_criterion_3,
        4: run_criterion_4,
        5: run_criterion_5,
        6: run_criterion_6,
        7: lambda: run_criterion_7(tmp_path),
        8: run_criterion_8,
        9: run_criterion_9,
    }
    mismatched = []
    for n, run in runners.items():
        first = PAYLOADS.get(n)
        if first is None:
            first = cli.dumps(run()[2])
        again = cli.dumps(run()[2])
        if again != first:
            mismatched.append(n)
    ok = not mismatched
    detail = "all 9 artifacts byte-identical on rerun" if ok else f"differs for {mismatched}"
    assert record_criterion(10, ok, detail)
