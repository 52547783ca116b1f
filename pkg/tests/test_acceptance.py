"""Acceptance suite: one check per numbered criterion, one PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py -v`` (the lines are repeated in the
terminal summary) or directly as ``python3 tests/test_acceptance.py``.
"""

import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent))

from rhoiqc.certify import UNCERTIFIABLE, certify_at, minimize_rho
from rhoiqc.errors import PreconditionError
from rhoiqc.iqc import NonlinearityModel, make_off_by_k, make_sector, stack, time_domain_check, validate_rho_zf
from rhoiqc.kyp import AffineMatrixInequality, build_augmented, build_lmi, grid_fdi_check, unpack_solution
from rhoiqc.lmi import Status, solve_feasibility
from rhoiqc.lti import StateSpace, TransferFunction, linearized_closed_loop, spectral_radius, ss_from_tf
from rhoiqc.simulate import fit_decay_rate, random_initial_states, simulate

from conftest import G1_DEN, G1_NUM, G2_DEN, G2_NUM

RESULTS = []
RHO_TOL = 1e-3
ATAN1 = NonlinearityModel.arctan(1.0)
G2_FAMILIES = ["sector"] + [
    "sector+" + "+".join(f"off_by_{j}" for j in range(1, k + 1)) for k in range(1, 6)
]


def plant(num, den):
    return ss_from_tf(TransferFunction(num, den))


G1 = plant(G1_NUM, G1_DEN)
G2 = plant(G2_NUM, G2_DEN)

_cache = {}


def cached(key, fn):
    if key not in _cache:
        _cache[key] = fn()
    return _cache[key]


def g1_certificate():
    def run():
        t = time.perf_counter()
        res = minimize_rho(G1, ATAN1, "sector+off_by_1", RHO_TOL)
        return res, time.perf_counter() - t
    return cached("g1", run)


def g2_certificates():
    return cached("g2", lambda: [minimize_rho(G2, ATAN1, f, RHO_TOL) for f in G2_FAMILIES])


def record(number, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'}  criterion {number}: {detail}"
    RESULTS.append(line)
    print(line)
    return ok


def rho_lin(G, b):
    return spectral_radius(linearized_closed_loop(G, b).A)


# ---------------------------------------------------------------------------


def criterion_1():
    res, elapsed = g1_certificate()
    r = res.rho_certified
    ok = res.certified and 0.7048 <= r <= 0.7168 and elapsed <= 30.0
    return ok, f"G1 sector+off_by_1 rho_certified={r} in [0.7048, 0.7168], {elapsed:.2f}s (<= 30s)"


def criterion_2():
    r = rho_lin(G1, 1.0)
    roots = np.max(np.abs(np.roots([100, -70, 36, 8])))
    ok = abs(r - 0.7058) <= 5e-4 and abs(r - roots) <= 1e-10
    return ok, f"spectral radius {r:.10f}, polynomial roots {roots:.10f}, |r-0.7058|={abs(r - 0.7058):.2e}"


def criterion_3():
    parts = []
    ok = True
    for b in (0.25, 0.5, 0.75, 1.0):
        d = NonlinearityModel.arctan(b)
        cert = {f: minimize_rho(G1, d, f, RHO_TOL) for f in ("norm", "sector", "sector+off_by_1")}
        # no certificate counts as an infinitely loose bound
        val = {f: (c.rho_certified if c.certified else np.inf) for f, c in cert.items()}
        lin = rho_lin(G1, b)
        good = val["norm"] >= val["sector"] >= val["sector+off_by_1"] >= lin - 1e-6
        good = good and np.isfinite(val["sector"]) and np.isfinite(val["sector+off_by_1"])
        good = good and all(c.certified or c.status == UNCERTIFIABLE for c in cert.values())
        ok &= good
        parts.append(
            f"b={b}: norm={val['norm']:.4f} sector={val['sector']:.4f} "
            f"sector+off1={val['sector+off_by_1']:.4f} lin={lin:.4f}"
        )
    return ok, "; ".join(parts)


def criterion_4():
    certs = g2_certificates()
    rates = [c.rho_certified for c in certs]
    lin = rho_lin(G2, 1.0)
    all_certified = all(c.certified for c in certs)
    gap = rates[-1] - lin
    decreasing = all(b <= a + RHO_TOL for a, b in zip(rates, rates[1:]))
    ok = all_certified and gap > 0.01 and decreasing
    return ok, (
        f"G2 rates by family size 1..6 = {[round(r, 5) for r in rates]}, lin={lin:.5f}, "
        f"gap={gap:.5f} (> 0.01 required), weakly decreasing={decreasing}"
    )


def _random_instance(rng):
    n = int(rng.integers(1, 4))
    A = rng.normal(size=(n, n))
    A *= rng.uniform(0.1, 0.9) / max(np.max(np.abs(np.linalg.eigvals(A))), 1e-12)
    G = StateSpace(A, rng.normal(size=(n, 1)), rng.normal(size=(1, n)), np.zeros((1, 1)))
    sr = spectral_radius(A)
    rho = float(rng.uniform(min(sr + 0.02, 0.99), 1.0))
    beta = float(rng.uniform(0.1, 2.0))
    parts = [make_sector(0.0, beta)]
    for k in sorted(rng.choice([1, 2, 3], size=int(rng.integers(0, 3)), replace=False)):
        parts.append(make_off_by_k(0.0, beta, int(k), rho))
    return G, stack(parts), rho


def criterion_5(seed=5):
    rng = np.random.default_rng(seed)
    eps = 1e-6
    disagreements, feasible, refuted = 0, 0, 0
    for _ in range(50):
        G, st, rho = _random_instance(rng)
        aug = build_augmented(G, st.psi)
        ami = build_lmi(aug, st.Ms, rho)
        res = solve_feasibility(ami)
        if res.feasible:
            feasible += 1
            _, lam = unpack_solution(ami, res.x, aug.n)
            if grid_fdi_check(G, st, np.maximum(lam, 0), rho, N=1024).max_eig >= 0:
                disagreements += 1
        # same multiplier weights on both sides: only P is free in the LMI
        lam = rng.uniform(0.1, 2.0, size=len(st.parts))
        gmax = grid_fdi_check(G, st, lam, rho, N=1024).max_eig
        fixed = solve_feasibility(build_lmi(aug, st.Ms, rho, fixed_lambdas=lam))
        if fixed.feasible and gmax >= 0:
            disagreements += 1
        if gmax > eps:
            refuted += 1
            if fixed.status is not Status.INFEASIBLE:
                disagreements += 1
    ok = disagreements == 0
    return ok, (
        f"50 instances, {feasible} free-weight feasible, {refuted} fixed-weight grid-refuted, "
        f"{disagreements} disagreements"
    )


def criterion_6(seed=6):
    rng = np.random.default_rng(seed)
    worst_sector, worst_obk = np.inf, np.inf
    for b in (0.5, 1.0, 2.0):
        sec = make_sector(0.0, b)
        for rho in (0.7, 0.8, 0.9, 1.0):
            for k in (1, 2, 3):
                iqc = make_off_by_k(0.0, b, k, rho)
                for _ in range(100):
                    y = rng.normal(scale=rng.uniform(0.1, 20.0), size=50)
                    u = b * np.arctan(y)
                    inc = np.diff(time_domain_check(sec, rho, y, u), prepend=0.0)
                    worst_sector = min(worst_sector, inc.min())
                    worst_obk = min(worst_obk, time_domain_check(iqc, rho, y, u).min())
    ok = worst_sector >= -1e-9 and worst_obk >= -1e-9
    return ok, f"min sector increment {worst_sector:.3e}, min off-by-k partial sum {worst_obk:.3e}"


def criterion_7():
    g1_res, _ = g1_certificate()
    checks = [(G1, g1_res)] + [(G2, c) for c in g2_certificates()]
    worst = -np.inf
    fitted = {}
    for G, cert in checks:
        if not cert.certified:
            return False, "a certificate from criteria 1/4 is missing"
        key = id(G)
        if key not in fitted:
            x0s = random_initial_states(G.n, 20, seed=42)
            fitted[key] = max(fit_decay_rate(simulate(G, ATAN1, x0, 120), 20) for x0 in x0s)
        worst = max(worst, fitted[key] - (cert.rho_certified + 5e-3))
    ok = worst <= 0
    return ok, (
        f"max fitted rate G1={fitted[id(G1)]:.5f}, G2={fitted[id(G2)]:.5f}; "
        f"worst excess over rho_certified+5e-3 = {worst:.5f}"
    )


def criterion_8():
    details = []
    ok = True
    for rho in (0.5, 0.4):
        try:
            certify_at(G1, ATAN1, "sector+off_by_1", rho)
            ok = False
            details.append(f"rho={rho} not rejected")
        except PreconditionError as exc:
            ok &= "spectral radius" in str(exc)
    res = minimize_rho(G1, ATAN1, "norm", RHO_TOL)
    ok &= res.status == UNCERTIFIABLE
    details.append(f"norm family at b=1: {res.status}")
    rej, acc = validate_rho_zf([0, 1], 0.9), validate_rho_zf([0, 0.81], 0.9)
    ok &= (not rej) and bool(acc)
    details.append(f"h=[0,1]@0.9 valid={rej.valid}, h=[0,0.81]@0.9 valid={acc.valid}")
    return ok, "rho<=0.5 rejected; " + "; ".join(details)


def _ami(F0, *Fi):
    Fi = np.array(Fi, dtype=float)
    return AffineMatrixInequality(np.asarray(F0, float), Fi, tuple(("x", i) for i in range(len(Fi))))


def criterion_9():
    tol = 1e-7
    a = solve_feasibility(_ami(-np.eye(2), np.diag([1.0, -1.0])), tol=tol)
    b = solve_feasibility(_ami(np.zeros((2, 2)), np.diag([1.0, -1.0])), tol=tol)
    two = _ami(-np.eye(2), np.diag([1.0, -1.0]), [[0.0, 1.0], [1.0, 0.0]])
    c = solve_feasibility(two, tol=tol)
    xs = np.linspace(-3, 3, 601)
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    grid = np.linalg.eigvalsh(two.F0 + X[..., None, None] * two.Fi[0] + Y[..., None, None] * two.Fi[1])
    t_grid = float(grid[..., -1].min())
    ex = (
        a.status is Status.FEASIBLE and abs(a.margin - 1) <= 1e-6
        and b.status is Status.INFEASIBLE
        and c.status is Status.FEASIBLE and abs(c.best_objective - t_grid) <= 1e-6
    )
    st = stack([make_sector(0.0, 1.0), make_off_by_k(0.0, 1.0, 1, 0.72)])
    ami = build_lmi(build_augmented(G1, st.psi), st.Ms, 0.72)
    runs = [solve_feasibility(ami) for _ in range(2)] + [solve_feasibility(two) for _ in range(2)]
    det = runs[0].x.tobytes() == runs[1].x.tobytes() and runs[2].x.tobytes() == runs[3].x.tobytes()
    return ex and det, (
        f"interval {a.status.value} (margin {a.margin:.6f}), marginal {b.status.value}, "
        f"2-var {c.status.value} t={c.best_objective:.7f} vs grid {t_grid:.7f}, bitwise deterministic={det}"
    )


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
            criterion_6, criterion_7, criterion_8, criterion_9]


def _check(i):
    ok, detail = CRITERIA[i - 1]()
    assert record(i, ok, detail), detail


def test_criterion_1_tight_bound():
    _check(1)


def test_criterion_2_true_rate():
    _check(2)


def test_criterion_3_curve_ordering():
    _check(3)


def test_criterion_4_loose_bound():
    _check(4)


def test_criterion_5_kyp_cross_validation():
    _check(5)


def test_criterion_6_time_domain():
    _check(6)


def test_criterion_7_simulation_envelope():
    _check(7)


def test_criterion_8_guards():
    _check(8)


def test_criterion_9_solver():
    _check(9)


if __name__ == "__main__":
    failed = 0
    for i, fn in enumerate(CRITERIA, 1):
        ok, detail = fn()
        failed += not record(i, ok, detail)
    print(f"{len(CRITERIA) - failed} passed, {failed} failed")
    sys.exit(1 if failed else 0)
