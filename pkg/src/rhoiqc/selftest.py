"""Invariant checks runnable without pytest (``rhoiqc selftest``)."""

from __future__ import annotations

import numpy as np

from .certify import certify_at
from .iqc import (
    NonlinearityModel,
    build_family,
    make_off_by_k,
    make_sector,
    stack,
    time_domain_check,
)
from .kyp import build_augmented, grid_fdi_check
from .lti import (
    TransferFunction,
    random_unit_circle,
    ss_eval,
    ss_from_tf,
    ss_scale_rho,
)

SEED = 42


def g1():
    num = -np.polymul([1, 1], [10, 9])
    den = np.polymul(np.polymul([2, -1], [5, -1]), [10, -1])
    return ss_from_tf(TransferFunction(num, den))


def zames_falb_closed_form(alpha, beta, Hz):
    Hc = np.conj(Hz)
    return np.array([
        [-alpha * beta * (2 - Hz - Hc), alpha * (1 - Hz) + beta * (1 - Hc)],
        [alpha * (1 - Hc) + beta * (1 - Hz), -(2 - Hz - Hc)],
    ])


def check_factorization(rng):
    worst = 0.0
    for rho in (0.7, 0.9, 1.0):
        for k in (1, 2, 3):
            iqc = make_off_by_k(0.0, 1.0, k, rho)
            for z in random_unit_circle(rng, 50):
                ref = zames_falb_closed_form(0.0, 1.0, rho ** (2 * k) * z ** (-k))
                worst = max(worst, np.max(np.abs(iqc.pi(z) - ref)))
    return worst <= 1e-10, f"max deviation {worst:.2e}"


def check_rho_scaling(rng):
    G = g1()
    worst = 0.0
    for rho in (0.3, 0.7, 1.0):
        Gs = ss_scale_rho(G, rho)
        for z in random_unit_circle(rng, 50):
            worst = max(worst, np.max(np.abs(ss_eval(Gs, z) - ss_eval(G, rho * z))))
    return worst <= 1e-9, f"max deviation {worst:.2e}"


def check_augmented_identity(rng):
    G = g1()
    st = stack([make_sector(0.0, 1.0), make_off_by_k(0.0, 1.0, 1, 0.8)])
    aug = build_augmented(G, st.psi).as_statespace()
    worst = 0.0
    for z in random_unit_circle(rng, 50):
        ref = ss_eval(st.psi, z) @ np.vstack([ss_eval(G, z), np.eye(1)])
        worst = max(worst, np.max(np.abs(ss_eval(aug, z) - ref)))
    return worst <= 1e-9, f"max deviation {worst:.2e}"


def check_kyp_grid(rng):
    G = g1()
    res = certify_at(G, NonlinearityModel.arctan(1.0), "sector+off_by_1", 0.72)
    if not res.certified:
        return False, f"LMI verdict {res.status} at rho=0.72"
    st = build_family("sector+off_by_1", NonlinearityModel.arctan(1.0), 0.72)
    gc = grid_fdi_check(G, st, res.lambdas, 0.72, N=1024)
    return gc.max_eig < 0, f"grid max eigenvalue {gc.max_eig:.3e}"


def check_partial_sums(rng):
    worst = np.inf
    for rho in (0.7, 0.8, 0.9, 1.0):
        for k in (1, 2, 3):
            iqc = make_off_by_k(0.0, 1.0, k, rho)
            for _ in range(20):
                y = rng.normal(scale=3.0, size=50)
                S = time_domain_check(iqc, rho, y, np.arctan(y))
                worst = min(worst, S.min())
    return worst >= -1e-9, f"smallest partial sum {worst:.3e}"


CHECKS = [
    ("factorization identity (off-by-k vs Zames-Falb closed form)", check_factorization),
    ("rho-scaling consistency", check_rho_scaling),
    ("augmented transfer identity", check_augmented_identity),
    ("KYP LMI witness vs frequency grid", check_kyp_grid),
    ("off-by-k partial-sum nonnegativity", check_partial_sums),
]


def run_all(seed: int = SEED):
    rng = np.random.default_rng(seed)
    results = []
    for name, fn in CHECKS:
        try:
            ok, detail = fn(rng)
        except Exception as exc:  # report, don't abort the suite
            ok, detail = False, f"raised {type(exc).__name__}: {exc}"
        results.append((name, bool(ok), detail))
    return results
