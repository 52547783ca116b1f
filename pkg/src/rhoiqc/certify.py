"""Certified exponential decay rates: fixed-rate feasibility and bisection on rho."""

from __future__ import annotations

import concurrent.futures
import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import PreconditionError, RhoValidityError
from .iqc import NonlinearityModel, build_family, family_name, parse_family
from .kyp import GridCheck, build_augmented, build_lmi, grid_fdi_check, unpack_solution
from .lmi import Status, solve_feasibility
from .lti import StateSpace, linearized_closed_loop, spectral_radius

log = logging.getLogger(__name__)

#: bisection never probes closer than this to the plant's spectral radius
FLOOR_OFFSET = 1e-4

CERTIFIED = "certified"
INFEASIBLE = "infeasible"
INDETERMINATE = "indeterminate"
INVALID = "invalid"
UNCERTIFIABLE = "uncertifiable"


@dataclass
class CertificateResult:
    """Outcome of a certification attempt.

    ``rho_certified`` is set only when ``status == "certified"``; then both
    the LMI margin and the grid check are negative-definite witnesses at
    that rate.
    """

    status: str
    rho_certified: Optional[float]
    family: list
    rho_lower_limit: float
    P: Optional[np.ndarray] = None
    lambdas: Optional[np.ndarray] = None
    margin: float = float("nan")
    grid_check: Optional[GridCheck] = None
    feasible_at: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    @property
    def certified(self) -> bool:
        return self.status == CERTIFIED

    def to_json(self) -> dict:
        return {
            "status": self.status,
            "rho": self.rho_certified,
            "family": family_name(self.family),
            "rho_lower_limit": self.rho_lower_limit,
            "margin": None if not np.isfinite(self.margin) else self.margin,
            "lambdas": None if self.lambdas is None else [float(v) for v in self.lambdas],
            "P": None if self.P is None else {
                "shape": list(self.P.shape),
                "data": [float(v) for v in self.P.ravel()],
            },
            "probes": [{"rho": r, "verdict": v} for r, v in self.feasible_at],
            "grid": None if self.grid_check is None else {
                "N": self.grid_check.N, "max_eig": self.grid_check.max_eig,
            },
            "notes": list(self.notes),
        }


def _well_posedness_note(G: StateSpace, delta: NonlinearityModel) -> str:
    if not np.any(G.D):
        return "well-posed: D = 0"
    gain = delta.max_slope * float(np.linalg.norm(G.D, 2))
    if gain >= 1:
        raise PreconditionError(
            f"well-posedness not established: |slope*D| = {gain:.6g} >= 1"
        )
    return f"well-posed: |slope*D| = {gain:.6g} < 1"


def _homotopy_start(delta: NonlinearityModel, family) -> float:
    """Gain ``a0`` of the linear loop the homotopy starts from.

    Sector and slope classes are convex, so ``a0*y + tau*(Delta(y) - a0*y)``
    stays in every member's class when ``a0`` is the largest lower bound.
    For ``a0 <= 0`` this is the usual ``tau*Delta`` path from the open loop.
    """
    alphas = [float(s.get("alpha", delta.alpha)) for s in family if s["kind"] != "norm"]
    return max([0.0] + alphas)


def certify_at(
    G: StateSpace,
    delta: NonlinearityModel,
    family,
    rho: float,
    *,
    tol: float = 1e-7,
    grid_N: int = 512,
    eps: Optional[float] = None,
) -> CertificateResult:
    """Try to certify exponential stability with rate ``rho``.

    Raises :class:`PreconditionError` when ``rho`` is not above the plant's
    spectral radius or exceeds 1, and :class:`RhoValidityError` when a
    Zames-Falb member is not a rho-IQC at this rate. When the family's
    lower slope bound ``a0`` is positive, the loop with ``u = a0*y`` must
    itself have spectral radius below ``rho``; otherwise the result is
    infeasible without solving.
    """
    family = parse_family(family)
    sr = spectral_radius(G.A)
    if not rho > sr:
        raise PreconditionError(
            f"rho below plant spectral radius: rho={rho:.6g} <= {sr:.6g}"
        )
    if rho > 1:
        raise PreconditionError(f"rho must not exceed 1, got {rho}")
    notes = [_well_posedness_note(G, delta)]
    a0 = _homotopy_start(delta, family)
    if a0 > 0:
        r0 = spectral_radius(linearized_closed_loop(G, a0).A)
        if not rho > r0 * (1 + 1e-9):
            notes.append(f"homotopy: start loop u = {a0:.6g}*y has spectral radius {r0:.6g} >= rho")
            return CertificateResult(
                INFEASIBLE, None, family, sr, feasible_at=[(float(rho), INFEASIBLE)], notes=notes,
            )
        notes.append(f"homotopy: from the loop u = {a0:.6g}*y, spectral radius {r0:.6g} < rho")
    else:
        notes.append("homotopy: tau*Delta stays in the class (alpha <= 0)")

    st = build_family(family, delta, rho)
    aug = build_augmented(G, st.psi)
    ami = build_lmi(aug, st.Ms, rho, eps)
    res = solve_feasibility(ami, tol=tol)
    P, lam = unpack_solution(ami, res.x, aug.n)
    out = CertificateResult(
        status=INFEASIBLE, rho_certified=None, family=family, rho_lower_limit=sr,
        P=P, lambdas=lam, margin=res.margin, feasible_at=[], notes=notes,
    )
    if res.status is Status.INDETERMINATE:
        out.status = INDETERMINATE
    if res.status is not Status.FEASIBLE:
        out.feasible_at.append((float(rho), out.status))
        return out

    lam = np.maximum(lam, 0.0)
    out.lambdas = lam
    out.grid_check = grid_fdi_check(G, st, lam, rho, grid_N)
    if out.grid_check.max_eig < 0:
        out.status = CERTIFIED
        out.rho_certified = float(rho)
    else:
        out.status = INDETERMINATE
        out.notes.append(
            f"LMI feasible but grid max eigenvalue {out.grid_check.max_eig:.3g} >= 0"
        )
    out.feasible_at.append((float(rho), out.status))
    return out


def _probe(G, delta, family, rho, **kw) -> CertificateResult:
    try:
        return certify_at(G, delta, family, rho, **kw)
    except RhoValidityError as exc:
        return CertificateResult(
            INVALID, None, parse_family(family), spectral_radius(G.A),
            feasible_at=[(float(rho), INVALID)], notes=[str(exc)],
        )


def minimize_rho(
    G: StateSpace,
    delta: NonlinearityModel,
    family,
    rho_tol: float = 1e-3,
    *,
    rho_max: float = 1.0,
    **kw,
) -> CertificateResult:
    """Smallest certifiable rate by bisection on ``rho``.

    The bracket is ``(spectral_radius(A) + FLOOR_OFFSET, rho_max]``. Every
    returned certificate was verified at its own rate, so a family whose
    feasibility is not monotone in ``rho`` only makes the bound looser.
    A plant/family pair that cannot be certified at ``rho_max`` yields
    status ``"uncertifiable"``.
    """
    if not rho_tol > 0:
        raise PreconditionError("rho_tol must be positive")
    family = parse_family(family)
    sr = spectral_radius(G.A)
    floor = sr + FLOOR_OFFSET
    if floor >= rho_max:
        raise PreconditionError(
            f"rho below plant spectral radius: no room above {sr:.6g} up to {rho_max}"
        )
    probes = []

    best = _probe(G, delta, family, rho_max, **kw)
    probes += best.feasible_at
    if not best.certified:
        best.status = UNCERTIFIABLE
        best.notes.append(f"not certifiable at rho={rho_max} with this family")
        best.feasible_at = probes
        return best

    lowest = _probe(G, delta, family, floor, **kw)
    probes += lowest.feasible_at
    if lowest.certified:
        lowest.notes.append("bracket collapsed onto the spectral-radius floor")
        lowest.feasible_at = probes
        return lowest

    lo, hi = floor, rho_max
    while hi - lo >= rho_tol:
        mid = 0.5 * (lo + hi)
        res = _probe(G, delta, family, mid, **kw)
        probes += res.feasible_at
        log.debug("rho=%.6f -> %s", mid, res.status)
        if res.certified:
            hi, best = mid, res
        else:
            lo = mid
    best.feasible_at = probes
    return best


@dataclass(frozen=True)
class SweepRow:
    b: float
    family: str
    rho_cert: Optional[float]
    rho_linearized: float
    margin: float
    status: str


def _sweep_cell(args) -> SweepRow:
    G, b, fam, rho_tol, kw = args
    rho_lin = spectral_radius(linearized_closed_loop(G, b).A)
    name = family_name(fam)
    try:
        res = minimize_rho(G, NonlinearityModel.arctan(b), fam, rho_tol, **kw)
    except Exception as exc:  # a failing cell must not abort the sweep
        log.warning("sweep cell b=%g family=%s failed: %s", b, name, exc)
        return SweepRow(b, name, None, rho_lin, float("nan"), "error")
    if res.certified:
        return SweepRow(b, name, res.rho_certified, rho_lin, res.margin, CERTIFIED)
    return SweepRow(b, name, None, rho_lin, float("nan"), INFEASIBLE)


def sweep_gain(
    G: StateSpace,
    b_values: Sequence[float],
    families: Sequence,
    rho_tol: float = 1e-3,
    jobs: int = 1,
    **kw,
) -> list[SweepRow]:
    """Certified rate for ``Delta = b arctan`` over a grid of gains and families.

    Rows are ordered b-major, family-minor regardless of ``jobs``.
    """
    if any(not b > 0 for b in b_values):
        raise PreconditionError("gains b must be positive")
    cells = [(G, float(b), parse_family(f), rho_tol, kw) for b in b_values for f in families]
    if jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(_sweep_cell, cells))
    return [_sweep_cell(c) for c in cells]
