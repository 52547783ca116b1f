"""Strict feasibility of small dense symmetric affine matrix inequalities.

The epigraph problem ``min t  s.t.  F(x) <= t I`` is handed to the cvxopt
interior-point SDP solver. Decision variables are confined to the box
``|x_i| <= bound``; for homogeneous inequalities (such as the KYP LMI) this
only fixes the scale of the witness. The verdict is always re-derived from
an independent eigenvalue computation on ``F(x)``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from cvxopt import matrix, solvers

from .errors import PreconditionError
from .kyp import AffineMatrixInequality

MAX_SIZE = 64


class Status(str, enum.Enum):
    FEASIBLE = "feasible"
    INFEASIBLE = "infeasible"
    INDETERMINATE = "indeterminate"


@dataclass(frozen=True, eq=False)
class FeasibilityResult:
    status: Status
    x: np.ndarray
    margin: float
    iterations: int
    best_objective: float
    lower_bound: float

    @property
    def feasible(self) -> bool:
        return self.status is Status.FEASIBLE


def max_eig_sym(F) -> tuple[float, np.ndarray]:
    """Largest eigenvalue of a symmetric matrix and a unit eigenvector."""
    F = np.asarray(F, dtype=float)
    if F.ndim != 2 or F.shape[0] != F.shape[1]:
        raise PreconditionError(f"expected a square matrix, got shape {F.shape}")
    w, V = np.linalg.eigh(0.5 * (F + F.T))
    return float(w[-1]), V[:, -1]


def _check_data(ami: AffineMatrixInequality) -> float:
    mats = np.concatenate([ami.F0[None], ami.Fi])
    if not np.all(np.isfinite(mats)):
        raise PreconditionError("LMI data contains NaN or Inf")
    scale = float(np.max(np.abs(mats))) if mats.size else 0.0
    asym = float(np.max(np.abs(mats - mats.transpose(0, 2, 1)))) if mats.size else 0.0
    if asym > 1e-12 * max(scale, 1.0):
        raise PreconditionError(f"LMI data is not symmetric (max asymmetry {asym:.3g})")
    if ami.size > MAX_SIZE:
        raise PreconditionError(f"LMI of size {ami.size} exceeds the dense limit {MAX_SIZE}")
    return scale


def solve_feasibility(
    ami: AffineMatrixInequality,
    tol: float = 1e-7,
    max_iter: int = 500,
    bound: float = 10.0,
) -> FeasibilityResult:
    """Decide whether some ``x`` makes ``F(x)`` negative definite.

    Returns ``FEASIBLE`` when the returned ``x`` satisfies
    ``lambda_max(F(x)) < -tol`` (re-checked independently),
    ``INFEASIBLE`` when the solver's dual bound certifies
    ``min_x lambda_max(F(x)) >= -tol`` over the box, and
    ``INDETERMINATE`` otherwise.
    """
    if not tol > 0:
        raise PreconditionError("tol must be positive")
    scale = _check_data(ami)
    s, nv = ami.size, ami.nvar
    if s == 0:
        raise PreconditionError("empty LMI")
    if nv == 0:
        t, _ = max_eig_sym(ami.F0)
        status = Status.FEASIBLE if t < -tol else Status.INFEASIBLE
        return FeasibilityResult(status, np.zeros(0), -t, 0, t, t)
    c = scale if scale > 0 else 1.0

    # variables v = (x, t); s-slack = t I - F0/c - sum x_i Fi/c >= 0
    Gs = np.empty((s * s, nv + 1))
    Gs[:, :nv] = (ami.Fi / c).reshape(nv, s * s).T
    Gs[:, nv] = -np.eye(s).ravel()
    hs = -ami.F0 / c
    Gl = np.zeros((2 * nv, nv + 1))
    Gl[:nv, :nv] = np.eye(nv)
    Gl[nv:, :nv] = -np.eye(nv)
    hl = np.full(2 * nv, float(bound))
    cost = np.zeros(nv + 1)
    cost[nv] = 1.0

    options = {
        "show_progress": False,
        "maxiters": int(max_iter),
        "abstol": 1e-2 * tol / c,
        "reltol": 1e-9,
        "feastol": 1e-10,
    }
    try:
        sol = solvers.sdp(
            matrix(cost), Gl=matrix(Gl), hl=matrix(hl),
            Gs=[matrix(Gs)], hs=[matrix(hs)], options=options,
        )
    except (ValueError, ArithmeticError):
        sol = None

    if sol is None or sol["x"] is None:
        x = np.zeros(nv)
        iterations, lower = int(max_iter), -np.inf
        converged = False
    else:
        x = np.array(sol["x"]).ravel()[:nv]
        iterations = int(sol.get("iterations", 0))
        dual = sol.get("dual objective")
        lower = c * float(dual) if dual is not None else -np.inf
        converged = sol["status"] == "optimal"

    t, _ = max_eig_sym(ami(x))
    if t < -tol:
        status = Status.FEASIBLE
    elif converged and lower >= -tol:
        status = Status.INFEASIBLE
    else:
        status = Status.INDETERMINATE
    return FeasibilityResult(status, x, -t, iterations, t, lower)
