"""Autonomous simulation of the plant/nonlinearity loop and decay-rate fitting."""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import AlgebraicLoopError, PreconditionError
from .iqc import NonlinearityModel
from .lti import StateSpace

LOOP_TOL = 1e-12
LOOP_MAX_ITER = 2000


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Samples ``k = 0..T`` of state, plant output and nonlinearity output."""

    states: np.ndarray
    outputs: np.ndarray
    inputs: np.ndarray

    @property
    def T(self) -> int:
        return self.states.shape[0] - 1

    @property
    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.states, axis=1)


def _solve_loop(G: StateSpace, delta: NonlinearityModel, x: np.ndarray) -> tuple:
    Cx = G.C @ x
    if not np.any(G.D):
        y = Cx
        return y, np.atleast_1d(delta(y))
    y = Cx.copy()
    damping = 1.0
    prev_step = np.inf
    for _ in range(LOOP_MAX_ITER):
        y_new = Cx + G.D @ np.atleast_1d(delta(y))
        step = float(np.max(np.abs(y_new - y)))
        if step <= LOOP_TOL * (1 + float(np.max(np.abs(y_new)))):
            y = y_new
            return y, np.atleast_1d(delta(y))
        if step >= prev_step:
            damping = 0.5
        y = (1 - damping) * y + damping * y_new
        prev_step = step
    raise AlgebraicLoopError("fixed-point iteration for y = Cx + D Delta(y) did not converge")


def simulate(G: StateSpace, delta: NonlinearityModel, x0, T: int = 120) -> Trajectory:
    """Run ``x+ = A x + B u``, ``y = C x + D u``, ``u = Delta(y)`` from ``x0``."""
    if T < 1:
        raise PreconditionError(f"horizon must be at least 1, got {T}")
    if delta.func is None:
        raise PreconditionError(f"nonlinearity {delta.name!r} has no function to simulate")
    if np.any(G.D) and delta.max_slope * np.linalg.norm(G.D, 2) >= 1:
        raise PreconditionError("algebraic loop is not a contraction: |slope*D| >= 1")
    x = np.asarray(x0, dtype=float).ravel()
    if x.size != G.n:
        raise PreconditionError(f"x0 has {x.size} entries, plant has {G.n} states")
    X = np.empty((T + 1, G.n))
    Y = np.empty((T + 1, G.p))
    U = np.empty((T + 1, G.m))
    for k in range(T + 1):
        y, u = _solve_loop(G, delta, x)
        X[k], Y[k], U[k] = x, y, u
        x = G.A @ x + G.B @ u
    return Trajectory(X, Y, U)


class ExactZeroWarning(UserWarning):
    """The trajectory reached the origin exactly; the fitted rate is 0."""


def fit_decay_rate(traj: Trajectory, burn_in: int = 20) -> float:
    """``exp`` of the least-squares slope of ``log ||x_k||`` for ``k >= burn_in``."""
    norms = traj.norms[burn_in:]
    if norms.size < 2:
        raise PreconditionError(
            f"need at least 2 samples after burn-in {burn_in}, have {norms.size}"
        )
    if np.any(norms == 0):
        warnings.warn("state reached exactly zero", ExactZeroWarning, stacklevel=2)
        return 0.0
    k = np.arange(burn_in, burn_in + norms.size)
    slope = np.polyfit(k, np.log(norms), 1)[0]
    return float(np.exp(slope))


def random_initial_states(n: int, count: int, seed: int = 42, radius: float = 15.0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.uniform(-radius, radius, size=(count, n))


def _fmt(v: float) -> str:
    return f"{v:.9g}"


def write_trajectory_csv(traj: Trajectory, path) -> None:
    """Columns ``k, x_norm, y, u`` (SISO loops)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "x_norm", "y", "u"])
        for k, (nx, y, u) in enumerate(zip(traj.norms, traj.outputs[:, 0], traj.inputs[:, 0])):
            w.writerow([k, _fmt(nx), _fmt(y), _fmt(u)])


def simulate_batch(
    G: StateSpace,
    delta: NonlinearityModel,
    count: int = 20,
    seed: int = 42,
    T: int = 120,
    burn_in: int = 20,
    out_dir=None,
) -> list[dict]:
    """Simulate from seeded initial states; optionally write one CSV per run."""
    x0s = random_initial_states(G.n, count, seed)
    rows = []
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
    for i, x0 in enumerate(x0s):
        traj = simulate(G, delta, x0, T)
        rate = fit_decay_rate(traj, burn_in)
        rows.append({"index": i, "x0": x0, "rate": rate})
        if out_dir is not None:
            write_trajectory_csv(traj, out_dir / f"traj_{i:03d}.csv")
    if out_dir is not None:
        with open(out_dir / "summary.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["index", "fitted_rate"] + [f"x0_{j}" for j in range(G.n)])
            for r in rows:
                w.writerow([r["index"], _fmt(r["rate"])] + [_fmt(v) for v in r["x0"]])
    return rows
