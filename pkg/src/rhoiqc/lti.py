"""Discrete-time LTI algebra: realizations, evaluation, rho-scaling, loops.

All systems are real and discrete time. Realizations are immutable value
objects; every operation returns a new one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import PreconditionError, SingularityError

#: singular values below this fraction of the largest count as zero
RANK_RTOL = 1e-9


def _as_matrix(a, rows: int | None = None, cols: int | None = None) -> np.ndarray:
    m = np.array(a, dtype=float)
    if m.ndim == 0:
        m = m.reshape(1, 1)
    elif m.ndim == 1:
        if rows is not None and cols is not None and rows * cols == m.size:
            m = m.reshape(rows, cols)
        else:
            m = m.reshape(1, -1)
    if m.size == 0:
        m = np.zeros((rows or 0, cols or 0))
    m.setflags(write=False)
    return m


@dataclass(frozen=True, eq=False)
class StateSpace:
    """Real realization ``x+ = A x + B u``, ``y = C x + D u``.

    A static gain has ``n = 0``; its ``A``, ``B`` and ``C`` are empty arrays
    of the right shape.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray

    def __post_init__(self):
        D = _as_matrix(self.D)
        p, m = D.shape
        A = np.array(self.A, dtype=float)
        n = 0 if A.size == 0 else (A.shape[0] if A.ndim == 2 else 1)
        A = _as_matrix(self.A, n, n)
        B = _as_matrix(self.B, n, m)
        C = _as_matrix(self.C, p, n)
        if A.shape != (n, n):
            raise PreconditionError(f"A must be square, got {A.shape}")
        if B.shape != (n, m):
            raise PreconditionError(f"B has shape {B.shape}, expected {(n, m)}")
        if C.shape != (p, n):
            raise PreconditionError(f"C has shape {C.shape}, expected {(p, n)}")
        for name, mat in zip("ABCD", (A, B, C, D)):
            if not np.all(np.isfinite(mat)):
                raise PreconditionError(f"{name} contains NaN or Inf")
            object.__setattr__(self, name, mat)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.D.shape[1]

    @property
    def p(self) -> int:
        return self.D.shape[0]

    @classmethod
    def static(cls, D) -> "StateSpace":
        D = np.atleast_2d(np.asarray(D, dtype=float))
        p, m = D.shape
        return cls(np.zeros((0, 0)), np.zeros((0, m)), np.zeros((p, 0)), D)

    def __call__(self, z: complex) -> np.ndarray:
        return ss_eval(self, z)

    def __repr__(self) -> str:
        return f"StateSpace(n={self.n}, m={self.m}, p={self.p})"


@dataclass(frozen=True, eq=False)
class TransferFunction:
    """SISO rational function in descending powers of ``z``."""

    num: np.ndarray
    den: np.ndarray

    def __post_init__(self):
        num = np.trim_zeros(np.atleast_1d(np.asarray(self.num, dtype=float)), "f")
        den = np.trim_zeros(np.atleast_1d(np.asarray(self.den, dtype=float)), "f")
        if den.size == 0:
            raise PreconditionError("denominator is identically zero")
        if num.size == 0:
            num = np.zeros(1)
        if num.size > den.size:
            raise PreconditionError(
                f"improper transfer function: deg(num)={num.size - 1} > deg(den)={den.size - 1}"
            )
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)

    def __call__(self, z):
        return np.polyval(self.num, z) / np.polyval(self.den, z)

    @classmethod
    def from_dict(cls, d: dict) -> "TransferFunction":
        return cls(d["num"], d["den"])


def ss_from_tf(tf: TransferFunction) -> StateSpace:
    """Controllable canonical realization of a proper SISO transfer function."""
    den = tf.den / tf.den[0]
    n = den.size - 1
    num = np.concatenate([np.zeros(n + 1 - tf.num.size), tf.num]) / tf.den[0]
    d = num[0]
    if n == 0:
        return StateSpace.static([[d]])
    A = np.zeros((n, n))
    A[0, :] = -den[1:]
    A[1:, :-1] = np.eye(n - 1)
    B = np.zeros((n, 1))
    B[0, 0] = 1.0
    C = (num[1:] - d * den[1:]).reshape(1, n)
    return StateSpace(A, B, C, [[d]])


def ss_eval(G: StateSpace, z: complex) -> np.ndarray:
    """Evaluate ``C (zI - A)^{-1} B + D`` at a single complex point."""
    if G.n == 0:
        return G.D.astype(complex)
    R = z * np.eye(G.n) - G.A
    if np.linalg.cond(R) > 1e14:
        raise SingularityError(f"z={z} is (numerically) a pole of the realization")
    return G.C @ np.linalg.solve(R, G.B.astype(complex)) + G.D


def ss_freqresp(G: StateSpace, zs) -> np.ndarray:
    """Vectorized :func:`ss_eval`; returns an array of shape ``(len(zs), p, m)``."""
    zs = np.asarray(zs, dtype=complex).ravel()
    out = np.broadcast_to(G.D.astype(complex), (zs.size, G.p, G.m)).copy()
    if G.n == 0:
        return out
    R = zs[:, None, None] * np.eye(G.n) - G.A
    if np.max(np.linalg.cond(R)) > 1e14:
        raise SingularityError("evaluation grid passes through a pole")
    X = np.linalg.solve(R, np.broadcast_to(G.B.astype(complex), (zs.size, G.n, G.m)))
    return out + G.C @ X


def ss_scale_rho(G: StateSpace, rho: float) -> StateSpace:
    """Realization of ``z -> G(rho z)``, i.e. ``(A/rho, B/rho, C, D)``."""
    if not rho > 0:
        raise PreconditionError(f"rho must be positive, got {rho}")
    return StateSpace(G.A / rho, G.B / rho, G.C, G.D)


def eigenvalues(A) -> np.ndarray:
    """Eigenvalues read off the real Schur form of a real square matrix."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise PreconditionError(f"expected a square matrix, got shape {A.shape}")
    n = A.shape[0]
    if n == 0:
        return np.zeros(0, dtype=complex)
    T, _ = scipy.linalg.schur(A, output="real")
    eigs = []
    i = 0
    while i < n:
        if i + 1 < n and T[i + 1, i] != 0.0:
            a, b, c, d = T[i, i], T[i, i + 1], T[i + 1, i], T[i + 1, i + 1]
            mid = 0.5 * (a + d)
            disc = np.sqrt(complex(0.25 * (a - d) ** 2 + b * c))
            eigs += [mid + disc, mid - disc]
            i += 2
        else:
            eigs.append(complex(T[i, i]))
            i += 1
    return np.array(eigs)


def spectral_radius(A) -> float:
    ev = eigenvalues(A)
    return float(np.max(np.abs(ev))) if ev.size else 0.0


@dataclass(frozen=True)
class MinimalityReport:
    minimal: bool
    n: int
    controllable_rank: int
    observable_rank: int

    def __bool__(self) -> bool:
        return self.minimal


def _rank(M: np.ndarray) -> int:
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.sum(s > RANK_RTOL * s[0]))


def is_minimal(G: StateSpace) -> MinimalityReport:
    """Kalman rank test on the controllability and observability matrices."""
    n = G.n
    if n == 0:
        return MinimalityReport(True, 0, 0, 0)
    blocks_c = [G.B]
    blocks_o = [G.C]
    for _ in range(n - 1):
        blocks_c.append(G.A @ blocks_c[-1])
        blocks_o.append(blocks_o[-1] @ G.A)
    rc = _rank(np.hstack(blocks_c))
    ro = _rank(np.vstack(blocks_o))
    return MinimalityReport(rc == n and ro == n, n, rc, ro)


def linearized_closed_loop(G: StateSpace, slope: float) -> StateSpace:
    """Close the positive-feedback loop ``u = slope * y + e``.

    The returned realization maps the injected input ``e`` to ``y``; for a
    SISO plant its transfer function is ``G / (1 - slope G)`` and its state
    matrix is ``A + B slope (I - slope D)^{-1} C``.
    """
    if G.m != G.p:
        raise PreconditionError("a scalar feedback gain needs a square plant")
    W = np.eye(G.m) - slope * G.D
    if abs(np.linalg.det(W)) < 1e-12:
        raise SingularityError(f"algebraic loop is singular: I - {slope}*D is not invertible")
    V = np.linalg.inv(W)
    return StateSpace(G.A + slope * G.B @ V @ G.C, G.B @ V, V @ G.C, G.D @ V)


def plant_from_dict(d: dict) -> StateSpace:
    """Build a plant from ``{"num", "den"}`` or ``{"A", "B", "C", "D"}``."""
    if "num" in d or "den" in d:
        return ss_from_tf(TransferFunction.from_dict(d))
    return StateSpace(d["A"], d["B"], d["C"], d["D"])


def unit_circle(N: int, offset: float = 0.0) -> np.ndarray:
    theta = 2 * np.pi * (np.arange(N) + offset) / N
    return np.exp(1j * theta)


def random_unit_circle(rng: np.random.Generator, size: int) -> np.ndarray:
    return np.exp(2j * np.pi * rng.random(size))

